#pragma once

#include "broadcf/rating_matrix.hpp"

#include <cstdint>
#include <vector>

namespace broadcf {

struct DatasetSplit {
  RatingMatrix train;
  std::vector<RatingTriple> test;
  std::vector<RatingTriple> validation;
  std::uint64_t seed = 0;
};

// Per-user random partition. Each user's test count is floor(n * (1 -
// train_ratio)) — 3:1 with the remainder kept in train — and the validation
// count is floor of the remaining train entries times validation_ratio.
// Users with a single rating keep it in train. Deterministic given the seed;
// per-user subgenerators make one user's draw independent of the others.
DatasetSplit split(const RatingMatrix& matrix, double train_ratio,
                   double validation_ratio, std::uint64_t seed);

} // namespace broadcf
