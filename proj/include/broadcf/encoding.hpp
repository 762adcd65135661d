#pragma once

#include "broadcf/neighbors.hpp"
#include "broadcf/rating_matrix.hpp"
#include "broadcf/types.hpp"

#include <utility>
#include <vector>

namespace broadcf {

// One-hot indicator of an integer rating over indices 1..d_y.
RowVector one_hot(int rating, int d_y);

// Filled KNU vector followed by the filled LNI vector; length k + l.
Vector collaborative_vector(const RatingMatrix& train, const NeighborIndex& index,
                            UserId u, ItemId i);

struct TrainingSet {
  Matrix X; // |D| x (k+l)
  Matrix Y; // |D| x d_y, one-hot rows
  std::vector<std::pair<UserId, ItemId>> pairs; // row-aligned
};

// One row per nonzero train entry, ordered by (user, item) so a fixed seed
// yields bit-identical matrices.
TrainingSet build_training_set(const RatingMatrix& train, const NeighborIndex& index,
                               int threads = 0);

} // namespace broadcf
