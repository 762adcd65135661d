#include "broadcf/split.hpp"

#include "broadcf/errors.hpp"
#include "broadcf/rng.hpp"

#include <algorithm>
#include <cmath>

namespace broadcf {

DatasetSplit split(const RatingMatrix& matrix, double train_ratio,
                   double validation_ratio, std::uint64_t seed) {
  if (!(train_ratio > 0.0 && train_ratio < 1.0))
    throw_config("train_ratio must lie in (0, 1)");
  if (!(validation_ratio >= 0.0 && validation_ratio < 1.0))
    throw_config("validation_ratio must lie in [0, 1)");
  if (matrix.empty()) throw_empty_dataset("cannot split an empty rating matrix");

  std::vector<RatingTriple> train_triples, test, validation;
  for (UserId u = 0; u < matrix.num_users(); ++u) {
    auto row = matrix.user_row(u);
    if (row.empty()) continue;
    std::vector<std::size_t> order(row.size());
    for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
    std::mt19937_64 rng(seed ^ splitmix64(static_cast<std::uint64_t>(u)));
    fisher_yates(order, rng);

    const std::size_t n = row.size();
    const std::size_t n_test =
        static_cast<std::size_t>(std::floor(static_cast<double>(n) * (1.0 - train_ratio)));
    const std::size_t n_train_pool = n - n_test;
    const std::size_t n_val = static_cast<std::size_t>(
        std::floor(static_cast<double>(n_train_pool) * validation_ratio));

    for (std::size_t j = 0; j < n; ++j) {
      const RatingEntry& e = row[order[j]];
      RatingTriple t{u, e.id, e.rating};
      if (j < n_test)
        test.push_back(t);
      else if (j < n_test + n_val)
        validation.push_back(t);
      else
        train_triples.push_back(t);
    }
  }

  std::sort(test.begin(), test.end());
  std::sort(validation.begin(), validation.end());
  RatingMatrix train(matrix.num_users(), matrix.num_items(), matrix.rating_max(),
                     std::move(train_triples));
  return DatasetSplit{std::move(train), std::move(test), std::move(validation), seed};
}

} // namespace broadcf
