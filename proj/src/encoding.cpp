#include "broadcf/encoding.hpp"

#include "broadcf/errors.hpp"
#include "broadcf/parallel.hpp"

namespace broadcf {

RowVector one_hot(int rating, int d_y) {
  if (d_y < 1) throw_contract("one_hot: d_y must be >= 1");
  if (rating < 1 || rating > d_y)
    throw_contract("one_hot: rating " + std::to_string(rating) + " outside [1, " +
                   std::to_string(d_y) + "]");
  RowVector y = RowVector::Zero(d_y);
  y[rating - 1] = 1.0;
  return y;
}

Vector collaborative_vector(const RatingMatrix& train, const NeighborIndex& index,
                            UserId u, ItemId i) {
  Vector x(index.k() + index.l());
  x.head(index.k()) = knu_rating_vector(train, index, u, i);
  x.tail(index.l()) = lni_rating_vector(train, index, u, i);
  return x;
}

TrainingSet build_training_set(const RatingMatrix& train, const NeighborIndex& index,
                               int threads) {
  if (train.empty()) throw_empty_dataset("cannot build a training set from an empty matrix");

  TrainingSet set;
  set.pairs.reserve(train.num_entries());
  std::vector<std::int32_t> ratings;
  ratings.reserve(train.num_entries());
  for (UserId u = 0; u < train.num_users(); ++u)
    for (const auto& e : train.user_row(u)) {
      set.pairs.emplace_back(u, e.id);
      ratings.push_back(e.rating);
    }

  const auto rows = static_cast<Eigen::Index>(set.pairs.size());
  set.X.resize(rows, index.k() + index.l());
  set.Y = Matrix::Zero(rows, train.rating_max());
  parallel_for(set.pairs.size(), threads, [&](std::size_t r) {
    const auto [u, i] = set.pairs[r];
    set.X.row(static_cast<Eigen::Index>(r)) =
        collaborative_vector(train, index, u, i).transpose();
    set.Y(static_cast<Eigen::Index>(r), ratings[r] - 1) = 1.0;
  });
  return set;
}

} // namespace broadcf
