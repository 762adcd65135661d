#pragma once

#include "broadcf/rating_matrix.hpp"
#include "broadcf/types.hpp"

#include <memory>
#include <mutex>
#include <span>
#include <vector>

namespace broadcf {

// Cosine over full zero-filled vectors; 0 when either vector has zero norm.
// `a`/`b` are (id, rating) entries sorted by id; dims must match.
double cosine_similarity(std::span<const RatingEntry> a, int dim_a,
                         std::span<const RatingEntry> b, int dim_b);

struct Neighbor {
  std::int32_t id;
  double similarity;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Top-k nearest users per user and top-l nearest items per item under cosine
// similarity of train rating vectors, ties broken by ascending id, self
// excluded. Full per-source similarity vectors (needed by the fill chain's
// argmax) are computed lazily and cached; lookups are safe under concurrent
// use. Holds a shared reference to the train matrix it was built from.
class NeighborIndex {
public:
  static NeighborIndex build(std::shared_ptr<const RatingMatrix> train, int k,
                             int l, int threads = 0);

  int k() const { return k_; }
  int l() const { return l_; }
  const RatingMatrix& train() const { return *train_; }

  std::span<const Neighbor> user_neighbors(UserId u) const;
  std::span<const Neighbor> item_neighbors(ItemId i) const;

  // Similarity of `u` to every user (self slot is 0). Lazy, cached.
  const std::vector<double>& user_similarities(UserId u) const;
  const std::vector<double>& item_similarities(ItemId i) const;

  // Full ranking (sim desc, id asc), self excluded; top-k/l are prefixes.
  std::vector<Neighbor> ranked_users(UserId u) const;
  std::vector<Neighbor> ranked_items(ItemId i) const;

  // Highest-similarity rater of item i from u's point of view (Eq-4-style
  // argmax over the item's raters); -1 when nobody rated i.
  UserId best_rater(UserId u, ItemId i) const;
  // Highest-similarity item among those u rated, seen from item i; -1 when
  // u rated nothing.
  ItemId best_rated_item(ItemId i, UserId u) const;

private:
  NeighborIndex() = default;

  std::shared_ptr<const RatingMatrix> train_;
  int k_ = 0;
  int l_ = 0;
  std::vector<std::vector<Neighbor>> user_top_, item_top_;

  mutable std::vector<std::unique_ptr<std::vector<double>>> user_sims_, item_sims_;
  mutable std::unique_ptr<std::once_flag[]> user_once_, item_once_;
};

NeighborIndex build_index(std::shared_ptr<const RatingMatrix> train, int k, int l,
                          int threads = 0);

// Ratings of u's k nearest users on item i, zero entries filled per the
// chain: nearest-to-neighbor rater of i, else the neighbor's own mean, else
// the global train mean.
Vector knu_rating_vector(const RatingMatrix& train, const NeighborIndex& index,
                         UserId u, ItemId i);
// Mirror: u's ratings on i's l nearest items, filled via the nearest item to
// the neighbor that u rated, else the neighbor item's mean, else global.
Vector lni_rating_vector(const RatingMatrix& train, const NeighborIndex& index,
                         UserId u, ItemId i);

} // namespace broadcf
