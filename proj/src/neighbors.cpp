#include "broadcf/neighbors.hpp"

#include "broadcf/errors.hpp"
#include "broadcf/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace broadcf {

double cosine_similarity(std::span<const RatingEntry> a, int dim_a,
                         std::span<const RatingEntry> b, int dim_b) {
  if (dim_a != dim_b) throw_contract("cosine_similarity: dimension mismatch");
  double dot = 0.0, sq_a = 0.0, sq_b = 0.0;
  std::size_t ia = 0, ib = 0;
  while (ia < a.size() && ib < b.size()) {
    if (a[ia].id == b[ib].id) {
      dot += static_cast<double>(a[ia].rating) * static_cast<double>(b[ib].rating);
      ++ia;
      ++ib;
    } else if (a[ia].id < b[ib].id) {
      ++ia;
    } else {
      ++ib;
    }
  }
  for (const auto& e : a) sq_a += static_cast<double>(e.rating) * e.rating;
  for (const auto& e : b) sq_b += static_cast<double>(e.rating) * e.rating;
  if (sq_a == 0.0 || sq_b == 0.0) return 0.0;
  return dot / (std::sqrt(sq_a) * std::sqrt(sq_b));
}

namespace {

// Dot products of one source row against every other row of the same
// orientation, accumulated per shared coordinate in ascending order — the
// same addition order as a pairwise sorted merge, so results are
// bit-identical to cosine_similarity on the same data.
template <class RowOf, class ColOf>
std::vector<double> similarities_to_all(int count, int source, double source_norm,
                                        const std::vector<double>& norms,
                                        RowOf&& row_of, ColOf&& col_of) {
  std::vector<double> sims(static_cast<std::size_t>(count), 0.0);
  if (source_norm != 0.0) {
    for (const RatingEntry& coord : row_of(source)) {
      const double r_source = static_cast<double>(coord.rating);
      for (const RatingEntry& other : col_of(coord.id))
        sims[static_cast<std::size_t>(other.id)] += r_source * static_cast<double>(other.rating);
    }
    for (int v = 0; v < count; ++v) {
      const double nv = norms[static_cast<std::size_t>(v)];
      sims[static_cast<std::size_t>(v)] =
          nv == 0.0 ? 0.0 : sims[static_cast<std::size_t>(v)] / (source_norm * nv);
    }
  }
  sims[static_cast<std::size_t>(source)] = 0.0; // self excluded
  return sims;
}

std::vector<Neighbor> top_from_sims(const std::vector<double>& sims, int self, int k) {
  std::vector<Neighbor> candidates;
  candidates.reserve(sims.size() - 1);
  for (std::size_t v = 0; v < sims.size(); ++v)
    if (static_cast<int>(v) != self)
      candidates.push_back({static_cast<std::int32_t>(v), sims[v]});
  auto better = [](const Neighbor& a, const Neighbor& b) {
    return a.similarity > b.similarity ||
           (a.similarity == b.similarity && a.id < b.id);
  };
  std::partial_sort(candidates.begin(),
                    candidates.begin() + std::min<std::size_t>(candidates.size(),
                                                               static_cast<std::size_t>(k)),
                    candidates.end(), better);
  candidates.resize(static_cast<std::size_t>(k));
  return candidates;
}

} // namespace

NeighborIndex NeighborIndex::build(std::shared_ptr<const RatingMatrix> train,
                                   int k, int l, int threads) {
  if (!train) throw_contract("build_index: null train matrix");
  if (k < 1 || k >= train->num_users())
    throw_config("k must satisfy 1 <= k < num_users (" +
                 std::to_string(train->num_users()) + "), got " + std::to_string(k));
  if (l < 1 || l >= train->num_items())
    throw_config("l must satisfy 1 <= l < num_items (" +
                 std::to_string(train->num_items()) + "), got " + std::to_string(l));

  NeighborIndex index;
  index.train_ = std::move(train);
  index.k_ = k;
  index.l_ = l;
  const RatingMatrix& m = *index.train_;

  std::vector<double> user_norms(static_cast<std::size_t>(m.num_users()));
  std::vector<double> item_norms(static_cast<std::size_t>(m.num_items()));
  for (int u = 0; u < m.num_users(); ++u) user_norms[static_cast<std::size_t>(u)] = m.user_norm(u);
  for (int i = 0; i < m.num_items(); ++i) item_norms[static_cast<std::size_t>(i)] = m.item_norm(i);

  index.user_top_.resize(static_cast<std::size_t>(m.num_users()));
  parallel_for(static_cast<std::size_t>(m.num_users()), threads, [&](std::size_t u) {
    auto sims = similarities_to_all(
        m.num_users(), static_cast<int>(u), m.user_norm(static_cast<UserId>(u)), user_norms,
        [&](int s) { return m.user_row(s); }, [&](int id) { return m.item_col(id); });
    index.user_top_[u] = top_from_sims(sims, static_cast<int>(u), k);
  });

  index.item_top_.resize(static_cast<std::size_t>(m.num_items()));
  parallel_for(static_cast<std::size_t>(m.num_items()), threads, [&](std::size_t i) {
    auto sims = similarities_to_all(
        m.num_items(), static_cast<int>(i), m.item_norm(static_cast<ItemId>(i)), item_norms,
        [&](int s) { return m.item_col(s); }, [&](int id) { return m.user_row(id); });
    index.item_top_[i] = top_from_sims(sims, static_cast<int>(i), l);
  });

  index.user_sims_.resize(static_cast<std::size_t>(m.num_users()));
  index.item_sims_.resize(static_cast<std::size_t>(m.num_items()));
  index.user_once_ = std::make_unique<std::once_flag[]>(static_cast<std::size_t>(m.num_users()));
  index.item_once_ = std::make_unique<std::once_flag[]>(static_cast<std::size_t>(m.num_items()));
  return index;
}

NeighborIndex build_index(std::shared_ptr<const RatingMatrix> train, int k, int l,
                          int threads) {
  return NeighborIndex::build(std::move(train), k, l, threads);
}

std::span<const Neighbor> NeighborIndex::user_neighbors(UserId u) const {
  if (u < 0 || u >= train_->num_users()) throw_contract("user_neighbors: id out of range");
  return user_top_[static_cast<std::size_t>(u)];
}

std::span<const Neighbor> NeighborIndex::item_neighbors(ItemId i) const {
  if (i < 0 || i >= train_->num_items()) throw_contract("item_neighbors: id out of range");
  return item_top_[static_cast<std::size_t>(i)];
}

const std::vector<double>& NeighborIndex::user_similarities(UserId u) const {
  if (u < 0 || u >= train_->num_users()) throw_contract("user_similarities: id out of range");
  const RatingMatrix& m = *train_;
  std::call_once(user_once_[static_cast<std::size_t>(u)], [&] {
    std::vector<double> norms(static_cast<std::size_t>(m.num_users()));
    for (int v = 0; v < m.num_users(); ++v) norms[static_cast<std::size_t>(v)] = m.user_norm(v);
    user_sims_[static_cast<std::size_t>(u)] =
        std::make_unique<std::vector<double>>(similarities_to_all(
            m.num_users(), u, m.user_norm(u), norms,
            [&](int s) { return m.user_row(s); }, [&](int id) { return m.item_col(id); }));
  });
  return *user_sims_[static_cast<std::size_t>(u)];
}

const std::vector<double>& NeighborIndex::item_similarities(ItemId i) const {
  if (i < 0 || i >= train_->num_items()) throw_contract("item_similarities: id out of range");
  const RatingMatrix& m = *train_;
  std::call_once(item_once_[static_cast<std::size_t>(i)], [&] {
    std::vector<double> norms(static_cast<std::size_t>(m.num_items()));
    for (int w = 0; w < m.num_items(); ++w) norms[static_cast<std::size_t>(w)] = m.item_norm(w);
    item_sims_[static_cast<std::size_t>(i)] =
        std::make_unique<std::vector<double>>(similarities_to_all(
            m.num_items(), i, m.item_norm(i), norms,
            [&](int s) { return m.item_col(s); }, [&](int id) { return m.user_row(id); }));
  });
  return *item_sims_[static_cast<std::size_t>(i)];
}

std::vector<Neighbor> NeighborIndex::ranked_users(UserId u) const {
  return top_from_sims(user_similarities(u), u, train_->num_users() - 1);
}

std::vector<Neighbor> NeighborIndex::ranked_items(ItemId i) const {
  return top_from_sims(item_similarities(i), i, train_->num_items() - 1);
}

UserId NeighborIndex::best_rater(UserId u, ItemId i) const {
  auto raters = train_->item_col(i);
  if (raters.empty()) return -1;
  const std::vector<double>& sims = user_similarities(u);
  UserId best = -1;
  double best_sim = 0.0;
  for (const auto& e : raters) {
    const double s = sims[static_cast<std::size_t>(e.id)];
    if (best == -1 || s > best_sim) {
      best = e.id; // raters ascend by id, so the first max keeps the smallest id
      best_sim = s;
    }
  }
  return best;
}

ItemId NeighborIndex::best_rated_item(ItemId i, UserId u) const {
  auto rated = train_->user_row(u);
  if (rated.empty()) return -1;
  const std::vector<double>& sims = item_similarities(i);
  ItemId best = -1;
  double best_sim = 0.0;
  for (const auto& e : rated) {
    const double s = sims[static_cast<std::size_t>(e.id)];
    if (best == -1 || s > best_sim) {
      best = e.id;
      best_sim = s;
    }
  }
  return best;
}

Vector knu_rating_vector(const RatingMatrix& train, const NeighborIndex& index,
                         UserId u, ItemId i) {
  auto neighbors = index.user_neighbors(u);
  Vector out(index.k());
  for (int j = 0; j < index.k(); ++j) {
    const UserId n = neighbors[static_cast<std::size_t>(j)].id;
    double value = static_cast<double>(train.rating(n, i));
    if (value == 0.0) {
      const UserId filler = index.best_rater(n, i);
      if (filler >= 0)
        value = static_cast<double>(train.rating(filler, i));
      else if (!train.user_row(n).empty())
        value = train.user_mean(n);
      else
        value = train.global_mean();
    }
    out[j] = value;
  }
  return out;
}

Vector lni_rating_vector(const RatingMatrix& train, const NeighborIndex& index,
                         UserId u, ItemId i) {
  auto neighbors = index.item_neighbors(i);
  Vector out(index.l());
  for (int j = 0; j < index.l(); ++j) {
    const ItemId w = neighbors[static_cast<std::size_t>(j)].id;
    double value = static_cast<double>(train.rating(u, w));
    if (value == 0.0) {
      const ItemId filler = index.best_rated_item(w, u);
      if (filler >= 0)
        value = static_cast<double>(train.rating(u, filler));
      else if (!train.item_col(w).empty())
        value = train.item_mean(w);
      else
        value = train.global_mean();
    }
    out[j] = value;
  }
  return out;
}

} // namespace broadcf
