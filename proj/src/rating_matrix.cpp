#include "broadcf/rating_matrix.hpp"

#include "broadcf/errors.hpp"

#include <algorithm>
#include <cmath>

namespace broadcf {

RatingMatrix::RatingMatrix(int num_users, int num_items, int rating_max,
                           std::vector<RatingTriple> triples)
    : num_users_(num_users), num_items_(num_items), rating_max_(rating_max) {
  if (num_users < 0 || num_items < 0 || rating_max < 1)
    throw_contract("RatingMatrix: dimensions must be non-negative and rating_max >= 1");

  std::sort(triples.begin(), triples.end());
  by_user_.resize(static_cast<std::size_t>(num_users));
  by_item_.resize(static_cast<std::size_t>(num_items));
  user_mean_.assign(static_cast<std::size_t>(num_users), 0.0);
  item_mean_.assign(static_cast<std::size_t>(num_items), 0.0);
  user_norm_.assign(static_cast<std::size_t>(num_users), 0.0);
  item_norm_.assign(static_cast<std::size_t>(num_items), 0.0);

  double total = 0.0;
  for (std::size_t idx = 0; idx < triples.size(); ++idx) {
    const RatingTriple& t = triples[idx];
    if (t.user < 0 || t.user >= num_users || t.item < 0 || t.item >= num_items)
      throw_contract("RatingMatrix: entry index out of range");
    if (t.rating < 1 || t.rating > rating_max)
      throw_contract("RatingMatrix: rating outside [1, rating_max]");
    if (idx > 0 && triples[idx - 1].user == t.user && triples[idx - 1].item == t.item)
      throw_contract("RatingMatrix: duplicate (user, item) entry");
    by_user_[static_cast<std::size_t>(t.user)].push_back({t.item, t.rating});
    by_item_[static_cast<std::size_t>(t.item)].push_back({t.user, t.rating});
    total += t.rating;
  }
  num_entries_ = triples.size();
  global_mean_ = num_entries_ > 0 ? total / static_cast<double>(num_entries_) : 0.0;

  for (int u = 0; u < num_users; ++u) {
    const auto& row = by_user_[static_cast<std::size_t>(u)];
    double sum = 0.0, sq = 0.0;
    for (const auto& e : row) {
      sum += e.rating;
      sq += static_cast<double>(e.rating) * e.rating;
    }
    if (!row.empty()) user_mean_[static_cast<std::size_t>(u)] = sum / static_cast<double>(row.size());
    user_norm_[static_cast<std::size_t>(u)] = std::sqrt(sq);
  }
  for (int i = 0; i < num_items; ++i) {
    auto& col = by_item_[static_cast<std::size_t>(i)];
    std::sort(col.begin(), col.end(),
              [](const RatingEntry& a, const RatingEntry& b) { return a.id < b.id; });
    double sum = 0.0, sq = 0.0;
    for (const auto& e : col) {
      sum += e.rating;
      sq += static_cast<double>(e.rating) * e.rating;
    }
    if (!col.empty()) item_mean_[static_cast<std::size_t>(i)] = sum / static_cast<double>(col.size());
    item_norm_[static_cast<std::size_t>(i)] = std::sqrt(sq);
  }
}

std::span<const RatingEntry> RatingMatrix::user_row(UserId u) const {
  if (u < 0 || u >= num_users_) throw_contract("user_row: user id out of range");
  return by_user_[static_cast<std::size_t>(u)];
}

std::span<const RatingEntry> RatingMatrix::item_col(ItemId i) const {
  if (i < 0 || i >= num_items_) throw_contract("item_col: item id out of range");
  return by_item_[static_cast<std::size_t>(i)];
}

std::int32_t RatingMatrix::rating(UserId u, ItemId i) const {
  auto row = user_row(u);
  auto it = std::lower_bound(row.begin(), row.end(), i,
                             [](const RatingEntry& e, ItemId key) { return e.id < key; });
  return (it != row.end() && it->id == i) ? it->rating : 0;
}

std::vector<RatingTriple> RatingMatrix::triples() const {
  std::vector<RatingTriple> out;
  out.reserve(num_entries_);
  for (int u = 0; u < num_users_; ++u)
    for (const auto& e : by_user_[static_cast<std::size_t>(u)])
      out.push_back({u, e.id, e.rating});
  return out;
}

int IdMap::add_or_get(const std::string& raw) {
  auto [it, inserted] = to_index_.try_emplace(raw, static_cast<int>(raw_.size()));
  if (inserted) raw_.push_back(raw);
  return it->second;
}

int IdMap::find(const std::string& raw) const {
  auto it = to_index_.find(raw);
  return it == to_index_.end() ? -1 : it->second;
}

} // namespace broadcf
