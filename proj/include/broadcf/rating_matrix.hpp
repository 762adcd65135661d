#pragma once

#include "broadcf/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace broadcf {

// One stored rating seen from either orientation: `id` is the item when the
// entry lives in a user row, the user when it lives in an item column.
struct RatingEntry {
  std::int32_t id;
  std::int32_t rating;

  friend bool operator==(const RatingEntry&, const RatingEntry&) = default;
};

struct RatingTriple {
  UserId user;
  ItemId item;
  std::int32_t rating;

  friend auto operator<=>(const RatingTriple&, const RatingTriple&) = default;
};

// Sparse user x item store of integer ratings in [1, rating_max], dual-indexed
// (by-user rows and by-item columns) so both neighbor orientations get sorted
// adjacency without materializing the dense matrix. Immutable once built;
// safe for concurrent reads.
class RatingMatrix {
public:
  RatingMatrix() = default; // zero-dimension placeholder
  RatingMatrix(int num_users, int num_items, int rating_max,
               std::vector<RatingTriple> triples);

  int num_users() const { return num_users_; }
  int num_items() const { return num_items_; }
  int rating_max() const { return rating_max_; }
  std::size_t num_entries() const { return num_entries_; }
  bool empty() const { return num_entries_ == 0; }

  // (item, rating) pairs sorted by item.
  std::span<const RatingEntry> user_row(UserId u) const;
  // (user, rating) pairs sorted by user.
  std::span<const RatingEntry> item_col(ItemId i) const;

  // Stored rating, or 0 when the pair is unrated.
  std::int32_t rating(UserId u, ItemId i) const;

  double global_mean() const { return global_mean_; }
  double user_mean(UserId u) const { return user_mean_[static_cast<std::size_t>(u)]; }
  double item_mean(ItemId i) const { return item_mean_[static_cast<std::size_t>(i)]; }

  // L2 norm of the full zero-filled rating vector.
  double user_norm(UserId u) const { return user_norm_[static_cast<std::size_t>(u)]; }
  double item_norm(ItemId i) const { return item_norm_[static_cast<std::size_t>(i)]; }

  // All entries sorted by (user, item).
  std::vector<RatingTriple> triples() const;

private:
  int num_users_ = 0;
  int num_items_ = 0;
  int rating_max_ = 0;
  std::size_t num_entries_ = 0;
  std::vector<std::vector<RatingEntry>> by_user_;
  std::vector<std::vector<RatingEntry>> by_item_;
  std::vector<double> user_mean_, item_mean_;
  std::vector<double> user_norm_, item_norm_;
  double global_mean_ = 0.0;
};

// Raw identifier <-> dense index mapping, in order of first appearance.
class IdMap {
public:
  int add_or_get(const std::string& raw);
  // -1 when unknown.
  int find(const std::string& raw) const;
  const std::string& raw(int index) const { return raw_[static_cast<std::size_t>(index)]; }
  int size() const { return static_cast<int>(raw_.size()); }

private:
  std::vector<std::string> raw_;
  std::unordered_map<std::string, int> to_index_;
};

} // namespace broadcf
