#pragma once

#include "broadcf/rating_matrix.hpp"

#include <string>

namespace broadcf {

enum class CsvFormat {
  generic_csv, // user,item,rating[,timestamp]; header optional
  movielens,   // userId,movieId,rating,timestamp with the standard header
};

CsvFormat parse_csv_format(const std::string& name);
std::string to_string(CsvFormat format);

struct Dataset {
  RatingMatrix matrix;
  IdMap users;
  IdMap items;
};

// Reads a ratings CSV, reindexes raw user/item identifiers densely in order
// of first appearance, rounds non-integer ratings half-up, and validates the
// rounded value against (0, rating_max]. Parse failures name the line.
Dataset load_ratings(const std::string& path, CsvFormat format, int rating_max = 5);

} // namespace broadcf
