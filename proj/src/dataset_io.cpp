#include "broadcf/dataset_io.hpp"

#include "broadcf/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <vector>

namespace broadcf {

namespace {

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

bool parse_double(const std::string& s, double& out) {
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc{} && ptr == end && !s.empty();
}

// First row is a header only when the rating column is non-numeric AND the
// first column names a user field; anything else non-numeric is a parse error
// with the line number.
bool looks_like_header(const std::vector<std::string>& fields) {
  if (fields.size() < 3) return false;
  double ignored;
  if (parse_double(fields[2], ignored)) return false;
  return lower(fields[0]).find("user") != std::string::npos;
}

} // namespace

CsvFormat parse_csv_format(const std::string& name) {
  if (name == "generic_csv") return CsvFormat::generic_csv;
  if (name == "movielens") return CsvFormat::movielens;
  throw_config("unknown dataset format '" + name + "' (expected generic_csv or movielens)");
}

std::string to_string(CsvFormat format) {
  return format == CsvFormat::movielens ? "movielens" : "generic_csv";
}

Dataset load_ratings(const std::string& path, CsvFormat format, int rating_max) {
  if (rating_max < 1) throw_config("rating_max must be >= 1");
  std::ifstream in(path);
  if (!in) throw_io("cannot open ratings file: " + path);

  IdMap users, items;
  std::vector<RatingTriple> triples;
  std::string line;
  std::size_t line_no = 0;
  bool first_data_row = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0)
      line.erase(0, 3); // UTF-8 BOM
    if (trim(line).empty()) continue;

    auto fields = split_fields(line);
    if (first_data_row && looks_like_header(fields)) {
      first_data_row = false;
      continue;
    }
    first_data_row = false;

    const std::size_t expected_min = 3;
    if (fields.size() < expected_min || fields.size() > 4)
      throw_parse(path + ":" + std::to_string(line_no) +
                  ": expected user,item,rating[,timestamp], got " +
                  std::to_string(fields.size()) + " fields");
    if (fields[0].empty() || fields[1].empty())
      throw_parse(path + ":" + std::to_string(line_no) + ": empty user or item id");

    double raw_rating;
    if (!parse_double(fields[2], raw_rating))
      throw_parse(path + ":" + std::to_string(line_no) + ": rating '" + fields[2] +
                  "' is not numeric");

    // round half-up, then validate: 0 is reserved for "unrated"
    double rounded = std::floor(raw_rating + 0.5);
    if (!(rounded >= 1.0) || rounded > static_cast<double>(rating_max))
      throw_parse(path + ":" + std::to_string(line_no) + ": rating " + fields[2] +
                  " rounds to " + std::to_string(static_cast<long long>(rounded)) +
                  ", outside (0, " + std::to_string(rating_max) + "]");
    std::int32_t rating =
        std::clamp(static_cast<std::int32_t>(rounded), 1, rating_max);

    int u = users.add_or_get(fields[0]);
    int i = items.add_or_get(fields[1]);
    triples.push_back({u, i, rating});
  }

  if (triples.empty()) throw_empty_dataset("no ratings found in " + path);

  // duplicate (user,item) rows are data corruption; report the pair
  std::vector<RatingTriple> sorted = triples;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t idx = 1; idx < sorted.size(); ++idx) {
    if (sorted[idx - 1].user == sorted[idx].user && sorted[idx - 1].item == sorted[idx].item)
      throw_parse(path + ": duplicate rating for user '" + users.raw(sorted[idx].user) +
                  "', item '" + items.raw(sorted[idx].item) + "'");
  }

  (void)format; // both formats share the column layout; header rules differ only
                // in what the first row may look like, handled above
  RatingMatrix matrix(users.size(), items.size(), rating_max, std::move(sorted));
  return Dataset{std::move(matrix), std::move(users), std::move(items)};
}

} // namespace broadcf
