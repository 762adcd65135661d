#pragma once

#include "broadcf/bls.hpp"
#include "broadcf/encoding.hpp"
#include "broadcf/neighbors.hpp"
#include "broadcf/rating_matrix.hpp"

#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace broadcf {

enum class DecodeMode {
  index_weighted, // min-max weights normalized to a distribution over rating
                  // indices 1..d_y; the default
  literal,        // sum of min-max-normalized weights times the raw strengths
};

DecodeMode parse_decode_mode(const std::string& name);
std::string to_string(DecodeMode mode);

// Scalar rating from a strength vector. Both modes return (d_y + 1) / 2 when
// max == min. index_weighted outputs always lie in [1, d_y].
double decode_rating(const RowVector& y_hat, DecodeMode mode);

// (truth, prediction) pairs.
double rmse(std::span<const std::pair<double, double>> pairs);
double mae(std::span<const std::pair<double, double>> pairs);

// Error reduction relative to a baseline, in percent.
double improvement_percent(double baseline, double broadcf);

struct EvalReport {
  double rmse = 0.0;
  double mae = 0.0;
  double preprocess_seconds = 0.0;
  double solve_seconds = 0.0;
  double train_seconds = 0.0;
  double test_seconds = 0.0;
  std::int64_t trainable_params = 0;
  std::int64_t n_test = 0;
  std::string config_json = "{}"; // full hyperparameter echo, serialized JSON

  std::string to_json_line() const;
  std::string to_csv_row() const;
  static std::string csv_header();
};

// Trained model plus the train-time context needed to rebuild collaborative
// vectors at prediction time.
struct ModelBundle {
  BlsModel<Real> model;
  std::shared_ptr<const RatingMatrix> train;
  std::shared_ptr<const NeighborIndex> index;
  IdMap users;
  IdMap items;
};

// Predicts each test rating as the user's train mean (global mean for users
// with no train ratings). Sanity floor, not a tuned baseline.
EvalReport user_mean_baseline(const RatingMatrix& train,
                              std::span<const RatingTriple> test);

// Builds each test collaborative vector from the train matrix only, runs the
// model forward, decodes, and aggregates RMSE/MAE. Wall-clock test time is
// recorded in the report; train-side timings are the caller's to fill in.
EvalReport evaluate(const ModelBundle& bundle, std::span<const RatingTriple> test,
                    DecodeMode mode = DecodeMode::index_weighted,
                    bool clamp = false, int threads = 0);

// Single-pair prediction through the same path as evaluate. Raw ids missing
// from the bundle's maps fall back to a global-mean input vector.
double predict_rating(const ModelBundle& bundle, const std::string& raw_user,
                      const std::string& raw_item,
                      DecodeMode mode = DecodeMode::index_weighted,
                      bool clamp = false);

} // namespace broadcf
