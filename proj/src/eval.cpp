#include "broadcf/eval.hpp"

#include "broadcf/errors.hpp"
#include "broadcf/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

namespace broadcf {

DecodeMode parse_decode_mode(const std::string& name) {
  if (name == "index_weighted") return DecodeMode::index_weighted;
  if (name == "literal") return DecodeMode::literal;
  throw_config("unknown decode mode '" + name + "' (expected index_weighted or literal)");
}

std::string to_string(DecodeMode mode) {
  return mode == DecodeMode::literal ? "literal" : "index_weighted";
}

double decode_rating(const RowVector& y_hat, DecodeMode mode) {
  const auto d_y = y_hat.size();
  if (d_y < 2) throw_contract("decode_rating: strength vector needs length >= 2");
  if (!y_hat.allFinite()) throw_contract("decode_rating: non-finite strength vector");

  const double min = y_hat.minCoeff();
  const double max = y_hat.maxCoeff();
  if (max == min) return (static_cast<double>(d_y) + 1.0) / 2.0;

  if (mode == DecodeMode::literal) {
    double out = 0.0;
    for (Eigen::Index j = 0; j < d_y; ++j)
      out += (y_hat[j] - min) / (max - min) * y_hat[j];
    return out;
  }
  double weight_sum = 0.0;
  for (Eigen::Index j = 0; j < d_y; ++j) weight_sum += y_hat[j] - min;
  double out = 0.0;
  for (Eigen::Index j = 0; j < d_y; ++j)
    out += (y_hat[j] - min) / weight_sum * static_cast<double>(j + 1);
  return out;
}

double rmse(std::span<const std::pair<double, double>> pairs) {
  if (pairs.empty()) throw_empty_dataset("rmse of an empty prediction set");
  double sq = 0.0;
  for (const auto& [truth, pred] : pairs) sq += (truth - pred) * (truth - pred);
  return std::sqrt(sq / static_cast<double>(pairs.size()));
}

double mae(std::span<const std::pair<double, double>> pairs) {
  if (pairs.empty()) throw_empty_dataset("mae of an empty prediction set");
  double abs = 0.0;
  for (const auto& [truth, pred] : pairs) abs += std::abs(truth - pred);
  return abs / static_cast<double>(pairs.size());
}

double improvement_percent(double baseline, double broadcf) {
  if (!(baseline > 0.0)) throw_contract("improvement_percent: baseline must be > 0");
  return (baseline - broadcf) / baseline * 100.0;
}

std::string EvalReport::to_json_line() const {
  nlohmann::json j;
  j["rmse"] = rmse;
  j["mae"] = mae;
  j["preprocess_seconds"] = preprocess_seconds;
  j["solve_seconds"] = solve_seconds;
  j["train_seconds"] = train_seconds;
  j["test_seconds"] = test_seconds;
  j["trainable_params"] = trainable_params;
  j["n_test"] = n_test;
  j["config"] = nlohmann::json::parse(config_json);
  return j.dump();
}

std::string EvalReport::csv_header() {
  return "rmse,mae,preprocess_seconds,solve_seconds,train_seconds,test_seconds,"
         "trainable_params,n_test,config";
}

std::string EvalReport::to_csv_row() const {
  std::ostringstream out;
  out.precision(17);
  out << rmse << ',' << mae << ',' << preprocess_seconds << ',' << solve_seconds << ','
      << train_seconds << ',' << test_seconds << ',' << trainable_params << ','
      << n_test << ",\"";
  for (char c : config_json) { // CSV-quote the embedded JSON
    if (c == '"') out << "\"\"";
    else out << c;
  }
  out << '"';
  return out.str();
}

EvalReport user_mean_baseline(const RatingMatrix& train,
                              std::span<const RatingTriple> test) {
  if (train.empty()) throw_empty_dataset("user_mean_baseline needs a non-empty train matrix");
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::pair<double, double>> pairs;
  pairs.reserve(test.size());
  for (const auto& t : test) {
    const double pred = train.user_row(t.user).empty() ? train.global_mean()
                                                       : train.user_mean(t.user);
    pairs.emplace_back(static_cast<double>(t.rating), pred);
  }
  const auto t1 = std::chrono::steady_clock::now();

  EvalReport report;
  report.rmse = rmse(pairs);
  report.mae = mae(pairs);
  report.test_seconds = std::chrono::duration<double>(t1 - t0).count();
  report.trainable_params = 0;
  report.n_test = static_cast<std::int64_t>(test.size());
  report.config_json = "{\"model\":\"user_mean_baseline\"}";
  return report;
}

EvalReport evaluate(const ModelBundle& bundle, std::span<const RatingTriple> test,
                    DecodeMode mode, bool clamp, int threads) {
  if (test.empty()) throw_empty_dataset("evaluate: empty test set");
  if (!bundle.model.trained) throw_state("evaluate: model is untrained");

  const RatingMatrix& train = *bundle.train;
  const NeighborIndex& index = *bundle.index;
  const double d_y = static_cast<double>(bundle.model.d_y);

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> preds(test.size());
  parallel_for(test.size(), threads, [&](std::size_t r) {
    const RatingTriple& t = test[r];
    const Vector x = collaborative_vector(train, index, t.user, t.item);
    const RowVector y_hat = forward(bundle.model, RowVector(x.transpose()));
    double pred = decode_rating(y_hat, mode);
    if (clamp) pred = std::clamp(pred, 1.0, d_y);
    preds[r] = pred;
  });
  const auto t1 = std::chrono::steady_clock::now();

  std::vector<std::pair<double, double>> pairs;
  pairs.reserve(test.size());
  for (std::size_t r = 0; r < test.size(); ++r)
    pairs.emplace_back(static_cast<double>(test[r].rating), preds[r]);

  EvalReport report;
  report.rmse = rmse(pairs);
  report.mae = mae(pairs);
  report.test_seconds = std::chrono::duration<double>(t1 - t0).count();
  report.trainable_params = count_trainable(bundle.model);
  report.n_test = static_cast<std::int64_t>(test.size());
  return report;
}

double predict_rating(const ModelBundle& bundle, const std::string& raw_user,
                      const std::string& raw_item, DecodeMode mode, bool clamp) {
  if (!bundle.model.trained) throw_state("predict: model is untrained");
  const RatingMatrix& train = *bundle.train;
  const int u = bundle.users.find(raw_user);
  const int i = bundle.items.find(raw_item);

  Vector x;
  if (u >= 0 && i >= 0) {
    x = collaborative_vector(train, *bundle.index, u, i);
  } else {
    if (train.empty())
      throw_config("unknown user/item and no train ratings to fall back on");
    x = Vector::Constant(bundle.index->k() + bundle.index->l(), train.global_mean());
  }
  const RowVector y_hat = forward(bundle.model, RowVector(x.transpose()));
  double pred = decode_rating(y_hat, mode);
  if (clamp) pred = std::clamp(pred, 1.0, static_cast<double>(bundle.model.d_y));
  return pred;
}

} // namespace broadcf
