// broadcf: train / evaluate / predict / sweep for broad-learning
// collaborative filtering over sparse rating data.
//
// Exit codes: 0 success, 1 configuration error, 2 I/O or data error,
// 3 numeric failure.

#include "broadcf/dataset_io.hpp"
#include "broadcf/encoding.hpp"
#include "broadcf/errors.hpp"
#include "broadcf/eval.hpp"
#include "broadcf/model_io.hpp"
#include "broadcf/split.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

using namespace broadcf;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

struct RunConfig {
  std::string dataset;
  std::string dataset_format = "movielens";
  int rating_max = 5;
  int k = 5;
  int l = 5;
  int n = 25;
  int d_z = 10;
  int m = 25;
  int d_h = 15;
  double lambda = 1e-8;
  std::uint64_t seed = 1;
  std::uint64_t split_seed = 42;
  double train_ratio = 0.75;
  double validation_ratio = 0.25;
  std::string decode_mode = "index_weighted";
  bool clamp = false;
  int threads = 0; // 0 = all cores
  bool no_timing = false;
  std::string output_format = "json";

  void validate() const {
    if (k < 1) throw_config("--k must be >= 1");
    if (l < 1) throw_config("--l must be >= 1");
    if (rating_max < 2) throw_config("--rating-max must be >= 2");
    if (threads < 0) throw_config("--threads must be >= 0");
    BlsHyperparams h{n, d_z, m, d_h, lambda, seed};
    h.validate();
    parse_decode_mode(decode_mode);
    if (output_format != "json" && output_format != "csv")
      throw_config("--format must be json or csv");
  }

  BlsHyperparams bls() const { return BlsHyperparams{n, d_z, m, d_h, lambda, seed}; }

  json echo() const {
    json j;
    j["dataset"] = dataset;
    j["dataset_format"] = dataset_format;
    j["rating_max"] = rating_max;
    j["k"] = k;
    j["l"] = l;
    j["n"] = n;
    j["d_z"] = d_z;
    j["m"] = m;
    j["d_h"] = d_h;
    j["lambda"] = lambda;
    j["seed"] = seed;
    j["split_seed"] = split_seed;
    j["train_ratio"] = train_ratio;
    j["validation_ratio"] = validation_ratio;
    j["decode_mode"] = decode_mode;
    j["clamp"] = clamp;
    return j;
  }
};

// Applies a flat key=value config file onto the defaults. Runs before the
// CLI11 pass, so flags and BROADCF_* environment variables override file
// values, which override the built-in defaults.
void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_config("cannot open config file: " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    line.erase(std::remove_if(line.begin(), line.end(), is_space), line.end());
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw_config(path + ":" + std::to_string(line_no) + ": expected key=value");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    try {
      if (key == "dataset") cfg.dataset = value;
      else if (key == "dataset_format" || key == "dataset-format") cfg.dataset_format = value;
      else if (key == "rating_max" || key == "rating-max") cfg.rating_max = std::stoi(value);
      else if (key == "k") cfg.k = std::stoi(value);
      else if (key == "l") cfg.l = std::stoi(value);
      else if (key == "n") cfg.n = std::stoi(value);
      else if (key == "dz" || key == "d_z" || key == "d-z") cfg.d_z = std::stoi(value);
      else if (key == "m") cfg.m = std::stoi(value);
      else if (key == "dh" || key == "d_h" || key == "d-h") cfg.d_h = std::stoi(value);
      else if (key == "lambda") cfg.lambda = std::stod(value);
      else if (key == "seed") cfg.seed = std::stoull(value);
      else if (key == "split_seed" || key == "split-seed") cfg.split_seed = std::stoull(value);
      else if (key == "train_ratio" || key == "train-ratio") cfg.train_ratio = std::stod(value);
      else if (key == "validation_ratio" || key == "validation-ratio")
        cfg.validation_ratio = std::stod(value);
      else if (key == "decode_mode" || key == "decode-mode") cfg.decode_mode = value;
      else if (key == "clamp") cfg.clamp = value == "true" || value == "1";
      else if (key == "threads") cfg.threads = std::stoi(value);
      else if (key == "format") cfg.output_format = value;
      else throw_config(path + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw_config(path + ":" + std::to_string(line_no) + ": bad value '" + value +
                   "' for key '" + key + "'");
    } catch (const std::out_of_range&) {
      throw_config(path + ":" + std::to_string(line_no) + ": value out of range for '" +
                   key + "'");
    }
  }
}

void add_common_options(CLI::App* cmd, RunConfig& cfg, std::string& config_path,
                        bool needs_dataset) {
  cmd->add_option("--config", config_path,
                  "flat key=value config file (applied before flags and env)");
  auto* dataset = cmd->add_option("--dataset", cfg.dataset, "ratings CSV path")
                      ->envname("BROADCF_DATASET");
  if (needs_dataset) dataset->required();
  cmd->add_option("--dataset-format", cfg.dataset_format,
                  "dataset format: generic_csv or movielens")
      ->envname("BROADCF_DATASET_FORMAT");
  cmd->add_option("--rating-max", cfg.rating_max, "maximum rating d_y")
      ->envname("BROADCF_RATING_MAX");
  cmd->add_option("-k,--k", cfg.k, "nearest users per user")->envname("BROADCF_K");
  cmd->add_option("-l,--l", cfg.l, "nearest items per item")->envname("BROADCF_L");
  cmd->add_option("-n,--n", cfg.n, "mapped feature groups")->envname("BROADCF_N");
  cmd->add_option("--dz,--d-z", cfg.d_z, "mapped group dimension")->envname("BROADCF_DZ");
  cmd->add_option("-m,--m", cfg.m, "enhanced feature groups")->envname("BROADCF_M");
  cmd->add_option("--dh,--d-h", cfg.d_h, "enhanced group dimension")->envname("BROADCF_DH");
  cmd->add_option("--lambda", cfg.lambda, "ridge regularization")->envname("BROADCF_LAMBDA");
  cmd->add_option("--seed", cfg.seed, "random-weight seed")->envname("BROADCF_SEED");
  cmd->add_option("--split-seed", cfg.split_seed, "train/test split seed")
      ->envname("BROADCF_SPLIT_SEED");
  cmd->add_option("--train-ratio", cfg.train_ratio, "train fraction of each user's ratings")
      ->envname("BROADCF_TRAIN_RATIO");
  cmd->add_option("--validation-ratio", cfg.validation_ratio,
                  "validation fraction of each user's train entries")
      ->envname("BROADCF_VALIDATION_RATIO");
  cmd->add_option("--decode-mode", cfg.decode_mode, "index_weighted or literal")
      ->envname("BROADCF_DECODE_MODE");
  cmd->add_flag("--clamp", cfg.clamp, "clamp predictions to [1, rating_max]");
  cmd->add_option("--threads", cfg.threads, "worker thread cap (0 = all cores)")
      ->envname("BROADCF_THREADS");
  cmd->add_flag("--no-timing", cfg.no_timing, "zero the timing fields in reports");
  cmd->add_option("--format", cfg.output_format, "report format: json or csv")
      ->envname("BROADCF_FORMAT");
}

void strip_timing(EvalReport& report) {
  report.preprocess_seconds = 0.0;
  report.solve_seconds = 0.0;
  report.train_seconds = 0.0;
  report.test_seconds = 0.0;
}

void emit_report(const EvalReport& report, const std::string& format,
                 const std::string& path) {
  std::string text = format == "csv"
                         ? EvalReport::csv_header() + "\n" + report.to_csv_row() + "\n"
                         : report.to_json_line() + "\n";
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw_io("cannot open report file for writing: " + path);
  out << text;
  if (!out) throw_io("failed while writing report file: " + path);
}

struct TrainedRun {
  ModelBundle bundle;
  DatasetSplit splits;
  double preprocess_seconds = 0.0;
  double solve_seconds = 0.0;
};

// Debug dump of the assembled training matrices for external cross-checks.
void dump_xy(const std::string& path, const TrainingSet& set) {
  std::ofstream out(path);
  if (!out) throw_io("cannot open dump file for writing: " + path);
  out << "user,item";
  for (Eigen::Index c = 0; c < set.X.cols(); ++c) out << ",x" << c;
  for (Eigen::Index c = 0; c < set.Y.cols(); ++c) out << ",y" << (c + 1);
  out << "\n";
  out.precision(17);
  for (Eigen::Index r = 0; r < set.X.rows(); ++r) {
    const auto [u, i] = set.pairs[static_cast<std::size_t>(r)];
    out << u << ',' << i;
    for (Eigen::Index c = 0; c < set.X.cols(); ++c) out << ',' << set.X(r, c);
    for (Eigen::Index c = 0; c < set.Y.cols(); ++c) out << ',' << set.Y(r, c);
    out << "\n";
  }
  if (!out) throw_io("failed while writing dump file: " + path);
}

TrainedRun run_training(const RunConfig& cfg, const std::string& dump_path = "") {
  Dataset data = load_ratings(cfg.dataset, parse_csv_format(cfg.dataset_format),
                              cfg.rating_max);

  TrainedRun run;
  run.splits = split(data.matrix, cfg.train_ratio, cfg.validation_ratio, cfg.split_seed);
  auto train_matrix = std::make_shared<const RatingMatrix>(std::move(run.splits.train));

  const auto t0 = Clock::now();
  auto index = std::make_shared<const NeighborIndex>(
      NeighborIndex::build(train_matrix, cfg.k, cfg.l, cfg.threads));
  TrainingSet set = build_training_set(*train_matrix, *index, cfg.threads);
  const auto t1 = Clock::now();
  if (!dump_path.empty()) dump_xy(dump_path, set);

  BlsModel<Real> model = init_random<Real>(cfg.bls(), cfg.k + cfg.l, cfg.rating_max);
  train(model, set.X, set.Y);
  const auto t2 = Clock::now();

  run.preprocess_seconds = seconds_between(t0, t1);
  run.solve_seconds = seconds_between(t1, t2);
  run.bundle = ModelBundle{std::move(model), train_matrix, index,
                           std::move(data.users), std::move(data.items)};
  return run;
}

int cmd_train(const RunConfig& cfg, const std::string& model_path,
              const std::string& report_path, const std::string& dump_path) {
  cfg.validate();
  TrainedRun run = run_training(cfg, dump_path);
  save_model(model_path, run.bundle);

  EvalReport report;
  if (!run.splits.validation.empty()) {
    report = evaluate(run.bundle, run.splits.validation,
                      parse_decode_mode(cfg.decode_mode), cfg.clamp, cfg.threads);
  } else {
    report.trainable_params = count_trainable(run.bundle.model);
    report.rmse = std::numeric_limits<double>::quiet_NaN();
    report.mae = std::numeric_limits<double>::quiet_NaN();
  }
  report.preprocess_seconds = run.preprocess_seconds;
  report.solve_seconds = run.solve_seconds;
  report.train_seconds = run.preprocess_seconds + run.solve_seconds;
  json echo = cfg.echo();
  echo["model_file"] = model_path;
  echo["evaluated_on"] = run.splits.validation.empty() ? "none" : "validation";
  report.config_json = echo.dump();
  if (cfg.no_timing) strip_timing(report);
  emit_report(report, cfg.output_format, report_path);
  return 0;
}

int cmd_evaluate(const RunConfig& cfg, const std::string& model_path,
                 const std::string& subset, const std::string& report_path) {
  cfg.validate();
  if (subset != "test" && subset != "validation" && subset != "train")
    throw_config("--on must be test, validation, or train");

  ModelBundle bundle = load_model(model_path, cfg.threads);
  Dataset data = load_ratings(cfg.dataset, parse_csv_format(cfg.dataset_format),
                              cfg.rating_max);
  DatasetSplit splits = split(data.matrix, cfg.train_ratio, cfg.validation_ratio,
                              cfg.split_seed);
  if (splits.train.num_entries() != bundle.train->num_entries() ||
      splits.train.num_users() != bundle.train->num_users() ||
      splits.train.num_items() != bundle.train->num_items()) {
    std::cerr << "warning: recomputed split does not match the model's train matrix; "
                 "check --dataset/--split-seed/--train-ratio/--validation-ratio\n";
  }

  std::vector<RatingTriple> pairs;
  if (subset == "test")
    pairs = std::move(splits.test);
  else if (subset == "validation")
    pairs = std::move(splits.validation);
  else
    pairs = bundle.train->triples();
  if (pairs.empty()) throw_empty_dataset("selected subset '" + subset + "' is empty");

  EvalReport report = evaluate(bundle, pairs, parse_decode_mode(cfg.decode_mode),
                               cfg.clamp, cfg.threads);
  json echo = cfg.echo();
  echo["model_file"] = model_path;
  echo["evaluated_on"] = subset;
  report.config_json = echo.dump();
  if (cfg.no_timing) strip_timing(report);
  emit_report(report, cfg.output_format, report_path);
  return 0;
}

int cmd_predict(const RunConfig& cfg, const std::string& model_path,
                const std::string& raw_user, const std::string& raw_item) {
  ModelBundle bundle = load_model(model_path, cfg.threads);
  const double pred = predict_rating(bundle, raw_user, raw_item,
                                     parse_decode_mode(cfg.decode_mode), cfg.clamp);
  if (cfg.output_format == "csv") {
    std::cout << "user,item,prediction\n"
              << raw_user << ',' << raw_item << ',' << pred << '\n';
  } else {
    json j;
    j["user"] = raw_user;
    j["item"] = raw_item;
    j["prediction"] = pred;
    std::cout << j.dump() << '\n';
  }
  return 0;
}

struct SweepGrid {
  // key -> values, in the order the --grid flags were given
  std::vector<std::pair<std::string, std::vector<double>>> axes;
};

SweepGrid parse_grid(const std::vector<std::string>& specs) {
  static const std::vector<std::string> known = {"k", "l",  "n",     "dz",
                                                 "m", "dh", "lambda"};
  SweepGrid grid;
  for (const auto& spec : specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos)
      throw_config("--grid expects key=v1,v2,..., got '" + spec + "'");
    std::string key = spec.substr(0, eq);
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw_config("--grid key '" + key + "' is not one of k,l,n,dz,m,dh,lambda");
    std::vector<double> values;
    std::stringstream ss(spec.substr(eq + 1));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        values.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw_config("--grid value '" + tok + "' is not numeric");
      }
    }
    if (values.empty()) throw_config("--grid axis '" + key + "' has no values");
    grid.axes.emplace_back(std::move(key), std::move(values));
  }
  if (grid.axes.empty()) throw_config("sweep needs at least one --grid axis");
  return grid;
}

void apply_grid_point(RunConfig& cfg, const SweepGrid& grid,
                      const std::vector<std::size_t>& choice) {
  for (std::size_t a = 0; a < grid.axes.size(); ++a) {
    const auto& [key, values] = grid.axes[a];
    const double v = values[choice[a]];
    if (key == "lambda") {
      cfg.lambda = v;
      continue;
    }
    const int iv = static_cast<int>(v);
    if (static_cast<double>(iv) != v)
      throw_config("--grid axis '" + key + "' needs integer values");
    if (key == "k") cfg.k = iv;
    else if (key == "l") cfg.l = iv;
    else if (key == "n") cfg.n = iv;
    else if (key == "dz") cfg.d_z = iv;
    else if (key == "m") cfg.m = iv;
    else if (key == "dh") cfg.d_h = iv;
  }
}

int cmd_sweep(const RunConfig& base, const std::vector<std::string>& grid_specs,
              const std::string& subset, const std::string& out_path) {
  base.validate();
  SweepGrid grid = parse_grid(grid_specs);

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw_io("cannot open sweep output file: " + out_path);
    out = &file;
  }
  *out << "k,l,n,d_z,m,d_h,lambda,seed,split_seed,rmse,mae,preprocess_seconds,"
          "solve_seconds,test_seconds,trainable_params,n_test\n";

  std::vector<std::size_t> choice(grid.axes.size(), 0);
  while (true) {
    RunConfig cfg = base;
    apply_grid_point(cfg, grid, choice);
    cfg.validate();
    TrainedRun run = run_training(cfg);
    const auto& pairs = subset == "validation" ? run.splits.validation : run.splits.test;
    if (pairs.empty()) throw_empty_dataset("sweep subset '" + subset + "' is empty");
    EvalReport report = evaluate(run.bundle, pairs, parse_decode_mode(cfg.decode_mode),
                                 cfg.clamp, cfg.threads);
    std::ostringstream row;
    row.precision(17);
    row << cfg.k << ',' << cfg.l << ',' << cfg.n << ',' << cfg.d_z << ',' << cfg.m << ','
        << cfg.d_h << ',' << cfg.lambda << ',' << cfg.seed << ',' << cfg.split_seed << ','
        << report.rmse << ',' << report.mae << ','
        << (base.no_timing ? 0.0 : run.preprocess_seconds) << ','
        << (base.no_timing ? 0.0 : run.solve_seconds) << ','
        << (base.no_timing ? 0.0 : report.test_seconds) << ','
        << report.trainable_params << ',' << report.n_test;
    *out << row.str() << '\n';

    std::size_t axis = grid.axes.size();
    while (axis > 0) {
      --axis;
      if (++choice[axis] < grid.axes[axis].second.size()) break;
      choice[axis] = 0;
      if (axis == 0) return 0;
    }
  }
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::config:
      return 1;
    case ErrorKind::io:
    case ErrorKind::parse:
    case ErrorKind::empty_dataset:
      return 2;
    case ErrorKind::numeric:
      return 3;
    case ErrorKind::state:
    case ErrorKind::contract:
      return 3;
  }
  return 3;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Broad-learning collaborative filtering over sparse ratings"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_path;
  std::string model_path = "model.bcfm";
  std::string report_path;
  std::string subset = "test";
  std::string raw_user, raw_item;
  std::vector<std::string> grid_specs;
  std::string sweep_out;

  // the config file seeds the defaults, so it is applied before CLI11 lets
  // flags and environment variables override them
  for (int a = 1; a < argc; ++a) {
    const std::string arg = argv[a];
    if (arg == "--config" && a + 1 < argc)
      config_path = argv[a + 1];
    else if (arg.rfind("--config=", 0) == 0)
      config_path = arg.substr(9);
  }
  if (!config_path.empty()) {
    try {
      apply_config_file(cfg, config_path);
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << '\n';
      return exit_code_for(e);
    }
  }

  auto* train_cmd = app.add_subcommand("train", "fit a model and report validation metrics");
  add_common_options(train_cmd, cfg, config_path, /*needs_dataset=*/true);
  train_cmd->add_option("-o,--output", model_path, "model file to write");
  train_cmd->add_option("--report", report_path, "write the report here instead of stdout");
  std::string dump_path;
  train_cmd->add_option("--dump-xy", dump_path,
                        "write the assembled X/Y training matrices as CSV");

  auto* eval_cmd = app.add_subcommand("evaluate", "score a saved model on a split subset");
  add_common_options(eval_cmd, cfg, config_path, /*needs_dataset=*/true);
  eval_cmd->add_option("--model", model_path, "model file")->required();
  eval_cmd->add_option("--on", subset, "subset to score: test, validation, or train");
  eval_cmd->add_option("--report", report_path, "write the report here instead of stdout");

  auto* predict_cmd = app.add_subcommand("predict", "predict one user-item rating");
  add_common_options(predict_cmd, cfg, config_path, /*needs_dataset=*/false);
  predict_cmd->add_option("--model", model_path, "model file")->required();
  predict_cmd->add_option("--user", raw_user, "raw user id")->required();
  predict_cmd->add_option("--item", raw_item, "raw item id")->required();

  auto* sweep_cmd = app.add_subcommand("sweep", "grid-search hyperparameters, CSV out");
  add_common_options(sweep_cmd, cfg, config_path, /*needs_dataset=*/true);
  sweep_cmd->add_option("--grid", grid_specs,
                        "axis as key=v1,v2,... (k,l,n,dz,m,dh,lambda); repeatable")
      ->required();
  sweep_cmd->add_option("--on", subset, "subset to score: test or validation");
  sweep_cmd->add_option("-o,--output", sweep_out, "CSV file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp" ||
        e.get_name() == "CallForVersion")
      return app.exit(e);
    std::cerr << e.what() << '\n';
    return 1;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(cfg, model_path, report_path, dump_path);
    if (eval_cmd->parsed()) return cmd_evaluate(cfg, model_path, subset, report_path);
    if (predict_cmd->parsed()) return cmd_predict(cfg, model_path, raw_user, raw_item);
    if (sweep_cmd->parsed()) return cmd_sweep(cfg, grid_specs, subset, sweep_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
