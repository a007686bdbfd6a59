// smoothcal: synthetic multi-annotator data, agreement/confidence-aware
// label smoothing, soft-target training, and calibration reports.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "smoothcal/errors.hpp"
#include "smoothcal/harness.hpp"
#include "smoothcal/version.hpp"

namespace {

using nlohmann::json;
using namespace smoothcal;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    try {
      std::size_t used = 0;
      const double value = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      values.push_back(value);
    } catch (const std::exception&) {
      throw ConfigError("cannot parse '" + item + "' as a number");
    }
  }
  if (values.empty()) throw ConfigError("expected a comma-separated list of numbers");
  return values;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    try {
      seeds.push_back(std::stoull(item));
    } catch (const std::exception&) {
      throw ConfigError("cannot parse seed '" + item + "'");
    }
  }
  if (seeds.empty()) throw ConfigError("expected a comma-separated list of seeds");
  return seeds;
}

SmoothingMethod method_from_flag(const std::string& name) {
  const auto method = parse_method(name);
  if (!method) {
    throw ConfigError("unknown method '" + name +
                      "' (expected hard, vanilla, agreement-linear, "
                      "agreement-piecewise, agreement-nonlinear, confidence-vanilla, "
                      "confidence-linear, confidence-piecewise, confidence-nonlinear)");
  }
  return *method;
}

double round1(double x) { return std::round(x * 10.0) / 10.0; }

// Both renderings read the same stored summary, so the human table and the
// machine output always carry identical numbers.
void render_experiment_summary(const json& summary, bool as_json) {
  const auto& metrics = summary.at("metrics");
  const double auc_mean = round1(metrics.at("auc").at("mean").get<double>());
  const double auc_std = round1(metrics.at("auc").at("std").get<double>());
  const double ece_mean = round1(metrics.at("ece").at("mean").get<double>());
  const double ece_std = round1(metrics.at("ece").at("std").get<double>());
  if (as_json) {
    json out{{"name", summary.at("name")},
             {"method", summary.at("method")},
             {"param", summary.at("param")},
             {"n_seeds", metrics.at("n_seeds")},
             {"auc_mean", auc_mean},
             {"auc_std", auc_std},
             {"ece_mean", ece_mean},
             {"ece_std", ece_std}};
    std::cout << out.dump(2) << '\n';
    return;
  }
  std::string label = summary.at("method").get<std::string>();
  if (!summary.at("param").is_null()) {
    label += " (" + std::to_string(summary.at("param").get<double>()) + ")";
  }
  std::printf("%-32s AUC %s   ECE %s   (%zu seeds)\n", label.c_str(),
              format_table_cell(auc_mean, auc_std).c_str(),
              format_table_cell(ece_mean, ece_std).c_str(),
              metrics.at("n_seeds").get<std::size_t>());
}

void render_sweep_summary(const json& summary, bool as_json) {
  auto cell = [](const json& block) {
    return json{{"auc_mean", round1(block.at("auc").at("mean").get<double>())},
                {"auc_std", round1(block.at("auc").at("std").get<double>())},
                {"ece_mean", round1(block.at("ece").at("mean").get<double>())},
                {"ece_std", round1(block.at("ece").at("std").get<double>())}};
  };
  if (as_json) {
    json out{{"name", summary.at("name")},
             {"method", summary.at("method")},
             {"baseline", cell(summary.at("baseline"))},
             {"selected", summary.at("selected")},
             {"selection_reason", summary.at("selection_reason")}};
    json points = json::array();
    for (const auto& point : summary.at("points")) {
      json entry = cell(point);
      entry["param"] = point.at("param");
      entry["delta_auc"] = round1(point.at("delta_auc").get<double>());
      entry["ece_improvement_pct"] = round1(point.at("ece_improvement_pct").get<double>());
      points.push_back(std::move(entry));
    }
    out["points"] = std::move(points);
    std::cout << out.dump(2) << '\n';
    return;
  }
  const auto& base = summary.at("baseline");
  std::printf("sweep %s (%s)\n", summary.at("name").get<std::string>().c_str(),
              summary.at("method").get<std::string>().c_str());
  std::printf("%-14s AUC %-12s ECE %-12s %10s %16s\n", "param", "", "", "dAUC",
              "ECE improv %");
  std::printf("%-14s AUC %-12s ECE %-12s %10s %16s\n", "baseline",
              format_table_cell(round1(base.at("auc").at("mean").get<double>()),
                                round1(base.at("auc").at("std").get<double>()))
                  .c_str(),
              format_table_cell(round1(base.at("ece").at("mean").get<double>()),
                                round1(base.at("ece").at("std").get<double>()))
                  .c_str(),
              "-", "-");
  for (const auto& point : summary.at("points")) {
    char param_text[32];
    std::snprintf(param_text, sizeof(param_text), "%.6g", point.at("param").get<double>());
    std::printf("%-14s AUC %-12s ECE %-12s %10.1f %16.1f\n", param_text,
                format_table_cell(round1(point.at("auc").at("mean").get<double>()),
                                  round1(point.at("auc").at("std").get<double>()))
                    .c_str(),
                format_table_cell(round1(point.at("ece").at("mean").get<double>()),
                                  round1(point.at("ece").at("std").get<double>()))
                    .c_str(),
                round1(point.at("delta_auc").get<double>()),
                round1(point.at("ece_improvement_pct").get<double>()));
  }
  if (summary.at("selected").is_null()) {
    std::printf("selected: none (%s)\n",
                summary.at("selection_reason").get<std::string>().c_str());
  } else {
    std::printf("selected: param=%.6g (%s)\n",
                summary.at("selected").at("param").get<double>(),
                summary.at("selection_reason").get<std::string>().c_str());
  }
}

json load_summary(const std::filesystem::path& dir) {
  const auto path = dir / "summary.json";
  json summary;
  try {
    summary = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw ParseError("'" + path.string() + "': invalid JSON: " + e.what());
  }
  return summary;
}

// ---------------------------------------------------------------------------
// gen-data

struct GenDataArgs {
  std::string out_dir;
  std::string config_path;
  GeneratorConfig config;
  bool has_config_file = false;
};

void run_gen_data(const GenDataArgs& args) {
  const Dataset dataset = generate(args.config);
  save(dataset, args.out_dir);

  std::size_t unanimous = 0;
  const auto count_unanimous = [&](const std::vector<AnnotatedExample>& examples) {
    for (const auto& e : examples) {
      if (e.n_pos == 0 || e.n_pos == e.n_annotators) ++unanimous;
    }
  };
  count_unanimous(dataset.train);
  count_unanimous(dataset.test);
  const auto total = dataset.train.size() + dataset.test.size();

  std::printf("wrote dataset to %s\n", args.out_dir.c_str());
  std::printf("train: %zu  test: %zu  d: %d  annotators: %d  seed: %llu\n",
              dataset.train.size(), dataset.test.size(), dataset.feature_dim,
              dataset.n_annotators,
              static_cast<unsigned long long>(args.config.seed));
  std::printf("unanimous examples: %.2f%%\n",
              100.0 * static_cast<double>(unanimous) / static_cast<double>(total));
}

// ---------------------------------------------------------------------------
// smooth

struct SmoothArgs {
  std::string dataset_dir;
  std::string method;
  std::optional<double> param;
  std::string confidences_path;
  std::string out_path;
};

void run_smooth(const SmoothArgs& args) {
  const SmoothingMethod method = method_from_flag(args.method);
  SmoothingSpec spec{method, 0.0};
  if (requires_param(method)) {
    if (!args.param) {
      throw ConfigError("method '" + args.method + "' needs --param");
    }
    spec.param = *args.param;
  }
  spec.validate();

  const Dataset dataset = load(args.dataset_dir);
  std::vector<double> confidence_values;
  const std::vector<double>* confidences_ptr = nullptr;
  if (uses_confidence(method)) {
    if (args.confidences_path.empty()) {
      throw ConfigError("method '" + args.method + "' needs --confidences");
    }
    const auto rows = read_targets_csv(args.confidences_path);
    std::unordered_map<std::string, double> by_id(rows.begin(), rows.end());
    confidence_values.reserve(dataset.train.size());
    for (const auto& example : dataset.train) {
      const auto found = by_id.find(example.id);
      if (found == by_id.end()) {
        throw MissingDataError("no confidence for training example '" + example.id + "'");
      }
      confidence_values.push_back(found->second);
    }
    confidences_ptr = &confidence_values;
  }

  const auto targets = compute_targets(spec, dataset.train, confidences_ptr);
  write_targets_csv(args.out_path, dataset.train, targets);
  std::printf("wrote %zu targets to %s\n", targets.size(), args.out_path.c_str());
}

// ---------------------------------------------------------------------------
// train / sweep

struct RunArgs {
  std::string config_path;
  std::string dataset_dir;
  std::string method;
  std::optional<double> param;
  std::string targets_path;
  std::optional<int> seed_count;
  std::string seed_list;
  std::optional<int> epochs;
  std::optional<double> learning_rate;
  std::optional<double> momentum;
  std::optional<double> weight_decay;
  std::optional<int> batch_size;
  std::string arch;
  std::optional<int> hidden_units;
  std::optional<int> checkpoint_epoch;
  std::optional<int> jobs;
  std::string name;
  std::string out_dir = "reports";
  std::string grid;
  bool as_json = false;
};

ExperimentConfig build_config(const RunArgs& args, bool is_sweep) {
  ExperimentConfig config;
  if (!args.config_path.empty()) {
    config = ExperimentConfig::from_json_string(read_text_file(args.config_path));
  }
  if (!args.dataset_dir.empty()) {
    config.dataset_path = args.dataset_dir;
    config.generator.reset();
  }
  if (!args.method.empty()) config.spec.method = method_from_flag(args.method);
  if (args.param) config.spec.param = *args.param;
  if (args.seed_count) {
    if (*args.seed_count < 1) throw ConfigError("--seeds must be >= 1");
    config.seeds.clear();
    for (int s = 1; s <= *args.seed_count; ++s) {
      config.seeds.push_back(static_cast<std::uint64_t>(s));
    }
  }
  if (!args.seed_list.empty()) config.seeds = parse_seed_list(args.seed_list);
  if (args.epochs) config.train.epochs = *args.epochs;
  if (args.learning_rate) config.train.learning_rate = *args.learning_rate;
  if (args.momentum) config.train.momentum = *args.momentum;
  if (args.weight_decay) config.train.weight_decay = *args.weight_decay;
  if (args.batch_size) config.train.batch_size = *args.batch_size;
  if (!args.arch.empty()) {
    if (args.arch == "logistic") {
      config.train.arch = Architecture::Logistic;
    } else if (args.arch == "one-hidden") {
      config.train.arch = Architecture::OneHidden;
    } else {
      throw ConfigError("unknown --arch '" + args.arch + "' (logistic or one-hidden)");
    }
  }
  if (args.hidden_units) config.train.hidden_units = *args.hidden_units;
  if (args.checkpoint_epoch) config.confidence_checkpoint_epoch = *args.checkpoint_epoch;
  if (args.jobs) config.jobs = *args.jobs;
  if (!args.name.empty()) {
    config.name = args.name;
  } else if (config.name == "experiment") {
    config.name = is_sweep ? "sweep-" + std::string(method_name(config.spec.method))
                           : std::string(method_name(config.spec.method));
  }
  if (!args.targets_path.empty() && config.spec.method != SmoothingMethod::HardLabel) {
    throw ConfigError("--targets replaces the smoothing method; do not pass both");
  }
  return config;
}

void run_train(const RunArgs& args) {
  const ExperimentConfig config = build_config(args, /*is_sweep=*/false);
  config.validate();
  const Dataset dataset = resolve_dataset(config);
  ExperimentResult result;
  if (!args.targets_path.empty()) {
    result = run_with_targets(config, dataset, read_targets_csv(args.targets_path));
  } else {
    result = run_experiment(config, dataset);
  }
  const auto report_dir = std::filesystem::path(args.out_dir) / config.name;
  emit_report(result, config, report_dir);
  if (!args.as_json) {
    std::printf("report written to %s\n", report_dir.string().c_str());
  }
  render_experiment_summary(load_summary(report_dir), args.as_json);
}

void run_sweep_command(const RunArgs& args) {
  RunArgs adjusted = args;
  if (adjusted.method.empty()) throw ConfigError("sweep needs --method");
  const SmoothingMethod method = method_from_flag(adjusted.method);
  if (method == SmoothingMethod::HardLabel) {
    throw ConfigError("the hard-label baseline has no hyperparameter to sweep");
  }
  // The per-point specs are built from the grid; seed the config with a valid
  // param so validation passes.
  std::vector<double> grid =
      adjusted.grid.empty() ? default_grid(method) : parse_double_list(adjusted.grid);
  adjusted.param = grid.front();
  const ExperimentConfig config = build_config(adjusted, /*is_sweep=*/true);
  config.validate();
  const Dataset dataset = resolve_dataset(config);
  const SweepResult result = sweep(method, grid, config, dataset);
  const auto report_dir = std::filesystem::path(args.out_dir) / config.name;
  emit_report(result, config, report_dir);
  if (!args.as_json) {
    std::printf("report written to %s\n", report_dir.string().c_str());
  }
  render_sweep_summary(load_summary(report_dir), args.as_json);
}

// ---------------------------------------------------------------------------
// report

void run_report(const std::string& dir, bool as_json) {
  const json summary = load_summary(dir);
  const std::string kind = summary.value("kind", "experiment");
  if (kind == "sweep") {
    render_sweep_summary(summary, as_json);
  } else {
    render_experiment_summary(summary, as_json);
  }
}

// ---------------------------------------------------------------------------
// selftest

void expect_near(const char* what, double got, double want, double tol) {
  if (!(std::fabs(got - want) <= tol)) {
    throw Error(std::string("selftest: ") + what + ": got " + std::to_string(got) +
                ", want " + std::to_string(want));
  }
}

void run_selftest() {
  // Smoothing arithmetic against directly evaluated formulas.
  expect_near("vanilla(1, 0.2)", smooth_vanilla(1, 0.2), 0.9, 1e-12);
  expect_near("agreement-linear(4/7, 0.1)",
              smooth_agreement_linear({4, 7}, 0.1), 0.9 * 4.0 / 7.0 + 0.05, 1e-12);
  expect_near("agreement-piecewise(5/7, 0.3)",
              smooth_agreement_piecewise({5, 7}, 0.3), 0.8, 1e-12);
  expect_near("agreement-nonlinear(7/7, 7.5)",
              smooth_agreement_nonlinear({7, 7}, 7.5), 0.977022630089974385, 1e-12);
  expect_near("confidence-piecewise(0.75, 0.3)",
              smooth_confidence_piecewise(0.75, 0.3), 0.85, 1e-12);

  // AUC against exhaustive pair counting.
  Rng rng(7);
  for (int round = 0; round < 50; ++round) {
    PredictionSet set;
    const int n = 2 + static_cast<int>(rng.below(40));
    for (int i = 0; i < n; ++i) {
      set.probs.push_back(std::round(rng.uniform() * 10.0) / 10.0);
      set.labels.push_back(rng.bernoulli(0.5) ? 1 : 0);
    }
    set.labels[0] = 1;
    set.labels[1] = 0;
    double pairs = 0.0;
    std::size_t n_pos = 0, n_neg = 0;
    for (std::size_t i = 0; i < set.probs.size(); ++i) {
      if (set.labels[i] == 0) continue;
      ++n_pos;
      for (std::size_t j = 0; j < set.probs.size(); ++j) {
        if (set.labels[j] == 1) continue;
        if (set.probs[i] > set.probs[j]) pairs += 1.0;
        if (set.probs[i] == set.probs[j]) pairs += 0.5;
      }
    }
    n_neg = set.probs.size() - n_pos;
    expect_near("auc pair counting", auc(set),
                pairs / (static_cast<double>(n_pos) * static_cast<double>(n_neg)), 1e-12);
  }

  // Single-bin ECE collapses to |accuracy - mean confidence|.
  {
    PredictionSet set{{0.9, 0.8, 0.3, 0.55}, {1, 0, 0, 1}};
    const auto [value, bins] = ece(set, 1);
    double conf_sum = 0.0, correct = 0.0;
    for (std::size_t i = 0; i < set.probs.size(); ++i) {
      conf_sum += std::max(set.probs[i], 1.0 - set.probs[i]);
      correct += ((set.probs[i] >= 0.5 ? 1 : 0) == set.labels[i]) ? 1.0 : 0.0;
    }
    expect_near("1-bin ece", value, std::fabs(correct - conf_sum) / 4.0, 1e-12);
    if (bins.size() != 1) throw Error("selftest: 1-bin ece bin count");
  }

  // Analytic gradient against central differences on a small network.
  {
    TrainingSet batch;
    Rng grng(11);
    for (int i = 0; i < 8; ++i) {
      std::vector<double> x{grng.normal(), grng.normal(), grng.normal()};
      batch.features.push_back(x);
      batch.targets.push_back(grng.uniform());
    }
    ClassifierParams params = init_params(3, 3, Architecture::OneHidden, 4);
    const auto grads = gradient(params, batch.features, batch.targets, 1e-3);
    const double h = 1e-5;
    for (std::size_t i = 0; i < params.values.size(); i += 3) {
      ClassifierParams plus = params, minus = params;
      plus.values[i] += h;
      minus.values[i] -= h;
      const double fd = (penalized_loss(plus, batch.features, batch.targets, 1e-3) -
                         penalized_loss(minus, batch.features, batch.targets, 1e-3)) /
                        (2.0 * h);
      const double denom = std::max({1e-6, std::fabs(fd), std::fabs(grads[i])});
      if (std::fabs(fd - grads[i]) / denom > 1e-4) {
        throw Error("selftest: gradient check failed at coordinate " + std::to_string(i));
      }
    }
  }

  std::printf("selftest: smoothing arithmetic ok\n");
  std::printf("selftest: auc pair counting ok\n");
  std::printf("selftest: ece binning ok\n");
  std::printf("selftest: gradient check ok\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"agreement- and confidence-aware label smoothing experiments"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  GenDataArgs gen_args;
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic annotated dataset");
  gen->add_option("--out", gen_args.out_dir, "output directory")->required();
  gen->add_option("--config", gen_args.config_path, "generator config JSON file");
  gen->add_option("--n-train", gen_args.config.n_train, "training examples");
  gen->add_option("--n-test", gen_args.config.n_test, "test examples");
  gen->add_option("--dim", gen_args.config.feature_dim, "feature dimension");
  gen->add_option("--n-annotators", gen_args.config.n_annotators, "annotators per example");
  gen->add_option("--beta-a", gen_args.config.difficulty_alpha, "difficulty Beta shape a");
  gen->add_option("--beta-b", gen_args.config.difficulty_beta, "difficulty Beta shape b");
  gen->add_option("--class-sep", gen_args.config.class_separation, "class mean magnitude");
  gen->add_option("--noise-sigma", gen_args.config.noise_sigma, "feature noise sigma");
  gen->add_option("--seed", gen_args.config.seed, "generator seed");
  gen->add_flag("--tie-break", gen_args.config.tie_break_positive,
                "allow even annotator counts; ties go to the positive class");

  SmoothArgs smooth_args;
  auto* smooth = app.add_subcommand("smooth", "write soft targets for a dataset");
  smooth->add_option("--dataset", smooth_args.dataset_dir, "dataset directory")->required();
  smooth->add_option("--method", smooth_args.method, "labeling method")->required();
  double smooth_param = 0.0;
  auto* smooth_param_opt = smooth->add_option("--param", smooth_param, "hyperparameter");
  smooth->add_option("--confidences", smooth_args.confidences_path,
                     "CSV id,confidence for confidence-aware methods");
  smooth->add_option("--out", smooth_args.out_path, "output targets CSV")->required();

  RunArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train over seeds and report metrics");
  RunArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand("sweep", "sweep a hyperparameter grid");
  for (auto& wiring : {std::pair{train_cmd, &train_args}, {sweep_cmd, &sweep_args}}) {
    CLI::App* cmd = wiring.first;
    RunArgs* args = wiring.second;
    cmd->add_option("--config", args->config_path, "experiment config JSON file");
    cmd->add_option("--dataset", args->dataset_dir, "dataset directory");
    cmd->add_option("--method", args->method, "labeling method");
    cmd->add_option_function<double>(
        "--param", [args](const double& v) { args->param = v; }, "hyperparameter");
    cmd->add_option_function<int>(
        "--seeds", [args](const int& v) { args->seed_count = v; },
        "number of seeds (uses 1..N)");
    cmd->add_option("--seed-list", args->seed_list, "explicit comma-separated seeds");
    cmd->add_option_function<int>(
        "--epochs", [args](const int& v) { args->epochs = v; }, "training epochs");
    cmd->add_option_function<double>(
        "--lr", [args](const double& v) { args->learning_rate = v; }, "learning rate");
    cmd->add_option_function<double>(
        "--momentum", [args](const double& v) { args->momentum = v; }, "momentum");
    cmd->add_option_function<double>(
        "--weight-decay", [args](const double& v) { args->weight_decay = v; },
        "weight decay");
    cmd->add_option_function<int>(
        "--batch-size", [args](const int& v) { args->batch_size = v; }, "batch size");
    cmd->add_option("--arch", args->arch, "logistic or one-hidden");
    cmd->add_option_function<int>(
        "--hidden", [args](const int& v) { args->hidden_units = v; }, "hidden units");
    cmd->add_option_function<int>(
        "--checkpoint-epoch", [args](const int& v) { args->checkpoint_epoch = v; },
        "stage-one epoch supplying confidences (0 = final)");
    cmd->add_option_function<int>(
        "--jobs", [args](const int& v) { args->jobs = v; }, "concurrent work units");
    cmd->add_option("--name", args->name, "experiment name (report subdirectory)");
    cmd->add_option("--out", args->out_dir, "reports root directory");
    cmd->add_flag("--json", args->as_json, "machine-readable output");
  }
  train_cmd->add_option("--targets", train_args.targets_path,
                        "precomputed targets CSV (replaces --method)");
  sweep_cmd->add_option("--grid", sweep_args.grid,
                        "comma-separated grid values (default: method grid)");

  std::string report_dir;
  bool report_json = false;
  auto* report_cmd = app.add_subcommand("report", "re-render a stored report");
  report_cmd->add_option("--dir", report_dir, "report directory")->required();
  report_cmd->add_flag("--json", report_json, "machine-readable output");

  auto* selftest_cmd = app.add_subcommand("selftest", "run built-in oracle checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (gen->parsed()) {
      if (!gen_args.config_path.empty()) {
        GeneratorConfig from_file =
            GeneratorConfig::from_json_string(read_text_file(gen_args.config_path));
        // Inline flags override the file.
        for (const auto& [name, apply] : std::vector<
                 std::pair<std::string, std::function<void(GeneratorConfig&)>>>{
                 {"--n-train", [&](GeneratorConfig& c) { c.n_train = gen_args.config.n_train; }},
                 {"--n-test", [&](GeneratorConfig& c) { c.n_test = gen_args.config.n_test; }},
                 {"--dim", [&](GeneratorConfig& c) { c.feature_dim = gen_args.config.feature_dim; }},
                 {"--n-annotators", [&](GeneratorConfig& c) { c.n_annotators = gen_args.config.n_annotators; }},
                 {"--beta-a", [&](GeneratorConfig& c) { c.difficulty_alpha = gen_args.config.difficulty_alpha; }},
                 {"--beta-b", [&](GeneratorConfig& c) { c.difficulty_beta = gen_args.config.difficulty_beta; }},
                 {"--class-sep", [&](GeneratorConfig& c) { c.class_separation = gen_args.config.class_separation; }},
                 {"--noise-sigma", [&](GeneratorConfig& c) { c.noise_sigma = gen_args.config.noise_sigma; }},
                 {"--seed", [&](GeneratorConfig& c) { c.seed = gen_args.config.seed; }},
                 {"--tie-break", [&](GeneratorConfig& c) { c.tie_break_positive = gen_args.config.tie_break_positive; }}}) {
          if (gen->count(name) > 0) apply(from_file);
        }
        gen_args.config = from_file;
      }
      run_gen_data(gen_args);
    } else if (smooth->parsed()) {
      if (smooth_param_opt->count() > 0) smooth_args.param = smooth_param;
      run_smooth(smooth_args);
    } else if (train_cmd->parsed()) {
      run_train(train_args);
    } else if (sweep_cmd->parsed()) {
      run_sweep_command(sweep_args);
    } else if (report_cmd->parsed()) {
      run_report(report_dir, report_json);
    } else if (selftest_cmd->parsed()) {
      run_selftest();
    }
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const UndefinedMetricError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidInputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const MissingDataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitOk;
}
