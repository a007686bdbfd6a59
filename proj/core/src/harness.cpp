#include "smoothcal/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <thread>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "smoothcal/errors.hpp"
#include "smoothcal/version.hpp"

namespace smoothcal {

namespace {

using nlohmann::json;

constexpr std::uint64_t kStageTwoStream = 0x7374616765322ULL;  // stage-two seed stream

EvalSet eval_view(const std::vector<AnnotatedExample>& examples) {
  EvalSet view;
  view.features.reserve(examples.size());
  view.gold.reserve(examples.size());
  for (const auto& example : examples) {
    view.features.push_back(example.features);
    view.gold.push_back(example.gold);
  }
  return view;
}

std::vector<std::vector<double>> features_of(const std::vector<AnnotatedExample>& examples) {
  std::vector<std::vector<double>> features;
  features.reserve(examples.size());
  for (const auto& example : examples) features.push_back(example.features);
  return features;
}

// Index-parallel loop; results must be written to distinct slots so the
// schedule cannot influence the output.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(jobs), count);
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& thread : pool) thread.join();
  if (first_error) std::rethrow_exception(first_error);
}

json train_config_to_json(const TrainConfig& config) {
  return json{{"learning_rate", config.learning_rate},
              {"momentum", config.momentum},
              {"weight_decay", config.weight_decay},
              {"epochs", config.epochs},
              {"batch_size", config.batch_size},
              {"architecture", architecture_name(config.arch)},
              {"hidden_units", config.hidden_units}};
}

TrainConfig train_config_from_json(const json& doc) {
  TrainConfig config;
  config.learning_rate = doc.value("learning_rate", config.learning_rate);
  config.momentum = doc.value("momentum", config.momentum);
  config.weight_decay = doc.value("weight_decay", config.weight_decay);
  config.epochs = doc.value("epochs", config.epochs);
  config.batch_size = doc.value("batch_size", config.batch_size);
  config.hidden_units = doc.value("hidden_units", config.hidden_units);
  const std::string arch = doc.value("architecture", std::string("one_hidden"));
  if (arch == "logistic") {
    config.arch = Architecture::Logistic;
  } else if (arch == "one_hidden") {
    config.arch = Architecture::OneHidden;
  } else {
    throw ConfigError("unknown architecture '" + arch + "'");
  }
  return config;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

// Read-only state shared by all seeds of one experiment.
struct RunContext {
  TrainingSet training;
  EvalSet train_eval;
  EvalSet test_eval;
};

RunContext make_context(const Dataset& dataset, std::vector<double> targets) {
  RunContext context;
  context.training.features = features_of(dataset.train);
  context.training.targets = std::move(targets);
  context.train_eval = eval_view(dataset.train);
  context.test_eval = eval_view(dataset.test);
  return context;
}

// `train_seed` drives the optimizer; `report_seed` names the run in results
// and error messages (they differ for stage-two trainings).
SeedResult run_seed(const RunContext& context, TrainConfig config,
                    std::uint64_t train_seed, std::uint64_t report_seed,
                    const char* stage_tag) {
  config.seed = train_seed;
  try {
    TrainedModel model =
        train(context.training, context.train_eval, context.test_eval, config);
    SeedResult result;
    result.seed = report_seed;
    result.test_report = model.epoch_history.back().test;
    result.epoch_history = std::move(model.epoch_history);
    return result;
  } catch (const DivergenceError& e) {
    throw DivergenceError(std::string(stage_tag) + "seed " +
                          std::to_string(report_seed) + ": " + e.what());
  }
}

ExperimentResult assemble(const ExperimentConfig& config,
                          std::vector<SeedResult> per_seed) {
  ExperimentResult result;
  result.per_seed = std::move(per_seed);
  std::vector<CalibrationReport> reports;
  reports.reserve(result.per_seed.size());
  for (const auto& seed_result : result.per_seed) {
    reports.push_back(seed_result.test_report);
  }
  result.summary = aggregate(reports);
  result.config_hash = config.config_hash();
  result.artifact_version = kVersion;
  return result;
}

ExperimentResult run_single_stage(const ExperimentConfig& config, const Dataset& dataset,
                                  std::vector<double> targets, const char* stage_tag) {
  const RunContext context = make_context(dataset, std::move(targets));
  std::vector<SeedResult> per_seed(config.seeds.size());
  parallel_for(config.seeds.size(), config.jobs, [&](std::size_t i) {
    per_seed[i] =
        run_seed(context, config.train, config.seeds[i], config.seeds[i], stage_tag);
  });
  return assemble(config, std::move(per_seed));
}

std::vector<double> hard_targets(const Dataset& dataset) {
  return compute_targets(SmoothingSpec{SmoothingMethod::HardLabel, 0.0}, dataset.train);
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << contents;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string format_metric(double value_x100) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.4f", value_x100);
  return buffer;
}

std::string format_param(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.6g", value);
  return buffer;
}

std::string per_seed_rows(const ExperimentResult& result, const std::string& prefix) {
  std::string rows;
  for (const auto& seed_result : result.per_seed) {
    rows += prefix + std::to_string(seed_result.seed) + ',' +
            format_metric(100.0 * seed_result.test_report.auc) + ',' +
            format_metric(100.0 * seed_result.test_report.ece) + '\n';
  }
  return rows;
}

std::string curves_rows(const ExperimentResult& result) {
  std::string rows;
  for (const auto& seed_result : result.per_seed) {
    for (std::size_t epoch = 0; epoch < seed_result.epoch_history.size(); ++epoch) {
      const auto& metrics = seed_result.epoch_history[epoch];
      const std::string head =
          std::to_string(epoch + 1) + ',' + std::to_string(seed_result.seed) + ',';
      rows += head + "train," + format_metric(100.0 * metrics.train.auc) + ',' +
              format_metric(100.0 * metrics.train.ece) + '\n';
      rows += head + "test," + format_metric(100.0 * metrics.test.auc) + ',' +
              format_metric(100.0 * metrics.test.ece) + '\n';
    }
  }
  return rows;
}

json summary_block(const MetricSummary& summary) {
  return json{{"auc", json{{"mean", summary.mean_auc}, {"std", summary.std_auc}}},
              {"ece", json{{"mean", summary.mean_ece}, {"std", summary.std_ece}}},
              {"auc_cell", format_table_cell(summary.mean_auc, summary.std_auc)},
              {"ece_cell", format_table_cell(summary.mean_ece, summary.std_ece)},
              {"n_seeds", summary.n_reports}};
}

}  // namespace

std::vector<std::uint64_t> default_seeds() {
  return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
}

void ExperimentConfig::validate() const {
  if (dataset_path.has_value() == generator.has_value()) {
    throw ConfigError("exactly one dataset source (path or generator) must be set");
  }
  if (generator) generator->validate();
  spec.validate();
  train.validate();
  if (stage_two) stage_two->validate();
  if (seeds.empty()) throw ConfigError("seed list must not be empty");
  std::vector<std::uint64_t> sorted(seeds);
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ConfigError("seed list must not contain duplicates");
  }
  if (confidence_checkpoint_epoch < 0 || confidence_checkpoint_epoch > train.epochs) {
    throw ConfigError("confidence checkpoint epoch must be 0 (final) or within "
                      "[1, epochs]");
  }
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
}

std::string ExperimentConfig::to_json_string() const {
  json doc;
  doc["name"] = name;
  doc["dataset_path"] = dataset_path ? json(*dataset_path) : json();
  doc["generator"] =
      generator ? json::parse(generator->to_json_string()) : json();
  doc["method"] = method_name(spec.method);
  doc["param"] = requires_param(spec.method) ? json(spec.param) : json();
  doc["train"] = train_config_to_json(train);
  doc["stage_two"] = stage_two ? train_config_to_json(*stage_two) : json();
  doc["seeds"] = seeds;
  doc["confidence_checkpoint_epoch"] = confidence_checkpoint_epoch;
  doc["jobs"] = jobs;
  return doc.dump(2);
}

ExperimentConfig ExperimentConfig::from_json_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("experiment config is not valid JSON: ") + e.what());
  }
  ExperimentConfig config;
  config.name = doc.value("name", config.name);
  if (doc.contains("dataset_path") && !doc["dataset_path"].is_null()) {
    config.dataset_path = doc["dataset_path"].get<std::string>();
  }
  if (doc.contains("generator") && !doc["generator"].is_null()) {
    config.generator = GeneratorConfig::from_json_string(doc["generator"].dump());
  }
  if (doc.contains("method")) {
    const auto method = parse_method(doc["method"].get<std::string>());
    if (!method) {
      throw ConfigError("unknown method '" + doc["method"].get<std::string>() + "'");
    }
    config.spec.method = *method;
  }
  if (doc.contains("param") && !doc["param"].is_null()) {
    config.spec.param = doc["param"].get<double>();
  }
  if (doc.contains("train")) config.train = train_config_from_json(doc["train"]);
  if (doc.contains("stage_two") && !doc["stage_two"].is_null()) {
    config.stage_two = train_config_from_json(doc["stage_two"]);
  }
  if (doc.contains("seeds")) {
    config.seeds = doc["seeds"].get<std::vector<std::uint64_t>>();
  }
  config.confidence_checkpoint_epoch =
      doc.value("confidence_checkpoint_epoch", config.confidence_checkpoint_epoch);
  config.jobs = doc.value("jobs", config.jobs);
  return config;
}

std::string ExperimentConfig::config_hash() const {
  char buffer[24];
  std::snprintf(buffer, sizeof(buffer), "%016llx",
                static_cast<unsigned long long>(fnv1a(to_json_string())));
  return buffer;
}

Dataset resolve_dataset(const ExperimentConfig& config) {
  if (config.generator) return generate(*config.generator);
  if (config.dataset_path) return load(*config.dataset_path);
  throw ConfigError("no dataset source configured");
}

ExperimentResult run_baseline(const ExperimentConfig& config, const Dataset& dataset) {
  config.validate();
  if (config.spec.method != SmoothingMethod::HardLabel) {
    throw ConfigError("run_baseline expects the hard-label method");
  }
  return run_single_stage(config, dataset, hard_targets(dataset), "");
}

ExperimentResult run_agreement(const ExperimentConfig& config, const Dataset& dataset) {
  config.validate();
  if (uses_confidence(config.spec.method) ||
      config.spec.method == SmoothingMethod::HardLabel) {
    throw ConfigError("run_agreement expects vanilla or an agreement-aware method");
  }
  return run_single_stage(config, dataset,
                          compute_targets(config.spec, dataset.train), "");
}

StageOneConfidences compute_stage_one(const ExperimentConfig& config,
                                      const Dataset& dataset) {
  config.validate();
  TrainConfig stage_one_config = config.train;
  if (config.confidence_checkpoint_epoch > 0) {
    stage_one_config.epochs = config.confidence_checkpoint_epoch;
  }
  TrainingSet training;
  training.features = features_of(dataset.train);
  training.targets = hard_targets(dataset);

  StageOneConfidences stage_one;
  stage_one.seeds = config.seeds;
  stage_one.per_seed.resize(config.seeds.size());
  parallel_for(config.seeds.size(), config.jobs, [&](std::size_t i) {
    TrainConfig seed_config = stage_one_config;
    seed_config.seed = config.seeds[i];
    try {
      const ClassifierParams params = fit(training, seed_config);
      stage_one.per_seed[i] = confidences(params, training.features);
    } catch (const DivergenceError& e) {
      throw DivergenceError("stage 1, seed " + std::to_string(config.seeds[i]) + ": " +
                            e.what());
    }
  });
  return stage_one;
}

ExperimentResult run_confidence(const ExperimentConfig& config, const Dataset& dataset,
                                const StageOneConfidences* stage_one) {
  config.validate();
  if (!uses_confidence(config.spec.method)) {
    throw ConfigError("run_confidence expects a confidence-aware method");
  }
  StageOneConfidences local;
  if (stage_one == nullptr) {
    local = compute_stage_one(config, dataset);
    stage_one = &local;
  }
  if (stage_one->seeds != config.seeds ||
      stage_one->per_seed.size() != config.seeds.size()) {
    throw ConfigError("stage-one confidences do not match the configured seed list");
  }
  for (const auto& per_seed : stage_one->per_seed) {
    if (per_seed.size() != dataset.train.size()) {
      throw InvalidInputError("stage-one confidence count does not match the "
                              "training split");
    }
  }

  const TrainConfig stage_two_config = config.stage_two.value_or(config.train);
  const EvalSet train_eval = eval_view(dataset.train);
  const EvalSet test_eval = eval_view(dataset.test);
  const auto features = features_of(dataset.train);

  std::vector<SeedResult> per_seed(config.seeds.size());
  parallel_for(config.seeds.size(), config.jobs, [&](std::size_t i) {
    const std::uint64_t seed = config.seeds[i];
    // Stage 2 sees features and targets only; gold labels influenced it
    // solely through the stage-1 confidences baked into those targets.
    RunContext context;
    context.training.features = features;
    context.training.targets =
        compute_targets(config.spec, dataset.train, &stage_one->per_seed[i]);
    context.train_eval = train_eval;
    context.test_eval = test_eval;
    per_seed[i] = run_seed(context, stage_two_config,
                           derive_seed(seed, kStageTwoStream), seed, "stage 2, ");
  });
  return assemble(config, std::move(per_seed));
}

ExperimentResult run_with_targets(
    const ExperimentConfig& config, const Dataset& dataset,
    const std::vector<std::pair<std::string, double>>& targets) {
  config.validate();
  std::unordered_map<std::string, double> by_id;
  by_id.reserve(targets.size());
  for (const auto& [id, value] : targets) {
    if (!by_id.emplace(id, value).second) {
      throw InvalidInputError("duplicate target for id '" + id + "'");
    }
    if (!(value >= 0.0) || value > 1.0) {
      throw InvalidInputError("target for id '" + id + "' outside [0, 1]");
    }
  }
  std::vector<double> ordered;
  ordered.reserve(dataset.train.size());
  for (const auto& example : dataset.train) {
    const auto found = by_id.find(example.id);
    if (found == by_id.end()) {
      throw MissingDataError("no target for training example '" + example.id + "'");
    }
    ordered.push_back(found->second);
  }
  return run_single_stage(config, dataset, std::move(ordered), "");
}

ExperimentResult run_experiment(const ExperimentConfig& config, const Dataset& dataset) {
  if (config.spec.method == SmoothingMethod::HardLabel) {
    return run_baseline(config, dataset);
  }
  if (uses_confidence(config.spec.method)) {
    return run_confidence(config, dataset);
  }
  return run_agreement(config, dataset);
}

std::vector<double> default_grid(SmoothingMethod method) {
  std::vector<double> grid;
  switch (method) {
    case SmoothingMethod::Vanilla:
    case SmoothingMethod::AgreementLinear:
    case SmoothingMethod::ConfidenceVanilla:
    case SmoothingMethod::ConfidenceLinear:
      for (int i = 1; i <= 19; ++i) grid.push_back(i / 20.0);  // 0.05 .. 0.95
      return grid;
    case SmoothingMethod::AgreementPiecewise:
    case SmoothingMethod::ConfidencePiecewise:
      for (int i = 1; i <= 10; ++i) grid.push_back(i / 20.0);  // 0.05 .. 0.5
      return grid;
    case SmoothingMethod::AgreementNonlinear:
    case SmoothingMethod::ConfidenceNonlinear:
      for (int i = 1; i <= 15; ++i) grid.push_back(i);  // 1 .. 15
      return grid;
    case SmoothingMethod::HardLabel:
      break;
  }
  throw ConfigError("the hard-label baseline has no hyperparameter to sweep");
}

SweepResult sweep(SmoothingMethod method, std::span<const double> grid,
                  const ExperimentConfig& config, const Dataset& dataset) {
  if (grid.empty()) throw ConfigError("sweep grid must not be empty");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) {
      throw ConfigError("sweep grid values must be strictly increasing");
    }
  }
  // Validate the whole grid before any training starts.
  for (double value : grid) {
    SmoothingSpec{method, value}.validate();
  }

  ExperimentConfig baseline_config = config;
  baseline_config.spec = SmoothingSpec{SmoothingMethod::HardLabel, 0.0};
  baseline_config.validate();

  SweepResult result;
  result.method = method;
  result.grid.assign(grid.begin(), grid.end());
  result.baseline = run_baseline(baseline_config, dataset);

  std::optional<StageOneConfidences> stage_one;
  if (uses_confidence(method)) {
    ExperimentConfig stage_config = config;
    stage_config.spec = SmoothingSpec{method, grid.front()};
    stage_one = compute_stage_one(stage_config, dataset);
  }

  result.points.reserve(grid.size());
  for (double value : grid) {
    ExperimentConfig point_config = config;
    point_config.spec = SmoothingSpec{method, value};
    SweepPoint point;
    point.param = value;
    point.result = uses_confidence(method)
                       ? run_confidence(point_config, dataset, &*stage_one)
                       : run_agreement(point_config, dataset);
    result.points.push_back(std::move(point));
  }
  return result;
}

Selection select_best(const SweepResult& sweep_result) {
  const double baseline_auc = sweep_result.baseline.summary.mean_auc;
  Selection selection;
  for (std::size_t i = 0; i < sweep_result.points.size(); ++i) {
    const auto& point = sweep_result.points[i];
    if (!(point.result.summary.mean_auc > baseline_auc)) continue;
    if (!selection.index ||
        point.result.summary.mean_ece <
            sweep_result.points[*selection.index].result.summary.mean_ece) {
      // Strict < keeps the earlier (smaller) hyperparameter on exact ties.
      selection.index = i;
      selection.param = point.param;
    }
  }
  if (selection.index) {
    selection.reason = "lowest mean ECE among points with mean AUC above baseline";
  } else {
    selection.reason = "no grid point has mean AUC above the baseline";
  }
  return selection;
}

double ece_improvement_pct(double baseline_ece, double method_ece) {
  if (baseline_ece == 0.0 && method_ece == 0.0) return 0.0;
  return 100.0 * (baseline_ece - method_ece) / baseline_ece;
}

void emit_report(const ExperimentResult& result, const ExperimentConfig& config,
                 const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());

  json summary;
  summary["kind"] = "experiment";
  summary["artifact_version"] = result.artifact_version;
  summary["config_hash"] = result.config_hash;
  summary["name"] = config.name;
  summary["method"] = method_name(config.spec.method);
  summary["param"] = requires_param(config.spec.method) ? json(config.spec.param) : json();
  summary["metrics"] = summary_block(result.summary);
  summary["config"] = json::parse(config.to_json_string());
  write_file(dir / "summary.json", summary.dump(2) + "\n");

  write_file(dir / "per_seed.csv", "seed,auc,ece\n" + per_seed_rows(result, ""));
  write_file(dir / "curves.csv", "epoch,seed,split,auc,ece\n" + curves_rows(result));
}

void emit_report(const SweepResult& sweep_result, const ExperimentConfig& config,
                 const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());

  const Selection selection = select_best(sweep_result);
  const double baseline_auc = sweep_result.baseline.summary.mean_auc;
  const double baseline_ece = sweep_result.baseline.summary.mean_ece;

  json points = json::array();
  std::string sweep_csv = "hyperparameter,mean_auc,std_auc,mean_ece,std_ece,"
                          "delta_auc,ece_improvement_pct\n";
  sweep_csv += "baseline," + format_metric(baseline_auc) + ',' +
               format_metric(sweep_result.baseline.summary.std_auc) + ',' +
               format_metric(baseline_ece) + ',' +
               format_metric(sweep_result.baseline.summary.std_ece) + ',' +
               format_metric(0.0) + ',' + format_metric(0.0) + '\n';
  for (const auto& point : sweep_result.points) {
    const auto& summary = point.result.summary;
    const double delta_auc = summary.mean_auc - baseline_auc;
    const double improvement = ece_improvement_pct(baseline_ece, summary.mean_ece);
    sweep_csv += format_param(point.param) + ',' + format_metric(summary.mean_auc) +
                 ',' + format_metric(summary.std_auc) + ',' +
                 format_metric(summary.mean_ece) + ',' +
                 format_metric(summary.std_ece) + ',' + format_metric(delta_auc) + ',' +
                 format_metric(improvement) + '\n';
    json entry = summary_block(summary);
    entry["param"] = point.param;
    entry["delta_auc"] = delta_auc;
    entry["ece_improvement_pct"] = improvement;
    points.push_back(std::move(entry));
  }

  json summary;
  summary["kind"] = "sweep";
  summary["artifact_version"] = sweep_result.baseline.artifact_version;
  summary["config_hash"] = config.config_hash();
  summary["name"] = config.name;
  summary["method"] = method_name(sweep_result.method);
  summary["grid"] = sweep_result.grid;
  summary["baseline"] = summary_block(sweep_result.baseline.summary);
  summary["points"] = points;
  summary["selected"] = selection.param ? json{{"param", *selection.param}} : json();
  summary["selection_reason"] = selection.reason;
  summary["config"] = json::parse(config.to_json_string());
  write_file(dir / "summary.json", summary.dump(2) + "\n");

  std::string per_seed_csv = "hyperparameter,seed,auc,ece\n";
  per_seed_csv += per_seed_rows(sweep_result.baseline, "baseline,");
  for (const auto& point : sweep_result.points) {
    per_seed_csv += per_seed_rows(point.result, format_param(point.param) + ",");
  }
  write_file(dir / "per_seed.csv", per_seed_csv);

  // Epoch curves are emitted for the paired baseline; grid points are
  // summarized in sweep.csv.
  write_file(dir / "curves.csv",
             "epoch,seed,split,auc,ece\n" + curves_rows(sweep_result.baseline));
  write_file(dir / "sweep.csv", sweep_csv);
}

}  // namespace smoothcal
