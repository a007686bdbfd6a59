#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "smoothcal/dataset.hpp"
#include "smoothcal/metrics.hpp"
#include "smoothcal/model.hpp"
#include "smoothcal/smoothing.hpp"

namespace smoothcal {

std::vector<std::uint64_t> default_seeds();  // {1, ..., 10}

// One experiment: a dataset source, a labeling method, a training recipe, and
// the seed list the protocol averages over. Confidence-aware methods train
// twice; `stage_two` (defaulting to `train`) configures the second training
// and `confidence_checkpoint_epoch` selects which stage-one state supplies
// the confidences (0 = final epoch, e >= 1 = after epoch e).
struct ExperimentConfig {
  std::string name = "experiment";
  std::optional<std::string> dataset_path;
  std::optional<GeneratorConfig> generator;
  SmoothingSpec spec;
  TrainConfig train;
  std::vector<std::uint64_t> seeds = default_seeds();
  std::optional<TrainConfig> stage_two;
  int confidence_checkpoint_epoch = 0;
  int jobs = 1;

  void validate() const;
  std::string to_json_string() const;
  static ExperimentConfig from_json_string(const std::string& text);
  std::string config_hash() const;  // FNV-1a over the canonical JSON form
};

struct SeedResult {
  std::uint64_t seed = 0;
  CalibrationReport test_report;  // final-epoch test metrics
  std::vector<EpochMetrics> epoch_history;
};

struct ExperimentResult {
  std::vector<SeedResult> per_seed;  // one entry per configured seed, in order
  MetricSummary summary;             // x100 scale
  std::string config_hash;
  std::string artifact_version;
};

struct SweepPoint {
  double param = 0.0;
  ExperimentResult result;
};

// Grid results plus the paired baseline (same dataset, same seeds).
struct SweepResult {
  SmoothingMethod method = SmoothingMethod::HardLabel;
  std::vector<double> grid;
  std::vector<SweepPoint> points;
  ExperimentResult baseline;
};

struct Selection {
  std::optional<std::size_t> index;  // into SweepResult::points
  std::optional<double> param;
  std::string reason;
};

// Stage-one confidences on the training split, one vector per seed; lets
// several confidence-aware experiments share the hard-label trainings.
struct StageOneConfidences {
  std::vector<std::uint64_t> seeds;
  std::vector<std::vector<double>> per_seed;
};

Dataset resolve_dataset(const ExperimentConfig& config);

ExperimentResult run_baseline(const ExperimentConfig& config, const Dataset& dataset);
ExperimentResult run_agreement(const ExperimentConfig& config, const Dataset& dataset);
StageOneConfidences compute_stage_one(const ExperimentConfig& config,
                                      const Dataset& dataset);
ExperimentResult run_confidence(const ExperimentConfig& config, const Dataset& dataset,
                                const StageOneConfidences* stage_one = nullptr);
// Training from an externally supplied targets file (`id,target` rows); every
// training example must be covered.
ExperimentResult run_with_targets(
    const ExperimentConfig& config, const Dataset& dataset,
    const std::vector<std::pair<std::string, double>>& targets);
// Dispatch on config.spec.method.
ExperimentResult run_experiment(const ExperimentConfig& config, const Dataset& dataset);

// alpha {0.05..0.95}, omega {0.05..0.5}, phi {1..15} depending on method.
std::vector<double> default_grid(SmoothingMethod method);

// Every grid value is validated against the method's domain before any
// training starts.
SweepResult sweep(SmoothingMethod method, std::span<const double> grid,
                  const ExperimentConfig& config, const Dataset& dataset);

// Lowest mean ECE among points whose mean AUC strictly exceeds the baseline
// mean AUC; ties go to the smaller hyperparameter. Empty when nothing
// qualifies.
Selection select_best(const SweepResult& sweep_result);

// 100 * (base - method) / base.
double ece_improvement_pct(double baseline_ece, double method_ece);

// Report directory: summary.json, per_seed.csv, curves.csv and, for sweeps,
// sweep.csv. Metric values are written on the x100 scale at fixed precision;
// identical inputs produce byte-identical files.
void emit_report(const ExperimentResult& result, const ExperimentConfig& config,
                 const std::filesystem::path& dir);
void emit_report(const SweepResult& sweep_result, const ExperimentConfig& config,
                 const std::filesystem::path& dir);

}  // namespace smoothcal
