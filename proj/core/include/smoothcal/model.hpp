#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "smoothcal/metrics.hpp"

namespace smoothcal {

enum class Architecture { Logistic, OneHidden };

const char* architecture_name(Architecture arch);

// Flat parameter block. OneHidden layout: hidden weights (h x d, row-major),
// hidden biases (h), output weights (h), output bias. Logistic layout:
// weights (d), bias. The flat view keeps the optimizer, the momentum buffer,
// checkpointing, and finite-difference probing trivially aligned.
struct ClassifierParams {
  Architecture arch = Architecture::Logistic;
  int input_dim = 0;
  int hidden_units = 0;  // 0 for Logistic
  std::vector<double> values;

  static std::size_t count_for(Architecture arch, int input_dim, int hidden_units);
};

struct TrainConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;      // in [0, 1)
  double weight_decay = 1e-4; // L2 on weights, not biases
  int epochs = 100;
  int batch_size = 32;
  std::uint64_t seed = 1;
  Architecture arch = Architecture::OneHidden;
  int hidden_units = 16;

  void validate() const;
};

// What the optimizer sees: features and soft targets, nothing else. Gold
// labels reach training only through whatever produced the targets.
struct TrainingSet {
  std::vector<std::vector<double>> features;
  std::vector<double> targets;
};

// Metric reporting against gold labels; never touched by the update path.
struct EvalSet {
  std::vector<std::vector<double>> features;
  std::vector<int> gold;
};

struct EpochMetrics {
  CalibrationReport train;
  CalibrationReport test;
};

struct TrainedModel {
  ClassifierParams params;
  std::vector<EpochMetrics> epoch_history;  // one entry per epoch
};

// Weights ~ Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
ClassifierParams init_params(std::uint64_t seed, int input_dim, Architecture arch,
                             int hidden_units = 0);

double forward_logit(const ClassifierParams& params, std::span<const double> x);
double forward(const ClassifierParams& params, std::span<const double> x);

// -(y ln p + (1-y) ln(1-p))
double soft_bce(double p, double y);
// Same loss from the logit, in the overflow-free form.
double soft_bce_from_logit(double logit, double y);

// Mean penalized loss over a batch: mean soft_bce + (weight_decay/2)|W|^2
// over weight coordinates. This is the exact objective `gradient`
// differentiates, which keeps finite-difference checks honest.
double penalized_loss(const ClassifierParams& params,
                      std::span<const std::vector<double>> xs,
                      std::span<const double> targets, double weight_decay);

// Mean gradient of the penalized loss, flat-aligned with params.values.
std::vector<double> gradient(const ClassifierParams& params,
                             std::span<const std::vector<double>> xs,
                             std::span<const double> targets, double weight_decay);

// Shuffled mini-batch gradient descent with momentum. Deterministic given
// (seed, config, data): the shuffle order for epoch e comes from a generator
// seeded by derive_seed(seed, e). Records per-epoch AUC/ECE on both eval
// splits. Throws DivergenceError (naming epoch and learning rate) if the
// loss goes non-finite.
TrainedModel train(const TrainingSet& training, const EvalSet& train_eval,
                   const EvalSet& test_eval, const TrainConfig& config);

// Same optimizer loop without epoch metrics; follows the identical update
// trajectory, so fitting for e epochs reproduces the state a longer run had
// after its e-th epoch.
ClassifierParams fit(const TrainingSet& training, const TrainConfig& config);

// forward() per example, order preserving.
std::vector<double> confidences(const ClassifierParams& params,
                                std::span<const std::vector<double>> xs);

// Versioned JSON checkpoint; doubles round-trip bit-exactly.
void save_checkpoint(const ClassifierParams& params, const std::filesystem::path& path);
ClassifierParams load_checkpoint(const std::filesystem::path& path);

}  // namespace smoothcal
