#include "smoothcal/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "smoothcal/errors.hpp"
#include "smoothcal/rng.hpp"
#include "smoothcal/smoothing.hpp"

namespace smoothcal {

namespace {

// Flat offsets. OneHidden: [hidden weights h*d | hidden biases h |
// output weights h | output bias]. Logistic: [weights d | bias].
struct Layout {
  std::size_t hidden_weights = 0;
  std::size_t hidden_bias = 0;
  std::size_t output_weights = 0;
  std::size_t output_bias = 0;
};

Layout layout_of(const ClassifierParams& params) {
  Layout layout;
  if (params.arch == Architecture::Logistic) {
    layout.output_weights = 0;
    layout.output_bias = static_cast<std::size_t>(params.input_dim);
  } else {
    const auto d = static_cast<std::size_t>(params.input_dim);
    const auto h = static_cast<std::size_t>(params.hidden_units);
    layout.hidden_weights = 0;
    layout.hidden_bias = h * d;
    layout.output_weights = h * d + h;
    layout.output_bias = h * d + 2 * h;
  }
  return layout;
}

void check_dimension(const ClassifierParams& params, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(params.input_dim)) {
    throw InvalidInputError("feature dimension " + std::to_string(x.size()) +
                            " does not match model input_dim " +
                            std::to_string(params.input_dim));
  }
}

// Weight decay applies to weights only, never biases.
template <typename Fn>
void for_each_weight_index(const ClassifierParams& params, Fn&& fn) {
  const Layout layout = layout_of(params);
  if (params.arch == Architecture::Logistic) {
    for (std::size_t i = 0; i < static_cast<std::size_t>(params.input_dim); ++i) fn(i);
  } else {
    for (std::size_t i = layout.hidden_weights; i < layout.hidden_bias; ++i) fn(i);
    for (std::size_t i = layout.output_weights; i < layout.output_bias; ++i) fn(i);
  }
}

void check_training_set(const TrainingSet& training) {
  if (training.features.empty()) throw InvalidInputError("training set is empty");
  if (training.features.size() != training.targets.size()) {
    throw InvalidInputError("feature/target count mismatch (" +
                            std::to_string(training.features.size()) + " vs " +
                            std::to_string(training.targets.size()) + ")");
  }
  const std::size_t d = training.features.front().size();
  if (d == 0) throw InvalidInputError("features must have dimension >= 1");
  for (const auto& x : training.features) {
    if (x.size() != d) throw InvalidInputError("inconsistent feature dimensions");
  }
  for (double y : training.targets) {
    if (!(y >= 0.0) || y > 1.0) {
      throw InvalidInputError("soft target outside [0, 1]");
    }
  }
}

// Backward pass for one example, accumulating into `grad`; returns the loss.
double accumulate_example(const ClassifierParams& params, const Layout& layout,
                          std::span<const double> x, double target,
                          std::vector<double>& activations, std::vector<double>& grad) {
  const std::size_t d = static_cast<std::size_t>(params.input_dim);
  double logit = 0.0;
  if (params.arch == Architecture::Logistic) {
    logit = params.values[layout.output_bias];
    for (std::size_t j = 0; j < d; ++j) logit += params.values[j] * x[j];
  } else {
    const auto h = static_cast<std::size_t>(params.hidden_units);
    logit = params.values[layout.output_bias];
    for (std::size_t j = 0; j < h; ++j) {
      double z = params.values[layout.hidden_bias + j];
      const double* row = params.values.data() + layout.hidden_weights + j * d;
      for (std::size_t k = 0; k < d; ++k) z += row[k] * x[k];
      activations[j] = std::tanh(z);
      logit += params.values[layout.output_weights + j] * activations[j];
    }
  }

  const double p = stable_sigmoid(logit);
  const double dlogit = p - target;
  if (params.arch == Architecture::Logistic) {
    for (std::size_t j = 0; j < d; ++j) grad[j] += dlogit * x[j];
    grad[layout.output_bias] += dlogit;
  } else {
    const auto h = static_cast<std::size_t>(params.hidden_units);
    for (std::size_t j = 0; j < h; ++j) {
      grad[layout.output_weights + j] += dlogit * activations[j];
      const double dz = dlogit * params.values[layout.output_weights + j] *
                        (1.0 - activations[j] * activations[j]);
      grad[layout.hidden_bias + j] += dz;
      double* row = grad.data() + layout.hidden_weights + j * d;
      for (std::size_t k = 0; k < d; ++k) row[k] += dz * x[k];
    }
    grad[layout.output_bias] += dlogit;
  }
  return soft_bce_from_logit(logit, target);
}

DivergenceError divergence_error(const char* what, int epoch, double learning_rate) {
  char buffer[128];
  std::snprintf(buffer, sizeof(buffer), "%s at epoch %d (learning rate %g)", what,
                epoch + 1, learning_rate);
  return DivergenceError(buffer);
}

template <typename PerEpoch>
ClassifierParams run_sgd(const TrainingSet& training, const TrainConfig& config,
                         PerEpoch&& per_epoch) {
  config.validate();
  check_training_set(training);
  const int input_dim = static_cast<int>(training.features.front().size());
  ClassifierParams params =
      init_params(config.seed, input_dim, config.arch, config.hidden_units);
  const Layout layout = layout_of(params);

  const std::size_t n = training.features.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> velocity(params.values.size(), 0.0);
  std::vector<double> grad(params.values.size(), 0.0);
  std::vector<double> activations(
      static_cast<std::size_t>(std::max(config.hidden_units, 1)), 0.0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(config.seed, static_cast<std::uint64_t>(epoch)));
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle_rng.shuffle(order);

    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(n, start + static_cast<std::size_t>(config.batch_size));
      const auto batch = static_cast<double>(end - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      double loss_sum = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const std::size_t idx = order[i];
        loss_sum += accumulate_example(params, layout, training.features[idx],
                                       training.targets[idx], activations, grad);
      }
      if (!std::isfinite(loss_sum)) {
        throw divergence_error("non-finite loss", epoch, config.learning_rate);
      }
      for (double& g : grad) g /= batch;
      if (config.weight_decay > 0.0) {
        for_each_weight_index(params, [&](std::size_t i) {
          grad[i] += config.weight_decay * params.values[i];
        });
      }
      // Any inf or NaN coordinate makes the checksum non-finite.
      double checksum = 0.0;
      for (std::size_t i = 0; i < params.values.size(); ++i) {
        velocity[i] = config.momentum * velocity[i] + grad[i];
        params.values[i] -= config.learning_rate * velocity[i];
        checksum += params.values[i];
      }
      if (!std::isfinite(checksum)) {
        throw divergence_error("non-finite parameters", epoch, config.learning_rate);
      }
    }
    per_epoch(params, epoch);
  }
  return params;
}

}  // namespace

const char* architecture_name(Architecture arch) {
  switch (arch) {
    case Architecture::Logistic: return "logistic";
    case Architecture::OneHidden: return "one_hidden";
  }
  return "unknown";
}

std::size_t ClassifierParams::count_for(Architecture arch, int input_dim,
                                        int hidden_units) {
  const auto d = static_cast<std::size_t>(input_dim);
  if (arch == Architecture::Logistic) return d + 1;
  const auto h = static_cast<std::size_t>(hidden_units);
  return h * d + 2 * h + 1;
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
  if (!(momentum >= 0.0) || momentum >= 1.0) {
    throw ConfigError("momentum must lie in [0, 1)");
  }
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (arch == Architecture::OneHidden && hidden_units < 1) {
    throw ConfigError("hidden_units must be >= 1 for the one-hidden architecture");
  }
}

ClassifierParams init_params(std::uint64_t seed, int input_dim, Architecture arch,
                             int hidden_units) {
  if (input_dim < 1) throw InvalidInputError("input_dim must be >= 1");
  if (arch == Architecture::OneHidden && hidden_units < 1) {
    throw InvalidInputError("hidden_units must be >= 1 for the one-hidden architecture");
  }
  if (arch == Architecture::Logistic) hidden_units = 0;

  ClassifierParams params;
  params.arch = arch;
  params.input_dim = input_dim;
  params.hidden_units = hidden_units;
  params.values.assign(ClassifierParams::count_for(arch, input_dim, hidden_units), 0.0);

  Rng rng(seed);
  auto uniform_signed = [&](double bound) { return bound * (2.0 * rng.uniform() - 1.0); };
  const Layout layout = layout_of(params);
  if (arch == Architecture::Logistic) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(input_dim));
    for (int j = 0; j < input_dim; ++j) {
      params.values[static_cast<std::size_t>(j)] = uniform_signed(bound);
    }
  } else {
    const double hidden_bound = 1.0 / std::sqrt(static_cast<double>(input_dim));
    for (std::size_t i = layout.hidden_weights; i < layout.hidden_bias; ++i) {
      params.values[i] = uniform_signed(hidden_bound);
    }
    const double output_bound = 1.0 / std::sqrt(static_cast<double>(hidden_units));
    for (std::size_t i = layout.output_weights; i < layout.output_bias; ++i) {
      params.values[i] = uniform_signed(output_bound);
    }
  }
  return params;
}

double forward_logit(const ClassifierParams& params, std::span<const double> x) {
  check_dimension(params, x);
  const Layout layout = layout_of(params);
  const std::size_t d = static_cast<std::size_t>(params.input_dim);
  if (params.arch == Architecture::Logistic) {
    double logit = params.values[layout.output_bias];
    for (std::size_t j = 0; j < d; ++j) logit += params.values[j] * x[j];
    return logit;
  }
  const auto h = static_cast<std::size_t>(params.hidden_units);
  double logit = params.values[layout.output_bias];
  for (std::size_t j = 0; j < h; ++j) {
    double z = params.values[layout.hidden_bias + j];
    const double* row = params.values.data() + layout.hidden_weights + j * d;
    for (std::size_t k = 0; k < d; ++k) z += row[k] * x[k];
    logit += params.values[layout.output_weights + j] * std::tanh(z);
  }
  return logit;
}

double forward(const ClassifierParams& params, std::span<const double> x) {
  return stable_sigmoid(forward_logit(params, x));
}

double soft_bce_from_logit(double logit, double y) {
  return std::max(logit, 0.0) - logit * y + std::log1p(std::exp(-std::fabs(logit)));
}

double soft_bce(double p, double y) {
  const double logit = std::log(p) - std::log1p(-p);
  return soft_bce_from_logit(logit, y);
}

double penalized_loss(const ClassifierParams& params,
                      std::span<const std::vector<double>> xs,
                      std::span<const double> targets, double weight_decay) {
  if (xs.empty() || xs.size() != targets.size()) {
    throw InvalidInputError("penalized_loss needs a nonempty aligned batch");
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    loss += soft_bce_from_logit(forward_logit(params, xs[i]), targets[i]);
  }
  loss /= static_cast<double>(xs.size());
  if (weight_decay > 0.0) {
    double squares = 0.0;
    for_each_weight_index(params, [&](std::size_t i) {
      squares += params.values[i] * params.values[i];
    });
    loss += 0.5 * weight_decay * squares;
  }
  return loss;
}

std::vector<double> gradient(const ClassifierParams& params,
                             std::span<const std::vector<double>> xs,
                             std::span<const double> targets, double weight_decay) {
  if (xs.empty() || xs.size() != targets.size()) {
    throw InvalidInputError("gradient needs a nonempty aligned batch");
  }
  const Layout layout = layout_of(params);
  std::vector<double> grad(params.values.size(), 0.0);
  std::vector<double> activations(
      static_cast<std::size_t>(std::max(params.hidden_units, 1)), 0.0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    check_dimension(params, xs[i]);
    accumulate_example(params, layout, xs[i], targets[i], activations, grad);
  }
  for (double& g : grad) g /= static_cast<double>(xs.size());
  if (weight_decay > 0.0) {
    for_each_weight_index(params, [&](std::size_t i) {
      grad[i] += weight_decay * params.values[i];
    });
  }
  return grad;
}

ClassifierParams fit(const TrainingSet& training, const TrainConfig& config) {
  return run_sgd(training, config, [](const ClassifierParams&, int) {});
}

TrainedModel train(const TrainingSet& training, const EvalSet& train_eval,
                   const EvalSet& test_eval, const TrainConfig& config) {
  TrainedModel model;
  model.epoch_history.reserve(static_cast<std::size_t>(config.epochs));
  model.params = run_sgd(training, config, [&](const ClassifierParams& params, int) {
    EpochMetrics metrics;
    metrics.train = evaluate(
        PredictionSet{confidences(params, train_eval.features), train_eval.gold});
    metrics.test = evaluate(
        PredictionSet{confidences(params, test_eval.features), test_eval.gold});
    model.epoch_history.push_back(std::move(metrics));
  });
  return model;
}

std::vector<double> confidences(const ClassifierParams& params,
                                std::span<const std::vector<double>> xs) {
  std::vector<double> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(forward(params, x));
  return out;
}

void save_checkpoint(const ClassifierParams& params, const std::filesystem::path& path) {
  nlohmann::json doc{{"format_version", 1},
                     {"architecture", architecture_name(params.arch)},
                     {"input_dim", params.input_dim},
                     {"hidden_units", params.hidden_units},
                     {"values", params.values}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

ClassifierParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("'" + path.string() + "': invalid JSON: " + e.what());
  }
  if (doc.value("format_version", 0) != 1) {
    throw ParseError("'" + path.string() + "': unsupported checkpoint version");
  }
  ClassifierParams params;
  const std::string arch = doc.value("architecture", "");
  if (arch == "logistic") {
    params.arch = Architecture::Logistic;
  } else if (arch == "one_hidden") {
    params.arch = Architecture::OneHidden;
  } else {
    throw ParseError("'" + path.string() + "': unknown architecture '" + arch + "'");
  }
  params.input_dim = doc.value("input_dim", 0);
  params.hidden_units = doc.value("hidden_units", 0);
  params.values = doc.value("values", std::vector<double>{});
  if (params.input_dim < 1 ||
      params.values.size() !=
          ClassifierParams::count_for(params.arch, params.input_dim, params.hidden_units)) {
    throw ParseError("'" + path.string() + "': parameter count does not match the "
                     "declared architecture");
  }
  return params;
}

}  // namespace smoothcal
