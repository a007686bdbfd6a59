#include "smoothcal/smoothing.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "smoothcal/errors.hpp"
#include "parse_util.hpp"

namespace smoothcal {

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0) || alpha > 1.0) {
    throw ConfigError("alpha must lie in (0, 1], got " + std::to_string(alpha));
  }
}

void check_omega(double omega) {
  if (!(omega > 0.0) || omega > 0.5) {
    throw ConfigError("omega must lie in (0, 0.5], got " + std::to_string(omega));
  }
}

void check_phi(double phi) {
  if (!(phi > 0.0)) {
    throw ConfigError("phi must be > 0, got " + std::to_string(phi));
  }
}

void check_num_classes(int num_classes) {
  if (num_classes != kNumClasses) {
    throw ConfigError("only binary targets are supported (K = 2), got K = " +
                      std::to_string(num_classes));
  }
}

void check_votes(const VoteCount& votes) {
  if (votes.n_total < 1) {
    throw InvalidInputError("vote count requires at least one annotator, got N = " +
                            std::to_string(votes.n_total));
  }
  if (votes.n_pos < 0 || votes.n_pos > votes.n_total) {
    throw InvalidInputError("n_pos must lie in [0, N], got n_pos = " +
                            std::to_string(votes.n_pos) +
                            " with N = " + std::to_string(votes.n_total));
  }
}

void check_confidence(double confidence) {
  if (!(confidence >= 0.0) || confidence > 1.0) {
    throw InvalidInputError("confidence must lie in [0, 1], got " +
                            std::to_string(confidence));
  }
}

void check_one_hot(int one_hot) {
  if (one_hot != 0 && one_hot != 1) {
    throw InvalidInputError("one-hot label must be 0 or 1, got " +
                            std::to_string(one_hot));
  }
}

int majority_threshold(int n_total, int num_classes) {
  return (n_total + num_classes - 1) / num_classes;  // ceil(N / K)
}

}  // namespace

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double smooth_vanilla(int one_hot, double alpha, int num_classes) {
  check_alpha(alpha);
  check_num_classes(num_classes);
  check_one_hot(one_hot);
  return (1.0 - alpha) * one_hot + alpha / num_classes;
}

double smooth_agreement_linear(const VoteCount& votes, double alpha, int num_classes) {
  check_alpha(alpha);
  check_num_classes(num_classes);
  check_votes(votes);
  const double agreement = static_cast<double>(votes.n_pos) / votes.n_total;
  return (1.0 - alpha) * agreement + alpha / num_classes;
}

double smooth_agreement_piecewise(const VoteCount& votes, double omega, int num_classes) {
  check_omega(omega);
  check_num_classes(num_classes);
  check_votes(votes);
  const int threshold = majority_threshold(votes.n_total, num_classes);
  if (threshold < 2) {
    throw ConfigError("piecewise smoothing needs a majority threshold of at least 2 "
                      "(N >= 3 for binary); got N = " + std::to_string(votes.n_total));
  }
  const double divisor = threshold - 1;
  if (votes.n_pos > threshold) {
    return (1.0 - omega) + omega * (votes.n_pos - threshold) / divisor;
  }
  if (votes.n_pos == threshold) {
    return 0.5;
  }
  return omega * votes.n_pos / divisor;
}

double smooth_agreement_nonlinear(const VoteCount& votes, double phi) {
  check_phi(phi);
  check_votes(votes);
  const double agreement = static_cast<double>(votes.n_pos) / votes.n_total;
  return stable_sigmoid(phi * (agreement - 0.5));
}

double smooth_confidence_vanilla(double confidence, double alpha, int num_classes) {
  check_alpha(alpha);
  check_num_classes(num_classes);
  check_confidence(confidence);
  // Nearest-integer rounding with the tie at 0.5 mapped to 1.
  const int rounded = confidence >= 0.5 ? 1 : 0;
  return (1.0 - alpha) * rounded + alpha / num_classes;
}

double smooth_confidence_linear(double confidence, double alpha, int num_classes) {
  check_alpha(alpha);
  check_num_classes(num_classes);
  check_confidence(confidence);
  return (1.0 - alpha) * confidence + alpha / num_classes;
}

double smooth_confidence_piecewise(double confidence, double omega) {
  check_omega(omega);
  check_confidence(confidence);
  if (confidence > 0.5) {
    return (1.0 - omega) + ((confidence - 0.5) / 0.5) * omega;
  }
  if (confidence == 0.5) {
    return 0.5;
  }
  return (confidence / 0.5) * omega;
}

double smooth_confidence_nonlinear(double confidence, double phi) {
  check_phi(phi);
  check_confidence(confidence);
  return stable_sigmoid(phi * (confidence - 0.5));
}

const char* method_name(SmoothingMethod method) {
  switch (method) {
    case SmoothingMethod::HardLabel: return "hard";
    case SmoothingMethod::Vanilla: return "vanilla";
    case SmoothingMethod::AgreementLinear: return "agreement-linear";
    case SmoothingMethod::AgreementPiecewise: return "agreement-piecewise";
    case SmoothingMethod::AgreementNonlinear: return "agreement-nonlinear";
    case SmoothingMethod::ConfidenceVanilla: return "confidence-vanilla";
    case SmoothingMethod::ConfidenceLinear: return "confidence-linear";
    case SmoothingMethod::ConfidencePiecewise: return "confidence-piecewise";
    case SmoothingMethod::ConfidenceNonlinear: return "confidence-nonlinear";
  }
  return "unknown";
}

std::optional<SmoothingMethod> parse_method(std::string_view name) {
  static constexpr SmoothingMethod kAll[] = {
      SmoothingMethod::HardLabel,          SmoothingMethod::Vanilla,
      SmoothingMethod::AgreementLinear,    SmoothingMethod::AgreementPiecewise,
      SmoothingMethod::AgreementNonlinear, SmoothingMethod::ConfidenceVanilla,
      SmoothingMethod::ConfidenceLinear,   SmoothingMethod::ConfidencePiecewise,
      SmoothingMethod::ConfidenceNonlinear,
  };
  for (SmoothingMethod m : kAll) {
    if (name == method_name(m)) return m;
  }
  return std::nullopt;
}

bool uses_confidence(SmoothingMethod method) {
  switch (method) {
    case SmoothingMethod::ConfidenceVanilla:
    case SmoothingMethod::ConfidenceLinear:
    case SmoothingMethod::ConfidencePiecewise:
    case SmoothingMethod::ConfidenceNonlinear:
      return true;
    default:
      return false;
  }
}

bool uses_votes(SmoothingMethod method) {
  switch (method) {
    case SmoothingMethod::AgreementLinear:
    case SmoothingMethod::AgreementPiecewise:
    case SmoothingMethod::AgreementNonlinear:
      return true;
    default:
      return false;
  }
}

bool requires_param(SmoothingMethod method) {
  return method != SmoothingMethod::HardLabel;
}

void SmoothingSpec::validate() const {
  switch (method) {
    case SmoothingMethod::HardLabel:
      return;
    case SmoothingMethod::Vanilla:
    case SmoothingMethod::AgreementLinear:
    case SmoothingMethod::ConfidenceVanilla:
    case SmoothingMethod::ConfidenceLinear:
      check_alpha(param);
      return;
    case SmoothingMethod::AgreementPiecewise:
    case SmoothingMethod::ConfidencePiecewise:
      check_omega(param);
      return;
    case SmoothingMethod::AgreementNonlinear:
    case SmoothingMethod::ConfidenceNonlinear:
      check_phi(param);
      return;
  }
  throw ConfigError("unknown smoothing method");
}

double apply_smoothing(const SmoothingSpec& spec, const AnnotatedExample& example,
                       std::optional<double> baseline_confidence) {
  spec.validate();
  if (uses_confidence(spec.method) && !baseline_confidence.has_value()) {
    throw MissingDataError("method '" + std::string(method_name(spec.method)) +
                           "' needs a baseline confidence, none given for example '" +
                           example.id + "'");
  }
  if (uses_votes(spec.method) && example.n_annotators < 1) {
    throw MissingDataError("method '" + std::string(method_name(spec.method)) +
                           "' needs annotator votes, none present on example '" +
                           example.id + "'");
  }
  const VoteCount votes{example.n_pos, example.n_annotators};
  switch (spec.method) {
    case SmoothingMethod::HardLabel:
      check_one_hot(example.gold);
      return static_cast<double>(example.gold);
    case SmoothingMethod::Vanilla:
      return smooth_vanilla(example.gold, spec.param);
    case SmoothingMethod::AgreementLinear:
      return smooth_agreement_linear(votes, spec.param);
    case SmoothingMethod::AgreementPiecewise:
      return smooth_agreement_piecewise(votes, spec.param);
    case SmoothingMethod::AgreementNonlinear:
      return smooth_agreement_nonlinear(votes, spec.param);
    case SmoothingMethod::ConfidenceVanilla:
      return smooth_confidence_vanilla(*baseline_confidence, spec.param);
    case SmoothingMethod::ConfidenceLinear:
      return smooth_confidence_linear(*baseline_confidence, spec.param);
    case SmoothingMethod::ConfidencePiecewise:
      return smooth_confidence_piecewise(*baseline_confidence, spec.param);
    case SmoothingMethod::ConfidenceNonlinear:
      return smooth_confidence_nonlinear(*baseline_confidence, spec.param);
  }
  throw ConfigError("unknown smoothing method");
}

std::vector<double> compute_targets(const SmoothingSpec& spec,
                                    std::span<const AnnotatedExample> examples,
                                    const std::vector<double>* confidences) {
  spec.validate();
  if (uses_confidence(spec.method)) {
    if (confidences == nullptr) {
      throw MissingDataError("method '" + std::string(method_name(spec.method)) +
                             "' needs baseline confidences");
    }
    if (confidences->size() != examples.size()) {
      throw InvalidInputError("confidence count (" + std::to_string(confidences->size()) +
                              ") does not match example count (" +
                              std::to_string(examples.size()) + ")");
    }
  }
  std::vector<double> targets;
  targets.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    std::optional<double> c;
    if (uses_confidence(spec.method)) c = (*confidences)[i];
    targets.push_back(apply_smoothing(spec, examples[i], c));
  }
  return targets;
}

void write_targets_csv(const std::filesystem::path& path,
                       std::span<const AnnotatedExample> examples,
                       std::span<const double> targets) {
  if (examples.size() != targets.size()) {
    throw InvalidInputError("example/target count mismatch");
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "id,target\n";
  char buffer[64];
  for (std::size_t i = 0; i < examples.size(); ++i) {
    std::snprintf(buffer, sizeof(buffer), "%.12g", targets[i]);
    out << examples[i].id << ',' << buffer << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<std::pair<std::string, double>> read_targets_csv(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError("'" + path.string() + "' is empty");
  }
  if (line != "id,target" && line != "id,target\r") {
    throw ParseError("'" + path.string() + "': expected header 'id,target'");
  }
  std::vector<std::pair<std::string, double>> rows;
  std::size_t row_number = 1;
  while (std::getline(in, line)) {
    ++row_number;
    detail::strip_carriage_return(line);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw ParseError("'" + path.string() + "' row " + std::to_string(row_number) +
                       ": expected 'id,target'");
    }
    const std::string id = line.substr(0, comma);
    const std::string value = line.substr(comma + 1);
    double target = 0.0;
    if (!detail::parse_double(value, target)) {
      throw ParseError("'" + path.string() + "' row " + std::to_string(row_number) +
                       " column target: not a number: '" + value + "'");
    }
    rows.emplace_back(id, target);
  }
  return rows;
}

}  // namespace smoothcal
