#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "smoothcal/dataset.hpp"

namespace smoothcal {

// The task is binary throughout; every target is the probability assigned to
// the positive class, and the negative class implicitly receives 1 - y.
inline constexpr int kNumClasses = 2;

enum class SmoothingMethod {
  HardLabel,
  Vanilla,
  AgreementLinear,
  AgreementPiecewise,
  AgreementNonlinear,
  ConfidenceVanilla,
  ConfidenceLinear,
  ConfidencePiecewise,
  ConfidenceNonlinear,
};

struct VoteCount {
  int n_pos = 0;    // annotators voting the positive class
  int n_total = 0;  // total annotators
};

// Method plus its single hyperparameter: alpha in (0, 1] for the vanilla and
// linear variants, omega in (0, 0.5] for the piecewise variants, phi > 0 for
// the nonlinear variants. HardLabel takes no parameter.
struct SmoothingSpec {
  SmoothingMethod method = SmoothingMethod::HardLabel;
  double param = 0.0;

  void validate() const;  // throws ConfigError naming the violated bound
};

const char* method_name(SmoothingMethod method);
std::optional<SmoothingMethod> parse_method(std::string_view name);
bool uses_confidence(SmoothingMethod method);
bool uses_votes(SmoothingMethod method);
bool requires_param(SmoothingMethod method);

// Branch form that never overflows: exp is only taken of non-positive values.
double stable_sigmoid(double x);

// y = (1 - alpha) * y_k + alpha / K
double smooth_vanilla(int one_hot, double alpha, int num_classes = kNumClasses);
// y = (1 - alpha) * n_k / N + alpha / K
double smooth_agreement_linear(const VoteCount& votes, double alpha,
                               int num_classes = kNumClasses);
// Three-case map around the majority threshold n_m = ceil(N / K); requires
// n_m >= 2 so the divisor n_m - 1 is nonzero.
double smooth_agreement_piecewise(const VoteCount& votes, double omega,
                                  int num_classes = kNumClasses);
// y = sigmoid(phi * (n_k / N - 1/2))
double smooth_agreement_nonlinear(const VoteCount& votes, double phi);
// y = (1 - alpha) * round(c) + alpha / K; the tie c = 0.5 rounds to 1.
double smooth_confidence_vanilla(double confidence, double alpha,
                                 int num_classes = kNumClasses);
// y = (1 - alpha) * c + alpha / K
double smooth_confidence_linear(double confidence, double alpha,
                                int num_classes = kNumClasses);
// Three-case map around c = 0.5 with a jump of size 1 - 2*omega.
double smooth_confidence_piecewise(double confidence, double omega);
// y = sigmoid(phi * (c - 1/2))
double smooth_confidence_nonlinear(double confidence, double phi);

// Dispatch over all nine methods. Confidence-aware methods require
// baseline_confidence; agreement-aware methods require vote data on the
// example; HardLabel returns the gold label.
double apply_smoothing(const SmoothingSpec& spec, const AnnotatedExample& example,
                       std::optional<double> baseline_confidence = std::nullopt);

// Batch application, one target per example. For confidence-aware methods
// `confidences` must be non-null and aligned with `examples`.
std::vector<double> compute_targets(const SmoothingSpec& spec,
                                    std::span<const AnnotatedExample> examples,
                                    const std::vector<double>* confidences = nullptr);

// Targets file: CSV `id,target`, targets at 12 significant digits.
void write_targets_csv(const std::filesystem::path& path,
                       std::span<const AnnotatedExample> examples,
                       std::span<const double> targets);
std::vector<std::pair<std::string, double>> read_targets_csv(
    const std::filesystem::path& path);

}  // namespace smoothcal
