#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace smoothcal {

// Predicted positive-class probabilities with their gold labels.
struct PredictionSet {
  std::vector<double> probs;
  std::vector<int> labels;

  void validate() const;  // equal nonzero lengths, probs in [0,1], labels in {0,1}
};

struct BinStat {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
  std::optional<double> mean_confidence;  // absent for empty bins
  std::optional<double> accuracy;
};

struct CalibrationReport {
  double auc = 0.0;  // in [0, 1]; paper tables show these x100
  double ece = 0.0;  // in [0, 1]
  std::size_t n = 0;
  std::vector<BinStat> bins;
};

inline constexpr int kDefaultEceBins = 15;

// Mann-Whitney rank statistic: the fraction of (positive, negative) pairs
// ranked correctly, ties counting one half. Equals the trapezoidal area under
// the ROC curve. Requires both classes present.
double auc(const PredictionSet& predictions);

// 15-bin (by default) expected calibration error. Per-example confidence is
// max(p, 1-p) and the predicted class is p >= 0.5; a confidence x falls in
// equal-width bin floor(x * n_bins), with x = 1 assigned to the last bin.
// Returns the ECE and all n_bins bins, empty ones included with count 0.
std::pair<double, std::vector<BinStat>> ece(const PredictionSet& predictions,
                                            int n_bins = kDefaultEceBins);

// The binning behind `ece`, exposed for reliability diagrams.
std::vector<BinStat> reliability_table(const PredictionSet& predictions, int n_bins);

CalibrationReport evaluate(const PredictionSet& predictions,
                           int n_bins = kDefaultEceBins);

// Mean and sample standard deviation (n-1 divisor, 0 for a single report) of
// AUC and ECE across seeds, on the x100 scale used by the paper tables.
struct MetricSummary {
  double mean_auc = 0.0;
  double std_auc = 0.0;
  double mean_ece = 0.0;
  double std_ece = 0.0;
  std::size_t n_reports = 0;
};

MetricSummary aggregate(std::span<const CalibrationReport> reports);

// "84.7 ± 0.8" with one decimal, matching the table rendering.
std::string format_table_cell(double mean, double stddev);

// CSV `bin_lower,bin_upper,count,mean_confidence,accuracy`; absent statistics
// of empty bins are left as empty fields.
void write_reliability_csv(const std::filesystem::path& path,
                           std::span<const BinStat> bins);

// JSON object with fields auc, ece, n, bins[].
std::string report_to_json_string(const CalibrationReport& report);

}  // namespace smoothcal
