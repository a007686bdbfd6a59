#include "smoothcal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "smoothcal/errors.hpp"

namespace smoothcal {

void PredictionSet::validate() const {
  if (probs.empty()) throw InvalidInputError("prediction set is empty");
  if (probs.size() != labels.size()) {
    throw InvalidInputError("probs and labels differ in length (" +
                            std::to_string(probs.size()) + " vs " +
                            std::to_string(labels.size()) + ")");
  }
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!(probs[i] >= 0.0) || probs[i] > 1.0) {
      throw InvalidInputError("prob out of [0, 1] at index " + std::to_string(i));
    }
    if (labels[i] != 0 && labels[i] != 1) {
      throw InvalidInputError("label not in {0, 1} at index " + std::to_string(i));
    }
  }
}

double auc(const PredictionSet& predictions) {
  predictions.validate();
  const std::size_t n = predictions.probs.size();
  std::size_t n_pos = 0;
  for (int label : predictions.labels) n_pos += static_cast<std::size_t>(label);
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw UndefinedMetricError("AUC undefined: inputs contain a single class");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return predictions.probs[a] < predictions.probs[b];
  });

  // Average ranks over tied score groups; the rank-sum form counts each
  // correctly ordered (pos, neg) pair once and each tied pair one half.
  double positive_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n &&
           predictions.probs[order[j + 1]] == predictions.probs[order[i]]) {
      ++j;
    }
    const double mean_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t k = i; k <= j; ++k) {
      if (predictions.labels[order[k]] == 1) positive_rank_sum += mean_rank;
    }
    i = j + 1;
  }
  const double u = positive_rank_sum -
                   static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

namespace {

std::size_t bin_of(double confidence, int n_bins) {
  const auto raw = static_cast<std::size_t>(std::floor(confidence * n_bins));
  return std::min(raw, static_cast<std::size_t>(n_bins - 1));  // 1.0 -> last bin
}

}  // namespace

std::vector<BinStat> reliability_table(const PredictionSet& predictions, int n_bins) {
  predictions.validate();
  if (n_bins < 1) throw InvalidInputError("n_bins must be >= 1");

  std::vector<std::size_t> counts(static_cast<std::size_t>(n_bins), 0);
  std::vector<double> confidence_sums(static_cast<std::size_t>(n_bins), 0.0);
  std::vector<double> correct_sums(static_cast<std::size_t>(n_bins), 0.0);

  for (std::size_t i = 0; i < predictions.probs.size(); ++i) {
    const double p = predictions.probs[i];
    const double confidence = std::max(p, 1.0 - p);
    const int predicted = p >= 0.5 ? 1 : 0;
    const std::size_t b = bin_of(confidence, n_bins);
    counts[b] += 1;
    confidence_sums[b] += confidence;
    correct_sums[b] += predicted == predictions.labels[i] ? 1.0 : 0.0;
  }

  std::vector<BinStat> bins(static_cast<std::size_t>(n_bins));
  for (int b = 0; b < n_bins; ++b) {
    auto& bin = bins[static_cast<std::size_t>(b)];
    bin.lower = static_cast<double>(b) / n_bins;
    bin.upper = static_cast<double>(b + 1) / n_bins;
    bin.count = counts[static_cast<std::size_t>(b)];
    if (bin.count > 0) {
      const auto count = static_cast<double>(bin.count);
      bin.mean_confidence = confidence_sums[static_cast<std::size_t>(b)] / count;
      bin.accuracy = correct_sums[static_cast<std::size_t>(b)] / count;
    }
  }
  return bins;
}

std::pair<double, std::vector<BinStat>> ece(const PredictionSet& predictions,
                                            int n_bins) {
  auto bins = reliability_table(predictions, n_bins);
  const auto n = static_cast<double>(predictions.probs.size());
  double total = 0.0;
  for (const auto& bin : bins) {
    if (bin.count == 0) continue;
    total += (static_cast<double>(bin.count) / n) *
             std::fabs(*bin.accuracy - *bin.mean_confidence);
  }
  return {total, std::move(bins)};
}

CalibrationReport evaluate(const PredictionSet& predictions, int n_bins) {
  CalibrationReport report;
  report.auc = auc(predictions);
  auto [value, bins] = ece(predictions, n_bins);
  report.ece = value;
  report.bins = std::move(bins);
  report.n = predictions.probs.size();
  return report;
}

MetricSummary aggregate(std::span<const CalibrationReport> reports) {
  if (reports.empty()) throw InvalidInputError("cannot aggregate zero reports");
  const auto n = static_cast<double>(reports.size());
  double auc_mean = 0.0;
  double ece_mean = 0.0;
  for (const auto& r : reports) {
    auc_mean += r.auc;
    ece_mean += r.ece;
  }
  auc_mean /= n;
  ece_mean /= n;

  double auc_var = 0.0;
  double ece_var = 0.0;
  if (reports.size() > 1) {
    for (const auto& r : reports) {
      auc_var += (r.auc - auc_mean) * (r.auc - auc_mean);
      ece_var += (r.ece - ece_mean) * (r.ece - ece_mean);
    }
    auc_var /= n - 1.0;
    ece_var /= n - 1.0;
  }

  MetricSummary summary;
  summary.mean_auc = 100.0 * auc_mean;
  summary.std_auc = 100.0 * std::sqrt(auc_var);
  summary.mean_ece = 100.0 * ece_mean;
  summary.std_ece = 100.0 * std::sqrt(ece_var);
  summary.n_reports = reports.size();
  return summary;
}

std::string format_table_cell(double mean, double stddev) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.1f ± %.1f", mean, stddev);
  return buffer;
}

void write_reliability_csv(const std::filesystem::path& path,
                           std::span<const BinStat> bins) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "bin_lower,bin_upper,count,mean_confidence,accuracy\n";
  char buffer[128];
  for (const auto& bin : bins) {
    std::snprintf(buffer, sizeof(buffer), "%.6f,%.6f,%zu", bin.lower, bin.upper,
                  bin.count);
    out << buffer;
    if (bin.count > 0) {
      std::snprintf(buffer, sizeof(buffer), ",%.6f,%.6f", *bin.mean_confidence,
                    *bin.accuracy);
      out << buffer;
    } else {
      out << ",,";
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string report_to_json_string(const CalibrationReport& report) {
  nlohmann::json bins = nlohmann::json::array();
  for (const auto& bin : report.bins) {
    nlohmann::json entry{{"lower", bin.lower},
                         {"upper", bin.upper},
                         {"count", bin.count}};
    entry["mean_confidence"] =
        bin.mean_confidence ? nlohmann::json(*bin.mean_confidence) : nlohmann::json();
    entry["accuracy"] = bin.accuracy ? nlohmann::json(*bin.accuracy) : nlohmann::json();
    bins.push_back(std::move(entry));
  }
  nlohmann::json doc{
      {"auc", report.auc}, {"ece", report.ece}, {"n", report.n}, {"bins", bins}};
  return doc.dump(2);
}

}  // namespace smoothcal
