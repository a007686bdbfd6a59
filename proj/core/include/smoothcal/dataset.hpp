#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "smoothcal/rng.hpp"

namespace smoothcal {

enum class TieBreak { Positive };

// One labeled example together with its annotator vote tally. `gold` is the
// majority vote over `n_annotators`; `latent_difficulty` is populated by the
// synthetic generator only and is not persisted.
struct AnnotatedExample {
  std::string id;
  std::vector<double> features;
  int n_pos = 0;         // annotators voting the positive class
  int n_annotators = 0;  // total annotators
  int gold = 0;          // majority label in {0, 1}
  std::optional<double> latent_difficulty;
};

struct Dataset;

// Synthetic multi-annotator generator. Each example draws a true class
// z ~ Bernoulli(1/2) and a difficulty delta ~ Beta(a, b); features are
// (1 - delta) * class_separation * (2z - 1) * u + noise with u the fixed unit
// direction (1, ..., 1)/sqrt(d) and isotropic Gaussian noise; each annotator
// independently votes z with probability 1 - delta/2. Gold is the majority
// vote, which for hard examples can disagree with z.
struct GeneratorConfig {
  int n_train = 2000;
  int n_test = 1000;
  int feature_dim = 20;
  int n_annotators = 7;
  double difficulty_alpha = 2.0;  // Beta shape a
  double difficulty_beta = 5.0;   // Beta shape b
  double class_separation = 2.0;
  double noise_sigma = 1.0;
  std::uint64_t seed = 1;
  // Even annotator counts can tie; they are rejected unless this is set, in
  // which case ties resolve to the positive class.
  bool tie_break_positive = false;

  void validate() const;
  std::string to_json_string() const;
  static GeneratorConfig from_json_string(const std::string& text);
};

struct Dataset {
  std::vector<AnnotatedExample> train;
  std::vector<AnnotatedExample> test;
  int feature_dim = 0;
  int n_annotators = 0;
  bool tie_break_positive = false;
  std::optional<GeneratorConfig> provenance;  // set when generated
};

// Majority vote; n_annotators must be odd unless a tie-break policy is given.
int majority_label(int n_pos, int n_annotators,
                   std::optional<TieBreak> tie_break = std::nullopt);

// Vote model shared by the generator and its statistical tests: each of
// n_annotators votes the true class with probability 1 - difficulty/2.
// Returns the number of votes for the positive class.
int sample_positive_votes(Rng& rng, int true_class, double difficulty,
                          int n_annotators);

Dataset generate(const GeneratorConfig& config);

// On-disk layout: <dir>/train.csv, <dir>/test.csv, <dir>/meta.json. The CSV
// schema is `id,gold,n_pos,n_annotators,f0,...,f{d-1}` with features at 12
// significant digits (the generator already quantizes features to that
// precision, so save/load round-trips are exact). meta.json records the
// dimensions, counts, tie-break policy, and the generator config if any.
void save(const Dataset& dataset, const std::filesystem::path& dir);
Dataset load(const std::filesystem::path& dir);

}  // namespace smoothcal
