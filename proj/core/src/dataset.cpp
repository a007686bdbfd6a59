#include "smoothcal/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "smoothcal/errors.hpp"
#include "smoothcal/version.hpp"
#include "parse_util.hpp"

namespace smoothcal {

namespace {

using nlohmann::json;

// Round through the on-disk decimal form so an in-memory dataset and its
// CSV representation are the same numbers.
double quantize_12sig(double x) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.12g", x);
  return std::strtod(buffer, nullptr);
}

std::string example_id(const char* prefix, int index) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%s-%06d", prefix, index);
  return buffer;
}

json generator_to_json(const GeneratorConfig& config) {
  return json{{"n_train", config.n_train},
              {"n_test", config.n_test},
              {"feature_dim", config.feature_dim},
              {"n_annotators", config.n_annotators},
              {"difficulty_alpha", config.difficulty_alpha},
              {"difficulty_beta", config.difficulty_beta},
              {"class_separation", config.class_separation},
              {"noise_sigma", config.noise_sigma},
              {"seed", config.seed},
              {"tie_break_positive", config.tie_break_positive}};
}

GeneratorConfig generator_from_json(const json& doc) {
  GeneratorConfig config;
  config.n_train = doc.value("n_train", config.n_train);
  config.n_test = doc.value("n_test", config.n_test);
  config.feature_dim = doc.value("feature_dim", config.feature_dim);
  config.n_annotators = doc.value("n_annotators", config.n_annotators);
  config.difficulty_alpha = doc.value("difficulty_alpha", config.difficulty_alpha);
  config.difficulty_beta = doc.value("difficulty_beta", config.difficulty_beta);
  config.class_separation = doc.value("class_separation", config.class_separation);
  config.noise_sigma = doc.value("noise_sigma", config.noise_sigma);
  config.seed = doc.value("seed", config.seed);
  config.tie_break_positive = doc.value("tie_break_positive", config.tie_break_positive);
  return config;
}

void write_split_csv(const std::filesystem::path& path,
                     const std::vector<AnnotatedExample>& examples, int feature_dim) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "id,gold,n_pos,n_annotators";
  for (int j = 0; j < feature_dim; ++j) out << ",f" << j;
  out << '\n';
  char buffer[40];
  for (const auto& example : examples) {
    out << example.id << ',' << example.gold << ',' << example.n_pos << ','
        << example.n_annotators;
    for (double f : example.features) {
      std::snprintf(buffer, sizeof(buffer), "%.12g", f);
      out << ',' << buffer;
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<AnnotatedExample> read_split_csv(const std::filesystem::path& path,
                                             int feature_dim, int n_annotators,
                                             bool tie_break_positive) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw ParseError("'" + path.string() + "' is empty");
  detail::strip_carriage_return(line);

  std::string expected_header = "id,gold,n_pos,n_annotators";
  for (int j = 0; j < feature_dim; ++j) expected_header += ",f" + std::to_string(j);
  if (line != expected_header) {
    throw ParseError("'" + path.string() + "' row 1: header does not match the "
                     "dataset schema (expected '" + expected_header + "')");
  }

  const std::size_t expected_fields = 4 + static_cast<std::size_t>(feature_dim);
  std::vector<AnnotatedExample> examples;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    detail::strip_carriage_return(line);
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    const std::string where = "'" + path.string() + "' row " + std::to_string(row);
    if (fields.size() != expected_fields) {
      throw ParseError(where + ": expected " + std::to_string(expected_fields) +
                       " columns, got " + std::to_string(fields.size()));
    }
    AnnotatedExample example;
    example.id = std::string(fields[0]);
    if (example.id.empty()) throw ParseError(where + " column id: empty");
    if (!detail::parse_int(fields[1], example.gold) ||
        (example.gold != 0 && example.gold != 1)) {
      throw ParseError(where + " column gold: expected 0 or 1, got '" +
                       std::string(fields[1]) + "'");
    }
    if (!detail::parse_int(fields[2], example.n_pos) || example.n_pos < 0) {
      throw ParseError(where + " column n_pos: expected a count, got '" +
                       std::string(fields[2]) + "'");
    }
    if (!detail::parse_int(fields[3], example.n_annotators) ||
        example.n_annotators < 1) {
      throw ParseError(where + " column n_annotators: expected a positive count, got '" +
                       std::string(fields[3]) + "'");
    }
    if (example.n_annotators != n_annotators) {
      throw ParseError(where + " column n_annotators: expected " +
                       std::to_string(n_annotators) + " per metadata, got " +
                       std::to_string(example.n_annotators));
    }
    if (example.n_pos > example.n_annotators) {
      throw ParseError(where + " column n_pos: " + std::to_string(example.n_pos) +
                       " exceeds n_annotators = " + std::to_string(example.n_annotators));
    }
    example.features.resize(static_cast<std::size_t>(feature_dim));
    for (int j = 0; j < feature_dim; ++j) {
      const std::size_t field = 4 + static_cast<std::size_t>(j);
      double value = 0.0;
      if (!detail::parse_double(fields[field], value) || !std::isfinite(value)) {
        throw ParseError(where + " column f" + std::to_string(j) +
                         ": not a finite number: '" + std::string(fields[field]) + "'");
      }
      example.features[static_cast<std::size_t>(j)] = value;
    }
    const std::optional<TieBreak> tie_break =
        tie_break_positive ? std::optional<TieBreak>(TieBreak::Positive) : std::nullopt;
    const int expected_gold = majority_label(example.n_pos, example.n_annotators, tie_break);
    if (example.gold != expected_gold) {
      throw ParseError(where + " column gold: " + std::to_string(example.gold) +
                       " is inconsistent with the majority of " +
                       std::to_string(example.n_pos) + "/" +
                       std::to_string(example.n_annotators) + " votes");
    }
    examples.push_back(std::move(example));
  }
  if (examples.empty()) {
    throw ParseError("'" + path.string() + "' holds no examples (header only)");
  }
  return examples;
}

}  // namespace

void GeneratorConfig::validate() const {
  if (n_train < 1) throw ConfigError("n_train must be positive");
  if (n_test < 1) throw ConfigError("n_test must be positive");
  if (feature_dim < 1) throw ConfigError("feature_dim must be positive");
  if (n_annotators < 1) throw ConfigError("n_annotators must be positive");
  if (n_annotators % 2 == 0 && !tie_break_positive) {
    throw ConfigError("even n_annotators can tie; pass the tie-break flag to accept it");
  }
  if (!(difficulty_alpha > 0.0) || !(difficulty_beta > 0.0)) {
    throw ConfigError("difficulty Beta shapes must be positive");
  }
  if (!(class_separation > 0.0)) throw ConfigError("class_separation must be positive");
  if (!(noise_sigma > 0.0)) throw ConfigError("noise_sigma must be positive");
}

std::string GeneratorConfig::to_json_string() const {
  return generator_to_json(*this).dump(2);
}

GeneratorConfig GeneratorConfig::from_json_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("generator config is not valid JSON: ") + e.what());
  }
  return generator_from_json(doc);
}

int majority_label(int n_pos, int n_annotators, std::optional<TieBreak> tie_break) {
  if (n_annotators < 1) {
    throw InvalidInputError("majority vote needs at least one annotator");
  }
  if (n_pos < 0 || n_pos > n_annotators) {
    throw InvalidInputError("n_pos must lie in [0, N], got n_pos = " +
                            std::to_string(n_pos) + " with N = " +
                            std::to_string(n_annotators));
  }
  if (2 * n_pos > n_annotators) return 1;
  if (2 * n_pos == n_annotators) {
    if (tie_break == TieBreak::Positive) return 1;
    throw InvalidInputError("tied vote with an even annotator count; a tie-break "
                            "policy is required");
  }
  return 0;
}

int sample_positive_votes(Rng& rng, int true_class, double difficulty,
                          int n_annotators) {
  if (true_class != 0 && true_class != 1) {
    throw InvalidInputError("true_class must be 0 or 1");
  }
  if (!(difficulty >= 0.0) || difficulty > 1.0) {
    throw InvalidInputError("difficulty must lie in [0, 1]");
  }
  const double p_correct = 1.0 - difficulty / 2.0;
  int votes_true = 0;
  for (int a = 0; a < n_annotators; ++a) {
    if (rng.bernoulli(p_correct)) ++votes_true;
  }
  return true_class == 1 ? votes_true : n_annotators - votes_true;
}

Dataset generate(const GeneratorConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const std::optional<TieBreak> tie_break =
      config.tie_break_positive ? std::optional<TieBreak>(TieBreak::Positive)
                                : std::nullopt;
  const double direction = 1.0 / std::sqrt(static_cast<double>(config.feature_dim));

  auto make_split = [&](const char* prefix, int count) {
    std::vector<AnnotatedExample> examples;
    examples.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
      const int true_class = rng.bernoulli(0.5) ? 1 : 0;
      const double difficulty = rng.beta(config.difficulty_alpha, config.difficulty_beta);
      AnnotatedExample example;
      example.id = example_id(prefix, i);
      example.features.resize(static_cast<std::size_t>(config.feature_dim));
      const double signal =
          (1.0 - difficulty) * config.class_separation * (2 * true_class - 1) * direction;
      for (int j = 0; j < config.feature_dim; ++j) {
        example.features[static_cast<std::size_t>(j)] =
            quantize_12sig(signal + config.noise_sigma * rng.normal());
      }
      example.n_annotators = config.n_annotators;
      example.n_pos =
          sample_positive_votes(rng, true_class, difficulty, config.n_annotators);
      example.gold = majority_label(example.n_pos, example.n_annotators, tie_break);
      example.latent_difficulty = difficulty;
      examples.push_back(std::move(example));
    }
    return examples;
  };

  Dataset dataset;
  dataset.train = make_split("train", config.n_train);
  dataset.test = make_split("test", config.n_test);
  dataset.feature_dim = config.feature_dim;
  dataset.n_annotators = config.n_annotators;
  dataset.tie_break_positive = config.tie_break_positive;
  dataset.provenance = config;
  return dataset;
}

void save(const Dataset& dataset, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());

  write_split_csv(dir / "train.csv", dataset.train, dataset.feature_dim);
  write_split_csv(dir / "test.csv", dataset.test, dataset.feature_dim);

  json meta{{"artifact_version", kVersion},
            {"feature_dim", dataset.feature_dim},
            {"n_annotators", dataset.n_annotators},
            {"n_train", dataset.train.size()},
            {"n_test", dataset.test.size()},
            {"tie_break_positive", dataset.tie_break_positive}};
  meta["generator"] =
      dataset.provenance ? generator_to_json(*dataset.provenance) : json();
  std::ofstream out(dir / "meta.json");
  if (!out) throw IoError("cannot open '" + (dir / "meta.json").string() + "' for writing");
  out << meta.dump(2) << '\n';
  if (!out) throw IoError("write failed for '" + (dir / "meta.json").string() + "'");
}

Dataset load(const std::filesystem::path& dir) {
  const auto meta_path = dir / "meta.json";
  std::ifstream meta_in(meta_path);
  if (!meta_in) {
    throw IoError("cannot open '" + meta_path.string() +
                  "'; a dataset directory holds train.csv, test.csv and meta.json");
  }
  json meta;
  try {
    meta_in >> meta;
  } catch (const json::exception& e) {
    throw ParseError("'" + meta_path.string() + "': invalid JSON: " + e.what());
  }
  if (!meta.contains("feature_dim") || !meta.contains("n_annotators")) {
    throw ParseError("'" + meta_path.string() +
                     "': missing feature_dim or n_annotators");
  }

  Dataset dataset;
  dataset.feature_dim = meta["feature_dim"].get<int>();
  dataset.n_annotators = meta["n_annotators"].get<int>();
  dataset.tie_break_positive = meta.value("tie_break_positive", false);
  if (dataset.feature_dim < 1) {
    throw ParseError("'" + meta_path.string() + "': feature_dim must be positive");
  }
  if (dataset.n_annotators < 1) {
    throw ParseError("'" + meta_path.string() + "': n_annotators must be positive");
  }
  if (meta.contains("generator") && !meta["generator"].is_null()) {
    dataset.provenance = generator_from_json(meta["generator"]);
  }

  dataset.train = read_split_csv(dir / "train.csv", dataset.feature_dim,
                                 dataset.n_annotators, dataset.tie_break_positive);
  dataset.test = read_split_csv(dir / "test.csv", dataset.feature_dim,
                                dataset.n_annotators, dataset.tie_break_positive);

  std::unordered_set<std::string> seen;
  for (const auto& example : dataset.train) {
    if (!seen.insert(example.id).second) {
      throw ParseError("duplicate id '" + example.id + "' in train split");
    }
  }
  for (const auto& example : dataset.test) {
    if (!seen.insert(example.id).second) {
      throw ParseError("id '" + example.id + "' appears in both splits");
    }
  }
  return dataset;
}

}  // namespace smoothcal
