#include "smoothcal/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "smoothcal/errors.hpp"
#include "test_util.hpp"

using namespace smoothcal;

namespace {

// Beta(a, b) density via log-gamma, integrated with composite Simpson; used
// as the independent oracle for the unanimity statistic.
double beta_pdf(double x, double a, double b) {
  const double log_norm = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
  return std::exp(log_norm + (a - 1.0) * std::log(x) + (b - 1.0) * std::log(1.0 - x));
}

double expected_unanimity(double a, double b, int n_annotators) {
  const int steps = 20000;  // even
  const double width = 1.0 / steps;
  auto integrand = [&](double delta) {
    const double q = 1.0 - delta / 2.0;
    return beta_pdf(delta, a, b) *
           (std::pow(q, n_annotators) + std::pow(1.0 - q, n_annotators));
  };
  double sum = 0.0;
  for (int i = 1; i < steps; ++i) {
    const double x = i * width;
    sum += (i % 2 == 0 ? 2.0 : 4.0) * integrand(x);
  }
  // The integrand vanishes fast enough at both endpoints for a=2, b=5.
  return sum * width / 3.0;
}

}  // namespace

TEST_CASE("majority_label") {
  CHECK(majority_label(4, 7) == 1);
  CHECK(majority_label(3, 7) == 0);
  CHECK(majority_label(0, 7) == 0);
  CHECK(majority_label(7, 7) == 1);
  CHECK_THROWS_AS(majority_label(3, 6), InvalidInputError);       // tie without policy
  CHECK(majority_label(3, 6, TieBreak::Positive) == 1);           // tie -> positive
  CHECK(majority_label(2, 6, TieBreak::Positive) == 0);
  CHECK(majority_label(4, 6) == 1);                               // clear majority is fine
  CHECK_THROWS_AS(majority_label(8, 7), InvalidInputError);
  CHECK_THROWS_AS(majority_label(-1, 7), InvalidInputError);
  CHECK_THROWS_AS(majority_label(0, 0), InvalidInputError);
}

TEST_CASE("vote model limit cases") {
  // Zero difficulty: every annotator votes the true class.
  {
    Rng rng(1);
    for (int i = 0; i < 50; ++i) {
      CHECK(sample_positive_votes(rng, 1, 0.0, 7) == 7);
      CHECK(sample_positive_votes(rng, 0, 0.0, 7) == 0);
    }
  }
  // Maximal difficulty: votes are Binomial(N, 1/2) regardless of the class.
  {
    Rng rng(2);
    double total = 0.0;
    const int rounds = 4000;
    for (int i = 0; i < rounds; ++i) {
      total += sample_positive_votes(rng, i % 2, 1.0, 7);
    }
    const double mean = total / rounds;  // expect 3.5, s.e. ~ 0.021
    CHECK_NEAR(mean, 3.5, 0.1);
  }
  CHECK_THROWS_AS([] { Rng rng(3); sample_positive_votes(rng, 2, 0.5, 7); }(),
                  InvalidInputError);
  CHECK_THROWS_AS([] { Rng rng(3); sample_positive_votes(rng, 1, 1.5, 7); }(),
                  InvalidInputError);
}

TEST_CASE("generator config validation") {
  GeneratorConfig config;
  CHECK_NOTHROW(config.validate());
  config.n_annotators = 6;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config.tie_break_positive = true;
  CHECK_NOTHROW(config.validate());
  config = GeneratorConfig{};
  config.n_train = 0;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = GeneratorConfig{};
  config.noise_sigma = 0.0;
  CHECK_THROWS_AS(config.validate(), ConfigError);

  const auto text = GeneratorConfig{}.to_json_string();
  const auto parsed = GeneratorConfig::from_json_string(text);
  CHECK(parsed.n_train == GeneratorConfig{}.n_train);
  CHECK_THROWS_AS(GeneratorConfig::from_json_string("{oops"), ParseError);
}

TEST_CASE("generation is deterministic and internally consistent") {
  GeneratorConfig config;
  config.n_train = 200;
  config.n_test = 80;
  config.feature_dim = 6;
  config.seed = 11;

  const auto a = generate(config);
  const auto b = generate(config);
  REQUIRE(a.train.size() == 200);
  REQUIRE(a.test.size() == 80);
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    CHECK(a.train[i].id == b.train[i].id);
    CHECK(a.train[i].features == b.train[i].features);  // bitwise
    CHECK(a.train[i].n_pos == b.train[i].n_pos);
    CHECK(a.train[i].gold == b.train[i].gold);
  }

  for (const auto& example : a.train) {
    CHECK(example.n_pos >= 0);
    CHECK(example.n_pos <= example.n_annotators);
    CHECK(example.gold == majority_label(example.n_pos, example.n_annotators));
    REQUIRE(example.latent_difficulty.has_value());
    CHECK(*example.latent_difficulty >= 0.0);
    CHECK(*example.latent_difficulty <= 1.0);
  }

  GeneratorConfig other = config;
  other.seed = 12;
  const auto c = generate(other);
  CHECK(a.train[0].features != c.train[0].features);
}

TEST_CASE("unanimity fraction matches the integration oracle") {
  GeneratorConfig config;
  config.n_train = 9000;
  config.n_test = 1000;
  config.feature_dim = 2;
  config.seed = 123;
  const auto dataset = generate(config);

  double unanimous = 0.0;
  double total = 0.0;
  auto tally = [&](const std::vector<AnnotatedExample>& examples) {
    for (const auto& e : examples) {
      total += 1.0;
      if (e.n_pos == 0 || e.n_pos == e.n_annotators) unanimous += 1.0;
    }
  };
  tally(dataset.train);
  tally(dataset.test);

  const double expected = expected_unanimity(2.0, 5.0, 7);
  CHECK_NEAR(expected, 0.39855587121212121, 1e-6);  // rational: polynomial integrand

  const double observed = unanimous / total;
  const double se = std::sqrt(expected * (1.0 - expected) / total);
  CHECK(std::fabs(observed - expected) <= 3.0 * se);
}

TEST_CASE("vote disagreement rises across difficulty deciles") {
  GeneratorConfig config;
  config.n_train = 10000;
  config.n_test = 1000;
  config.feature_dim = 2;
  config.seed = 7;
  const auto dataset = generate(config);

  std::vector<std::pair<double, double>> by_difficulty;  // (delta, |n/N - gold|)
  for (const auto& e : dataset.train) {
    by_difficulty.emplace_back(
        *e.latent_difficulty,
        std::fabs(static_cast<double>(e.n_pos) / e.n_annotators - e.gold));
  }
  std::sort(by_difficulty.begin(), by_difficulty.end());

  const std::size_t decile = by_difficulty.size() / 10;
  double previous = -1.0;
  for (int d = 0; d < 10; ++d) {
    double sum = 0.0;
    for (std::size_t i = decile * d; i < decile * (d + 1); ++i) {
      sum += by_difficulty[i].second;
    }
    const double mean = sum / static_cast<double>(decile);
    CHECK(mean >= previous);
    previous = mean;
  }
}

TEST_CASE("save and load round-trip") {
  testutil::ScratchDir scratch("dataset");
  GeneratorConfig config;
  config.n_train = 40;
  config.n_test = 20;
  config.feature_dim = 3;
  config.seed = 21;
  const auto dataset = generate(config);
  save(dataset, scratch.path());

  const auto loaded = load(scratch.path());
  CHECK(loaded.feature_dim == dataset.feature_dim);
  CHECK(loaded.n_annotators == dataset.n_annotators);
  REQUIRE(loaded.train.size() == dataset.train.size());
  REQUIRE(loaded.test.size() == dataset.test.size());
  for (std::size_t i = 0; i < dataset.train.size(); ++i) {
    CHECK(loaded.train[i].id == dataset.train[i].id);
    CHECK(loaded.train[i].gold == dataset.train[i].gold);
    CHECK(loaded.train[i].n_pos == dataset.train[i].n_pos);
    CHECK(loaded.train[i].n_annotators == dataset.train[i].n_annotators);
    // Features were quantized at generation, so the round-trip is bitwise.
    CHECK(loaded.train[i].features == dataset.train[i].features);
  }
  REQUIRE(loaded.provenance.has_value());
  CHECK(loaded.provenance->seed == 21);

  // Saving the loaded dataset reproduces identical bytes.
  testutil::ScratchDir second("dataset2");
  save(loaded, second.path());
  CHECK(testutil::slurp(scratch / "train.csv") == testutil::slurp(second / "train.csv"));
  CHECK(testutil::slurp(scratch / "test.csv") == testutil::slurp(second / "test.csv"));
}

TEST_CASE("load rejects malformed files with row and column context") {
  testutil::ScratchDir scratch("malformed");
  GeneratorConfig config;
  config.n_train = 5;
  config.n_test = 3;
  config.feature_dim = 2;
  const auto dataset = generate(config);
  save(dataset, scratch.path());

  const std::string header = "id,gold,n_pos,n_annotators,f0,f1\n";

  // n_pos beyond the annotator count.
  testutil::spit(scratch / "train.csv", header + "a,1,9,7,0.1,0.2\n");
  try {
    load(scratch.path());
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    const std::string what = e.what();
    CHECK(what.find("row 2") != std::string::npos);
    CHECK(what.find("n_pos") != std::string::npos);
  }

  // Non-numeric feature names the column.
  testutil::spit(scratch / "train.csv", header + "a,1,7,7,zzz,0.2\n");
  try {
    load(scratch.path());
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("f0") != std::string::npos);
  }

  // Missing column.
  testutil::spit(scratch / "train.csv", header + "a,1,7,7,0.1\n");
  CHECK_THROWS_AS(load(scratch.path()), ParseError);

  // Gold inconsistent with the vote majority.
  testutil::spit(scratch / "train.csv", header + "a,0,7,7,0.1,0.2\n");
  try {
    load(scratch.path());
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("gold") != std::string::npos);
  }

  // Header-only file is an empty dataset.
  testutil::spit(scratch / "train.csv", header);
  CHECK_THROWS_AS(load(scratch.path()), ParseError);

  // Duplicate ids across splits.
  testutil::spit(scratch / "train.csv", header + "dup,1,7,7,0.1,0.2\n");
  testutil::spit(scratch / "test.csv", header + "dup,1,7,7,0.1,0.2\n");
  CHECK_THROWS_AS(load(scratch.path()), ParseError);

  CHECK_THROWS_AS(load(scratch / "no-such-dir"), IoError);
}
