#include "smoothcal/smoothing.hpp"

#include <cmath>
#include <vector>

#include "smoothcal/errors.hpp"
#include "test_util.hpp"

using namespace smoothcal;

// Direct transcriptions of the target formulas, kept independent of the
// library implementation (naive sigmoid, ceil-based majority threshold).
namespace oracle {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double vanilla(int y_k, double alpha) { return (1.0 - alpha) * y_k + alpha / 2.0; }

double agreement_linear(int n_k, int n, double alpha) {
  return (1.0 - alpha) * (static_cast<double>(n_k) / n) + alpha / 2.0;
}

double agreement_piecewise(int n_k, int n, double omega) {
  const int n_m = static_cast<int>(std::ceil(n / 2.0));
  if (n_k > n_m) return (1.0 - omega) + omega * (static_cast<double>(n_k - n_m) / (n_m - 1));
  if (n_k == n_m) return 0.5;
  return omega * (static_cast<double>(n_k) / (n_m - 1));
}

double agreement_nonlinear(int n_k, int n, double phi) {
  return sigmoid(phi * (static_cast<double>(n_k) / n - 0.5));
}

double confidence_vanilla(double c, double alpha) {
  return (1.0 - alpha) * (c >= 0.5 ? 1.0 : 0.0) + alpha / 2.0;
}

double confidence_linear(double c, double alpha) {
  return (1.0 - alpha) * c + alpha / 2.0;
}

double confidence_piecewise(double c, double omega) {
  if (c > 0.5) return (1.0 - omega) + ((c - 0.5) / 0.5) * omega;
  if (c == 0.5) return 0.5;
  return (c / 0.5) * omega;
}

double confidence_nonlinear(double c, double phi) { return sigmoid(phi * (c - 0.5)); }

}  // namespace oracle

namespace {

const std::vector<double> kAlphaGrid = [] {
  std::vector<double> grid;
  for (int i = 1; i <= 19; ++i) grid.push_back(i / 20.0);
  return grid;
}();
const std::vector<double> kOmegaGrid = [] {
  std::vector<double> grid;
  for (int i = 1; i <= 10; ++i) grid.push_back(i / 20.0);
  return grid;
}();
const std::vector<double> kPhiGrid = [] {
  std::vector<double> grid;
  for (int i = 1; i <= 30; ++i) grid.push_back(i / 2.0);
  return grid;
}();
const std::vector<double> kConfidenceGrid = [] {
  std::vector<double> grid;
  for (int i = 0; i <= 100; ++i) grid.push_back(i / 100.0);
  return grid;
}();

}  // namespace

TEST_CASE("vanilla label smoothing") {
  CHECK_NEAR(smooth_vanilla(1, 0.2), 0.9, 1e-12);
  CHECK_NEAR(smooth_vanilla(0, 0.2), 0.1, 1e-12);
  // alpha -> 0+ recovers the hard label
  CHECK_NEAR(smooth_vanilla(1, 1e-12), 1.0, 1e-9);
  CHECK_THROWS_AS(smooth_vanilla(1, 0.0), ConfigError);
  CHECK_THROWS_AS(smooth_vanilla(1, 1.2), ConfigError);
  CHECK_THROWS_AS(smooth_vanilla(2, 0.2), InvalidInputError);
  CHECK_THROWS_AS(smooth_vanilla(1, 0.2, 3), ConfigError);
}

TEST_CASE("agreement-linear label smoothing") {
  CHECK_NEAR(smooth_agreement_linear({7, 7}, 0.1), 0.95, 1e-12);
  CHECK_NEAR(smooth_agreement_linear({4, 7}, 0.1), 0.564285714285714286, 1e-12);
  // Half agreement pins the target at the midpoint for any alpha.
  for (double alpha : kAlphaGrid) {
    CHECK_NEAR(smooth_agreement_linear({1, 2}, alpha), 0.5, 1e-12);
  }
  CHECK_THROWS_AS(smooth_agreement_linear({0, 0}, 0.1), InvalidInputError);
  CHECK_THROWS_AS(smooth_agreement_linear({8, 7}, 0.1), InvalidInputError);
  CHECK_THROWS_AS(smooth_agreement_linear({-1, 7}, 0.1), InvalidInputError);
}

TEST_CASE("agreement-piecewise label smoothing") {
  const std::vector<double> expected{0.0, 0.1, 0.2, 0.3, 0.5, 0.8, 0.9, 1.0};
  for (int n_k = 0; n_k <= 7; ++n_k) {
    CHECK_NEAR(smooth_agreement_piecewise({n_k, 7}, 0.3),
               expected[static_cast<std::size_t>(n_k)], 1e-12);
  }
  for (double omega : kOmegaGrid) {
    CHECK(smooth_agreement_piecewise({4, 7}, omega) == 0.5);
  }
  // n_m = 1 would divide by zero; rejected for N < 3.
  CHECK_THROWS_AS(smooth_agreement_piecewise({1, 2}, 0.3), ConfigError);
  CHECK_THROWS_AS(smooth_agreement_piecewise({1, 1}, 0.3), ConfigError);
  CHECK_THROWS_AS(smooth_agreement_piecewise({3, 7}, 0.0), ConfigError);
  CHECK_THROWS_AS(smooth_agreement_piecewise({3, 7}, 0.6), ConfigError);
}

TEST_CASE("agreement-nonlinear label smoothing") {
  CHECK_NEAR(smooth_agreement_nonlinear({7, 7}, 7.5), 0.97702263008997438, 1e-12);
  CHECK_NEAR(smooth_agreement_nonlinear({4, 7}, 7.5), 0.63081488937797941, 1e-12);
  for (double phi : kPhiGrid) {
    CHECK(smooth_agreement_nonlinear({1, 2}, phi) == 0.5);
  }
  // phi -> 0+ collapses every target to the midpoint.
  for (int n_k = 0; n_k <= 7; ++n_k) {
    CHECK_NEAR(smooth_agreement_nonlinear({n_k, 7}, 1e-9), 0.5, 1e-9);
  }
  CHECK_THROWS_AS(smooth_agreement_nonlinear({4, 7}, 0.0), ConfigError);
  CHECK_THROWS_AS(smooth_agreement_nonlinear({4, 7}, -1.0), ConfigError);
}

TEST_CASE("confidence-vanilla label smoothing") {
  CHECK_NEAR(smooth_confidence_vanilla(0.8, 0.2), 0.9, 1e-12);
  CHECK_NEAR(smooth_confidence_vanilla(0.3, 0.2), 0.1, 1e-12);
  CHECK_NEAR(smooth_confidence_vanilla(1.0, 1e-12), 1.0, 1e-9);
  // The rounding tie at c = 0.5 goes to 1.
  CHECK_NEAR(smooth_confidence_vanilla(0.5, 0.2), 0.9, 1e-12);
  CHECK_THROWS_AS(smooth_confidence_vanilla(-0.1, 0.2), InvalidInputError);
  CHECK_THROWS_AS(smooth_confidence_vanilla(1.5, 0.2), InvalidInputError);
}

TEST_CASE("confidence-linear label smoothing") {
  for (double alpha : kAlphaGrid) {
    CHECK_NEAR(smooth_confidence_linear(0.5, alpha), 0.5, 1e-12);
  }
  CHECK_NEAR(smooth_confidence_linear(0.9, 0.1), 0.86, 1e-12);
  CHECK_NEAR(smooth_confidence_linear(0.0, 0.1), 0.05, 1e-12);
  CHECK_THROWS_AS(smooth_confidence_linear(1.1, 0.1), InvalidInputError);
}

TEST_CASE("confidence-piecewise label smoothing") {
  for (double omega : kOmegaGrid) {
    CHECK(smooth_confidence_piecewise(0.5, omega) == 0.5);
  }
  CHECK_NEAR(smooth_confidence_piecewise(0.75, 0.3), 0.85, 1e-12);
  CHECK_NEAR(smooth_confidence_piecewise(0.2, 0.3), 0.12, 1e-12);
  // One-sided values straddling the midpoint: omega below, 1 - omega above.
  for (double omega : kOmegaGrid) {
    const double below = smooth_confidence_piecewise(std::nextafter(0.5, 0.0), omega);
    const double above = smooth_confidence_piecewise(std::nextafter(0.5, 1.0), omega);
    CHECK_NEAR(below, omega, 1e-9);
    CHECK_NEAR(above, 1.0 - omega, 1e-9);
    CHECK_NEAR(above - below, 1.0 - 2.0 * omega, 1e-9);
  }
  CHECK_THROWS_AS(smooth_confidence_piecewise(0.2, 0.0), ConfigError);
}

TEST_CASE("confidence-nonlinear label smoothing") {
  for (double phi : kPhiGrid) {
    CHECK(smooth_confidence_nonlinear(0.5, phi) == 0.5);
  }
  CHECK_NEAR(smooth_confidence_nonlinear(1.0, 7.5), 0.97702263008997438, 1e-12);
  CHECK_NEAR(smooth_confidence_nonlinear(0.0, 7.5), 0.02297736991002562, 1e-12);
  CHECK_THROWS_AS(smooth_confidence_nonlinear(0.5, 0.0), ConfigError);
}

TEST_CASE("stable sigmoid does not overflow") {
  CHECK(stable_sigmoid(1000.0) == 1.0);
  CHECK(stable_sigmoid(-1000.0) == 0.0);
  CHECK(stable_sigmoid(0.0) == 0.5);
  CHECK_NEAR(stable_sigmoid(3.75), 0.97702263008997438, 1e-15);
  CHECK_NEAR(stable_sigmoid(-3.75), 0.02297736991002562, 1e-15);
}

TEST_CASE("apply_smoothing dispatches and reports missing data") {
  AnnotatedExample example;
  example.id = "train-000042";
  example.n_pos = 4;
  example.n_annotators = 7;
  example.gold = 1;

  CHECK(apply_smoothing({SmoothingMethod::HardLabel, 0.0}, example) == 1.0);
  CHECK_NEAR(apply_smoothing({SmoothingMethod::AgreementNonlinear, 7.5}, example),
             0.63081488937797941, 1e-12);
  CHECK_NEAR(apply_smoothing({SmoothingMethod::ConfidenceVanilla, 0.2}, example, 0.8),
             0.9, 1e-12);

  try {
    apply_smoothing({SmoothingMethod::ConfidenceLinear, 0.1}, example);
    FAIL("expected MissingDataError");
  } catch (const MissingDataError& e) {
    CHECK(std::string(e.what()).find("train-000042") != std::string::npos);
  }

  AnnotatedExample no_votes;
  no_votes.id = "x-1";
  no_votes.gold = 0;
  no_votes.n_annotators = 0;
  try {
    apply_smoothing({SmoothingMethod::AgreementLinear, 0.1}, no_votes);
    FAIL("expected MissingDataError");
  } catch (const MissingDataError& e) {
    CHECK(std::string(e.what()).find("x-1") != std::string::npos);
  }
}

TEST_CASE("method names round-trip") {
  for (SmoothingMethod method :
       {SmoothingMethod::HardLabel, SmoothingMethod::Vanilla,
        SmoothingMethod::AgreementLinear, SmoothingMethod::AgreementPiecewise,
        SmoothingMethod::AgreementNonlinear, SmoothingMethod::ConfidenceVanilla,
        SmoothingMethod::ConfidenceLinear, SmoothingMethod::ConfidencePiecewise,
        SmoothingMethod::ConfidenceNonlinear}) {
    const auto parsed = parse_method(method_name(method));
    REQUIRE(parsed.has_value());
    CHECK(*parsed == method);
  }
  CHECK_FALSE(parse_method("no-such-method").has_value());
}

TEST_CASE("every method matches its oracle over moderate grids") {
  for (int n : {3, 7}) {
    for (int n_k = 0; n_k <= n; ++n_k) {
      const VoteCount votes{n_k, n};
      for (double alpha : kAlphaGrid) {
        CHECK_NEAR(smooth_agreement_linear(votes, alpha),
                   oracle::agreement_linear(n_k, n, alpha), 1e-12);
      }
      for (double omega : kOmegaGrid) {
        CHECK_NEAR(smooth_agreement_piecewise(votes, omega),
                   oracle::agreement_piecewise(n_k, n, omega), 1e-12);
      }
      for (double phi : kPhiGrid) {
        CHECK_NEAR(smooth_agreement_nonlinear(votes, phi),
                   oracle::agreement_nonlinear(n_k, n, phi), 1e-12);
      }
    }
  }
  for (double c : kConfidenceGrid) {
    for (double alpha : kAlphaGrid) {
      CHECK_NEAR(smooth_confidence_vanilla(c, alpha), oracle::confidence_vanilla(c, alpha),
                 1e-12);
      CHECK_NEAR(smooth_confidence_linear(c, alpha), oracle::confidence_linear(c, alpha),
                 1e-12);
    }
    for (double omega : kOmegaGrid) {
      CHECK_NEAR(smooth_confidence_piecewise(c, omega),
                 oracle::confidence_piecewise(c, omega), 1e-12);
    }
    for (double phi : kPhiGrid) {
      CHECK_NEAR(smooth_confidence_nonlinear(c, phi),
                 oracle::confidence_nonlinear(c, phi), 1e-12);
    }
  }
  for (int y_k : {0, 1}) {
    for (double alpha : kAlphaGrid) {
      CHECK_NEAR(smooth_vanilla(y_k, alpha), oracle::vanilla(y_k, alpha), 1e-12);
    }
  }
}

TEST_CASE("range, monotonicity, and symmetry properties") {
  for (int n : {3, 5, 7}) {
    const int n_m = (n + 1) / 2;
    for (double alpha : kAlphaGrid) {
      double previous = -1.0;
      for (int n_k = 0; n_k <= n; ++n_k) {
        const double y = smooth_agreement_linear({n_k, n}, alpha);
        CHECK(y >= 0.0);
        CHECK(y <= 1.0);
        CHECK(y >= previous);
        previous = y;
        const double mirrored = smooth_agreement_linear({n - n_k, n}, alpha);
        CHECK_NEAR(y + mirrored, 1.0, 1e-12);
      }
    }
    for (double omega : kOmegaGrid) {
      double previous = -1.0;
      for (int n_k = 0; n_k <= n; ++n_k) {
        const double y = smooth_agreement_piecewise({n_k, n}, omega);
        CHECK(y >= 0.0);
        CHECK(y <= 1.0);
        CHECK(y >= previous);
        previous = y;
        // The (n_m, n - n_m) pair is asymmetric by construction; all other
        // pairs mirror exactly.
        if (n_k != n_m && n - n_k != n_m) {
          CHECK_NEAR(y + smooth_agreement_piecewise({n - n_k, n}, omega), 1.0, 1e-12);
        }
        if (n_k > 0 && n_k < n) {
          CHECK(y > 0.0);
          CHECK(y < 1.0);
        }
      }
      CHECK_NEAR(smooth_agreement_piecewise({0, n}, omega), 0.0, 1e-15);
      CHECK_NEAR(smooth_agreement_piecewise({n, n}, omega), 1.0, 2e-16);
    }
    for (double phi : kPhiGrid) {
      double previous = -1.0;
      for (int n_k = 0; n_k <= n; ++n_k) {
        const double y = smooth_agreement_nonlinear({n_k, n}, phi);
        CHECK(y > 0.0);  // never exactly 0 or 1 for finite phi
        CHECK(y < 1.0);
        CHECK(y >= previous);
        previous = y;
        CHECK_NEAR(y + smooth_agreement_nonlinear({n - n_k, n}, phi), 1.0, 1e-12);
      }
    }
  }

  for (double alpha : kAlphaGrid) {
    double prev_linear = -1.0;
    double prev_vanilla = -1.0;
    for (double c : kConfidenceGrid) {
      const double linear = smooth_confidence_linear(c, alpha);
      const double vanilla = smooth_confidence_vanilla(c, alpha);
      CHECK(linear >= 0.0);
      CHECK(linear <= 1.0);
      CHECK(linear >= prev_linear);
      CHECK(vanilla >= prev_vanilla);
      prev_linear = linear;
      prev_vanilla = vanilla;
      CHECK_NEAR(linear + smooth_confidence_linear(1.0 - c, alpha), 1.0, 1e-12);
      if (c != 0.5) {
        CHECK_NEAR(vanilla + smooth_confidence_vanilla(1.0 - c, alpha), 1.0, 1e-12);
      }
    }
  }
  for (double omega : kOmegaGrid) {
    double previous = -1.0;
    for (double c : kConfidenceGrid) {
      const double y = smooth_confidence_piecewise(c, omega);
      CHECK(y >= 0.0);
      CHECK(y <= 1.0);
      CHECK(y >= previous);
      previous = y;
    }
  }
  for (double phi : kPhiGrid) {
    double previous = -1.0;
    for (double c : kConfidenceGrid) {
      const double y = smooth_confidence_nonlinear(c, phi);
      CHECK(y > 0.0);
      CHECK(y < 1.0);
      CHECK(y >= previous);
      previous = y;
      CHECK_NEAR(y + smooth_confidence_nonlinear(1.0 - c, phi), 1.0, 1e-12);
    }
  }
}

TEST_CASE("compute_targets aligns confidences with examples") {
  std::vector<AnnotatedExample> examples(2);
  examples[0].id = "a";
  examples[0].n_pos = 7;
  examples[0].n_annotators = 7;
  examples[0].gold = 1;
  examples[1].id = "b";
  examples[1].n_pos = 2;
  examples[1].n_annotators = 7;
  examples[1].gold = 0;

  const auto hard = compute_targets({SmoothingMethod::HardLabel, 0.0}, examples);
  CHECK(hard == std::vector<double>{1.0, 0.0});

  const std::vector<double> confidences{0.9, 0.2};
  const auto targets =
      compute_targets({SmoothingMethod::ConfidenceLinear, 0.1}, examples, &confidences);
  CHECK_NEAR(targets[0], 0.86, 1e-12);
  CHECK_NEAR(targets[1], 0.23, 1e-12);

  CHECK_THROWS_AS(compute_targets({SmoothingMethod::ConfidenceLinear, 0.1}, examples),
                  MissingDataError);
  const std::vector<double> short_list{0.9};
  CHECK_THROWS_AS(
      compute_targets({SmoothingMethod::ConfidenceLinear, 0.1}, examples, &short_list),
      InvalidInputError);
}

TEST_CASE("targets CSV round-trips at 12 significant digits") {
  testutil::ScratchDir scratch("targets");
  std::vector<AnnotatedExample> examples(3);
  examples[0].id = "a";
  examples[1].id = "b";
  examples[2].id = "c";
  const std::vector<double> targets{0.564285714285714286, 1.0, 0.02297736991002562};
  write_targets_csv(scratch / "targets.csv", examples, targets);

  const auto rows = read_targets_csv(scratch / "targets.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].first == "a");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK_NEAR(rows[i].second, targets[i], 1e-12);
  }

  testutil::spit(scratch / "bad.csv", "id,target\nx,not-a-number\n");
  CHECK_THROWS_AS(read_targets_csv(scratch / "bad.csv"), ParseError);
  CHECK_THROWS_AS(read_targets_csv(scratch / "missing.csv"), IoError);
}
