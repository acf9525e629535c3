#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reqforge/domain.hpp"

namespace reqforge::stats {

enum class Tail { Right, Left, Two };

std::string to_string(Tail t);
Tail parse_tail(const std::string& s);

/// 2x2 counts, rows = groups, columns = outcomes:
///   [[a, b],
///    [c, d]]
struct ContingencyTable {
  std::uint64_t a = 0, b = 0, c = 0, d = 0;

  std::uint64_t total() const { return a + b + c + d; }
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct TestResult {
  std::string method;
  double statistic = 0.0;
  double p = 1.0;
  std::optional<double> effect;
  std::optional<Interval> ci95;
  std::vector<std::size_t> n;
  std::map<std::string, double> extras;  // z, W-, expected counts, ...
  std::vector<std::string> notes;
};

json to_json(const TestResult& r);

// ---------------------------------------------------------------------------
// Special functions
// ---------------------------------------------------------------------------

/// Regularized upper incomplete gamma Q(a, x), series below a + 1 and a
/// Lentz continued fraction above.
double gamma_q(double a, double x);
/// Upper tail of the chi-square distribution.
double chi2_sf(double x, double df);
double normal_cdf(double z);
double normal_sf(double z);
double normal_quantile(double p);

// ---------------------------------------------------------------------------
// Contingency tables
// ---------------------------------------------------------------------------

/// P(A >= a) under the hypergeometric law with the table's margins fixed.
/// A zero margin gives p = 1 and the note "degenerate table".
TestResult fisher_exact_right(const ContingencyTable& t);

/// ad/bc with a +0.5 Haldane-Anscombe correction iff a cell is 0, and a
/// Woolf logit 95% interval.
TestResult odds_ratio_ci(const ContingencyTable& t);

struct Chi2Result {
  TestResult result;
  std::array<double, 4> expected{};  // a, b, c, d order
};

/// Pearson chi-square on 1 df, Yates-corrected by default. The correction
/// term |O - E| - 0.5 is floored at 0.
Chi2Result chi2_test(const ContingencyTable& t, bool yates = true);
inline Chi2Result chi2_yates(const ContingencyTable& t) { return chi2_test(t, true); }

// ---------------------------------------------------------------------------
// Rank tests
// ---------------------------------------------------------------------------

enum class PMethod { Auto, Exact, Normal };

/// Midranks (1-based) of `values`.
std::vector<double> midranks(std::span<const double> values);

/// U counts pairs with x > y plus half the ties; effect is A12 = U / (n1 n2).
/// Auto uses the exact permutation law when n1 + n2 <= 12 and there are no
/// ties, otherwise the tie-corrected normal approximation with a 0.5
/// continuity correction.
TestResult mann_whitney(std::span<const double> x, std::span<const double> y, Tail tail,
                        PMethod method = PMethod::Auto);

/// A12 = U / (n1 n2).
double a12(std::span<const double> x, std::span<const double> y);

/// A12 with a seeded percentile bootstrap 95% interval.
TestResult a12_ci(std::span<const double> x, std::span<const double> y, std::size_t resamples = 10000,
                  std::uint64_t seed = 0);

enum class ZeroMethod { Wilcox, Pratt };

struct WilcoxonOptions {
  ZeroMethod zero_method = ZeroMethod::Wilcox;
  PMethod method = PMethod::Auto;  // Auto: exact for n <= 12
  std::size_t resamples = 10000;   // 0 skips the effect-size interval
  std::uint64_t seed = 0;
};

/// One-sample signed-rank test of x against `median`. Statistic is W+;
/// effect is the rank-biserial r = (W+ - W-) / (W+ + W-).
TestResult wilcoxon_one_sample(std::span<const double> x, double median, Tail tail,
                               const WilcoxonOptions& opts = {});

// ---------------------------------------------------------------------------
// Multiplicity, proportions, descriptives
// ---------------------------------------------------------------------------

/// Holm step-down adjustment; output in input order.
std::vector<double> holm_adjust(std::span<const double> pvals);

/// successes / n with a Wilson 95% interval.
TestResult proportion_ci(std::uint64_t successes, std::uint64_t n);

struct Description {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;  // n - 1 denominator; NaN when n == 1
  double median = 0.0;
};

Description describe(std::span<const double> x);
json to_json(const Description& d);

// ---------------------------------------------------------------------------
// Power analysis
// ---------------------------------------------------------------------------

enum class PowerTest { TwoSampleT, OneSampleT, ChiSquare1df };

struct PowerSpec {
  PowerTest test = PowerTest::TwoSampleT;
  Tail tails = Tail::Two;  // Right/Left are both one-tailed
  double alpha = 0.05;
  double power = 0.8;
  double effect = 0.5;  // Cohen's d for t-tests, w for chi-square

  void validate() const;
};

/// Achieved power at sample size n (per group for TwoSampleT).
double achieved_power(const PowerSpec& spec, std::size_t n);

/// Smallest n reaching spec.power.
std::size_t required_sample_size(const PowerSpec& spec);

}  // namespace reqforge::stats
