#include "reqforge/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <boost/math/distributions/non_central_t.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "reqforge/error.hpp"
#include "reqforge/random.hpp"

namespace reqforge::stats {

std::string to_string(Tail t) {
  switch (t) {
    case Tail::Right: return "right";
    case Tail::Left: return "left";
    case Tail::Two: return "two";
  }
  return {};
}

Tail parse_tail(const std::string& s) {
  if (s == "right" || s == "greater") return Tail::Right;
  if (s == "left" || s == "less") return Tail::Left;
  if (s == "two" || s == "two-sided" || s == "two-tailed") return Tail::Two;
  throw Error(ErrorCode::InvalidArgument, "unknown tail '" + s + "'");
}

json to_json(const TestResult& r) {
  json j;
  j["method"] = r.method;
  j["statistic"] = r.statistic;
  j["p"] = r.p;
  j["effect"] = r.effect ? json(*r.effect) : json(nullptr);
  j["ci95"] = r.ci95 ? json::array({r.ci95->lo, r.ci95->hi}) : json(nullptr);
  j["n"] = r.n;
  if (!r.extras.empty()) j["extras"] = r.extras;
  if (!r.notes.empty()) j["notes"] = r.notes;
  return j;
}

// ---------------------------------------------------------------------------
// Special functions
// ---------------------------------------------------------------------------

namespace {

constexpr double kEps = 1e-16;
constexpr int kMaxIter = 10000;

// Lower regularized gamma by its power series; valid for x < a + 1.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a, sum = term;
  for (int n = 1; n < kMaxIter; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper regularized gamma by modified Lentz on the continued fraction;
// valid for x >= a + 1.
double gamma_q_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw Error(ErrorCode::InvalidArgument, "gamma_q needs a > 0 and x >= 0");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_fraction(a, x);
}

double chi2_sf(double x, double df) {
  if (x <= 0.0) return 1.0;
  return gamma_q(df / 2.0, x / 2.0);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::InvalidArgument, "normal quantile needs 0 < p < 1");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

// ---------------------------------------------------------------------------
// Contingency tables
// ---------------------------------------------------------------------------

namespace {

void require_nonempty(const ContingencyTable& t) {
  if (t.total() == 0) throw Error(ErrorCode::InvalidArgument, "contingency table is empty");
}

}  // namespace

TestResult fisher_exact_right(const ContingencyTable& t) {
  require_nonempty(t);
  TestResult r;
  r.method = "Fisher's exact test (right-tailed)";
  r.statistic = static_cast<double>(t.a);
  r.n = {static_cast<std::size_t>(t.a + t.b), static_cast<std::size_t>(t.c + t.d)};

  const std::uint64_t row1 = t.a + t.b, row2 = t.c + t.d, col1 = t.a + t.c, col2 = t.b + t.d;
  if (row1 == 0 || row2 == 0 || col1 == 0 || col2 == 0) {
    r.p = 1.0;
    r.notes.push_back("degenerate table: a margin is zero");
    return r;
  }

  // Hypergeometric weights over the support, built by the ratio recurrence
  // from the lower end and scaled at the mode so nothing overflows.
  const std::uint64_t n = t.total();
  const std::uint64_t lo = row1 + col1 > n ? row1 + col1 - n : 0;
  const std::uint64_t hi = std::min(row1, col1);
  std::vector<long double> logw(hi - lo + 1);
  logw[0] = 0.0L;
  for (std::uint64_t k = lo; k < hi; ++k) {
    long double ratio = static_cast<long double>(row1 - k) * static_cast<long double>(col1 - k) /
                        (static_cast<long double>(k + 1) * static_cast<long double>(n - row1 - col1 + k + 1));
    logw[k - lo + 1] = logw[k - lo] + std::log(ratio);
  }
  const long double peak = *std::max_element(logw.begin(), logw.end());
  long double total = 0.0L, upper = 0.0L;
  for (std::uint64_t k = lo; k <= hi; ++k) {
    long double w = std::exp(logw[k - lo] - peak);
    total += w;
    if (k >= t.a) upper += w;
  }
  r.p = std::clamp(static_cast<double>(upper / total), 0.0, 1.0);
  return r;
}

TestResult odds_ratio_ci(const ContingencyTable& t) {
  require_nonempty(t);
  double a = static_cast<double>(t.a), b = static_cast<double>(t.b), c = static_cast<double>(t.c),
         d = static_cast<double>(t.d);
  TestResult r;
  r.method = "odds ratio (Woolf logit 95% CI)";
  r.n = {static_cast<std::size_t>(t.a + t.b), static_cast<std::size_t>(t.c + t.d)};
  if (t.a == 0 || t.b == 0 || t.c == 0 || t.d == 0) {
    a += 0.5;
    b += 0.5;
    c += 0.5;
    d += 0.5;
    r.notes.push_back("Haldane-Anscombe +0.5 correction applied");
  }
  const double ratio = a * d / (b * c);
  const double se = std::sqrt(1.0 / a + 1.0 / b + 1.0 / c + 1.0 / d);
  const double z = normal_quantile(0.975);
  r.statistic = ratio;
  r.effect = ratio;
  r.ci95 = Interval{std::exp(std::log(ratio) - z * se), std::exp(std::log(ratio) + z * se)};
  r.p = 2.0 * normal_sf(std::fabs(std::log(ratio)) / se);
  r.extras["log_se"] = se;
  return r;
}

Chi2Result chi2_test(const ContingencyTable& t, bool yates) {
  require_nonempty(t);
  const double n = static_cast<double>(t.total());
  const std::array<double, 4> obs{static_cast<double>(t.a), static_cast<double>(t.b), static_cast<double>(t.c),
                                  static_cast<double>(t.d)};
  const double row[2] = {obs[0] + obs[1], obs[2] + obs[3]};
  const double col[2] = {obs[0] + obs[2], obs[1] + obs[3]};

  Chi2Result out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.expected[2 * i + j] = row[i] * col[j] / n;
  for (double e : out.expected)
    if (e <= 0.0) throw Error(ErrorCode::ZeroExpected, "an expected count is zero (empty row or column)");

  double stat = 0.0;
  for (int k = 0; k < 4; ++k) {
    double dev = std::fabs(obs[k] - out.expected[k]);
    if (yates) dev = std::max(0.0, dev - 0.5);
    stat += dev * dev / out.expected[k];
  }
  auto& r = out.result;
  r.method = yates ? "chi-square test with Yates correction" : "chi-square test";
  r.statistic = stat;
  r.p = chi2_sf(stat, 1.0);
  r.n = {static_cast<std::size_t>(row[0]), static_cast<std::size_t>(row[1])};
  r.extras["df"] = 1.0;
  return out;
}

// ---------------------------------------------------------------------------
// Rank tests
// ---------------------------------------------------------------------------

std::vector<double> midranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

namespace {

// Sum over tie groups of t^3 - t.
double tie_term(std::span<const double> values) {
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    while (j < v.size() && v[j] == v[i]) ++j;
    const double t = static_cast<double>(j - i);
    sum += t * t * t - t;
    i = j;
  }
  return sum;
}

bool has_ties(std::span<const double> values) { return tie_term(values) > 0.0; }

void check_finite(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw Error(ErrorCode::InvalidArgument, std::string(what) + " contains a non-finite value");
}

// Number of size-k subsets of `doubled` (integer weights) per total weight.
// Row k of the result is indexed by subset sum.
std::vector<double> subset_sum_counts(const std::vector<long>& doubled, std::size_t k) {
  const long total = std::accumulate(doubled.begin(), doubled.end(), 0L);
  std::vector<std::vector<double>> ways(k + 1, std::vector<double>(static_cast<std::size_t>(total) + 1, 0.0));
  ways[0][0] = 1.0;
  std::size_t seen = 0;
  for (long w : doubled) {
    ++seen;
    for (std::size_t c = std::min(k, seen); c >= 1; --c) {
      auto& dst = ways[c];
      const auto& src = ways[c - 1];
      for (long s = total; s >= w; --s) dst[static_cast<std::size_t>(s)] += src[static_cast<std::size_t>(s - w)];
    }
  }
  return ways[k];
}

// Tail probabilities of an integer-valued discrete law given as counts.
// `twice_center` is twice the null mean; the two-tailed p sums every outcome
// at least as far from the mean as the observed one. With tied midranks the
// law need not be symmetric, so this is not the same as doubling one tail.
double tail_probability(const std::vector<double>& counts, long observed, Tail tail, long twice_center) {
  double total = 0.0, hit = 0.0;
  const long obs_dev = std::labs(2 * observed - twice_center);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const long s = static_cast<long>(i);
    total += counts[i];
    const bool extreme = tail == Tail::Right  ? s >= observed
                         : tail == Tail::Left ? s <= observed
                                              : std::labs(2 * s - twice_center) >= obs_dev;
    if (extreme) hit += counts[i];
  }
  return std::min(1.0, hit / total);
}

double normal_tail(double stat, double mean, double sd, Tail tail, double& z) {
  if (sd <= 0.0) {
    z = 0.0;
    return 1.0;
  }
  switch (tail) {
    case Tail::Right:
      z = (stat - mean - 0.5) / sd;
      return normal_sf(z);
    case Tail::Left:
      z = (stat - mean + 0.5) / sd;
      return normal_cdf(z);
    case Tail::Two:
      z = std::max(0.0, std::fabs(stat - mean) - 0.5) / sd;
      return std::min(1.0, 2.0 * normal_sf(z));
  }
  return 1.0;
}

// Linear-interpolation percentile (type 7) of sorted data.
double percentile(const std::vector<double>& sorted, double q) {
  if (sorted.size() == 1) return sorted.front();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// U via counting against a sorted copy of y: O((n1 + n2) log n2).
double u_statistic_sorted(std::span<const double> x, const std::vector<double>& y_sorted) {
  double u = 0.0;
  for (double v : x) {
    auto [lo, hi] = std::equal_range(y_sorted.begin(), y_sorted.end(), v);
    u += static_cast<double>(lo - y_sorted.begin()) + 0.5 * static_cast<double>(hi - lo);
  }
  return u;
}

}  // namespace

double a12(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) throw Error(ErrorCode::EmptySample, "A12 needs two non-empty samples");
  std::vector<double> ys(y.begin(), y.end());
  std::sort(ys.begin(), ys.end());
  return u_statistic_sorted(x, ys) / (static_cast<double>(x.size()) * static_cast<double>(y.size()));
}

TestResult mann_whitney(std::span<const double> x, std::span<const double> y, Tail tail, PMethod method) {
  if (x.empty() || y.empty()) throw Error(ErrorCode::EmptySample, "Mann-Whitney U needs two non-empty samples");
  check_finite(x, "sample x");
  check_finite(y, "sample y");
  const std::size_t n1 = x.size(), n2 = y.size(), n = n1 + n2;

  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  const auto ranks = midranks(pooled);
  const double r1 = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(n1), 0.0);
  const double u = r1 - static_cast<double>(n1) * static_cast<double>(n1 + 1) / 2.0;
  const double nn = static_cast<double>(n1) * static_cast<double>(n2);

  TestResult r;
  r.statistic = u;
  r.effect = u / nn;
  r.n = {n1, n2};
  r.extras["U_y"] = nn - u;

  const bool ties = has_ties(pooled);
  const bool exact = method == PMethod::Exact || (method == PMethod::Auto && n <= 12 && !ties);
  if (exact) {
    std::vector<long> doubled(n);
    for (std::size_t i = 0; i < n; ++i) doubled[i] = std::lround(2.0 * ranks[i]);
    const auto counts = subset_sum_counts(doubled, n1);
    r.p = tail_probability(counts, std::lround(2.0 * r1), tail, static_cast<long>(2 * n1 * (n + 1)));
    r.method = "Mann-Whitney U (exact permutation)";
  } else {
    const double mean = nn / 2.0;
    const double nd = static_cast<double>(n);
    const double var = nn / 12.0 * ((nd + 1.0) - tie_term(pooled) / (nd * (nd - 1.0)));
    double z = 0.0;
    r.p = normal_tail(u, mean, std::sqrt(std::max(0.0, var)), tail, z);
    r.extras["z"] = z;
    r.method = "Mann-Whitney U (normal approximation, tie and continuity corrected)";
  }
  r.method += ", " + to_string(tail) + "-tailed";
  return r;
}

TestResult a12_ci(std::span<const double> x, std::span<const double> y, std::size_t resamples, std::uint64_t seed) {
  if (x.empty() || y.empty()) throw Error(ErrorCode::EmptySample, "A12 needs two non-empty samples");
  if (resamples < 1000) throw Error(ErrorCode::InvalidArgument, "A12 bootstrap needs at least 1000 resamples");
  TestResult r;
  r.method = "Vargha-Delaney A12 (percentile bootstrap 95% CI)";
  r.statistic = a12(x, y);
  r.effect = r.statistic;
  r.n = {x.size(), y.size()};

  Rng rng(seed);
  std::vector<double> bx(x.size()), by(y.size()), estimates;
  estimates.reserve(resamples);
  for (std::size_t b = 0; b < resamples; ++b) {
    for (auto& v : bx) v = x[rng.below(x.size())];
    for (auto& v : by) v = y[rng.below(y.size())];
    std::sort(by.begin(), by.end());
    estimates.push_back(u_statistic_sorted(bx, by) / (static_cast<double>(bx.size()) * static_cast<double>(by.size())));
  }
  std::sort(estimates.begin(), estimates.end());
  r.ci95 = Interval{percentile(estimates, 0.025), percentile(estimates, 0.975)};
  r.extras["resamples"] = static_cast<double>(resamples);
  r.p = std::numeric_limits<double>::quiet_NaN();
  r.notes.push_back("no hypothesis test; p not applicable");
  return r;
}

namespace {

struct SignedRanks {
  std::vector<double> ranks;  // ranks of the non-zero differences
  std::vector<bool> positive;
  std::size_t zeros = 0;
};

SignedRanks signed_ranks(std::span<const double> x, double median, ZeroMethod zm) {
  SignedRanks out;
  std::vector<double> diffs;
  for (double v : x) {
    const double d = v - median;
    if (d == 0.0) ++out.zeros;
    if (d != 0.0 || zm == ZeroMethod::Pratt) diffs.push_back(d);
  }
  std::vector<double> mags(diffs.size());
  std::transform(diffs.begin(), diffs.end(), mags.begin(), [](double d) { return std::fabs(d); });
  const auto ranks = midranks(mags);
  for (std::size_t i = 0; i < diffs.size(); ++i) {
    if (diffs[i] == 0.0) continue;  // Pratt: zeros take ranks but carry no sign
    out.ranks.push_back(ranks[i]);
    out.positive.push_back(diffs[i] > 0.0);
  }
  return out;
}

double rank_biserial(const SignedRanks& s) {
  double wp = 0.0, wm = 0.0;
  for (std::size_t i = 0; i < s.ranks.size(); ++i) (s.positive[i] ? wp : wm) += s.ranks[i];
  return wp + wm == 0.0 ? 0.0 : (wp - wm) / (wp + wm);
}

}  // namespace

TestResult wilcoxon_one_sample(std::span<const double> x, double median, Tail tail, const WilcoxonOptions& opts) {
  if (x.empty()) throw Error(ErrorCode::EmptySample, "Wilcoxon signed-rank needs a non-empty sample");
  check_finite(x, "sample");
  const auto s = signed_ranks(x, median, opts.zero_method);
  if (s.ranks.empty()) throw Error(ErrorCode::AllZeroDifferences, "every observation equals the hypothesized median");
  const std::size_t n = s.ranks.size();
  if (n < 5)
    throw Error(ErrorCode::InvalidArgument,
                "Wilcoxon signed-rank needs at least 5 non-zero differences, got " + std::to_string(n));

  double wp = 0.0, wm = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    (s.positive[i] ? wp : wm) += s.ranks[i];
    sum_sq += s.ranks[i] * s.ranks[i];
  }

  TestResult r;
  r.statistic = wp;
  r.effect = (wp - wm) / (wp + wm);
  r.n = {x.size()};
  r.extras["W_minus"] = wm;
  r.extras["n_nonzero"] = static_cast<double>(n);
  r.extras["zeros"] = static_cast<double>(s.zeros);

  const bool exact = opts.method == PMethod::Exact || (opts.method == PMethod::Auto && n <= 12);
  if (exact) {
    // Every sign pattern equally likely: count subsets of the (doubled)
    // ranks by their sum, over all subset sizes.
    std::vector<long> doubled(n);
    for (std::size_t i = 0; i < n; ++i) doubled[i] = std::lround(2.0 * s.ranks[i]);
    const long total = std::accumulate(doubled.begin(), doubled.end(), 0L);
    std::vector<double> counts(static_cast<std::size_t>(total) + 1, 0.0);
    counts[0] = 1.0;
    for (long w : doubled)
      for (long v = total; v >= w; --v) counts[static_cast<std::size_t>(v)] += counts[static_cast<std::size_t>(v - w)];
    r.p = tail_probability(counts, std::lround(2.0 * wp), tail, total);
    r.method = "Wilcoxon signed-rank (exact)";
  } else {
    double total_rank = wp + wm;
    double z = 0.0;
    // Var(W+) = sum(r^2) / 4 includes the midrank tie correction.
    r.p = normal_tail(wp, total_rank / 2.0, std::sqrt(sum_sq / 4.0), tail, z);
    r.extras["z"] = z;
    r.method = "Wilcoxon signed-rank (normal approximation, tie and continuity corrected)";
  }
  r.method += opts.zero_method == ZeroMethod::Pratt ? ", Pratt zeros" : ", zeros dropped";
  r.method += ", " + to_string(tail) + "-tailed";

  if (opts.resamples > 0) {
    Rng rng(opts.seed);
    std::vector<double> bx(x.size()), estimates;
    estimates.reserve(opts.resamples);
    std::size_t degenerate = 0;
    for (std::size_t b = 0; b < opts.resamples; ++b) {
      for (auto& v : bx) v = x[rng.below(x.size())];
      auto bs = signed_ranks(bx, median, opts.zero_method);
      if (bs.ranks.empty()) {
        ++degenerate;
        continue;
      }
      estimates.push_back(rank_biserial(bs));
    }
    if (!estimates.empty()) {
      std::sort(estimates.begin(), estimates.end());
      r.ci95 = Interval{percentile(estimates, 0.025), percentile(estimates, 0.975)};
    }
    if (degenerate > 0) r.notes.push_back(std::to_string(degenerate) + " all-zero bootstrap resamples skipped");
  }
  return r;
}

// ---------------------------------------------------------------------------
// Multiplicity, proportions, descriptives
// ---------------------------------------------------------------------------

std::vector<double> holm_adjust(std::span<const double> pvals) {
  const std::size_t m = pvals.size();
  for (double p : pvals)
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "p-values must lie in [0, 1]");
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return pvals[i] < pvals[j]; });
  std::vector<double> adjusted(m);
  double running = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double scaled = static_cast<double>(m - k) * pvals[order[k]];
    running = std::max(running, std::min(1.0, scaled));
    adjusted[order[k]] = running;
  }
  return adjusted;
}

TestResult proportion_ci(std::uint64_t successes, std::uint64_t n) {
  if (n == 0 || successes > n) throw Error(ErrorCode::InvalidArgument, "proportion needs 0 <= successes <= n, n >= 1");
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z = normal_quantile(0.975);
  const double z2 = z * z;
  const double center = (p + z2 / (2.0 * nn)) / (1.0 + z2 / nn);
  const double half = z / (1.0 + z2 / nn) * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
  TestResult r;
  r.method = "proportion (Wilson 95% CI)";
  r.statistic = p;
  r.effect = p;
  r.ci95 = Interval{std::max(0.0, center - half), std::min(1.0, center + half)};
  r.n = {static_cast<std::size_t>(n)};
  r.p = std::numeric_limits<double>::quiet_NaN();
  r.extras["successes"] = static_cast<double>(successes);
  return r;
}

Description describe(std::span<const double> x) {
  if (x.empty()) throw Error(ErrorCode::EmptySample, "describe needs at least one value");
  Description d;
  d.n = x.size();
  const double n = static_cast<double>(d.n);
  d.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  if (d.n > 1) {
    double ss = 0.0;
    for (double v : x) ss += (v - d.mean) * (v - d.mean);
    d.sd = std::sqrt(ss / (n - 1.0));
  } else {
    d.sd = std::numeric_limits<double>::quiet_NaN();
  }
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  d.median = d.n % 2 ? s[d.n / 2] : (s[d.n / 2 - 1] + s[d.n / 2]) / 2.0;
  return d;
}

json to_json(const Description& d) {
  return json{{"n", d.n}, {"mean", d.mean}, {"sd", std::isfinite(d.sd) ? json(d.sd) : json(nullptr)}, {"median", d.median}};
}

// ---------------------------------------------------------------------------
// Power analysis
// ---------------------------------------------------------------------------

void PowerSpec::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
  if (!(power > 0.0 && power < 1.0)) throw Error(ErrorCode::InvalidArgument, "power must lie in (0, 1)");
  if (!(effect > 0.0) || !std::isfinite(effect)) throw Error(ErrorCode::InvalidArgument, "effect size must be > 0");
}

double achieved_power(const PowerSpec& spec, std::size_t n) {
  spec.validate();
  namespace bm = boost::math;
  const double nd = static_cast<double>(n);
  const bool two = spec.tails == Tail::Two;
  switch (spec.test) {
    case PowerTest::TwoSampleT:
    case PowerTest::OneSampleT: {
      const bool two_sample = spec.test == PowerTest::TwoSampleT;
      if (n < 2) return 0.0;
      const double df = two_sample ? 2.0 * nd - 2.0 : nd - 1.0;
      const double ncp = two_sample ? spec.effect * std::sqrt(nd / 2.0) : spec.effect * std::sqrt(nd);
      const bm::students_t central(df);
      const bm::non_central_t shifted(df, ncp);
      if (two) {
        const double crit = bm::quantile(bm::complement(central, spec.alpha / 2.0));
        return bm::cdf(bm::complement(shifted, crit)) + bm::cdf(shifted, -crit);
      }
      const double crit = bm::quantile(bm::complement(central, spec.alpha));
      return bm::cdf(bm::complement(shifted, crit));
    }
    case PowerTest::ChiSquare1df: {
      if (n < 1) return 0.0;
      // Chi-square tests are inherently upper-tailed; `tails` is ignored.
      const bm::chi_squared central(1.0);
      const double crit = bm::quantile(bm::complement(central, spec.alpha));
      const bm::non_central_chi_squared shifted(1.0, nd * spec.effect * spec.effect);
      return bm::cdf(bm::complement(shifted, crit));
    }
  }
  return 0.0;
}

std::size_t required_sample_size(const PowerSpec& spec) {
  spec.validate();
  constexpr std::size_t kLimit = 10'000'000;
  // Power is increasing in n; bracket by doubling, then bisect.
  std::size_t lo = spec.test == PowerTest::ChiSquare1df ? 1 : 2;
  if (achieved_power(spec, lo) >= spec.power) return lo;
  std::size_t hi = lo * 2;
  while (achieved_power(spec, hi) < spec.power) {
    lo = hi;
    hi *= 2;
    if (hi > kLimit) throw Error(ErrorCode::InvalidArgument, "required sample size exceeds 10^7");
  }
  while (hi - lo > 1) {
    std::size_t mid = lo + (hi - lo) / 2;
    (achieved_power(spec, mid) >= spec.power ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace reqforge::stats
