#include "skintrial/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "skintrial/error.hpp"

namespace skintrial {

namespace {

constexpr std::size_t kExactWilcoxonMax = 25;

double normal_upper(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

// c[0] + c[1] x + c[2] x^2 + ...
template <std::size_t N>
double poly(const double (&c)[N], double x) {
  double r = 0.0;
  for (std::size_t i = N; i-- > 0;) r = r * x + c[i];
  return r;
}

void check_lengths(std::span<const double> x, std::span<const double> y, std::size_t min_len) {
  if (x.size() != y.size() || x.size() < min_len) {
    throw Error(ErrorKind::LengthMismatch, "sequences must have equal length >= " +
                                               std::to_string(min_len) + " (got " +
                                               std::to_string(x.size()) + " and " +
                                               std::to_string(y.size()) + ")");
  }
}

TestResult finish(TestKind kind, double statistic, double p, double alpha) {
  TestResult r;
  r.test_kind = kind;
  r.statistic = statistic;
  r.p_value = std::clamp(p, 0.0, 1.0);
  r.alpha = alpha;
  r.significant = r.p_value < alpha;
  return r;
}

struct SignedRanks {
  std::vector<double> ranks;  // average ranks of |d|, zero differences removed
  std::vector<bool> positive;
  double tie_term = 0.0;      // sum over tie groups of t^3 - t
};

SignedRanks signed_ranks(const std::vector<double>& diffs) {
  std::vector<double> nz;
  for (double d : diffs) {
    if (d != 0.0) nz.push_back(d);
  }
  if (nz.empty()) throw Error(ErrorKind::AllDifferencesZero, "every paired difference is zero");
  std::vector<std::size_t> order(nz.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(nz[a]) < std::abs(nz[b]); });
  SignedRanks sr;
  sr.ranks.resize(nz.size());
  sr.positive.resize(nz.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && std::abs(nz[order[j + 1]]) == std::abs(nz[order[i]])) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    const double t = static_cast<double>(j - i + 1);
    sr.tie_term += t * t * t - t;
    for (std::size_t k = i; k <= j; ++k) sr.ranks[order[k]] = avg;
    i = j + 1;
  }
  for (std::size_t i = 0; i < nz.size(); ++i) sr.positive[i] = nz[i] > 0.0;
  return sr;
}

// Distribution of twice the positive-rank sum over all 2^n sign patterns.
double exact_two_sided(const SignedRanks& sr, double w_plus) {
  std::vector<int> doubled;
  int total = 0;
  for (double r : sr.ranks) {
    doubled.push_back(static_cast<int>(std::lround(2.0 * r)));
    total += doubled.back();
  }
  std::vector<double> counts(static_cast<std::size_t>(total) + 1, 0.0);
  counts[0] = 1.0;
  int reach = 0;
  for (int r : doubled) {
    for (int s = reach; s >= 0; --s) {
      if (counts[static_cast<std::size_t>(s)] != 0.0) {
        counts[static_cast<std::size_t>(s + r)] += counts[static_cast<std::size_t>(s)];
      }
    }
    reach += r;
  }
  const double patterns = std::ldexp(1.0, static_cast<int>(sr.ranks.size()));
  const long observed = std::lround(2.0 * w_plus);
  double lower = 0.0;
  double upper = 0.0;
  for (long s = 0; s <= total; ++s) {
    const double c = counts[static_cast<std::size_t>(s)];
    if (s <= observed) lower += c;
    if (s >= observed) upper += c;
  }
  return std::min(1.0, 2.0 * std::min(lower, upper) / patterns);
}

double normal_two_sided(const SignedRanks& sr, double w_plus) {
  const double n = static_cast<double>(sr.ranks.size());
  const double mu = n * (n + 1.0) / 4.0;
  const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - sr.tie_term / 48.0;
  if (var <= 0.0) return 1.0;
  const double z = std::max(0.0, std::abs(w_plus - mu) - 0.5) / std::sqrt(var);
  return std::min(1.0, 2.0 * normal_upper(z));
}

}  // namespace

std::vector<double> PairedSamples::differences() const {
  if (baseline.size() != final.size()) {
    throw Error(ErrorKind::LengthMismatch, "baseline and final differ in length");
  }
  std::vector<double> d(baseline.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = final[i] - baseline[i];
  return d;
}

std::string_view to_string(TestKind kind) noexcept {
  return kind == TestKind::PairedT ? "paired t-test" : "Wilcoxon matched pairs";
}

double mean(std::span<const double> x) {
  if (x.empty()) throw Error(ErrorKind::SampleTooSmall, "mean of an empty sequence");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

ShapiroWilk shapiro_wilk(std::span<const double> data) {
  // AS R94 constants.
  static constexpr double c1[] = {0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056};
  static constexpr double c2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
  static constexpr double c3[] = {0.544, -0.39978, 0.025054, -6.714e-4};
  static constexpr double c4[] = {1.3822, -0.77857, 0.062767, -0.0020322};
  static constexpr double c5[] = {-1.5861, -0.31082, -0.083751, 0.0038915};
  static constexpr double c6[] = {-0.4803, -0.082676, 0.0030302};
  static constexpr double g[] = {-2.273, 0.459};

  const std::size_t n = data.size();
  if (n < 3) throw Error(ErrorKind::SampleTooSmall, "Shapiro-Wilk needs n >= 3");
  if (n > 5000) throw Error(ErrorKind::InvalidArgument, "Shapiro-Wilk supports n <= 5000");

  std::vector<double> x(data.begin(), data.end());
  std::sort(x.begin(), x.end());
  const double range = x.back() - x.front();
  if (!(range > 0.0)) throw Error(ErrorKind::ZeroVariance, "all observations are equal");

  const std::size_t half = n / 2;
  const double an = static_cast<double>(n);
  std::vector<double> a(half);
  if (n == 3) {
    a[0] = std::numbers::sqrt2 / 2.0;
  } else {
    std::vector<double> m(half);
    double summ2 = 0.0;
    for (std::size_t i = 0; i < half; ++i) {
      m[i] = normal_quantile((static_cast<double>(i + 1) - 0.375) / (an + 0.25));
      summ2 += m[i] * m[i];
    }
    summ2 *= 2.0;
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(an);
    const double a1 = poly(c1, rsn) - m[0] / ssumm2;
    std::size_t first = 1;
    double fac = 0.0;
    if (n > 5) {
      first = 2;
      const double a2 = -m[1] / ssumm2 + poly(c2, rsn);
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) /
                      (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
      a[1] = a2;
    } else {
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
    }
    a[0] = a1;
    for (std::size_t i = first; i < half; ++i) a[i] = -m[i] / fac;
  }

  // W on range-scaled data.
  double mean_x = 0.0;
  for (double v : x) mean_x += v / range;
  mean_x /= an;
  double ss = 0.0;
  for (double v : x) ss += (v / range - mean_x) * (v / range - mean_x);
  double num = 0.0;
  for (std::size_t i = 0; i < half; ++i) num += a[i] * (x[n - 1 - i] - x[i]) / range;
  double w = std::min(1.0, num * num / ss);
  const double w1 = 1.0 - w;

  double p = 1.0;
  if (n == 3) {
    constexpr double pi6 = 6.0 / std::numbers::pi;
    constexpr double stqr = std::numbers::pi / 3.0;
    p = std::max(0.0, pi6 * (std::asin(std::sqrt(w)) - stqr));
  } else {
    double y = std::log(w1);
    const double lxx = std::log(an);
    double mu = 0.0;
    double sigma = 1.0;
    if (n <= 11) {
      const double gamma = poly(g, an);
      if (y >= gamma) return {w, 1e-99};
      y = -std::log(gamma - y);
      mu = poly(c3, an);
      sigma = std::exp(poly(c4, an));
    } else {
      mu = poly(c5, lxx);
      sigma = std::exp(poly(c6, lxx));
    }
    p = normal_upper((y - mu) / sigma);
  }
  return {w, std::clamp(p, 0.0, 1.0)};
}

TestResult paired_t_test(const PairedSamples& s, double alpha) {
  const auto d = s.differences();
  if (d.size() < 2) throw Error(ErrorKind::SampleTooSmall, "paired t-test needs n >= 2");
  const double n = static_cast<double>(d.size());
  const double m = mean(d);
  double ss = 0.0;
  for (double v : d) ss += (v - m) * (v - m);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (!(sd > 0.0)) {
    throw Error(ErrorKind::ZeroVarianceDifferences, "paired differences have zero variance");
  }
  const double t = m / (sd / std::sqrt(n));
  const boost::math::students_t_distribution<double> dist(n - 1.0);
  const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  return finish(TestKind::PairedT, t, p, alpha);
}

TestResult wilcoxon_signed_rank(const PairedSamples& s, double alpha, WilcoxonMethod method) {
  const SignedRanks sr = signed_ranks(s.differences());
  double w_plus = 0.0;
  for (std::size_t i = 0; i < sr.ranks.size(); ++i) {
    if (sr.positive[i]) w_plus += sr.ranks[i];
  }
  const bool exact = method == WilcoxonMethod::Exact ||
                     (method == WilcoxonMethod::Auto && sr.ranks.size() <= kExactWilcoxonMax);
  const double p = exact ? exact_two_sided(sr, w_plus) : normal_two_sided(sr, w_plus);
  return finish(TestKind::Wilcoxon, w_plus, p, alpha);
}

TestResult paired_compare(const PairedSamples& s, double alpha) {
  const auto d = s.differences();
  const ShapiroWilk sw = shapiro_wilk(d);
  TestResult r = sw.p >= alpha ? paired_t_test(s, alpha) : wilcoxon_signed_rank(s, alpha);
  r.normality_p = sw.p;
  return r;
}

double mse(std::span<const double> x, std::span<const double> y) {
  check_lengths(x, y, 1);
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += (x[i] - y[i]) * (x[i] - y[i]);
  return acc / static_cast<double>(x.size());
}

double pearson(std::span<const double> x, std::span<const double> y) {
  check_lengths(x, y, 2);
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) {
    throw Error(ErrorKind::ZeroVariance, "correlation needs non-constant sequences");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double percent_variation(std::span<const double> baseline, std::span<const double> final) {
  const double mb = mean(baseline);
  const double mf = mean(final);
  if (mb == 0.0) throw Error(ErrorKind::ZeroBaselineMean, "baseline mean is zero");
  return std::abs(mf - mb) / std::abs(mb) * 100.0;
}

}  // namespace skintrial
