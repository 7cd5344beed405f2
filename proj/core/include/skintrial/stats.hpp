#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace skintrial {

struct PairedSamples {
  std::vector<double> baseline;
  std::vector<double> final;
  std::string label;

  std::vector<double> differences() const;  ///< final - baseline
};

enum class TestKind { PairedT, Wilcoxon };

std::string_view to_string(TestKind kind) noexcept;

inline constexpr double kDefaultAlpha = 0.05;

struct TestResult {
  TestKind test_kind = TestKind::PairedT;
  double statistic = 0.0;  ///< t for PairedT, W+ for Wilcoxon
  double p_value = 1.0;    ///< two-sided
  bool significant = false;
  double alpha = kDefaultAlpha;
  double normality_p = 1.0;  ///< Shapiro-Wilk p on the differences (paired_compare only)
};

struct ShapiroWilk {
  double w = 0.0;
  double p = 0.0;
};

/// Shapiro-Wilk test via Royston's AS R94 approximation, valid for 3 <= n <= 5000.
/// Throws SampleTooSmall (or InvalidArgument above 5000) and ZeroVariance.
ShapiroWilk shapiro_wilk(std::span<const double> data);

/// t = mean(d) / (sd(d) / sqrt(n)) with df = n - 1; two-sided p. Throws SampleTooSmall or
/// ZeroVarianceDifferences.
TestResult paired_t_test(const PairedSamples& s, double alpha = kDefaultAlpha);

enum class WilcoxonMethod {
  Auto,    ///< exact for n <= 25 non-zero differences, normal approximation above
  Exact,   ///< full sign-pattern distribution
  Normal,  ///< continuity- and tie-corrected normal approximation
};

/// Signed-rank test on final - baseline. Zero differences are dropped, ties share average
/// ranks, statistic is W+ (sum of positive ranks). Throws AllDifferencesZero.
TestResult wilcoxon_signed_rank(const PairedSamples& s, double alpha = kDefaultAlpha,
                                WilcoxonMethod method = WilcoxonMethod::Auto);

/// Shapiro-Wilk on the differences gates the test: p >= alpha runs paired_t_test,
/// otherwise wilcoxon_signed_rank.
TestResult paired_compare(const PairedSamples& s, double alpha = kDefaultAlpha);

/// Mean squared element-wise difference. Throws LengthMismatch (also for empty input).
double mse(std::span<const double> x, std::span<const double> y);

/// Sample Pearson correlation. Throws LengthMismatch or ZeroVariance.
double pearson(std::span<const double> x, std::span<const double> y);

/// |mean(final) - mean(baseline)| / |mean(baseline)| * 100. Throws ZeroBaselineMean.
double percent_variation(std::span<const double> baseline, std::span<const double> final);

double mean(std::span<const double> x);

}  // namespace skintrial
