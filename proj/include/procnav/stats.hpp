#pragma once

#include <span>
#include <string_view>

namespace procnav {

enum class UTestMethod { exact, normal_approx };
std::string_view to_string(UTestMethod m) noexcept;

struct UTestResult {
    double u_a = 0;
    double u_b = 0;
    UTestMethod method = UTestMethod::exact;
    double p_two_sided = 1;
    double effect = 0;  // rank-biserial, (u_a - u_b) / (n m); positive when a tends larger
};

constexpr std::size_t kDefaultExactThreshold = 16;

// Mann-Whitney U with midranks. The exact null distribution is used when
// n + m <= exact_threshold and there are no ties; otherwise the normal
// approximation with tie-corrected variance and 0.5 continuity correction.
// Throws empty_sample or non_finite_value.
UTestResult mann_whitney(std::span<const double> a, std::span<const double> b,
                         std::size_t exact_threshold = kDefaultExactThreshold);

// P(U <= u) under the null for sample sizes n, m (no ties).
double mann_whitney_exact_cdf(std::size_t n, std::size_t m, double u);

struct Summary {
    std::size_t n = 0;
    double mean = 0;
    double median = 0;
    double sd = 0;  // n - 1 denominator
    double min = 0;
    double max = 0;
    bool degenerate_sd = false;  // n == 1, sd reported as 0
};

// Throws empty_sample or non_finite_value.
Summary summarize(std::span<const double> sample);

}  // namespace procnav
