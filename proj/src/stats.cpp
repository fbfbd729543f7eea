#include "procnav/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "procnav/error.hpp"

namespace procnav {

namespace {

void check_sample(std::span<const double> s, const char* name) {
    if (s.empty()) throw Error(ErrorCode::empty_sample, std::string(name) + " is empty");
    for (double v : s)
        if (!std::isfinite(v)) throw Error(ErrorCode::non_finite_value, std::string(name) + " has a non-finite value");
}

// Counts of U = 0..n*m over all C(n+m, n) rank assignments:
// f(n, m, u) = f(n - 1, m, u - m) + f(n, m - 1, u).
std::vector<double> u_counts(std::size_t n, std::size_t m) {
    const std::size_t top = n * m;
    // table[i][j] holds the distribution for sizes (i, j); rolled over i.
    std::vector<std::vector<double>> prev(m + 1), cur(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = {1.0};  // i = 0: only U = 0
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = {1.0};
        for (std::size_t j = 1; j <= m; ++j) {
            std::vector<double> dist(i * j + 1, 0.0);
            // largest value from sample "a": it beats all j values of b
            const auto& with_a = prev[j];
            for (std::size_t u = 0; u < with_a.size(); ++u) dist[u + j] += with_a[u];
            const auto& with_b = cur[j - 1];
            for (std::size_t u = 0; u < with_b.size(); ++u) dist[u] += with_b[u];
            cur[j] = std::move(dist);
        }
        std::swap(prev, cur);
    }
    auto out = prev[m];
    out.resize(top + 1, 0.0);
    return out;
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace

std::string_view to_string(UTestMethod m) noexcept { return m == UTestMethod::exact ? "exact" : "normal_approx"; }

double mann_whitney_exact_cdf(std::size_t n, std::size_t m, double u) {
    auto counts = u_counts(n, m);
    double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    double below = 0;
    for (std::size_t k = 0; k < counts.size() && double(k) <= u + 1e-9; ++k) below += counts[k];
    return below / total;
}

UTestResult mann_whitney(std::span<const double> a, std::span<const double> b, std::size_t exact_threshold) {
    check_sample(a, "sample a");
    check_sample(b, "sample b");
    const std::size_t n = a.size(), m = b.size(), total = n + m;

    std::vector<std::pair<double, int>> pooled;
    pooled.reserve(total);
    for (double v : a) pooled.emplace_back(v, 0);
    for (double v : b) pooled.emplace_back(v, 1);
    std::sort(pooled.begin(), pooled.end(), [](const auto& x, const auto& y) { return x.first < y.first; });

    double rank_sum_a = 0;
    double tie_term = 0;  // sum of t^3 - t over tie groups
    bool ties = false;
    for (std::size_t i = 0; i < total;) {
        std::size_t j = i;
        while (j < total && pooled[j].first == pooled[i].first) ++j;
        const double t = double(j - i);
        const double midrank = (double(i + 1) + double(j)) / 2.0;
        if (t > 1) {
            ties = true;
            tie_term += t * t * t - t;
        }
        for (std::size_t k = i; k < j; ++k)
            if (pooled[k].second == 0) rank_sum_a += midrank;
        i = j;
    }

    UTestResult r;
    const double nm = double(n) * double(m);
    r.u_a = rank_sum_a - double(n) * double(n + 1) / 2.0;
    r.u_b = nm - r.u_a;
    r.effect = (r.u_a - r.u_b) / nm;
    const double u_min = std::min(r.u_a, r.u_b);

    if (total <= exact_threshold && !ties) {
        r.method = UTestMethod::exact;
        r.p_two_sided = std::min(1.0, 2.0 * mann_whitney_exact_cdf(n, m, u_min));
        return r;
    }
    r.method = UTestMethod::normal_approx;
    const double N = double(total);
    const double variance = nm / 12.0 * ((N + 1.0) - tie_term / (N * (N - 1.0)));
    if (!(variance > 0)) {
        r.p_two_sided = 1.0;
        return r;
    }
    const double z = std::max(0.0, std::abs(r.u_a - nm / 2.0) - 0.5) / std::sqrt(variance);
    r.p_two_sided = std::min(1.0, 2.0 * normal_sf(z));
    return r;
}

Summary summarize(std::span<const double> sample) {
    check_sample(sample, "sample");
    Summary s;
    s.n = sample.size();
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    s.min = sorted.front();
    s.max = sorted.back();
    s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / double(s.n);
    s.median = s.n % 2 ? sorted[s.n / 2] : (sorted[s.n / 2 - 1] + sorted[s.n / 2]) / 2.0;
    if (s.n == 1) {
        s.degenerate_sd = true;
        return s;
    }
    double ss = 0;
    for (double v : sorted) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / double(s.n - 1));
    return s;
}

}  // namespace procnav
