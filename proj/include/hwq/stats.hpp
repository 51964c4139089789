#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace hwq {

struct Summary {
    double mean = 0.0, var = 0.0;
    double se_mean = 0.0, se_var = 0.0;
    std::size_t n = 0;
};

inline Summary summarize(const std::vector<double>& xs) {
    Summary s;
    s.n = xs.size();
    if (s.n < 2) return s;
    double m = 0.0;
    for (double x : xs) m += x;
    m /= static_cast<double>(s.n);
    double m2 = 0.0, m4 = 0.0;
    for (double x : xs) {
        const double d = x - m;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    const auto n = static_cast<double>(s.n);
    s.mean = m;
    s.var = m2 / (n - 1.0);
    s.se_mean = std::sqrt(s.var / n);
    const double mu4 = m4 / n;
    const double v = std::max(mu4 - s.var * s.var, 0.0);
    s.se_var = std::sqrt(v / n);
    return s;
}

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        const double fa = static_cast<double>(i) / a.size();
        const double fb = static_cast<double>(j) / b.size();
        d = std::max(d, std::abs(fa - fb));
    }
    return d;
}

/// Asymptotic two-sample KS p-value with the usual finite-sample correction.
inline double ks_pvalue(double d, std::size_t n, std::size_t m) {
    const double ne = static_cast<double>(n) * m / static_cast<double>(n + m);
    const double lam = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
    double p = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = 2.0 * (k % 2 == 1 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lam * lam);
        p += term;
        if (std::abs(term) < 1e-10) break;
    }
    return std::min(std::max(p, 0.0), 1.0);
}

}  // namespace hwq
