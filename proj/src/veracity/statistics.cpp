#include <algorithm>
#include <cmath>
#include <numeric>

#include "datacheck/veracity.hpp"

namespace datacheck {

double sum_of(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s;
}

double mean_of(const std::vector<double>& v) { return v.empty() ? 0 : sum_of(v) / static_cast<double>(v.size()); }

double median_of(std::vector<double> v) {
    if (v.empty()) return 0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0;
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double mx = mean_of(x);
    const double my = mean_of(y);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    return sxy / std::sqrt(sxx * syy);
}

double skewness(const std::vector<double>& v) {
    const double m = mean_of(v);
    double m2 = 0, m3 = 0;
    for (double x : v) {
        const double d = x - m;
        m2 += d * d;
        m3 += d * d * d;
    }
    const auto n = static_cast<double>(v.size());
    m2 /= n;
    m3 /= n;
    return m3 / std::pow(m2, 1.5);
}

int competition_rank(const std::vector<double>& values, double value) {
    return 1 + static_cast<int>(std::count_if(values.begin(), values.end(), [&](double x) { return x > value; }));
}

}  // namespace datacheck
