#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace iflab {

// Pairwise (cascade) summation; the merge order is fixed by the index order
// of the input, so parallel producers that fill slots by index stay
// bit-reproducible.
inline double pairwise_sum(const double* data, std::size_t n) {
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += data[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

inline double pairwise_sum(const std::vector<double>& v) {
  return pairwise_sum(v.data(), v.size());
}

inline double mean(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("mean of empty sample");
  return pairwise_sum(v) / double(v.size());
}

inline double sample_variance(const std::vector<double>& v) {
  if (v.size() < 2) throw std::invalid_argument("variance needs >= 2 samples");
  const double m = mean(v);
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - m) * (v[i] - m);
  return pairwise_sum(sq) / double(v.size() - 1);
}

inline double stderr_of_mean(const std::vector<double>& v) {
  return std::sqrt(sample_variance(v) / double(v.size()));
}

// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = double(a.size()), nb = double(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::fabs(double(i) / na - double(j) / nb));
  }
  return d;
}

// One-sample KS against a CDF, with optional self-normalized weights.
template <class Cdf>
double ks_vs_cdf(std::vector<double> x, Cdf cdf,
                 std::vector<double> w = {}) {
  if (x.empty()) throw std::invalid_argument("ks_vs_cdf: empty sample");
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return x[i] < x[j]; });
  double wtot = 0.0;
  if (w.empty()) {
    w.assign(n, 1.0);
    wtot = double(n);
  } else {
    if (w.size() != n) throw std::invalid_argument("ks_vs_cdf: weight size");
    for (double wi : w) wtot += wi;
  }
  double cum = 0.0, d = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double xi = x[order[r]];
    const double f = cdf(xi);
    d = std::max(d, std::fabs(cum / wtot - f));
    cum += w[order[r]];
    d = std::max(d, std::fabs(cum / wtot - f));
  }
  return d;
}

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  bool degenerate = false;
};

// Ordinary least squares y = a + b x.
inline SlopeFit ols_slope(const std::vector<double>& x,
                          const std::vector<double>& y) {
  SlopeFit fit;
  const std::size_t n = x.size();
  if (n != y.size() || n < 2) {
    fit.degenerate = true;
    return fit;
  }
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0) {
    fit.degenerate = true;
    return fit;
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (n > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - fit.intercept - fit.slope * x[i];
      rss += r * r;
    }
    fit.slope_stderr = std::sqrt(rss / double(n - 2) / sxx);
  }
  return fit;
}

}  // namespace iflab
