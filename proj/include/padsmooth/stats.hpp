#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace padsmooth {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Proportion with its Wilson score interval.
struct Proportion {
  std::size_t successes = 0;
  std::size_t trials = 0;

  double value() const {
    return trials ? static_cast<double>(successes) / static_cast<double>(trials)
                  : 0.0;
  }
  /// Plug-in binomial standard error.
  double sigma() const {
    if (!trials) return 0.0;
    const double p = value();
    return std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
  }
  Interval wilson(double z = 1.959963984540054) const {
    if (!trials) return {0.0, 1.0};
    const double n = static_cast<double>(trials);
    const double p = value();
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double mid = (p + z2 / (2 * n)) / denom;
    const double half =
        z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom;
    return {std::max(0.0, mid - half), std::min(1.0, mid + half)};
  }
};

inline double binomial_sigma(double p, std::size_t n) {
  return n ? std::sqrt(std::max(0.0, p * (1 - p)) / static_cast<double>(n)) : 0.0;
}

/// One-sample Kolmogorov-Smirnov statistic against a continuous CDF.
inline double ks_statistic(std::vector<double> xs,
                           const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, f - static_cast<double>(i) / n,
                  static_cast<double>(i + 1) / n - f});
  }
  return d;
}

/// Asymptotic KS critical value at level 0.01.
inline double ks_critical_01(std::size_t n) {
  return 1.628 / std::sqrt(static_cast<double>(n));
}

/// Pearson chi-square statistic against equal expected counts.
inline double chi_square_uniform(const std::vector<std::size_t>& counts) {
  double total = 0.0;
  for (auto c : counts) total += static_cast<double>(c);
  const double e = total / static_cast<double>(counts.size());
  double s = 0.0;
  for (auto c : counts) s += (static_cast<double>(c) - e) * (static_cast<double>(c) - e) / e;
  return s;
}

/// Least-squares slope of y = c x through the origin.
inline double fit_through_origin(const std::vector<double>& x,
                                 const std::vector<double>& y) {
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += x[i] * y[i];
    sxx += x[i] * x[i];
  }
  return sxx > 0 ? sxy / sxx : 0.0;
}

/// Ordinary least-squares slope of y on x.
inline double ols_slope(const std::vector<double>& x,
                        const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx > 0 ? sxy / sxx : 0.0;
}

inline double log_log_slope(const std::vector<double>& x,
                            const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return ols_slope(lx, ly);
}

}  // namespace padsmooth
