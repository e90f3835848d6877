#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "contraction/errors.hpp"

namespace contraction {

/// Empirical (1-delta)-quantile with the lower order-statistic convention:
/// the element of rank ceil((1-delta)*m) (1-based) of the sorted values.
inline double lower_quantile(std::vector<double> values, double delta) {
  if (values.empty()) throw estimation_error("lower_quantile: empty sample");
  const std::size_t m = values.size();
  auto rank = static_cast<std::size_t>(std::ceil((1.0 - delta) * static_cast<double>(m)));
  rank = std::min(std::max<std::size_t>(rank, 1), m);
  std::nth_element(values.begin(), values.begin() + (rank - 1), values.end());
  return values[rank - 1];
}

inline double median(std::vector<double> values) {
  if (values.empty()) throw estimation_error("median: empty sample");
  const std::size_t m = values.size();
  std::nth_element(values.begin(), values.begin() + m / 2, values.end());
  double hi = values[m / 2];
  if (m % 2 == 1) return hi;
  double lo = *std::max_element(values.begin(), values.begin() + m / 2);
  return 0.5 * (lo + hi);
}

inline double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double sample_variance(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

/// Ordinary least squares y = slope*x + intercept.
struct LineFit {
  double slope = 0;
  double intercept = 0;
  double slope_stderr = 0;
  double r_squared = 1;
  std::size_t points = 0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw estimation_error("fit_line: need >= 2 paired points");
  const auto n = static_cast<double>(x.size());
  const double mx = mean(x), my = mean(y);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0) throw estimation_error("fit_line: degenerate abscissae");
  LineFit f;
  f.points = x.size();
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ssr = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.slope * x[i] + f.intercept);
    ssr += r * r;
  }
  f.r_squared = syy > 0 ? 1.0 - ssr / syy : 1.0;
  f.slope_stderr = x.size() > 2 ? std::sqrt(ssr / (n - 2.0) / sxx) : 0.0;
  return f;
}

/// OLS slope of log(y) on log(x). Inputs must be positive.
inline LineFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= 0 || y[i] <= 0) throw estimation_error("loglog_fit: nonpositive input");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  return fit_line(lx, ly);
}

/// (mean of v_i^p)^(1/p), accumulated in the log domain so large p cannot
/// overflow. Zeros contribute exp(-inf) = 0.
inline double power_mean(const std::vector<double>& v, double p) {
  if (v.empty()) throw estimation_error("power_mean: empty sample");
  double max_log = -std::numeric_limits<double>::infinity();
  std::vector<double> logs(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    logs[i] = v[i] > 0 ? p * std::log(v[i]) : -std::numeric_limits<double>::infinity();
    max_log = std::max(max_log, logs[i]);
  }
  if (!std::isfinite(max_log)) return 0.0;  // all zeros
  double s = 0;
  for (double l : logs) s += std::exp(l - max_log);
  const double lse = max_log + std::log(s / static_cast<double>(v.size()));
  return std::exp(lse / p);
}

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

}  // namespace contraction
