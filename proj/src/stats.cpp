#include "fedxfer/stats.hpp"

#include <cmath>
#include <string>

#include "fedxfer/error.hpp"

namespace fedxfer {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

namespace {

// Acklam's rational approximation to the standard normal quantile
double quantile_estimate(double p) {
  static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                              -2.759285104469687e+02, 1.383577518672690e+02,
                              -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                              -1.556989798598866e+02, 6.680131188771972e+01,
                              -1.328068155288572e+01};
  static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                              -2.400758277161838e+00, -2.549732539343734e+00,
                              4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double normal_inverse_cdf(double p) {
  if (!(p > 0.0 && p < 1.0))
    fail(ErrorCode::evaluation, "quantile argument must lie strictly inside (0, 1)");
  double x = quantile_estimate(p);
  const double err = normal_cdf(x) - p;
  const double density = std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.141592653589793238462643383279502884);
  if (density > 0.0) x -= err / density;
  return x;
}

SeriesStats series_stats(const std::vector<double>& series) {
  if (series.size() < 2)
    fail(ErrorCode::evaluation,
         "need at least 2 values, got " + std::to_string(series.size()));
  SeriesStats stats;
  for (double v : series) stats.mean += v;
  stats.mean /= static_cast<double>(series.size());
  double ss = 0.0;
  for (double v : series) {
    const double d = v - stats.mean;
    ss += d * d;
  }
  stats.stddev = std::sqrt(ss / static_cast<double>(series.size() - 1));
  return stats;
}

double significance(const std::vector<double>& series, double p_percent) {
  if (!(p_percent > 0.0 && p_percent < 100.0))
    fail(ErrorCode::evaluation, "p must lie strictly inside (0, 100) percent");
  const SeriesStats stats = series_stats(series);
  return stats.mean + stats.stddev * normal_inverse_cdf(p_percent / 100.0);
}

}  // namespace fedxfer
