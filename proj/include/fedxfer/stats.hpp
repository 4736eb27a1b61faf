#pragma once

#include <vector>

namespace fedxfer {

/// Standard normal CDF via erfc; exact one half at zero.
double normal_cdf(double x);

/// Standard normal quantile: rational approximation refined by one Newton
/// step against normal_cdf. Absolute error below 1e-9 for p in
/// [1e-6, 1 - 1e-6]; p outside (0, 1) is an evaluation error.
double normal_inverse_cdf(double p);

struct SeriesStats {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, denominator n - 1
};

SeriesStats series_stats(const std::vector<double>& series);

/// Sig = mean + stddev * quantile(p_percent / 100) over the series; the
/// score a run beats with probability 1 - p/100 under a normal fit. Needs at
/// least two values and p_percent in (0, 100).
double significance(const std::vector<double>& series, double p_percent);

}  // namespace fedxfer
