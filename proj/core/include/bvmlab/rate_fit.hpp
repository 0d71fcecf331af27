#pragma once

#include "bvmlab/random.hpp"
#include "bvmlab/report.hpp"

#include <string_view>
#include <vector>

namespace bvmlab {

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double standard_error = 0.0;  // bootstrap standard deviation of the slope
  std::vector<double> ns;
  std::vector<double> medians;
};

// Least-squares slope of log median(metric) against log n over per-replication
// rows, with a bootstrap standard error from resampling replications within
// each n. Needs at least 4 distinct n and 20 replications per n; throws
// InsufficientData otherwise, and also when a median is not positive.
RateFit rate_fit(const std::vector<ReportRow>& rows, std::string_view metric,
                 Index bootstrap = 200, RandomSource rs = RandomSource(0x7261746566697400ULL, 0));

double median(std::vector<double> values);

// Slope and intercept of y on x by ordinary least squares.
std::pair<double, double> ols_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace bvmlab
