#include "bvmlab/rate_fit.hpp"

#include "bvmlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace bvmlab {

double median(std::vector<double> values) {
  if (values.empty()) throw InsufficientData("median of an empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

std::pair<double, double> ols_line(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx <= 0.0) throw InsufficientData("all x values coincide");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

RateFit rate_fit(const std::vector<ReportRow>& rows, std::string_view metric, Index bootstrap,
                 RandomSource rs) {
  std::map<double, std::vector<double>> groups;
  for (const auto& r : rows) {
    if (r.metric == metric && r.replication) groups[r.n].push_back(r.value);
  }
  if (groups.size() < 4) {
    throw InsufficientData(std::string(metric) + ": " + std::to_string(groups.size()) +
                           " n-values, need 4");
  }
  RateFit fit;
  std::vector<double> lx;
  std::vector<double> ly;
  for (const auto& [n, values] : groups) {
    if (values.size() < 20) {
      throw InsufficientData(std::string(metric) + ": " + std::to_string(values.size()) +
                             " replications at n = " + std::to_string(n) + ", need 20");
    }
    const double m = median(values);
    if (!(m > 0.0)) throw InsufficientData(std::string(metric) + ": non-positive median");
    fit.ns.push_back(n);
    fit.medians.push_back(m);
    lx.push_back(std::log(n));
    ly.push_back(std::log(m));
  }
  std::tie(fit.slope, fit.intercept) = ols_line(lx, ly);

  std::vector<double> slopes;
  slopes.reserve(static_cast<std::size_t>(bootstrap));
  std::vector<double> resample;
  for (Index b = 0; b < bootstrap; ++b) {
    std::vector<double> by;
    for (const auto& [n, values] : groups) {
      resample.resize(values.size());
      for (auto& v : resample) {
        v = values[static_cast<std::size_t>(rs.next_u64() % values.size())];
      }
      const double m = median(resample);
      by.push_back(std::log(std::max(m, std::numeric_limits<double>::min())));
    }
    slopes.push_back(ols_line(lx, by).first);
  }
  if (slopes.size() > 1) {
    double mean = 0.0;
    for (double s : slopes) mean += s;
    mean /= static_cast<double>(slopes.size());
    double var = 0.0;
    for (double s : slopes) var += (s - mean) * (s - mean);
    fit.standard_error = std::sqrt(var / static_cast<double>(slopes.size() - 1));
  }
  return fit;
}

}  // namespace bvmlab
