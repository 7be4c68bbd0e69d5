#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "tmar/distributions.hpp"
#include "tmar/model.hpp"

namespace tmar::testing {

// Asymptotic Kolmogorov tail with the Stephens small-sample correction.
inline double ks_pvalue(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += (j % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

inline double ks_statistic(std::vector<double> draws, const std::function<double(double)>& cdf) {
  std::sort(draws.begin(), draws.end());
  const double n = static_cast<double>(draws.size());
  double d = 0.0;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const double f = cdf(draws[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

inline double ks_test(const std::vector<double>& draws, const std::function<double(double)>& cdf) {
  return ks_pvalue(ks_statistic(draws, cdf), draws.size());
}

inline std::vector<double> every(const std::vector<double>& x, std::size_t step) {
  std::vector<double> out;
  for (std::size_t i = 0; i < x.size(); i += step) out.push_back(x[i]);
  return out;
}

// Unnormalized log density tabulated on a fine grid, normalized with the
// trapezoid rule; CDF by cumulative trapezoid and linear interpolation.
class GridDensity {
 public:
  GridDensity(double lo, double hi, std::size_t points, const std::function<double(double)>& log_f)
      : x_(points), w_(points), cdf_(points, 0.0) {
    std::vector<double> lf(points);
    for (std::size_t i = 0; i < points; ++i) {
      x_[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
      lf[i] = log_f(x_[i]);
    }
    const double top = *std::max_element(lf.begin(), lf.end());
    for (std::size_t i = 0; i < points; ++i) w_[i] = std::exp(lf[i] - top);
    for (std::size_t i = 1; i < points; ++i) {
      cdf_[i] = cdf_[i - 1] + 0.5 * (w_[i] + w_[i - 1]) * (x_[i] - x_[i - 1]);
    }
    const double total = cdf_.back();
    log_norm_ = top + std::log(total);
    for (auto& c : cdf_) c /= total;
    for (auto& w : w_) w /= total;
  }

  double cdf(double x) const {
    if (x <= x_.front()) return 0.0;
    if (x >= x_.back()) return 1.0;
    const auto it = std::upper_bound(x_.begin(), x_.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - x_.begin());
    const double h = x_[i] - x_[i - 1];
    const double s = x - x_[i - 1];
    // Exact integral of the linear interpolant of the density.
    const double slope = (w_[i] - w_[i - 1]) / h;
    return cdf_[i - 1] + w_[i - 1] * s + 0.5 * slope * s * s;
  }

  // Log of the normalizing constant of exp(log_f).
  double log_normalizer() const { return log_norm_; }

  double mean() const {
    double m = 0.0;
    for (std::size_t i = 1; i < x_.size(); ++i) {
      m += 0.5 * (x_[i] * w_[i] + x_[i - 1] * w_[i - 1]) * (x_[i] - x_[i - 1]);
    }
    return m;
  }

 private:
  std::vector<double> x_;
  std::vector<double> w_;
  std::vector<double> cdf_;
  double log_norm_ = 0.0;
};

// Standardized t through the classical Student t: (x - m) / (s sqrt((nu - 2) / nu)) ~ t_nu.
inline double st_log_pdf(double x, double mean, double variance, double nu) {
  const double scale = std::sqrt(variance * (nu - 2.0) / nu);
  boost::math::students_t_distribution<double> t(nu);
  return std::log(boost::math::pdf(t, (x - mean) / scale)) - std::log(scale);
}

inline double st_cdf(double x, double mean, double variance, double nu) {
  const double scale = std::sqrt(variance * (nu - 2.0) / nu);
  boost::math::students_t_distribution<double> t(nu);
  return boost::math::cdf(t, (x - mean) / scale);
}

inline TMarSpec example_spec() {
  return TMarSpec({0.4, 0.4, 0.2}, {0.0, 0.0, 0.0}, {{-0.5, 0.5}, {1.1}, {-0.4}}, {5.0, 3.0, 1.0},
                  {4.0, 14.0, 10.0});
}

inline double sample_mean(const std::vector<double>& x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

inline double sample_variance(const std::vector<double>& x) {
  const double m = sample_mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

inline double sample_acf(const std::vector<double>& x, std::size_t lag) {
  const double m = sample_mean(x);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    den += (x[t] - m) * (x[t] - m);
    if (t >= lag) num += (x[t] - m) * (x[t - lag] - m);
  }
  return num / den;
}

}  // namespace tmar::testing
