#include "tmar/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "tmar/errors.hpp"

namespace tmar {

namespace {

constexpr double kMinTruncatedMass = 1e-12;
constexpr double kRejectionThreshold = 0.1;

double lower_regularized(double shape, double x) {
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return boost::math::gamma_p(shape, x);
}

double upper_regularized(double shape, double x) {
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return boost::math::gamma_q(shape, x);
}

}  // namespace

StandardizedT::StandardizedT(double mean, double variance, double dof)
    : mean_(mean), variance_(variance), dof_(dof) {
  if (!(dof > 2.0)) {
    throw UsageError("standardized t requires dof > 2 (got " + std::to_string(dof) + ")");
  }
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw UsageError("standardized t requires a positive finite variance");
  }
  if (!std::isfinite(mean)) throw UsageError("standardized t requires a finite mean");
}

TruncatedGamma::TruncatedGamma(double shape, double rate, double lower, double upper)
    : shape_(shape), rate_(rate), lower_(std::max(lower, 0.0)), upper_(upper), mass_(0.0),
      upper_tail_(false) {
  if (!(shape > 0.0) || !(rate > 0.0)) {
    throw UsageError("truncated gamma requires positive shape and rate");
  }
  if (!(lower < upper)) throw UsageError("truncated gamma requires lower < upper");

  const double p_lo = lower_regularized(shape_, rate_ * lower_);
  const double p_hi = lower_regularized(shape_, rate_ * upper_);
  const double q_lo = upper_regularized(shape_, rate_ * lower_);
  const double q_hi = upper_regularized(shape_, rate_ * upper_);
  // Whichever of P or Q is smaller at the lower bound carries more precision.
  upper_tail_ = p_lo > 0.5;
  mass_ = upper_tail_ ? q_lo - q_hi : p_hi - p_lo;
  if (!(mass_ >= kMinTruncatedMass)) {
    throw NumericalError("truncated gamma interval [" + std::to_string(lower) + ", " +
                         std::to_string(upper) + "] holds negligible mass");
  }
}

double sample_standardized_t(const StandardizedT& dist, Rng& rng) {
  const double nu = dist.dof();
  const double xi = sample_gamma(nu / 2.0, (nu - 2.0) / 2.0, rng);
  return sample_normal(dist.mean(), std::sqrt(dist.variance() / xi), rng);
}

double log_pdf_standardized_t(double x, const StandardizedT& dist) {
  const double nu = dist.dof();
  const double scale2 = (nu - 2.0) * dist.variance();
  const double z = x - dist.mean();
  return std::lgamma((nu + 1.0) / 2.0) - std::lgamma(nu / 2.0) -
         0.5 * std::log(std::numbers::pi * scale2) -
         (nu + 1.0) / 2.0 * std::log1p(z * z / scale2);
}

double pdf_standardized_t(double x, const StandardizedT& dist) {
  return std::exp(log_pdf_standardized_t(x, dist));
}

double sample_gamma(double shape, double rate, Rng& rng) {
  std::gamma_distribution<double> gamma(shape, 1.0 / rate);
  return gamma(rng);
}

double sample_normal(double mean, double sd, Rng& rng) {
  std::normal_distribution<double> normal(mean, sd);
  return normal(rng);
}

double sample_uniform(double lower, double upper, Rng& rng) {
  std::uniform_real_distribution<double> uniform(lower, upper);
  return uniform(rng);
}

double sample_truncated_gamma(const TruncatedGamma& dist, Rng& rng) {
  const double a = dist.shape();
  const double r = dist.rate();
  if (dist.mass() >= kRejectionThreshold) {
    for (;;) {
      const double x = sample_gamma(a, r, rng);
      if (x > dist.lower() && x <= dist.upper()) return x;
    }
  }

  // Inverse CDF: find x in (lower, upper) with F(x) = target by bisection.
  const double u = sample_uniform(0.0, 1.0, rng);
  double lo = dist.lower();
  double hi = dist.upper();
  if (std::isinf(hi)) {
    hi = std::max(2.0 * lo, 1.0);
    while (lower_regularized(a, r * hi) < 1.0 - 1e-15 && upper_regularized(a, r * hi) > 1e-300) {
      hi *= 2.0;
    }
  }
  double target;
  auto distance = [&](double x) {
    // Monotone increasing in x in both branches.
    return dist.upper_tail_ ? target - upper_regularized(a, r * x)
                            : lower_regularized(a, r * x) - target;
  };
  if (dist.upper_tail_) {
    target = upper_regularized(a, r * dist.lower()) - u * dist.mass();
  } else {
    target = lower_regularized(a, r * dist.lower()) + u * dist.mass();
  }
  for (int iter = 0; iter < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (distance(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double log_pdf_truncated_gamma(double x, const TruncatedGamma& dist) {
  if (x < dist.lower() || x > dist.upper()) return -std::numeric_limits<double>::infinity();
  return log_pdf_gamma(x, dist.shape(), dist.rate()) - std::log(dist.mass());
}

std::vector<double> sample_dirichlet(std::span<const double> weights, Rng& rng) {
  if (weights.empty()) throw UsageError("dirichlet requires at least one weight");
  std::vector<double> draw(weights.size());
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] > 0.0)) throw UsageError("dirichlet weights must be positive");
    draw[i] = sample_gamma(weights[i], 1.0, rng);
    total += draw[i];
  }
  if (!(total > 0.0)) {
    // Every gamma underflowed (tiny shapes); fall back to a single vertex.
    std::vector<double> logs(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) logs[i] = std::log(weights[i]);
    std::fill(draw.begin(), draw.end(), 0.0);
    draw[sample_categorical_log(logs, rng)] = 1.0;
    return draw;
  }
  for (double& d : draw) d /= total;
  return draw;
}

std::size_t sample_categorical_log(std::span<const double> log_weights, Rng& rng) {
  if (log_weights.empty()) throw UsageError("categorical draw over an empty support");
  const double top = *std::max_element(log_weights.begin(), log_weights.end());
  if (!std::isfinite(top)) throw NumericalError("categorical weights are all zero or non-finite");
  double total = 0.0;
  for (double lw : log_weights) total += std::exp(lw - top);
  double u = sample_uniform(0.0, total, rng);
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    u -= std::exp(log_weights[i] - top);
    if (u < 0.0) return i;
  }
  // Round-off: return the last index with non-zero weight.
  for (std::size_t i = log_weights.size(); i-- > 0;) {
    if (std::isfinite(log_weights[i])) return i;
  }
  return log_weights.size() - 1;
}

double log_pdf_normal(double x, double mean, double variance) {
  const double z = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * variance) + z * z / variance);
}

double log_pdf_gamma(double x, double shape, double rate) {
  if (x <= 0.0) return -std::numeric_limits<double>::infinity();
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double log_pdf_dirichlet(std::span<const double> x, std::span<const double> alpha) {
  if (x.size() != alpha.size()) throw UsageError("dirichlet density: size mismatch");
  double total_alpha = 0.0;
  double result = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= 0.0) return -std::numeric_limits<double>::infinity();
    total_alpha += alpha[i];
    result += (alpha[i] - 1.0) * std::log(x[i]) - std::lgamma(alpha[i]);
  }
  return result + std::lgamma(total_alpha);
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double top = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(top)) return top;
  double total = 0.0;
  for (double v : values) total += std::exp(v - top);
  return top + std::log(total);
}

}  // namespace tmar
