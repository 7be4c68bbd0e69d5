#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace tmar {

/// Random stream used by every sampler. Each chain owns its own instance.
using Rng = std::mt19937_64;

/// Student-t distribution parameterized by its mean and *variance*, so that
/// the variance does not depend on the degrees of freedom. Requires dof > 2.
class StandardizedT {
 public:
  StandardizedT(double mean, double variance, double dof);

  double mean() const { return mean_; }
  double variance() const { return variance_; }
  double dof() const { return dof_; }

 private:
  double mean_;
  double variance_;
  double dof_;
};

/// Gamma(shape, rate) restricted to [lower, upper] and renormalized.
class TruncatedGamma {
 public:
  TruncatedGamma(double shape, double rate, double lower, double upper);

  double shape() const { return shape_; }
  double rate() const { return rate_; }
  double lower() const { return lower_; }
  double upper() const { return upper_; }
  /// Probability mass of the untruncated gamma inside [lower, upper].
  double mass() const { return mass_; }

 private:
  double shape_;
  double rate_;
  double lower_;
  double upper_;
  double mass_;
  bool upper_tail_;  // true when the interval is better resolved through Q(a, x)

  friend double sample_truncated_gamma(const TruncatedGamma&, Rng&);
};

// Two-stage draw: xi ~ Gamma(dof/2, rate (dof-2)/2), then Normal(mean, variance/xi).
double sample_standardized_t(const StandardizedT& dist, Rng& rng);
double pdf_standardized_t(double x, const StandardizedT& dist);
double log_pdf_standardized_t(double x, const StandardizedT& dist);

double sample_gamma(double shape, double rate, Rng& rng);
double sample_normal(double mean, double sd, Rng& rng);
double sample_uniform(double lower, double upper, Rng& rng);

/// Rejection from the parent gamma when the interval holds at least 10% of
/// the mass, bisection on the regularized incomplete gamma otherwise.
double sample_truncated_gamma(const TruncatedGamma& dist, Rng& rng);
double log_pdf_truncated_gamma(double x, const TruncatedGamma& dist);

/// Draws from Dirichlet(weights). Throws UsageError on empty or non-positive weights.
std::vector<double> sample_dirichlet(std::span<const double> weights, Rng& rng);

/// Index drawn with probability proportional to exp(log_weights[i]).
/// Normalization happens in log space, so all-underflowing inputs are fine.
std::size_t sample_categorical_log(std::span<const double> log_weights, Rng& rng);

double log_pdf_normal(double x, double mean, double variance);
double log_pdf_gamma(double x, double shape, double rate);
double log_pdf_dirichlet(std::span<const double> x, std::span<const double> alpha);

/// log(sum(exp(values))) without overflow; -inf for an empty or all -inf input.
double log_sum_exp(std::span<const double> values);

}  // namespace tmar
