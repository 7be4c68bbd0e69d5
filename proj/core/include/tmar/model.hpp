#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tmar/distributions.hpp"

namespace tmar {

/// Parameters of a g-component mixture autoregressive model with
/// standardized Student-t innovations.
///
/// Component k predicts y_t with location
///     shift_k + sum_i ar(k)[i-1] * y_{t-i},   shift_k = mean_k * (1 - sum_i ar(k)[i-1])
/// and innovation S(0, scale_k^2, dof_k). Means are the stored quantity; the
/// shift is derived. A component built from a shift whose coefficients sum to
/// one (unit root) has no defined mean and keeps its shift fixed instead.
class TMarSpec {
 public:
  TMarSpec(std::vector<double> weights, std::vector<double> means,
           std::vector<std::vector<double>> ar, std::vector<double> scales,
           std::vector<double> dofs);

  /// Builds a spec from shift parameters instead of means.
  static TMarSpec from_shifts(std::vector<double> weights, std::vector<double> shifts,
                              std::vector<std::vector<double>> ar, std::vector<double> scales,
                              std::vector<double> dofs);

  std::size_t components() const { return weights_.size(); }
  std::size_t order(std::size_t k) const { return ar_[k].size(); }
  std::vector<std::size_t> orders() const;
  /// Largest order over the components (p).
  std::size_t max_order() const;

  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& means() const { return means_; }
  const std::vector<double>& scales() const { return scales_; }
  const std::vector<double>& dofs() const { return dofs_; }
  const std::vector<double>& ar(std::size_t k) const { return ar_[k]; }
  /// Coefficient at lag i (1-based), zero beyond the component's order.
  double ar_at(std::size_t k, std::size_t lag) const {
    return lag <= ar_[k].size() ? ar_[k][lag - 1] : 0.0;
  }

  double mean(std::size_t k) const { return means_[k]; }
  bool has_mean(std::size_t k) const { return has_mean_[k]; }
  double shift(std::size_t k) const { return shifts_[k]; }
  double precision(std::size_t k) const { return 1.0 / (scales_[k] * scales_[k]); }
  /// b_k = 1 - sum of the component's AR coefficients.
  double unit_root_gap(std::size_t k) const;

  void set_weights(std::vector<double> weights);
  void set_mean(std::size_t k, double mean);
  /// Replaces the coefficients; the mean is held and the shift re-derived.
  void set_ar(std::size_t k, std::vector<double> coefficients);
  void set_scale(std::size_t k, double scale);
  void set_precision(std::size_t k, double precision) { set_scale(k, 1.0 / std::sqrt(precision)); }
  void set_dof(std::size_t k, double dof);

  bool operator==(const TMarSpec&) const = default;

 private:
  TMarSpec() = default;
  void refresh_shift(std::size_t k);
  void validate() const;

  std::vector<double> weights_;
  std::vector<double> means_;
  std::vector<char> has_mean_;
  std::vector<double> shifts_;
  std::vector<std::vector<double>> ar_;
  std::vector<double> scales_;
  std::vector<double> dofs_;
};

/// Component i of the result is component perm[i] of `spec`.
TMarSpec permute_components(const TMarSpec& spec, std::span<const std::size_t> perm);

/// Latent variables of the data-augmented model: component allocations
/// (0-based) and precision multipliers xi, one per modeled time point.
struct LatentState {
  std::vector<std::size_t> allocations;
  std::vector<double> xis;
};

/// A series with its first `first` observations treated as fixed history;
/// the likelihood runs over t = first .. n-1 (0-based).
struct SeriesWindow {
  std::span<const double> values;
  std::size_t first = 0;

  std::size_t size() const { return values.size() - first; }
};

struct StabilityReport {
  bool stable = true;
  double spectral_radius = 0.0;
  std::vector<bool> per_component_stable;
};

inline constexpr double kStabilityMargin = 1e-10;

/// p x p companion matrix of component k, zero padded to p = max_order().
Eigen::MatrixXd companion_matrix(const TMarSpec& spec, std::size_t k);

/// Spectral radius of A = sum_k pi_k A_k (x) A_k. Zero for p = 0.
double mixture_spectral_radius(const TMarSpec& spec);

/// Full report including per-component companion stability.
StabilityReport stability_check(const TMarSpec& spec);

/// Same verdict as stability_check(spec).stable, without the per-component work.
bool is_stable(const TMarSpec& spec);

/// Location of component k at time t (0-based, t >= max_order()).
double component_location(const TMarSpec& spec, std::size_t k, std::span<const double> y,
                          std::size_t t);

/// Mixture density of y_t given history (chronological, last element is y_{t-1}).
double conditional_density(const TMarSpec& spec, double y_t, std::span<const double> history);
double log_conditional_density(const TMarSpec& spec, double y_t, std::span<const double> history);

/// (mean, variance) of y_t given history (chronological order).
std::pair<double, double> conditional_moments(const TMarSpec& spec,
                                              std::span<const double> history);

/// Latent-marginalized log likelihood over the window.
double log_likelihood(const TMarSpec& spec, const SeriesWindow& window);

/// rho_0 .. rho_max_lag from the mixture Yule-Walker recursion.
std::vector<double> theoretical_acf(const TMarSpec& spec, std::size_t max_lag);

struct SimulatedSeries {
  std::vector<double> values;
  /// Latents for the last n - p points (t = p .. n-1).
  LatentState latents;
};

/// Forward simulation. The first p values are drawn from a normal with the
/// mixture innovation variance and at least 200 points are discarded.
SimulatedSeries simulate_series(const TMarSpec& spec, std::size_t n, std::size_t burnin, Rng& rng);

/// Continues `history` for `count` steps without burn-in. The returned
/// series includes the history; latents cover only the generated points.
SimulatedSeries simulate_continuation(const TMarSpec& spec, std::span<const double> history,
                                      std::size_t count, Rng& rng);

}  // namespace tmar
