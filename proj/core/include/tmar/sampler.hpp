#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "tmar/distributions.hpp"
#include "tmar/model.hpp"

namespace tmar {

/// Hyperparameters of the prior:
///   pi ~ Dirichlet(w),  mu_k ~ N(zeta, 1/kappa),  tau_k ~ Ga(c, lambda),
///   lambda ~ Ga(a, b),  nu_k ~ Ga(nu_shape_k, nu_rate_k) truncated to (2, 30],
///   phi flat on the stability region.
struct PriorConfig {
  double zeta = 0.0;
  double kappa = 1.0;
  double c = 2.0;
  double a = 0.2;
  double b = 1.0;
  std::vector<double> dirichlet_weights;
  std::vector<double> nu_shape;
  std::vector<double> nu_rate;
  double nu_lower = 2.0;
  double nu_upper = 30.0;
  bool fix_means_to_zero = false;

  /// Throws UsageError unless every block is sized for g components and positive.
  void validate(std::size_t g) const;
  TruncatedGamma nu_prior(std::size_t k) const;
};

/// (shape, rate) of a gamma whose mode is `center` and variance is `variance`.
std::pair<double, double> nu_hyperparameters(double center, double variance);

/// Data-driven defaults: a = 0.2, c = 2, b = 10 / R^2, zeta = min + R/2,
/// kappa = 1/R, where R is the range of the series.
PriorConfig default_priors(std::span<const double> data, std::size_t g,
                           std::span<const double> nu_center, double nu_target_var);

/// Degrees-of-freedom centre from the excess kurtosis of a least-squares AR
/// residual (6 / (nu - 4)), clamped to [4.5, 30].
double moment_dof_estimate(std::span<const double> data, std::size_t order);

/// Complete sampler state: parameters, the precision hyperparameter lambda and
/// the latent variables for the window.
struct SamplerState {
  TMarSpec spec;
  double lambda = 1.0;
  LatentState latent;
};

/// Which parameter blocks a sweep updates. Latent variables always move.
/// Fixed blocks are what the reduced runs of the evidence estimator use.
struct UpdatePlan {
  bool weights = true;
  bool means = true;
  bool precisions = true;
  std::vector<bool> ar;
  std::vector<bool> dofs;

  static UpdatePlan all(std::size_t g);
};

struct AcceptanceCounter {
  std::size_t attempted = 0;
  std::size_t accepted = 0;

  void record(bool ok) {
    ++attempted;
    if (ok) ++accepted;
  }
  double rate() const {
    return attempted == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(attempted);
  }
};

struct SweepCounters {
  std::vector<AcceptanceCounter> ar;
  std::vector<AcceptanceCounter> dofs;
  AcceptanceCounter weights;

  explicit SweepCounters(std::size_t g = 0) : ar(g), dofs(g) {}
};

/// Per-component sufficient statistics of the current allocation.
/// Residuals e_tk include the shift; raw residuals r_tk exclude it.
struct ComponentStats {
  std::size_t count = 0;          // n_k
  double raw_mean = 0.0;          // mean of r_tk over allocated t
  double gap = 1.0;               // b_k
  double centered_weighted = 0.0; // c_k = sum xi_t (r_tk - raw_mean)
  double xi_sum = 0.0;            // d_k
  double weighted_square = 0.0;   // sum xi_t e_tk^2
  double log_xi_sum = 0.0;        // sum log xi_t
};

std::vector<ComponentStats> component_statistics(const SamplerState& state,
                                                 const SeriesWindow& window);

void update_allocations(SamplerState& state, const SeriesWindow& window, Rng& rng);
void update_xi(SamplerState& state, const SeriesWindow& window, Rng& rng);
/// Dirichlet(w + n) proposal, accepted only if the mixture stays stable.
bool update_weights(SamplerState& state, const PriorConfig& priors, Rng& rng);
void update_means(SamplerState& state, const SeriesWindow& window, const PriorConfig& priors,
                  Rng& rng);
/// Draws every tau_k then lambda.
void update_precisions(SamplerState& state, const SeriesWindow& window, const PriorConfig& priors,
                       Rng& rng);
void update_lambda(SamplerState& state, const PriorConfig& priors, Rng& rng);

/// log of the random-walk acceptance ratio for replacing component k's
/// coefficients with `candidate`; -inf when the candidate mixture is unstable.
double ar_log_acceptance(const SamplerState& state, const SeriesWindow& window, std::size_t k,
                         std::span<const double> candidate);
bool update_ar_coefficients(SamplerState& state, const SeriesWindow& window, std::size_t k,
                            double gamma, Rng& rng);

/// log L(nu) for component k given allocations and xi:
/// n_k[(nu/2) log((nu-2)/2) - lgamma(nu/2)] + (nu/2 - 1) sum log xi - ((nu-2)/2) sum xi.
double dof_log_likelihood(const ComponentStats& stats, double nu);
/// Independence sampler with the truncated-gamma prior as proposal.
bool update_dofs(SamplerState& state, const SeriesWindow& window, const PriorConfig& priors,
                 std::size_t k, Rng& rng);

/// One sweep in the fixed order
/// allocations -> xi -> pi -> mu -> tau -> lambda -> phi -> nu.
void gibbs_sweep(SamplerState& state, const SeriesWindow& window, const PriorConfig& priors,
                 const UpdatePlan& plan, std::span<const double> gamma, SweepCounters& counters,
                 Rng& rng);

/// Draws (z, xi) jointly from their exact conditional given the parameters:
/// z_t from the latent-marginalized t weights, then xi_t | z_t.
void refresh_latents(SamplerState& state, const SeriesWindow& window, Rng& rng);

/// Dispersed but feasible starting point.
SamplerState initial_state(const SeriesWindow& window, std::span<const std::size_t> orders,
                           const PriorConfig& priors, Rng& rng);

struct GibbsSettings {
  std::size_t iterations = 10000;  // total sweeps, burn-in included
  std::size_t burnin = 1000;
  std::uint64_t seed = 0;
  std::vector<double> gamma;       // initial RW variances; empty -> 0.01 each
  bool adapt = true;               // Robbins-Monro tuning during burn-in
  double target_acceptance = 0.25;
};

/// Post-burn-in draws and bookkeeping of one chain.
struct ChainTrace {
  std::vector<TMarSpec> draws;
  std::vector<double> lambdas;
  std::vector<AcceptanceCounter> ar_acceptance;
  std::vector<AcceptanceCounter> dof_acceptance;
  AcceptanceCounter weight_acceptance;
  std::vector<double> gamma;       // RW variances in force after burn-in
  std::size_t first = 0;           // window start the chain conditioned on
  std::optional<SamplerState> final_state;

  std::size_t size() const { return draws.size(); }
};

/// Runs one chain from `start`. Draws after burn-in are stored; gamma adapts
/// during burn-in toward the target acceptance and stays frozen afterwards.
ChainTrace run_gibbs(const SeriesWindow& window, SamplerState start, const PriorConfig& priors,
                     const GibbsSettings& settings, const UpdatePlan& plan, Rng& rng);

/// Convenience overload: seeds a stream from settings.seed and initializes.
ChainTrace run_gibbs(const SeriesWindow& window, std::span<const std::size_t> orders,
                     const PriorConfig& priors, const GibbsSettings& settings);

/// Robbins-Monro step on log(gamma) toward `target` acceptance.
double adapt_gamma(double gamma, bool accepted, std::size_t iteration, double target);

}  // namespace tmar
