#include "tmar/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "tmar/errors.hpp"

namespace tmar {

namespace {

constexpr double kInitialDof = 10.0;
constexpr double kDefaultGamma = 0.01;
constexpr int kInitTries = 1000;

double residual(const TMarSpec& spec, std::size_t k, std::span<const double> y, std::size_t t) {
  return y[t] - component_location(spec, k, y, t);
}

// y_t minus the autoregressive part only (no shift).
double raw_residual(const TMarSpec& spec, std::size_t k, std::span<const double> y, std::size_t t) {
  return residual(spec, k, y, t) + spec.shift(k);
}

void require_window(const SamplerState& state, const SeriesWindow& window) {
  if (window.first < state.spec.max_order()) {
    throw UsageError("window starts before the model's maximum order");
  }
  if (state.latent.allocations.size() != window.size() || state.latent.xis.size() != window.size()) {
    throw UsageError("latent state does not match the series window");
  }
}

double quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

}  // namespace

void PriorConfig::validate(std::size_t g) const {
  if (!(kappa > 0.0) || !(c > 0.0) || !(a > 0.0) || !(b > 0.0)) {
    throw UsageError("prior scale hyperparameters (kappa, c, a, b) must be positive");
  }
  if (!std::isfinite(zeta)) throw UsageError("prior centre zeta must be finite");
  if (dirichlet_weights.size() != g || nu_shape.size() != g || nu_rate.size() != g) {
    throw UsageError("prior blocks must have one entry per component");
  }
  for (std::size_t k = 0; k < g; ++k) {
    if (!(dirichlet_weights[k] > 0.0) || !(nu_shape[k] > 0.0) || !(nu_rate[k] > 0.0)) {
      throw UsageError("Dirichlet weights and degrees-of-freedom hyperparameters must be positive");
    }
  }
  if (nu_lower != 2.0 || nu_upper != 30.0) {
    throw UsageError("degrees-of-freedom bounds are fixed at (2, 30]");
  }
}

TruncatedGamma PriorConfig::nu_prior(std::size_t k) const {
  return TruncatedGamma(nu_shape[k], nu_rate[k], nu_lower, nu_upper);
}

std::pair<double, double> nu_hyperparameters(double center, double variance) {
  // (alpha - 1) / beta = center and alpha / beta^2 = variance
  // => variance * beta^2 - center * beta - 1 = 0.
  if (!(variance > 0.0) || !(center > 0.0) || !std::isfinite(center) || !std::isfinite(variance)) {
    throw UsageError("no positive (alpha, beta) for dof centre " + std::to_string(center) +
                     " and target variance " + std::to_string(variance));
  }
  const double beta = (center + std::sqrt(center * center + 4.0 * variance)) / (2.0 * variance);
  const double alpha = variance * beta * beta;
  return {alpha, beta};
}

PriorConfig default_priors(std::span<const double> data, std::size_t g,
                           std::span<const double> nu_center, double nu_target_var) {
  if (data.empty()) throw DataError("cannot derive priors from an empty series");
  if (g == 0) throw UsageError("number of components must be positive");
  const auto [lo, hi] = std::minmax_element(data.begin(), data.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) throw DataError("series has zero range; priors are undefined");
  if (nu_center.size() != g && nu_center.size() != 1) {
    throw UsageError("nu_center needs one value or one per component");
  }

  PriorConfig priors;
  priors.a = 0.2;
  priors.c = 2.0;
  priors.b = 100.0 * priors.a / (priors.c * range * range);
  priors.zeta = *lo + range / 2.0;
  priors.kappa = 1.0 / range;
  priors.dirichlet_weights.assign(g, 1.0);
  for (std::size_t k = 0; k < g; ++k) {
    const double center = nu_center.size() == 1 ? nu_center[0] : nu_center[k];
    const auto [alpha, beta] = nu_hyperparameters(center, nu_target_var);
    priors.nu_shape.push_back(alpha);
    priors.nu_rate.push_back(beta);
  }
  return priors;
}

double moment_dof_estimate(std::span<const double> data, std::size_t order) {
  if (data.size() < order + 10) throw DataError("series too short for a moment estimate");
  const auto rows = static_cast<Eigen::Index>(data.size() - order);
  const auto cols = static_cast<Eigen::Index>(order + 1);
  Eigen::MatrixXd x(rows, cols);
  Eigen::VectorXd y(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto t = static_cast<std::size_t>(r) + order;
    y(r) = data[t];
    x(r, 0) = 1.0;
    for (std::size_t i = 1; i <= order; ++i) x(r, static_cast<Eigen::Index>(i)) = data[t - i];
  }
  const Eigen::VectorXd beta = x.colPivHouseholderQr().solve(y);
  const Eigen::VectorXd e = y - x * beta;
  const double m2 = e.squaredNorm() / static_cast<double>(rows);
  const double m4 = e.array().pow(4).sum() / static_cast<double>(rows);
  if (!(m2 > 0.0)) return 30.0;
  const double excess = m4 / (m2 * m2) - 3.0;
  if (!(excess > 0.0)) return 30.0;
  return std::clamp(4.0 + 6.0 / excess, 4.5, 30.0);
}

UpdatePlan UpdatePlan::all(std::size_t g) {
  UpdatePlan plan;
  plan.ar.assign(g, true);
  plan.dofs.assign(g, true);
  return plan;
}

std::vector<ComponentStats> component_statistics(const SamplerState& state,
                                                 const SeriesWindow& window) {
  require_window(state, window);
  const TMarSpec& spec = state.spec;
  const std::size_t g = spec.components();
  std::vector<ComponentStats> stats(g);
  std::vector<double> raw_sum(g, 0.0);
  std::vector<double> weighted_raw(g, 0.0);
  const auto y = window.values;
  for (std::size_t i = 0; i < window.size(); ++i) {
    const std::size_t t = window.first + i;
    const std::size_t k = state.latent.allocations[i];
    const double xi = state.latent.xis[i];
    const double r = raw_residual(spec, k, y, t);
    const double e = r - spec.shift(k);
    auto& s = stats[k];
    ++s.count;
    raw_sum[k] += r;
    weighted_raw[k] += xi * r;
    s.xi_sum += xi;
    s.weighted_square += xi * e * e;
    s.log_xi_sum += std::log(xi);
  }
  for (std::size_t k = 0; k < g; ++k) {
    auto& s = stats[k];
    s.gap = spec.unit_root_gap(k);
    s.raw_mean = s.count > 0 ? raw_sum[k] / static_cast<double>(s.count) : 0.0;
    s.centered_weighted = weighted_raw[k] - s.raw_mean * s.xi_sum;
  }
  return stats;
}

void update_allocations(SamplerState& state, const SeriesWindow& window, Rng& rng) {
  require_window(state, window);
  const TMarSpec& spec = state.spec;
  const std::size_t g = spec.components();
  if (g == 1) {
    std::fill(state.latent.allocations.begin(), state.latent.allocations.end(), 0);
    return;
  }
  // Joint weight of (z_t = k, xi_t): pi_k N(y; loc, sigma^2/xi) Ga(xi; nu/2, (nu-2)/2).
  std::vector<double> base(g);
  std::vector<double> tau(g);
  std::vector<double> half_nu(g);
  std::vector<double> half_nu_minus(g);
  for (std::size_t k = 0; k < g; ++k) {
    const double nu = spec.dofs()[k];
    tau[k] = spec.precision(k);
    half_nu[k] = nu / 2.0;
    half_nu_minus[k] = (nu - 2.0) / 2.0;
    base[k] = std::log(spec.weights()[k]) + 0.5 * std::log(tau[k]) +
              half_nu[k] * std::log(half_nu_minus[k]) - std::lgamma(half_nu[k]);
  }
  std::vector<double> log_w(g);
  const auto y = window.values;
  for (std::size_t i = 0; i < window.size(); ++i) {
    const std::size_t t = window.first + i;
    const double xi = state.latent.xis[i];
    const double log_xi = std::log(xi);
    for (std::size_t k = 0; k < g; ++k) {
      const double e = residual(spec, k, y, t);
      log_w[k] = base[k] - 0.5 * tau[k] * xi * e * e + (half_nu[k] - 1.0) * log_xi -
                 half_nu_minus[k] * xi;
    }
    state.latent.allocations[i] = sample_categorical_log(log_w, rng);
  }
}

void update_xi(SamplerState& state, const SeriesWindow& window, Rng& rng) {
  require_window(state, window);
  const TMarSpec& spec = state.spec;
  const auto y = window.values;
  for (std::size_t i = 0; i < window.size(); ++i) {
    const std::size_t t = window.first + i;
    const std::size_t k = state.latent.allocations[i];
    const double nu = spec.dofs()[k];
    const double e = residual(spec, k, y, t);
    const double rate = 0.5 * spec.precision(k) * e * e + (nu - 2.0) / 2.0;
    state.latent.xis[i] = sample_gamma((nu + 1.0) / 2.0, rate, rng);
    if (!(state.latent.xis[i] > 0.0)) {
      state.latent.xis[i] = std::numeric_limits<double>::min();
    }
  }
}

bool update_weights(SamplerState& state, const PriorConfig& priors, Rng& rng) {
  const std::size_t g = state.spec.components();
  if (g == 1) return true;
  std::vector<double> alpha(priors.dirichlet_weights.begin(), priors.dirichlet_weights.end());
  for (std::size_t k : state.latent.allocations) alpha[k] += 1.0;
  std::vector<double> candidate = sample_dirichlet(alpha, rng);
  for (double w : candidate) {
    if (!(w > 0.0)) return false;
  }
  TMarSpec proposal = state.spec;
  proposal.set_weights(std::move(candidate));
  if (!is_stable(proposal)) return false;
  state.spec = std::move(proposal);
  return true;
}

void update_means(SamplerState& state, const SeriesWindow& window, const PriorConfig& priors,
                  Rng& rng) {
  if (priors.fix_means_to_zero) return;
  const auto stats = component_statistics(state, window);
  for (std::size_t k = 0; k < state.spec.components(); ++k) {
    const auto& s = stats[k];
    const double tau = state.spec.precision(k);
    const double precision = tau * s.gap * s.gap * s.xi_sum + priors.kappa;
    const double mean =
        (tau * s.gap * (s.raw_mean * s.xi_sum + s.centered_weighted) + priors.kappa * priors.zeta) /
        precision;
    state.spec.set_mean(k, sample_normal(mean, 1.0 / std::sqrt(precision), rng));
  }
}

void update_lambda(SamplerState& state, const PriorConfig& priors, Rng& rng) {
  const std::size_t g = state.spec.components();
  double tau_sum = 0.0;
  for (std::size_t k = 0; k < g; ++k) tau_sum += state.spec.precision(k);
  state.lambda = sample_gamma(priors.a + priors.c * static_cast<double>(g), priors.b + tau_sum, rng);
}

void update_precisions(SamplerState& state, const SeriesWindow& window, const PriorConfig& priors,
                       Rng& rng) {
  const auto stats = component_statistics(state, window);
  for (std::size_t k = 0; k < state.spec.components(); ++k) {
    const auto& s = stats[k];
    const double shape = static_cast<double>(s.count) / 2.0 + priors.c;
    const double rate = 0.5 * s.weighted_square + state.lambda;
    const double tau = sample_gamma(shape, rate, rng);
    if (!(tau > 0.0) || !std::isfinite(tau)) {
      throw NumericalError("precision draw for component " + std::to_string(k + 1) +
                           " is not positive and finite");
    }
    state.spec.set_precision(k, tau);
  }
  update_lambda(state, priors, rng);
}

double ar_log_acceptance(const SamplerState& state, const SeriesWindow& window, std::size_t k,
                         std::span<const double> candidate) {
  require_window(state, window);
  TMarSpec proposal = state.spec;
  proposal.set_ar(k, std::vector<double>(candidate.begin(), candidate.end()));
  if (window.first < proposal.max_order() || !is_stable(proposal)) {
    return -std::numeric_limits<double>::infinity();
  }
  const auto y = window.values;
  double delta = 0.0;
  for (std::size_t i = 0; i < window.size(); ++i) {
    if (state.latent.allocations[i] != k) continue;
    const std::size_t t = window.first + i;
    const double e_new = residual(proposal, k, y, t);
    const double e_old = residual(state.spec, k, y, t);
    delta += state.latent.xis[i] * (e_new * e_new - e_old * e_old);
  }
  return std::min(0.0, -0.5 * state.spec.precision(k) * delta);
}

bool update_ar_coefficients(SamplerState& state, const SeriesWindow& window, std::size_t k,
                            double gamma, Rng& rng) {
  const auto& current = state.spec.ar(k);
  if (current.empty()) return true;
  std::vector<double> candidate(current);
  const double step = std::sqrt(gamma);
  for (double& c : candidate) c += sample_normal(0.0, step, rng);
  const double log_alpha = ar_log_acceptance(state, window, k, candidate);
  if (std::log(sample_uniform(0.0, 1.0, rng)) < log_alpha) {
    state.spec.set_ar(k, std::move(candidate));
    return true;
  }
  return false;
}

double dof_log_likelihood(const ComponentStats& stats, double nu) {
  const double n = static_cast<double>(stats.count);
  return n * ((nu / 2.0) * std::log((nu - 2.0) / 2.0) - std::lgamma(nu / 2.0)) +
         (nu / 2.0 - 1.0) * stats.log_xi_sum - ((nu - 2.0) / 2.0) * stats.xi_sum;
}

bool update_dofs(SamplerState& state, const SeriesWindow& window, const PriorConfig& priors,
                 std::size_t k, Rng& rng) {
  const auto stats = component_statistics(state, window);
  const double current = state.spec.dofs()[k];
  double candidate = sample_truncated_gamma(priors.nu_prior(k), rng);
  if (!(candidate > priors.nu_lower)) return false;
  candidate = std::min(candidate, priors.nu_upper);
  const double log_alpha =
      dof_log_likelihood(stats[k], candidate) - dof_log_likelihood(stats[k], current);
  if (std::log(sample_uniform(0.0, 1.0, rng)) < log_alpha) {
    state.spec.set_dof(k, candidate);
    return true;
  }
  return false;
}

void gibbs_sweep(SamplerState& state, const SeriesWindow& window, const PriorConfig& priors,
                 const UpdatePlan& plan, std::span<const double> gamma, SweepCounters& counters,
                 Rng& rng) {
  const std::size_t g = state.spec.components();
  update_allocations(state, window, rng);
  update_xi(state, window, rng);
  if (plan.weights) counters.weights.record(update_weights(state, priors, rng));
  if (plan.means) update_means(state, window, priors, rng);
  if (plan.precisions) {
    update_precisions(state, window, priors, rng);
  } else {
    update_lambda(state, priors, rng);
  }
  for (std::size_t k = 0; k < g; ++k) {
    if (plan.ar[k] && state.spec.order(k) > 0) {
      counters.ar[k].record(update_ar_coefficients(state, window, k, gamma[k], rng));
    }
  }
  for (std::size_t k = 0; k < g; ++k) {
    if (plan.dofs[k]) counters.dofs[k].record(update_dofs(state, window, priors, k, rng));
  }
}

void refresh_latents(SamplerState& state, const SeriesWindow& window, Rng& rng) {
  const TMarSpec& spec = state.spec;
  const std::size_t g = spec.components();
  if (window.first < spec.max_order()) {
    throw UsageError("window starts before the model's maximum order");
  }
  state.latent.allocations.resize(window.size());
  state.latent.xis.resize(window.size());
  std::vector<StandardizedT> noise;
  noise.reserve(g);
  for (std::size_t k = 0; k < g; ++k) {
    noise.emplace_back(0.0, spec.scales()[k] * spec.scales()[k], spec.dofs()[k]);
  }
  std::vector<double> log_w(g);
  const auto y = window.values;
  for (std::size_t i = 0; i < window.size(); ++i) {
    const std::size_t t = window.first + i;
    for (std::size_t k = 0; k < g; ++k) {
      log_w[k] = std::log(spec.weights()[k]) + log_pdf_standardized_t(residual(spec, k, y, t), noise[k]);
    }
    const std::size_t k = g == 1 ? 0 : sample_categorical_log(log_w, rng);
    const double nu = spec.dofs()[k];
    const double e = residual(spec, k, y, t);
    state.latent.allocations[i] = k;
    state.latent.xis[i] =
        std::max(sample_gamma((nu + 1.0) / 2.0, 0.5 * spec.precision(k) * e * e + (nu - 2.0) / 2.0, rng),
                 std::numeric_limits<double>::min());
  }
}

SamplerState initial_state(const SeriesWindow& window, std::span<const std::size_t> orders,
                           const PriorConfig& priors, Rng& rng) {
  const std::size_t g = orders.size();
  if (g == 0) throw UsageError("at least one component is required");
  priors.validate(g);
  const std::size_t p = *std::max_element(orders.begin(), orders.end());
  if (window.first < p) throw UsageError("window starts before the largest order");
  if (window.size() < 2) throw DataError("window holds fewer than two observations");

  std::vector<double> data(window.values.begin() + static_cast<std::ptrdiff_t>(window.first),
                           window.values.end());
  double mean = 0.0;
  for (double v : data) mean += v;
  mean /= static_cast<double>(data.size());
  double var = 0.0;
  for (double v : data) var += (v - mean) * (v - mean);
  var /= static_cast<double>(data.size() - 1);
  if (!(var > 0.0)) throw DataError("series has zero variance");

  std::vector<double> means(g, 0.0);
  if (!priors.fix_means_to_zero) {
    for (std::size_t k = 0; k < g; ++k) {
      means[k] = quantile(data, (static_cast<double>(k) + 0.5) / static_cast<double>(g));
    }
  }
  std::vector<double> dof(g, std::clamp(kInitialDof, priors.nu_lower + 1e-6, priors.nu_upper));
  std::vector<double> scales(g, std::sqrt(var));
  std::vector<double> weights(g, 1.0 / static_cast<double>(g));

  for (int attempt = 0; attempt < kInitTries; ++attempt) {
    std::vector<std::vector<double>> ar(g);
    for (std::size_t k = 0; k < g; ++k) {
      ar[k].resize(orders[k]);
      for (double& c : ar[k]) c = sample_uniform(-0.5, 0.5, rng);
    }
    TMarSpec spec(weights, means, ar, scales, dof);
    if (!is_stable(spec)) continue;
    SamplerState state{std::move(spec), priors.c * var, {}};
    state.latent.allocations.resize(window.size());
    state.latent.xis.assign(window.size(), 1.0);
    std::vector<double> log_w(g);
    for (std::size_t k = 0; k < g; ++k) log_w[k] = std::log(weights[k]);
    for (auto& z : state.latent.allocations) z = sample_categorical_log(log_w, rng);
    return state;
  }
  throw NumericalError("could not find a stable starting point for orders after " +
                       std::to_string(kInitTries) + " attempts");
}

double adapt_gamma(double gamma, bool accepted, std::size_t iteration, double target) {
  const double step = 1.0 / std::pow(static_cast<double>(iteration) + 1.0, 0.6);
  const double updated = std::exp(std::log(gamma) + step * ((accepted ? 1.0 : 0.0) - target));
  return std::clamp(updated, 1e-8, 10.0);
}

ChainTrace run_gibbs(const SeriesWindow& window, SamplerState start, const PriorConfig& priors,
                     const GibbsSettings& settings, const UpdatePlan& plan, Rng& rng) {
  const std::size_t g = start.spec.components();
  priors.validate(g);
  if (settings.iterations <= settings.burnin) {
    throw UsageError("iterations must exceed burn-in");
  }
  if (plan.ar.size() != g || plan.dofs.size() != g) throw UsageError("update plan has wrong size");
  std::vector<double> gamma = settings.gamma;
  if (gamma.empty()) gamma.assign(g, kDefaultGamma);
  if (gamma.size() != g) throw UsageError("gamma needs one value per component");

  ChainTrace trace;
  trace.first = window.first;
  const std::size_t kept = settings.iterations - settings.burnin;
  trace.draws.reserve(kept);
  trace.lambdas.reserve(kept);

  SamplerState state = std::move(start);
  SweepCounters burn(g);
  SweepCounters kept_counters(g);
  for (std::size_t iter = 0; iter < settings.iterations; ++iter) {
    const bool burning = iter < settings.burnin;
    SweepCounters& counters = burning ? burn : kept_counters;
    std::vector<std::size_t> before(g);
    for (std::size_t k = 0; k < g; ++k) before[k] = counters.ar[k].accepted;
    std::vector<std::size_t> attempted(g);
    for (std::size_t k = 0; k < g; ++k) attempted[k] = counters.ar[k].attempted;
    try {
      gibbs_sweep(state, window, priors, plan, gamma, counters, rng);
    } catch (const NumericalError& e) {
      throw NumericalError("iteration " + std::to_string(iter) + ": " + e.what());
    }
    if (!std::isfinite(state.lambda)) {
      throw NumericalError("iteration " + std::to_string(iter) + ": lambda is not finite");
    }
    if (burning && settings.adapt) {
      for (std::size_t k = 0; k < g; ++k) {
        if (counters.ar[k].attempted == attempted[k]) continue;
        gamma[k] = adapt_gamma(gamma[k], counters.ar[k].accepted > before[k], iter,
                               settings.target_acceptance);
      }
    }
    if (!burning) {
      trace.draws.push_back(state.spec);
      trace.lambdas.push_back(state.lambda);
    }
  }
  trace.ar_acceptance = kept_counters.ar;
  trace.dof_acceptance = kept_counters.dofs;
  trace.weight_acceptance = kept_counters.weights;
  trace.gamma = gamma;
  trace.final_state = std::move(state);
  return trace;
}

ChainTrace run_gibbs(const SeriesWindow& window, std::span<const std::size_t> orders,
                     const PriorConfig& priors, const GibbsSettings& settings) {
  Rng rng(settings.seed);
  SamplerState start = initial_state(window, orders, priors, rng);
  return run_gibbs(window, std::move(start), priors, settings, UpdatePlan::all(orders.size()), rng);
}

}  // namespace tmar
