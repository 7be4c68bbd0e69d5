#include "tmar/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

#include "tmar/errors.hpp"

namespace tmar {

namespace {

constexpr double kWeightTolerance = 1e-9;
constexpr double kMaxDof = 30.0;
constexpr std::size_t kMinSimulationBurnin = 200;

void require_history(const TMarSpec& spec, std::size_t length) {
  if (length < spec.max_order()) {
    throw UsageError("history of length " + std::to_string(length) + " is shorter than order " +
                     std::to_string(spec.max_order()));
  }
}

// Location of component k given a chronological history whose last entry is y_{t-1}.
double location_from_history(const TMarSpec& spec, std::size_t k, std::span<const double> history) {
  double loc = spec.shift(k);
  const auto& phi = spec.ar(k);
  for (std::size_t i = 0; i < phi.size(); ++i) loc += phi[i] * history[history.size() - 1 - i];
  return loc;
}

// Per-component constants of log(pi_k f_k(y)).
struct MixtureTerms {
  std::vector<double> log_const;
  std::vector<double> scale2;
  std::vector<double> exponent;

  explicit MixtureTerms(const TMarSpec& spec) {
    const std::size_t g = spec.components();
    log_const.resize(g);
    scale2.resize(g);
    exponent.resize(g);
    for (std::size_t k = 0; k < g; ++k) {
      const double nu = spec.dofs()[k];
      const double s2 = spec.scales()[k] * spec.scales()[k];
      scale2[k] = (nu - 2.0) * s2;
      exponent[k] = (nu + 1.0) / 2.0;
      log_const[k] = std::log(spec.weights()[k]) + std::lgamma((nu + 1.0) / 2.0) -
                     std::lgamma(nu / 2.0) - 0.5 * std::log(std::numbers::pi * scale2[k]);
    }
  }

  double term(std::size_t k, double residual) const {
    return log_const[k] - exponent[k] * std::log1p(residual * residual / scale2[k]);
  }
};

SimulatedSeries continue_series(const TMarSpec& spec, std::vector<double> values,
                                std::size_t count, Rng& rng) {
  const std::size_t g = spec.components();
  std::vector<double> log_w(g);
  for (std::size_t k = 0; k < g; ++k) log_w[k] = std::log(spec.weights()[k]);

  SimulatedSeries out;
  out.latents.allocations.reserve(count);
  out.latents.xis.reserve(count);
  values.reserve(values.size() + count);
  for (std::size_t step = 0; step < count; ++step) {
    const std::size_t k = sample_categorical_log(log_w, rng);
    const double nu = spec.dofs()[k];
    const double xi = sample_gamma(nu / 2.0, (nu - 2.0) / 2.0, rng);
    const double noise = sample_normal(0.0, spec.scales()[k] / std::sqrt(xi), rng);
    const double y = location_from_history(spec, k, values) + noise;
    if (!std::isfinite(y)) {
      throw NumericalError("simulation produced a non-finite value at position " +
                           std::to_string(values.size()));
    }
    values.push_back(y);
    out.latents.allocations.push_back(k);
    out.latents.xis.push_back(xi);
  }
  out.values = std::move(values);
  return out;
}

}  // namespace

TMarSpec::TMarSpec(std::vector<double> weights, std::vector<double> means,
                   std::vector<std::vector<double>> ar, std::vector<double> scales,
                   std::vector<double> dofs)
    : weights_(std::move(weights)),
      means_(std::move(means)),
      ar_(std::move(ar)),
      scales_(std::move(scales)),
      dofs_(std::move(dofs)) {
  const std::size_t g = weights_.size();
  if (means_.size() != g) throw UsageError("means must have one entry per component");
  has_mean_.assign(g, 1);
  shifts_.assign(g, 0.0);
  validate();
  for (std::size_t k = 0; k < g; ++k) refresh_shift(k);
}

TMarSpec TMarSpec::from_shifts(std::vector<double> weights, std::vector<double> shifts,
                               std::vector<std::vector<double>> ar, std::vector<double> scales,
                               std::vector<double> dofs) {
  TMarSpec spec;
  const std::size_t g = weights.size();
  if (shifts.size() != g) throw UsageError("shifts must have one entry per component");
  spec.weights_ = std::move(weights);
  spec.shifts_ = std::move(shifts);
  spec.ar_ = std::move(ar);
  spec.scales_ = std::move(scales);
  spec.dofs_ = std::move(dofs);
  spec.means_.assign(g, std::numeric_limits<double>::quiet_NaN());
  spec.has_mean_.assign(g, 0);
  spec.validate();
  for (std::size_t k = 0; k < g; ++k) {
    const double gap = spec.unit_root_gap(k);
    if (gap != 0.0) {
      spec.means_[k] = spec.shifts_[k] / gap;
      spec.has_mean_[k] = 1;
    }
  }
  return spec;
}

void TMarSpec::validate() const {
  const std::size_t g = weights_.size();
  if (g == 0) throw UsageError("a model needs at least one component");
  if (ar_.size() != g || scales_.size() != g || dofs_.size() != g) {
    throw UsageError("every parameter block must have one entry per component");
  }
  double total = 0.0;
  for (double w : weights_) {
    if (!(w > 0.0)) throw UsageError("mixing weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > kWeightTolerance) throw UsageError("mixing weights must sum to one");
  for (double s : scales_) {
    if (!(s > 0.0) || !std::isfinite(s)) throw UsageError("scales must be positive and finite");
  }
  for (double nu : dofs_) {
    if (!(nu > 2.0 && nu <= kMaxDof)) throw UsageError("degrees of freedom must lie in (2, 30]");
  }
  for (const auto& phi : ar_) {
    for (double c : phi) {
      if (!std::isfinite(c)) throw UsageError("autoregressive coefficients must be finite");
    }
  }
}

std::vector<std::size_t> TMarSpec::orders() const {
  std::vector<std::size_t> out(ar_.size());
  for (std::size_t k = 0; k < ar_.size(); ++k) out[k] = ar_[k].size();
  return out;
}

std::size_t TMarSpec::max_order() const {
  std::size_t p = 0;
  for (const auto& phi : ar_) p = std::max(p, phi.size());
  return p;
}

double TMarSpec::unit_root_gap(std::size_t k) const {
  return 1.0 - std::accumulate(ar_[k].begin(), ar_[k].end(), 0.0);
}

void TMarSpec::refresh_shift(std::size_t k) {
  if (has_mean_[k]) shifts_[k] = means_[k] * unit_root_gap(k);
}

void TMarSpec::set_weights(std::vector<double> weights) {
  if (weights.size() != weights_.size()) throw UsageError("weight vector has the wrong length");
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw UsageError("mixing weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > kWeightTolerance) throw UsageError("mixing weights must sum to one");
  weights_ = std::move(weights);
}

void TMarSpec::set_mean(std::size_t k, double mean) {
  if (!std::isfinite(mean)) throw UsageError("component mean must be finite");
  means_[k] = mean;
  has_mean_[k] = 1;
  refresh_shift(k);
}

void TMarSpec::set_ar(std::size_t k, std::vector<double> coefficients) {
  for (double c : coefficients) {
    if (!std::isfinite(c)) throw UsageError("autoregressive coefficients must be finite");
  }
  ar_[k] = std::move(coefficients);
  refresh_shift(k);
}

void TMarSpec::set_scale(std::size_t k, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw UsageError("scales must be positive and finite");
  scales_[k] = scale;
}

void TMarSpec::set_dof(std::size_t k, double dof) {
  if (!(dof > 2.0 && dof <= kMaxDof)) throw UsageError("degrees of freedom must lie in (2, 30]");
  dofs_[k] = dof;
}

TMarSpec permute_components(const TMarSpec& spec, std::span<const std::size_t> perm) {
  const std::size_t g = spec.components();
  if (perm.size() != g) throw UsageError("permutation has the wrong length");
  std::vector<char> seen(g, 0);
  std::vector<double> weights(g), means(g), shifts(g), scales(g), dofs(g);
  std::vector<std::vector<double>> ar(g);
  bool all_means = true;
  for (std::size_t i = 0; i < g; ++i) {
    const std::size_t src = perm[i];
    if (src >= g || seen[src]) throw UsageError("not a permutation");
    seen[src] = 1;
    weights[i] = spec.weights()[src];
    means[i] = spec.mean(src);
    shifts[i] = spec.shift(src);
    ar[i] = spec.ar(src);
    scales[i] = spec.scales()[src];
    dofs[i] = spec.dofs()[src];
    all_means = all_means && spec.has_mean(src);
  }
  if (all_means) return TMarSpec(weights, means, ar, scales, dofs);
  return TMarSpec::from_shifts(weights, shifts, ar, scales, dofs);
}

Eigen::MatrixXd companion_matrix(const TMarSpec& spec, std::size_t k) {
  const std::size_t p = spec.max_order();
  if (p == 0) throw UsageError("companion matrix undefined for a model of order 0");
  if (k >= spec.components()) throw UsageError("component index out of range");
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t j = 0; j < spec.order(k); ++j) c(0, j) = spec.ar(k)[j];
  for (std::size_t i = 1; i < p; ++i) c(i, i - 1) = 1.0;
  return c;
}

namespace {

double spectral_radius_of(const Eigen::MatrixXd& m) {
  if (m.rows() == 1) return std::abs(m(0, 0));
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eigenvalue computation failed during stability check");
  }
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

double mixture_spectral_radius(const TMarSpec& spec) {
  const std::size_t p = spec.max_order();
  if (p == 0) return 0.0;
  const std::size_t g = spec.components();
  const auto n = static_cast<Eigen::Index>(p * p);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t k = 0; k < g; ++k) {
    const Eigen::MatrixXd c = companion_matrix(spec, k);
    const double w = spec.weights()[k];
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
      for (Eigen::Index l = 0; l < c.cols(); ++l) {
        if (c(i, l) == 0.0) continue;
        a.block(i * c.rows(), l * c.cols(), c.rows(), c.cols()) += (w * c(i, l)) * c;
      }
    }
  }
  const double radius = spectral_radius_of(a);
  if (!std::isfinite(radius)) throw NumericalError("non-finite spectral radius");
  return radius;
}

bool is_stable(const TMarSpec& spec) {
  return mixture_spectral_radius(spec) < 1.0 - kStabilityMargin;
}

StabilityReport stability_check(const TMarSpec& spec) {
  StabilityReport report;
  const std::size_t g = spec.components();
  report.per_component_stable.assign(g, true);
  if (spec.max_order() == 0) return report;
  report.spectral_radius = mixture_spectral_radius(spec);
  report.stable = report.spectral_radius < 1.0 - kStabilityMargin;
  for (std::size_t k = 0; k < g; ++k) {
    report.per_component_stable[k] =
        spectral_radius_of(companion_matrix(spec, k)) < 1.0 - kStabilityMargin;
  }
  return report;
}

double component_location(const TMarSpec& spec, std::size_t k, std::span<const double> y,
                          std::size_t t) {
  double loc = spec.shift(k);
  const auto& phi = spec.ar(k);
  for (std::size_t i = 0; i < phi.size(); ++i) loc += phi[i] * y[t - 1 - i];
  return loc;
}

double log_conditional_density(const TMarSpec& spec, double y_t, std::span<const double> history) {
  require_history(spec, history.size());
  const MixtureTerms terms(spec);
  std::vector<double> parts(spec.components());
  for (std::size_t k = 0; k < spec.components(); ++k) {
    parts[k] = terms.term(k, y_t - location_from_history(spec, k, history));
  }
  return log_sum_exp(parts);
}

double conditional_density(const TMarSpec& spec, double y_t, std::span<const double> history) {
  return std::exp(log_conditional_density(spec, y_t, history));
}

std::pair<double, double> conditional_moments(const TMarSpec& spec,
                                              std::span<const double> history) {
  require_history(spec, history.size());
  double mean = 0.0;
  double second = 0.0;
  for (std::size_t k = 0; k < spec.components(); ++k) {
    const double w = spec.weights()[k];
    const double loc = location_from_history(spec, k, history);
    const double s = spec.scales()[k];
    mean += w * loc;
    second += w * (s * s + loc * loc);
  }
  return {mean, second - mean * mean};
}

double log_likelihood(const TMarSpec& spec, const SeriesWindow& window) {
  if (window.first < spec.max_order()) {
    throw UsageError("window starts before the model's maximum order");
  }
  const MixtureTerms terms(spec);
  const std::size_t g = spec.components();
  const auto y = window.values;
  std::vector<double> parts(g);
  double total = 0.0;
  for (std::size_t t = window.first; t < y.size(); ++t) {
    for (std::size_t k = 0; k < g; ++k) {
      parts[k] = terms.term(k, y[t] - component_location(spec, k, y, t));
    }
    total += log_sum_exp(parts);
  }
  return total;
}

std::vector<double> theoretical_acf(const TMarSpec& spec, std::size_t max_lag) {
  const std::size_t p = spec.max_order();
  std::vector<double> avg(p + 1, 0.0);  // avg[i] = sum_k pi_k phi_ki
  for (std::size_t k = 0; k < spec.components(); ++k) {
    for (std::size_t i = 1; i <= spec.order(k); ++i) avg[i] += spec.weights()[k] * spec.ar_at(k, i);
  }
  std::vector<double> rho(std::max(max_lag, p) + 1, 0.0);
  rho[0] = 1.0;
  if (p > 0) {
    // rho_h - sum_i avg_i rho_|h-i| = 0 for h = 1..p, unknowns rho_1..rho_p.
    const auto n = static_cast<Eigen::Index>(p);
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    for (std::size_t h = 1; h <= p; ++h) {
      for (std::size_t i = 1; i <= p; ++i) {
        const std::size_t lag = h > i ? h - i : i - h;
        if (lag == 0) {
          rhs(static_cast<Eigen::Index>(h - 1)) += avg[i];
        } else {
          m(static_cast<Eigen::Index>(h - 1), static_cast<Eigen::Index>(lag - 1)) -= avg[i];
        }
      }
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
    if (!lu.isInvertible()) throw NumericalError("autocorrelation system is singular");
    const Eigen::VectorXd solution = lu.solve(rhs);
    for (std::size_t h = 1; h <= p; ++h) rho[h] = solution(static_cast<Eigen::Index>(h - 1));
  }
  for (std::size_t h = p + 1; h < rho.size(); ++h) {
    double value = 0.0;
    for (std::size_t i = 1; i <= p; ++i) value += avg[i] * rho[h - i];
    rho[h] = value;
  }
  rho.resize(max_lag + 1);
  return rho;
}

SimulatedSeries simulate_series(const TMarSpec& spec, std::size_t n, std::size_t burnin, Rng& rng) {
  const std::size_t p = spec.max_order();
  if (n < p + 1) throw UsageError("series length must exceed the model order");
  const std::size_t discard = std::max(burnin, kMinSimulationBurnin);

  double innovation_var = 0.0;
  for (std::size_t k = 0; k < spec.components(); ++k) {
    innovation_var += spec.weights()[k] * spec.scales()[k] * spec.scales()[k];
  }
  std::vector<double> start(p);
  for (double& v : start) v = sample_normal(0.0, std::sqrt(innovation_var), rng);

  SimulatedSeries full = continue_series(spec, std::move(start), discard + n, rng);
  SimulatedSeries out;
  out.values.assign(full.values.end() - static_cast<std::ptrdiff_t>(n), full.values.end());
  const std::size_t keep = n - p;
  out.latents.allocations.assign(full.latents.allocations.end() - static_cast<std::ptrdiff_t>(keep),
                                 full.latents.allocations.end());
  out.latents.xis.assign(full.latents.xis.end() - static_cast<std::ptrdiff_t>(keep),
                         full.latents.xis.end());
  return out;
}

SimulatedSeries simulate_continuation(const TMarSpec& spec, std::span<const double> history,
                                      std::size_t count, Rng& rng) {
  require_history(spec, history.size());
  return continue_series(spec, std::vector<double>(history.begin(), history.end()), count, rng);
}

}  // namespace tmar
