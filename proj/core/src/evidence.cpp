#include "tmar/evidence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "tmar/errors.hpp"

namespace tmar {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

UpdatePlan effective_base(const EvidenceSettings& settings, std::size_t g) {
  UpdatePlan plan = settings.base_plan.value_or(UpdatePlan::all(g));
  if (plan.ar.size() != g || plan.dofs.size() != g) {
    throw UsageError("evidence base plan has the wrong number of components");
  }
  return plan;
}

std::vector<double> effective_gamma(const EvidenceSettings& settings, std::size_t g) {
  std::vector<double> gamma = settings.gamma;
  if (gamma.empty()) gamma.assign(g, 0.01);
  if (gamma.size() != g) throw UsageError("evidence gamma needs one value per component");
  return gamma;
}

// Fixed blocks must sit exactly at the anchor for every sweep of a reduced run.
void check_nesting(const SamplerState& state, const TMarSpec& anchor, const UpdatePlan& plan) {
  const TMarSpec& s = state.spec;
  bool ok = true;
  for (std::size_t k = 0; k < anchor.components(); ++k) {
    if (!plan.ar[k] && s.ar(k) != anchor.ar(k)) ok = false;
    if (!plan.dofs[k] && s.dofs()[k] != anchor.dofs()[k]) ok = false;
    if (!plan.means && s.means()[k] != anchor.means()[k]) ok = false;
    if (!plan.precisions && s.scales()[k] != anchor.scales()[k]) ok = false;
  }
  if (!plan.weights && s.weights() != anchor.weights()) ok = false;
  if (!ok) throw std::logic_error("reduced run moved a block that is held at the anchor");
}

// Runs `burnin + length` sweeps from the anchor and calls on_draw after each kept sweep.
template <class OnDraw>
void run_reduced_chain(const SeriesWindow& window, const TMarSpec& anchor,
                       const PriorConfig& priors, const UpdatePlan& plan,
                       std::span<const double> gamma, std::size_t length, std::size_t burnin,
                       Rng& rng, OnDraw&& on_draw) {
  SamplerState state{anchor, 1.0, {}};
  update_lambda(state, priors, rng);
  refresh_latents(state, window, rng);
  SweepCounters counters(anchor.components());
  for (std::size_t i = 0; i < burnin + length; ++i) {
    gibbs_sweep(state, window, priors, plan, gamma, counters, rng);
    check_nesting(state, anchor, plan);
    if (i >= burnin) on_draw(state);
  }
}

double log_mean_exp(const std::vector<double>& values) {
  if (values.empty()) return kNegInf;
  return log_sum_exp(values) - std::log(static_cast<double>(values.size()));
}

double log_rw_density(std::span<const double> from, std::span<const double> to, double gamma) {
  double total = 0.0;
  for (std::size_t i = 0; i < from.size(); ++i) total += log_pdf_normal(to[i], from[i], gamma);
  return total;
}

UpdatePlan hold(UpdatePlan plan, Block block, std::size_t upto) {
  switch (block) {
    case Block::kAr:
      for (std::size_t k = 0; k < upto; ++k) plan.ar[k] = false;
      break;
    case Block::kDofs:
      for (std::size_t k = 0; k < upto; ++k) plan.dofs[k] = false;
      break;
    case Block::kMeans:
      plan.means = false;
      break;
    case Block::kPrecisions:
      plan.precisions = false;
      break;
    case Block::kWeights:
      plan.weights = false;
      break;
  }
  return plan;
}

UpdatePlan hold_all_ar(UpdatePlan plan) {
  std::fill(plan.ar.begin(), plan.ar.end(), false);
  return plan;
}

UpdatePlan hold_all_dofs(UpdatePlan plan) {
  std::fill(plan.dofs.begin(), plan.dofs.end(), false);
  return plan;
}

// Repeats a denominator run once with twice the length when every acceptance was zero.
template <class RunDenominator>
double denominator_with_retry(std::size_t length, RunDenominator&& run, const std::string& what) {
  double value = run(length);
  if (std::isfinite(value)) return value;
  value = run(2 * length);
  if (std::isfinite(value)) return value;
  throw NumericalError("zero denominator in the " + what + " ordinate");
}

}  // namespace

double log_prior_density(const TMarSpec& point, const PriorConfig& priors) {
  const std::size_t g = point.components();
  priors.validate(g);
  if (!is_stable(point)) return kNegInf;
  double total = log_pdf_dirichlet(point.weights(), priors.dirichlet_weights);
  if (!priors.fix_means_to_zero) {
    for (std::size_t k = 0; k < g; ++k) {
      total += log_pdf_normal(point.mean(k), priors.zeta, 1.0 / priors.kappa);
    }
  }
  // Precisions with lambda ~ Ga(a, b) integrated out.
  const double gc = priors.c * static_cast<double>(g);
  double tau_sum = 0.0;
  for (std::size_t k = 0; k < g; ++k) {
    const double tau = point.precision(k);
    tau_sum += tau;
    total += (priors.c - 1.0) * std::log(tau) - std::lgamma(priors.c);
  }
  total += priors.a * std::log(priors.b) - std::lgamma(priors.a) + std::lgamma(priors.a + gc) -
           (priors.a + gc) * std::log(priors.b + tau_sum);
  for (std::size_t k = 0; k < g; ++k) {
    total += log_pdf_truncated_gamma(point.dofs()[k], priors.nu_prior(k));
  }
  return total;
}

TMarSpec select_anchor(const ChainTrace& trace, const SeriesWindow& window,
                       const PriorConfig& priors) {
  if (trace.draws.empty()) throw UsageError("cannot select an anchor from an empty trace");
  std::size_t best = 0;
  double best_value = kNegInf;
  for (std::size_t i = 0; i < trace.draws.size(); ++i) {
    const TMarSpec& draw = trace.draws[i];
    const double value = log_likelihood(draw, window) + log_prior_density(draw, priors);
    if (value > best_value) {
      best_value = value;
      best = i;
    }
  }
  return trace.draws[best];
}

double estimate_phi_block(const SeriesWindow& window, const TMarSpec& anchor,
                          const PriorConfig& priors, const EvidenceSettings& settings, Rng& rng) {
  const std::size_t g = anchor.components();
  const UpdatePlan base = effective_base(settings, g);
  const std::vector<double> gamma = effective_gamma(settings, g);
  double total = 0.0;
  for (std::size_t k = 0; k < g; ++k) {
    if (!base.ar[k] || anchor.order(k) == 0) continue;
    const auto& target = anchor.ar(k);

    // Numerator: phi_k free, components before k held at the anchor.
    std::vector<double> num;
    num.reserve(settings.reduced_length);
    run_reduced_chain(window, anchor, priors, hold(base, Block::kAr, k), gamma,
                      settings.reduced_length, settings.reduced_burnin, rng,
                      [&](const SamplerState& s) {
                        const double log_alpha = ar_log_acceptance(s, window, k, target);
                        num.push_back(log_alpha + log_rw_density(s.spec.ar(k), target, gamma[k]));
                      });

    // Denominator: phi_k held at the anchor, proposals drawn around it.
    auto run_denominator = [&](std::size_t length) {
      std::vector<double> den;
      den.reserve(length);
      std::vector<double> candidate(target.size());
      run_reduced_chain(window, anchor, priors, hold(base, Block::kAr, k + 1), gamma, length,
                        settings.reduced_burnin, rng, [&](const SamplerState& s) {
                          for (std::size_t i = 0; i < target.size(); ++i) {
                            candidate[i] = target[i] + sample_normal(0.0, std::sqrt(gamma[k]), rng);
                          }
                          den.push_back(ar_log_acceptance(s, window, k, candidate));
                        });
      return log_mean_exp(den);
    };
    const double log_den = denominator_with_retry(settings.reduced_length, run_denominator,
                                                  "autoregressive component " + std::to_string(k + 1));
    total += log_mean_exp(num) - log_den;
  }
  return total;
}

double estimate_nu_block(const SeriesWindow& window, const TMarSpec& anchor,
                         const PriorConfig& priors, const EvidenceSettings& settings, Rng& rng) {
  const std::size_t g = anchor.components();
  const UpdatePlan base = hold_all_ar(effective_base(settings, g));
  const UpdatePlan declared = effective_base(settings, g);
  const std::vector<double> gamma = effective_gamma(settings, g);
  double total = 0.0;
  for (std::size_t k = 0; k < g; ++k) {
    if (!declared.dofs[k]) continue;
    const double target = anchor.dofs()[k];
    const TruncatedGamma prior = priors.nu_prior(k);
    const double log_q = log_pdf_truncated_gamma(target, prior);

    std::vector<double> num;
    num.reserve(settings.reduced_length);
    run_reduced_chain(window, anchor, priors, hold(base, Block::kDofs, k), gamma,
                      settings.reduced_length, settings.reduced_burnin, rng,
                      [&](const SamplerState& s) {
                        const auto stats = component_statistics(s, window);
                        const double current = s.spec.dofs()[k];
                        const double log_alpha = std::min(
                            0.0, dof_log_likelihood(stats[k], target) -
                                     dof_log_likelihood(stats[k], current));
                        num.push_back(log_alpha + log_q);
                      });

    auto run_denominator = [&](std::size_t length) {
      std::vector<double> den;
      den.reserve(length);
      run_reduced_chain(window, anchor, priors, hold(base, Block::kDofs, k + 1), gamma, length,
                        settings.reduced_burnin, rng, [&](const SamplerState& s) {
                          const auto stats = component_statistics(s, window);
                          const double candidate = sample_truncated_gamma(prior, rng);
                          den.push_back(std::min(0.0, dof_log_likelihood(stats[k], candidate) -
                                                          dof_log_likelihood(stats[k], target)));
                        });
      return log_mean_exp(den);
    };
    const double log_den = denominator_with_retry(settings.reduced_length, run_denominator,
                                                  "degrees-of-freedom component " + std::to_string(k + 1));
    total += log_mean_exp(num) - log_den;
  }
  return total;
}

double log_means_conditional(const SamplerState& state, const SeriesWindow& window,
                             const PriorConfig& priors, const TMarSpec& anchor) {
  const auto stats = component_statistics(state, window);
  double total = 0.0;
  for (std::size_t k = 0; k < anchor.components(); ++k) {
    const auto& s = stats[k];
    const double tau = state.spec.precision(k);
    const double precision = tau * s.gap * s.gap * s.xi_sum + priors.kappa;
    const double mean =
        (tau * s.gap * (s.raw_mean * s.xi_sum + s.centered_weighted) + priors.kappa * priors.zeta) /
        precision;
    total += log_pdf_normal(anchor.mean(k), mean, 1.0 / precision);
  }
  return total;
}

double log_precisions_conditional(const SamplerState& state, const SeriesWindow& window,
                                  const PriorConfig& priors, const TMarSpec& anchor) {
  const auto stats = component_statistics(state, window);
  double total = 0.0;
  for (std::size_t k = 0; k < anchor.components(); ++k) {
    const auto& s = stats[k];
    total += log_pdf_gamma(anchor.precision(k), static_cast<double>(s.count) / 2.0 + priors.c,
                           0.5 * s.weighted_square + state.lambda);
  }
  return total;
}

double log_weights_conditional(std::span<const std::size_t> counts, const PriorConfig& priors,
                               const TMarSpec& anchor) {
  std::vector<double> alpha(priors.dirichlet_weights.begin(), priors.dirichlet_weights.end());
  for (std::size_t k = 0; k < counts.size(); ++k) alpha[k] += static_cast<double>(counts[k]);
  return log_pdf_dirichlet(anchor.weights(), alpha);
}

ConjugateOrdinates estimate_conjugate_blocks(const SeriesWindow& window, const TMarSpec& anchor,
                                             const PriorConfig& priors,
                                             const EvidenceSettings& settings, Rng& rng) {
  const std::size_t g = anchor.components();
  const UpdatePlan declared = effective_base(settings, g);
  const UpdatePlan after_nu = hold_all_dofs(hold_all_ar(declared));
  const std::vector<double> gamma = effective_gamma(settings, g);
  ConjugateOrdinates out;

  const bool means_free = declared.means && !priors.fix_means_to_zero;
  if (means_free) {
    std::vector<double> values;
    values.reserve(settings.reduced_length);
    run_reduced_chain(window, anchor, priors, after_nu, gamma, settings.reduced_length,
                      settings.reduced_burnin, rng, [&](const SamplerState& s) {
                        values.push_back(log_means_conditional(s, window, priors, anchor));
                      });
    out.means = log_mean_exp(values);
  }
  const UpdatePlan after_mu = hold(after_nu, Block::kMeans, g);

  if (declared.precisions) {
    std::vector<double> values;
    values.reserve(settings.reduced_length);
    run_reduced_chain(window, anchor, priors, after_mu, gamma, settings.reduced_length,
                      settings.reduced_burnin, rng, [&](const SamplerState& s) {
                        values.push_back(log_precisions_conditional(s, window, priors, anchor));
                      });
    out.precisions = log_mean_exp(values);
  }
  const UpdatePlan after_tau = hold(after_mu, Block::kPrecisions, g);

  if (declared.weights && g > 1) {
    std::vector<double> num;
    num.reserve(settings.reduced_length);
    std::vector<std::size_t> counts(g);
    auto count_allocations = [&](const SamplerState& s) {
      std::fill(counts.begin(), counts.end(), 0);
      for (std::size_t z : s.latent.allocations) ++counts[z];
    };
    run_reduced_chain(window, anchor, priors, after_tau, gamma, settings.reduced_length,
                      settings.reduced_burnin, rng, [&](const SamplerState& s) {
                        count_allocations(s);
                        num.push_back(log_weights_conditional(counts, priors, anchor));
                      });
    out.weights = log_mean_exp(num);

    // Probability that a Dirichlet(w + n) proposal keeps the mixture stable.
    // It is one whenever every component is stable on its own.
    const auto report = stability_check(anchor);
    const bool always_stable = std::all_of(report.per_component_stable.begin(),
                                           report.per_component_stable.end(),
                                           [](bool b) { return b; });
    if (!always_stable) {
      auto run_denominator = [&](std::size_t length) {
        std::vector<double> den;
        den.reserve(length);
        std::vector<double> alpha(g);
        run_reduced_chain(window, anchor, priors, hold(after_tau, Block::kWeights, g), gamma,
                          length, settings.reduced_burnin, rng, [&](const SamplerState& s) {
                            count_allocations(s);
                            for (std::size_t k = 0; k < g; ++k) {
                              alpha[k] = priors.dirichlet_weights[k] + static_cast<double>(counts[k]);
                            }
                            TMarSpec proposal = s.spec;
                            proposal.set_weights(sample_dirichlet(alpha, rng));
                            den.push_back(is_stable(proposal) ? 0.0 : kNegInf);
                          });
        return log_mean_exp(den);
      };
      out.weights -= denominator_with_retry(settings.reduced_length, run_denominator, "weights");
    }
  }
  return out;
}

EvidenceReport assemble_marginal_log_likelihood(const SeriesWindow& window,
                                                const OrderEvidence& orders,
                                                const TMarSpec& anchor, const PriorConfig& priors,
                                                const EvidenceSettings& settings, Rng& rng) {
  EvidenceReport report;
  report.g = anchor.components();
  report.selected_orders = orders.orders;
  report.log_label_permutations = std::lgamma(static_cast<double>(report.g) + 1.0);
  try {
    if (anchor.orders() != orders.orders) {
      throw UsageError("anchor orders do not match the selected orders");
    }
    if (window.first < anchor.max_order()) throw UsageError("window starts before the model order");
    const double log_lik = log_likelihood(anchor, window);
    const double log_prior = log_prior_density(anchor, priors);
    if (!std::isfinite(log_lik) || !std::isfinite(log_prior)) {
      throw NumericalError("anchor has zero likelihood or prior density");
    }
    std::array<double, 5> blocks{};
    blocks[static_cast<std::size_t>(Block::kAr)] = estimate_phi_block(window, anchor, priors, settings, rng);
    blocks[static_cast<std::size_t>(Block::kDofs)] = estimate_nu_block(window, anchor, priors, settings, rng);
    const ConjugateOrdinates conj = estimate_conjugate_blocks(window, anchor, priors, settings, rng);
    blocks[static_cast<std::size_t>(Block::kMeans)] = conj.means;
    blocks[static_cast<std::size_t>(Block::kPrecisions)] = conj.precisions;
    blocks[static_cast<std::size_t>(Block::kWeights)] = conj.weights;
    for (double b : blocks) {
      if (!std::isfinite(b)) throw NumericalError("a posterior ordinate is not finite");
    }
    if (!std::isfinite(orders.log_order_posterior) || !std::isfinite(orders.log_order_prior)) {
      throw NumericalError("order prior or posterior is zero");
    }
    report.anchor = anchor;
    report.log_likelihood_at_anchor = log_lik;
    report.log_prior_at_anchor = log_prior;
    report.log_order_prior = orders.log_order_prior;
    report.log_order_posterior = orders.log_order_posterior;
    report.block_log_densities = blocks;
    double block_sum = 0.0;
    for (double b : blocks) block_sum += b;
    report.marginal_log_likelihood =
        log_lik + log_prior + orders.log_order_prior - block_sum - orders.log_order_posterior;
    report.valid = true;
  } catch (const Error& e) {
    EvidenceReport failed;
    failed.g = report.g;
    failed.selected_orders = orders.orders;
    failed.log_label_permutations = report.log_label_permutations;
    failed.failure = e.what();
    return failed;
  }
  return report;
}

EvidencePipelineResult run_evidence_pipeline(const SeriesWindow& window, std::size_t g,
                                             const PriorConfig& priors,
                                             const EvidencePipelineSettings& settings) {
  Rng rng(settings.seed);
  EvidencePipelineResult result;
  OrderEvidence orders;
  if (settings.fixed_orders) {
    orders.orders = *settings.fixed_orders;
    if (orders.orders.size() != g) throw UsageError("fixed orders must list one order per component");
  } else {
    SamplerState start = initial_state(window, OrderTuple(g, 1), priors, rng);
    OrderSelectionResult selection = run_order_selection(window, std::move(start), priors,
                                                         settings.selection, UpdatePlan::all(g), rng);
    orders.orders = selection.preferred;
    orders.log_order_prior =
        -static_cast<double>(g) * std::log(static_cast<double>(settings.selection.p_max));
    // Symmetric posterior over labellings: each tuple in the class gets an equal share.
    orders.log_order_posterior =
        std::log(selection.preferred_share / static_cast<double>(order_multiplicity(orders.orders)));
    result.selection = std::move(selection);
  }

  SamplerState start = initial_state(window, orders.orders, priors, rng);
  GibbsSettings chain_settings = settings.chain;
  if (chain_settings.gamma.empty() && result.selection) chain_settings.gamma = result.selection->gamma;
  result.chain = run_gibbs(window, std::move(start), priors, chain_settings, UpdatePlan::all(g), rng);

  const TMarSpec anchor = select_anchor(result.chain, window, priors);
  EvidenceSettings evidence = settings.evidence;
  if (evidence.gamma.empty()) evidence.gamma = result.chain.gamma;
  result.report = assemble_marginal_log_likelihood(window, orders, anchor, priors, evidence, rng);
  return result;
}

}  // namespace tmar
