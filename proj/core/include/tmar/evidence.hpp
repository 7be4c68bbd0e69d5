#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tmar/order_selection.hpp"
#include "tmar/sampler.hpp"

namespace tmar {

/// Settings shared by the reduced runs of the marginal likelihood estimator.
struct EvidenceSettings {
  std::size_t reduced_length = 10000;  // draws kept per reduced run (N_j = N_i)
  std::size_t reduced_burnin = 500;
  std::vector<double> gamma;           // RW variances of the phi proposal, one per component
  /// Blocks that are parameters of the model; a block switched off here is
  /// treated as known and contributes nothing to the posterior ordinate.
  std::optional<UpdatePlan> base_plan;
};

enum class Block : std::size_t { kAr = 0, kDofs = 1, kMeans = 2, kPrecisions = 3, kWeights = 4 };

struct EvidenceReport {
  std::size_t g = 0;
  OrderTuple selected_orders;
  std::optional<TMarSpec> anchor;
  double log_likelihood_at_anchor = 0.0;
  double log_prior_at_anchor = 0.0;
  double log_order_prior = 0.0;
  double log_order_posterior = 0.0;
  /// Posterior ordinates in the order phi, nu, mu, tau, pi.
  std::array<double, 5> block_log_densities{};
  double marginal_log_likelihood = 0.0;
  /// log(g!), reported for users who want the label-symmetric version.
  double log_label_permutations = 0.0;
  bool valid = false;
  std::string failure;

  double block(Block b) const { return block_log_densities[static_cast<std::size_t>(b)]; }
};

/// Log prior density at `point`: Dirichlet weights, normal means, precisions
/// with lambda integrated out, truncated-gamma dofs, flat (density one)
/// autoregressive coefficients on the stability region.
double log_prior_density(const TMarSpec& point, const PriorConfig& priors);

/// Draw of the trace with the largest log likelihood + log prior.
/// Deterministic; throws UsageError for an empty trace.
TMarSpec select_anchor(const ChainTrace& trace, const SeriesWindow& window,
                       const PriorConfig& priors);

/// Sum over components of log p(phi*_k | phi*_1..k-1, y) via the
/// Metropolis-Hastings ordinate (numerator and denominator reduced runs).
double estimate_phi_block(const SeriesWindow& window, const TMarSpec& anchor,
                          const PriorConfig& priors, const EvidenceSettings& settings, Rng& rng);

/// Sum over components of log p(nu*_k | phi*, nu*_1..k-1, y) for the
/// independence sampler; the proposal density is the prior density at nu*_k.
double estimate_nu_block(const SeriesWindow& window, const TMarSpec& anchor,
                         const PriorConfig& priors, const EvidenceSettings& settings, Rng& rng);

struct ConjugateOrdinates {
  double means = 0.0;
  double precisions = 0.0;
  double weights = 0.0;
};

/// Rao-Blackwellized ordinates of mu*, tau* and pi*, each run holding the
/// previously anchored blocks fixed.
ConjugateOrdinates estimate_conjugate_blocks(const SeriesWindow& window, const TMarSpec& anchor,
                                             const PriorConfig& priors,
                                             const EvidenceSettings& settings, Rng& rng);

/// log of the exact full conditional densities used by the averages above.
double log_means_conditional(const SamplerState& state, const SeriesWindow& window,
                             const PriorConfig& priors, const TMarSpec& anchor);
double log_precisions_conditional(const SamplerState& state, const SeriesWindow& window,
                                  const PriorConfig& priors, const TMarSpec& anchor);
double log_weights_conditional(std::span<const std::size_t> counts, const PriorConfig& priors,
                               const TMarSpec& anchor);

/// Where the order terms come from.
struct OrderEvidence {
  OrderTuple orders;
  double log_order_prior = 0.0;      // 0 when the orders are fixed by the user
  double log_order_posterior = 0.0;  // log visit share of `orders`
};

/// Assembles log f(y | g) = log f(y | theta*) + log p(theta*) + log p(p*)
///                          - sum of block ordinates - log p(p* | y).
/// Any failure yields an invalid report with no partial numbers.
EvidenceReport assemble_marginal_log_likelihood(const SeriesWindow& window,
                                                const OrderEvidence& orders,
                                                const TMarSpec& anchor, const PriorConfig& priors,
                                                const EvidenceSettings& settings, Rng& rng);

struct EvidencePipelineSettings {
  std::uint64_t seed = 0;
  /// If set, orders are taken as given and no order selection runs.
  std::optional<OrderTuple> fixed_orders;
  OrderSelectionSettings selection;
  GibbsSettings chain;
  EvidenceSettings evidence;
};

struct EvidencePipelineResult {
  EvidenceReport report;
  std::optional<OrderSelectionResult> selection;
  ChainTrace chain;
};

/// Order selection (unless fixed), a main chain at the selected orders,
/// anchor selection and the reduced runs.
EvidencePipelineResult run_evidence_pipeline(const SeriesWindow& window, std::size_t g,
                                             const PriorConfig& priors,
                                             const EvidencePipelineSettings& settings);

}  // namespace tmar
