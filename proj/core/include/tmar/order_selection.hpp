#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "tmar/sampler.hpp"

namespace tmar {

using OrderTuple = std::vector<std::size_t>;

/// Birth/death move on the autoregressive order of one component. The new
/// coefficient of a birth move is drawn from U(-1.5, 1.5).
struct OrderMove {
  std::size_t component = 0;
  bool birth = true;
  double new_coefficient = 0.0;
};

struct OrderState {
  OrderTuple orders;
  std::map<OrderTuple, std::size_t> visit_counts;
  std::size_t p_max = 1;
  std::size_t p_min = 1;

  std::size_t total_visits() const;
};

inline constexpr double kBirthHalfWidth = 1.5;

/// b(p): 1 at p_min, 0 at p_max, 1/2 in between. d(p) = 1 - b(p).
double birth_probability(std::size_t order, std::size_t p_min, std::size_t p_max);

OrderMove propose_order_move(const OrderState& state, Rng& rng);

/// Spec with the move applied; means, scales, dofs and weights are unchanged.
TMarSpec apply_order_move(const TMarSpec& spec, const OrderMove& move);

/// Acceptance probability of `move` from `current` using the
/// latent-marginalized likelihood over `window`. Zero if the candidate is unstable.
double order_move_acceptance(const OrderMove& move, const TMarSpec& current,
                             const SeriesWindow& window, std::size_t p_min, std::size_t p_max);

struct OrderSelectionSettings {
  std::size_t iterations = 10000;     // counted RJ moves
  std::size_t burnin = 1000;          // RJ moves before counting starts (gamma adapts here)
  std::size_t sweeps_per_move = 5;    // within-model sweeps between moves
  std::size_t p_max = 4;
  std::uint64_t seed = 0;
  std::vector<double> gamma;
  double target_acceptance = 0.25;
};

struct OrderSelectionResult {
  OrderState state;
  OrderTuple preferred;          // class representative
  double preferred_share = 0.0;  // class visit share
  std::size_t accepted_moves = 0;
  std::size_t attempted_moves = 0;
  std::vector<double> gamma;
  SamplerState final_state;
};

/// Visit share of `orders`; 0 when never visited.
double visit_share(const OrderState& state, const OrderTuple& orders);

/// Component labels are exchangeable, so tuples that differ only by a
/// permutation describe the same model. The class representative is the
/// tuple sorted in decreasing order.
OrderTuple canonical_orders(OrderTuple orders);
/// Number of distinct labelled tuples in the class of `orders`.
std::size_t order_multiplicity(const OrderTuple& orders);
/// Visits summed over the class of each tuple, keyed by representative.
std::map<OrderTuple, std::size_t> class_visit_counts(const OrderState& state);
double class_visit_share(const OrderState& state, const OrderTuple& orders);

/// Representative of the most visited class; ties go to the smaller total
/// order, then lexicographic.
OrderTuple preferred_orders(const OrderState& state);

/// Reversible-jump run over per-component orders for fixed g. The window
/// must start at p_max so every candidate model sees the same observations.
OrderSelectionResult run_order_selection(const SeriesWindow& window, std::size_t g,
                                         const PriorConfig& priors,
                                         const OrderSelectionSettings& settings);

/// Same, from an explicit start state and with some parameter blocks frozen.
OrderSelectionResult run_order_selection(const SeriesWindow& window, SamplerState start,
                                         const PriorConfig& priors,
                                         const OrderSelectionSettings& settings,
                                         const UpdatePlan& plan, Rng& rng);

}  // namespace tmar
