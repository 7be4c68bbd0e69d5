#include "tmar/order_selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "tmar/errors.hpp"

namespace tmar {

std::size_t OrderState::total_visits() const {
  std::size_t total = 0;
  for (const auto& [orders, count] : visit_counts) total += count;
  return total;
}

double birth_probability(std::size_t order, std::size_t p_min, std::size_t p_max) {
  if (order >= p_max) return 0.0;
  if (order <= p_min) return 1.0;
  return 0.5;
}

OrderMove propose_order_move(const OrderState& state, Rng& rng) {
  const std::size_t g = state.orders.size();
  if (g == 0) throw UsageError("order state has no components");
  OrderMove move;
  std::uniform_int_distribution<std::size_t> pick(0, g - 1);
  move.component = pick(rng);
  const double b = birth_probability(state.orders[move.component], state.p_min, state.p_max);
  move.birth = sample_uniform(0.0, 1.0, rng) < b;
  if (move.birth) move.new_coefficient = sample_uniform(-kBirthHalfWidth, kBirthHalfWidth, rng);
  return move;
}

TMarSpec apply_order_move(const TMarSpec& spec, const OrderMove& move) {
  TMarSpec out = spec;
  std::vector<double> phi = spec.ar(move.component);
  if (move.birth) {
    phi.push_back(move.new_coefficient);
  } else {
    if (phi.empty()) throw UsageError("death move on a component of order 0");
    phi.pop_back();
  }
  out.set_ar(move.component, std::move(phi));
  return out;
}

double order_move_acceptance(const OrderMove& move, const TMarSpec& current,
                             const SeriesWindow& window, std::size_t p_min, std::size_t p_max) {
  const std::size_t p = current.order(move.component);
  if (move.birth && p >= p_max) return 0.0;
  if (!move.birth && p <= p_min) return 0.0;
  const TMarSpec candidate = apply_order_move(current, move);
  if (window.first < candidate.max_order() || !is_stable(candidate)) return 0.0;

  const double log_ratio = log_likelihood(candidate, window) - log_likelihood(current, window);
  const double density = 1.0 / (2.0 * kBirthHalfWidth);
  double log_proposal;
  if (move.birth) {
    const double b = birth_probability(p, p_min, p_max);
    const double d_next = 1.0 - birth_probability(p + 1, p_min, p_max);
    log_proposal = std::log(d_next / b) - std::log(density);
  } else {
    const double d = 1.0 - birth_probability(p, p_min, p_max);
    const double b_prev = birth_probability(p - 1, p_min, p_max);
    log_proposal = std::log(b_prev / d) + std::log(density);
  }
  const double log_alpha = log_ratio + log_proposal;
  if (std::isnan(log_alpha)) return 0.0;
  return log_alpha >= 0.0 ? 1.0 : std::exp(log_alpha);
}

double visit_share(const OrderState& state, const OrderTuple& orders) {
  const std::size_t total = state.total_visits();
  const auto it = state.visit_counts.find(orders);
  if (total == 0 || it == state.visit_counts.end()) return 0.0;
  return static_cast<double>(it->second) / static_cast<double>(total);
}

OrderTuple canonical_orders(OrderTuple orders) {
  std::sort(orders.begin(), orders.end(), std::greater<>());
  return orders;
}

std::size_t order_multiplicity(const OrderTuple& orders) {
  OrderTuple sorted = canonical_orders(orders);
  std::size_t count = 0;
  do {
    ++count;
  } while (std::prev_permutation(sorted.begin(), sorted.end()));
  return count;
}

std::map<OrderTuple, std::size_t> class_visit_counts(const OrderState& state) {
  std::map<OrderTuple, std::size_t> classes;
  for (const auto& [orders, count] : state.visit_counts) classes[canonical_orders(orders)] += count;
  return classes;
}

double class_visit_share(const OrderState& state, const OrderTuple& orders) {
  const std::size_t total = state.total_visits();
  if (total == 0) return 0.0;
  const auto classes = class_visit_counts(state);
  const auto it = classes.find(canonical_orders(orders));
  if (it == classes.end()) return 0.0;
  return static_cast<double>(it->second) / static_cast<double>(total);
}

OrderTuple preferred_orders(const OrderState& state) {
  if (state.visit_counts.empty()) return canonical_orders(state.orders);
  const auto classes = class_visit_counts(state);
  auto total_order = [](const OrderTuple& t) { return std::accumulate(t.begin(), t.end(), std::size_t{0}); };
  const auto best = std::max_element(
      classes.begin(), classes.end(), [&](const auto& lhs, const auto& rhs) {
        if (lhs.second != rhs.second) return lhs.second < rhs.second;
        const auto tl = total_order(lhs.first);
        const auto tr = total_order(rhs.first);
        if (tl != tr) return tl > tr;
        return lhs.first > rhs.first;
      });
  return best->first;
}

OrderSelectionResult run_order_selection(const SeriesWindow& window, SamplerState start,
                                         const PriorConfig& priors,
                                         const OrderSelectionSettings& settings,
                                         const UpdatePlan& plan, Rng& rng) {
  const std::size_t g = start.spec.components();
  priors.validate(g);
  if (settings.p_max < 1) throw UsageError("p_max must be at least 1");
  if (window.first < settings.p_max) {
    throw UsageError("order selection needs the window to start at p_max");
  }
  for (std::size_t k = 0; k < g; ++k) {
    if (start.spec.order(k) < 1 || start.spec.order(k) > settings.p_max) {
      throw UsageError("starting orders must lie in [1, p_max]");
    }
  }
  std::vector<double> gamma = settings.gamma;
  if (gamma.empty()) gamma.assign(g, 0.01);
  if (gamma.size() != g) throw UsageError("gamma needs one value per component");

  OrderState orders;
  orders.p_max = settings.p_max;
  orders.p_min = 1;
  orders.orders = start.spec.orders();

  OrderSelectionResult result{orders, {}, 0.0, 0, 0, {}, std::move(start)};
  SamplerState& state = result.final_state;
  OrderState& tracked = result.state;
  SweepCounters counters(g);
  std::size_t sweep_index = 0;
  const std::size_t total = settings.burnin + settings.iterations;
  for (std::size_t it = 0; it < total; ++it) {
    const bool burning = it < settings.burnin;
    const OrderMove move = propose_order_move(tracked, rng);
    const double alpha = order_move_acceptance(move, state.spec, window, tracked.p_min, tracked.p_max);
    ++result.attempted_moves;
    if (alpha > 0.0 && sample_uniform(0.0, 1.0, rng) < alpha) {
      state.spec = apply_order_move(state.spec, move);
      tracked.orders = state.spec.orders();
      ++result.accepted_moves;
    }
    // The move targets the latent-marginalized posterior, so the latents are
    // redrawn from their exact conditional before the augmented sweeps resume.
    refresh_latents(state, window, rng);
    for (std::size_t s = 0; s < settings.sweeps_per_move; ++s, ++sweep_index) {
      std::vector<std::size_t> before(g);
      std::vector<std::size_t> attempted(g);
      for (std::size_t k = 0; k < g; ++k) {
        before[k] = counters.ar[k].accepted;
        attempted[k] = counters.ar[k].attempted;
      }
      try {
        gibbs_sweep(state, window, priors, plan, gamma, counters, rng);
      } catch (const NumericalError& e) {
        throw NumericalError("order-selection move " + std::to_string(it) + ": " + e.what());
      }
      if (burning) {
        for (std::size_t k = 0; k < g; ++k) {
          if (counters.ar[k].attempted == attempted[k]) continue;
          gamma[k] = adapt_gamma(gamma[k], counters.ar[k].accepted > before[k], sweep_index,
                                 settings.target_acceptance);
        }
      }
    }
    if (!burning) ++tracked.visit_counts[tracked.orders];
  }
  result.gamma = gamma;
  result.preferred = preferred_orders(tracked);
  result.preferred_share = class_visit_share(tracked, result.preferred);
  return result;
}

OrderSelectionResult run_order_selection(const SeriesWindow& window, std::size_t g,
                                         const PriorConfig& priors,
                                         const OrderSelectionSettings& settings) {
  Rng rng(settings.seed);
  const OrderTuple start_orders(g, 1);
  SamplerState start = initial_state(window, start_orders, priors, rng);
  return run_order_selection(window, std::move(start), priors, settings, UpdatePlan::all(g), rng);
}

}  // namespace tmar
