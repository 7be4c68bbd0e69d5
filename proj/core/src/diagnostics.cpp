#include "tmar/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tmar/errors.hpp"

namespace tmar {

namespace {

constexpr std::size_t kMinDraws = 100;

double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

}  // namespace

std::pair<double, double> hdi(std::span<const double> draws, double mass) {
  if (draws.size() < kMinDraws) throw UsageError("hdi needs at least 100 draws");
  if (!(mass > 0.0 && mass <= 1.0)) throw UsageError("hdi mass must lie in (0, 1]");
  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const auto keep = std::min<std::size_t>(
      n, static_cast<std::size_t>(std::ceil(mass * static_cast<double>(n) - 1e-9)));
  const std::size_t span = std::max<std::size_t>(keep, 1) - 1;
  std::size_t best = 0;
  double best_width = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + span < n; ++i) {
    const double width = sorted[i + span] - sorted[i];
    if (width < best_width) {
      best_width = width;
      best = i;
    }
  }
  return {sorted[best], sorted[best + span]};
}

double effective_sample_size(std::span<const double> draws) {
  const std::size_t n = draws.size();
  if (n < 2) return static_cast<double>(n);
  const double m = mean_of(draws);
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) s += (draws[t] - m) * (draws[t + lag] - m);
    return s / static_cast<double>(n);
  };
  const double c0 = autocov(0);
  if (!(c0 > 0.0)) return 0.0;

  // Sum of consecutive autocorrelation pairs while they stay positive,
  // forced to be non-increasing.
  double sum = 0.0;
  double previous_pair = std::numeric_limits<double>::infinity();
  for (std::size_t lag = 0; lag + 1 < n; lag += 2) {
    double pair = (autocov(lag) + autocov(lag + 1)) / c0;
    if (pair <= 0.0) break;
    pair = std::min(pair, previous_pair);
    sum += pair;
    previous_pair = pair;
  }
  const double tau = std::max(2.0 * sum - 1.0, 1.0 / static_cast<double>(n));
  return std::min(static_cast<double>(n), static_cast<double>(n) / tau);
}

std::size_t ParameterTable::find(const std::string& name) const {
  return static_cast<std::size_t>(std::find(names.begin(), names.end(), name) - names.begin());
}

ParameterTable flatten_trace(const ChainTrace& trace) {
  ParameterTable table;
  if (trace.draws.empty()) return table;
  const TMarSpec& head = trace.draws.front();
  const std::size_t g = head.components();
  const auto orders = head.orders();
  auto label = [](const char* stem, std::size_t k) { return std::string(stem) + "_" + std::to_string(k + 1); };
  for (std::size_t k = 0; k < g; ++k) table.names.push_back(label("pi", k));
  for (std::size_t k = 0; k < g; ++k) table.names.push_back(label("mu", k));
  for (std::size_t k = 0; k < g; ++k) table.names.push_back(label("sigma", k));
  for (std::size_t k = 0; k < g; ++k) {
    for (std::size_t i = 0; i < orders[k]; ++i) {
      table.names.push_back(label("phi", k) + "_" + std::to_string(i + 1));
    }
  }
  for (std::size_t k = 0; k < g; ++k) table.names.push_back(label("nu", k));
  const bool with_lambda = trace.lambdas.size() == trace.draws.size();
  if (with_lambda) table.names.push_back("lambda");

  table.columns.assign(table.names.size(), {});
  for (auto& c : table.columns) c.reserve(trace.draws.size());
  for (std::size_t i = 0; i < trace.draws.size(); ++i) {
    const TMarSpec& d = trace.draws[i];
    if (d.orders() != orders) throw UsageError("trace orders change between draws");
    std::size_t col = 0;
    for (std::size_t k = 0; k < g; ++k) table.columns[col++].push_back(d.weights()[k]);
    for (std::size_t k = 0; k < g; ++k) table.columns[col++].push_back(d.mean(k));
    for (std::size_t k = 0; k < g; ++k) table.columns[col++].push_back(d.scales()[k]);
    for (std::size_t k = 0; k < g; ++k) {
      for (double phi : d.ar(k)) table.columns[col++].push_back(phi);
    }
    for (std::size_t k = 0; k < g; ++k) table.columns[col++].push_back(d.dofs()[k]);
    if (with_lambda) table.columns[col++].push_back(trace.lambdas[i]);
  }
  return table;
}

RelabeledTrace relabel_for_reporting(const ChainTrace& trace) {
  RelabeledTrace out;
  out.trace = trace;
  if (trace.draws.empty()) return out;
  const TMarSpec& reference = trace.draws.front();
  const std::size_t g = reference.components();
  const auto orders = reference.orders();

  std::vector<std::vector<std::size_t>> candidates;
  std::vector<std::size_t> perm(g);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  do {
    bool same_orders = true;
    for (std::size_t k = 0; k < g; ++k) same_orders = same_orders && orders[perm[k]] == orders[k];
    if (same_orders) candidates.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));

  auto distance = [&](const TMarSpec& d, const std::vector<std::size_t>& p) {
    double total = 0.0;
    for (std::size_t k = 0; k < g; ++k) {
      const double dm = (d.mean(p[k]) - reference.mean(k)) / reference.scales()[k];
      const double ds = std::log(d.scales()[p[k]]) - std::log(reference.scales()[k]);
      total += dm * dm + ds * ds;
    }
    return total;
  };

  out.permutations.reserve(trace.draws.size());
  for (std::size_t i = 0; i < trace.draws.size(); ++i) {
    const TMarSpec& d = trace.draws[i];
    std::size_t best = 0;
    double best_distance = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const double dist = distance(d, candidates[c]);
      if (dist < best_distance) {
        best_distance = dist;
        best = c;
      }
    }
    // candidates[0] is the identity, so ties keep the raw labels.
    out.permutations.push_back(candidates[best]);
    if (best == 0) {
      ++out.identity_count;
    } else {
      out.trace.draws[i] = permute_components(d, candidates[best]);
    }
  }
  return out;
}

PosteriorSummary summarize(const ParameterTable& table, double mass) {
  PosteriorSummary summary;
  for (std::size_t c = 0; c < table.names.size(); ++c) {
    const auto& x = table.columns[c];
    ParameterSummary p;
    p.name = table.names[c];
    if (x.empty()) throw UsageError("cannot summarize an empty trace");
    p.mean = mean_of(x);
    double ss = 0.0;
    for (double v : x) ss += (v - p.mean) * (v - p.mean);
    p.sd = x.size() > 1 ? std::sqrt(ss / static_cast<double>(x.size() - 1)) : 0.0;
    std::tie(p.hdi_lower, p.hdi_upper) = hdi(x, mass);
    p.ess = effective_sample_size(x);
    summary.parameters.push_back(std::move(p));
  }
  return summary;
}

PosteriorSummary summarize(const ChainTrace& trace, bool relabel, double mass) {
  PosteriorSummary summary;
  if (relabel) {
    const RelabeledTrace relabeled = relabel_for_reporting(trace);
    summary = summarize(flatten_trace(relabeled.trace), mass);
    summary.relabeled = true;
    summary.identity_share = trace.draws.empty()
                                 ? 1.0
                                 : static_cast<double>(relabeled.identity_count) /
                                       static_cast<double>(trace.draws.size());
  } else {
    summary = summarize(flatten_trace(trace), mass);
  }
  for (const auto& a : trace.ar_acceptance) summary.ar_acceptance.push_back(a.rate());
  for (const auto& a : trace.dof_acceptance) summary.dof_acceptance.push_back(a.rate());
  summary.weight_acceptance = trace.weight_acceptance.rate();
  return summary;
}

ParameterTable thin(const ParameterTable& table, std::size_t step) {
  if (step == 0) throw UsageError("thinning step must be positive");
  ParameterTable out;
  out.names = table.names;
  out.columns.resize(table.columns.size());
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    for (std::size_t i = 0; i < table.columns[c].size(); i += step) {
      out.columns[c].push_back(table.columns[c][i]);
    }
  }
  return out;
}

}  // namespace tmar
