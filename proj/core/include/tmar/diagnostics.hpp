#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tmar/sampler.hpp"

namespace tmar {

/// Shortest interval containing ceil(mass * N) of the sorted draws.
/// Throws UsageError for fewer than 100 draws or mass outside (0, 1].
std::pair<double, double> hdi(std::span<const double> draws, double mass = 0.95);

/// Geyer initial positive sequence estimator, capped at N. A constant
/// sequence has ESS 0.
double effective_sample_size(std::span<const double> draws);

/// Column-major view of a trace: one named column per scalar parameter.
struct ParameterTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
  /// Index of `name`, or names.size() when absent.
  std::size_t find(const std::string& name) const;
};

/// Columns pi_k, mu_k, sigma_k, phi_k_i, nu_k (k, i 1-based) and lambda.
/// Orders must be constant over the trace.
ParameterTable flatten_trace(const ChainTrace& trace);

struct RelabeledTrace {
  ChainTrace trace;
  /// permutations[i][k] is the raw label shown as component k at draw i.
  std::vector<std::vector<std::size_t>> permutations;
  std::size_t identity_count = 0;
};

/// Per draw, the permutation bringing (mu_k / sigma_k, log sigma_k) closest in
/// squared distance to the first draw, with sigma_k taken from that draw.
/// Permutations that would mix components of different orders are skipped.
/// Raw traces are left untouched.
RelabeledTrace relabel_for_reporting(const ChainTrace& trace);

struct ParameterSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double hdi_lower = 0.0;
  double hdi_upper = 0.0;
  double ess = 0.0;
};

struct PosteriorSummary {
  std::vector<ParameterSummary> parameters;
  std::vector<double> ar_acceptance;
  std::vector<double> dof_acceptance;
  double weight_acceptance = 0.0;
  bool relabeled = false;
  /// Share of draws left in their original labelling.
  double identity_share = 1.0;
};

PosteriorSummary summarize(const ParameterTable& table, double mass = 0.95);
/// Relabels (optionally), flattens and summarizes.
PosteriorSummary summarize(const ChainTrace& trace, bool relabel = true, double mass = 0.95);

/// Every `step`-th row starting at row 0.
ParameterTable thin(const ParameterTable& table, std::size_t step);

}  // namespace tmar
