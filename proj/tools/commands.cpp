#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "tmar/diagnostics.hpp"
#include "tmar/errors.hpp"
#include "tmar/evidence.hpp"
#include "tmar/order_selection.hpp"
#include "tmar/sampler.hpp"

namespace tmar::cli {

namespace {

namespace fs = std::filesystem;

struct OptionSpec {
  const char* key;
  const char* help;
};

// Flags mirror config keys; `--p-max` sets `p_max`.
constexpr OptionSpec kOptions[] = {
    {"preset", "built-in model: paper-sec4 or ar1"},
    {"model", "key-value model file to simulate from"},
    {"n", "series length to simulate"},
    {"simulation_burnin", "points discarded before the simulated series"},
    {"data", "input series file"},
    {"column", "1-based column of the input file"},
    {"difference", "take first differences of the input (true/false)"},
    {"trace", "trace file for report"},
    {"output", "output directory"},
    {"g", "comma separated numbers of components"},
    {"orders", "comma separated autoregressive orders"},
    {"p_max", "largest autoregressive order"},
    {"iterations", "sweeps including burn-in"},
    {"burnin", "burn-in sweeps"},
    {"seed", "random seed (required for sampling commands)"},
    {"gamma", "initial random-walk variances"},
    {"nu_center", "prior centre for the degrees of freedom"},
    {"nu_target_var", "prior variance for the degrees of freedom"},
    {"fix_means_to_zero", "hold component means at zero (true/false)"},
    {"rj_iterations", "counted reversible-jump moves"},
    {"rj_burnin", "reversible-jump moves before counting"},
    {"sweeps_per_move", "within-model sweeps between jumps"},
    {"reduced_length", "draws per reduced run"},
    {"reduced_burnin", "burn-in per reduced run"},
    {"bins", "histogram bins for non-dof parameters"},
};

std::string flag_name(const std::string& key) {
  std::string flag = "--" + key;
  std::replace(flag.begin(), flag.end(), '_', '-');
  return flag;
}

std::size_t to_count(const std::string& key, const std::string& text) {
  double v = 0.0;
  if (!parse_double(text, v) || v < 0.0 || v != std::floor(v)) {
    throw UsageError(key + " must be a non-negative integer, got '" + text + "'");
  }
  return static_cast<std::size_t>(v);
}

std::vector<std::size_t> to_counts(const std::string& key, const std::string& text) {
  std::vector<std::size_t> out;
  for (double v : split_numbers(text)) {
    if (v < 0.0 || v != std::floor(v)) throw UsageError(key + " must list non-negative integers");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw UsageError(key + " must be true or false, got '" + text + "'");
}

std::uint64_t to_seed(const std::string& text) {
  std::uint64_t v = 0;
  std::istringstream in(text);
  in >> v;
  if (!in || !in.eof() || text.empty() || text.front() == '-') {
    throw UsageError("seed must be a non-negative integer, got '" + text + "'");
  }
  return v;
}

std::uint64_t stream_seed(std::uint64_t seed, std::size_t g) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(g)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

std::string tuple_text(const std::vector<std::size_t>& orders) {
  std::string s = "(";
  for (std::size_t i = 0; i < orders.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(orders[i]);
  }
  return s + ")";
}

void require_seed(const RunConfig& config) {
  if (!config.seed) throw UsageError("a seed is required (--seed or 'seed' in the config)");
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw UsageError("cannot create output directory " + dir.string());
}

std::ofstream open_file(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path.string());
  return out;
}

SeriesData load_input(const RunConfig& config) {
  if (config.data.empty()) throw UsageError("no input series (--data)");
  return load_series(config.data, config.column,
                     config.difference ? Transform::kFirstDifference : Transform::kNone);
}

PriorConfig priors_for(const RunConfig& config, const SeriesData& data, std::size_t g,
                       std::size_t order_hint) {
  std::vector<double> center = config.nu_center;
  if (center.empty()) center.push_back(moment_dof_estimate(data.values, std::max<std::size_t>(order_hint, 1)));
  PriorConfig priors = default_priors(data.values, g, center, config.nu_target_var);
  priors.fix_means_to_zero = config.fix_means_to_zero;
  return priors;
}

std::vector<double> gamma_for(const RunConfig& config, std::size_t g) {
  if (config.gamma.empty()) return {};
  if (config.gamma.size() == 1) return std::vector<double>(g, config.gamma[0]);
  if (config.gamma.size() != g) throw UsageError("gamma needs one value or one per component");
  return config.gamma;
}

void check_chain_lengths(const RunConfig& config) {
  if (config.iterations <= config.burnin) throw UsageError("iterations must exceed burnin");
}

int simulate(const RunConfig& config, std::ostream& out) {
  require_seed(config);
  if (config.n == 0) throw UsageError("n must be positive");
  if (config.preset.empty() == config.model.empty()) {
    throw UsageError("simulate needs exactly one of --preset or --model");
  }
  const TMarSpec spec = config.preset.empty() ? spec_from_key_values(load_key_values(config.model))
                                              : preset_spec(config.preset);
  const StabilityReport stability = stability_check(spec);
  Rng rng(*config.seed);
  const SimulatedSeries sim = simulate_series(spec, config.n, config.simulation_burnin, rng);
  for (double v : sim.values) {
    if (!std::isfinite(v)) throw NumericalError("simulated series overflowed (unstable model)");
  }

  ensure_directory(config.output);
  write_series(config.output / "series.txt", sim.values);
  KeyValues truth = spec_to_key_values(spec);
  truth["n"] = std::to_string(config.n);
  truth["seed"] = std::to_string(*config.seed);
  truth["source"] = config.preset.empty() ? config.model.string() : "preset:" + config.preset;
  truth["stable"] = stability.stable ? "true" : "false";
  truth["spectral_radius"] = format_double(stability.spectral_radius);
  if (!stability.stable) truth["warning"] = "model is not second-order stationary";
  auto sidecar = open_file(config.output / "truth.txt");
  write_key_values(sidecar, truth);
  out << "wrote " << (config.output / "series.txt").string() << " (" << sim.values.size()
      << " values)\n";
  if (!stability.stable) out << "warning: model is not second-order stationary\n";
  return kOk;
}

int fit(const RunConfig& config, std::ostream& out) {
  require_seed(config);
  check_chain_lengths(config);
  if (config.orders.empty()) throw UsageError("fit needs --orders");
  const SeriesData data = load_input(config);
  const std::size_t g = config.orders.size();
  const std::size_t p = *std::max_element(config.orders.begin(), config.orders.end());
  if (data.n() <= p + 1) throw DataError("series is shorter than the model order");
  const PriorConfig priors = priors_for(config, data, g, p);

  GibbsSettings settings;
  settings.iterations = config.iterations;
  settings.burnin = config.burnin;
  settings.seed = *config.seed;
  settings.gamma = gamma_for(config, g);
  const SeriesWindow window{data.values, p};
  const ChainTrace trace = run_gibbs(window, config.orders, priors, settings);

  ensure_directory(config.output);
  write_trace(config.output / "trace.csv", flatten_trace(trace));
  const PosteriorSummary summary = summarize(trace, true);
  KeyValues kv = summary_to_key_values(summary);
  kv["g"] = std::to_string(g);
  kv["orders"] = tuple_text(config.orders);
  kv["draws"] = std::to_string(trace.size());
  kv["seed"] = std::to_string(*config.seed);
  kv["data"] = data.source;
  auto file = open_file(config.output / "summary.txt");
  write_key_values(file, kv);
  out << "fit tMAR(" << g << ";" << tuple_text(config.orders).substr(1) << " with "
      << trace.size() << " draws\n";
  for (const auto& p : summary.parameters) {
    out << "  " << p.name << ": mean " << format_double(p.mean) << ", 95% HDI ["
        << format_double(p.hdi_lower) << ", " << format_double(p.hdi_upper) << "]\n";
  }
  return kOk;
}

OrderSelectionSettings selection_settings(const RunConfig& config, std::size_t g) {
  OrderSelectionSettings s;
  s.iterations = config.rj_iterations;
  s.burnin = config.rj_burnin;
  s.sweeps_per_move = config.sweeps_per_move;
  s.p_max = config.p_max;
  s.seed = stream_seed(*config.seed, g);
  s.gamma = gamma_for(config, g);
  return s;
}

int select(const RunConfig& config, std::ostream& out) {
  require_seed(config);
  if (config.p_max < 1) throw UsageError("p_max must be at least 1");
  if (config.rj_iterations == 0) throw UsageError("rj_iterations must be positive");
  const SeriesData data = load_input(config);
  if (data.n() <= config.p_max + 1) throw DataError("series is shorter than p_max");
  ensure_directory(config.output);
  const SeriesWindow window{data.values, config.p_max};
  for (std::size_t g : config.g_list) {
    if (g == 0) throw UsageError("g must be positive");
    const PriorConfig priors = priors_for(config, data, g, config.p_max);
    const OrderSelectionResult result =
        run_order_selection(window, g, priors, selection_settings(config, g));
    const auto classes = class_visit_counts(result.state);
    std::vector<std::pair<OrderTuple, std::size_t>> rows(classes.begin(), classes.end());
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    const fs::path path = config.output / ("select_g" + std::to_string(g) + ".csv");
    auto file = open_file(path);
    file << "orders,count,share\n";
    const double total = static_cast<double>(result.state.total_visits());
    for (const auto& [orders, count] : rows) {
      file << tuple_text(orders) << ',' << count << ','
           << format_double(static_cast<double>(count) / total) << '\n';
    }
    out << "g=" << g << ": preferred orders " << tuple_text(result.preferred) << " (share "
        << format_double(result.preferred_share) << ")\n";
  }
  return kOk;
}

int evidence(const RunConfig& config, std::ostream& out) {
  require_seed(config);
  check_chain_lengths(config);
  if (config.p_max < 1) throw UsageError("p_max must be at least 1");
  if (!config.orders.empty() && config.g_list.size() != 1) {
    throw UsageError("fixed orders need a single value of g");
  }
  const SeriesData data = load_input(config);
  if (data.n() <= config.p_max + 1) throw DataError("series is shorter than p_max");
  ensure_directory(config.output);
  const SeriesWindow window{data.values, config.p_max};

  struct Entry {
    std::size_t g;
    EvidenceReport report;
  };
  std::vector<Entry> entries;
  for (std::size_t g : config.g_list) {
    if (g == 0) throw UsageError("g must be positive");
    const PriorConfig priors = priors_for(config, data, g, config.p_max);
    EvidencePipelineSettings settings;
    settings.seed = stream_seed(*config.seed, g);
    if (!config.orders.empty()) {
      if (config.orders.size() != g) throw UsageError("orders must list one order per component");
      settings.fixed_orders = config.orders;
    }
    settings.selection = selection_settings(config, g);
    settings.chain.iterations = config.iterations;
    settings.chain.burnin = config.burnin;
    settings.chain.gamma = gamma_for(config, g);
    settings.evidence.reduced_length = config.reduced_length;
    settings.evidence.reduced_burnin = config.reduced_burnin;
    const EvidencePipelineResult result = run_evidence_pipeline(window, g, priors, settings);
    const EvidenceReport& r = result.report;

    KeyValues kv;
    kv["g"] = std::to_string(g);
    kv["orders"] = tuple_text(r.selected_orders);
    kv["valid"] = r.valid ? "true" : "false";
    kv["log_label_permutations"] = format_double(r.log_label_permutations);
    if (r.valid) {
      kv["marginal_log_likelihood"] = format_double(r.marginal_log_likelihood);
      kv["log_likelihood_at_anchor"] = format_double(r.log_likelihood_at_anchor);
      kv["log_prior_at_anchor"] = format_double(r.log_prior_at_anchor);
      kv["log_order_prior"] = format_double(r.log_order_prior);
      kv["log_order_posterior"] = format_double(r.log_order_posterior);
      const char* blocks[] = {"phi", "nu", "mu", "tau", "pi"};
      for (std::size_t b = 0; b < 5; ++b) {
        kv[std::string("block_log_density.") + blocks[b]] = format_double(r.block_log_densities[b]);
      }
      for (const auto& [key, value] : spec_to_key_values(*r.anchor)) kv["anchor." + key] = value;
    } else {
      kv["failure"] = r.failure;
    }
    auto file = open_file(config.output / ("evidence_g" + std::to_string(g) + ".txt"));
    write_key_values(file, kv);
    entries.push_back({g, r});
  }

  std::vector<const Entry*> ranked;
  for (const auto& e : entries) {
    if (e.report.valid) ranked.push_back(&e);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const Entry* a, const Entry* b) {
    return a->report.marginal_log_likelihood > b->report.marginal_log_likelihood;
  });
  auto verdict = open_file(config.output / "verdict.txt");
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const auto& r = ranked[i]->report;
    std::ostringstream line;
    line << (i + 1) << ". tMAR(" << ranked[i]->g << ";" << tuple_text(r.selected_orders).substr(1)
         << " marginal log-likelihood " << format_double(r.marginal_log_likelihood);
    verdict << line.str() << '\n';
    out << line.str() << '\n';
  }
  for (const auto& e : entries) {
    if (!e.report.valid) {
      verdict << "excluded g=" << e.g << ": " << e.report.failure << '\n';
      out << "excluded g=" << e.g << ": " << e.report.failure << '\n';
    }
  }
  return ranked.empty() ? kNumerical : kOk;
}

void write_histogram(const fs::path& path, const std::vector<double>& x, double lo, double hi,
                     std::size_t bins) {
  std::vector<std::size_t> counts(bins, 0);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (double v : x) {
    auto i = width > 0.0 ? static_cast<std::ptrdiff_t>(std::floor((v - lo) / width)) : 0;
    i = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(bins) - 1);
    ++counts[static_cast<std::size_t>(i)];
  }
  auto file = open_file(path);
  file << "lower,upper,count,density\n";
  const double n = static_cast<double>(x.size());
  for (std::size_t b = 0; b < bins; ++b) {
    const double l = lo + width * static_cast<double>(b);
    const double density = width > 0.0 ? static_cast<double>(counts[b]) / (n * width) : 1.0;
    file << format_double(l) << ',' << format_double(l + width) << ',' << counts[b] << ','
         << format_double(density) << '\n';
  }
}

int report(const RunConfig& config, std::ostream& out) {
  if (config.trace.empty()) throw UsageError("report needs --trace");
  if (config.bins == 0) throw UsageError("bins must be positive");
  const ParameterTable table = read_trace(config.trace);
  ensure_directory(config.output);
  for (std::size_t c = 0; c < table.names.size(); ++c) {
    const std::string& name = table.names[c];
    const auto& x = table.columns[c];
    {
      auto file = open_file(config.output / ("trace_" + name + ".csv"));
      file << "iteration," << name << '\n';
      for (std::size_t i = 0; i < x.size(); ++i) file << i << ',' << format_double(x[i]) << '\n';
    }
    if (name.rfind("nu_", 0) == 0) {
      // Degrees of freedom live on (2, 30]: unit-width bins.
      write_histogram(config.output / ("hist_" + name + ".csv"), x, 2.0, 30.0, 28);
    } else {
      const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
      write_histogram(config.output / ("hist_" + name + ".csv"), x, *lo, *hi,
                      *lo < *hi ? config.bins : 1);
    }
  }
  out << "wrote plot data for " << table.names.size() << " parameters to "
      << config.output.string() << '\n';
  return kOk;
}

}  // namespace

RunConfig RunConfig::from_key_values(const KeyValues& values) {
  RunConfig c;
  for (const auto& [key, value] : values) {
    if (key == "preset") c.preset = value;
    else if (key == "model") c.model = value;
    else if (key == "n") c.n = to_count(key, value);
    else if (key == "simulation_burnin") c.simulation_burnin = to_count(key, value);
    else if (key == "data") c.data = value;
    else if (key == "column") c.column = to_count(key, value);
    else if (key == "difference") c.difference = to_bool(key, value);
    else if (key == "trace") c.trace = value;
    else if (key == "output") c.output = value;
    else if (key == "g") c.g_list = to_counts(key, value);
    else if (key == "orders") c.orders = to_counts(key, value);
    else if (key == "p_max") c.p_max = to_count(key, value);
    else if (key == "iterations") c.iterations = to_count(key, value);
    else if (key == "burnin") c.burnin = to_count(key, value);
    else if (key == "seed") c.seed = to_seed(value);
    else if (key == "gamma") c.gamma = split_numbers(value);
    else if (key == "nu_center") c.nu_center = split_numbers(value);
    else if (key == "nu_target_var") c.nu_target_var = split_numbers(value).at(0);
    else if (key == "fix_means_to_zero") c.fix_means_to_zero = to_bool(key, value);
    else if (key == "rj_iterations") c.rj_iterations = to_count(key, value);
    else if (key == "rj_burnin") c.rj_burnin = to_count(key, value);
    else if (key == "sweeps_per_move") c.sweeps_per_move = to_count(key, value);
    else if (key == "reduced_length") c.reduced_length = to_count(key, value);
    else if (key == "reduced_burnin") c.reduced_burnin = to_count(key, value);
    else if (key == "bins") c.bins = to_count(key, value);
    else throw UsageError("unknown configuration key '" + key + "'");
  }
  if (c.g_list.empty()) throw UsageError("g must list at least one value");
  return c;
}

TMarSpec preset_spec(const std::string& name) {
  if (name == "paper-sec4") {
    return TMarSpec({0.4, 0.4, 0.2}, {0.0, 0.0, 0.0}, {{-0.5, 0.5}, {1.1}, {-0.4}},
                    {5.0, 3.0, 1.0}, {4.0, 14.0, 10.0});
  }
  if (name == "ar1") return TMarSpec({1.0}, {0.0}, {{0.6}}, {1.0}, {10.0});
  throw UsageError("unknown preset '" + name + "' (known: paper-sec4, ar1)");
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian mixture autoregressive models with Student-t innovations", "tmar"};
  app.require_subcommand(1);
  std::map<std::string, std::string> flags;
  std::string config_path;
  const char* commands[][2] = {{"simulate", "simulate a series from a model"},
                               {"fit", "sample the posterior for fixed orders"},
                               {"select", "reversible-jump order selection"},
                               {"evidence", "marginal likelihood per number of components"},
                               {"report", "plot data from a trace file"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "key-value configuration file");
    for (const auto& opt : kOptions) {
      sub->add_option_function<std::string>(
          flag_name(opt.key), [&flags, key = std::string(opt.key)](const std::string& v) { flags[key] = v; },
          opt.help);
    }
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    KeyValues merged;
    if (!config_path.empty()) merged = load_key_values(config_path);
    for (const auto& [key, value] : flags) merged[key] = value;
    const RunConfig config = RunConfig::from_key_values(merged);
    const std::string command = app.get_subcommands().front()->get_name();
    if (command == "simulate") return simulate(config, out);
    if (command == "fit") return fit(config, out);
    if (command == "select") return select(config, out);
    if (command == "evidence") return evidence(config, out);
    return report(config, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumerical;
  }
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace tmar::cli
