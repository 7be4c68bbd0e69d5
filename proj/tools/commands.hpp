#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tmar/io.hpp"
#include "tmar/model.hpp"

namespace tmar::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

struct RunConfig {
  std::string preset;                 // simulate: built-in model
  std::filesystem::path model;        // simulate: key-value model file
  std::size_t n = 0;                  // simulate: series length
  std::size_t simulation_burnin = 500;

  std::filesystem::path data;
  std::size_t column = 1;
  bool difference = false;
  std::filesystem::path trace;        // report input
  std::filesystem::path output = ".";

  std::vector<std::size_t> g_list{1};
  std::vector<std::size_t> orders;
  std::size_t p_max = 4;
  std::size_t iterations = 10000;
  std::size_t burnin = 1000;
  std::optional<std::uint64_t> seed;
  std::vector<double> gamma;
  std::vector<double> nu_center;      // empty: moment estimate from the data
  double nu_target_var = 25.0;
  bool fix_means_to_zero = false;

  std::size_t rj_iterations = 10000;
  std::size_t rj_burnin = 1000;
  std::size_t sweeps_per_move = 5;
  std::size_t reduced_length = 10000;
  std::size_t reduced_burnin = 500;
  std::size_t bins = 40;

  static RunConfig from_key_values(const KeyValues& values);
};

/// Built-in models: "paper-sec4" (three components, orders 2, 1, 1) and "ar1".
TMarSpec preset_spec(const std::string& name);

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace tmar::cli
