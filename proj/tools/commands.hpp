#pragma once

#include "blockcorr/pipeline.hpp"
#include "blockcorr/seglik.hpp"
#include "blockcorr/sigtest.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace blockcorr::cli {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitIngestion = 2;
inline constexpr int kExitValidation = 3;

struct RunConfig {
  std::string command;
  std::string input;
  std::string annotation;
  std::string covariate;
  std::string segments;
  std::string scenario;
  std::vector<std::string> truth;
  std::vector<std::string> calls;
  std::string out = ".";
  bool transpose = false;
  bool json = false;
  bool trace = false;

  double threshold = 0.7;
  int kmax = 0;
  int min_length = 1;
  std::string rule = "largest";

  double alpha = 0.05;
  std::string adjust = "bh";
  std::optional<double> rho0;

  std::string mode = "pooled";
  double half_width = 0.0;

  std::uint64_t seed = 1;
  int n = 58;
  double rho1 = 0.7;
  int chromosome_count = 5;
  int genes = 500;
  bool varying = false;

  std::vector<int> n_values;
  std::vector<int> p_values;
  std::vector<double> alphas;
  double rho_step = 0.05;
};

// Throws Error(InvalidArgument) on out-of-range knobs or missing paths.
void validate(const RunConfig& config);

int run(const RunConfig& config);

}  // namespace blockcorr::cli
