#pragma once

#include "bvmlab/dataset.hpp"
#include "bvmlab/numerics.hpp"
#include "bvmlab/priors.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bvmlab {

// Every field maps to one config key of the same name.
struct ExperimentConfig {
  std::string experiment;
  ModelKind model = ModelKind::logistic;
  std::vector<double> n_grid{1000.0};
  Index p_max = 64;

  std::string prior_kind = "truncation";  // truncation | smooth
  Index prior_m = 0;                      // 0: m* = ceil(n^{1/3} / log n)
  double prior_s = 1.0;
  std::optional<double> prior_w;          // empty: "auto" via tradeoff_w
  Index prior_cap = 0;

  double s_star = 2.0;
  double radius2 = 0.9;
  double alpha = 0.1;
  double nu0_sq = 1.0;
  double c1 = 4.0;
  double c2 = 4.0;

  Index replications = 1;
  std::uint64_t seed = 1;

  std::string sampler = "rwm";  // rwm | importance
  Index chain_keep = 200000;
  Index chain_burn_in = 50000;
  Index chain_thin = 1;
  double chain_scale = 0.0;
  Index is_draws = 40000;
  Index mc_draws = 1000000;
  Index compare_draws = 200000;
  Index grid_points = 64;
  Index quadrature_nodes = 2048;
  Index surrogate_dim = 4;
  Index pivot_trials = 1000;
  Index radius_draws = 100000;

  bool write_draws = false;
  std::filesystem::path out = "results";
  unsigned jobs = 0;  // 0: BVM_LAB_JOBS or hardware concurrency

  // Prior for sample size n, resolving "auto" and m = 0.
  PriorSpec prior_for(double n) const;
};

struct ExperimentInfo {
  std::string_view name;
  std::string_view summary;
};

const std::vector<ExperimentInfo>& experiment_registry();
bool is_registered(std::string_view experiment);

// Defaults of a registered experiment; throws ConfigInvalid for unknown names.
ExperimentConfig default_config(std::string_view experiment);

// Flat key = value pairs from an INI file; section names are ignored and
// keys must be unique across sections.
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);
std::map<std::string, std::string> parse_config_text(std::string_view text);

// Assigns one key; throws ConfigInvalid on unknown keys or malformed values.
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value);
void apply_settings(ExperimentConfig& config, const std::map<std::string, std::string>& settings);

// Throws ConfigInvalid on non-positive sizes or an unregistered experiment.
void validate(const ExperimentConfig& config);

// Effective value of every key, in key order.
std::map<std::string, std::string> echo(const ExperimentConfig& config);

std::vector<std::string> config_keys();

}  // namespace bvmlab
