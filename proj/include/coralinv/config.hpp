#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "coralinv/diagnostics.hpp"
#include "coralinv/forward_model.hpp"
#include "coralinv/observation.hpp"
#include "coralinv/parameters.hpp"
#include "coralinv/reef_target.hpp"
#include "coralinv/samplers.hpp"

namespace coralinv {

/// Invalid run configuration. The message names the offending line or
/// `[section] key`.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SamplerMethod { Single, ParallelTempering };

struct SamplerConfig {
  SamplerMethod method = SamplerMethod::Single;
  std::size_t samples = 10000;
  double burn_in = 0.15;
  std::size_t replicas = 10;
  double beta_max = 10.0;
  std::vector<double> ladder;  // explicit temperatures override replicas/beta_max
  std::uint64_t seed = 1;
  BudgetConvention budget = BudgetConvention::PerReplica;
  bool sequential = true;
  std::size_t max_initial_draws = 1000;

  TemperatureLadder temperature_ladder() const;
  SamplerSettings settings() const;
};

struct SurfaceConfig {
  std::string param_a = "epsilon";
  std::string param_b = "alpha_s";
  std::vector<double> grid_a = linspace(0.003, 0.15, 50);
  std::vector<double> grid_b = linspace(-0.15, -0.003, 50);
};

struct RunConfig {
  std::string source;  // config file path, empty for in-memory text
  std::string text;    // verbatim config, echoed into provenance files

  std::string sea_level_path;
  std::string flow_path;
  std::string sediment_path;
  BoundaryConditions boundary;

  SimulationConfig simulation;
  ParameterVector theta;  // full parameter vector; fixed coordinates come from here
  PriorBounds bounds;
  StepSizes steps;
  AdaptationSettings adaptation;
  FreeMask free;  // empty when no [free] section
  std::vector<std::string> free_names;

  std::vector<std::string> categories;  // model order: assemblages then sediment
  std::string observed_path;
  Structure structure = Structure::Time;
  double observed_bin = 0.0;  // yr or m; defaults to layer_interval / depth_bin
  LikelihoodOptions likelihood;

  SamplerConfig sampler;
  SurfaceConfig surface;
  SummaryOptions summary;
};

/// Parses config text. Relative paths resolve against `base_dir`; curve files
/// are loaded immediately.
RunConfig parse_run_config(const std::string& text, const std::string& base_dir,
                           const std::string& source = "<config>");
RunConfig load_run_config(const std::string& path);

/// Resolves a free-parameter list: exact names, `all`, `glv`, `thresholds`,
/// `flow`, `sed`, or a prefix ending in `*` (e.g. `flow.2.*`).
FreeMask resolve_free_mask(const std::vector<std::string>& tokens, std::size_t assemblages);

ObservedCore load_observed_core(const RunConfig& config);

/// Sampling problem for the configured free coordinates. Throws ConfigError
/// when the free mask is empty.
ReefProblem make_problem(const RunConfig& config, ObservedCore observed);

}  // namespace coralinv
