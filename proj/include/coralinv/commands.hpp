#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "coralinv/config.hpp"
#include "coralinv/diagnostics.hpp"
#include "coralinv/samplers.hpp"

namespace coralinv {

class IncompatibleTraces : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Command-line overrides applied on top of a loaded config.
struct Overrides {
  std::optional<std::uint64_t> seed;
  bool sequential = false;
};

void apply_overrides(RunConfig& config, const Overrides& overrides);

/// Self-contained config text (absolute paths, every setting explicit) that
/// reproduces `config` when parsed.
std::string render_run_config(const RunConfig& config);

struct SynthesisOutput {
  CoreRecord core;
  std::string proportions_csv;
  std::string time_labels_csv;
  std::string depth_labels_csv;
  std::string provenance;
};

SynthesisOutput cmd_synthesize(const RunConfig& config, const std::string& out_dir);

struct InferenceOutput {
  SamplerResult result;
  PosteriorSummary summary;
  ParameterVector posterior_mean;  // fixed coordinates filled in
  Envelopes envelopes;
  std::string trace_csv;
  std::string summary_json;
};

InferenceOutput cmd_infer(const RunConfig& config, const std::string& out_dir, std::ostream& log);

SurfaceGrid cmd_surface(const RunConfig& config, const std::string& out_dir, std::ostream& log);

struct PsrfReport {
  std::vector<std::string> names;
  std::vector<double> values;
  std::size_t chains = 0;
  std::size_t length = 0;
};

/// Per-parameter PSRF over post-burn-in cold-chain iterates of each trace.
/// Longer traces are truncated to the shortest.
PsrfReport compute_psrf(const std::vector<TraceTable>& traces);
PsrfReport cmd_psrf(const std::vector<std::string>& trace_paths, const std::string& out_dir, std::ostream& log);

void write_psrf_json(const std::string& path, const PsrfReport& report);

}  // namespace coralinv
