#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "coralinv/commands.hpp"
#include "coralinv/csv.hpp"

namespace {

constexpr int kRuntimeError = 1;
constexpr int kValidationError = 2;

coralinv::RunConfig load(const std::string& path, const coralinv::Overrides& overrides) {
  coralinv::RunConfig config = coralinv::load_run_config(path);
  coralinv::apply_overrides(config, overrides);
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reef core forward modelling and Bayesian inversion"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool sequential = false;
  std::vector<std::string> traces;

  const auto add_common = [&](CLI::App* cmd, bool needs_config) {
    auto* opt = cmd->add_option("--config", config_path, "Run configuration file");
    if (needs_config) opt->required();
    cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
    cmd->add_option("--seed", seed, "Override the sampler seed");
    cmd->add_flag("--sequential", sequential, "Step replicas sequentially (bit-reproducible)");
  };

  auto* synth = app.add_subcommand("synthesize", "Simulate a core from a fully specified parameter vector");
  add_common(synth, true);
  auto* infer = app.add_subcommand("infer", "Sample the posterior of the free parameters");
  add_common(infer, true);
  auto* surface = app.add_subcommand("surface", "Grid-search a two-parameter log-likelihood surface");
  add_common(surface, true);
  auto* psrf = app.add_subcommand("psrf", "Potential scale reduction factors over trace files");
  add_common(psrf, false);
  psrf->add_option("traces", traces, "Trace CSV files (two or more)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kValidationError;
  }

  coralinv::Overrides overrides;
  if (app.get_subcommands().front()->count("--seed") > 0) overrides.seed = seed;
  overrides.sequential = sequential;

  try {
    if (synth->parsed()) {
      const auto config = load(config_path, overrides);
      const auto out = coralinv::cmd_synthesize(config, out_dir);
      std::cout << "steps: " << out.core.time_steps() << ", depth bins: " << out.core.depth_bins()
                << ", thickness: " << coralinv::format_double(out.core.total_thickness()) << " m\n"
                << "wrote " << out.proportions_csv << ", " << out.time_labels_csv << ", " << out.depth_labels_csv
                << ", " << out.provenance << '\n';
    } else if (infer->parsed()) {
      coralinv::cmd_infer(load(config_path, overrides), out_dir, std::cout);
    } else if (surface->parsed()) {
      coralinv::cmd_surface(load(config_path, overrides), out_dir, std::cout);
    } else if (psrf->parsed()) {
      coralinv::cmd_psrf(traces, out_dir, std::cout);
    }
  } catch (const coralinv::FileNotFound& e) {
    std::cerr << "FileNotFound: " << e.what() << '\n';
    return kValidationError;
  } catch (const coralinv::ConfigError& e) {
    std::cerr << "ConfigError: " << e.what() << '\n';
    return kValidationError;
  } catch (const coralinv::ParseError& e) {
    std::cerr << "ParseError: " << e.what() << '\n';
    return kValidationError;
  } catch (const coralinv::IncompatibleTraces& e) {
    std::cerr << "IncompatibleTraces: " << e.what() << '\n';
    return kValidationError;
  } catch (const coralinv::CategoryMismatch& e) {
    std::cerr << "CategoryMismatch: " << e.what() << '\n';
    return kValidationError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kValidationError;
  } catch (const coralinv::AllProposalsInvalid& e) {
    std::cerr << "AllProposalsInvalid: " << e.what() << '\n';
    return kRuntimeError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return 0;
}
