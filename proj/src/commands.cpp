#include "coralinv/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <sstream>

#include <nlohmann/json.hpp>

#include "coralinv/csv.hpp"
#include "coralinv/reef_target.hpp"

namespace coralinv {
namespace {

namespace fs = std::filesystem;

// Shortest text that parses back to the same double.
std::string exact(double v) { return format_double_exact(v); }

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + exact(v[i]);
  return out;
}

std::string join(const std::array<double, 4>& v) { return join(std::vector<double>(v.begin(), v.end())); }

std::string absolute(const std::string& path) { return fs::absolute(path).lexically_normal().string(); }

std::string prepare_dir(const std::string& out_dir) {
  fs::create_directories(out_dir);
  return out_dir;
}

std::string in_dir(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void write_proportions_csv(const std::string& path, const CoreRecord& core, const RunConfig& config) {
  std::ostringstream out;
  out << "step,age_yr";
  for (const auto& c : config.categories) out << ',' << c;
  out << ",thickness_m,water_depth_m\n";
  for (std::size_t t = 0; t < core.time_steps(); ++t) {
    out << t << ','
        << format_double(config.simulation.t_start - static_cast<double>(t) * config.simulation.layer_interval);
    for (Eigen::Index k = 0; k < core.proportions.cols(); ++k) {
      out << ',' << format_double(core.proportions(static_cast<Eigen::Index>(t), k));
    }
    out << ',' << format_double(core.layer_thickness[t]) << ',' << format_double(core.water_depth[t]) << '\n';
  }
  write_text_file(path, out.str());
}

std::string theta_comment(const ParameterVector& theta) {
  std::ostringstream out;
  const auto names = coordinate_names(theta.assemblages());
  const auto flat = theta.flatten();
  for (std::size_t i = 0; i < flat.size(); ++i) out << "; theta " << names[i] << " = " << exact(flat[i]) << '\n';
  return out.str();
}

std::string write_provenance(const std::string& dir, const RunConfig& config, const std::string& command) {
  const std::string path = in_dir(dir, "provenance.ini");
  std::ostringstream out;
  out << "; coralinv " << command << '\n';
  out << "; source config: " << (config.source.empty() ? "<memory>" : absolute(config.source)) << '\n';
  out << theta_comment(config.theta) << '\n';
  out << render_run_config(config);
  write_text_file(path, out.str());
  return path;
}

}  // namespace

void apply_overrides(RunConfig& config, const Overrides& overrides) {
  if (overrides.seed) config.sampler.seed = *overrides.seed;
  if (overrides.sequential) config.sampler.sequential = true;
}

std::string render_run_config(const RunConfig& c) {
  std::ostringstream out;
  const SimulationConfig& s = c.simulation;
  out << "[boundary]\n"
      << "sea_level = " << absolute(c.sea_level_path) << '\n'
      << "flow = " << absolute(c.flow_path) << '\n'
      << "sediment = " << absolute(c.sediment_path) << "\n\n";
  out << "[simulation]\n"
      << "t_start = " << exact(s.t_start) << '\n'
      << "t_end = " << exact(s.t_end) << '\n'
      << "layer_interval = " << exact(s.layer_interval) << '\n'
      << "initial_depth = " << exact(s.initial_depth) << '\n'
      << "seed_population = " << exact(s.seed_population) << '\n'
      << "depth_bin = " << exact(s.depth_bin) << '\n'
      << "ode_tolerance = " << exact(s.ode_tolerance) << '\n'
      << "ode_safety = " << exact(s.ode_safety) << "\n\n";
  for (std::size_t a = 0; a < s.assemblages.size(); ++a) {
    const AssemblageSpec& spec = s.assemblages[a];
    out << "[assemblage:" << spec.name << "]\n"
        << "max_va_rate = " << exact(spec.max_va_rate) << '\n'
        << "flow = " << join(c.theta.flow_thresholds[a].points) << '\n'
        << "sediment = " << join(c.theta.sed_thresholds[a].points) << '\n'
        << "depth = " << join(spec.depth_threshold.points) << "\n\n";
  }
  out << "[glv]\n"
      << "epsilon = " << exact(c.theta.glv.epsilon) << '\n'
      << "alpha_m = " << exact(c.theta.glv.alpha_main) << '\n'
      << "alpha_s = " << exact(c.theta.glv.alpha_sub) << "\n\n";
  const auto iv = [](const Interval& i) { return exact(i.lo) + ", " + exact(i.hi); };
  out << "[priors]\n"
      << "epsilon = " << iv(c.bounds.epsilon) << '\n'
      << "alpha_m = " << iv(c.bounds.alpha_main) << '\n'
      << "alpha_s = " << iv(c.bounds.alpha_sub) << '\n'
      << "flow = " << iv(c.bounds.flow) << '\n'
      << "sediment = " << iv(c.bounds.sediment) << "\n\n";
  const std::size_t first_sed = kGlvCoordinates + 4 * s.assemblages.size();
  out << "[steps]\n"
      << "epsilon = " << exact(c.steps.sigma[0]) << '\n'
      << "alpha_m = " << exact(c.steps.sigma[1]) << '\n'
      << "alpha_s = " << exact(c.steps.sigma[2]) << '\n'
      << "flow = " << exact(c.steps.sigma[kGlvCoordinates]) << '\n'
      << "sediment = " << exact(c.steps.sigma[first_sed]) << '\n'
      << "floor_ratio = " << exact(c.steps.floor[0] / c.steps.sigma[0]) << "\n\n";
  out << "[adaptation]\n"
      << "enabled = " << (c.adaptation.enabled ? "true" : "false") << '\n'
      << "start = " << c.adaptation.start_iteration << '\n'
      << "every = " << c.adaptation.recompute_every << "\n\n";
  if (!c.free.empty()) {
    const auto names = coordinate_names(s.assemblages.size());
    std::string list;
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (c.free[i]) list += (list.empty() ? "" : ", ") + names[i];
    }
    out << "[free]\nparameters = " << list << "\n\n";
  }
  out << "[observation]\n";
  if (!c.observed_path.empty()) out << "core = " << absolute(c.observed_path) << '\n';
  out << "structure = " << to_string(c.structure) << '\n'
      << "bin_size = " << exact(c.observed_bin) << '\n'
      << "categories = ";
  for (std::size_t k = 0; k < c.categories.size(); ++k) out << (k ? ", " : "") << c.categories[k];
  out << '\n' << "floor = " << exact(c.likelihood.floor) << "\n\n";
  const SamplerConfig& m = c.sampler;
  out << "[sampler]\n"
      << "method = " << (m.method == SamplerMethod::Single ? "single" : "pt") << '\n'
      << "samples = " << m.samples << '\n'
      << "burn_in = " << exact(m.burn_in) << '\n'
      << "replicas = " << m.replicas << '\n'
      << "beta_max = " << exact(m.beta_max) << '\n';
  if (!m.ladder.empty()) out << "ladder = " << join(m.ladder) << '\n';
  out << "seed = " << m.seed << '\n'
      << "budget = " << (m.budget == BudgetConvention::PerReplica ? "per_replica" : "total") << '\n'
      << "sequential = " << (m.sequential ? "true" : "false") << '\n'
      << "max_initial_draws = " << m.max_initial_draws << "\n\n";
  const auto axis = [](const std::vector<double>& g) {
    return exact(g.front()) + ", " + exact(g.back()) + ", " + std::to_string(g.size());
  };
  out << "[surface]\n"
      << "param_a = " << c.surface.param_a << '\n'
      << "param_b = " << c.surface.param_b << '\n'
      << "grid_a = " << axis(c.surface.grid_a) << '\n'
      << "grid_b = " << axis(c.surface.grid_b) << "\n\n";
  out << "[summary]\n"
      << "forward_draws = " << c.summary.max_forward_draws << '\n'
      << "threads = " << c.summary.threads << '\n';
  return out.str();
}

SynthesisOutput cmd_synthesize(const RunConfig& config, const std::string& out_dir) {
  const std::string dir = prepare_dir(out_dir);
  SynthesisOutput out;
  out.core = simulate(config.theta, config.boundary, config.simulation);
  out.proportions_csv = in_dir(dir, "proportions.csv");
  out.time_labels_csv = in_dir(dir, "y_time.csv");
  out.depth_labels_csv = in_dir(dir, "y_depth.csv");
  write_proportions_csv(out.proportions_csv, out.core, config);
  write_time_labels_csv(out.time_labels_csv, out.core.time_labels, config.categories, config.simulation.t_start,
                        config.simulation.layer_interval);
  write_depth_labels_csv(out.depth_labels_csv, out.core.depth_labels, config.categories, out.core.depth_bin);
  out.provenance = write_provenance(dir, config, "synthesize");
  return out;
}

InferenceOutput cmd_infer(const RunConfig& config, const std::string& out_dir, std::ostream& log) {
  const std::string dir = prepare_dir(out_dir);
  ObservedCore observed = load_observed_core(config);
  const ReefTarget target(make_problem(config, std::move(observed)));
  const ReefProblem& problem = target.problem();

  InferenceOutput out;
  out.result = run_parallel_tempering(target, config.sampler.temperature_ladder(), config.sampler.settings());
  out.trace_csv = in_dir(dir, "trace.csv");
  write_trace_csv(out.trace_csv, out.result);

  const auto mc_of = [&](const ParameterVector& theta) -> std::optional<std::size_t> {
    try {
      return misclassification_score(problem.observed, simulate(theta, problem.boundary, problem.simulation));
    } catch (const SimulationError&) {
      return std::nullopt;
    }
  };
  const auto& posterior = out.result.posterior;
  if (!posterior.empty()) {
    out.summary = summarize(
        posterior, out.result.names, out.result.acceptance_rate,
        [&](std::span<const double> it) { return mc_of(target.expand(it)); }, config.summary);
    std::vector<double> mean(target.dimension(), 0.0);
    for (const auto& it : posterior) {
      for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += it[j];
    }
    for (double& m : mean) m /= static_cast<double>(posterior.size());
    out.posterior_mean = target.expand(mean);
    out.summary.mean_prediction_mc = mc_of(out.posterior_mean);

    std::vector<ParameterVector> draws;
    for (std::size_t i : thinned_indices(posterior.size(), config.summary.max_forward_draws)) {
      draws.push_back(target.expand(posterior[i]));
    }
    out.envelopes = prediction_envelope(draws, problem.boundary, problem.simulation, config.categories,
                                        config.summary);
    write_envelope_csv(in_dir(dir, "envelope_time.csv"), out.envelopes.time, config.simulation.layer_interval);
    write_envelope_csv(in_dir(dir, "envelope_depth.csv"), out.envelopes.depth, config.simulation.depth_bin);
  }
  out.summary_json = in_dir(dir, "summary.json");
  write_summary_json(out.summary_json, out.summary);
  write_provenance(dir, config, "infer");

  log << "samples (post burn-in): " << posterior.size() << '\n'
      << "acceptance rate: " << format_double(out.result.acceptance_rate) << '\n';
  for (std::size_t k = 0; k < out.result.swaps_attempted.size(); ++k) {
    const auto att = out.result.swaps_attempted[k];
    log << "swap " << k << "<->" << k + 1 << ": "
        << format_double(att ? static_cast<double>(out.result.swaps_accepted[k]) / static_cast<double>(att) : 0.0)
        << '\n';
  }
  for (const auto& p : out.summary.parameters) {
    log << p.name << ": mean " << format_double(p.mean) << ", mode " << format_double(p.mode) << ", 90% ["
        << format_double(p.p5) << ", " << format_double(p.p95) << "]\n";
  }
  log << "runtime: " << format_double(out.result.runtime_seconds) << " s\n";
  return out;
}

SurfaceGrid cmd_surface(const RunConfig& config, const std::string& out_dir, std::ostream& log) {
  const std::string dir = prepare_dir(out_dir);
  const ObservedCore observed = load_observed_core(config);
  const SurfaceGrid grid = likelihood_surface(config.surface.param_a, config.surface.param_b, config.surface.grid_a,
                                              config.surface.grid_b, config.theta, observed, config.boundary,
                                              config.simulation, config.bounds, config.likelihood,
                                              config.summary.threads);
  write_surface_csv(in_dir(dir, "surface.csv"), grid);
  write_provenance(dir, config, "surface");
  Eigen::Index i = 0, j = 0;
  const double top = grid.log_likelihood.maxCoeff(&i, &j);
  log << "nodes: " << grid.nodes() << '\n'
      << "max log-likelihood " << format_double(top) << " at " << grid.name_a << " = "
      << format_double(grid.axis_a[static_cast<std::size_t>(i)]) << ", " << grid.name_b << " = "
      << format_double(grid.axis_b[static_cast<std::size_t>(j)]) << '\n';
  return grid;
}

PsrfReport compute_psrf(const std::vector<TraceTable>& traces) {
  if (traces.size() < 2) throw std::invalid_argument("psrf needs at least two trace files");
  PsrfReport r;
  r.names = traces.front().names;
  r.chains = traces.size();
  r.length = traces.front().iterates.size();
  for (const auto& t : traces) {
    if (t.names != r.names) throw IncompatibleTraces("trace files sample different parameter sets");
    r.length = std::min(r.length, t.iterates.size());
  }
  if (r.length < 10) throw IncompatibleTraces("traces need at least 10 post-burn-in iterates");
  for (std::size_t p = 0; p < r.names.size(); ++p) {
    std::vector<std::vector<double>> chains;
    for (const auto& t : traces) {
      std::vector<double> c(r.length);
      for (std::size_t i = 0; i < r.length; ++i) c[i] = t.iterates[i][p];
      chains.push_back(std::move(c));
    }
    r.values.push_back(psrf(chains));
  }
  return r;
}

PsrfReport cmd_psrf(const std::vector<std::string>& trace_paths, const std::string& out_dir, std::ostream& log) {
  std::vector<TraceTable> traces;
  for (const auto& p : trace_paths) traces.push_back(read_trace_csv(p));
  const PsrfReport report = compute_psrf(traces);
  write_psrf_json(in_dir(prepare_dir(out_dir), "psrf.json"), report);
  log << "chains: " << report.chains << ", iterates per chain: " << report.length << '\n';
  for (std::size_t p = 0; p < report.names.size(); ++p) {
    log << report.names[p] << '\t' << format_double(report.values[p]) << '\n';
  }
  return report;
}

void write_psrf_json(const std::string& path, const PsrfReport& report) {
  nlohmann::ordered_json j;
  j["chains"] = report.chains;
  j["length"] = report.length;
  nlohmann::ordered_json values = nlohmann::ordered_json::object();
  for (std::size_t p = 0; p < report.names.size(); ++p) values[report.names[p]] = report.values[p];
  j["psrf"] = values;
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace coralinv
