#include "coralinv/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "coralinv/csv.hpp"
#include "coralinv/curve.hpp"

namespace coralinv {
namespace {

namespace pt = boost::property_tree;

class Section {
 public:
  Section(std::string name, const pt::ptree* tree) : name_(std::move(name)), tree_(tree) {}

  bool present() const { return tree_ != nullptr; }

  std::optional<std::string> raw(const std::string& key) const {
    if (!tree_) return std::nullopt;
    used_.insert(key);
    const auto it = tree_->find(key);
    if (it == tree_->not_found()) return std::nullopt;
    return it->second.data();
  }

  std::string require(const std::string& key) const {
    auto v = raw(key);
    if (!v) throw error(key, "missing required key");
    return *v;
  }

  double number(const std::string& key, double fallback) const {
    const auto v = raw(key);
    return v ? to_number(key, *v) : fallback;
  }

  std::size_t count(const std::string& key, std::size_t fallback) const {
    const auto v = raw(key);
    if (!v) return fallback;
    const double d = to_number(key, *v);
    if (d < 0.0 || d != std::floor(d)) throw error(key, "expected a non-negative integer, got '" + *v + "'");
    return static_cast<std::size_t>(d);
  }

  bool flag(const std::string& key, bool fallback) const {
    const auto v = raw(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "yes" || *v == "1" || *v == "on") return true;
    if (*v == "false" || *v == "no" || *v == "0" || *v == "off") return false;
    throw error(key, "expected true or false, got '" + *v + "'");
  }

  std::vector<double> numbers(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : list(key)) out.push_back(to_number(key, item));
    return out;
  }

  std::vector<std::string> list(const std::string& key) const {
    std::vector<std::string> out;
    const auto v = raw(key);
    if (!v) return out;
    for (auto& item : split_csv_line(*v)) {
      item = trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }

  ConfigError error(const std::string& key, const std::string& what) const {
    return ConfigError("[" + name_ + "] " + key + ": " + what);
  }

  void reject_unknown() const {
    if (!tree_) return;
    for (const auto& [key, value] : *tree_) {
      if (!used_.count(key)) throw error(key, "unknown key");
    }
  }

 private:
  double to_number(const std::string& key, const std::string& text) const {
    try {
      return parse_double(text, key);
    } catch (const ParseError&) {
      throw error(key, "expected a number, got '" + text + "'");
    }
  }

  std::string name_;
  const pt::ptree* tree_;
  mutable std::set<std::string> used_;
};

Section section(const pt::ptree& root, const std::string& name) {
  const auto it = root.find(name);
  return Section(name, it == root.not_found() ? nullptr : &it->second);
}

std::string resolve(const std::string& base_dir, const std::string& path) {
  const std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p.string();
  return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

ThresholdCurve threshold(const Section& s, const std::string& key) {
  const auto v = s.numbers(key);
  if (v.size() != 4) throw s.error(key, "expected four comma-separated values");
  ThresholdCurve c{{v[0], v[1], v[2], v[3]}};
  if (!c.is_ordered()) throw s.error(key, "threshold points must be non-decreasing");
  return c;
}

Interval interval(const Section& s, const std::string& key, Interval fallback) {
  if (!s.raw(key)) return fallback;
  const auto v = s.numbers(key);
  if (v.size() != 2 || !(v[0] < v[1])) throw s.error(key, "expected 'lo, hi' with lo < hi");
  return {v[0], v[1]};
}

PiecewiseLinearCurve curve(const Section& s, const std::string& key, const std::string& base_dir,
                           std::string& path_out) {
  path_out = resolve(base_dir, s.require(key));
  try {
    return read_curve_csv(path_out);
  } catch (const FileNotFound&) {
    throw;
  } catch (const std::exception& e) {
    throw s.error(key, e.what());
  }
}

SamplerConfig sampler_block(const Section& s) {
  SamplerConfig c;
  if (const auto m = s.raw("method")) {
    if (*m == "single") c.method = SamplerMethod::Single;
    else if (*m == "pt") c.method = SamplerMethod::ParallelTempering;
    else throw s.error("method", "expected 'single' or 'pt', got '" + *m + "'");
  }
  c.samples = s.count("samples", c.samples);
  if (c.samples == 0) throw s.error("samples", "must be >= 1");
  c.burn_in = s.number("burn_in", c.burn_in);
  if (!(c.burn_in >= 0.0 && c.burn_in < 1.0)) throw s.error("burn_in", "must lie in [0, 1)");
  c.replicas = s.count("replicas", c.replicas);
  c.beta_max = s.number("beta_max", c.beta_max);
  c.ladder = s.numbers("ladder");
  const double seed = s.number("seed", static_cast<double>(c.seed));
  if (seed < 0.0 || seed != std::floor(seed)) throw s.error("seed", "expected a non-negative integer");
  c.seed = static_cast<std::uint64_t>(seed);
  if (const auto b = s.raw("budget")) {
    if (*b == "per_replica") c.budget = BudgetConvention::PerReplica;
    else if (*b == "total") c.budget = BudgetConvention::Total;
    else throw s.error("budget", "expected 'per_replica' or 'total', got '" + *b + "'");
  }
  c.sequential = s.flag("sequential", c.sequential);
  c.max_initial_draws = s.count("max_initial_draws", c.max_initial_draws);
  if (c.method == SamplerMethod::ParallelTempering) {
    try {
      (void)c.temperature_ladder();
    } catch (const std::invalid_argument& e) {
      throw s.error(c.ladder.empty() ? "replicas" : "ladder", e.what());
    }
  }
  return c;
}

std::vector<double> grid_axis(const Section& s, const std::string& key, std::vector<double> fallback) {
  if (!s.raw(key)) return fallback;
  const auto v = s.numbers(key);
  if (v.size() != 3 || v[2] < 1.0 || v[2] != std::floor(v[2]) || !(v[0] <= v[1])) {
    throw s.error(key, "expected 'lo, hi, count'");
  }
  return linspace(v[0], v[1], static_cast<std::size_t>(v[2]));
}

}  // namespace

TemperatureLadder SamplerConfig::temperature_ladder() const {
  if (method == SamplerMethod::Single) return TemperatureLadder({1.0});
  if (!ladder.empty()) return TemperatureLadder(ladder);
  return TemperatureLadder::geometric(replicas, beta_max);
}

SamplerSettings SamplerConfig::settings() const {
  SamplerSettings s;
  s.n_samples = samples;
  s.burn_in_fraction = burn_in;
  s.seed = seed;
  s.max_initial_draws = max_initial_draws;
  s.sequential = sequential;
  s.budget = budget;
  return s;
}

FreeMask resolve_free_mask(const std::vector<std::string>& tokens, std::size_t assemblages) {
  const auto names = coordinate_names(assemblages);
  FreeMask mask(names.size(), false);
  for (const auto& token : tokens) {
    bool matched = false;
    for (std::size_t i = 0; i < names.size(); ++i) {
      const std::string& n = names[i];
      bool hit = false;
      if (token == "all") hit = true;
      else if (token == "glv") hit = i < kGlvCoordinates;
      else if (token == "thresholds") hit = i >= kGlvCoordinates;
      else if (token == "flow" || token == "sed") hit = n.rfind(token + ".", 0) == 0;
      else if (!token.empty() && token.back() == '*') hit = n.rfind(token.substr(0, token.size() - 1), 0) == 0;
      else hit = n == token;
      if (hit) {
        mask[i] = true;
        matched = true;
      }
    }
    if (!matched) throw ConfigError("[free] parameters: unknown parameter '" + token + "'");
  }
  return mask;
}

RunConfig parse_run_config(const std::string& text, const std::string& base_dir, const std::string& source) {
  pt::ptree root;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(source + ":" + std::to_string(e.line()) + ": " + e.message());
  }

  RunConfig c;
  c.source = source;
  c.text = text;

  std::set<std::string> assemblage_sections;
  for (const auto& [name, tree] : root) {
    if (tree.empty() && !tree.data().empty()) {
      throw ConfigError(source + ": key '" + name + "' appears outside any section");
    }
    static const std::set<std::string> known{"boundary", "simulation", "glv",     "priors",  "steps",
                                             "adaptation", "free",     "observation", "sampler", "surface",
                                             "summary"};
    if (name.rfind("assemblage:", 0) == 0) {
      assemblage_sections.insert(name);
    } else if (!known.count(name)) {
      throw ConfigError(source + ": unknown section [" + name + "]");
    }
  }

  // [simulation]
  const Section sim = section(root, "simulation");
  SimulationConfig& cfg = c.simulation;
  cfg.t_start = sim.number("t_start", cfg.t_start);
  cfg.t_end = sim.number("t_end", cfg.t_end);
  cfg.layer_interval = sim.number("layer_interval", cfg.layer_interval);
  cfg.initial_depth = sim.number("initial_depth", cfg.initial_depth);
  cfg.seed_population = sim.number("seed_population", cfg.seed_population);
  cfg.depth_bin = sim.number("depth_bin", cfg.depth_bin);
  cfg.ode_tolerance = sim.number("ode_tolerance", cfg.ode_tolerance);
  cfg.ode_safety = sim.number("ode_safety", cfg.ode_safety);
  sim.reject_unknown();

  // [assemblage:<name>] in file order
  for (const auto& [name, tree] : root) {
    if (!assemblage_sections.count(name)) continue;
    const Section a(name, &tree);
    AssemblageSpec spec;
    spec.name = name.substr(std::string("assemblage:").size());
    if (spec.name.empty()) throw ConfigError(source + ": assemblage section without a name");
    spec.max_va_rate = a.number("max_va_rate", 0.0);
    if (!(spec.max_va_rate > 0.0)) throw a.error("max_va_rate", "required and must be > 0");
    spec.flow_threshold = threshold(a, "flow");
    spec.sed_threshold = threshold(a, "sediment");
    spec.depth_threshold = threshold(a, "depth");
    a.reject_unknown();
    cfg.assemblages.push_back(spec);
  }
  if (cfg.assemblages.empty()) throw ConfigError(source + ": no [assemblage:<name>] sections");
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("[simulation] ") + e.what());
  }
  const std::size_t k = cfg.assemblages.size();

  // [boundary]
  const Section bnd = section(root, "boundary");
  if (!bnd.present()) throw ConfigError(source + ": missing [boundary] section");
  c.boundary.sea_level = curve(bnd, "sea_level", base_dir, c.sea_level_path);
  c.boundary.flow_vs_depth = curve(bnd, "flow", base_dir, c.flow_path);
  c.boundary.sed_vs_depth = curve(bnd, "sediment", base_dir, c.sediment_path);
  bnd.reject_unknown();
  try {
    c.boundary.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("[boundary] ") + e.what());
  }

  // [priors]
  const Section pri = section(root, "priors");
  c.bounds.epsilon = interval(pri, "epsilon", c.bounds.epsilon);
  c.bounds.alpha_main = interval(pri, "alpha_m", c.bounds.alpha_main);
  c.bounds.alpha_sub = interval(pri, "alpha_s", c.bounds.alpha_sub);
  c.bounds.flow = interval(pri, "flow", c.bounds.flow);
  c.bounds.sediment = interval(pri, "sediment", c.bounds.sediment);
  pri.reject_unknown();

  // [glv] and thresholds form the full parameter vector.
  const Section glv = section(root, "glv");
  c.theta.glv.epsilon = glv.number("epsilon", 0.08);
  c.theta.glv.alpha_main = glv.number("alpha_m", -0.01);
  c.theta.glv.alpha_sub = glv.number("alpha_s", -0.03);
  glv.reject_unknown();
  for (const auto& a : cfg.assemblages) {
    c.theta.flow_thresholds.push_back(a.flow_threshold);
    c.theta.sed_thresholds.push_back(a.sed_threshold);
  }
  {
    const auto flat = c.theta.flatten();
    const auto names = coordinate_names(k);
    for (std::size_t i = 0; i < flat.size(); ++i) {
      if (!c.bounds.coordinate(i, k).contains(flat[i])) {
        throw ConfigError("parameter " + names[i] + " = " + format_double(flat[i]) +
                          " lies outside its prior bounds");
      }
    }
  }

  // [steps]
  const Section stp = section(root, "steps");
  c.steps = StepSizes::defaults(k, c.bounds);
  {
    const double floor_ratio = stp.number("floor_ratio", 0.1);
    if (!(floor_ratio > 0.0)) throw stp.error("floor_ratio", "must be > 0");
    const auto names = coordinate_names(k);
    for (std::size_t i = 0; i < names.size(); ++i) {
      std::string key = names[i];
      if (i >= kGlvCoordinates) key = key.substr(0, key.find('.'));
      if (key == "sed") key = "sediment";
      const double sigma = stp.number(key, c.steps.sigma[i]);
      if (!(sigma > 0.0)) throw stp.error(key, "step size must be > 0");
      c.steps.sigma[i] = sigma;
      c.steps.floor[i] = sigma * floor_ratio;
    }
  }
  stp.reject_unknown();

  // [adaptation]
  const Section ada = section(root, "adaptation");
  c.adaptation.enabled = ada.flag("enabled", c.adaptation.enabled);
  c.adaptation.start_iteration = ada.count("start", c.adaptation.start_iteration);
  c.adaptation.recompute_every = ada.count("every", c.adaptation.recompute_every);
  if (c.adaptation.recompute_every == 0) throw ada.error("every", "must be >= 1");
  ada.reject_unknown();

  // [free]
  const Section fr = section(root, "free");
  c.free_names = fr.list("parameters");
  if (!c.free_names.empty()) c.free = resolve_free_mask(c.free_names, k);
  fr.reject_unknown();

  // [observation]
  const Section obs = section(root, "observation");
  if (const auto p = obs.raw("core")) c.observed_path = resolve(base_dir, *p);
  if (const auto s = obs.raw("structure")) {
    try {
      c.structure = parse_structure(*s);
    } catch (const std::invalid_argument&) {
      throw obs.error("structure", "expected 'time' or 'depth', got '" + *s + "'");
    }
  }
  c.observed_bin = obs.number("bin_size", c.structure == Structure::Time ? cfg.layer_interval : cfg.depth_bin);
  if (!(c.observed_bin > 0.0)) throw obs.error("bin_size", "must be > 0");
  if (c.structure == Structure::Time && std::abs(c.observed_bin - cfg.layer_interval) > 1e-9) {
    throw obs.error("bin_size", "time-structured cores must use the layer interval");
  }
  c.categories = obs.list("categories");
  if (c.categories.empty()) {
    for (const auto& a : cfg.assemblages) c.categories.push_back(a.name);
    c.categories.emplace_back("sediment");
  } else if (c.categories.size() != cfg.categories()) {
    throw obs.error("categories", "expected " + std::to_string(cfg.categories()) +
                                      " labels (assemblages in order, then sediment)");
  }
  c.likelihood.floor = obs.number("floor", c.likelihood.floor);
  if (!(c.likelihood.floor > 0.0)) throw obs.error("floor", "must be > 0");
  obs.reject_unknown();

  const Section smp = section(root, "sampler");
  c.sampler = sampler_block(smp);
  smp.reject_unknown();

  // [surface]
  const Section sur = section(root, "surface");
  if (const auto a = sur.raw("param_a")) c.surface.param_a = *a;
  if (const auto b = sur.raw("param_b")) c.surface.param_b = *b;
  for (const auto& key : {"param_a", "param_b"}) {
    const std::string& name = std::string(key) == "param_a" ? c.surface.param_a : c.surface.param_b;
    if (!coordinate_index(name, k)) throw sur.error(key, "unknown parameter '" + name + "'");
  }
  c.surface.grid_a = grid_axis(sur, "grid_a", c.surface.grid_a);
  c.surface.grid_b = grid_axis(sur, "grid_b", c.surface.grid_b);
  sur.reject_unknown();

  // [summary]
  const Section sum = section(root, "summary");
  c.summary.max_forward_draws = sum.count("forward_draws", c.summary.max_forward_draws);
  c.summary.threads = sum.count("threads", c.summary.threads);
  sum.reject_unknown();

  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFound("config file not found: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string dir = std::filesystem::path(path).parent_path().string();
  return parse_run_config(buffer.str(), dir, path);
}

ObservedCore load_observed_core(const RunConfig& config) {
  if (config.observed_path.empty()) throw ConfigError("[observation] core: missing required key");
  if (config.structure == Structure::Time) {
    return read_time_core_csv(config.observed_path, config.categories, config.simulation.layer_interval);
  }
  return read_depth_core_csv(config.observed_path, config.categories, config.observed_bin);
}

ReefProblem make_problem(const RunConfig& config, ObservedCore observed) {
  if (config.free.empty() || std::none_of(config.free.begin(), config.free.end(), [](bool b) { return b; })) {
    throw ConfigError("[free] parameters: at least one free parameter is required");
  }
  ReefProblem p;
  p.observed = std::move(observed);
  p.boundary = config.boundary;
  p.simulation = config.simulation;
  p.reference = config.theta;
  p.free = config.free;
  p.bounds = config.bounds;
  p.steps = config.steps;
  p.adaptation = config.adaptation;
  p.likelihood = config.likelihood;
  return p;
}

}  // namespace coralinv
