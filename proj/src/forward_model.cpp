#include "coralinv/forward_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "coralinv/parameters.hpp"

namespace coralinv {

bool ThresholdCurve::is_ordered() const {
  return points[0] <= points[1] && points[1] <= points[2] && points[2] <= points[3];
}

bool ThresholdCurve::within(double lo, double hi) const {
  return std::all_of(points.begin(), points.end(), [&](double p) { return p >= lo && p <= hi; });
}

double eval_threshold(const ThresholdCurve& curve, double x) {
  const auto& [f1, f2, f3, f4] = curve.points;
  if (x >= f2 && x <= f3) return 1.0;
  if (x <= f1 || x >= f4) return 0.0;
  if (x < f2) return (x - f1) / (f2 - f1);
  return (f4 - x) / (f4 - f3);
}

double environment_factor(const AssemblageSpec& spec, double depth, double flow, double sed) {
  return std::min({eval_threshold(spec.depth_threshold, depth),
                   eval_threshold(spec.sed_threshold, sed),
                   eval_threshold(spec.flow_threshold, flow)});
}

Eigen::MatrixXd expand_aim(const GLVParams& glv, Eigen::Index assemblages) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(assemblages, assemblages);
  for (Eigen::Index i = 0; i < assemblages; ++i) {
    a(i, i) = glv.alpha_main;
    if (i + 1 < assemblages) {
      a(i, i + 1) = glv.alpha_sub;
      a(i + 1, i) = glv.alpha_sub;
    }
  }
  return a;
}

Eigen::VectorXd glv_derivative(const Eigen::VectorXd& populations,
                               const Eigen::VectorXd& effective_rates,
                               const Eigen::MatrixXd& interaction) {
  return populations.cwiseProduct(effective_rates + interaction * populations);
}

void BoundaryConditions::validate() const {
  if (sea_level.empty() || flow_vs_depth.empty() || sed_vs_depth.empty()) {
    throw std::invalid_argument("boundary conditions: all three curves are required");
  }
  if (flow_vs_depth.min_value() < 0.0 || flow_vs_depth.max_value() > kMaxFlow) {
    throw std::invalid_argument("boundary conditions: flow velocity outside [0, 0.3] m/s");
  }
  if (!flow_vs_depth.is_non_increasing()) {
    throw std::invalid_argument("boundary conditions: flow must not increase with depth");
  }
  if (sed_vs_depth.min_value() < 0.0 || sed_vs_depth.max_value() > kMaxSediment) {
    throw std::invalid_argument("boundary conditions: sediment input outside [0, 0.005] m/kyr");
  }
  if (!sed_vs_depth.is_non_decreasing()) {
    throw std::invalid_argument("boundary conditions: sediment input must not decrease with depth");
  }
}

std::size_t SimulationConfig::time_steps() const {
  return static_cast<std::size_t>(std::llround((t_start - t_end) / layer_interval));
}

void SimulationConfig::validate() const {
  if (!(layer_interval > 0.0)) throw std::invalid_argument("simulation: layer_interval must be > 0");
  if (!(t_start > t_end)) throw std::invalid_argument("simulation: t_start must exceed t_end");
  const double steps = (t_start - t_end) / layer_interval;
  if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps)) {
    throw std::invalid_argument("simulation: time span is not a multiple of layer_interval");
  }
  if (!(initial_depth > 0.0)) throw std::invalid_argument("simulation: initial_depth must be > 0");
  if (assemblages.empty()) throw std::invalid_argument("simulation: no assemblages configured");
  if (!(seed_population > 0.0)) throw std::invalid_argument("simulation: seed_population must be > 0");
  if (!(depth_bin > 0.0)) throw std::invalid_argument("simulation: depth_bin must be > 0");
  for (const auto& a : assemblages) {
    if (!(a.max_va_rate > 0.0)) {
      throw std::invalid_argument("assemblage " + a.name + ": max_va_rate must be > 0");
    }
    if (!a.depth_threshold.is_ordered()) {
      throw std::invalid_argument("assemblage " + a.name + ": depth threshold is not ordered");
    }
  }
}

double CoreRecord::total_thickness() const {
  double sum = 0.0;
  for (double h : layer_thickness) sum += h;
  return sum;
}

int argmax_category(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  Eigen::Index best = 0;
  row.maxCoeff(&best);
  return static_cast<int>(best);
}

DepthStructure compute_depth_structure(const CoreRecord& core, double bin_thickness) {
  const Eigen::Index k = core.proportions.cols();
  const double total = core.total_thickness();
  const auto bins = total <= 0.0
                        ? Eigen::Index{0}
                        : static_cast<Eigen::Index>(std::ceil(total / bin_thickness - 1e-9));
  Eigen::MatrixXd thickness = Eigen::MatrixXd::Zero(bins, k);
  double base = 0.0;
  for (Eigen::Index t = 0; t < core.proportions.rows(); ++t) {
    const double h = core.layer_thickness[static_cast<std::size_t>(t)];
    if (h <= 0.0) continue;
    const double top = base + h;
    auto b = static_cast<Eigen::Index>(std::floor(base / bin_thickness));
    while (b < bins) {
      const double lo = std::max(base, static_cast<double>(b) * bin_thickness);
      const double hi = std::min(top, static_cast<double>(b + 1) * bin_thickness);
      if (hi <= lo) break;
      thickness.row(b) += (hi - lo) * core.proportions.row(t);
      ++b;
    }
    base = top;
  }
  DepthStructure out;
  out.proportions.resize(bins, k);
  out.labels.assign(static_cast<std::size_t>(bins), 0);
  for (Eigen::Index b = 0; b < bins; ++b) {
    const double s = thickness.row(b).sum();
    if (s > 0.0) {
      out.proportions.row(b) = thickness.row(b) / s;
    } else {
      out.proportions.row(b).setZero();
      out.proportions(b, k - 1) = 1.0;
    }
    out.labels[static_cast<std::size_t>(b)] = argmax_category(out.proportions.row(b));
  }
  return out;
}

void build_depth_structure(CoreRecord& core, double bin_thickness) {
  DepthStructure d = compute_depth_structure(core, bin_thickness);
  core.depth_bin = bin_thickness;
  core.depth_proportions = std::move(d.proportions);
  core.depth_labels = std::move(d.labels);
}

CoreRecord simulate(const ParameterVector& theta, const BoundaryConditions& bc,
                    const SimulationConfig& cfg) {
  const auto n_species = static_cast<Eigen::Index>(cfg.assemblages.size());
  const auto n_cat = n_species + 1;
  const auto steps = static_cast<Eigen::Index>(cfg.time_steps());
  const double dt = cfg.layer_interval;

  std::vector<AssemblageSpec> specs = cfg.assemblages;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    specs[i].flow_threshold = theta.flow_thresholds.at(i);
    specs[i].sed_threshold = theta.sed_thresholds.at(i);
  }
  const Eigen::MatrixXd interaction = expand_aim(theta.glv, n_species);
  const double epsilon = theta.glv.epsilon;
  // Single-species carrying capacity under optimal conditions.
  const double capacity =
      theta.glv.alpha_main < 0.0 ? epsilon / -theta.glv.alpha_main : std::numeric_limits<double>::infinity();

  Rkf45Options ode;
  ode.tolerance = cfg.ode_tolerance;
  ode.safety = cfg.ode_safety;
  ode.min_step = dt / 1e4;

  CoreRecord core;
  core.proportions = Eigen::MatrixXd::Zero(steps, n_cat);
  core.accretion = Eigen::MatrixXd::Zero(steps, n_cat);
  core.populations = Eigen::MatrixXd::Zero(steps, n_species);
  core.time_labels.assign(static_cast<std::size_t>(steps), 0);
  core.layer_thickness.assign(static_cast<std::size_t>(steps), 0.0);
  core.water_depth.assign(static_cast<std::size_t>(steps), 0.0);

  Eigen::VectorXd pop = Eigen::VectorXd::Zero(n_species);
  Eigen::VectorXd factor(n_species);
  Eigen::VectorXd rates(n_species);
  double elevation = bc.sea_level(cfg.t_start) - cfg.initial_depth;
  double next_dt = dt;

  for (Eigen::Index t = 0; t < steps; ++t) {
    const double age = cfg.t_start - static_cast<double>(t) * dt;
    const double depth = bc.sea_level(age) - elevation;
    const double flow = bc.flow_vs_depth(std::max(depth, 0.0));
    const double sed = bc.sed_vs_depth(std::max(depth, 0.0));
    core.water_depth[static_cast<std::size_t>(t)] = depth;

    for (Eigen::Index i = 0; i < n_species; ++i) {
      factor(i) = environment_factor(specs[static_cast<std::size_t>(i)], depth, flow, sed);
      // Any habitable assemblage below the seed level is recolonised.
      if (factor(i) > 0.0 && pop(i) < cfg.seed_population) pop(i) = cfg.seed_population;
    }
    rates = epsilon * factor;

    const Eigen::VectorXd start = pop;
    const DerivativeFn rhs = [&](double, const Eigen::VectorXd& p, Eigen::VectorXd& dp) {
      dp = glv_derivative(p, rates, interaction);
    };
    try {
      auto result = rkf45_integrate(pop, 0.0, dt, next_dt, rhs, ode);
      pop = std::move(result.state);
      next_dt = std::min(result.next_step, dt);
    } catch (const StepUnderflow&) {
      throw SimulationError(SimulationError::Kind::StepUnderflow,
                            "population dynamics too stiff at step " + std::to_string(t));
    }
    if (!pop.allFinite()) {
      throw SimulationError(SimulationError::Kind::NonFiniteState,
                            "non-finite population at step " + std::to_string(t));
    }
    core.populations.row(t) = pop.transpose();

    Eigen::RowVectorXd deposit = Eigen::RowVectorXd::Zero(n_cat);
    if (depth > 0.0) {
      for (Eigen::Index i = 0; i < n_species; ++i) {
        if (factor(i) <= 0.0 || !(capacity > 0.0) || std::isinf(capacity)) continue;
        const double mean_pop = 0.5 * (start(i) + pop(i));
        const double saturation = std::min(1.0, mean_pop / capacity);
        deposit(i) = specs[static_cast<std::size_t>(i)].max_va_rate * factor(i) * saturation * dt / 1000.0;
      }
      double coral = deposit.head(n_species).sum();
      if (coral > depth) {
        deposit.head(n_species) *= depth / coral;
        coral = depth;
      }
      if ((factor.array() <= 0.0).all()) deposit(n_species) = std::min(sed * dt / 1000.0, depth);
    }

    const double total = deposit.sum();
    core.accretion.row(t) = deposit;
    core.layer_thickness[static_cast<std::size_t>(t)] = total;
    if (total > 0.0) {
      core.proportions.row(t) = deposit / total;
    } else {
      core.proportions(t, n_species) = 1.0;
    }
    core.time_labels[static_cast<std::size_t>(t)] = argmax_category(core.proportions.row(t));
    elevation += total;
  }

  build_depth_structure(core, cfg.depth_bin);
  return core;
}

}  // namespace coralinv
