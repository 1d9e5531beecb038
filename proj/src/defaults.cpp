#include "coralinv/defaults.hpp"

#include <cmath>

namespace coralinv {
namespace {

AssemblageSpec make_assemblage(std::string name, double va, ThresholdCurve flow, ThresholdCurve sed,
                               ThresholdCurve depth) {
  return {std::move(name), va, flow, sed, depth};
}

}  // namespace

SimulationConfig reference_simulation() {
  SimulationConfig cfg;
  cfg.t_start = 8500.0;
  cfg.t_end = 0.0;
  cfg.layer_interval = 50.0;
  cfg.initial_depth = 30.0;
  cfg.assemblages = {
      make_assemblage("shallow", 11.0, {{0.055, 0.082, 0.259, 0.288}}, {{0.0009, 0.0015, 0.0016, 0.0017}},
                      {{0.0, 0.5, 10.0, 15.0}}),
      make_assemblage("moderate_deep", 12.0, {{0.008, 0.051, 0.172, 0.185}},
                      {{0.0015, 0.0017, 0.0028, 0.0031}}, {{3.0, 6.0, 30.0, 40.0}}),
      make_assemblage("deep", 9.0, {{0.0, 0.0, 0.058, 0.066}}, {{0.0023, 0.0024, 0.0027, 0.0043}},
                      {{15.0, 20.0, 60.0, 80.0}}),
  };
  return cfg;
}

ParameterVector reference_parameters() {
  const SimulationConfig cfg = reference_simulation();
  ParameterVector theta;
  theta.glv = {0.08, -0.01, -0.03};
  for (const auto& a : cfg.assemblages) {
    theta.flow_thresholds.push_back(a.flow_threshold);
    theta.sed_thresholds.push_back(a.sed_threshold);
  }
  return theta;
}

BoundaryConditions default_boundary_conditions() {
  BoundaryConditions bc;
  bc.sea_level = PiecewiseLinearCurve({0.0, 4000.0, 8500.0}, {0.0, 1.8, -5.0});

  std::vector<double> depth, flow;
  const double decay = std::log(0.3 / 0.04) / 30.0;
  for (int d = 0; d <= 100; ++d) {
    depth.push_back(d);
    flow.push_back(0.3 * std::exp(-decay * d));
  }
  bc.flow_vs_depth = PiecewiseLinearCurve(depth, flow);
  bc.sed_vs_depth = PiecewiseLinearCurve({0.0, 6.0, 18.0, 30.0, 50.0, 100.0},
                                         {0.0010, 0.0016, 0.0024, 0.0030, 0.0040, 0.0050});
  return bc;
}

SimulationConfig six_assemblage_simulation() {
  SimulationConfig cfg = reference_simulation();
  const auto base = cfg.assemblages;
  cfg.assemblages.clear();
  for (const auto& a : base) {
    AssemblageSpec windward = a;
    windward.name = a.name + "_windward";
    cfg.assemblages.push_back(windward);
  }
  for (const auto& a : base) {
    // Leeward assemblages tolerate calmer water and slightly more sediment.
    AssemblageSpec leeward = a;
    leeward.name = a.name + "_leeward";
    for (auto& p : leeward.flow_threshold.points) p *= 0.8;
    for (auto& p : leeward.sed_threshold.points) p = std::min(p * 1.1, kMaxSediment);
    leeward.max_va_rate = a.max_va_rate * 0.9;
    cfg.assemblages.push_back(leeward);
  }
  return cfg;
}

ParameterVector six_assemblage_parameters() {
  const SimulationConfig cfg = six_assemblage_simulation();
  ParameterVector theta;
  theta.glv = {0.08, -0.01, -0.03};
  for (const auto& a : cfg.assemblages) {
    theta.flow_thresholds.push_back(a.flow_threshold);
    theta.sed_thresholds.push_back(a.sed_threshold);
  }
  return theta;
}

std::vector<std::string> category_names(const SimulationConfig& cfg) {
  std::vector<std::string> names;
  for (const auto& a : cfg.assemblages) names.push_back(a.name);
  names.emplace_back("sediment");
  return names;
}

}  // namespace coralinv
