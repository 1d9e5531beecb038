#pragma once

#include <string>
#include <vector>

#include "coralinv/forward_model.hpp"
#include "coralinv/parameters.hpp"

namespace coralinv {

/// Three-assemblage exposed-margin setup (shallow, moderate-deep, deep) with
/// an 8.5 kyr run at 50 yr layers starting 30 m below sea level.
SimulationConfig reference_simulation();

/// Generating parameters of the reference synthetic core:
/// epsilon 0.08, alpha_m -0.01, alpha_s -0.03 and the default reference thresholds.
ParameterVector reference_parameters();

/// Mid-Holocene sea level (highstand of 1.8 m at 4 ka), exponential flow
/// decay (0.3 m/s at the surface, 0.04 m/s at 30 m) and a sediment input that
/// rises with depth up to 0.005 m/kyr.
BoundaryConditions default_boundary_conditions();

/// Six assemblages (windward and leeward shallow/moderate/deep) for real-core
/// style runs with 51 parameters.
SimulationConfig six_assemblage_simulation();
ParameterVector six_assemblage_parameters();

std::vector<std::string> category_names(const SimulationConfig& cfg);

}  // namespace coralinv
