#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "coralinv/curve.hpp"
#include "coralinv/ode.hpp"

namespace coralinv {

/// Four ordered critical points of a trapezoidal exposure-response function.
/// Growth is zero outside (f1, f4), full on [f2, f3], linear in between.
struct ThresholdCurve {
  std::array<double, 4> points{};

  bool is_ordered() const;
  bool within(double lo, double hi) const;
};

/// Growth factor in [0, 1]. Coincident points produce steps; the optimal
/// window [f2, f3] takes precedence at the shared boundary.
double eval_threshold(const ThresholdCurve& curve, double x);

struct AssemblageSpec {
  std::string name;
  double max_va_rate = 0.0;  // m/kyr
  ThresholdCurve flow_threshold;
  ThresholdCurve sed_threshold;
  ThresholdCurve depth_threshold;
};

/// min over the depth, sediment and flow factors.
double environment_factor(const AssemblageSpec& spec, double depth, double flow, double sed);

struct GLVParams {
  double epsilon = 0.0;
  double alpha_main = 0.0;
  double alpha_sub = 0.0;
};

/// Tridiagonal interaction matrix: alpha_main on the diagonal, alpha_sub on
/// the first super- and sub-diagonals.
Eigen::MatrixXd expand_aim(const GLVParams& glv, Eigen::Index assemblages);

/// dP_i/dt = r_i P_i + P_i sum_j A_ij P_j.
Eigen::VectorXd glv_derivative(const Eigen::VectorXd& populations,
                               const Eigen::VectorXd& effective_rates,
                               const Eigen::MatrixXd& interaction);

/// Global bounds of the environmental stressors.
inline constexpr double kMaxFlow = 0.3;       // m/s
inline constexpr double kMaxSediment = 0.005;  // m/kyr

struct BoundaryConditions {
  PiecewiseLinearCurve sea_level;      // m relative to present, vs yr before present
  PiecewiseLinearCurve flow_vs_depth;  // m/s vs m
  PiecewiseLinearCurve sed_vs_depth;   // m/kyr vs m

  /// Throws std::invalid_argument when a curve breaks its range or monotonicity.
  void validate() const;
};

struct SimulationConfig {
  double t_start = 8500.0;  // yr before present
  double t_end = 0.0;
  double layer_interval = 50.0;  // yr
  double initial_depth = 30.0;   // m below sea level
  std::vector<AssemblageSpec> assemblages;
  double seed_population = 1e-3;
  double depth_bin = 0.1;  // m
  double ode_tolerance = 1e-7;
  double ode_safety = 0.9;

  std::size_t time_steps() const;
  std::size_t categories() const { return assemblages.size() + 1; }
  std::size_t sediment_category() const { return assemblages.size(); }
  void validate() const;
};

/// Simulated drill core. Category index k < K' is an assemblage; the last
/// category is sediment.
struct CoreRecord {
  Eigen::MatrixXd proportions;        // T x K, rows sum to 1
  Eigen::MatrixXd accretion;          // T x K, metres deposited per step
  Eigen::MatrixXd populations;        // T x K', end-of-step populations
  Eigen::MatrixXd depth_proportions;  // D x K, thickness share per depth bin
  std::vector<int> time_labels;       // length T
  std::vector<int> depth_labels;      // length D, index 0 is the core base
  std::vector<double> layer_thickness;  // metres per step
  std::vector<double> water_depth;      // water depth at the start of each step
  double depth_bin = 0.1;

  std::size_t time_steps() const { return time_labels.size(); }
  std::size_t depth_bins() const { return depth_labels.size(); }
  double total_thickness() const;
};

class SimulationError : public std::runtime_error {
 public:
  enum class Kind { StepUnderflow, NonFiniteState };
  SimulationError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct ParameterVector;

/// Runs the 1-D stratigraphic model. Throws SimulationError when the
/// population dynamics cannot be integrated.
CoreRecord simulate(const ParameterVector& theta, const BoundaryConditions& bc,
                    const SimulationConfig& cfg);

struct DepthStructure {
  Eigen::MatrixXd proportions;  // D x K
  std::vector<int> labels;      // index 0 is the core base
};

/// Slices the accumulated per-step deposits into fixed-thickness bins from
/// the base upward; each bin is labelled by the category contributing the
/// most thickness. A partial top bin is kept.
DepthStructure compute_depth_structure(const CoreRecord& core, double bin_thickness);

/// Stores compute_depth_structure(core, bin_thickness) into the record.
void build_depth_structure(CoreRecord& core, double bin_thickness);

int argmax_category(const Eigen::Ref<const Eigen::RowVectorXd>& row);

}  // namespace coralinv
