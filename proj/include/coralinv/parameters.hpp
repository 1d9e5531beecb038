#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "coralinv/forward_model.hpp"
#include "coralinv/rng.hpp"

namespace coralinv {

/// Full inversion vector: GLV block followed by one flow and one sediment
/// threshold 4-vector per assemblage.
///
/// Flat layout: [epsilon, alpha_m, alpha_s, flow_1 (4), ..., flow_K' (4),
/// sed_1 (4), ..., sed_K' (4)], so the dimension is 3 + 8 K'.
struct ParameterVector {
  GLVParams glv;
  std::vector<ThresholdCurve> flow_thresholds;
  std::vector<ThresholdCurve> sed_thresholds;

  std::size_t assemblages() const { return flow_thresholds.size(); }
  std::size_t dimension() const { return 3 + 8 * assemblages(); }

  std::vector<double> flatten() const;
  static ParameterVector unflatten(std::span<const double> flat, std::size_t assemblages);

  bool operator==(const ParameterVector&) const;
};

inline constexpr std::size_t kGlvCoordinates = 3;

inline std::size_t parameter_dimension(std::size_t assemblages) { return 3 + 8 * assemblages; }

/// Names: epsilon, alpha_m, alpha_s, flow.<assemblage>.<point>, sed.<assemblage>.<point>
/// (1-based assemblage and point indices).
std::vector<std::string> coordinate_names(std::size_t assemblages);
std::optional<std::size_t> coordinate_index(std::string_view name, std::size_t assemblages);

/// Flat index of the first coordinate of a threshold block, or nullopt for GLV.
std::optional<std::size_t> block_start(std::size_t flat_index, std::size_t assemblages);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
};

struct PriorBounds {
  Interval epsilon{0.0, 0.15};
  Interval alpha_main{-0.15, 0.0};
  Interval alpha_sub{-0.15, 0.0};
  Interval flow{0.0, kMaxFlow};
  Interval sediment{0.0, kMaxSediment};

  Interval coordinate(std::size_t flat_index, std::size_t assemblages) const;
};

/// Per-coordinate proposal standard deviations and adaptive floors.
struct StepSizes {
  std::vector<double> sigma;
  std::vector<double> floor;

  /// sigma = 1% of each prior width; floor = sigma / 10.
  static StepSizes defaults(std::size_t assemblages, const PriorBounds& bounds = {});
};

/// 0 inside the box with every threshold 4-vector ordered, -inf otherwise.
/// The ordered prior is constant on the admissible region.
double log_prior(const ParameterVector& theta, const PriorBounds& bounds = {});

/// Uniform draw on the admissible region (sorted uniforms per threshold block).
ParameterVector sample_prior(std::size_t assemblages, Rng& rng, const PriorBounds& bounds = {});

/// Selects which flat coordinates move. Empty means all.
using FreeMask = std::vector<bool>;

/// Deterministic core of the bi-level constrained step: adds `noise` to the
/// free coordinates, reverts out-of-bounds coordinates individually, then
/// sorts each threshold block. If fixed coordinates inside a block make the
/// sorted result unordered, that block's free coordinates revert.
ParameterVector apply_constrained_step(const ParameterVector& theta, std::span<const double> noise,
                                       const PriorBounds& bounds = {}, const FreeMask& free = {});

ParameterVector propose_constrained(const ParameterVector& theta, const StepSizes& steps, Rng& rng,
                                    const PriorBounds& bounds = {}, const FreeMask& free = {});

/// cov(history) + diag(floor^2) over the supplied GLV coordinates.
Eigen::MatrixXd adaptive_covariance(const std::vector<Eigen::VectorXd>& history,
                                    const Eigen::VectorXd& floor);

struct AdaptationSettings {
  bool enabled = false;
  std::size_t start_iteration = 500;
  std::size_t recompute_every = 50;
};

/// Adaptive random-walk proposal for the free GLV coordinates; the threshold
/// blocks keep the constrained proposal. Holds a running estimate of the
/// chain-history covariance, so each chain owns one instance.
class AdaptiveGlvProposal {
 public:
  AdaptiveGlvProposal(std::size_t assemblages, StepSizes steps, AdaptationSettings settings,
                      PriorBounds bounds = {}, FreeMask free = {});

  /// Appends the chain's current iterate to the history.
  void record(const ParameterVector& theta);

  ParameterVector propose(const ParameterVector& theta, Rng& rng);

  /// Covariance used for the next GLV draw (free GLV coordinates only).
  const Eigen::MatrixXd& current_covariance() const { return covariance_; }
  bool adapting() const;
  std::size_t history_size() const { return count_; }
  const std::vector<std::size_t>& glv_indices() const { return glv_indices_; }

 private:
  void refresh();

  std::size_t assemblages_;
  StepSizes steps_;
  AdaptationSettings settings_;
  PriorBounds bounds_;
  FreeMask free_;
  std::vector<std::size_t> glv_indices_;
  FreeMask threshold_free_;
  std::size_t count_ = 0;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd scatter_;
  Eigen::MatrixXd covariance_;
  Eigen::MatrixXd cholesky_;
};

}  // namespace coralinv
