#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "coralinv/forward_model.hpp"
#include "coralinv/observation.hpp"
#include "coralinv/parameters.hpp"

namespace coralinv {

class DegenerateChains : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Gelman-Rubin potential scale reduction factor for one parameter.
/// Chains must have equal length >= 10.
double psrf(const std::vector<std::vector<double>>& chains);

/// Linear-interpolated percentile, q in [0, 100].
double percentile(std::vector<double> values, double q);

/// Centre of the fullest histogram bin with Freedman-Diaconis width. With a
/// zero interquartile range the most frequent value is returned.
double histogram_mode(std::span<const double> values);

/// Freedman-Diaconis bin width; zero when the interquartile range vanishes.
double freedman_diaconis_width(std::span<const double> values);

struct ParameterSummary {
  std::string name;
  double mean = 0.0;
  double mode = 0.0;
  double p5 = 0.0;
  double p95 = 0.0;
};

struct PosteriorSummary {
  std::vector<ParameterSummary> parameters;
  std::size_t samples = 0;
  double acceptance_rate = 0.0;
  double mc_mean = 0.0;
  double mc_std = 0.0;
  std::size_t mc_draws = 0;  // forward re-simulations that produced a score
  std::optional<std::size_t> mean_prediction_mc;  // score of the prediction at the posterior mean
};

struct SummaryOptions {
  std::size_t max_forward_draws = 500;  // thinning cap for re-simulation
  std::size_t threads = 0;              // 0 = hardware concurrency
};

/// Misclassification score of one iterate, or nullopt when its forward model
/// fails.
using ScoreFn = std::function<std::optional<std::size_t>(std::span<const double>)>;

PosteriorSummary summarize(const std::vector<std::vector<double>>& iterates,
                           const std::vector<std::string>& names, double acceptance_rate,
                           const ScoreFn& score, const SummaryOptions& options = {});

/// Evenly spaced indices selecting at most `cap` of `n` items.
std::vector<std::size_t> thinned_indices(std::size_t n, std::size_t cap);

struct PredictionEnvelope {
  Structure structure = Structure::Time;
  std::vector<std::string> categories;
  Eigen::MatrixXd frequencies;  // indices x K, rows sum to 1
  std::vector<double> p5;       // ordinal category index
  std::vector<double> p95;
  std::vector<double> mean;
  std::size_t draws = 0;

  std::size_t size() const { return p5.size(); }
  /// Whether a label lies inside the 5-95 band at index i.
  bool contains(std::size_t i, int label) const;
};

struct Envelopes {
  PredictionEnvelope time;
  PredictionEnvelope depth;  // index 0 is the core base, padded with sediment
};

/// Posterior-predictive label frequencies and 5/95 bands for both structures.
Envelopes prediction_envelope(const std::vector<ParameterVector>& draws, const BoundaryConditions& bc,
                              const SimulationConfig& cfg, const std::vector<std::string>& categories,
                              const SummaryOptions& options = {});

struct SurfaceGrid {
  std::string name_a;
  std::string name_b;
  std::vector<double> axis_a;
  std::vector<double> axis_b;
  Eigen::MatrixXd log_likelihood;  // |axis_a| x |axis_b|, -inf where inadmissible

  std::size_t nodes() const { return axis_a.size() * axis_b.size(); }
};

SurfaceGrid likelihood_surface(const std::string& param_a, const std::string& param_b,
                               const std::vector<double>& grid_a, const std::vector<double>& grid_b,
                               const ParameterVector& fixed, const ObservedCore& obs,
                               const BoundaryConditions& bc, const SimulationConfig& cfg,
                               const PriorBounds& bounds = {}, const LikelihoodOptions& likelihood = {},
                               std::size_t threads = 0);

/// Nodes whose log-likelihood is within `drop` of the surface maximum.
struct SurfaceRegion {
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask;
  std::size_t count = 0;

  bool contains(std::size_t i, std::size_t j) const { return mask(i, j); }
  /// 4-neighbour connectivity of the whole region.
  bool connected() const;
};

SurfaceRegion high_likelihood_region(const SurfaceGrid& grid, double drop);

/// n evenly spaced values from lo to hi inclusive.
std::vector<double> linspace(double lo, double hi, std::size_t n);

/// Runs body(i) for i in [0, n) on a pool of worker threads.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, std::size_t threads = 0);

void write_summary_json(const std::string& path, const PosteriorSummary& summary);
void write_surface_csv(const std::string& path, const SurfaceGrid& grid);
void write_envelope_csv(const std::string& path, const PredictionEnvelope& envelope, double bin_size);

}  // namespace coralinv
