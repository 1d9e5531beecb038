#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "coralinv/forward_model.hpp"

namespace coralinv {

enum class Structure { Time, Depth };

Structure parse_structure(const std::string& text);
std::string to_string(Structure s);

/// Label value for gaps in a real core; excluded from likelihood and MC score.
inline constexpr int kUnknownLabel = -1;

/// Observed categorical core. For the depth structure index 0 is the base of
/// the core; for the time structure index 0 is the oldest layer.
struct ObservedCore {
  std::vector<int> labels;
  Structure structure = Structure::Time;
  double bin_size = 0.0;  // yr (time) or m (depth)
  std::vector<std::string> categories;

  std::size_t size() const { return labels.size(); }
  double span() const { return bin_size * static_cast<double>(labels.size()); }
};

class CategoryMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LengthMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LogLikelihoodValue {
  double value = -std::numeric_limits<double>::infinity();
  bool valid = false;

  static LogLikelihoodValue invalid() { return {}; }
};

struct LikelihoodOptions {
  double floor = 1e-6;  // kappa in (pi + kappa) / (1 + K kappa)
};

/// Floored and renormalised probability of one Pi entry.
inline double floored_probability(double pi, std::size_t categories, double floor) {
  return (pi + floor) / (1.0 + static_cast<double>(categories) * floor);
}

/// Model proportions aligned to the observation's indices. For the depth
/// structure the model column is re-binned at obs.bin_size from the base
/// upward; bins above the simulated top are pure sediment. Bins beyond the
/// observed length are dropped.
Eigen::MatrixXd aligned_proportions(const ObservedCore& obs, const CoreRecord& core);

/// Dominant category per observed index (same alignment as above).
std::vector<int> predicted_labels(const ObservedCore& obs, const CoreRecord& core);

/// Sum over known indices of log floored pi[t, y_t].
LogLikelihoodValue log_likelihood(const ObservedCore& obs, const CoreRecord& core,
                                  const LikelihoodOptions& options = {});

/// Known indices where the predicted dominant category differs from the label.
std::size_t misclassification_score(const ObservedCore& obs, const CoreRecord& core);

/// Observed core taken from a simulated record.
ObservedCore observe(const CoreRecord& core, Structure structure,
                     const std::vector<std::string>& categories, double time_bin);

// CSV formats.
//   time:  index,age_yr,category       (oldest layer first)
//   depth: top_depth_m,bottom_depth_m,category  (depth below core top,
//          listed from the top down; gaps allowed, overlaps rejected)

void write_time_labels_csv(const std::string& path, const std::vector<int>& labels,
                           const std::vector<std::string>& categories, double t_start,
                           double layer_interval);
void write_depth_labels_csv(const std::string& path, const std::vector<int>& labels_from_base,
                            const std::vector<std::string>& categories, double bin_size);

ObservedCore read_time_core_csv(const std::string& path, const std::vector<std::string>& categories,
                                double layer_interval);

/// Rasterises depth intervals onto bins of `bin_size`. Bins less than half
/// covered are unknown.
ObservedCore read_depth_core_csv(const std::string& path, const std::vector<std::string>& categories,
                                 double bin_size);

}  // namespace coralinv
