#include "coralinv/observation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "coralinv/csv.hpp"

namespace coralinv {
namespace {

void check_categories(const ObservedCore& obs, const CoreRecord& core) {
  const auto k = static_cast<std::size_t>(core.proportions.cols());
  if (obs.categories.size() != k) {
    throw CategoryMismatch("observed core has " + std::to_string(obs.categories.size()) +
                           " categories, model has " + std::to_string(k));
  }
  for (int label : obs.labels) {
    if (label == kUnknownLabel) continue;
    if (label < 0 || static_cast<std::size_t>(label) >= k) {
      throw CategoryMismatch("observed label " + std::to_string(label) + " outside model categories");
    }
  }
}

int category_index(const std::vector<std::string>& categories, const std::string& name,
                   const std::string& where) {
  if (name == "unknown") return kUnknownLabel;
  const auto it = std::find(categories.begin(), categories.end(), name);
  if (it == categories.end()) throw CategoryMismatch(where + ": unknown category '" + name + "'");
  return static_cast<int>(it - categories.begin());
}

}  // namespace

Structure parse_structure(const std::string& text) {
  if (text == "time") return Structure::Time;
  if (text == "depth") return Structure::Depth;
  throw std::invalid_argument("structure must be 'time' or 'depth', got '" + text + "'");
}

std::string to_string(Structure s) { return s == Structure::Time ? "time" : "depth"; }

Eigen::MatrixXd aligned_proportions(const ObservedCore& obs, const CoreRecord& core) {
  check_categories(obs, core);
  const auto n = static_cast<Eigen::Index>(obs.size());
  const Eigen::Index k = core.proportions.cols();
  if (obs.structure == Structure::Time) {
    if (core.proportions.rows() != n) {
      throw LengthMismatch("observed core has " + std::to_string(n) + " time steps, model has " +
                           std::to_string(core.proportions.rows()));
    }
    return core.proportions;
  }
  const bool same_bins = std::abs(obs.bin_size - core.depth_bin) <= 1e-12 * std::max(1.0, obs.bin_size);
  DepthStructure rebinned;
  const Eigen::MatrixXd* model = &core.depth_proportions;
  if (!same_bins) {
    rebinned = compute_depth_structure(core, obs.bin_size);
    model = &rebinned.proportions;
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, k);
  const Eigen::Index shared = std::min(n, model->rows());
  out.topRows(shared) = model->topRows(shared);
  out.bottomRows(n - shared).col(k - 1).setOnes();
  return out;
}

std::vector<int> predicted_labels(const ObservedCore& obs, const CoreRecord& core) {
  const Eigen::MatrixXd pi = aligned_proportions(obs, core);
  std::vector<int> labels(static_cast<std::size_t>(pi.rows()));
  for (Eigen::Index t = 0; t < pi.rows(); ++t) labels[static_cast<std::size_t>(t)] = argmax_category(pi.row(t));
  return labels;
}

LogLikelihoodValue log_likelihood(const ObservedCore& obs, const CoreRecord& core,
                                  const LikelihoodOptions& options) {
  const Eigen::MatrixXd pi = aligned_proportions(obs, core);
  const auto k = static_cast<std::size_t>(pi.cols());
  double sum = 0.0;
  for (std::size_t t = 0; t < obs.labels.size(); ++t) {
    const int y = obs.labels[t];
    if (y == kUnknownLabel) continue;
    sum += std::log(floored_probability(pi(static_cast<Eigen::Index>(t), y), k, options.floor));
  }
  return {sum, true};
}

std::size_t misclassification_score(const ObservedCore& obs, const CoreRecord& core) {
  const std::vector<int> predicted = predicted_labels(obs, core);
  std::size_t count = 0;
  for (std::size_t t = 0; t < obs.labels.size(); ++t) {
    if (obs.labels[t] != kUnknownLabel && obs.labels[t] != predicted[t]) ++count;
  }
  return count;
}

ObservedCore observe(const CoreRecord& core, Structure structure,
                     const std::vector<std::string>& categories, double time_bin) {
  ObservedCore obs;
  obs.structure = structure;
  obs.categories = categories;
  if (structure == Structure::Time) {
    obs.labels = core.time_labels;
    obs.bin_size = time_bin;
  } else {
    obs.labels = core.depth_labels;
    obs.bin_size = core.depth_bin;
  }
  return obs;
}

void write_time_labels_csv(const std::string& path, const std::vector<int>& labels,
                           const std::vector<std::string>& categories, double t_start,
                           double layer_interval) {
  std::ostringstream out;
  out << "index,age_yr,category\n";
  for (std::size_t t = 0; t < labels.size(); ++t) {
    const double age = t_start - static_cast<double>(t) * layer_interval;
    const std::string name = labels[t] == kUnknownLabel ? "unknown" : categories.at(static_cast<std::size_t>(labels[t]));
    out << t << ',' << format_double(age) << ',' << name << '\n';
  }
  write_text_file(path, out.str());
}

void write_depth_labels_csv(const std::string& path, const std::vector<int>& labels_from_base,
                            const std::vector<std::string>& categories, double bin_size) {
  std::ostringstream out;
  out << "top_depth_m,bottom_depth_m,category\n";
  const std::size_t n = labels_from_base.size();
  for (std::size_t i = 0; i < n; ++i) {
    const int label = labels_from_base[n - 1 - i];
    if (label == kUnknownLabel) continue;
    out << format_double(static_cast<double>(i) * bin_size) << ','
        << format_double(static_cast<double>(i + 1) * bin_size) << ','
        << categories.at(static_cast<std::size_t>(label)) << '\n';
  }
  write_text_file(path, out.str());
}

ObservedCore read_time_core_csv(const std::string& path, const std::vector<std::string>& categories,
                                double layer_interval) {
  const CsvTable table = read_csv(path);
  const auto col = [&](const std::string& name) {
    const auto it = std::find(table.header.begin(), table.header.end(), name);
    if (it == table.header.end()) throw ParseError(path + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - table.header.begin());
  };
  const std::size_t c_index = col("index");
  const std::size_t c_cat = col("category");
  ObservedCore obs;
  obs.structure = Structure::Time;
  obs.bin_size = layer_interval;
  obs.categories = categories;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::string where = path + " row " + std::to_string(r + 2);
    const double idx = parse_double(table.rows[r][c_index], where);
    if (idx != static_cast<double>(r)) throw ParseError(where + ": indices must run 0,1,2,...");
    obs.labels.push_back(category_index(categories, table.rows[r][c_cat], where));
  }
  return obs;
}

ObservedCore read_depth_core_csv(const std::string& path, const std::vector<std::string>& categories,
                                 double bin_size) {
  if (!(bin_size > 0.0)) throw std::invalid_argument("depth bin size must be > 0");
  const CsvTable table = read_csv(path);
  if (table.header.size() != 3) {
    throw ParseError(path + ": expected columns top_depth_m,bottom_depth_m,category");
  }
  struct Interval {
    double top, bottom;
    int label;
  };
  std::vector<Interval> intervals;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::string where = path + " row " + std::to_string(r + 2);
    Interval iv{parse_double(table.rows[r][0], where), parse_double(table.rows[r][1], where),
                category_index(categories, table.rows[r][2], where)};
    if (!(iv.bottom > iv.top) || iv.top < 0.0) throw ParseError(where + ": need 0 <= top < bottom");
    intervals.push_back(iv);
  }
  std::sort(intervals.begin(), intervals.end(), [](const Interval& a, const Interval& b) { return a.top < b.top; });
  const double tol = 1e-9 * bin_size;
  for (std::size_t i = 1; i < intervals.size(); ++i) {
    if (intervals[i].top < intervals[i - 1].bottom - tol) {
      throw ParseError(path + ": overlapping intervals at " + format_double(intervals[i].top) + " m");
    }
  }
  const double length = intervals.empty() ? 0.0 : intervals.back().bottom;
  const auto bins = static_cast<std::size_t>(std::ceil(length / bin_size - 1e-9));
  const std::size_t k = categories.size();

  // Overlap per (bin counted from the top, category).
  std::vector<std::vector<double>> overlap(bins, std::vector<double>(k + 1, 0.0));
  for (const auto& iv : intervals) {
    const auto first = static_cast<std::size_t>(std::floor(iv.top / bin_size + 1e-9));
    for (std::size_t b = first; b < bins; ++b) {
      const double lo = std::max(iv.top, static_cast<double>(b) * bin_size);
      const double hi = std::min(iv.bottom, static_cast<double>(b + 1) * bin_size);
      if (hi <= lo) break;
      const std::size_t slot = iv.label == kUnknownLabel ? k : static_cast<std::size_t>(iv.label);
      overlap[b][slot] += hi - lo;
    }
  }
  ObservedCore obs;
  obs.structure = Structure::Depth;
  obs.bin_size = bin_size;
  obs.categories = categories;
  obs.labels.assign(bins, kUnknownLabel);
  for (std::size_t b = 0; b < bins; ++b) {
    const auto& row = overlap[b];
    const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k)) - row.begin());
    double known = 0.0;
    for (std::size_t c = 0; c < k; ++c) known += row[c];
    const double width = std::min(static_cast<double>(b + 1) * bin_size, length) - static_cast<double>(b) * bin_size;
    const std::size_t from_base = bins - 1 - b;
    if (known >= 0.5 * width - tol && row[best] > 0.0) obs.labels[from_base] = static_cast<int>(best);
  }
  return obs;
}

}  // namespace coralinv
