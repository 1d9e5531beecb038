#include "coralinv/diagnostics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "coralinv/csv.hpp"
#include "coralinv/reef_target.hpp"

namespace coralinv {
namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v, double mean) {
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

std::size_t worker_count(std::size_t requested, std::size_t n) {
  std::size_t t = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(t, n));
}

struct Prediction {
  bool valid = false;
  std::vector<int> time;
  std::vector<int> depth;
};

PredictionEnvelope build_envelope(Structure structure, const std::vector<std::string>& categories,
                                  const std::vector<const std::vector<int>*>& rows, std::size_t length,
                                  int pad_label) {
  PredictionEnvelope env;
  env.structure = structure;
  env.categories = categories;
  env.draws = rows.size();
  const auto k = static_cast<Eigen::Index>(categories.size());
  env.frequencies = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(length), k);
  env.p5.resize(length);
  env.p95.resize(length);
  env.mean.resize(length);
  std::vector<double> column(rows.size());
  for (std::size_t i = 0; i < length; ++i) {
    for (std::size_t d = 0; d < rows.size(); ++d) {
      const auto& r = *rows[d];
      const int label = i < r.size() ? r[i] : pad_label;
      column[d] = label;
      env.frequencies(static_cast<Eigen::Index>(i), label) += 1.0;
    }
    if (!rows.empty()) {
      env.frequencies.row(static_cast<Eigen::Index>(i)) /= static_cast<double>(rows.size());
      env.mean[i] = mean_of(column);
      env.p5[i] = percentile(column, 5.0);
      env.p95[i] = percentile(column, 95.0);
    }
  }
  return env;
}

}  // namespace

double psrf(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2) throw std::invalid_argument("psrf needs at least two chains");
  const std::size_t n = chains.front().size();
  if (n < 10) throw std::invalid_argument("psrf needs chains of length >= 10");
  for (const auto& c : chains) {
    if (c.size() != n) throw std::invalid_argument("psrf chains must have equal length");
  }
  const double m = static_cast<double>(chains.size());
  const double len = static_cast<double>(n);
  std::vector<double> means, variances;
  for (const auto& c : chains) {
    means.push_back(mean_of(c));
    variances.push_back(sample_variance(c, means.back()));
  }
  const double w = mean_of(variances);
  if (!(w > 0.0)) throw DegenerateChains("every chain has zero within-chain variance");
  const double grand = mean_of(means);
  double b = 0.0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b *= len / (m - 1.0);
  const double pooled = (len - 1.0) / len * w + b / len;
  return std::sqrt(pooled / w);
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double freedman_diaconis_width(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  std::vector<double> v(values.begin(), values.end());
  const double iqr = percentile(v, 75.0) - percentile(v, 25.0);
  return 2.0 * iqr / std::cbrt(static_cast<double>(values.size()));
}

double histogram_mode(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mode of an empty set");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) return lo;
  double width = freedman_diaconis_width(values);
  if (!(width > 0.0)) {
    // All mass in a point-like cluster; use the most frequent exact value.
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    double best = v.front();
    std::size_t best_run = 0, run = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      run = (i > 0 && v[i] == v[i - 1]) ? run + 1 : 1;
      if (run > best_run) best_run = run, best = v[i];
    }
    return best;
  }
  const auto bins = static_cast<std::size_t>(std::max(1.0, std::ceil((hi - lo) / width)));
  width = (hi - lo) / static_cast<double>(bins);
  std::vector<std::size_t> counts(bins, 0);
  for (double x : values) {
    auto b = static_cast<std::size_t>((x - lo) / width);
    ++counts[std::min(b, bins - 1)];
  }
  const auto peak = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  return lo + (static_cast<double>(peak) + 0.5) * width;
}

std::vector<std::size_t> thinned_indices(std::size_t n, std::size_t cap) {
  std::vector<std::size_t> out;
  if (n == 0 || cap == 0) return out;
  if (n <= cap) {
    out.resize(n);
    std::iota(out.begin(), out.end(), 0);
    return out;
  }
  for (std::size_t i = 0; i < cap; ++i) out.push_back(i * n / cap);
  return out;
}

PosteriorSummary summarize(const std::vector<std::vector<double>>& iterates,
                           const std::vector<std::string>& names, double acceptance_rate,
                           const ScoreFn& score, const SummaryOptions& options) {
  if (iterates.empty()) throw std::invalid_argument("summarize needs at least one iterate");
  const std::size_t dim = iterates.front().size();
  if (names.size() != dim) throw std::invalid_argument("summarize: name count does not match dimension");

  PosteriorSummary s;
  s.samples = iterates.size();
  s.acceptance_rate = acceptance_rate;
  std::vector<double> column(iterates.size());
  for (std::size_t j = 0; j < dim; ++j) {
    for (std::size_t i = 0; i < iterates.size(); ++i) column[i] = iterates[i][j];
    ParameterSummary p;
    p.name = names[j];
    p.mean = mean_of(column);
    p.mode = histogram_mode(column);
    p.p5 = percentile(column, 5.0);
    p.p95 = percentile(column, 95.0);
    s.parameters.push_back(p);
  }

  if (score) {
    const auto picks = thinned_indices(iterates.size(), options.max_forward_draws);
    std::vector<std::optional<std::size_t>> scores(picks.size());
    parallel_for(picks.size(), [&](std::size_t k) { scores[k] = score(iterates[picks[k]]); }, options.threads);
    std::vector<double> values;
    for (const auto& v : scores) {
      if (v) values.push_back(static_cast<double>(*v));
    }
    s.mc_draws = values.size();
    if (!values.empty()) {
      s.mc_mean = mean_of(values);
      s.mc_std = values.size() > 1 ? std::sqrt(sample_variance(values, s.mc_mean)) : 0.0;
    }
  }
  return s;
}

bool PredictionEnvelope::contains(std::size_t i, int label) const {
  return static_cast<double>(label) >= p5[i] && static_cast<double>(label) <= p95[i];
}

Envelopes prediction_envelope(const std::vector<ParameterVector>& draws, const BoundaryConditions& bc,
                              const SimulationConfig& cfg, const std::vector<std::string>& categories,
                              const SummaryOptions& options) {
  if (draws.empty()) throw std::invalid_argument("prediction_envelope needs at least one draw");
  if (categories.size() != cfg.categories()) {
    throw CategoryMismatch("category list does not match the assemblage count");
  }
  const auto picks = thinned_indices(draws.size(), options.max_forward_draws);
  std::vector<Prediction> predictions(picks.size());
  parallel_for(
      picks.size(),
      [&](std::size_t k) {
        try {
          const CoreRecord core = simulate(draws[picks[k]], bc, cfg);
          predictions[k] = {true, core.time_labels, core.depth_labels};
        } catch (const SimulationError&) {
        }
      },
      options.threads);

  std::vector<const std::vector<int>*> time_rows, depth_rows;
  std::size_t depth_length = 0;
  for (const auto& p : predictions) {
    if (!p.valid) continue;
    time_rows.push_back(&p.time);
    depth_rows.push_back(&p.depth);
    depth_length = std::max(depth_length, p.depth.size());
  }
  const int sediment = static_cast<int>(cfg.sediment_category());
  Envelopes out;
  out.time = build_envelope(Structure::Time, categories, time_rows, cfg.time_steps(), sediment);
  out.depth = build_envelope(Structure::Depth, categories, depth_rows, depth_length, sediment);
  return out;
}

SurfaceGrid likelihood_surface(const std::string& param_a, const std::string& param_b,
                               const std::vector<double>& grid_a, const std::vector<double>& grid_b,
                               const ParameterVector& fixed, const ObservedCore& obs,
                               const BoundaryConditions& bc, const SimulationConfig& cfg,
                               const PriorBounds& bounds, const LikelihoodOptions& likelihood,
                               std::size_t threads) {
  const std::size_t k = fixed.assemblages();
  const auto ia = coordinate_index(param_a, k);
  const auto ib = coordinate_index(param_b, k);
  if (!ia) throw std::invalid_argument("unknown parameter: " + param_a);
  if (!ib) throw std::invalid_argument("unknown parameter: " + param_b);
  if (*ia == *ib) throw std::invalid_argument("surface parameters must differ");

  SurfaceGrid grid{param_a, param_b, grid_a, grid_b,
                   Eigen::MatrixXd(static_cast<Eigen::Index>(grid_a.size()),
                                   static_cast<Eigen::Index>(grid_b.size()))};
  const std::vector<double> base = fixed.flatten();
  const std::size_t nb = grid_b.size();
  parallel_for(
      grid.nodes(),
      [&](std::size_t node) {
        const std::size_t i = node / nb, j = node % nb;
        std::vector<double> flat = base;
        flat[*ia] = grid_a[i];
        flat[*ib] = grid_b[j];
        const LogLikelihoodValue v = evaluate_log_likelihood(ParameterVector::unflatten(flat, k), obs, bc,
                                                             cfg, bounds, likelihood);
        grid.log_likelihood(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            v.valid ? v.value : -std::numeric_limits<double>::infinity();
      },
      threads);
  return grid;
}

SurfaceRegion high_likelihood_region(const SurfaceGrid& grid, double drop) {
  const Eigen::MatrixXd& l = grid.log_likelihood;
  SurfaceRegion r;
  r.mask.setConstant(l.rows(), l.cols(), false);
  const double top = l.maxCoeff();
  if (!std::isfinite(top)) return r;
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    for (Eigen::Index j = 0; j < l.cols(); ++j) {
      if (l(i, j) >= top - drop) {
        r.mask(i, j) = true;
        ++r.count;
      }
    }
  }
  return r;
}

bool SurfaceRegion::connected() const {
  if (count == 0) return false;
  const Eigen::Index rows = mask.rows(), cols = mask.cols();
  std::vector<char> seen(static_cast<std::size_t>(rows * cols), 0);
  std::vector<std::pair<Eigen::Index, Eigen::Index>> stack;
  for (Eigen::Index i = 0; i < rows && stack.empty(); ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (mask(i, j)) {
        stack.emplace_back(i, j);
        seen[static_cast<std::size_t>(i * cols + j)] = 1;
        break;
      }
    }
  }
  std::size_t reached = 0;
  while (!stack.empty()) {
    const auto [i, j] = stack.back();
    stack.pop_back();
    ++reached;
    const Eigen::Index di[] = {1, -1, 0, 0}, dj[] = {0, 0, 1, -1};
    for (int d = 0; d < 4; ++d) {
      const Eigen::Index a = i + di[d], b = j + dj[d];
      if (a < 0 || b < 0 || a >= rows || b >= cols || !mask(a, b)) continue;
      char& flag = seen[static_cast<std::size_t>(a * cols + b)];
      if (flag) continue;
      flag = 1;
      stack.emplace_back(a, b);
    }
  }
  return reached == count;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  if (n == 0) return {};
  if (n == 1) return {lo};
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  out.back() = hi;
  return out;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, std::size_t threads) {
  if (n == 0) return;
  const std::size_t workers = worker_count(threads, n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

void write_summary_json(const std::string& path, const PosteriorSummary& summary) {
  nlohmann::ordered_json j;
  j["samples"] = summary.samples;
  j["acceptance_rate"] = summary.acceptance_rate;
  nlohmann::ordered_json params = nlohmann::ordered_json::array();
  for (const auto& p : summary.parameters) {
    params.push_back({{"name", p.name}, {"mean", p.mean}, {"mode", p.mode}, {"p5", p.p5}, {"p95", p.p95}});
  }
  j["parameters"] = params;
  j["mc_score"] = {{"mean", summary.mc_mean}, {"std", summary.mc_std}, {"draws", summary.mc_draws}};
  if (summary.mean_prediction_mc) j["mean_prediction_mc_score"] = *summary.mean_prediction_mc;
  write_text_file(path, j.dump(2) + "\n");
}

void write_surface_csv(const std::string& path, const SurfaceGrid& grid) {
  std::ostringstream out;
  out << grid.name_a << '\\' << grid.name_b;
  for (double b : grid.axis_b) out << ',' << format_double(b);
  out << '\n';
  for (std::size_t i = 0; i < grid.axis_a.size(); ++i) {
    out << format_double(grid.axis_a[i]);
    for (std::size_t j = 0; j < grid.axis_b.size(); ++j) {
      out << ',' << format_double(grid.log_likelihood(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

void write_envelope_csv(const std::string& path, const PredictionEnvelope& envelope, double bin_size) {
  std::ostringstream out;
  const bool depth = envelope.structure == Structure::Depth;
  out << "index," << (depth ? "height_above_base_m" : "step_offset_yr") << ",p5,mean,p95";
  for (const auto& c : envelope.categories) out << ",freq." << c;
  out << '\n';
  for (std::size_t i = 0; i < envelope.size(); ++i) {
    out << i << ',' << format_double(static_cast<double>(i) * bin_size) << ',' << format_double(envelope.p5[i])
        << ',' << format_double(envelope.mean[i]) << ',' << format_double(envelope.p95[i]);
    for (Eigen::Index k = 0; k < envelope.frequencies.cols(); ++k) {
      out << ',' << format_double(envelope.frequencies(static_cast<Eigen::Index>(i), k));
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

}  // namespace coralinv
