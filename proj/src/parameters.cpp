#include "coralinv/parameters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace coralinv {
namespace {

bool is_free(const FreeMask& free, std::size_t i) { return free.empty() || free[i]; }

}  // namespace

std::vector<double> ParameterVector::flatten() const {
  std::vector<double> flat;
  flat.reserve(dimension());
  flat.push_back(glv.epsilon);
  flat.push_back(glv.alpha_main);
  flat.push_back(glv.alpha_sub);
  for (const auto& c : flow_thresholds) flat.insert(flat.end(), c.points.begin(), c.points.end());
  for (const auto& c : sed_thresholds) flat.insert(flat.end(), c.points.begin(), c.points.end());
  return flat;
}

ParameterVector ParameterVector::unflatten(std::span<const double> flat, std::size_t assemblages) {
  if (flat.size() != parameter_dimension(assemblages)) {
    throw std::invalid_argument("parameter vector has " + std::to_string(flat.size()) +
                                " coordinates, expected " +
                                std::to_string(parameter_dimension(assemblages)));
  }
  ParameterVector theta;
  theta.glv = {flat[0], flat[1], flat[2]};
  theta.flow_thresholds.resize(assemblages);
  theta.sed_thresholds.resize(assemblages);
  std::size_t pos = kGlvCoordinates;
  for (auto& c : theta.flow_thresholds) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), 4, c.points.begin());
    pos += 4;
  }
  for (auto& c : theta.sed_thresholds) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), 4, c.points.begin());
    pos += 4;
  }
  return theta;
}

bool ParameterVector::operator==(const ParameterVector& other) const {
  return flatten() == other.flatten();
}

std::vector<std::string> coordinate_names(std::size_t assemblages) {
  std::vector<std::string> names{"epsilon", "alpha_m", "alpha_s"};
  for (const char* block : {"flow", "sed"}) {
    for (std::size_t a = 1; a <= assemblages; ++a) {
      for (int p = 1; p <= 4; ++p) {
        names.push_back(std::string(block) + "." + std::to_string(a) + "." + std::to_string(p));
      }
    }
  }
  return names;
}

std::optional<std::size_t> coordinate_index(std::string_view name, std::size_t assemblages) {
  const auto names = coordinate_names(assemblages);
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names.begin());
}

std::optional<std::size_t> block_start(std::size_t flat_index, std::size_t assemblages) {
  if (flat_index < kGlvCoordinates || flat_index >= parameter_dimension(assemblages)) return std::nullopt;
  return kGlvCoordinates + ((flat_index - kGlvCoordinates) / 4) * 4;
}

Interval PriorBounds::coordinate(std::size_t flat_index, std::size_t assemblages) const {
  switch (flat_index) {
    case 0: return epsilon;
    case 1: return alpha_main;
    case 2: return alpha_sub;
    default: break;
  }
  if (flat_index >= parameter_dimension(assemblages)) throw std::out_of_range("coordinate index");
  return flat_index < kGlvCoordinates + 4 * assemblages ? flow : sediment;
}

StepSizes StepSizes::defaults(std::size_t assemblages, const PriorBounds& bounds) {
  StepSizes s;
  const std::size_t n = parameter_dimension(assemblages);
  for (std::size_t i = 0; i < n; ++i) {
    const double sigma = 0.01 * bounds.coordinate(i, assemblages).width();
    s.sigma.push_back(sigma);
    s.floor.push_back(0.1 * sigma);
  }
  return s;
}

double log_prior(const ParameterVector& theta, const PriorBounds& bounds) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (!bounds.epsilon.contains(theta.glv.epsilon) || !bounds.alpha_main.contains(theta.glv.alpha_main) ||
      !bounds.alpha_sub.contains(theta.glv.alpha_sub)) {
    return kNegInf;
  }
  if (theta.flow_thresholds.size() != theta.sed_thresholds.size()) return kNegInf;
  for (const auto& c : theta.flow_thresholds) {
    if (!c.is_ordered() || !c.within(bounds.flow.lo, bounds.flow.hi)) return kNegInf;
  }
  for (const auto& c : theta.sed_thresholds) {
    if (!c.is_ordered() || !c.within(bounds.sediment.lo, bounds.sediment.hi)) return kNegInf;
  }
  return 0.0;
}

ParameterVector sample_prior(std::size_t assemblages, Rng& rng, const PriorBounds& bounds) {
  auto draw = [&](const Interval& iv) {
    return std::uniform_real_distribution<double>(iv.lo, iv.hi)(rng);
  };
  auto draw_block = [&](const Interval& iv) {
    ThresholdCurve c;
    for (auto& p : c.points) p = draw(iv);
    std::sort(c.points.begin(), c.points.end());
    return c;
  };
  ParameterVector theta;
  theta.glv = {draw(bounds.epsilon), draw(bounds.alpha_main), draw(bounds.alpha_sub)};
  for (std::size_t a = 0; a < assemblages; ++a) theta.flow_thresholds.push_back(draw_block(bounds.flow));
  for (std::size_t a = 0; a < assemblages; ++a) theta.sed_thresholds.push_back(draw_block(bounds.sediment));
  return theta;
}

ParameterVector apply_constrained_step(const ParameterVector& theta, std::span<const double> noise,
                                       const PriorBounds& bounds, const FreeMask& free) {
  const std::size_t k = theta.assemblages();
  const std::vector<double> previous = theta.flatten();
  if (noise.size() != previous.size()) throw std::invalid_argument("noise dimension mismatch");
  std::vector<double> next = previous;

  // First level: per-coordinate bounds, reverting only the offender.
  for (std::size_t i = 0; i < next.size(); ++i) {
    if (!is_free(free, i)) continue;
    const double candidate = previous[i] + noise[i];
    if (bounds.coordinate(i, k).contains(candidate)) next[i] = candidate;
  }

  // Second level: order each threshold block.
  for (std::size_t start = kGlvCoordinates; start < next.size(); start += 4) {
    std::vector<std::size_t> moving;
    for (std::size_t j = start; j < start + 4; ++j) {
      if (is_free(free, j)) moving.push_back(j);
    }
    if (moving.empty()) continue;
    std::vector<double> values;
    for (std::size_t j : moving) values.push_back(next[j]);
    std::sort(values.begin(), values.end());
    for (std::size_t m = 0; m < moving.size(); ++m) next[moving[m]] = values[m];
    const bool ordered = std::is_sorted(next.begin() + static_cast<std::ptrdiff_t>(start),
                                        next.begin() + static_cast<std::ptrdiff_t>(start + 4));
    if (!ordered) {
      for (std::size_t j : moving) next[j] = previous[j];
    }
  }
  return ParameterVector::unflatten(next, k);
}

ParameterVector propose_constrained(const ParameterVector& theta, const StepSizes& steps, Rng& rng,
                                    const PriorBounds& bounds, const FreeMask& free) {
  const std::size_t n = theta.dimension();
  std::vector<double> noise(n, 0.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (is_free(free, i)) noise[i] = steps.sigma[i] * normal(rng);
  }
  return apply_constrained_step(theta, noise, bounds, free);
}

Eigen::MatrixXd adaptive_covariance(const std::vector<Eigen::VectorXd>& history,
                                    const Eigen::VectorXd& floor) {
  const Eigen::Index d = floor.size();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  if (history.size() >= 2) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (const auto& x : history) mean += x;
    mean /= static_cast<double>(history.size());
    for (const auto& x : history) cov += (x - mean) * (x - mean).transpose();
    cov /= static_cast<double>(history.size() - 1);
  }
  cov.diagonal() += floor.cwiseAbs2();
  return cov;
}

AdaptiveGlvProposal::AdaptiveGlvProposal(std::size_t assemblages, StepSizes steps,
                                         AdaptationSettings settings, PriorBounds bounds, FreeMask free)
    : assemblages_(assemblages),
      steps_(std::move(steps)),
      settings_(settings),
      bounds_(bounds),
      free_(std::move(free)) {
  const std::size_t n = parameter_dimension(assemblages_);
  threshold_free_.assign(n, true);
  for (std::size_t i = 0; i < n; ++i) threshold_free_[i] = is_free(free_, i);
  for (std::size_t i = 0; i < kGlvCoordinates; ++i) {
    if (is_free(free_, i)) glv_indices_.push_back(i);
    threshold_free_[i] = false;
  }
  const auto d = static_cast<Eigen::Index>(glv_indices_.size());
  mean_ = Eigen::VectorXd::Zero(d);
  scatter_ = Eigen::MatrixXd::Zero(d, d);
  refresh();
}

bool AdaptiveGlvProposal::adapting() const {
  return settings_.enabled && count_ >= settings_.start_iteration && count_ >= 2;
}

void AdaptiveGlvProposal::record(const ParameterVector& theta) {
  const auto d = static_cast<Eigen::Index>(glv_indices_.size());
  if (d == 0) return;
  const std::vector<double> flat = theta.flatten();
  Eigen::VectorXd x(d);
  for (Eigen::Index j = 0; j < d; ++j) x(j) = flat[glv_indices_[static_cast<std::size_t>(j)]];
  ++count_;
  // Welford update of mean and scatter.
  const Eigen::VectorXd delta = x - mean_;
  mean_ += delta / static_cast<double>(count_);
  scatter_ += delta * (x - mean_).transpose();
  if (settings_.enabled && count_ >= settings_.start_iteration &&
      (count_ - settings_.start_iteration) % settings_.recompute_every == 0) {
    refresh();
  }
}

void AdaptiveGlvProposal::refresh() {
  const auto d = static_cast<Eigen::Index>(glv_indices_.size());
  Eigen::VectorXd sigma(d), floor(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    sigma(j) = steps_.sigma[glv_indices_[static_cast<std::size_t>(j)]];
    floor(j) = steps_.floor[glv_indices_[static_cast<std::size_t>(j)]];
  }
  if (adapting()) {
    covariance_ = scatter_ / static_cast<double>(count_ - 1);
    covariance_ = 0.5 * (covariance_ + covariance_.transpose());
    covariance_.diagonal() += floor.cwiseAbs2();
  } else {
    covariance_ = sigma.cwiseAbs2().asDiagonal();
  }
  Eigen::LLT<Eigen::MatrixXd> llt(covariance_);
  if (llt.info() == Eigen::Success) {
    cholesky_ = llt.matrixL();
  } else {
    covariance_ = floor.cwiseAbs2().asDiagonal();
    cholesky_ = floor.cwiseAbs().asDiagonal();
  }
}

ParameterVector AdaptiveGlvProposal::propose(const ParameterVector& theta, Rng& rng) {
  if (!settings_.enabled) return propose_constrained(theta, steps_, rng, bounds_, free_);

  ParameterVector next = propose_constrained(theta, steps_, rng, bounds_, threshold_free_);
  const auto d = static_cast<Eigen::Index>(glv_indices_.size());
  if (d == 0) return next;
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(d);
  for (Eigen::Index j = 0; j < d; ++j) z(j) = normal(rng);
  const Eigen::VectorXd step = cholesky_ * z;

  std::vector<double> flat = next.flatten();
  for (Eigen::Index j = 0; j < d; ++j) {
    const std::size_t i = glv_indices_[static_cast<std::size_t>(j)];
    const double candidate = flat[i] + step(j);
    if (bounds_.coordinate(i, assemblages_).contains(candidate)) flat[i] = candidate;
  }
  return ParameterVector::unflatten(flat, assemblages_);
}

}  // namespace coralinv
