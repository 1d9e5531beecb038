#include "coralinv/reef_target.hpp"

#include <cmath>
#include <stdexcept>

namespace coralinv {
namespace {

class ReefProposal : public Proposal {
 public:
  ReefProposal(const ReefTarget& target, AdaptiveGlvProposal kernel)
      : target_(target), kernel_(std::move(kernel)) {}

  void record(std::span<const double> iterate) override { kernel_.record(target_.expand(iterate)); }

  std::vector<double> propose(std::span<const double> current, Rng& rng) override {
    return target_.restrict(kernel_.propose(target_.expand(current), rng));
  }

 private:
  const ReefTarget& target_;
  AdaptiveGlvProposal kernel_;
};

}  // namespace

ReefTarget::ReefTarget(ReefProblem problem) : problem_(std::move(problem)) {
  const std::size_t k = problem_.simulation.assemblages.size();
  const std::size_t n = parameter_dimension(k);
  if (problem_.reference.assemblages() != k) {
    throw std::invalid_argument("reference parameter vector does not match the assemblage count");
  }
  if (problem_.free.empty()) problem_.free.assign(n, true);
  if (problem_.free.size() != n) throw std::invalid_argument("free mask has the wrong length");
  if (problem_.steps.sigma.empty()) problem_.steps = StepSizes::defaults(k, problem_.bounds);
  for (std::size_t i = 0; i < n; ++i) {
    if (problem_.free[i]) free_indices_.push_back(i);
  }
  if (free_indices_.empty()) throw std::invalid_argument("no free parameters selected");
}

std::vector<std::string> ReefTarget::coordinate_names() const {
  const auto all = coralinv::coordinate_names(problem_.simulation.assemblages.size());
  std::vector<std::string> names;
  for (std::size_t i : free_indices_) names.push_back(all[i]);
  return names;
}

ParameterVector ReefTarget::expand(std::span<const double> free_values) const {
  if (free_values.size() != free_indices_.size()) throw std::invalid_argument("free vector length mismatch");
  std::vector<double> flat = problem_.reference.flatten();
  for (std::size_t j = 0; j < free_indices_.size(); ++j) flat[free_indices_[j]] = free_values[j];
  return ParameterVector::unflatten(flat, problem_.reference.assemblages());
}

std::vector<double> ReefTarget::restrict(const ParameterVector& theta) const {
  const std::vector<double> flat = theta.flatten();
  std::vector<double> out;
  out.reserve(free_indices_.size());
  for (std::size_t i : free_indices_) out.push_back(flat[i]);
  return out;
}

std::vector<double> ReefTarget::sample_prior(Rng& rng) const {
  // Free coordinates of a uniform draw on the admissible region, retried until
  // the fixed coordinates keep every block ordered.
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const ParameterVector draw =
        coralinv::sample_prior(problem_.reference.assemblages(), rng, problem_.bounds);
    const std::vector<double> candidate = restrict(draw);
    if (std::isfinite(log_prior(candidate))) return candidate;
  }
  throw std::runtime_error("cannot draw an admissible initial state around the fixed parameters");
}

double ReefTarget::log_prior(std::span<const double> theta) const {
  return coralinv::log_prior(expand(theta), problem_.bounds);
}

LogLikelihoodValue ReefTarget::log_likelihood(std::span<const double> theta) const {
  return evaluate_log_likelihood(expand(theta), problem_.observed, problem_.boundary,
                                 problem_.simulation, problem_.bounds, problem_.likelihood);
}

std::unique_ptr<Proposal> ReefTarget::make_proposal() const {
  return std::make_unique<ReefProposal>(
      *this, AdaptiveGlvProposal(problem_.reference.assemblages(), problem_.steps,
                                 problem_.adaptation, problem_.bounds, problem_.free));
}

LogLikelihoodValue evaluate_log_likelihood(const ParameterVector& theta, const ObservedCore& obs,
                                           const BoundaryConditions& bc, const SimulationConfig& cfg,
                                           const PriorBounds& bounds, const LikelihoodOptions& options) {
  if (!std::isfinite(log_prior(theta, bounds))) return LogLikelihoodValue::invalid();
  try {
    return log_likelihood(obs, simulate(theta, bc, cfg), options);
  } catch (const SimulationError&) {
    return LogLikelihoodValue::invalid();
  }
}

}  // namespace coralinv
