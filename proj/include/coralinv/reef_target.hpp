#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "coralinv/forward_model.hpp"
#include "coralinv/observation.hpp"
#include "coralinv/parameters.hpp"
#include "coralinv/samplers.hpp"

namespace coralinv {

struct ReefProblem {
  ObservedCore observed;
  BoundaryConditions boundary;
  SimulationConfig simulation;
  ParameterVector reference;  // supplies the fixed coordinates
  FreeMask free;              // one flag per flat coordinate
  PriorBounds bounds;
  StepSizes steps;
  AdaptationSettings adaptation;
  LikelihoodOptions likelihood;
};

/// Posterior over the free coordinates of the reef model.
class ReefTarget : public Target {
 public:
  explicit ReefTarget(ReefProblem problem);

  std::size_t dimension() const override { return free_indices_.size(); }
  std::vector<std::string> coordinate_names() const override;
  std::vector<double> sample_prior(Rng& rng) const override;
  double log_prior(std::span<const double> theta) const override;
  LogLikelihoodValue log_likelihood(std::span<const double> theta) const override;
  std::unique_ptr<Proposal> make_proposal() const override;

  ParameterVector expand(std::span<const double> free_values) const;
  std::vector<double> restrict(const ParameterVector& theta) const;
  const std::vector<std::size_t>& free_indices() const { return free_indices_; }
  const ReefProblem& problem() const { return problem_; }

 private:
  ReefProblem problem_;
  std::vector<std::size_t> free_indices_;
};

/// Forward-evaluates a full parameter vector; invalid when the prior excludes
/// it or the simulation fails.
LogLikelihoodValue evaluate_log_likelihood(const ParameterVector& theta, const ObservedCore& obs,
                                           const BoundaryConditions& bc, const SimulationConfig& cfg,
                                           const PriorBounds& bounds = {},
                                           const LikelihoodOptions& options = {});

}  // namespace coralinv
