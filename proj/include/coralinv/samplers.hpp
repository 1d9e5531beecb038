#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "coralinv/observation.hpp"
#include "coralinv/rng.hpp"

namespace coralinv {

/// Proposal kernel owned by a single chain. Kernels are treated as symmetric
/// (unit Hastings ratio).
class Proposal {
 public:
  virtual ~Proposal() = default;
  /// Called once per iteration with the chain's current iterate.
  virtual void record(std::span<const double> /*iterate*/) {}
  virtual std::vector<double> propose(std::span<const double> current, Rng& rng) = 0;
};

/// Posterior target over a flat coordinate vector.
class Target {
 public:
  virtual ~Target() = default;
  virtual std::size_t dimension() const = 0;
  virtual std::vector<std::string> coordinate_names() const = 0;
  virtual std::vector<double> sample_prior(Rng& rng) const = 0;
  virtual double log_prior(std::span<const double> theta) const = 0;
  virtual LogLikelihoodValue log_likelihood(std::span<const double> theta) const = 0;
  virtual std::unique_ptr<Proposal> make_proposal() const = 0;
};

/// Gaussian random walk with per-coordinate scales; out-of-box coordinates
/// keep their previous value.
class BoxRandomWalk : public Proposal {
 public:
  BoxRandomWalk(std::vector<double> sigma, std::vector<double> lower, std::vector<double> upper);
  std::vector<double> propose(std::span<const double> current, Rng& rng) override;

 private:
  std::vector<double> sigma_;
  std::vector<double> lower_;
  std::vector<double> upper_;
};

struct ChainState {
  std::vector<double> theta;
  double log_likelihood = 0.0;
  double log_prior = 0.0;
  double temperature = 1.0;  // beta; the chain targets likelihood^(1/beta) x prior
  std::size_t iterations = 0;
  std::size_t accepted = 0;
};

class TemperatureLadder {
 public:
  /// beta_1 must be exactly 1 and the sequence strictly increasing.
  explicit TemperatureLadder(std::vector<double> temperatures);
  /// beta_k = beta_max^((k-1)/(M-1)).
  static TemperatureLadder geometric(std::size_t replicas, double beta_max);

  std::size_t size() const { return temperatures_.size(); }
  double operator[](std::size_t k) const { return temperatures_[k]; }
  const std::vector<double>& temperatures() const { return temperatures_; }

 private:
  std::vector<double> temperatures_;
};

class AllProposalsInvalid : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// min{1, exp[(L' - L)/beta + (log p' - log p)]}; zero for an inadmissible
/// or failed proposal.
double mh_accept_prob(const ChainState& current, double proposal_loglik, double proposal_logprior);

/// min{1, exp[(1/beta_i - 1/beta_j)(L_j - L_i)]}.
double swap_accept_prob(const ChainState& replica_i, const ChainState& replica_j);

/// Exchanges parameter state and cached values; temperatures stay in place.
void swap_states(ChainState& a, ChainState& b);

enum class BudgetConvention {
  PerReplica,  // every replica takes n_samples steps
  Total,       // n_samples is split across replicas
};

struct SamplerSettings {
  std::size_t n_samples = 10000;
  double burn_in_fraction = 0.15;
  std::uint64_t seed = 1;
  std::size_t max_initial_draws = 1000;
  bool sequential = true;
  BudgetConvention budget = BudgetConvention::PerReplica;
};

struct ChainTrace {
  double temperature = 1.0;
  std::size_t dimension = 0;
  std::vector<double> log_likelihood;  // one per iteration
  std::vector<char> accepted;
  std::vector<double> values;  // iterations x dimension, row-major

  std::size_t size() const { return log_likelihood.size(); }
  std::span<const double> iterate(std::size_t i) const {
    return {values.data() + i * dimension, dimension};
  }
};

struct SamplerResult {
  std::vector<std::string> names;
  std::size_t burn_in = 0;
  std::vector<std::vector<double>> posterior;  // post-burn-in beta = 1 iterates
  std::vector<ChainTrace> traces;              // one per replica, coldest first
  double acceptance_rate = 0.0;                // beta = 1 chain, post-burn-in window
  std::vector<std::size_t> swaps_attempted;    // per adjacent pair
  std::vector<std::size_t> swaps_accepted;
  double runtime_seconds = 0.0;
  ChainState final_state;  // beta = 1 replica
};

/// Number of discarded leading iterates.
std::size_t burn_in_count(std::size_t iterations, double fraction);

SamplerResult run_single_chain(const Target& target, const SamplerSettings& settings);

SamplerResult run_parallel_tempering(const Target& target, const TemperatureLadder& ladder,
                                     const SamplerSettings& settings);

/// Columns: iteration,replica,temperature,burn_in,log_likelihood,accepted,<names...>
void write_trace_csv(const std::string& path, const SamplerResult& result);

struct TraceTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> iterates;  // beta = 1, post-burn-in rows
};

TraceTable read_trace_csv(const std::string& path);

}  // namespace coralinv
