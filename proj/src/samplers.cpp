#include "coralinv/samplers.hpp"

#include <algorithm>
#include <barrier>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "coralinv/csv.hpp"

namespace coralinv {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::uint64_t kSwapStream = 0xfffffffULL;

struct Replica {
  ChainState state;
  std::unique_ptr<Proposal> proposal;
  Rng rng;
  ChainTrace trace;
  bool last_accepted = false;
};

ChainState initial_state(const Target& target, Rng& rng, std::size_t max_draws, double temperature) {
  for (std::size_t attempt = 0; attempt < max_draws; ++attempt) {
    ChainState s;
    s.theta = target.sample_prior(rng);
    s.log_prior = target.log_prior(s.theta);
    if (!std::isfinite(s.log_prior)) continue;
    const LogLikelihoodValue ll = target.log_likelihood(s.theta);
    if (!ll.valid || !std::isfinite(ll.value)) continue;
    s.log_likelihood = ll.value;
    s.temperature = temperature;
    return s;
  }
  throw AllProposalsInvalid(std::to_string(max_draws) +
                            " consecutive prior draws gave invalid forward models; check the "
                            "boundary conditions, fixed parameters and prior bounds");
}

void advance(const Target& target, Replica& r) {
  std::vector<double> candidate = r.proposal->propose(r.state.theta, r.rng);
  const double lp = target.log_prior(candidate);
  double ll = kNegInf;
  if (std::isfinite(lp)) {
    const LogLikelihoodValue v = target.log_likelihood(candidate);
    if (v.valid) ll = v.value;
  }
  const double p = mh_accept_prob(r.state, ll, lp);
  const double u = uniform01(r.rng);
  ++r.state.iterations;
  r.last_accepted = u < p;
  if (r.last_accepted) {
    r.state.theta = std::move(candidate);
    r.state.log_likelihood = ll;
    r.state.log_prior = lp;
    ++r.state.accepted;
  }
}

void record(Replica& r) {
  r.trace.log_likelihood.push_back(r.state.log_likelihood);
  r.trace.accepted.push_back(r.last_accepted ? 1 : 0);
  r.trace.values.insert(r.trace.values.end(), r.state.theta.begin(), r.state.theta.end());
  r.proposal->record(r.state.theta);
}

}  // namespace

BoxRandomWalk::BoxRandomWalk(std::vector<double> sigma, std::vector<double> lower,
                             std::vector<double> upper)
    : sigma_(std::move(sigma)), lower_(std::move(lower)), upper_(std::move(upper)) {
  if (sigma_.size() != lower_.size() || sigma_.size() != upper_.size()) {
    throw std::invalid_argument("BoxRandomWalk: dimension mismatch");
  }
}

std::vector<double> BoxRandomWalk::propose(std::span<const double> current, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> next(current.begin(), current.end());
  for (std::size_t i = 0; i < next.size(); ++i) {
    const double candidate = current[i] + sigma_[i] * normal(rng);
    if (candidate >= lower_[i] && candidate <= upper_[i]) next[i] = candidate;
  }
  return next;
}

TemperatureLadder::TemperatureLadder(std::vector<double> temperatures)
    : temperatures_(std::move(temperatures)) {
  if (temperatures_.empty() || temperatures_.front() != 1.0) {
    throw std::invalid_argument("temperature ladder must start at exactly 1");
  }
  for (std::size_t k = 1; k < temperatures_.size(); ++k) {
    if (!(temperatures_[k] > temperatures_[k - 1])) {
      throw std::invalid_argument("temperature ladder must be strictly increasing");
    }
  }
}

TemperatureLadder TemperatureLadder::geometric(std::size_t replicas, double beta_max) {
  if (replicas == 0) throw std::invalid_argument("ladder needs at least one replica");
  if (replicas > 1 && !(beta_max > 1.0)) throw std::invalid_argument("beta_max must exceed 1");
  std::vector<double> t(replicas, 1.0);
  for (std::size_t k = 1; k < replicas; ++k) {
    t[k] = std::pow(beta_max, static_cast<double>(k) / static_cast<double>(replicas - 1));
  }
  return TemperatureLadder(std::move(t));
}

double mh_accept_prob(const ChainState& current, double proposal_loglik, double proposal_logprior) {
  if (!std::isfinite(proposal_logprior) || !std::isfinite(proposal_loglik)) return 0.0;
  const double log_ratio = (proposal_loglik - current.log_likelihood) / current.temperature +
                           (proposal_logprior - current.log_prior);
  return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
}

double swap_accept_prob(const ChainState& replica_i, const ChainState& replica_j) {
  const double log_ratio = (1.0 / replica_i.temperature - 1.0 / replica_j.temperature) *
                           (replica_j.log_likelihood - replica_i.log_likelihood);
  if (std::isnan(log_ratio)) return 0.0;
  return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
}

void swap_states(ChainState& a, ChainState& b) {
  std::swap(a.theta, b.theta);
  std::swap(a.log_likelihood, b.log_likelihood);
  std::swap(a.log_prior, b.log_prior);
}

std::size_t burn_in_count(std::size_t iterations, double fraction) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw std::invalid_argument("burn-in fraction must lie in [0, 1)");
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(iterations)));
}

SamplerResult run_single_chain(const Target& target, const SamplerSettings& settings) {
  return run_parallel_tempering(target, TemperatureLadder({1.0}), settings);
}

SamplerResult run_parallel_tempering(const Target& target, const TemperatureLadder& ladder,
                                     const SamplerSettings& settings) {
  if (settings.n_samples == 0) throw std::invalid_argument("n_samples must be >= 1");
  const auto start_time = std::chrono::steady_clock::now();
  const std::size_t m = ladder.size();
  const std::size_t sweeps = settings.budget == BudgetConvention::PerReplica
                                 ? settings.n_samples
                                 : std::max<std::size_t>(1, settings.n_samples / m);
  const std::size_t burn = burn_in_count(sweeps, settings.burn_in_fraction);
  const std::size_t dim = target.dimension();

  std::vector<Replica> replicas(m);
  for (std::size_t k = 0; k < m; ++k) {
    Replica& r = replicas[k];
    r.rng = make_stream(settings.seed, k);
    r.proposal = target.make_proposal();
    r.state = initial_state(target, r.rng, settings.max_initial_draws, ladder[k]);
    r.trace.temperature = ladder[k];
    r.trace.dimension = dim;
    r.trace.log_likelihood.reserve(sweeps);
    r.trace.accepted.reserve(sweeps);
    r.trace.values.reserve(sweeps * dim);
  }
  Rng swap_rng = make_stream(settings.seed, kSwapStream);
  std::vector<std::size_t> attempted(m > 0 ? m - 1 : 0, 0);
  std::vector<std::size_t> accepted(attempted.size(), 0);

  auto exchange_and_record = [&]() {
    for (std::size_t k = 0; k + 1 < m; ++k) {
      const double p = swap_accept_prob(replicas[k].state, replicas[k + 1].state);
      ++attempted[k];
      if (uniform01(swap_rng) < p) {
        swap_states(replicas[k].state, replicas[k + 1].state);
        ++accepted[k];
      }
    }
    for (auto& r : replicas) record(r);
  };

  if (settings.sequential || m == 1) {
    for (std::size_t s = 0; s < sweeps; ++s) {
      for (auto& r : replicas) advance(target, r);
      exchange_and_record();
    }
  } else {
    std::size_t sweep = 0;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    bool stop = false;
    std::barrier sync(static_cast<std::ptrdiff_t>(m), [&]() noexcept {
      if (failure) {
        stop = true;
        return;
      }
      exchange_and_record();
      ++sweep;
      stop = sweep >= sweeps;
    });
    std::vector<std::thread> workers;
    workers.reserve(m);
    for (std::size_t k = 0; k < m; ++k) {
      workers.emplace_back([&, k]() {
        while (!stop) {
          try {
            advance(target, replicas[k]);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
          sync.arrive_and_wait();
        }
      });
    }
    for (auto& w : workers) w.join();
    if (failure) std::rethrow_exception(failure);
  }

  SamplerResult result;
  result.names = target.coordinate_names();
  result.burn_in = burn;
  const ChainTrace& cold = replicas.front().trace;
  std::size_t window_accepted = 0;
  for (std::size_t i = burn; i < cold.size(); ++i) {
    const auto it = cold.iterate(i);
    result.posterior.emplace_back(it.begin(), it.end());
    window_accepted += cold.accepted[i] ? 1 : 0;
  }
  result.acceptance_rate = cold.size() > burn
                               ? static_cast<double>(window_accepted) / static_cast<double>(cold.size() - burn)
                               : 0.0;
  result.swaps_attempted = attempted;
  result.swaps_accepted = accepted;
  result.final_state = replicas.front().state;
  for (auto& r : replicas) result.traces.push_back(std::move(r.trace));
  result.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
  return result;
}

void write_trace_csv(const std::string& path, const SamplerResult& result) {
  std::ostringstream out;
  out << "iteration,replica,temperature,burn_in,log_likelihood,accepted";
  for (const auto& n : result.names) out << ',' << n;
  out << '\n';
  for (std::size_t r = 0; r < result.traces.size(); ++r) {
    const ChainTrace& tr = result.traces[r];
    for (std::size_t i = 0; i < tr.size(); ++i) {
      out << i + 1 << ',' << r << ',' << format_double(tr.temperature) << ','
          << (i < result.burn_in ? 1 : 0) << ',' << format_double_exact(tr.log_likelihood[i]) << ','
          << static_cast<int>(tr.accepted[i]);
      for (double v : tr.iterate(i)) out << ',' << format_double_exact(v);
      out << '\n';
    }
  }
  write_text_file(path, out.str());
}

TraceTable read_trace_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  constexpr std::size_t kFixedColumns = 6;
  if (table.header.size() <= kFixedColumns || table.header[0] != "iteration" ||
      table.header[1] != "replica" || table.header[3] != "burn_in") {
    throw ParseError(path + ": not a trace file");
  }
  TraceTable out;
  out.names.assign(table.header.begin() + kFixedColumns, table.header.end());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = path + " row " + std::to_string(r + 2);
    if (parse_double(row[1], where) != 0.0 || parse_double(row[3], where) != 0.0) continue;
    std::vector<double> v;
    for (std::size_t c = kFixedColumns; c < row.size(); ++c) v.push_back(parse_double(row[c], where));
    out.iterates.push_back(std::move(v));
  }
  return out;
}

}  // namespace coralinv
