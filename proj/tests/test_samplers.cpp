#include <doctest.h>

#include <cmath>
#include <numeric>

#include "coralinv/samplers.hpp"
#include "stub_targets.hpp"
#include "support.hpp"

using namespace coralinv;
using testing::BoxTarget;

namespace {

// Five-state target with a symmetric cyclic neighbour proposal.
class CyclicProposal : public Proposal {
 public:
  std::vector<double> propose(std::span<const double> current, Rng& rng) override {
    const int s = static_cast<int>(current[0]);
    const int step = uniform01(rng) < 0.5 ? 1 : 4;
    return {static_cast<double>((s + step) % 5)};
  }
};

class FiveStateTarget : public Target {
 public:
  explicit FiveStateTarget(std::array<double, 5> w) : w_(w) {}
  std::size_t dimension() const override { return 1; }
  std::vector<std::string> coordinate_names() const override { return {"state"}; }
  std::vector<double> sample_prior(Rng& rng) const override { return {static_cast<double>(rng() % 5)}; }
  double log_prior(std::span<const double>) const override { return 0.0; }
  LogLikelihoodValue log_likelihood(std::span<const double> x) const override {
    return {std::log(w_[static_cast<std::size_t>(x[0])]), true};
  }
  std::unique_ptr<Proposal> make_proposal() const override { return std::make_unique<CyclicProposal>(); }

 private:
  std::array<double, 5> w_;
};

double gaussian_2d(std::span<const double> x) {
  // Covariance [[1, 0.6], [0.6, 2]].
  const double det = 2.0 - 0.36;
  const double q = (2.0 * x[0] * x[0] - 1.2 * x[0] * x[1] + x[1] * x[1]) / det;
  return -0.5 * q;
}

double two_modes(std::span<const double> x) {
  const double a = -0.5 * std::pow((x[0] + 4.0) / 0.4, 2);
  const double b = -0.5 * std::pow((x[0] - 4.0) / 0.4, 2);
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

double fraction_positive(const SamplerResult& r) {
  std::size_t n = 0;
  for (const auto& x : r.posterior) n += x[0] > 0.0 ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(r.posterior.size());
}

}  // namespace

TEST_SUITE("samplers") {

TEST_CASE("acceptance probability examples") {
  ChainState s;
  s.log_likelihood = -10.0;
  s.log_prior = 0.0;
  s.temperature = 1.0;
  CHECK(mh_accept_prob(s, -12.0, 0.0) == doctest::Approx(std::exp(-2.0)));
  CHECK(mh_accept_prob(s, -12.0, 0.0) == doctest::Approx(0.1353).epsilon(1e-3));
  CHECK(mh_accept_prob(s, -9.0, 0.0) == 1.0);
  CHECK(mh_accept_prob(s, -9.0, -INFINITY) == 0.0);
  CHECK(mh_accept_prob(s, -INFINITY, 0.0) == 0.0);
  s.temperature = 10.0;
  CHECK(mh_accept_prob(s, -12.0, 0.0) == doctest::Approx(0.8187).epsilon(1e-3));
}

TEST_CASE("swap probability examples") {
  ChainState cold, hot;
  cold.temperature = 1.0;
  hot.temperature = 2.0;
  cold.log_likelihood = -7.0;
  hot.log_likelihood = -10.0;
  CHECK(swap_accept_prob(cold, hot) == doctest::Approx(std::exp(-1.5)));
  CHECK(swap_accept_prob(cold, hot) == doctest::Approx(0.2231).epsilon(1e-3));
  std::swap(cold.log_likelihood, hot.log_likelihood);
  CHECK(swap_accept_prob(cold, hot) == 1.0);
  hot.temperature = 1.0;
  CHECK(swap_accept_prob(cold, hot) == 1.0);
}

TEST_CASE("swapping exchanges states but keeps temperatures") {
  ChainState a, b;
  a.theta = {1.0};
  b.theta = {2.0};
  a.temperature = 1.0;
  b.temperature = 3.0;
  a.log_likelihood = -1.0;
  b.log_likelihood = -2.0;
  swap_states(a, b);
  CHECK(a.theta[0] == 2.0);
  CHECK(a.log_likelihood == -2.0);
  CHECK(a.temperature == 1.0);
  CHECK(b.temperature == 3.0);
}

TEST_CASE("ladders") {
  const TemperatureLadder l = TemperatureLadder::geometric(10, 10.0);
  CHECK(l[0] == 1.0);
  CHECK(l[9] == doctest::Approx(10.0));
  CHECK(l[1] / l[0] == doctest::Approx(l[5] / l[4]));
  CHECK_THROWS_AS(TemperatureLadder({1.5, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(TemperatureLadder({1.0, 2.0, 2.0}), std::invalid_argument);
  CHECK(TemperatureLadder::geometric(1, 10.0).size() == 1);
}

TEST_CASE("burn-in count") {
  CHECK(burn_in_count(10000, 0.15) == 1500);
  CHECK(burn_in_count(10, 0.0) == 0);
  CHECK_THROWS_AS(burn_in_count(10, 1.0), std::invalid_argument);
}

TEST_CASE("single chain recovers a correlated Gaussian") {
  BoxTarget target({-10, -10}, {10, 10}, {1.5, 1.5}, gaussian_2d);
  SamplerSettings s;
  s.n_samples = 200000;
  s.burn_in_fraction = 0.1;
  s.seed = 3;
  const SamplerResult r = run_single_chain(target, s);
  double m0 = 0, m1 = 0, v0 = 0, v1 = 0, c = 0;
  for (const auto& x : r.posterior) {
    m0 += x[0];
    m1 += x[1];
  }
  const double n = static_cast<double>(r.posterior.size());
  m0 /= n;
  m1 /= n;
  for (const auto& x : r.posterior) {
    v0 += (x[0] - m0) * (x[0] - m0);
    v1 += (x[1] - m1) * (x[1] - m1);
    c += (x[0] - m0) * (x[1] - m1);
  }
  CHECK(std::abs(m0) < 0.05);
  CHECK(std::abs(m1) < 0.07);
  CHECK(v0 / n == doctest::Approx(1.0).epsilon(0.05));
  CHECK(v1 / n == doctest::Approx(2.0).epsilon(0.05));
  CHECK(c / n == doctest::Approx(0.6).epsilon(0.08));
}

TEST_CASE("tempering mixes between separated modes") {
  BoxTarget target({-8}, {8}, {0.4}, two_modes);
  SamplerSettings s;
  s.n_samples = 40000;
  s.burn_in_fraction = 0.1;
  s.seed = 5;
  const SamplerResult single = run_single_chain(target, s);
  const double f_single = fraction_positive(single);
  CHECK((f_single < 0.05 || f_single > 0.95));

  const SamplerResult pt = run_parallel_tempering(target, TemperatureLadder::geometric(8, 200.0), s);
  CHECK(fraction_positive(pt) == doctest::Approx(0.5).epsilon(0.2));
  for (std::size_t k = 0; k < pt.swaps_accepted.size(); ++k) CHECK(pt.swaps_accepted[k] > 0);
}

TEST_CASE("discrete target satisfies detailed balance") {
  const std::array<double, 5> w{1.0, 2.0, 3.0, 4.0, 5.0};
  const FiveStateTarget target(w);
  SamplerSettings s;
  s.n_samples = 1000000;
  s.burn_in_fraction = 0.0;
  s.seed = 9;
  for (const bool tempered : {false, true}) {
    const SamplerResult r = tempered ? run_parallel_tempering(target, TemperatureLadder({1.0, 3.0}), s)
                                     : run_single_chain(target, s);
    std::array<double, 5> counts{};
    for (const auto& x : r.posterior) counts[static_cast<std::size_t>(x[0])] += 1.0;
    double tv = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
      tv += std::abs(counts[i] / static_cast<double>(r.posterior.size()) - w[i] / 15.0);
    }
    CHECK(0.5 * tv < 0.02);
  }
}

TEST_CASE("a one-rung ladder is the single chain") {
  BoxTarget target({-10, -10}, {10, 10}, {1.0, 1.0}, gaussian_2d);
  SamplerSettings s;
  s.n_samples = 2000;
  s.seed = 4;
  const SamplerResult a = run_single_chain(target, s);
  const SamplerResult b = run_parallel_tempering(target, TemperatureLadder({1.0}), s);
  CHECK(a.posterior == b.posterior);
  CHECK(a.acceptance_rate == b.acceptance_rate);
  CHECK(a.swaps_attempted.empty());
}

TEST_CASE("equal temperatures always swap") {
  // The ladder must be strictly increasing, so feed states directly.
  ChainState a, b;
  a.temperature = b.temperature = 1.0;
  a.log_likelihood = -100.0;
  b.log_likelihood = -1.0;
  CHECK(swap_accept_prob(a, b) == 1.0);
  CHECK(swap_accept_prob(b, a) == 1.0);
}

TEST_CASE("acceptance rate counts post-burn-in acceptances exactly") {
  BoxTarget target({-10, -10}, {10, 10}, {1.0, 1.0}, gaussian_2d);
  SamplerSettings s;
  s.n_samples = 5000;
  s.burn_in_fraction = 0.2;
  const SamplerResult r = run_single_chain(target, s);
  const ChainTrace& t = r.traces.front();
  REQUIRE(t.size() == 5000);
  CHECK(r.burn_in == 1000);
  CHECK(r.posterior.size() == 4000);
  const auto accepted = std::accumulate(t.accepted.begin() + 1000, t.accepted.end(), 0);
  CHECK(r.acceptance_rate == static_cast<double>(accepted) / 4000.0);
  // Every accepted step moves the chain, every rejected step repeats it.
  for (std::size_t i = 1; i < t.size(); ++i) {
    const bool moved = t.iterate(i)[0] != t.iterate(i - 1)[0] || t.iterate(i)[1] != t.iterate(i - 1)[1];
    REQUIRE(moved == (t.accepted[i] != 0));
  }
}

TEST_CASE("zero burn-in keeps every iterate") {
  BoxTarget target({-10}, {10}, {1.0}, [](std::span<const double> x) { return -0.5 * x[0] * x[0]; });
  SamplerSettings s;
  s.n_samples = 777;
  s.burn_in_fraction = 0.0;
  CHECK(run_single_chain(target, s).posterior.size() == 777);
}

TEST_CASE("budget conventions") {
  BoxTarget target({-10}, {10}, {1.0}, [](std::span<const double> x) { return -0.5 * x[0] * x[0]; });
  SamplerSettings s;
  s.n_samples = 1000;
  s.burn_in_fraction = 0.0;
  const auto ladder = TemperatureLadder::geometric(4, 10.0);
  CHECK(run_parallel_tempering(target, ladder, s).traces[3].size() == 1000);
  s.budget = BudgetConvention::Total;
  CHECK(run_parallel_tempering(target, ladder, s).traces[3].size() == 250);
}

TEST_CASE("parallel stepping reproduces the sequential traces") {
  BoxTarget target({-8}, {8}, {0.4}, two_modes);
  SamplerSettings s;
  s.n_samples = 3000;
  s.seed = 12;
  const auto ladder = TemperatureLadder::geometric(6, 50.0);
  s.sequential = true;
  const SamplerResult a = run_parallel_tempering(target, ladder, s);
  s.sequential = false;
  const SamplerResult b = run_parallel_tempering(target, ladder, s);
  REQUIRE(a.traces.size() == b.traces.size());
  for (std::size_t k = 0; k < a.traces.size(); ++k) {
    CHECK(a.traces[k].values == b.traces[k].values);
    CHECK(a.traces[k].log_likelihood == b.traces[k].log_likelihood);
  }
  CHECK(a.swaps_accepted == b.swaps_accepted);
}

TEST_CASE("invalid starting region is reported") {
  BoxTarget target({-1}, {1}, {0.1}, [](std::span<const double>) { return -INFINITY; });
  SamplerSettings s;
  s.max_initial_draws = 50;
  CHECK_THROWS_AS(run_single_chain(target, s), AllProposalsInvalid);
}

TEST_CASE("invalid proposals are rejected without stopping the chain") {
  BoxTarget target({-1}, {1}, {0.5}, [](std::span<const double> x) { return x[0] > 0.5 ? -INFINITY : 0.0; });
  SamplerSettings s;
  s.n_samples = 5000;
  s.seed = 2;
  const SamplerResult r = run_single_chain(target, s);
  for (const auto& x : r.posterior) REQUIRE(x[0] <= 0.5);
}

TEST_CASE("trace files round trip") {
  testing::TempDir dir("trace");
  BoxTarget target({-10, -10}, {10, 10}, {1.0, 1.0}, gaussian_2d);
  SamplerSettings s;
  s.n_samples = 300;
  s.burn_in_fraction = 0.1;
  const SamplerResult r = run_parallel_tempering(target, TemperatureLadder::geometric(3, 5.0), s);
  write_trace_csv(dir.file("trace.csv"), r);
  const TraceTable t = read_trace_csv(dir.file("trace.csv"));
  CHECK(t.names == std::vector<std::string>{"x1", "x2"});
  CHECK(t.iterates == r.posterior);
}

}
