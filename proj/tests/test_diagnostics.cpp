#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "coralinv/defaults.hpp"
#include "coralinv/diagnostics.hpp"
#include "support.hpp"

using namespace coralinv;

namespace {

std::vector<std::vector<double>> normal_chains(std::size_t m, std::size_t n, std::uint64_t seed,
                                               double spread = 0.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> chains(m, std::vector<double>(n));
  for (std::size_t c = 0; c < m; ++c) {
    for (auto& v : chains[c]) v = normal(rng) + spread * static_cast<double>(c);
  }
  return chains;
}

// Textbook Gelman-Rubin written from the definitions.
double reference_psrf(const std::vector<std::vector<double>>& chains) {
  const double m = static_cast<double>(chains.size());
  const double n = static_cast<double>(chains.front().size());
  std::vector<double> means;
  double w = 0.0;
  for (const auto& c : chains) {
    const double mu = std::accumulate(c.begin(), c.end(), 0.0) / n;
    means.push_back(mu);
    double s = 0.0;
    for (double v : c) s += (v - mu) * (v - mu);
    w += s / (n - 1.0);
  }
  w /= m;
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / m;
  double b = 0.0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b *= n / (m - 1.0);
  return std::sqrt(((n - 1.0) / n * w + b / n) / w);
}

}  // namespace

TEST_SUITE("diagnostics") {

TEST_CASE("psrf of independent chains is near one") {
  const auto chains = normal_chains(4, 2000, 1);
  const double r = psrf(chains);
  CHECK(r < 1.1);
  CHECK(r == doctest::Approx(reference_psrf(chains)).epsilon(1e-12));
}

TEST_CASE("psrf of disjoint chains is large") {
  CHECK(psrf(normal_chains(4, 500, 2, 10.0)) > 3.0);
}

TEST_CASE("psrf of identical chains equals the finite-sample value") {
  const auto one = normal_chains(1, 100, 3).front();
  // Identical chains have B = 0, so R = sqrt((n - 1) / n).
  CHECK(psrf({one, one, one}) == doctest::Approx(std::sqrt(99.0 / 100.0)));
}

TEST_CASE("psrf is affine invariant") {
  auto chains = normal_chains(3, 300, 4, 0.3);
  const double before = psrf(chains);
  for (auto& c : chains) {
    for (auto& v : c) v = -7.5 * v + 3.0;
  }
  CHECK(psrf(chains) == doctest::Approx(before).epsilon(1e-10));
}

TEST_CASE("psrf input checks") {
  CHECK_THROWS_AS(psrf(normal_chains(1, 100, 5)), std::invalid_argument);
  CHECK_THROWS_AS(psrf(normal_chains(2, 5, 5)), std::invalid_argument);
  CHECK_THROWS_AS(psrf({std::vector<double>(20, 1.0), std::vector<double>(20, 1.0)}), DegenerateChains);
  auto ragged = normal_chains(2, 50, 6);
  ragged[1].pop_back();
  CHECK_THROWS_AS(psrf(ragged), std::invalid_argument);
}

TEST_CASE("percentiles interpolate linearly") {
  const std::vector<double> v{4.0, 1.0, 3.0, 2.0, 5.0};
  CHECK(percentile(v, 0) == 1.0);
  CHECK(percentile(v, 100) == 5.0);
  CHECK(percentile(v, 50) == 3.0);
  CHECK(percentile(v, 5) == doctest::Approx(1.2));
  CHECK(percentile(v, 95) == doctest::Approx(4.8));
}

TEST_CASE("histogram mode") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(2.0, 0.5);
  std::vector<double> v(20000);
  for (auto& x : v) x = normal(rng);
  CHECK(histogram_mode(v) == doctest::Approx(2.0).epsilon(0.05));
  const std::vector<double> flat{1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 3.0};
  CHECK(freedman_diaconis_width(flat) == 0.0);
  CHECK(histogram_mode(flat) == 1.0);
}

TEST_CASE("summary of a single iterate") {
  const std::vector<std::vector<double>> it{{0.08, -0.03}};
  const auto s = summarize(it, {"epsilon", "alpha_s"}, 1.0,
                           [](std::span<const double>) -> std::optional<std::size_t> { return 4; });
  REQUIRE(s.parameters.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(s.parameters[i].mean == it[0][i]);
    CHECK(s.parameters[i].mode == it[0][i]);
    CHECK(s.parameters[i].p5 == it[0][i]);
    CHECK(s.parameters[i].p95 == it[0][i]);
  }
  CHECK(s.mc_mean == 4.0);
  CHECK(s.mc_std == 0.0);
  CHECK(s.mc_draws == 1);
}

TEST_CASE("summary statistics are consistent") {
  std::mt19937_64 rng(8);
  std::gamma_distribution<double> gamma(2.0, 1.0);
  std::vector<std::vector<double>> it(5000);
  for (auto& x : it) x = {gamma(rng)};
  const auto s = summarize(it, {"x"}, 0.3, [](std::span<const double> x) -> std::optional<std::size_t> {
    if (x[0] > 8.0) return std::nullopt;
    return static_cast<std::size_t>(x[0]);
  });
  const auto& p = s.parameters[0];
  std::vector<double> flat;
  for (const auto& x : it) flat.push_back(x[0]);
  const double bw = freedman_diaconis_width(flat);
  CHECK(p.p5 <= p.mean);
  CHECK(p.mean <= p.p95);
  CHECK(p.mode >= p.p5 - bw);
  CHECK(p.mode <= p.p95 + bw);
  CHECK(s.samples == 5000);
  CHECK(s.acceptance_rate == 0.3);
  CHECK(s.mc_draws <= 500);
  CHECK(s.mc_draws > 450);
}

TEST_CASE("thinned indices") {
  CHECK(thinned_indices(3, 10) == std::vector<std::size_t>{0, 1, 2});
  const auto t = thinned_indices(1000, 10);
  CHECK(t.size() == 10);
  CHECK(t.front() == 0);
  CHECK(std::is_sorted(t.begin(), t.end()));
  CHECK(std::adjacent_find(t.begin(), t.end()) == t.end());
}

TEST_CASE("envelope of identical draws collapses onto the prediction") {
  const SimulationConfig cfg = reference_simulation();
  const BoundaryConditions bc = default_boundary_conditions();
  const auto cats = category_names(cfg);
  const ParameterVector theta = reference_parameters();
  const CoreRecord core = simulate(theta, bc, cfg);
  const Envelopes env = prediction_envelope(std::vector<ParameterVector>(5, theta), bc, cfg, cats);
  REQUIRE(env.time.size() == core.time_steps());
  for (std::size_t t = 0; t < env.time.size(); ++t) {
    CHECK(env.time.p5[t] == env.time.p95[t]);
    CHECK(env.time.p5[t] == core.time_labels[t]);
    CHECK(env.time.contains(t, core.time_labels[t]));
  }
  REQUIRE(env.depth.size() == core.depth_bins());
  for (std::size_t i = 0; i < env.depth.size(); ++i) CHECK(env.depth.mean[i] == core.depth_labels[i]);
}

TEST_CASE("envelope frequencies are distributions") {
  const SimulationConfig cfg = reference_simulation();
  const BoundaryConditions bc = default_boundary_conditions();
  Rng rng = make_stream(3, 0);
  std::vector<ParameterVector> draws;
  for (int i = 0; i < 12; ++i) {
    ParameterVector theta = reference_parameters();
    theta.glv.epsilon = 0.03 + 0.1 * uniform01(rng);
    draws.push_back(theta);
  }
  const Envelopes env = prediction_envelope(draws, bc, cfg, category_names(cfg));
  for (const auto* e : {&env.time, &env.depth}) {
    const Eigen::VectorXd sums = e->frequencies.rowwise().sum();
    CHECK((sums.array() - 1.0).abs().maxCoeff() < 1e-12);
    for (std::size_t i = 0; i < e->size(); ++i) {
      CHECK(e->p5[i] <= e->mean[i] + 1e-12);
      CHECK(e->mean[i] <= e->p95[i] + 1e-12);
    }
  }
}

TEST_CASE("likelihood surface shape and inadmissible corner") {
  const SimulationConfig cfg = reference_simulation();
  const BoundaryConditions bc = default_boundary_conditions();
  const CoreRecord core = simulate(reference_parameters(), bc, cfg);
  const ObservedCore obs = observe(core, Structure::Time, category_names(cfg), cfg.layer_interval);
  const auto axis = linspace(0.05, 0.25, 5);
  const SurfaceGrid g = likelihood_surface("flow.2.2", "flow.2.3", axis, axis, reference_parameters(), obs, bc, cfg);
  CHECK(g.nodes() == 25);
  CHECK(g.log_likelihood.rows() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      const double v = g.log_likelihood(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      // flow.2.2 > flow.2.3 is unordered; flow.2.3 above flow.2.4 = 0.185 too.
      const bool admissible = axis[i] <= axis[j] && axis[j] <= 0.185 && axis[i] >= 0.008;
      CHECK(std::isfinite(v) == admissible);
    }
  }
  CHECK_THROWS(likelihood_surface("nope", "epsilon", axis, axis, reference_parameters(), obs, bc, cfg));
}

TEST_CASE("likelihood surface peaks near the generating values") {
  const SimulationConfig cfg = reference_simulation();
  const BoundaryConditions bc = default_boundary_conditions();
  const CoreRecord core = simulate(reference_parameters(), bc, cfg);
  const ObservedCore obs = observe(core, Structure::Time, category_names(cfg), cfg.layer_interval);
  const SurfaceGrid g = likelihood_surface("epsilon", "alpha_s", linspace(0.02, 0.14, 7), linspace(-0.09, -0.01, 5),
                                           reference_parameters(), obs, bc, cfg);
  const SurfaceRegion top = high_likelihood_region(g, std::log(100.0));
  CHECK(top.count >= 1);
  // The generating node (0.08, -0.03) sits on the grid.
  CHECK(top.contains(3, 3));
}

TEST_CASE("region connectivity") {
  SurfaceGrid g;
  g.axis_a = linspace(0, 1, 4);
  g.axis_b = linspace(0, 1, 4);
  g.log_likelihood = Eigen::MatrixXd::Constant(4, 4, -100.0);
  g.log_likelihood(1, 1) = 0.0;
  g.log_likelihood(1, 2) = -1.0;
  g.log_likelihood(2, 2) = -2.0;
  SurfaceRegion r = high_likelihood_region(g, 3.0);
  CHECK(r.count == 3);
  CHECK(r.connected());
  g.log_likelihood(3, 0) = -0.5;  // diagonal-only neighbour of nothing in the region
  r = high_likelihood_region(g, 3.0);
  CHECK(r.count == 4);
  CHECK_FALSE(r.connected());
  g.log_likelihood(0, 0) = -INFINITY;
  CHECK(high_likelihood_region(g, 3.0).count == 4);
}

TEST_CASE("parallel_for visits every index once") {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; }, 4);
  for (const auto& h : hits) CHECK(h.load() == 1);
  CHECK_THROWS_AS(parallel_for(10, [](std::size_t i) { if (i == 7) throw std::runtime_error("x"); }, 3),
                  std::runtime_error);
}

TEST_CASE("writers produce the documented layouts") {
  testing::TempDir dir("writers");
  SurfaceGrid g;
  g.name_a = "epsilon";
  g.name_b = "alpha_s";
  g.axis_a = {0.1, 0.2};
  g.axis_b = {-0.1};
  g.log_likelihood = Eigen::MatrixXd::Constant(2, 1, -3.5);
  g.log_likelihood(1, 0) = -INFINITY;
  write_surface_csv(dir.file("s.csv"), g);
  const std::string s = testing::slurp(dir.file("s.csv"));
  CHECK(s.rfind("epsilon\\alpha_s,-0.1\n", 0) == 0);
  CHECK(s.find("0.1,-3.5\n") != std::string::npos);

  PosteriorSummary summary;
  summary.parameters = {{"epsilon", 0.08, 0.079, 0.06, 0.1}};
  summary.samples = 10;
  summary.mean_prediction_mc = 3;
  write_summary_json(dir.file("s.json"), summary);
  const std::string j = testing::slurp(dir.file("s.json"));
  CHECK(j.find("\"epsilon\"") != std::string::npos);
  CHECK(j.find("mean_prediction_mc_score") != std::string::npos);
}

}
