#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "coralinv/commands.hpp"
#include "coralinv/config.hpp"
#include "coralinv/csv.hpp"
#include "coralinv/defaults.hpp"
#include "support.hpp"

using namespace coralinv;

namespace {

const std::string kData = CORALINV_DATA_DIR;
const std::string kCli = CORALINV_CLI;

RunConfig reference_config(const std::string& name = "reference_time.ini") {
  return load_run_config(kData + "/" + name);
}

RunConfig parse(const std::string& text) { return parse_run_config(text, kData, "test.ini"); }

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  REQUIRE(pos != std::string::npos);
  return text.replace(pos, from.size(), to);
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

struct RunResult {
  int code = 0;
  std::string err;
};

RunResult run_cli(const std::string& args, const testing::TempDir& dir) {
  const std::string err = dir.file("stderr.txt");
  const std::string cmd = "\"" + kCli + "\" " + args + " > \"" + dir.file("stdout.txt") + "\" 2> \"" + err + "\"";
  const int status = std::system(cmd.c_str());
  RunResult r;
#ifdef WEXITSTATUS
  r.code = WEXITSTATUS(status);
#else
  r.code = status;
#endif
  r.err = testing::slurp(err);
  return r;
}

}  // namespace

TEST_SUITE("config_cli") {

TEST_CASE("reference config loads the three-assemblage setup") {
  const RunConfig c = reference_config();
  CHECK(c.simulation.assemblages.size() == 3);
  CHECK(c.simulation.assemblages[0].name == "shallow");
  CHECK(c.theta == reference_parameters());
  CHECK(c.categories == std::vector<std::string>{"shallow", "moderate_deep", "deep", "sediment"});
  CHECK(c.free_names == std::vector<std::string>{"epsilon", "alpha_s"});
  CHECK(c.structure == Structure::Time);
  CHECK(c.observed_bin == 50.0);
  CHECK(c.adaptation.enabled);
  CHECK(c.sampler.samples == 10000);
  CHECK(c.surface.grid_a.size() == 50);
  CHECK(c.surface.grid_a.front() == 0.003);
  CHECK(c.surface.grid_b.back() == -0.003);
}

TEST_CASE("free mask tokens") {
  auto mask = resolve_free_mask({"epsilon", "alpha_s"}, 3);
  CHECK(std::count(mask.begin(), mask.end(), true) == 2);
  CHECK(mask[0]);
  CHECK(mask[2]);
  mask = resolve_free_mask({"all"}, 3);
  CHECK(std::count(mask.begin(), mask.end(), true) == 27);
  mask = resolve_free_mask({"glv"}, 6);
  CHECK(std::count(mask.begin(), mask.end(), true) == 3);
  mask = resolve_free_mask({"flow"}, 3);
  CHECK(std::count(mask.begin(), mask.end(), true) == 12);
  mask = resolve_free_mask({"sed.2.*"}, 3);
  CHECK(std::count(mask.begin(), mask.end(), true) == 4);
  CHECK(mask[*coordinate_index("sed.2.3", 3)]);
  CHECK_THROWS_AS(resolve_free_mask({"gamma"}, 3), ConfigError);
}

TEST_CASE("config errors name the section and key") {
  const std::string base = testing::slurp(kData + "/reference_time.ini");
  CHECK(error_of(replace(base, "samples = 10000", "samples = lots")).rfind("[sampler] samples:", 0) == 0);
  CHECK(error_of(replace(base, "seed = 1\n", "seed = 1\ncolour = red\n")).find("colour: unknown key") !=
        std::string::npos);
  CHECK(error_of(replace(base, "[glv]", "[gvl]")).find("unknown section [gvl]") != std::string::npos);
  CHECK(error_of(replace(base, "epsilon = 0.08", "epsilon = 0.2")).find("epsilon") != std::string::npos);
  CHECK(error_of(replace(base, "flow = 0.055, 0.082, 0.259, 0.288", "flow = 0.1, 0.082, 0.259, 0.288"))
            .find("[assemblage:shallow] flow") != std::string::npos);
  CHECK(error_of(replace(base, "structure = time", "structure = sideways")).find("[observation] structure") !=
        std::string::npos);
  CHECK(error_of(replace(base, "method = single", "method = gibbs")).find("[sampler] method") != std::string::npos);
  CHECK(error_of(replace(base, "parameters = epsilon, alpha_s", "parameters = epsilon, beta")).find("beta") !=
        std::string::npos);
  CHECK(error_of(replace(base, "burn_in = 0.15", "burn_in = 1.0")).find("[sampler] burn_in") != std::string::npos);
  CHECK(error_of(replace(base, "layer_interval = 50", "layer_interval = 33")).rfind("[simulation]", 0) == 0);
  CHECK(error_of(replace(base, "grid_a = 0.003, 0.15, 50", "grid_a = 0.003, 0.15")).find("[surface] grid_a") !=
        std::string::npos);
}

TEST_CASE("missing files are reported as such") {
  const std::string base = testing::slurp(kData + "/reference_time.ini");
  CHECK_THROWS_AS(parse(replace(base, "curves/flow.csv", "curves/nope.csv")), FileNotFound);
  CHECK_THROWS_AS(load_run_config(kData + "/nope.ini"), FileNotFound);
  RunConfig c = parse(replace(base, "reference/y_time.csv", "reference/nope.csv"));
  CHECK_THROWS_AS(load_observed_core(c), FileNotFound);
}

TEST_CASE("rendered config replays to the same run") {
  for (const char* name : {"reference_time.ini", "reference_depth.ini", "reference_pt.ini", "six_assemblage.ini"}) {
    const RunConfig a = reference_config(name);
    const std::string text = render_run_config(a);
    const RunConfig b = parse_run_config(text, "/nonexistent", "rendered");
    CHECK(b.theta == a.theta);
    CHECK(b.free == a.free);
    CHECK(b.categories == a.categories);
    CHECK(b.observed_path == a.observed_path);
    CHECK(b.steps.sigma == a.steps.sigma);
    CHECK(b.steps.floor == a.steps.floor);
    CHECK(b.sampler.seed == a.sampler.seed);
    CHECK(b.sampler.temperature_ladder().temperatures() == a.sampler.temperature_ladder().temperatures());
    CHECK(b.surface.grid_a == a.surface.grid_a);
    CHECK(b.simulation.t_start == a.simulation.t_start);
    CHECK(render_run_config(b) == text);
  }
}

TEST_CASE("overrides") {
  RunConfig c = reference_config("reference_pt.ini");
  apply_overrides(c, {42, true});
  CHECK(c.sampler.seed == 42);
  CHECK(c.sampler.sequential);
}

TEST_CASE("six-assemblage config has seven categories") {
  const RunConfig c = reference_config("six_assemblage.ini");
  CHECK(c.categories.size() == 7);
  CHECK(c.theta.dimension() == 51);
  CHECK(std::count(c.free.begin(), c.free.end(), true) == 51);
  const ObservedCore obs = load_observed_core(c);
  CHECK(obs.categories.size() == 7);
  CHECK(obs.structure == Structure::Depth);
}

TEST_CASE("synthesize writes files that reload as the observed core") {
  testing::TempDir dir("synth");
  RunConfig c = reference_config();
  const SynthesisOutput out = cmd_synthesize(c, dir.str());
  const ObservedCore t = read_time_core_csv(out.time_labels_csv, c.categories, c.simulation.layer_interval);
  CHECK(t.labels == out.core.time_labels);
  const ObservedCore d = read_depth_core_csv(out.depth_labels_csv, c.categories, c.simulation.depth_bin);
  CHECK(d.labels == out.core.depth_labels);
  // The shipped reference core is this same synthesis.
  CHECK(load_observed_core(c).labels == out.core.time_labels);
  CHECK(testing::slurp(out.provenance).find("epsilon") != std::string::npos);
  const CsvTable p = read_csv(out.proportions_csv);
  CHECK(p.rows.size() == out.core.time_steps());
}

TEST_CASE("inference is reproducible for a fixed seed") {
  testing::TempDir a("infer_a");
  testing::TempDir b("infer_b");
  RunConfig c = reference_config();
  c.sampler.samples = 300;
  c.summary.max_forward_draws = 20;
  std::ostringstream log;
  const InferenceOutput x = cmd_infer(c, a.str(), log);
  const InferenceOutput y = cmd_infer(c, b.str(), log);
  CHECK(testing::slurp(x.trace_csv) == testing::slurp(y.trace_csv));
  CHECK(testing::slurp(x.summary_json) == testing::slurp(y.summary_json));
  CHECK(x.result.posterior.size() == 255);
  CHECK(log.str().find("acceptance") != std::string::npos);
  CHECK(std::filesystem::exists(a.file("envelope_time.csv")));
  CHECK(std::filesystem::exists(a.file("envelope_depth.csv")));
  CHECK(std::filesystem::exists(a.file("provenance.ini")));
}

TEST_CASE("psrf over trace files") {
  testing::TempDir dir("psrf");
  RunConfig c = reference_config();
  c.sampler.samples = 200;
  c.sampler.burn_in = 0.0;
  c.summary.max_forward_draws = 5;
  std::ostringstream log;
  std::vector<std::string> paths;
  for (std::uint64_t seed : {1, 2}) {
    c.sampler.seed = seed;
    const std::string out = dir.file("run" + std::to_string(seed));
    paths.push_back(cmd_infer(c, out, log).trace_csv);
  }
  const PsrfReport r = cmd_psrf(paths, dir.file("psrf"), log);
  CHECK(r.names == std::vector<std::string>{"epsilon", "alpha_s"});
  CHECK(r.chains == 2);
  CHECK(r.length == 200);
  for (double v : r.values) CHECK(std::isfinite(v));
  CHECK(std::filesystem::exists(dir.file("psrf/psrf.json")));
  CHECK_THROWS_AS(cmd_psrf({paths[0]}, dir.file("psrf"), log), std::invalid_argument);

  TraceTable other = read_trace_csv(paths[1]);
  other.names = {"epsilon", "alpha_m"};
  CHECK_THROWS_AS(compute_psrf({read_trace_csv(paths[0]), other}), IncompatibleTraces);
}

TEST_CASE("command line exit codes") {
  testing::TempDir dir("cli");
  std::string text = render_run_config(reference_config());
  text = replace(text, kData + "/curves/flow.csv", dir.file("missing_flow.csv"));
  testing::spit(dir.file("broken.ini"), text);

  RunResult r = run_cli("synthesize --config \"" + dir.file("broken.ini") + "\" --out \"" + dir.file("o") + "\"", dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("FileNotFound") != std::string::npos);
  CHECK(r.err.find("missing_flow.csv") != std::string::npos);

  r = run_cli("synthesize --out x", dir);
  CHECK(r.code == 2);
  r = run_cli("frobnicate", dir);
  CHECK(r.code == 2);

  r = run_cli("synthesize --config \"" + kData + "/reference_time.ini\" --out \"" + dir.file("ok") + "\"", dir);
  CHECK(r.code == 0);
  CHECK(std::filesystem::exists(dir.file("ok/y_time.csv")));

  testing::spit(dir.file("t1.csv"),
                "iteration,replica,temperature,burn_in,log_likelihood,accepted,epsilon\n1,0,1,0,-1,1,0.08\n");
  testing::spit(dir.file("t2.csv"),
                "iteration,replica,temperature,burn_in,log_likelihood,accepted,alpha_s\n1,0,1,0,-1,1,-0.03\n");
  r = run_cli("psrf \"" + dir.file("t1.csv") + "\" --out \"" + dir.file("p") + "\"", dir);
  CHECK(r.code == 2);
  r = run_cli("psrf \"" + dir.file("t1.csv") + "\" \"" + dir.file("t2.csv") + "\" --out \"" + dir.file("p") + "\"",
              dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("IncompatibleTraces") != std::string::npos);
}

}
