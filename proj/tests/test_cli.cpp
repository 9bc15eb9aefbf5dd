#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "semidec/cli.hpp"
#include "semidec/config.hpp"
#include "semidec/engine.hpp"
#include "semidec/errors.hpp"

using namespace semidec;
namespace fs = std::filesystem;

namespace {

// Fresh scratch directory per test case, removed on destruction.
struct ScratchDir {
  fs::path path;

  explicit ScratchDir(const std::string& name) {
    path = fs::temp_directory_path() /
           ("semidec_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }

  std::string file(const std::string& name, const std::string& body) const {
    const fs::path p = path / name;
    std::ofstream out(p);
    out << body;
    return p.string();
  }

  std::string read(const std::string& name) const {
    std::ifstream in(path / name, std::ios::binary);
    std::ostringstream body;
    body << in.rdbuf();
    return body.str();
  }

  bool exists(const std::string& name) const { return fs::exists(path / name); }
};

struct CaptureStreams {
  std::ostringstream out, err;
  std::streambuf* old_out;
  std::streambuf* old_err;
  CaptureStreams() {
    old_out = std::cout.rdbuf(out.rdbuf());
    old_err = std::cerr.rdbuf(err.rdbuf());
  }
  ~CaptureStreams() {
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
  }
};

struct EnvVar {
  std::string name;
  EnvVar(const std::string& n, const std::string& value) : name(n) {
    ::setenv(name.c_str(), value.c_str(), 1);
  }
  ~EnvVar() { ::unsetenv(name.c_str()); }
};

const char* kRunText = R"([network]
components = 5, 5
topology = ring

[objective]
kind = quadratic
dimension = 4
noise_std = 0.3
inter = noniid
inter_scale = 2

[run]
primitives = s2s,s2a
K = 2
H = 5
T = 20
eta = 0.05
seeds = 0,1
)";

const char* kBoundsText = R"([bounds]
n = 100
K = 20
H = 5
p = 0.5
L = 1
sigma = 0.1
zeta_intra = 0.5
zeta_inter = 0.5
epsilon = 1e-3
regime = convex
)";

CliOptions options_for(const std::string& config, const ScratchDir& dir) {
  CliOptions opt;
  opt.config_path = config;
  opt.out_dir = (dir.path / "out").string();
  return opt;
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("simulate writes one trace per primitive and seed plus summaries") {
  ScratchDir dir("simulate");
  const std::string config = dir.file("run.conf", kRunText);
  CaptureStreams capture;
  const int code = cmd_simulate(options_for(config, dir));
  REQUIRE(code == 0);
  for (const char* name :
       {"s2s_K2_H5_ring_seed0.csv", "s2s_K2_H5_ring_seed1.csv",
        "s2a_K2_H5_ring_seed0.csv", "s2a_K2_H5_ring_seed1.csv"}) {
    CHECK(fs::exists(dir.path / "out" / name));
  }
  const std::string out = capture.out.str();
  CHECK(out.find("summary: primitive=s2s") != std::string::npos);
  CHECK(out.find("summary: primitive=s2a") != std::string::npos);
  CHECK(out.find("final_gap_stderr=") != std::string::npos);  // two seeds
}

TEST_CASE("simulate CSV bodies match a direct engine run and re-running is "
          "byte-identical") {
  ScratchDir dir("idempotent");
  const std::string config = dir.file("run.conf", kRunText);
  CliOptions opt = options_for(config, dir);
  {
    CaptureStreams capture;
    REQUIRE(cmd_simulate(opt) == 0);
  }
  const std::string first = dir.read("out/s2a_K2_H5_ring_seed1.csv");
  REQUIRE(!first.empty());

  // Direct library evaluation of the same (primitive, seed) cell.
  const ExperimentConfig exp =
      load_experiment_config(ParsedConfig::from_file(config));
  const SimConfig sim = to_sim_config(exp, Primitive::S2A, 1);
  const Topology topo =
      build_topology(sim.topology, sim.component_sizes, sim.seed, sim.degree);
  const auto objective = make_objective(exp.objective, topo, 1);
  std::ostringstream direct;
  write_trace_csv(run(sim, *objective), direct);
  CHECK(first == direct.str());

  {
    CaptureStreams capture;
    REQUIRE(cmd_simulate(opt) == 0);
  }
  CHECK(dir.read("out/s2a_K2_H5_ring_seed1.csv") == first);
}

TEST_CASE("parallel execution does not change the outputs") {
  ScratchDir dir("jobs");
  const std::string config = dir.file("run.conf", kRunText);
  CliOptions serial = options_for(config, dir);
  serial.out_dir = (dir.path / "serial").string();
  CliOptions parallel = options_for(config, dir);
  parallel.out_dir = (dir.path / "parallel").string();
  parallel.jobs = 4;
  CaptureStreams capture;
  REQUIRE(cmd_simulate(serial) == 0);
  REQUIRE(cmd_simulate(parallel) == 0);
  for (const char* name :
       {"s2s_K2_H5_ring_seed0.csv", "s2s_K2_H5_ring_seed1.csv",
        "s2a_K2_H5_ring_seed0.csv", "s2a_K2_H5_ring_seed1.csv"}) {
    CHECK(dir.read(std::string("serial/") + name) ==
          dir.read(std::string("parallel/") + name));
  }
}

TEST_CASE("seed environment override replaces the config seed list") {
  ScratchDir dir("seedenv");
  const std::string config = dir.file("run.conf", kRunText);
  EnvVar env("SEMIDEC_SEED", "7");
  CaptureStreams capture;
  REQUIRE(cmd_simulate(options_for(config, dir)) == 0);
  CHECK(fs::exists(dir.path / "out" / "s2s_K2_H5_ring_seed7.csv"));
  CHECK(!fs::exists(dir.path / "out" / "s2s_K2_H5_ring_seed0.csv"));
  // Single seed: the standard-error column disappears.
  CHECK(capture.out.str().find("final_gap_stderr=") == std::string::npos);
}

TEST_CASE("malformed seed override is a config error") {
  ScratchDir dir("seedbad");
  const std::string config = dir.file("run.conf", kRunText);
  EnvVar env("SEMIDEC_SEED", "7,abc");
  CaptureStreams capture;
  CHECK(cmd_simulate(options_for(config, dir)) == 2);
  CHECK(capture.err.str().find("SEMIDEC_SEED") != std::string::npos);
}

TEST_CASE("exit codes map the error taxonomy") {
  ScratchDir dir("codes");
  CaptureStreams capture;
  // Missing file -> config error.
  CliOptions missing;
  missing.config_path = (dir.path / "nope.conf").string();
  missing.out_dir = (dir.path / "out").string();
  CHECK(cmd_simulate(missing) == 2);

  // K > n -> config error naming the field.
  std::string bad = kRunText;
  bad.replace(bad.find("K = 2"), 5, "K = 99");
  CHECK(cmd_simulate(options_for(dir.file("bad.conf", bad), dir)) == 2);
  CHECK(capture.err.str().find("run.K") != std::string::npos);

  // Diverging stepsize -> numerical error.
  std::string diverge = kRunText;
  diverge.replace(diverge.find("eta = 0.05"), 10, "eta = 1e200");
  CHECK(cmd_simulate(options_for(dir.file("div.conf", diverge), dir)) == 3);

  // S2S bounds at K = 1 -> theory-domain error.
  std::string k1 = kBoundsText;
  k1.replace(k1.find("K = 20"), 6, "K = 1");
  CHECK(cmd_bounds(options_for(dir.file("k1.conf", k1), dir)) == 4);
}

TEST_CASE("bounds prints both primitives and the winners") {
  ScratchDir dir("bounds");
  const std::string config = dir.file("bounds.conf", kBoundsText);
  CaptureStreams capture;
  REQUIRE(cmd_bounds(options_for(config, dir)) == 0);
  const std::string out = capture.out.str();
  CHECK(out.find("s2s: T=") != std::string::npos);
  CHECK(out.find("s2a: T=") != std::string::npos);
  CHECK(out.find("rounds winner:") != std::string::npos);
  CHECK(out.find("communication winner:") != std::string::npos);
  CHECK(out.find("eta_star=") != std::string::npos);
}

TEST_CASE("sweep writes the axis CSV and simulates when asked") {
  ScratchDir dir("sweep");
  const std::string config = dir.file(
      "sweep.conf", std::string(kRunText) +
                        "\n[bounds]\nn = 10\nK = 2\nH = 5\np = 0.5\n"
                        "epsilon = 1e-2\nzeta_intra = 0.3\nzeta_inter = 0.3\n"
                        "axis = sampling_rate\ngrid = 0.4,0.8\n");
  CliOptions opt = options_for(config, dir);
  {
    CaptureStreams capture;
    REQUIRE(cmd_sweep(opt) == 0);
  }
  const std::string csv = dir.read("out/sweep_sampling_rate.csv");
  CHECK(csv.rfind("axis_value,T_s2s,T_s2a,gamma_s2s,gamma_s2a\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);  // header + 2 rows

  opt.simulate = true;
  {
    CaptureStreams capture;
    REQUIRE(cmd_sweep(opt) == 0);
  }
  const std::string sim = dir.read("out/sweep_sampling_rate_sim.csv");
  CHECK(sim.rfind("axis_value,gap_s2s,gap_s2a\n", 0) == 0);
  CHECK(std::count(sim.begin(), sim.end(), '\n') == 3);
}

TEST_CASE("sweeping the mixing parameter skips simulation with a note") {
  ScratchDir dir("sweepmix");
  const std::string config = dir.file(
      "sweep.conf", std::string(kRunText) +
                        "\n[bounds]\nn = 10\nK = 2\nH = 5\np = 0.5\n"
                        "epsilon = 1e-2\naxis = mixing_param\n"
                        "grid = 0.25,0.5,1.0\n");
  CliOptions opt = options_for(config, dir);
  opt.simulate = true;
  CaptureStreams capture;
  REQUIRE(cmd_sweep(opt) == 0);
  CHECK(dir.exists("out/sweep_mixing_param.csv"));
  CHECK(!dir.exists("out/sweep_mixing_param_sim.csv"));
  CHECK(capture.err.str().find("skipped") != std::string::npos);
}

TEST_CASE("sweep without an axis is a config error") {
  ScratchDir dir("sweepnoaxis");
  const std::string config = dir.file("bounds.conf", kBoundsText);
  CaptureStreams capture;
  CHECK(cmd_sweep(options_for(config, dir)) == 2);
}

TEST_CASE("measured heterogeneity round-trips into the bounds evaluator") {
  ScratchDir dir("roundtrip");
  const std::string config = dir.file("run.conf", kRunText);
  CliOptions opt = options_for(config, dir);
  {
    CaptureStreams capture;
    REQUIRE(cmd_measure_het(opt) == 0);
    CHECK(capture.out.str().find("zeta_intra=") != std::string::npos);
    CHECK(capture.out.str().find("zeta_inter=") != std::string::npos);
  }
  REQUIRE(dir.exists("out/bounds_measured.conf"));

  CliOptions bounds_opt;
  bounds_opt.config_path = (dir.path / "out" / "bounds_measured.conf").string();
  bounds_opt.out_dir = (dir.path / "out").string();
  CaptureStreams capture;
  CHECK(cmd_bounds(bounds_opt) == 0);
}

TEST_CASE("measured estimates respond to the generating scales") {
  ScratchDir dir("hetscales");
  std::string weak = kRunText;
  // Drop noise so the measured constants isolate the data heterogeneity.
  weak.replace(weak.find("noise_std = 0.3"), 15, "noise_std = 0.0");
  std::string strong = weak;
  strong.replace(strong.find("inter_scale = 2"), 15, "inter_scale = 4");

  double weak_inter = 0.0;
  double strong_inter = 0.0;
  {
    CaptureStreams capture;
    CliOptions opt = options_for(dir.file("weak.conf", weak), dir);
    opt.out_dir = (dir.path / "weak").string();
    REQUIRE(cmd_measure_het(opt) == 0);
    const BoundsConfig parsed = load_bounds_config(ParsedConfig::from_file(
        (dir.path / "weak" / "bounds_measured.conf").string()));
    weak_inter = parsed.inputs.zeta_inter;
  }
  {
    CaptureStreams capture;
    CliOptions opt = options_for(dir.file("strong.conf", strong), dir);
    opt.out_dir = (dir.path / "strong").string();
    REQUIRE(cmd_measure_het(opt) == 0);
    const BoundsConfig parsed = load_bounds_config(ParsedConfig::from_file(
        (dir.path / "strong" / "bounds_measured.conf").string()));
    strong_inter = parsed.inputs.zeta_inter;
  }
  CHECK(strong_inter > weak_inter);
  CHECK(weak_inter > 0.0);
}

TEST_CASE("homogeneous data measures zero heterogeneity through the CLI") {
  ScratchDir dir("hetzero");
  std::string homo = kRunText;
  homo.replace(homo.find("noise_std = 0.3"), 15, "noise_std = 0.0");
  homo.replace(homo.find("inter = noniid"), 14, "inter = iid");
  homo.replace(homo.find("inter_scale = 2"), 15, "inter_scale = 0");
  CaptureStreams capture;
  REQUIRE(cmd_measure_het(options_for(dir.file("homo.conf", homo), dir)) == 0);
  const BoundsConfig parsed = load_bounds_config(ParsedConfig::from_file(
      (dir.path / "out" / "bounds_measured.conf").string()));
  CHECK(parsed.inputs.zeta_intra <= 1e-10);
  CHECK(parsed.inputs.zeta_inter <= 1e-10);
}

#ifdef SEMIDEC_CLI_PATH
TEST_CASE("installed binary smoke test: help, subcommands, exit codes") {
  ScratchDir dir("subprocess");
  const std::string config = dir.file("run.conf", kRunText);
  const std::string cli = SEMIDEC_CLI_PATH;
  const std::string quiet = " >/dev/null 2>&1";

  auto exit_code = [](int status) { return WEXITSTATUS(status); };
  CHECK(exit_code(std::system((cli + " --help" + quiet).c_str())) == 0);
  CHECK(exit_code(std::system((cli + " simulate --config " + config +
                               " --out " + (dir.path / "out").string() + quiet)
                                  .c_str())) == 0);
  CHECK(fs::exists(dir.path / "out" / "s2s_K2_H5_ring_seed0.csv"));
  // Unknown flag -> usage error.
  CHECK(exit_code(std::system(
            (cli + " simulate --config " + config + " --frobnicate" + quiet)
                .c_str())) == 2);
  // Missing subcommand -> usage error.
  CHECK(exit_code(std::system((cli + " --config " + config + quiet).c_str())) ==
        2);
  // Config error propagates through the process boundary.
  std::string bad = kRunText;
  bad.replace(bad.find("K = 2"), 5, "K = 99");
  CHECK(exit_code(std::system((cli + " simulate --config " +
                               dir.file("bad.conf", bad) + quiet)
                                  .c_str())) == 2);
}
#endif

TEST_SUITE_END();
