#include "semidec/cli.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>
#include <vector>

#include "semidec/config.hpp"
#include "semidec/csv.hpp"
#include "semidec/errors.hpp"
#include "semidec/rng.hpp"

namespace semidec {

namespace {

std::string fmt6(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.6g", value);
  return buffer;
}

// Runs body() and maps the library's error hierarchy onto the stable exit
// codes: 2 configuration, 3 numerical, 4 outside the theory's domain.
int guard(const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const TheoryDomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

// SEMIDEC_SEED (comma-separated unsigned integers) overrides run.seeds.
void apply_seed_override(std::vector<std::uint64_t>& seeds) {
  const char* raw = std::getenv("SEMIDEC_SEED");
  if (raw == nullptr || *raw == '\0') return;
  std::vector<std::uint64_t> parsed;
  std::istringstream stream(raw);
  std::string part;
  while (std::getline(stream, part, ',')) {
    try {
      std::size_t used = 0;
      const unsigned long long value = std::stoull(part, &used);
      if (used != part.size()) throw std::invalid_argument(part);
      parsed.push_back(static_cast<std::uint64_t>(value));
    } catch (const std::exception&) {
      throw ConfigError("SEMIDEC_SEED: expected comma-separated unsigned "
                        "integers, got '" +
                        std::string(raw) + "'");
    }
  }
  if (parsed.empty()) {
    throw ConfigError("SEMIDEC_SEED is set but holds no seeds");
  }
  seeds = std::move(parsed);
}

void ensure_out_dir(const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw ConfigError("cannot create output directory '" + out_dir +
                      "': " + ec.message());
  }
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file '" + path + "'");
  out << body;
  if (!out) throw ConfigError("failed while writing '" + path + "'");
}

// Work-stealing loop over [0, count); tasks must not touch shared state.
void run_parallel(int jobs, int count, const std::function<void(int)>& task) {
  if (jobs <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) task(i);
    return;
  }
  const int workers = std::min(jobs, count);
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
          task(i);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string join_ints(const std::vector<int>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ",";
    out += std::to_string(values[i]);
  }
  return out;
}

std::string join_seeds(const std::vector<std::uint64_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ",";
    out += std::to_string(values[i]);
  }
  return out;
}

struct SimJob {
  Primitive primitive;
  std::uint64_t seed;
};

struct SimJobResult {
  std::string filename;
  std::string csv;
  double final_gap = 0.0;
  std::int64_t uplinks = 0;
  std::int64_t downlinks = 0;
};

SimJobResult run_one(const ExperimentConfig& experiment, const SimJob& job) {
  const SimConfig sim =
      to_sim_config(experiment, job.primitive, job.seed);
  const Topology topology = build_topology(sim.topology, sim.component_sizes,
                                           sim.seed, sim.degree);
  const auto objective =
      make_objective(experiment.objective, topology, job.seed);
  const RunTrace trace = run(sim, *objective);
  std::ostringstream csv;
  write_trace_csv(trace, csv);
  SimJobResult result;
  result.filename = trace_filename(sim);
  result.csv = csv.str();
  result.final_gap = trace.final_gap;
  result.uplinks = trace.uplinks;
  result.downlinks = trace.downlinks;
  return result;
}

struct GapStats {
  double mean = 0.0;
  double standard_error = 0.0;
  int count = 0;
};

GapStats gap_stats(const std::vector<double>& gaps) {
  GapStats stats;
  stats.count = static_cast<int>(gaps.size());
  if (gaps.empty()) return stats;
  double sum = 0.0;
  for (double g : gaps) sum += g;
  stats.mean = sum / stats.count;
  if (stats.count >= 2) {
    double sq = 0.0;
    for (double g : gaps) sq += (g - stats.mean) * (g - stats.mean);
    stats.standard_error = std::sqrt(sq / (stats.count - 1) / stats.count);
  }
  return stats;
}

}  // namespace

int cmd_simulate(const CliOptions& options) {
  return guard([&] {
    const ParsedConfig parsed = ParsedConfig::from_file(options.config_path);
    ExperimentConfig experiment = load_experiment_config(parsed);
    apply_seed_override(experiment.seeds);
    ensure_out_dir(options.out_dir);

    std::vector<SimJob> jobs;
    for (Primitive primitive : experiment.primitives) {
      for (std::uint64_t seed : experiment.seeds) {
        jobs.push_back(SimJob{primitive, seed});
      }
    }
    std::vector<SimJobResult> results(jobs.size());
    run_parallel(options.jobs, static_cast<int>(jobs.size()),
                 [&](int i) { results[i] = run_one(experiment, jobs[i]); });

    for (const SimJobResult& result : results) {
      write_file(options.out_dir + "/" + result.filename, result.csv);
    }

    std::cout << "config: topology=" << graph_kind_name(experiment.topology)
              << " components=" << join_ints(experiment.component_sizes)
              << " objective="
              << (experiment.objective.kind == ObjectiveSpec::Kind::Quadratic
                      ? "quadratic"
                      : "logistic")
              << " dimension=" << experiment.objective.dimension
              << " K=" << experiment.K << " H=" << experiment.H
              << " T=" << experiment.T << " eta=" << fmt6(experiment.eta)
              << " seeds=" << join_seeds(experiment.seeds) << "\n";
    for (Primitive primitive : experiment.primitives) {
      std::vector<double> gaps;
      std::int64_t uplinks = 0;
      std::int64_t downlinks = 0;
      for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (jobs[i].primitive != primitive) continue;
        gaps.push_back(results[i].final_gap);
        uplinks = results[i].uplinks;
        downlinks = results[i].downlinks;
      }
      const GapStats stats = gap_stats(gaps);
      std::cout << "summary: primitive=" << primitive_name(primitive)
                << " seeds=" << stats.count
                << " final_gap_mean=" << fmt6(stats.mean);
      if (stats.count >= 2) {
        std::cout << " final_gap_stderr=" << fmt6(stats.standard_error);
      }
      std::cout << " uplinks=" << uplinks << " downlinks=" << downlinks
                << "\n";
    }
  });
}

int cmd_bounds(const CliOptions& options) {
  return guard([&] {
    const ParsedConfig parsed = ParsedConfig::from_file(options.config_path);
    const BoundsConfig bounds = load_bounds_config(parsed);
    const BoundInputs& in = bounds.inputs;

    const BoundResult s2s = rounds_to_epsilon(in, Primitive::S2S);
    const BoundResult s2a = rounds_to_epsilon(in, Primitive::S2A);
    const CommCost cost_s2s =
        communication_cost(s2s, Primitive::S2S, in.n, in.K, in.H, s2a);
    const CommCost cost_s2a =
        communication_cost(s2a, Primitive::S2A, in.n, in.K, in.H, s2s);

    std::cout << "inputs: regime="
              << (in.regime == Regime::Convex ? "convex" : "nonconvex")
              << " n=" << in.n << " K=" << in.K << " H=" << in.H
              << " p=" << fmt6(in.p) << " L=" << fmt6(in.L)
              << " sigma=" << fmt6(in.sigma_bar)
              << " zeta_intra=" << fmt6(in.zeta_intra)
              << " zeta_inter=" << fmt6(in.zeta_inter)
              << " epsilon=" << fmt6(in.epsilon) << "\n";
    std::cout << "s2s: T=" << s2s.T_rounds << " eta_star=" << fmt6(s2s.eta_star)
              << " rhs=" << fmt6(s2s.rhs_at_T)
              << " gamma=" << fmt6(cost_s2s.gamma) << " uplinks="
              << s2s.uplinks << " downlinks=" << s2s.downlinks << "\n";
    std::cout << "s2a: T=" << s2a.T_rounds << " eta_star=" << fmt6(s2a.eta_star)
              << " rhs=" << fmt6(s2a.rhs_at_T)
              << " gamma=" << fmt6(cost_s2a.gamma) << " uplinks="
              << s2a.uplinks << " downlinks=" << s2a.downlinks << "\n";
    std::cout << "rounds winner: "
              << (s2s.T_rounds <= s2a.T_rounds ? "s2s" : "s2a") << "\n";
    std::cout << "communication winner: "
              << (cost_s2s.gamma <= cost_s2a.gamma ? "s2s" : "s2a") << "\n";
    std::cout << "gamma ratio s2a/s2s = " << fmt6(cost_s2a.ratio_vs_other)
              << "\n";
  });
}

int cmd_sweep(const CliOptions& options) {
  return guard([&] {
    const ParsedConfig parsed = ParsedConfig::from_file(options.config_path);
    const BoundsConfig bounds = load_bounds_config(parsed);
    if (!bounds.has_axis) {
      throw ConfigError(parsed.origin() +
                        ": sweep requires bounds.axis and bounds.grid");
    }
    ensure_out_dir(options.out_dir);

    const std::vector<SweepRow> rows =
        regime_sweep(bounds.inputs, bounds.axis, bounds.grid);
    std::ostringstream csv;
    write_sweep_csv(rows, csv);
    const std::string path = options.out_dir + "/sweep_" +
                             sweep_axis_name(bounds.axis) + ".csv";
    write_file(path, csv.str());
    std::cout << "wrote " << path << " (" << rows.size() << " rows)\n";

    if (!options.simulate) return;
    if (bounds.axis == SweepAxis::MixingParam) {
      std::cerr << "note: --simulate skipped; the mixing parameter is a "
                   "derived quantity, not a direct simulation knob\n";
      return;
    }
    ExperimentConfig experiment = load_experiment_config(parsed);
    apply_seed_override(experiment.seeds);

    struct SweepJob {
      int row;
      Primitive primitive;
      std::uint64_t seed;
    };
    std::vector<ExperimentConfig> configs;
    std::vector<SweepJob> jobs;
    for (std::size_t r = 0; r < bounds.grid.size(); ++r) {
      ExperimentConfig point = experiment;
      const double value = bounds.grid[r];
      if (bounds.axis == SweepAxis::SamplingRate) {
        if (!(value > 0.0) || value > 1.0) {
          throw ConfigError("sweep: sampling rate " + fmt6(value) +
                            " outside (0, 1]");
        }
        point.K = static_cast<int>(std::clamp<long long>(
            std::llround(value * point.n()), 1, point.n()));
      } else {
        const long long period = std::llround(value);
        if (period < 1) {
          throw ConfigError("sweep: server period " + fmt6(value) +
                            " must round to >= 1");
        }
        point.H = period;
      }
      configs.push_back(point);
      for (Primitive primitive : {Primitive::S2S, Primitive::S2A}) {
        for (std::uint64_t seed : experiment.seeds) {
          jobs.push_back(SweepJob{static_cast<int>(r), primitive, seed});
        }
      }
    }
    std::vector<double> gaps(jobs.size());
    run_parallel(options.jobs, static_cast<int>(jobs.size()), [&](int i) {
      const SweepJob& job = jobs[i];
      gaps[i] = run_one(configs[job.row],
                        SimJob{job.primitive, job.seed})
                    .final_gap;
    });

    std::ostringstream sim_csv;
    sim_csv << "axis_value,gap_s2s,gap_s2a\n";
    for (std::size_t r = 0; r < bounds.grid.size(); ++r) {
      std::vector<double> s2s_gaps;
      std::vector<double> s2a_gaps;
      for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (jobs[i].row != static_cast<int>(r)) continue;
        (jobs[i].primitive == Primitive::S2S ? s2s_gaps : s2a_gaps)
            .push_back(gaps[i]);
      }
      sim_csv << format_double(bounds.grid[r]) << ","
              << format_double(gap_stats(s2s_gaps).mean) << ","
              << format_double(gap_stats(s2a_gaps).mean) << "\n";
    }
    const std::string sim_path = options.out_dir + "/sweep_" +
                                 sweep_axis_name(bounds.axis) + "_sim.csv";
    write_file(sim_path, sim_csv.str());
    std::cout << "wrote " << sim_path << " (" << bounds.grid.size()
              << " rows)\n";
  });
}

int cmd_measure_het(const CliOptions& options) {
  return guard([&] {
    const ParsedConfig parsed = ParsedConfig::from_file(options.config_path);
    ExperimentConfig experiment = load_experiment_config(parsed);
    parsed.require_known(
        "bounds", {"n", "K", "H", "p", "L", "sigma", "zeta_intra", "zeta_inter",
                   "epsilon", "R0_sq", "f0", "regime", "axis", "grid"});
    apply_seed_override(experiment.seeds);
    ensure_out_dir(options.out_dir);

    const std::uint64_t seed = experiment.seeds.front();
    const Topology topology =
        build_topology(experiment.topology, experiment.component_sizes, seed,
                       experiment.degree);
    const auto objective =
        make_objective(experiment.objective, topology, seed);
    const MixingMatrix mixing = metropolis_weights(topology);
    const ComponentProjector projector = component_projector(topology);
    const MixingParam mixing_param = spectral_mixing_parameter(mixing);

    auto probe_rng = substream(seed, Stream::Probe);
    const std::vector<Vectord> probes =
        default_probes(*objective, 16, probe_rng);
    const HeterogeneityEstimate estimate =
        measure_heterogeneity(*objective, mixing, projector, probes,
                              probe_rng);

    BoundInputs inputs;
    inputs.n = experiment.n();
    inputs.K = experiment.K;
    inputs.H = experiment.H;
    inputs.p = mixing_param.p;
    inputs.L = objective->smoothness();
    inputs.sigma_bar = experiment.objective.noise_std;
    inputs.zeta_intra = estimate.zeta_intra;
    inputs.zeta_inter = estimate.zeta_inter;
    inputs.epsilon = parsed.get_double_or("bounds", "epsilon", 1e-5);
    inputs.R0_sq = objective->reference_point().squaredNorm();
    inputs.f0 = objective->optimality_gap(
        Vectord::Zero(objective->dimension()));
    const std::string regime =
        parsed.get_string_or("bounds", "regime", "convex");
    if (regime == "convex") {
      inputs.regime = Regime::Convex;
    } else if (regime == "nonconvex") {
      inputs.regime = Regime::NonConvex;
    } else {
      parsed.fail("bounds", "regime",
                  "expected convex or nonconvex, got '" + regime + "'");
    }

    const std::string path = options.out_dir + "/bounds_measured.conf";
    write_file(path, render_bounds_config(inputs));

    std::cout << "measured: zeta_intra=" << fmt6(estimate.zeta_intra)
              << " zeta_inter=" << fmt6(estimate.zeta_inter)
              << " probes=" << estimate.probe_count << "\n";
    std::cout << "derived: p=" << fmt6(inputs.p) << " L=" << fmt6(inputs.L)
              << " sigma=" << fmt6(inputs.sigma_bar)
              << " R0_sq=" << fmt6(inputs.R0_sq) << " f0=" << fmt6(inputs.f0)
              << "\n";
    std::cout << "wrote " << path << "\n";
  });
}

}  // namespace semidec
