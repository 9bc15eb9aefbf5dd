#include "semidec/engine.hpp"

#include <ostream>
#include <string>

#include "semidec/csv.hpp"
#include "semidec/rng.hpp"

namespace semidec {

namespace {

void validate(const SimConfig& cfg, const DeviceObjective& objective) {
  int total = 0;
  for (int s : cfg.component_sizes) total += s;
  if (cfg.n < 1 || total != cfg.n) {
    throw InvalidConfig("component sizes sum to " + std::to_string(total) +
                        " but n = " + std::to_string(cfg.n));
  }
  if (cfg.K < 1 || cfg.K > cfg.n) {
    throw InvalidK("K = " + std::to_string(cfg.K) + " must be in 1..n = " +
                   std::to_string(cfg.n));
  }
  if (cfg.H < 1) {
    throw InvalidConfig("H must be >= 1, got " + std::to_string(cfg.H));
  }
  if (cfg.T < 1) {
    throw InvalidConfig("T must be >= 1, got " + std::to_string(cfg.T));
  }
  if (!(cfg.eta >= 0.0)) {
    throw InvalidConfig("eta must be >= 0");
  }
  if (cfg.trace_every < 1) {
    throw InvalidConfig("trace_every must be >= 1, got " +
                        std::to_string(cfg.trace_every));
  }
  if (objective.devices() != cfg.n) {
    throw DimensionMismatch("objective has " +
                            std::to_string(objective.devices()) +
                            " devices, config expects n = " +
                            std::to_string(cfg.n));
  }
}

}  // namespace

RunTrace run(const SimConfig& cfg, const DeviceObjective& objective) {
  validate(cfg, objective);
  const Topology topology =
      build_topology(cfg.topology, cfg.component_sizes, cfg.seed, cfg.degree);
  const ComponentProjector proj = component_projector(topology);
  MixingMatrix mixing = metropolis_weights(topology);

  const int d = objective.dimension();
  Matrixd state = Matrixd::Zero(d, cfg.n);

  RunTrace trace;
  trace.n = cfg.n;
  trace.K = cfg.K;
  trace.primitive = cfg.primitive;

  for (std::int64_t t = 0; t < cfg.T; ++t) {
    const bool is_server = (t % cfg.H == 0);
    const bool traced = (t % cfg.trace_every == 0) || is_server;

    Vectord average;
    double f_gap = 0.0;
    double grad_norm_sq = 0.0;
    if (traced) {
      average = state.rowwise().mean();
      f_gap = objective.optimality_gap(average);
      grad_norm_sq = objective.global_gradient(average).squaredNorm();
    }

    // (i) one stochastic-gradient step per device
    for (int i = 0; i < cfg.n; ++i) {
      auto rng = substream(cfg.seed, Stream::Gradient,
                           static_cast<std::uint64_t>(t),
                           static_cast<std::uint64_t>(i));
      const Vectord g = objective.stochastic_gradient(i, state.col(i), rng);
      state.col(i) -= cfg.eta * g;
    }

    // (ii) device-to-device averaging
    if (cfg.time_varying && topology.kind == GraphKind::RandomRegular &&
        t > 0) {
      mixing = metropolis_weights(resample_topology(topology, t, cfg.seed));
    }
    state = state * mixing.entries;

    // (iii) server round
    ErrorSnapshot snap;
    snap.round = t;
    if (is_server) {
      auto rng =
          substream(cfg.seed, Stream::Sampling, static_cast<std::uint64_t>(t));
      const SampleSet sample = sample_devices(cfg.n, cfg.K, rng);
      const ServerOperator op = (cfg.primitive == Primitive::S2S)
                                    ? s2s_matrix(sample, cfg.n)
                                    : s2a_matrix(sample, cfg.n);
      auto [next, measured] = apply_server_step(state, op, proj, t);
      state = std::move(next);
      snap = measured;
      trace.uplinks += cfg.K;
      trace.downlinks += (cfg.primitive == Primitive::S2S) ? cfg.K : cfg.n;
      ++trace.server_rounds;
    } else {
      const Decomposition dec = disagreement_decomposed(state, proj);
      snap.disagreement_sq = dec.total;
      snap.intra_sq = dec.intra;
      snap.inter_sq = dec.inter;
    }

    if (!state.allFinite()) {
      throw NonFiniteState("state became non-finite at round " +
                               std::to_string(t),
                           t);
    }

    if (traced) {
      trace.rows.push_back(TraceRow{t, is_server, f_gap, grad_norm_sq,
                                    snap.bias_sq, snap.disagreement_sq,
                                    snap.intra_sq, snap.inter_sq,
                                    trace.uplinks, trace.downlinks});
      trace.average_iterates.push_back(std::move(average));
    }
  }

  const Vectord final_average = state.rowwise().mean();
  trace.final_gap = objective.optimality_gap(final_average);
  trace.final_grad_norm_sq =
      objective.global_gradient(final_average).squaredNorm();
  trace.final_state = std::move(state);
  return trace;
}

std::vector<std::int64_t> server_round_schedule(std::int64_t T,
                                                std::int64_t H) {
  if (T < 1 || H < 1) {
    throw InvalidConfig("schedule needs T >= 1 and H >= 1");
  }
  std::vector<std::int64_t> rounds;
  for (std::int64_t t = 0; t < T; t += H) rounds.push_back(t);
  return rounds;
}

std::pair<std::int64_t, std::int64_t> message_cost(const RunTrace& trace) {
  return {trace.uplinks, trace.downlinks};
}

std::string trace_filename(const SimConfig& cfg) {
  return primitive_name(cfg.primitive) + "_K" + std::to_string(cfg.K) + "_H" +
         std::to_string(cfg.H) + "_" + graph_kind_name(cfg.topology) +
         "_seed" + std::to_string(cfg.seed) + ".csv";
}

void write_trace_csv(const RunTrace& trace, std::ostream& os) {
  os << "round,is_server,f_gap,grad_norm_sq,bias_sq,disagreement_sq,"
        "intra_sq,inter_sq,uplinks,downlinks\n";
  for (const TraceRow& row : trace.rows) {
    os << row.round << ',' << (row.is_server ? 1 : 0) << ','
       << format_double(row.f_gap) << ',' << format_double(row.grad_norm_sq)
       << ',' << format_double(row.bias_sq) << ','
       << format_double(row.disagreement_sq) << ','
       << format_double(row.intra_sq) << ',' << format_double(row.inter_sq)
       << ',' << row.uplinks << ',' << row.downlinks << "\n";
  }
}

}  // namespace semidec
