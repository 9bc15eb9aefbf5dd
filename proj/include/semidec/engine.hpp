#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "semidec/objectives.hpp"
#include "semidec/operators.hpp"
#include "semidec/topology.hpp"
#include "semidec/types.hpp"

namespace semidec {

// One simulation run: T rounds of (local stochastic-gradient step, one
// device-to-device averaging, and — every H rounds, round 0 included — one
// server round with K sampled devices).
struct SimConfig {
  int n = 0;
  std::vector<int> component_sizes;
  GraphKind topology = GraphKind::Ring;
  int degree = 0;  // RandomRegular only
  Primitive primitive = Primitive::S2S;
  int K = 1;
  std::int64_t H = 1;
  std::int64_t T = 1;
  double eta = 0.0;
  std::uint64_t seed = 0;
  bool time_varying = false;
  std::int64_t trace_every = 1;
};

// One traced round.  f_gap and grad_norm_sq are evaluated on the average
// model at the start of the round; the error fields describe the state after
// the round completed (bias_sq is zero on rounds without a server step);
// uplinks/downlinks are cumulative message counters.
struct TraceRow {
  std::int64_t round = 0;
  bool is_server = false;
  double f_gap = 0.0;
  double grad_norm_sq = 0.0;
  double bias_sq = 0.0;
  double disagreement_sq = 0.0;
  double intra_sq = 0.0;
  double inter_sq = 0.0;
  std::int64_t uplinks = 0;
  std::int64_t downlinks = 0;
};

struct RunTrace {
  std::vector<TraceRow> rows;
  std::vector<Vectord> average_iterates;  // start-of-round averages, per row
  Matrixd final_state;                    // d x n after round T-1
  double final_gap = 0.0;
  double final_grad_norm_sq = 0.0;
  std::int64_t uplinks = 0;
  std::int64_t downlinks = 0;
  std::int64_t server_rounds = 0;
  int n = 0;
  int K = 0;
  Primitive primitive = Primitive::S2S;
};

// Executes the protocol.  All devices start from the same point (zero).
// Rounds are traced when round % trace_every == 0, plus every server round.
// Fully deterministic in cfg.seed; gradient noise is drawn from per
// (round, device) substreams, so it does not depend on the primitive, the
// sampling, or topology resampling.  Throws NonFiniteState if any state
// entry stops being finite.
RunTrace run(const SimConfig& cfg, const DeviceObjective& objective);

// The server rounds executed in T rounds: {0, H, 2H, ...} intersected
// with [0, T).
std::vector<std::int64_t> server_round_schedule(std::int64_t T, std::int64_t H);

// Total (uplinks, downlinks) of a finished run: per server round, K uploads
// and either K (S2S) or n (S2A) downloads.
std::pair<std::int64_t, std::int64_t> message_cost(const RunTrace& trace);

// "{primitive}_K{K}_H{H}_{topology}_seed{seed}.csv"
std::string trace_filename(const SimConfig& cfg);

// Header: round,is_server,f_gap,grad_norm_sq,bias_sq,disagreement_sq,
// intra_sq,inter_sq,uplinks,downlinks
void write_trace_csv(const RunTrace& trace, std::ostream& os);

}  // namespace semidec
