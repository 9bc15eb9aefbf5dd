#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "semidec/operators.hpp"

namespace semidec {

// Two-branch linear recursion: a nonnegative sequence with Xi(0) = 0 follows
// Xi(t) = a1 Xi(t-1) + b1 on server rounds (t % H == 0) and
// Xi(t) = a2 Xi(t-1) + b2 otherwise.  The closed-form average bound requires
// C := a1 * a2^(H-1) < 1 and a2 != 1.
struct RecursionParams {
  double a1 = 0.0;
  double a2 = 0.0;
  double b1 = 0.0;
  double b2 = 0.0;
  std::int64_t H = 1;
  std::int64_t T = 0;
};

// Closed-form upper bound on the running average (1/(T+1)) sum_t Xi(t),
// with separate branches for contractive (a2 < 1) and expansive (a2 > 1)
// off-server factors.  Throws InvalidParams when C >= 1 or a2 = 1.
double recursion_bound(const RecursionParams& params);

// Exact iteration of the recursion (equality in both branches) returning the
// same running average; the closed form above always dominates it.
double recursion_bruteforce(const RecursionParams& params);

enum class Regime { Convex, NonConvex };

// Everything the per-round convergence bounds consume.  sigma_bar is the
// gradient-noise level, zeta_intra/zeta_inter the component-filtered
// heterogeneity constants, R0_sq the squared initial distance (convex case),
// f0 the initial optimality gap (non-convex case).
struct BoundInputs {
  int n = 0;
  int K = 1;
  std::int64_t H = 1;
  double p = 1.0;
  double L = 1.0;
  double sigma_bar = 0.0;
  double zeta_intra = 0.0;
  double zeta_inter = 0.0;
  double epsilon = 1e-5;
  double R0_sq = 1.0;
  double f0 = 1.0;
  Regime regime = Regime::Convex;
};

struct BoundResult {
  std::int64_t T_rounds = 0;
  double eta_star = 0.0;
  double rhs_at_T = 0.0;
  std::int64_t uplinks = 0;
  std::int64_t downlinks = 0;
};

// Evaluates the right-hand side of the matching convergence bound (four
// variants: {S2S, S2A} x {Convex, NonConvex}) at stepsize eta and horizon T.
// Requires 0 < eta <= p/(8L) (StepsizeTooLarge above the cap) and K >= 2 for
// S2S (DivergentAtK1: its (n-1)/(K-1) factors blow up at K = 1).
double per_round_rhs(const BoundInputs& inputs, Primitive primitive,
                     double eta, std::int64_t T);

// Smallest T whose stepsize-tuned right-hand side reaches epsilon, floored
// at max(1, H-1).  The stepsize is optimized per T on a 200-point log grid
// over [1e-8 * p/(8L), p/(8L)] refined by one golden-section pass; T is
// located by doubling plus binary search.  Also reports the message counts
// of the R = ceil(T/H) server rounds.
BoundResult rounds_to_epsilon(const BoundInputs& inputs, Primitive primitive);

struct CommCost {
  double gamma = 0.0;           // total transmissions per device-normalized
                                // round budget: (2K/H)T or ((K+n)/H)T
  double ratio_vs_other = 0.0;  // this primitive's gamma over the other's
};

double communication_gamma(Primitive primitive, int n, int K, std::int64_t H,
                           std::int64_t T);

CommCost communication_cost(const BoundResult& result, Primitive primitive,
                            int n, int K, std::int64_t H,
                            const BoundResult& other);

enum class SweepAxis { SamplingRate, ServerPeriod, MixingParam };

std::string sweep_axis_name(SweepAxis axis);

struct SweepRow {
  double axis_value = 0.0;
  std::int64_t T_s2s = 0;
  std::int64_t T_s2a = 0;
  double gamma_s2s = 0.0;
  double gamma_s2a = 0.0;
};

// Re-evaluates both primitives across a grid on one axis: sampling rate K/n,
// server period H, or mixing parameter p.  Errors from the underlying solves
// propagate.
std::vector<SweepRow> regime_sweep(const BoundInputs& base, SweepAxis axis,
                                   const std::vector<double>& grid);

// Header: axis_value,T_s2s,T_s2a,gamma_s2s,gamma_s2a
void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& os);

}  // namespace semidec
