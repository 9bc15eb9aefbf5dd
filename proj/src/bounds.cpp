#include "semidec/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "semidec/csv.hpp"
#include "semidec/errors.hpp"

namespace semidec {

namespace {

void validate_recursion(const RecursionParams& params) {
  if (params.a1 < 0.0 || params.a2 < 0.0 || params.b1 < 0.0 ||
      params.b2 < 0.0) {
    throw InvalidParams("recursion coefficients must be >= 0");
  }
  if (params.H < 1) {
    throw InvalidParams("recursion needs H >= 1");
  }
  if (params.T < 0) {
    throw InvalidParams("recursion needs T >= 0");
  }
}

void validate_inputs(const BoundInputs& in) {
  if (in.n < 2) {
    throw InvalidConfig("bounds need n >= 2, got " + std::to_string(in.n));
  }
  if (in.K < 1 || in.K > in.n) {
    throw InvalidK("K = " + std::to_string(in.K) + " must be in 1..n = " +
                   std::to_string(in.n));
  }
  if (in.H < 1) {
    throw InvalidConfig("H must be >= 1");
  }
  if (!(in.p > 0.0) || in.p > 1.0) {
    throw InvalidConfig("p must be in (0, 1]");
  }
  if (!(in.L > 0.0)) {
    throw InvalidConfig("L must be > 0");
  }
  if (in.sigma_bar < 0.0 || in.zeta_intra < 0.0 || in.zeta_inter < 0.0) {
    throw InvalidConfig("noise and heterogeneity levels must be >= 0");
  }
  if (!(in.epsilon > 0.0)) {
    throw InvalidConfig("epsilon must be > 0");
  }
  if (in.R0_sq < 0.0 || in.f0 < 0.0) {
    throw InvalidConfig("initial error terms must be >= 0");
  }
}

// Stepsize cap of both bound families.
double stepsize_cap(const BoundInputs& in) { return in.p / (8.0 * in.L); }

double rhs_unchecked(const BoundInputs& in, Primitive primitive, double eta,
                     std::int64_t T) {
  const double horizon = static_cast<double>(T) + 1.0;
  const double n = static_cast<double>(in.n);
  const double K = static_cast<double>(in.K);
  const double H = static_cast<double>(in.H);
  const double p_sq = in.p * in.p;
  const double zi_sq = in.zeta_intra * in.zeta_intra;
  const double ze_sq = in.zeta_inter * in.zeta_inter;
  const double sigma_sq = in.sigma_bar * in.sigma_bar;
  if (primitive == Primitive::S2S) {
    const double excess = (n - 1.0) / (K - 1.0);
    if (in.regime == Regime::Convex) {
      return in.R0_sq / (eta * horizon) + eta * sigma_sq / n +
             excess * 72.0 * eta * eta * in.L * zi_sq / p_sq +
             excess * excess * 210.0 * eta * eta * in.L * H * (H - 1.0) *
                 ze_sq;
    }
    return 4.0 * in.f0 / (eta * horizon) + 2.0 * eta * in.L * sigma_sq / n +
           excess * 192.0 * eta * eta * in.L * in.L * zi_sq / p_sq +
           excess * excess * 560.0 * eta * eta * in.L * in.L * H * (H - 1.0) *
               ze_sq;
  }
  const double q = (n - K) / (K * (n - 1.0));
  if (in.regime == Regime::Convex) {
    return in.R0_sq / (eta * horizon) + eta * sigma_sq / n +
           96.0 * eta * eta * in.L * zi_sq / p_sq +
           q * 54.0 * eta * zi_sq / (H * p_sq) +
           16.0 * eta * eta * in.L * H * H * ze_sq +
           q * 26.0 * eta * H * ze_sq;
  }
  return 4.0 * in.f0 / (eta * horizon) + 2.0 * eta * in.L * sigma_sq / n +
         192.0 * eta * eta * in.L * in.L * zi_sq / p_sq +
         q * 108.0 * eta * in.L * zi_sq / (H * p_sq) +
         32.0 * eta * eta * in.L * in.L * H * H * ze_sq +
         q * 52.0 * eta * in.L * H * ze_sq;
}

struct TunedRhs {
  double value = 0.0;
  double eta = 0.0;
};

// Minimizes the right-hand side over the admissible stepsize range: best
// point of a 200-point log grid, refined by a golden-section pass between its
// bracketing neighbors (the RHS is a sum of convex terms in eta, so the
// bracket contains the minimum).
TunedRhs tuned_rhs(const BoundInputs& in, Primitive primitive,
                   std::int64_t T) {
  const double cap = stepsize_cap(in);
  constexpr int kGridSize = 200;
  constexpr double kSpanDecades = 8.0;
  double best_value = std::numeric_limits<double>::infinity();
  int best_index = 0;
  std::vector<double> etas(kGridSize);
  for (int j = 0; j < kGridSize; ++j) {
    const double frac = static_cast<double>(j) / (kGridSize - 1);
    etas[j] = cap * std::pow(10.0, -kSpanDecades * (1.0 - frac));
  }
  etas[kGridSize - 1] = cap;
  for (int j = 0; j < kGridSize; ++j) {
    const double value = rhs_unchecked(in, primitive, etas[j], T);
    if (value < best_value) {
      best_value = value;
      best_index = j;
    }
  }
  double lo = etas[std::max(0, best_index - 1)];
  double hi = etas[std::min(kGridSize - 1, best_index + 1)];
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - invphi * (hi - lo);
  double x2 = lo + invphi * (hi - lo);
  double f1 = rhs_unchecked(in, primitive, x1, T);
  double f2 = rhs_unchecked(in, primitive, x2, T);
  for (int iter = 0; iter < 200 && (hi - lo) > 1e-15 * hi; ++iter) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - invphi * (hi - lo);
      f1 = rhs_unchecked(in, primitive, x1, T);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + invphi * (hi - lo);
      f2 = rhs_unchecked(in, primitive, x2, T);
    }
  }
  TunedRhs best{best_value, etas[best_index]};
  const double mid = 0.5 * (lo + hi);
  const double fmid = rhs_unchecked(in, primitive, mid, T);
  if (fmid < best.value) best = TunedRhs{fmid, mid};
  if (f1 < best.value) best = TunedRhs{f1, x1};
  if (f2 < best.value) best = TunedRhs{f2, x2};
  return best;
}

Primitive other_primitive(Primitive primitive) {
  return primitive == Primitive::S2S ? Primitive::S2A : Primitive::S2S;
}

}  // namespace

double recursion_bound(const RecursionParams& params) {
  validate_recursion(params);
  const double a1 = params.a1;
  const double a2 = params.a2;
  const double b1 = params.b1;
  const double b2 = params.b2;
  const double H = static_cast<double>(params.H);
  const double contraction = a1 * std::pow(a2, H - 1.0);
  if (contraction >= 1.0) {
    throw InvalidParams("a1 * a2^(H-1) must be < 1, got " +
                        std::to_string(contraction));
  }
  if (a2 == 1.0) {
    throw InvalidParams("the closed forms require a2 != 1");
  }
  // Accumulated off-server forcing of one period plus the server forcing.
  const double forcing =
      a1 * b2 * (1.0 - std::pow(a2, H - 1.0)) / (1.0 - a2) + b1;
  const double tail =
      1.0 / H + 1.0 / (static_cast<double>(params.T) + 1.0);
  if (a2 < 1.0) {
    return (forcing / ((1.0 - contraction) * (1.0 - a2)) +
            b2 * (H - 1.0) / (1.0 - a2)) *
           tail;
  }
  return (forcing / (1.0 - contraction) * (std::pow(a2, H) - 1.0) /
              (a2 - 1.0) +
          b2 * (std::pow(a2, H) - a2 * H + H - 1.0) /
              ((a2 - 1.0) * (a2 - 1.0))) *
         tail;
}

double recursion_bruteforce(const RecursionParams& params) {
  validate_recursion(params);
  double xi = 0.0;
  double sum = xi;
  for (std::int64_t t = 1; t <= params.T; ++t) {
    if (t % params.H == 0) {
      xi = params.a1 * xi + params.b1;
    } else {
      xi = params.a2 * xi + params.b2;
    }
    sum += xi;
  }
  return sum / (static_cast<double>(params.T) + 1.0);
}

double per_round_rhs(const BoundInputs& inputs, Primitive primitive,
                     double eta, std::int64_t T) {
  validate_inputs(inputs);
  if (primitive == Primitive::S2S && inputs.K == 1) {
    throw DivergentAtK1("the sampled-to-sampled bound diverges at K = 1");
  }
  if (!(eta > 0.0)) {
    throw InvalidConfig("eta must be > 0");
  }
  const double cap = stepsize_cap(inputs);
  if (eta > cap) {
    throw StepsizeTooLarge("eta = " + std::to_string(eta) +
                           " exceeds the cap p/(8L) = " + std::to_string(cap));
  }
  if (T < 0) {
    throw InvalidConfig("T must be >= 0");
  }
  return rhs_unchecked(inputs, primitive, eta, T);
}

BoundResult rounds_to_epsilon(const BoundInputs& inputs, Primitive primitive) {
  validate_inputs(inputs);
  if (primitive == Primitive::S2S && inputs.K == 1) {
    throw DivergentAtK1("the sampled-to-sampled bound diverges at K = 1");
  }
  constexpr std::int64_t kMaxRounds = std::int64_t{1} << 62;
  const std::int64_t floor_T = std::max<std::int64_t>(1, inputs.H - 1);
  auto reached = [&](std::int64_t T) {
    return tuned_rhs(inputs, primitive, T).value <= inputs.epsilon;
  };
  std::int64_t found;
  if (reached(floor_T)) {
    found = floor_T;
  } else {
    std::int64_t lo = floor_T;  // fails
    std::int64_t hi = floor_T;
    do {
      lo = hi;
      if (hi > kMaxRounds / 2) {
        throw UnreachableEpsilon(
            "target accuracy unreachable within 2^62 rounds");
      }
      hi *= 2;
    } while (!reached(hi));
    while (lo + 1 < hi) {
      const std::int64_t mid = lo + (hi - lo) / 2;
      if (reached(mid)) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    found = hi;
  }
  const TunedRhs best = tuned_rhs(inputs, primitive, found);
  BoundResult result;
  result.T_rounds = found;
  result.eta_star = best.eta;
  result.rhs_at_T = best.value;
  const std::int64_t server_rounds = (found + inputs.H - 1) / inputs.H;
  result.uplinks = static_cast<std::int64_t>(inputs.K) * server_rounds;
  result.downlinks =
      (primitive == Primitive::S2S)
          ? static_cast<std::int64_t>(inputs.K) * server_rounds
          : static_cast<std::int64_t>(inputs.n) * server_rounds;
  return result;
}

double communication_gamma(Primitive primitive, int n, int K, std::int64_t H,
                           std::int64_t T) {
  const double per_round =
      (primitive == Primitive::S2S)
          ? 2.0 * static_cast<double>(K) / static_cast<double>(H)
          : static_cast<double>(K + n) / static_cast<double>(H);
  return per_round * static_cast<double>(T);
}

CommCost communication_cost(const BoundResult& result, Primitive primitive,
                            int n, int K, std::int64_t H,
                            const BoundResult& other) {
  CommCost cost;
  cost.gamma = communication_gamma(primitive, n, K, H, result.T_rounds);
  const double other_gamma =
      communication_gamma(other_primitive(primitive), n, K, H, other.T_rounds);
  cost.ratio_vs_other = cost.gamma / other_gamma;
  return cost;
}

std::string sweep_axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::SamplingRate:
      return "sampling_rate";
    case SweepAxis::ServerPeriod:
      return "server_period";
    case SweepAxis::MixingParam:
      return "mixing_param";
  }
  return "unknown";
}

std::vector<SweepRow> regime_sweep(const BoundInputs& base, SweepAxis axis,
                                   const std::vector<double>& grid) {
  if (grid.empty()) {
    throw InvalidConfig("sweep grid must be nonempty");
  }
  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  for (double value : grid) {
    BoundInputs point = base;
    switch (axis) {
      case SweepAxis::SamplingRate: {
        if (!(value > 0.0) || value > 1.0) {
          throw InvalidConfig("sampling rate grid values must be in (0, 1]");
        }
        point.K = static_cast<int>(std::clamp<long long>(
            std::llround(value * base.n), 1, base.n));
        break;
      }
      case SweepAxis::ServerPeriod: {
        const long long H = std::llround(value);
        if (H < 1) {
          throw InvalidConfig("server period grid values must be >= 1");
        }
        point.H = H;
        break;
      }
      case SweepAxis::MixingParam: {
        if (!(value > 0.0) || value > 1.0) {
          throw InvalidConfig("mixing parameter grid values must be in (0, 1]");
        }
        point.p = value;
        break;
      }
    }
    const BoundResult s2s = rounds_to_epsilon(point, Primitive::S2S);
    const BoundResult s2a = rounds_to_epsilon(point, Primitive::S2A);
    SweepRow row;
    row.axis_value = value;
    row.T_s2s = s2s.T_rounds;
    row.T_s2a = s2a.T_rounds;
    row.gamma_s2s = communication_gamma(Primitive::S2S, point.n, point.K,
                                        point.H, s2s.T_rounds);
    row.gamma_s2a = communication_gamma(Primitive::S2A, point.n, point.K,
                                        point.H, s2a.T_rounds);
    rows.push_back(row);
  }
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& os) {
  os << "axis_value,T_s2s,T_s2a,gamma_s2s,gamma_s2a\n";
  for (const SweepRow& row : rows) {
    os << format_double(row.axis_value) << ',' << row.T_s2s << ','
       << row.T_s2a << ',' << format_double(row.gamma_s2s) << ','
       << format_double(row.gamma_s2a) << "\n";
  }
}

}  // namespace semidec
