#include "semidec/operators.hpp"

#include <algorithm>
#include <numeric>

namespace semidec {

namespace {

void check_sample(const SampleSet& sample, int n) {
  if (sample.K < 1 || sample.K > n ||
      static_cast<int>(sample.indices.size()) != sample.K) {
    throw InvalidK("sample of size " + std::to_string(sample.K) +
                   " is not valid for n = " + std::to_string(n));
  }
  for (int idx : sample.indices) {
    if (idx < 0 || idx >= n) {
      throw InvalidK("sampled index " + std::to_string(idx) +
                     " outside 0.." + std::to_string(n - 1));
    }
  }
}

}  // namespace

std::string primitive_name(Primitive primitive) {
  return primitive == Primitive::S2S ? "s2s" : "s2a";
}

SampleSet sample_devices(int n, int K, std::mt19937_64& rng) {
  if (K < 1 || K > n) {
    throw InvalidK("K = " + std::to_string(K) + " must be in 1.." +
                   std::to_string(n));
  }
  std::vector<int> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < K; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  SampleSet out;
  out.K = K;
  out.indices.assign(pool.begin(), pool.begin() + K);
  std::sort(out.indices.begin(), out.indices.end());
  return out;
}

ServerOperator s2s_matrix(const SampleSet& sample, int n) {
  check_sample(sample, n);
  const double share = 1.0 / static_cast<double>(sample.K);
  Matrixd m = Matrixd::Identity(n, n);
  for (int a : sample.indices) m(a, a) = 0.0;
  for (int a : sample.indices) {
    for (int b : sample.indices) m(a, b) = share;
  }
  return ServerOperator{std::move(m), Primitive::S2S, sample};
}

ServerOperator s2a_matrix(const SampleSet& sample, int n) {
  check_sample(sample, n);
  const double share = 1.0 / static_cast<double>(sample.K);
  Matrixd m = Matrixd::Zero(n, n);
  for (int a : sample.indices) m.row(a).setConstant(share);
  return ServerOperator{std::move(m), Primitive::S2A, sample};
}

Decomposition disagreement_decomposed(const Matrixd& x,
                                      const ComponentProjector& proj) {
  return disagreement_decomposed(x, proj.component_sizes);
}

std::pair<Matrixd, ErrorSnapshot> apply_server_step(
    const Matrixd& x, const ServerOperator& op, const ComponentProjector& proj,
    std::int64_t round) {
  const auto n = x.cols();
  if (op.entries.rows() != n || op.entries.cols() != n) {
    throw DimensionMismatch("state has " + std::to_string(n) +
                            " columns but the operator is " +
                            std::to_string(op.entries.rows()) + "x" +
                            std::to_string(op.entries.cols()));
  }
  const Vectord mean_before = x.rowwise().mean();
  Matrixd after = x * op.entries;
  const Vectord mean_after = after.rowwise().mean();
  ErrorSnapshot snap;
  snap.round = round;
  snap.bias_sq =
      static_cast<double>(n) * (mean_after - mean_before).squaredNorm();
  const Decomposition dec = disagreement_decomposed(after, proj);
  snap.disagreement_sq = dec.total;
  snap.intra_sq = dec.intra;
  snap.inter_sq = dec.inter;
  return {std::move(after), snap};
}

double expected_ratio_check(Primitive primitive, int n, int K, int trials,
                            std::mt19937_64& rng) {
  if (n < 2) {
    throw InvalidConfig("ratio check needs n >= 2, got " + std::to_string(n));
  }
  if (trials < 1) {
    throw InvalidConfig("ratio check needs trials >= 1, got " +
                        std::to_string(trials));
  }
  if (K < 1 || K > n) {
    throw InvalidK("K = " + std::to_string(K) + " must be in 1.." +
                   std::to_string(n));
  }
  constexpr int kProbeDim = 8;
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrixd x(kProbeDim, n);
  for (int i = 0; i < kProbeDim; ++i) {
    for (int j = 0; j < n; ++j) x(i, j) = normal(rng);
  }
  const Vectord mean_before = x.rowwise().mean();
  const double pre = (x.colwise() - mean_before).squaredNorm();
  double acc = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    const SampleSet sample = sample_devices(n, K, rng);
    if (primitive == Primitive::S2S) {
      const Matrixd after = x * s2s_matrix(sample, n).entries;
      const Vectord mean_after = after.rowwise().mean();
      const double post = (after.colwise() - mean_after).squaredNorm();
      acc += post / pre;
    } else {
      const Matrixd after = x * s2a_matrix(sample, n).entries;
      const Vectord mean_after = after.rowwise().mean();
      const double bias =
          static_cast<double>(n) * (mean_after - mean_before).squaredNorm();
      acc += bias / pre;
    }
  }
  return acc / static_cast<double>(trials);
}

}  // namespace semidec
