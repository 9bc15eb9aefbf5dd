#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "semidec/errors.hpp"
#include "semidec/topology.hpp"
#include "semidec/types.hpp"

namespace semidec {

// The two server dissemination primitives: the server either returns the
// aggregate only to the sampled devices (S2S) or broadcasts it to everyone
// (S2A).
enum class Primitive { S2S, S2A };

std::string primitive_name(Primitive primitive);

// K distinct device indices drawn uniformly without replacement.
struct SampleSet {
  std::vector<int> indices;  // sorted
  int K = 0;
};

// Realized n x n matrix of one server round.  S2S is symmetric doubly
// stochastic; S2A is column-stochastic with row i summing to n/K when i is
// sampled and 0 otherwise.
struct ServerOperator {
  Matrixd entries;
  Primitive primitive = Primitive::S2S;
  SampleSet sample;
};

// Squared-error measurements of one round.  bias_sq is the squared Frobenius
// change of the replicated column-average matrix X Pi caused by the server
// step; the disagreement fields measure the post-step state against its
// global average, split orthogonally into within- and between-component
// parts.
struct ErrorSnapshot {
  double bias_sq = 0.0;
  double disagreement_sq = 0.0;
  double intra_sq = 0.0;
  double inter_sq = 0.0;
  std::int64_t round = 0;
};

struct Decomposition {
  double total = 0.0;
  double intra = 0.0;
  double inter = 0.0;
};

// Uniform without-replacement sample via partial Fisher-Yates; deterministic
// in the generator state.  Throws InvalidK unless 1 <= K <= n.
SampleSet sample_devices(int n, int K, std::mt19937_64& rng);

// Sampled devices average among themselves (1/K block), everyone else keeps
// their model.  K = n gives the global averaging matrix exactly; K = 1 the
// identity.
ServerOperator s2s_matrix(const SampleSet& sample, int n);

// Every device receives the average of the sampled models: rows of sampled
// devices are constant 1/K, all other rows are zero.  K = n gives the global
// averaging matrix exactly.
ServerOperator s2a_matrix(const SampleSet& sample, int n);

// Splits ||X(I - Pi)||_F^2 into ||X(I - Pi_C)||_F^2 + ||X(Pi_C - Pi)||_F^2
// without forming either projector, by component-block column means.  The
// total is computed independently of the two parts.
template <class DerivedX>
Decomposition disagreement_decomposed(const Eigen::MatrixBase<DerivedX>& x,
                                      const std::vector<int>& component_sizes) {
  using Scalar = typename DerivedX::Scalar;
  int n = 0;
  for (int s : component_sizes) n += s;
  if (x.cols() != n) {
    throw DimensionMismatch("state has " + std::to_string(x.cols()) +
                            " columns but the partition covers " +
                            std::to_string(n) + " devices");
  }
  const Vector<Scalar> global_mean = x.rowwise().mean();
  Decomposition dec;
  dec.total = static_cast<double>((x.colwise() - global_mean).squaredNorm());
  int off = 0;
  for (int s : component_sizes) {
    const auto block = x.middleCols(off, s);
    const Vector<Scalar> local_mean = block.rowwise().mean();
    dec.intra += static_cast<double>((block.colwise() - local_mean).squaredNorm());
    dec.inter +=
        static_cast<double>(s) *
        static_cast<double>((local_mean - global_mean).squaredNorm());
    off += s;
  }
  return dec;
}

Decomposition disagreement_decomposed(const Matrixd& x,
                                      const ComponentProjector& proj);

// Applies one server round X <- X * op and measures it: the bias of the step
// and the disagreement decomposition of the result.
std::pair<Matrixd, ErrorSnapshot> apply_server_step(
    const Matrixd& x, const ServerOperator& op, const ComponentProjector& proj,
    std::int64_t round = 0);

// Monte-Carlo estimate of the primitive's error-contraction ratio on one
// fixed standard-normal probe state (d = 8), averaging over fresh sample
// sets: post/pre disagreement for S2S, bias/pre-disagreement for S2A.
// Converges to (n-K)/(n-1) and (n-K)/(K(n-1)) respectively.
double expected_ratio_check(Primitive primitive, int n, int K, int trials,
                            std::mt19937_64& rng);

}  // namespace semidec
