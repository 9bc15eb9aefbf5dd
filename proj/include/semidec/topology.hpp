#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "semidec/errors.hpp"
#include "semidec/types.hpp"

namespace semidec {

enum class GraphKind { Ring, Grid2D, Complete, RandomRegular };

std::string graph_kind_name(GraphKind kind);

// Undirected edge between global device indices, stored with first < second.
using Edge = std::pair<int, int>;

// A device network partitioned into C disjoint connected components.
// Components occupy contiguous index blocks: component c covers
// [offset(c), offset(c) + component_sizes[c]).  Edges never cross components.
struct Topology {
  int n = 0;
  GraphKind kind = GraphKind::Complete;
  int degree = 0;  // RandomRegular only; 0 otherwise
  std::vector<int> component_sizes;
  std::vector<std::vector<Edge>> component_edges;  // global indices, sorted

  int components() const { return static_cast<int>(component_sizes.size()); }

  int component_offset(int c) const {
    int off = 0;
    for (int i = 0; i < c; ++i) off += component_sizes[i];
    return off;
  }

  int component_of(int device) const {
    int off = 0;
    for (int c = 0; c < components(); ++c) {
      off += component_sizes[c];
      if (device < off) return c;
    }
    return components() - 1;
  }

  std::vector<Edge> all_edges() const {
    std::vector<Edge> out;
    for (const auto& es : component_edges) out.insert(out.end(), es.begin(), es.end());
    return out;
  }
};

// One device-to-device averaging matrix: symmetric, doubly stochastic, and
// block-diagonal with respect to the component partition it carries.
struct MixingMatrix {
  Matrixd entries;
  std::vector<int> component_sizes;
};

// Block projector onto per-component averages (1/n_c blocks), plus the global
// averaging projector ones(n,n)/n.
struct ComponentProjector {
  Matrixd entries;
  std::vector<int> component_sizes;

  Matrixd global() const {
    const auto n = entries.rows();
    return Matrixd::Constant(n, n, 1.0 / static_cast<double>(n));
  }
};

// Contraction factor of one averaging round toward per-component consensus.
struct MixingParam {
  double p = 1.0;
  std::vector<double> per_component;
};

// Builds a C-component graph of the requested kind.  Deterministic in seed
// (only RandomRegular consumes randomness).  Throws InvalidComponentSize when
// the kind cannot be realized on a component: ring needs n_c >= 3, a 2-D grid
// needs a nontrivial r x s factorization (primes > 3 are rejected rather than
// silently degraded to a path), RandomRegular needs 1 <= degree < n_c with
// n_c * degree even.
Topology build_topology(GraphKind kind, const std::vector<int>& component_sizes,
                        std::uint64_t seed, int degree = 0);

// Fresh edge realization for round-varying graphs.  Only RandomRegular
// actually resamples; every other kind is returned unchanged.  Deterministic
// in (seed, round): the same pair always yields identical edge sets, and
// build_topology(..., seed) equals resample_topology(t, 0, seed).
Topology resample_topology(const Topology& t, std::int64_t round,
                           std::uint64_t seed);

// Metropolis-Hastings weight matrix of a topology, as raw entries:
// w_ij = min(1/(deg(i)+1), 1/(deg(j)+1)) on edges, zero off-graph, and
// diagonal entries chosen so every row sums to one.
template <class Scalar = double>
Matrix<Scalar> metropolis_entries(const Topology& t) {
  std::vector<int> deg(t.n, 0);
  for (const auto& component : t.component_edges) {
    for (const auto& [u, v] : component) {
      ++deg[u];
      ++deg[v];
    }
  }
  Matrix<Scalar> w = Matrix<Scalar>::Zero(t.n, t.n);
  for (const auto& component : t.component_edges) {
    for (const auto& [u, v] : component) {
      const Scalar wij = std::min(Scalar(1) / Scalar(deg[u] + 1),
                                  Scalar(1) / Scalar(deg[v] + 1));
      w(u, v) = wij;
      w(v, u) = wij;
    }
  }
  for (int i = 0; i < t.n; ++i) {
    w(i, i) = Scalar(1) - w.row(i).sum();
  }
  return w;
}

MixingMatrix metropolis_weights(const Topology& t);

// Raw entries of the block projector onto per-component averages.
template <class Scalar = double>
Matrix<Scalar> component_projector_entries(const std::vector<int>& sizes) {
  int n = 0;
  for (int s : sizes) n += s;
  Matrix<Scalar> proj = Matrix<Scalar>::Zero(n, n);
  int off = 0;
  for (int s : sizes) {
    proj.block(off, off, s, s).setConstant(Scalar(1) / Scalar(s));
    off += s;
  }
  return proj;
}

ComponentProjector component_projector(const Topology& t);

// Per-component contraction factors p_c = 1 - lambda_2(W_c^T W_c) via a dense
// symmetric eigensolve, and their (n_c - 1)-weighted mean as the aggregate p.
// Singleton components contribute p_c = 1 with weight zero.  Eigenvalues are
// clamped to [0, 1] and snapped to zero below 1e-12, so complete-graph blocks
// report exactly 1.
MixingParam spectral_mixing_parameter(const MixingMatrix& w);

}  // namespace semidec
