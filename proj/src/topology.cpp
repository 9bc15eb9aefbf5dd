#include "semidec/topology.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <set>

#include "semidec/rng.hpp"

namespace semidec {

namespace {

Edge make_edge(int u, int v) { return {std::min(u, v), std::max(u, v)}; }

bool connected(int n_c, int offset, const std::vector<Edge>& edges) {
  if (n_c <= 1) return true;
  std::vector<std::vector<int>> adj(n_c);
  for (const auto& [u, v] : edges) {
    adj[u - offset].push_back(v - offset);
    adj[v - offset].push_back(u - offset);
  }
  std::vector<char> seen(n_c, 0);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = 1;
  int count = 1;
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    for (int v : adj[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        frontier.push(v);
      }
    }
  }
  return count == n_c;
}

std::vector<Edge> ring_edges(int n_c, int offset) {
  if (n_c < 3) {
    throw InvalidComponentSize("ring component needs at least 3 devices, got " +
                               std::to_string(n_c));
  }
  std::vector<Edge> edges;
  edges.reserve(n_c);
  for (int i = 0; i < n_c; ++i) {
    edges.push_back(make_edge(offset + i, offset + (i + 1) % n_c));
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

// Most-square factorization r x s with r <= s.  Sizes 1..3 degenerate to a
// single row; larger sizes with no nontrivial factorization (primes) are
// rejected.
std::vector<Edge> grid_edges(int n_c, int offset) {
  int rows = 1;
  for (int r = static_cast<int>(std::sqrt(static_cast<double>(n_c))); r >= 1; --r) {
    if (n_c % r == 0) {
      rows = r;
      break;
    }
  }
  if (rows == 1 && n_c > 3) {
    throw InvalidComponentSize("grid component size " + std::to_string(n_c) +
                               " is prime; no r x s layout exists");
  }
  const int cols = n_c / rows;
  std::vector<Edge> edges;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const int node = offset + i * cols + j;
      if (j + 1 < cols) edges.push_back(make_edge(node, node + 1));
      if (i + 1 < rows) edges.push_back(make_edge(node, node + cols));
    }
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

std::vector<Edge> complete_edges(int n_c, int offset) {
  std::vector<Edge> edges;
  edges.reserve(n_c * (n_c - 1) / 2);
  for (int i = 0; i < n_c; ++i) {
    for (int j = i + 1; j < n_c; ++j) {
      edges.push_back(make_edge(offset + i, offset + j));
    }
  }
  return edges;
}

// Pairing-model construction with incremental legal-pair selection: draw
// random stub pairs and accept only pairs that create neither a self-loop
// nor a parallel edge, restarting from scratch when the remaining stubs
// admit no legal pair or the finished graph is disconnected.
std::vector<Edge> random_regular_edges(int n_c, int offset, int degree,
                                       std::mt19937_64& rng) {
  if (degree < 1 || degree >= n_c) {
    throw InvalidComponentSize(
        "regular degree must satisfy 1 <= degree < component size, got degree " +
        std::to_string(degree) + " on size " + std::to_string(n_c));
  }
  if ((static_cast<long long>(n_c) * degree) % 2 != 0) {
    throw InvalidComponentSize("component size " + std::to_string(n_c) +
                               " times degree " + std::to_string(degree) +
                               " must be even");
  }
  constexpr int kMaxAttempts = 200;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    std::vector<int> stubs(static_cast<std::size_t>(n_c) * degree);
    for (int i = 0; i < n_c; ++i) {
      std::fill_n(stubs.begin() + static_cast<std::size_t>(i) * degree, degree,
                  i);
    }
    std::set<Edge> seen;
    bool stuck = false;
    while (!stubs.empty()) {
      bool paired = false;
      for (int tries = 0; tries < 100 && !paired; ++tries) {
        const std::size_t i = rng() % stubs.size();
        const std::size_t j = rng() % stubs.size();
        if (i == j || stubs[i] == stubs[j]) continue;
        if (seen.count(make_edge(stubs[i], stubs[j])) != 0) continue;
        seen.insert(make_edge(stubs[i], stubs[j]));
        const std::size_t hi = std::max(i, j);
        const std::size_t lo = std::min(i, j);
        stubs[hi] = stubs.back();
        stubs.pop_back();
        stubs[lo] = stubs.back();
        stubs.pop_back();
        paired = true;
      }
      if (!paired) {
        // Random draws kept colliding; scan for any remaining legal pair so
        // a genuinely stuck state is distinguished from bad luck.
        for (std::size_t i = 0; i < stubs.size() && !paired; ++i) {
          for (std::size_t j = i + 1; j < stubs.size() && !paired; ++j) {
            if (stubs[i] == stubs[j]) continue;
            if (seen.count(make_edge(stubs[i], stubs[j])) != 0) continue;
            seen.insert(make_edge(stubs[i], stubs[j]));
            stubs[j] = stubs.back();
            stubs.pop_back();
            stubs[i] = stubs.back();
            stubs.pop_back();
            paired = true;
          }
        }
      }
      if (!paired) {
        stuck = true;
        break;
      }
    }
    if (stuck) continue;
    std::vector<Edge> edges;
    edges.reserve(seen.size());
    for (const auto& [u, v] : seen) {
      edges.push_back(make_edge(offset + u, offset + v));
    }
    if (!connected(n_c, offset, edges)) continue;
    std::sort(edges.begin(), edges.end());
    return edges;
  }
  throw InvalidComponentSize(
      "failed to realize a connected " + std::to_string(degree) +
      "-regular graph on " + std::to_string(n_c) + " devices after " +
      std::to_string(kMaxAttempts) + " attempts");
}

std::vector<Edge> component_edges_for(GraphKind kind, int n_c, int offset,
                                      int degree, std::mt19937_64& rng) {
  switch (kind) {
    case GraphKind::Ring:
      return ring_edges(n_c, offset);
    case GraphKind::Grid2D:
      return grid_edges(n_c, offset);
    case GraphKind::Complete:
      return complete_edges(n_c, offset);
    case GraphKind::RandomRegular:
      return random_regular_edges(n_c, offset, degree, rng);
  }
  throw InvalidConfig("unknown graph kind");
}

Topology realize(GraphKind kind, const std::vector<int>& component_sizes,
                 int degree, std::int64_t round, std::uint64_t seed) {
  if (component_sizes.empty()) {
    throw InvalidComponentSize("at least one component is required");
  }
  for (int s : component_sizes) {
    if (s < 1) {
      throw InvalidComponentSize("component sizes must be positive, got " +
                                 std::to_string(s));
    }
  }
  Topology t;
  t.kind = kind;
  t.degree = (kind == GraphKind::RandomRegular) ? degree : 0;
  t.component_sizes = component_sizes;
  t.n = std::accumulate(component_sizes.begin(), component_sizes.end(), 0);
  int offset = 0;
  for (std::size_t c = 0; c < component_sizes.size(); ++c) {
    auto rng = substream(seed, Stream::Topology, static_cast<std::uint64_t>(round),
                         static_cast<std::uint64_t>(c));
    t.component_edges.push_back(
        component_edges_for(kind, component_sizes[c], offset, degree, rng));
    offset += component_sizes[c];
  }
  return t;
}

}  // namespace

std::string graph_kind_name(GraphKind kind) {
  switch (kind) {
    case GraphKind::Ring:
      return "ring";
    case GraphKind::Grid2D:
      return "grid2d";
    case GraphKind::Complete:
      return "complete";
    case GraphKind::RandomRegular:
      return "random_regular";
  }
  return "unknown";
}

Topology build_topology(GraphKind kind, const std::vector<int>& component_sizes,
                        std::uint64_t seed, int degree) {
  return realize(kind, component_sizes, degree, 0, seed);
}

Topology resample_topology(const Topology& t, std::int64_t round,
                           std::uint64_t seed) {
  if (t.kind != GraphKind::RandomRegular) return t;
  return realize(t.kind, t.component_sizes, t.degree, round, seed);
}

MixingMatrix metropolis_weights(const Topology& t) {
  return MixingMatrix{metropolis_entries<double>(t), t.component_sizes};
}

ComponentProjector component_projector(const Topology& t) {
  return ComponentProjector{component_projector_entries<double>(t.component_sizes),
                            t.component_sizes};
}

MixingParam spectral_mixing_parameter(const MixingMatrix& w) {
  MixingParam out;
  out.per_component.reserve(w.component_sizes.size());
  int offset = 0;
  for (int n_c : w.component_sizes) {
    double p_c = 1.0;
    if (n_c > 1) {
      const Matrixd block = w.entries.block(offset, offset, n_c, n_c);
      const Matrixd gram = block.transpose() * block;
      Eigen::SelfAdjointEigenSolver<Matrixd> solver(gram,
                                                    Eigen::EigenvaluesOnly);
      double lambda2 = solver.eigenvalues()(n_c - 2);
      lambda2 = std::clamp(lambda2, 0.0, 1.0);
      if (lambda2 < 1e-12) lambda2 = 0.0;
      p_c = 1.0 - lambda2;
    }
    out.per_component.push_back(p_c);
    offset += n_c;
  }
  double weighted = 0.0;
  double weight = 0.0;
  for (std::size_t c = 0; c < w.component_sizes.size(); ++c) {
    weighted += out.per_component[c] * (w.component_sizes[c] - 1);
    weight += w.component_sizes[c] - 1;
  }
  out.p = weight > 0.0 ? weighted / weight : 1.0;
  return out;
}

}  // namespace semidec
