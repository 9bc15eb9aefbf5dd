#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include <doctest.h>

#include "oracles.hpp"
#include "semidec/errors.hpp"
#include "semidec/objectives.hpp"
#include "semidec/rng.hpp"
#include "semidec/topology.hpp"

using namespace semidec;

namespace {

Topology two_rings() { return build_topology(GraphKind::Ring, {5, 5}, 0); }

HeterogeneityConfig het(double intra, double inter) {
  HeterogeneityConfig h;
  h.intra_noniid = intra > 0.0;
  h.intra_scale = intra;
  h.inter_noniid = inter > 0.0;
  h.inter_scale = inter;
  return h;
}

}  // namespace

TEST_SUITE_BEGIN("objectives");

TEST_CASE("quadratic minimum is the mean target with zero gap") {
  const QuadraticObjective obj =
      make_quadratic(6, two_rings(), het(0.7, 1.3), 2.5, 0.0, 42);
  const Vectord mean = obj.targets().rowwise().mean();
  CHECK((obj.reference_point() - mean).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(obj.optimality_gap(obj.reference_point()) <= 1e-16);
  CHECK(obj.optimality_gap(obj.reference_point()) >= 0.0);
  // Any other point has a positive gap.
  Vectord off = obj.reference_point();
  off(0) += 0.5;
  CHECK(obj.optimality_gap(off) > 0.0);
  CHECK(obj.smoothness() == 2.5);
}

TEST_CASE("quadratic gradients match finite differences") {
  const QuadraticObjective obj =
      make_quadratic(5, two_rings(), het(1.0, 2.0), 1.7, 0.0, 7);
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const int device = static_cast<int>(rng() % 10);
    const Vectord x = oracle::random_vector(5, rng);
    const Vectord grad = obj.device_gradient(device, x);
    const Vectord fd = oracle::finite_difference_gradient(
        [&](const Vectord& y) { return obj.device_value(device, y); }, x,
        1e-6);
    const double scale = std::max(1.0, grad.norm());
    CHECK((grad - fd).norm() <= 1e-5 * scale);
  }
}

TEST_CASE("logistic gradients match finite differences") {
  const LogisticObjective obj =
      make_logistic(12, 3, 6, two_rings(), het(0.5, 0.0), 0.0, 11);
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const int device = static_cast<int>(rng() % 10);
    const Vectord x = 0.5 * oracle::random_vector(12, rng);
    const Vectord grad = obj.device_gradient(device, x);
    const Vectord fd = oracle::finite_difference_gradient(
        [&](const Vectord& y) { return obj.device_value(device, y); }, x,
        1e-6);
    const double scale = std::max(1.0, grad.norm());
    CHECK((grad - fd).norm() <= 1e-5 * scale);
  }
}

TEST_CASE("gradients are Lipschitz with the certified smoothness constant") {
  const QuadraticObjective quad =
      make_quadratic(4, two_rings(), het(1.0, 1.0), 3.0, 0.0, 5);
  const LogisticObjective logi =
      make_logistic(8, 2, 5, two_rings(), het(0.3, 0.0), 0.0, 5);
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 200; ++trial) {
    const int device = static_cast<int>(rng() % 10);
    const Vectord x = oracle::random_vector(4, rng);
    const Vectord y = oracle::random_vector(4, rng);
    const double lhs =
        (quad.device_gradient(device, x) - quad.device_gradient(device, y))
            .norm();
    CHECK(lhs <= quad.smoothness() * (x - y).norm() * (1.0 + 1e-9) + 1e-12);

    const Vectord u = oracle::random_vector(8, rng);
    const Vectord v = oracle::random_vector(8, rng);
    const double lhs2 =
        (logi.device_gradient(device, u) - logi.device_gradient(device, v))
            .norm();
    CHECK(lhs2 <= logi.smoothness() * (u - v).norm() * (1.0 + 1e-9) + 1e-12);
  }
}

TEST_CASE("both objective kinds are convex along random pairs") {
  const QuadraticObjective quad =
      make_quadratic(4, two_rings(), het(1.0, 1.0), 2.0, 0.0, 3);
  const LogisticObjective logi =
      make_logistic(8, 2, 4, two_rings(), het(0.2, 0.0), 0.0, 3);
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 1000; ++trial) {
    const Vectord x = oracle::random_vector(4, rng);
    const Vectord y = oracle::random_vector(4, rng);
    const double inner =
        (quad.global_gradient(x) - quad.global_gradient(y)).dot(x - y);
    CHECK(inner >= -1e-9);
    const Vectord u = oracle::random_vector(8, rng);
    const Vectord v = oracle::random_vector(8, rng);
    const double inner2 =
        (logi.global_gradient(u) - logi.global_gradient(v)).dot(u - v);
    CHECK(inner2 >= -1e-9);
  }
}

TEST_CASE("stochastic gradients are unbiased with the requested noise "
          "energy") {
  const QuadraticObjective obj =
      make_quadratic(4, two_rings(), het(0.5, 0.5), 1.0, 0.8, 9);
  auto rng = substream(77, Stream::Gradient);
  const Vectord x = oracle::random_vector(4, rng);
  const Vectord exact = obj.device_gradient(2, x);
  const int trials = 100000;
  Vectord mean = Vectord::Zero(4);
  Vectord second = Vectord::Zero(4);
  double noise_energy = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    const Vectord g = obj.stochastic_gradient(2, x, rng);
    mean += g;
    second += g.cwiseProduct(g);
    noise_energy += (g - exact).squaredNorm();
  }
  mean /= trials;
  second /= trials;
  for (int i = 0; i < 4; ++i) {
    const double var = std::max(0.0, second(i) - mean(i) * mean(i));
    const double se = std::sqrt(var / trials);
    CHECK(std::abs(mean(i) - exact(i)) <= 3 * se + 1e-12);
  }
  // E||noise||^2 = noise_std^2 within 2%.
  CHECK(std::abs(noise_energy / trials - 0.64) <= 0.02 * 0.64);
}

TEST_CASE("zero noise yields the exact gradient and consumes no randomness") {
  const QuadraticObjective obj =
      make_quadratic(3, two_rings(), het(0.5, 0.5), 1.0, 0.0, 9);
  auto rng = substream(5, Stream::Gradient);
  const auto before = rng;
  const Vectord x = Vectord::Ones(3);
  const Vectord g = obj.stochastic_gradient(0, x, rng);
  CHECK(rng == before);
  CHECK((g - obj.device_gradient(0, x)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("homogeneous populations measure zero heterogeneity") {
  const Topology t = two_rings();
  const QuadraticObjective obj =
      make_quadratic(6, t, het(0.0, 0.0), 1.0, 0.0, 1);
  const MixingMatrix w = metropolis_weights(t);
  const ComponentProjector proj = component_projector(t);
  auto rng = substream(1, Stream::Probe);
  const std::vector<Vectord> probes = default_probes(obj, 16, rng);
  const HeterogeneityEstimate est =
      measure_heterogeneity(obj, w, proj, probes, rng);
  CHECK(est.zeta_intra <= 1e-10);
  CHECK(est.zeta_inter <= 1e-10);
  CHECK(est.probe_count == 16);
}

TEST_CASE("two equal antipodal components measure exactly L times the "
          "offset scale") {
  const Topology t = two_rings();
  const double curvature = 1.8;
  const double scale = 2.5;
  const QuadraticObjective obj =
      make_quadratic(6, t, het(0.0, scale), curvature, 0.0, 21);
  const MixingMatrix w = metropolis_weights(t);
  const ComponentProjector proj = component_projector(t);
  auto rng = substream(2, Stream::Probe);
  const std::vector<Vectord> probes = default_probes(obj, 4, rng);
  const HeterogeneityEstimate est =
      measure_heterogeneity(obj, w, proj, probes, rng);
  CHECK(est.zeta_inter ==
        doctest::Approx(curvature * scale).epsilon(1e-6));
  CHECK(est.zeta_intra <= 1e-10);
}

TEST_CASE("heterogeneity estimates grow with the generating scales") {
  const Topology t = two_rings();
  const MixingMatrix w = metropolis_weights(t);
  const ComponentProjector proj = component_projector(t);
  double last_inter = -1.0;
  for (double scale : {0.0, 1.0, 2.0}) {
    const QuadraticObjective obj =
        make_quadratic(4, t, het(0.0, scale), 1.0, 0.0, 33);
    auto rng = substream(3, Stream::Probe);
    const HeterogeneityEstimate est = measure_heterogeneity(
        obj, w, proj, default_probes(obj, 8, rng), rng);
    CHECK(est.zeta_inter >= last_inter);
    last_inter = est.zeta_inter;
  }
  CHECK(last_inter > 0.0);

  double last_intra = -1.0;
  for (double scale : {0.0, 1.0, 2.0}) {
    const QuadraticObjective obj =
        make_quadratic(4, t, het(scale, 0.0), 1.0, 0.0, 33);
    auto rng = substream(4, Stream::Probe);
    const HeterogeneityEstimate est = measure_heterogeneity(
        obj, w, proj, default_probes(obj, 8, rng), rng);
    CHECK(est.zeta_intra >= last_intra);
    last_intra = est.zeta_intra;
  }
  CHECK(last_intra > 0.0);
}

TEST_CASE("single-component populations have no between-component "
          "heterogeneity") {
  const Topology t = build_topology(GraphKind::Ring, {10}, 0);
  const QuadraticObjective obj =
      make_quadratic(4, t, het(2.0, 0.0), 1.0, 0.0, 8);
  const MixingMatrix w = metropolis_weights(t);
  const ComponentProjector proj = component_projector(t);
  auto rng = substream(6, Stream::Probe);
  const HeterogeneityEstimate est = measure_heterogeneity(
      obj, w, proj, default_probes(obj, 8, rng), rng);
  CHECK(est.zeta_inter <= 1e-10);
  CHECK(est.zeta_intra > 0.0);
}

TEST_CASE("logistic factory validates its shape requirements") {
  const Topology t = two_rings();
  // dimension must be a positive multiple of classes.
  CHECK_THROWS_AS(make_logistic(7, 3, 4, t, het(0, 0), 0.0, 1),
                  InvalidConfig);
  // fewer than two classes.
  CHECK_THROWS_AS(make_logistic(4, 1, 4, t, het(0, 0), 0.0, 1),
                  InvalidConfig);
  // inter split needs classes >= 2 * components.
  CHECK_THROWS_AS(make_logistic(12, 3, 4, t, het(0.0, 1.0), 0.0, 1),
                  InvalidConfig);
  CHECK_NOTHROW(make_logistic(16, 4, 4, t, het(0.0, 1.0), 0.0, 1));
  // samples_per_device >= 1.
  CHECK_THROWS_AS(make_logistic(12, 3, 0, t, het(0, 0), 0.0, 1),
                  InvalidConfig);
}

TEST_CASE("inter-split logistic devices only hold classes from their "
          "component block") {
  const Topology t = two_rings();
  const LogisticObjective obj =
      make_logistic(16, 4, 12, t, het(0.0, 1.0), 0.0, 19);
  // Classes {0,1} for component 0, {2,3} for component 1.
  for (int device = 0; device < 10; ++device) {
    const auto& data = obj.data()[device];
    CHECK(data.component == (device < 5 ? 0 : 1));
    for (int label : data.labels) {
      if (device < 5) {
        CHECK(label <= 1);
      } else {
        CHECK(label >= 2);
      }
    }
    CHECK(data.labels.size() == 12);
    CHECK(data.features.cols() == 12);
    CHECK(data.features.rows() == 4);  // feature_dim = 16/4
  }
}

TEST_CASE("logistic reference solve reaches a certified stationary point") {
  const LogisticObjective obj =
      make_logistic(8, 2, 8, two_rings(), het(0.4, 0.0), 0.0, 23);
  CHECK(obj.global_gradient(obj.reference_point()).norm() <= 1e-8);
  CHECK(obj.optimality_gap(obj.reference_point()) <= 1e-10);
  Vectord off = obj.reference_point();
  off(1) += 1.0;
  CHECK(obj.optimality_gap(off) > 0.0);
}

TEST_CASE("logistic dataset round-trips through CSV exactly") {
  const LogisticObjective obj =
      make_logistic(12, 3, 5, two_rings(), het(0.6, 0.0), 0.25, 29);
  std::ostringstream out;
  write_logistic_csv(obj, out);
  const std::string body = out.str();
  CHECK(body.rfind("device,component,label,feature_0", 0) == 0);

  std::istringstream in(body);
  const LogisticObjective restored = read_logistic_csv(in, 0.25);
  REQUIRE(restored.devices() == obj.devices());
  CHECK(restored.classes() == obj.classes());
  CHECK(restored.feature_dim() == obj.feature_dim());
  for (int device = 0; device < obj.devices(); ++device) {
    CHECK(restored.data()[device].labels == obj.data()[device].labels);
    CHECK(restored.data()[device].component == obj.data()[device].component);
    CHECK((restored.data()[device].features - obj.data()[device].features)
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
  // Identical data must give identical values and gradients.
  std::mt19937_64 rng(31);
  const Vectord x = oracle::random_vector(12, rng);
  CHECK(restored.global_value(x) == obj.global_value(x));
}

TEST_CASE("default probes are centered on the reference point") {
  const QuadraticObjective obj =
      make_quadratic(4, two_rings(), het(0.0, 1.0), 1.0, 0.0, 2);
  auto rng = substream(9, Stream::Probe);
  const std::vector<Vectord> probes = default_probes(obj, 16, rng);
  REQUIRE(probes.size() == 16);
  double mean_dist = 0.0;
  for (const Vectord& probe : probes) {
    CHECK(probe.size() == 4);
    mean_dist += (probe - obj.reference_point()).norm();
  }
  // Spread of radius ~5 sqrt(d) around the center, not collapsed onto it.
  CHECK(mean_dist / 16 > 1.0);
}

TEST_CASE("objective constructors reject nonsense") {
  CHECK_THROWS_AS(make_quadratic(0, two_rings(), het(0, 0), 1.0, 0.0, 1),
                  InvalidConfig);
  CHECK_THROWS_AS(make_quadratic(3, two_rings(), het(0, 0), 1.0, -0.5, 1),
                  InvalidConfig);
}

TEST_SUITE_END();
