#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <random>
#include <vector>

#include "semidec/errors.hpp"
#include "semidec/topology.hpp"
#include "semidec/types.hpp"

namespace semidec {

// How device data differs within a component (intra) and between components
// (inter).  Quadratic objectives realize both axes through target offsets of
// the given scales; logistic objectives realize intra skew through a
// Dirichlet split of class proportions and inter skew through disjoint class
// blocks per component.
struct HeterogeneityConfig {
  bool intra_noniid = false;
  double intra_scale = 0.0;
  double dirichlet_alpha = 0.1;
  bool inter_noniid = false;
  double inter_scale = 0.0;
};

struct HeterogeneityEstimate {
  double zeta_intra = 0.0;
  double zeta_inter = 0.0;
  int probe_count = 0;
};

// A collection of n per-device objectives f_i over a shared parameter space
// R^d, with exact gradients, a known global minimum for gap measurement, and
// additive Gaussian gradient noise of total standard deviation noise_std.
// Immutable after construction; all methods are reentrant (randomness is
// owned by the caller).
class DeviceObjective {
 public:
  virtual ~DeviceObjective() = default;

  int dimension() const { return dimension_; }
  int devices() const { return devices_; }
  double noise_std() const { return noise_std_; }

  // Smoothness constant L: exact for quadratics, a certified upper bound
  // from per-device feature second moments for logistic objectives.
  virtual double smoothness() const = 0;

  virtual double device_value(int device, const Vectord& x) const = 0;
  virtual Vectord device_gradient(int device, const Vectord& x) const = 0;

  double global_value(const Vectord& x) const;
  Vectord global_gradient(const Vectord& x) const;

  // Exact local gradient plus isotropic Gaussian noise with per-coordinate
  // standard deviation noise_std/sqrt(d), so the expected squared noise norm
  // is noise_std^2.  noise_std = 0 returns the exact gradient and draws
  // nothing.
  Vectord stochastic_gradient(int device, const Vectord& x,
                              std::mt19937_64& rng) const;

  // Global minimum value f* and a minimizer: closed form for quadratics,
  // a full-batch gradient-descent reference solve for logistic objectives.
  virtual double reference_minimum() const = 0;
  virtual Vectord reference_point() const = 0;

  // f(x) - f*.
  double optimality_gap(const Vectord& x) const;

 protected:
  DeviceObjective(int dimension, int devices, double noise_std);

  void check_device(int device) const;
  void check_point(const Vectord& x) const;

 private:
  int dimension_;
  int devices_;
  double noise_std_;
};

// f_i(x) = (L/2) ||x - mu_i||^2 with per-device targets mu_i.  The global
// minimum is the mean target, attained value known in closed form.
class QuadraticObjective final : public DeviceObjective {
 public:
  QuadraticObjective(Matrixd targets, double curvature, double noise_std);

  double smoothness() const override { return curvature_; }
  double device_value(int device, const Vectord& x) const override;
  Vectord device_gradient(int device, const Vectord& x) const override;
  double reference_minimum() const override { return minimum_value_; }
  Vectord reference_point() const override { return mean_target_; }

  const Matrixd& targets() const { return targets_; }
  double curvature() const { return curvature_; }

 private:
  Matrixd targets_;  // d x n, column i = mu_i
  double curvature_;
  Vectord mean_target_;
  double minimum_value_;
};

// Multinomial logistic regression on synthetic Gaussian class clusters.
// Parameters are a classes x feature_dim weight matrix flattened row-major
// into R^d (d = classes * feature_dim).  The reference minimum is solved at
// construction by accelerated full-batch gradient descent to gradient norm
// 1e-8 (NotConverged beyond 1e6 iterations).
class LogisticObjective final : public DeviceObjective {
 public:
  struct DeviceData {
    int component = 0;
    std::vector<int> labels;
    Matrixd features;  // feature_dim x samples
  };

  LogisticObjective(int classes, std::vector<DeviceData> data,
                    double noise_std);

  double smoothness() const override { return smoothness_; }
  double device_value(int device, const Vectord& x) const override;
  Vectord device_gradient(int device, const Vectord& x) const override;
  double reference_minimum() const override { return minimum_value_; }
  Vectord reference_point() const override { return minimizer_; }

  int classes() const { return classes_; }
  int feature_dim() const { return feature_dim_; }
  const std::vector<DeviceData>& data() const { return data_; }

 private:
  int classes_;
  int feature_dim_;
  std::vector<DeviceData> data_;
  double smoothness_;
  Vectord minimizer_;
  double minimum_value_;
};

// Builds per-device quadratic targets on a topology: component offsets of
// magnitude inter_scale (antipodal along one random direction for two
// components) plus per-device perturbations of magnitude intra_scale.
// Deterministic in seed.
QuadraticObjective make_quadratic(int dimension, const Topology& topology,
                                  const HeterogeneityConfig& heterogeneity,
                                  double curvature, double noise_std,
                                  std::uint64_t seed);

// Builds a synthetic labeled dataset: one Gaussian cluster per class, devices
// draw samples_per_device points with class proportions governed by the
// heterogeneity config.  Inter non-IID assigns each component a disjoint
// block of classes (requires classes >= 2 * components); dimension must be a
// multiple of classes.  Deterministic in seed.
LogisticObjective make_logistic(int dimension, int classes,
                                int samples_per_device,
                                const Topology& topology,
                                const HeterogeneityConfig& heterogeneity,
                                double noise_std, std::uint64_t seed);

// Estimates the component-filtered gradient dispersion constants: for each
// probe x, averages 100 stochastic-gradient matrices G and measures
// (1/n)||G (W - Pi_C)||_F^2 and (1/n)||G (Pi_C - Pi)||_F^2; returns the
// square roots of the maxima over probes.  A finite probe set makes these
// lower estimates of the true suprema.
HeterogeneityEstimate measure_heterogeneity(const DeviceObjective& objective,
                                            const MixingMatrix& w,
                                            const ComponentProjector& proj,
                                            const std::vector<Vectord>& probes,
                                            std::mt19937_64& rng);

// Default probe set: count points of the form x_ref + 5 * z with z standard
// normal, centered on the objective's reference minimizer.
std::vector<Vectord> default_probes(const DeviceObjective& objective, int count,
                                    std::mt19937_64& rng);

// Dataset round trip: header device,component,label,feature_0..., one row
// per sample.
void write_logistic_csv(const LogisticObjective& objective, std::ostream& os);
LogisticObjective read_logistic_csv(std::istream& is, double noise_std);

}  // namespace semidec
