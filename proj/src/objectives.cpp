#include "semidec/objectives.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "semidec/csv.hpp"
#include "semidec/rng.hpp"

namespace semidec {

namespace {

using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Vectord random_unit(int dimension, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vectord v(dimension);
  double norm = 0.0;
  do {
    for (int i = 0; i < dimension; ++i) v(i) = normal(rng);
    norm = v.norm();
  } while (norm == 0.0);
  return v / norm;
}

std::vector<double> dirichlet(double alpha, int count, std::mt19937_64& rng) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> w(count);
  double sum = 0.0;
  for (double& v : w) {
    v = gamma(rng);
    sum += v;
  }
  if (sum <= 0.0) {
    std::fill(w.begin(), w.end(), 1.0 / count);
    return w;
  }
  for (double& v : w) v /= sum;
  return w;
}

}  // namespace

// ---- base ------------------------------------------------------------------

DeviceObjective::DeviceObjective(int dimension, int devices, double noise_std)
    : dimension_(dimension), devices_(devices), noise_std_(noise_std) {
  if (dimension < 1) {
    throw InvalidConfig("objective dimension must be >= 1, got " +
                        std::to_string(dimension));
  }
  if (devices < 1) {
    throw InvalidConfig("objective needs at least one device");
  }
  if (noise_std < 0.0) {
    throw InvalidConfig("noise_std must be >= 0");
  }
}

void DeviceObjective::check_device(int device) const {
  if (device < 0 || device >= devices_) {
    throw DimensionMismatch("device index " + std::to_string(device) +
                            " outside 0.." + std::to_string(devices_ - 1));
  }
}

void DeviceObjective::check_point(const Vectord& x) const {
  if (x.size() != dimension_) {
    throw DimensionMismatch("point has dimension " + std::to_string(x.size()) +
                            ", objective expects " +
                            std::to_string(dimension_));
  }
}

double DeviceObjective::global_value(const Vectord& x) const {
  double sum = 0.0;
  for (int i = 0; i < devices_; ++i) sum += device_value(i, x);
  return sum / static_cast<double>(devices_);
}

Vectord DeviceObjective::global_gradient(const Vectord& x) const {
  Vectord sum = Vectord::Zero(dimension_);
  for (int i = 0; i < devices_; ++i) sum += device_gradient(i, x);
  return sum / static_cast<double>(devices_);
}

Vectord DeviceObjective::stochastic_gradient(int device, const Vectord& x,
                                             std::mt19937_64& rng) const {
  Vectord g = device_gradient(device, x);
  if (noise_std_ > 0.0) {
    std::normal_distribution<double> noise(
        0.0, noise_std_ / std::sqrt(static_cast<double>(dimension_)));
    for (int i = 0; i < dimension_; ++i) g(i) += noise(rng);
  }
  return g;
}

double DeviceObjective::optimality_gap(const Vectord& x) const {
  return global_value(x) - reference_minimum();
}

// ---- quadratic -------------------------------------------------------------

QuadraticObjective::QuadraticObjective(Matrixd targets, double curvature,
                                       double noise_std)
    : DeviceObjective(static_cast<int>(targets.rows()),
                      static_cast<int>(targets.cols()), noise_std),
      targets_(std::move(targets)),
      curvature_(curvature) {
  if (curvature <= 0.0) {
    throw InvalidConfig("quadratic curvature must be positive");
  }
  if (!targets_.allFinite()) {
    throw InvalidConfig("quadratic targets must be finite");
  }
  mean_target_ = targets_.rowwise().mean();
  minimum_value_ = 0.0;               // placeholder until the mean is known
  minimum_value_ = global_value(mean_target_);
}

double QuadraticObjective::device_value(int device, const Vectord& x) const {
  check_device(device);
  check_point(x);
  return 0.5 * curvature_ * (x - targets_.col(device)).squaredNorm();
}

Vectord QuadraticObjective::device_gradient(int device,
                                            const Vectord& x) const {
  check_device(device);
  check_point(x);
  return curvature_ * (x - targets_.col(device));
}

QuadraticObjective make_quadratic(int dimension, const Topology& topology,
                                  const HeterogeneityConfig& heterogeneity,
                                  double curvature, double noise_std,
                                  std::uint64_t seed) {
  if (dimension < 1) {
    throw InvalidConfig("dimension must be >= 1");
  }
  if (heterogeneity.intra_scale < 0.0 || heterogeneity.inter_scale < 0.0) {
    throw InvalidConfig("heterogeneity scales must be >= 0");
  }
  auto rng = substream(seed, Stream::Data);
  Matrixd targets = Matrixd::Zero(dimension, topology.n);
  const int components = topology.components();
  if (heterogeneity.inter_noniid && heterogeneity.inter_scale > 0.0) {
    std::vector<Vectord> offsets;
    offsets.reserve(components);
    if (components == 2) {
      // Antipodal offsets along one direction: with equal component sizes the
      // measured inter dispersion equals curvature * inter_scale exactly.
      const Vectord direction = random_unit(dimension, rng);
      offsets.push_back(heterogeneity.inter_scale * direction);
      offsets.push_back(-heterogeneity.inter_scale * direction);
    } else {
      for (int c = 0; c < components; ++c) {
        offsets.push_back(heterogeneity.inter_scale *
                          random_unit(dimension, rng));
      }
    }
    int off = 0;
    for (int c = 0; c < components; ++c) {
      const int n_c = topology.component_sizes[c];
      targets.middleCols(off, n_c).colwise() += offsets[c];
      off += n_c;
    }
  }
  if (heterogeneity.intra_noniid && heterogeneity.intra_scale > 0.0) {
    for (int i = 0; i < topology.n; ++i) {
      targets.col(i) += heterogeneity.intra_scale * random_unit(dimension, rng);
    }
  }
  return QuadraticObjective(std::move(targets), curvature, noise_std);
}

// ---- logistic --------------------------------------------------------------

namespace {

double logsumexp(const Vectord& z) {
  const double zmax = z.maxCoeff();
  return zmax + std::log((z.array() - zmax).exp().sum());
}

}  // namespace

LogisticObjective::LogisticObjective(int classes, std::vector<DeviceData> data,
                                     double noise_std)
    : DeviceObjective(
          classes * (data.empty() || data.front().features.rows() == 0
                         ? 0
                         : static_cast<int>(data.front().features.rows())),
          static_cast<int>(data.size()), noise_std),
      classes_(classes),
      feature_dim_(static_cast<int>(data.front().features.rows())),
      data_(std::move(data)) {
  if (classes_ < 2) {
    throw InvalidConfig("logistic objective needs at least 2 classes");
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    const auto& dd = data_[i];
    if (dd.labels.empty() ||
        dd.features.cols() != static_cast<Eigen::Index>(dd.labels.size())) {
      throw InvalidConfig("device " + std::to_string(i) +
                          " must hold at least one labeled sample");
    }
    if (dd.features.rows() != feature_dim_) {
      throw InvalidConfig("device " + std::to_string(i) +
                          " has inconsistent feature dimension");
    }
    if (!dd.features.allFinite()) {
      throw InvalidConfig("device " + std::to_string(i) +
                          " has non-finite features");
    }
    for (int label : dd.labels) {
      if (label < 0 || label >= classes_) {
        throw InvalidConfig("label " + std::to_string(label) +
                            " outside 0.." + std::to_string(classes_ - 1));
      }
    }
  }

  // Certified smoothness: per-sample loss curvature in class space is at most
  // 1/2, so L_i <= lambda_max(feature second moment)/2.
  double worst = 0.0;
  for (const auto& dd : data_) {
    const Matrixd second_moment =
        (dd.features * dd.features.transpose()) /
        static_cast<double>(dd.features.cols());
    Eigen::SelfAdjointEigenSolver<Matrixd> solver(second_moment,
                                                  Eigen::EigenvaluesOnly);
    worst = std::max(worst, 0.5 * solver.eigenvalues().maxCoeff());
  }
  smoothness_ = std::max(worst, 1e-12);

  // Reference solve: accelerated full-batch gradient descent with function
  // restarts, to gradient norm 1e-8.
  constexpr double kTol = 1e-8;
  constexpr int kMaxIter = 1'000'000;
  const double step = 1.0 / smoothness_;
  Vectord x = Vectord::Zero(dimension());
  Vectord x_prev = x;
  double f_curr = global_value(x);
  double momentum = 0.0;
  bool converged = global_gradient(x).norm() <= kTol;
  for (int iter = 0; iter < kMaxIter && !converged; ++iter) {
    const Vectord y = x + (momentum / (momentum + 3.0)) * (x - x_prev);
    Vectord x_next = y - step * global_gradient(y);
    double f_next = global_value(x_next);
    if (f_next > f_curr) {
      x_next = x - step * global_gradient(x);
      f_next = global_value(x_next);
      momentum = 0.0;
    } else {
      momentum += 1.0;
    }
    x_prev = x;
    x = std::move(x_next);
    f_curr = f_next;
    converged = global_gradient(x).norm() <= kTol;
  }
  if (!converged) {
    throw NotConverged(
        "logistic reference solve did not reach gradient norm 1e-8 within " +
        std::to_string(kMaxIter) + " iterations");
  }
  minimizer_ = std::move(x);
  minimum_value_ = global_value(minimizer_);
}

double LogisticObjective::device_value(int device, const Vectord& x) const {
  check_device(device);
  check_point(x);
  const auto& dd = data_[device];
  Eigen::Map<const RowMajorMatrix> theta(x.data(), classes_, feature_dim_);
  const Matrixd logits = theta * dd.features;
  double total = 0.0;
  for (Eigen::Index s = 0; s < logits.cols(); ++s) {
    const Vectord z = logits.col(s);
    total += logsumexp(z) - z(dd.labels[s]);
  }
  return total / static_cast<double>(logits.cols());
}

Vectord LogisticObjective::device_gradient(int device, const Vectord& x) const {
  check_device(device);
  check_point(x);
  const auto& dd = data_[device];
  Eigen::Map<const RowMajorMatrix> theta(x.data(), classes_, feature_dim_);
  const Matrixd logits = theta * dd.features;
  RowMajorMatrix grad = RowMajorMatrix::Zero(classes_, feature_dim_);
  for (Eigen::Index s = 0; s < logits.cols(); ++s) {
    const Vectord z = logits.col(s);
    Vectord probs = (z.array() - logsumexp(z)).exp();
    probs(dd.labels[s]) -= 1.0;
    grad.noalias() += probs * dd.features.col(s).transpose();
  }
  grad /= static_cast<double>(logits.cols());
  return Eigen::Map<const Vectord>(grad.data(), dimension());
}

LogisticObjective make_logistic(int dimension, int classes,
                                int samples_per_device,
                                const Topology& topology,
                                const HeterogeneityConfig& heterogeneity,
                                double noise_std, std::uint64_t seed) {
  if (classes < 2) {
    throw InvalidConfig("classes must be >= 2");
  }
  if (samples_per_device < 1) {
    throw InvalidConfig("samples_per_device must be >= 1");
  }
  if (dimension < classes || dimension % classes != 0) {
    throw InvalidConfig("dimension " + std::to_string(dimension) +
                        " must be a positive multiple of classes " +
                        std::to_string(classes));
  }
  const int components = topology.components();
  if (heterogeneity.inter_noniid && classes < 2 * components) {
    throw InvalidConfig("disjoint class split needs classes >= 2*components (" +
                        std::to_string(classes) + " < " +
                        std::to_string(2 * components) + ")");
  }
  if (heterogeneity.intra_noniid && heterogeneity.dirichlet_alpha <= 0.0) {
    throw InvalidConfig("dirichlet_alpha must be > 0");
  }
  const int feature_dim = dimension / classes;
  auto rng = substream(seed, Stream::Data);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<Vectord> class_means;
  class_means.reserve(classes);
  for (int k = 0; k < classes; ++k) {
    class_means.push_back(random_unit(feature_dim, rng));
  }

  // Contiguous class blocks per component for the disjoint inter split.
  std::vector<std::vector<int>> allowed(components);
  if (heterogeneity.inter_noniid) {
    const int base = classes / components;
    const int rem = classes % components;
    int next = 0;
    for (int c = 0; c < components; ++c) {
      const int size = base + (c < rem ? 1 : 0);
      for (int k = 0; k < size; ++k) allowed[c].push_back(next++);
    }
  } else {
    for (int c = 0; c < components; ++c) {
      for (int k = 0; k < classes; ++k) allowed[c].push_back(k);
    }
  }

  std::vector<LogisticObjective::DeviceData> data;
  data.reserve(topology.n);
  for (int i = 0; i < topology.n; ++i) {
    const int component = topology.component_of(i);
    const auto& pool = allowed[component];
    std::vector<double> probs;
    if (heterogeneity.intra_noniid) {
      probs = dirichlet(heterogeneity.dirichlet_alpha,
                        static_cast<int>(pool.size()), rng);
    } else {
      probs.assign(pool.size(), 1.0 / static_cast<double>(pool.size()));
    }
    std::discrete_distribution<int> pick(probs.begin(), probs.end());
    LogisticObjective::DeviceData dd;
    dd.component = component;
    dd.labels.resize(samples_per_device);
    dd.features.resize(feature_dim, samples_per_device);
    for (int s = 0; s < samples_per_device; ++s) {
      const int label = pool[pick(rng)];
      dd.labels[s] = label;
      for (int r = 0; r < feature_dim; ++r) {
        dd.features(r, s) = class_means[label](r) + normal(rng);
      }
    }
    data.push_back(std::move(dd));
  }
  return LogisticObjective(classes, std::move(data), noise_std);
}

// ---- heterogeneity measurement ---------------------------------------------

HeterogeneityEstimate measure_heterogeneity(const DeviceObjective& objective,
                                            const MixingMatrix& w,
                                            const ComponentProjector& proj,
                                            const std::vector<Vectord>& probes,
                                            std::mt19937_64& rng) {
  if (probes.empty()) {
    throw InvalidConfig("heterogeneity measurement needs at least one probe");
  }
  const int n = objective.devices();
  if (w.entries.cols() != n || proj.entries.cols() != n) {
    throw DimensionMismatch("mixing matrix covers " +
                            std::to_string(w.entries.cols()) +
                            " devices, objective has " + std::to_string(n));
  }
  const Matrixd intra_filter = w.entries - proj.entries;
  const Matrixd inter_filter = proj.entries - proj.global();
  constexpr int kDraws = 100;
  double worst_intra = 0.0;
  double worst_inter = 0.0;
  Matrixd grads(objective.dimension(), n);
  for (const auto& probe : probes) {
    double acc_intra = 0.0;
    double acc_inter = 0.0;
    for (int draw = 0; draw < kDraws; ++draw) {
      for (int i = 0; i < n; ++i) {
        grads.col(i) = objective.stochastic_gradient(i, probe, rng);
      }
      acc_intra += (grads * intra_filter).squaredNorm() / n;
      acc_inter += (grads * inter_filter).squaredNorm() / n;
    }
    worst_intra = std::max(worst_intra, acc_intra / kDraws);
    worst_inter = std::max(worst_inter, acc_inter / kDraws);
  }
  return HeterogeneityEstimate{std::sqrt(worst_intra), std::sqrt(worst_inter),
                               static_cast<int>(probes.size())};
}

std::vector<Vectord> default_probes(const DeviceObjective& objective, int count,
                                    std::mt19937_64& rng) {
  if (count < 1) {
    throw InvalidConfig("probe count must be >= 1");
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  const Vectord center = objective.reference_point();
  std::vector<Vectord> probes;
  probes.reserve(count);
  for (int j = 0; j < count; ++j) {
    Vectord z(objective.dimension());
    for (int i = 0; i < objective.dimension(); ++i) z(i) = normal(rng);
    probes.push_back(center + 5.0 * z);
  }
  return probes;
}

// ---- dataset round trip ----------------------------------------------------

void write_logistic_csv(const LogisticObjective& objective, std::ostream& os) {
  os << "device,component,label";
  for (int r = 0; r < objective.feature_dim(); ++r) os << ",feature_" << r;
  os << "\n";
  const auto& data = objective.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& dd = data[i];
    for (Eigen::Index s = 0; s < dd.features.cols(); ++s) {
      os << i << ',' << dd.component << ',' << dd.labels[s];
      for (int r = 0; r < objective.feature_dim(); ++r) {
        os << ',' << format_double(dd.features(r, s));
      }
      os << "\n";
    }
  }
}

LogisticObjective read_logistic_csv(std::istream& is, double noise_std) {
  std::string line;
  if (!std::getline(is, line)) {
    throw InvalidConfig("dataset stream is empty");
  }
  int feature_dim = 0;
  {
    std::stringstream header(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(header, field, ',')) fields.push_back(field);
    if (fields.size() < 4 || fields[0] != "device" ||
        fields[1] != "component" || fields[2] != "label") {
      throw InvalidConfig("dataset header must start with device,component,label");
    }
    feature_dim = static_cast<int>(fields.size()) - 3;
  }
  struct Raw {
    int component = 0;
    std::vector<int> labels;
    std::vector<Vectord> features;
  };
  std::vector<Raw> devices;
  int max_label = 0;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(row, field, ',')) fields.push_back(field);
    if (static_cast<int>(fields.size()) != feature_dim + 3) {
      throw InvalidConfig("dataset line " + std::to_string(lineno) +
                          " has " + std::to_string(fields.size()) +
                          " fields, expected " +
                          std::to_string(feature_dim + 3));
    }
    try {
      const int device = std::stoi(fields[0]);
      const int component = std::stoi(fields[1]);
      const int label = std::stoi(fields[2]);
      if (device < 0 || device > static_cast<int>(devices.size())) {
        throw InvalidConfig("dataset line " + std::to_string(lineno) +
                            ": device indices must be grouped and ascending");
      }
      if (device == static_cast<int>(devices.size())) devices.emplace_back();
      Raw& raw = devices[device];
      raw.component = component;
      raw.labels.push_back(label);
      Vectord feat(feature_dim);
      for (int r = 0; r < feature_dim; ++r) feat(r) = std::stod(fields[3 + r]);
      raw.features.push_back(std::move(feat));
      max_label = std::max(max_label, label);
    } catch (const std::invalid_argument&) {
      throw InvalidConfig("dataset line " + std::to_string(lineno) +
                          " has a malformed number");
    }
  }
  if (devices.empty()) {
    throw InvalidConfig("dataset holds no samples");
  }
  std::vector<LogisticObjective::DeviceData> data;
  data.reserve(devices.size());
  for (auto& raw : devices) {
    LogisticObjective::DeviceData dd;
    dd.component = raw.component;
    dd.labels = std::move(raw.labels);
    dd.features.resize(feature_dim, static_cast<Eigen::Index>(raw.features.size()));
    for (std::size_t s = 0; s < raw.features.size(); ++s) {
      dd.features.col(static_cast<Eigen::Index>(s)) = raw.features[s];
    }
    data.push_back(std::move(dd));
  }
  return LogisticObjective(max_label + 1, std::move(data), noise_std);
}

}  // namespace semidec
