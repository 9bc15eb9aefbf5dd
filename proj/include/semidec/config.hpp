#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "semidec/bounds.hpp"
#include "semidec/engine.hpp"
#include "semidec/objectives.hpp"

namespace semidec {

// Flat sectioned key-value file:
//
//   [section]
//   key = value          # full-line comments start with '#'
//
// Unknown keys are rejected by the typed loaders, and every diagnostic names
// the file, line, and field.
class ParsedConfig {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  static ParsedConfig from_file(const std::string& path);
  static ParsedConfig from_text(const std::string& text,
                                const std::string& origin);

  const std::string& origin() const { return origin_; }
  bool has_section(const std::string& section) const;
  bool has(const std::string& section, const std::string& key) const;
  const Entry* find(const std::string& section, const std::string& key) const;

  // Typed getters; the plain forms throw ConfigError when the key is absent.
  std::string get_string(const std::string& section,
                         const std::string& key) const;
  std::string get_string_or(const std::string& section, const std::string& key,
                            const std::string& fallback) const;
  long long get_int(const std::string& section, const std::string& key) const;
  long long get_int_or(const std::string& section, const std::string& key,
                       long long fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double_or(const std::string& section, const std::string& key,
                       double fallback) const;
  bool get_bool_or(const std::string& section, const std::string& key,
                   bool fallback) const;
  std::vector<long long> get_int_list(const std::string& section,
                                      const std::string& key) const;
  std::vector<double> get_double_list(const std::string& section,
                                      const std::string& key) const;

  // Rejects keys of a section outside the allowed set.
  void require_known(const std::string& section,
                     const std::vector<std::string>& allowed) const;

  [[noreturn]] void fail(const std::string& section, const std::string& key,
                         const std::string& message) const;

 private:
  std::string origin_;
  std::map<std::string, std::map<std::string, Entry>> sections_;
};

struct ObjectiveSpec {
  enum class Kind { Quadratic, Logistic };
  Kind kind = Kind::Quadratic;
  int dimension = 1;
  double noise_std = 0.0;
  double smoothness = 1.0;  // quadratic curvature
  HeterogeneityConfig heterogeneity;
  int classes = 0;             // logistic
  int samples_per_device = 0;  // logistic
};

// Everything one simulation campaign needs: the network, the objective, and
// the run parameters with a seed list.
struct ExperimentConfig {
  std::vector<int> component_sizes;
  GraphKind topology = GraphKind::Ring;
  int degree = 0;
  bool time_varying = false;
  ObjectiveSpec objective;
  std::vector<Primitive> primitives;
  int K = 1;
  std::int64_t H = 1;
  std::int64_t T = 1;
  double eta = 0.0;
  std::vector<std::uint64_t> seeds;
  std::int64_t trace_every = 1;

  int n() const {
    int total = 0;
    for (int s : component_sizes) total += s;
    return total;
  }
};

ExperimentConfig load_experiment_config(const ParsedConfig& cfg);

struct BoundsConfig {
  BoundInputs inputs;
  bool has_axis = false;
  SweepAxis axis = SweepAxis::SamplingRate;
  std::vector<double> grid;
};

BoundsConfig load_bounds_config(const ParsedConfig& cfg);

// Text of a bounds-ready config holding exactly the given inputs; the result
// parses back via load_bounds_config unchanged.
std::string render_bounds_config(const BoundInputs& inputs);

SimConfig to_sim_config(const ExperimentConfig& cfg, Primitive primitive,
                        std::uint64_t seed);

std::unique_ptr<DeviceObjective> make_objective(const ObjectiveSpec& spec,
                                                const Topology& topology,
                                                std::uint64_t seed);

}  // namespace semidec
