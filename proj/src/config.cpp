#include "semidec/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "semidec/csv.hpp"
#include "semidec/errors.hpp"

namespace semidec {

namespace {

std::string trim(const std::string& text) {
  auto begin = text.begin();
  auto end = text.end();
  while (begin != end && std::isspace(static_cast<unsigned char>(*begin))) {
    ++begin;
  }
  while (end != begin && std::isspace(static_cast<unsigned char>(*(end - 1)))) {
    --end;
  }
  return std::string(begin, end);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  std::string current;
  std::istringstream stream(text);
  while (std::getline(stream, current, ',')) {
    parts.push_back(trim(current));
  }
  return parts;
}

long long parse_int(const ParsedConfig& cfg, const std::string& section,
                    const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const long long value = std::stoll(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    cfg.fail(section, key, "expected an integer, got '" + text + "'");
  }
}

double parse_double(const ParsedConfig& cfg, const std::string& section,
                    const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double value = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    cfg.fail(section, key, "expected a number, got '" + text + "'");
  }
}

}  // namespace

ParsedConfig ParsedConfig::from_file(const std::string& path) {
  std::ifstream stream(path);
  if (!stream) {
    throw ConfigError("cannot open config file '" + path + "'");
  }
  std::ostringstream text;
  text << stream.rdbuf();
  return from_text(text.str(), path);
}

ParsedConfig ParsedConfig::from_text(const std::string& text,
                                     const std::string& origin) {
  ParsedConfig cfg;
  cfg.origin_ = origin;
  std::istringstream stream(text);
  std::string raw_line;
  std::string section;
  int line_number = 0;
  while (std::getline(stream, raw_line)) {
    ++line_number;
    const std::string line = trim(raw_line);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    const std::string where = origin + ":" + std::to_string(line_number);
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ConfigError(where + ": malformed section header '" + line + "'");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) {
        throw ConfigError(where + ": empty section name");
      }
      continue;
    }
    const auto equals = line.find('=');
    if (equals == std::string::npos) {
      throw ConfigError(where + ": expected 'key = value', got '" + line + "'");
    }
    if (section.empty()) {
      throw ConfigError(where + ": key outside of any [section]");
    }
    const std::string key = trim(line.substr(0, equals));
    const std::string value = trim(line.substr(equals + 1));
    if (key.empty()) {
      throw ConfigError(where + ": empty key");
    }
    auto& entries = cfg.sections_[section];
    if (entries.count(key) != 0) {
      throw ConfigError(where + ": duplicate key " + section + "." + key);
    }
    entries[key] = Entry{value, line_number};
  }
  return cfg;
}

bool ParsedConfig::has_section(const std::string& section) const {
  return sections_.count(section) != 0;
}

bool ParsedConfig::has(const std::string& section,
                       const std::string& key) const {
  return find(section, key) != nullptr;
}

const ParsedConfig::Entry* ParsedConfig::find(const std::string& section,
                                              const std::string& key) const {
  const auto section_it = sections_.find(section);
  if (section_it == sections_.end()) return nullptr;
  const auto key_it = section_it->second.find(key);
  if (key_it == section_it->second.end()) return nullptr;
  return &key_it->second;
}

void ParsedConfig::fail(const std::string& section, const std::string& key,
                        const std::string& message) const {
  const Entry* entry = find(section, key);
  std::string where = origin_;
  if (entry != nullptr) where += ":" + std::to_string(entry->line);
  throw ConfigError(where + ": " + section + "." + key + ": " + message);
}

std::string ParsedConfig::get_string(const std::string& section,
                                     const std::string& key) const {
  const Entry* entry = find(section, key);
  if (entry == nullptr) {
    throw ConfigError(origin_ + ": missing required key " + section + "." +
                      key);
  }
  return entry->value;
}

std::string ParsedConfig::get_string_or(const std::string& section,
                                        const std::string& key,
                                        const std::string& fallback) const {
  const Entry* entry = find(section, key);
  return entry == nullptr ? fallback : entry->value;
}

long long ParsedConfig::get_int(const std::string& section,
                                const std::string& key) const {
  return parse_int(*this, section, key, get_string(section, key));
}

long long ParsedConfig::get_int_or(const std::string& section,
                                   const std::string& key,
                                   long long fallback) const {
  const Entry* entry = find(section, key);
  if (entry == nullptr) return fallback;
  return parse_int(*this, section, key, entry->value);
}

double ParsedConfig::get_double(const std::string& section,
                                const std::string& key) const {
  return parse_double(*this, section, key, get_string(section, key));
}

double ParsedConfig::get_double_or(const std::string& section,
                                   const std::string& key,
                                   double fallback) const {
  const Entry* entry = find(section, key);
  if (entry == nullptr) return fallback;
  return parse_double(*this, section, key, entry->value);
}

bool ParsedConfig::get_bool_or(const std::string& section,
                               const std::string& key, bool fallback) const {
  const Entry* entry = find(section, key);
  if (entry == nullptr) return fallback;
  const std::string& value = entry->value;
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  fail(section, key, "expected a boolean (true/false), got '" + value + "'");
}

std::vector<long long> ParsedConfig::get_int_list(
    const std::string& section, const std::string& key) const {
  std::vector<long long> values;
  for (const std::string& part : split_list(get_string(section, key))) {
    if (part.empty()) fail(section, key, "empty element in list");
    values.push_back(parse_int(*this, section, key, part));
  }
  if (values.empty()) fail(section, key, "expected a non-empty list");
  return values;
}

std::vector<double> ParsedConfig::get_double_list(
    const std::string& section, const std::string& key) const {
  std::vector<double> values;
  for (const std::string& part : split_list(get_string(section, key))) {
    if (part.empty()) fail(section, key, "empty element in list");
    values.push_back(parse_double(*this, section, key, part));
  }
  if (values.empty()) fail(section, key, "expected a non-empty list");
  return values;
}

void ParsedConfig::require_known(
    const std::string& section, const std::vector<std::string>& allowed) const {
  const auto section_it = sections_.find(section);
  if (section_it == sections_.end()) return;
  for (const auto& [key, entry] : section_it->second) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(origin_ + ":" + std::to_string(entry.line) +
                        ": unknown key " + section + "." + key);
    }
  }
}

namespace {

GraphKind parse_graph_kind(const ParsedConfig& cfg, const std::string& text) {
  if (text == "ring") return GraphKind::Ring;
  if (text == "grid2d") return GraphKind::Grid2D;
  if (text == "complete") return GraphKind::Complete;
  if (text == "random_regular") return GraphKind::RandomRegular;
  cfg.fail("network", "topology",
           "expected one of ring/grid2d/complete/random_regular, got '" + text +
               "'");
}

std::vector<Primitive> parse_primitives(const ParsedConfig& cfg,
                                        const std::string& text) {
  std::vector<Primitive> primitives;
  for (const std::string& part : split_list(text)) {
    if (part == "s2s") {
      primitives.push_back(Primitive::S2S);
    } else if (part == "s2a") {
      primitives.push_back(Primitive::S2A);
    } else {
      cfg.fail("run", "primitives",
               "expected a comma list drawn from s2s,s2a, got '" + part + "'");
    }
  }
  if (primitives.empty()) {
    cfg.fail("run", "primitives", "expected at least one primitive");
  }
  return primitives;
}

}  // namespace

ExperimentConfig load_experiment_config(const ParsedConfig& cfg) {
  cfg.require_known("network",
                    {"components", "topology", "degree", "time_varying"});
  cfg.require_known("objective",
                    {"kind", "dimension", "noise_std", "smoothness", "intra",
                     "intra_scale", "dirichlet_alpha", "inter", "inter_scale",
                     "classes", "samples_per_device"});
  cfg.require_known("run", {"primitives", "K", "H", "T", "eta", "seeds",
                            "trace_every"});

  ExperimentConfig out;
  for (long long size : cfg.get_int_list("network", "components")) {
    if (size < 1) cfg.fail("network", "components", "sizes must be >= 1");
    out.component_sizes.push_back(static_cast<int>(size));
  }
  out.topology = parse_graph_kind(cfg, cfg.get_string("network", "topology"));
  out.degree = static_cast<int>(cfg.get_int_or("network", "degree", 0));
  out.time_varying = cfg.get_bool_or("network", "time_varying", false);
  if (out.topology == GraphKind::RandomRegular && out.degree < 1) {
    cfg.fail("network", "topology",
             "random_regular requires network.degree >= 1");
  }

  ObjectiveSpec& spec = out.objective;
  const std::string kind = cfg.get_string("objective", "kind");
  if (kind == "quadratic") {
    spec.kind = ObjectiveSpec::Kind::Quadratic;
  } else if (kind == "logistic") {
    spec.kind = ObjectiveSpec::Kind::Logistic;
  } else {
    cfg.fail("objective", "kind",
             "expected quadratic or logistic, got '" + kind + "'");
  }
  spec.dimension = static_cast<int>(cfg.get_int("objective", "dimension"));
  spec.noise_std = cfg.get_double_or("objective", "noise_std", 0.0);
  spec.smoothness = cfg.get_double_or("objective", "smoothness", 1.0);
  const std::string intra = cfg.get_string_or("objective", "intra", "iid");
  if (intra == "noniid") {
    spec.heterogeneity.intra_noniid = true;
  } else if (intra != "iid") {
    cfg.fail("objective", "intra", "expected iid or noniid, got '" + intra +
                                       "'");
  }
  spec.heterogeneity.intra_scale =
      cfg.get_double_or("objective", "intra_scale", 0.0);
  spec.heterogeneity.dirichlet_alpha =
      cfg.get_double_or("objective", "dirichlet_alpha", 0.1);
  const std::string inter = cfg.get_string_or("objective", "inter", "iid");
  if (inter == "noniid") {
    spec.heterogeneity.inter_noniid = true;
  } else if (inter != "iid") {
    cfg.fail("objective", "inter", "expected iid or noniid, got '" + inter +
                                       "'");
  }
  spec.heterogeneity.inter_scale =
      cfg.get_double_or("objective", "inter_scale", 0.0);
  if (spec.kind == ObjectiveSpec::Kind::Logistic) {
    spec.classes = static_cast<int>(cfg.get_int("objective", "classes"));
    spec.samples_per_device =
        static_cast<int>(cfg.get_int("objective", "samples_per_device"));
  }

  out.primitives =
      parse_primitives(cfg, cfg.get_string_or("run", "primitives", "s2s,s2a"));
  out.K = static_cast<int>(cfg.get_int("run", "K"));
  out.H = cfg.get_int("run", "H");
  out.T = cfg.get_int("run", "T");
  out.eta = cfg.get_double("run", "eta");
  if (cfg.has("run", "seeds")) {
    for (long long seed : cfg.get_int_list("run", "seeds")) {
      if (seed < 0) cfg.fail("run", "seeds", "seeds must be >= 0");
      out.seeds.push_back(static_cast<std::uint64_t>(seed));
    }
  } else {
    out.seeds = {0};
  }
  out.trace_every = cfg.get_int_or("run", "trace_every", 1);

  const int n = out.n();
  if (out.K < 1 || out.K > n) {
    cfg.fail("run", "K",
             "K = " + std::to_string(out.K) +
                 " must lie in [1, n] with n = " + std::to_string(n));
  }
  return out;
}

BoundsConfig load_bounds_config(const ParsedConfig& cfg) {
  cfg.require_known(
      "bounds", {"n", "K", "H", "p", "L", "sigma", "zeta_intra", "zeta_inter",
                 "epsilon", "R0_sq", "f0", "regime", "axis", "grid"});
  if (!cfg.has_section("bounds")) {
    throw ConfigError(cfg.origin() + ": missing [bounds] section");
  }

  BoundsConfig out;
  BoundInputs& in = out.inputs;
  in.n = static_cast<int>(cfg.get_int("bounds", "n"));
  in.K = static_cast<int>(cfg.get_int("bounds", "K"));
  in.H = cfg.get_int("bounds", "H");
  in.p = cfg.get_double_or("bounds", "p", 1.0);
  in.L = cfg.get_double_or("bounds", "L", 1.0);
  in.sigma_bar = cfg.get_double_or("bounds", "sigma", 0.0);
  in.zeta_intra = cfg.get_double_or("bounds", "zeta_intra", 0.0);
  in.zeta_inter = cfg.get_double_or("bounds", "zeta_inter", 0.0);
  in.epsilon = cfg.get_double_or("bounds", "epsilon", 1e-5);
  in.R0_sq = cfg.get_double_or("bounds", "R0_sq", 1.0);
  in.f0 = cfg.get_double_or("bounds", "f0", 1.0);
  const std::string regime = cfg.get_string_or("bounds", "regime", "convex");
  if (regime == "convex") {
    in.regime = Regime::Convex;
  } else if (regime == "nonconvex") {
    in.regime = Regime::NonConvex;
  } else {
    cfg.fail("bounds", "regime",
             "expected convex or nonconvex, got '" + regime + "'");
  }

  if (cfg.has("bounds", "axis")) {
    const std::string axis = cfg.get_string("bounds", "axis");
    if (axis == "sampling_rate") {
      out.axis = SweepAxis::SamplingRate;
    } else if (axis == "server_period") {
      out.axis = SweepAxis::ServerPeriod;
    } else if (axis == "mixing_param") {
      out.axis = SweepAxis::MixingParam;
    } else {
      cfg.fail("bounds", "axis",
               "expected sampling_rate/server_period/mixing_param, got '" +
                   axis + "'");
    }
    out.has_axis = true;
    out.grid = cfg.get_double_list("bounds", "grid");
  } else if (cfg.has("bounds", "grid")) {
    cfg.fail("bounds", "grid", "grid requires bounds.axis");
  }
  return out;
}

std::string render_bounds_config(const BoundInputs& inputs) {
  std::ostringstream out;
  out << "[bounds]\n";
  out << "n = " << inputs.n << "\n";
  out << "K = " << inputs.K << "\n";
  out << "H = " << inputs.H << "\n";
  out << "p = " << format_double(inputs.p) << "\n";
  out << "L = " << format_double(inputs.L) << "\n";
  out << "sigma = " << format_double(inputs.sigma_bar) << "\n";
  out << "zeta_intra = " << format_double(inputs.zeta_intra) << "\n";
  out << "zeta_inter = " << format_double(inputs.zeta_inter) << "\n";
  out << "epsilon = " << format_double(inputs.epsilon) << "\n";
  out << "R0_sq = " << format_double(inputs.R0_sq) << "\n";
  out << "f0 = " << format_double(inputs.f0) << "\n";
  out << "regime = "
      << (inputs.regime == Regime::Convex ? "convex" : "nonconvex") << "\n";
  return out.str();
}

SimConfig to_sim_config(const ExperimentConfig& cfg, Primitive primitive,
                        std::uint64_t seed) {
  SimConfig sim;
  sim.n = cfg.n();
  sim.component_sizes = cfg.component_sizes;
  sim.topology = cfg.topology;
  sim.degree = cfg.degree;
  sim.primitive = primitive;
  sim.K = cfg.K;
  sim.H = cfg.H;
  sim.T = cfg.T;
  sim.eta = cfg.eta;
  sim.seed = seed;
  sim.time_varying = cfg.time_varying;
  sim.trace_every = cfg.trace_every;
  return sim;
}

std::unique_ptr<DeviceObjective> make_objective(const ObjectiveSpec& spec,
                                                const Topology& topology,
                                                std::uint64_t seed) {
  if (spec.kind == ObjectiveSpec::Kind::Quadratic) {
    return std::make_unique<QuadraticObjective>(
        make_quadratic(spec.dimension, topology, spec.heterogeneity,
                       spec.smoothness, spec.noise_std, seed));
  }
  return std::make_unique<LogisticObjective>(
      make_logistic(spec.dimension, spec.classes, spec.samples_per_device,
                    topology, spec.heterogeneity, spec.noise_std, seed));
}

}  // namespace semidec
