#include "fpp/config.hpp"

#include <cmath>
#include <cstdlib>
#include <set>

#include "json.hpp"

#include "fpp/io.hpp"

namespace fpp {

using nlohmann::json;
using nlohmann::ordered_json;

const std::vector<std::string>& known_experiments() {
  static const std::vector<std::string> names{
      "estimate",     "fluctuation",    "bench-midpoint", "bench-argmin",
      "bench-a24a25", "bench-audit",    "bench-c-event",  "bench-resampling",
      "bench-rotation", "acceptance"};
  return names;
}

namespace {

void check_n_list(const std::vector<int>& v, const char* key) {
  if (v.empty()) throw ConfigError(std::string(key) + " must be nonempty");
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] < 1) throw ConfigError(std::string(key) + " entries must be >= 1");
    if (i > 0 && v[i] <= v[i - 1]) throw ConfigError(std::string(key) + " must be strictly increasing");
  }
}

void check_positive(double v, const char* key) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(key) + " must be positive and finite");
}

template <class T>
T get_as(const json& v, const std::string& key) {
  try {
    if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError(key + " must be a number");
      return v.get<double>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(key + " must be a string");
      return v.get<std::string>();
    } else if constexpr (std::is_same_v<T, std::uint64_t> || std::is_same_v<T, std::size_t>) {
      if (!v.is_number_unsigned()) throw ConfigError(key + " must be a nonnegative integer");
      return v.get<T>();
    } else {
      if (!v.is_number_integer()) throw ConfigError(key + " must be an integer");
      return v.get<T>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

template <class T>
std::vector<T> get_list(const json& v, const std::string& key) {
  if (!v.is_array()) throw ConfigError(key + " must be a list");
  std::vector<T> out;
  for (const auto& item : v) out.push_back(get_as<T>(item, key));
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (dimension < 2) throw ConfigError("dimension must be >= 2");
  if (!(alpha > 1.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be > 1");
  check_positive(intensity, "intensity");
  check_n_list(n_values, "n_values");
  check_n_list(bench_n_values, "bench_n_values");
  if (replicas < 2) throw ConfigError("replicas must be >= 2");
  if (bench_replicas < 2) throw ConfigError("bench_replicas must be >= 2");
  if (padding) check_positive(*padding, "padding");
  check_positive(theta, "theta");
  check_positive(delta, "delta");
  check_positive(c_ubiq, "c_ubiq");
  if (!(c_ubiq < 0.25)) throw ConfigError("c_ubiq must be below 1/4");
  if (phi_override && !(*phi_override >= 1.0 && std::isfinite(*phi_override))) {
    throw ConfigError("phi_override must be finite and >= 1");
  }
  check_positive(resampling_n, "resampling_n");
  check_positive(rotation_n, "rotation_n");
  if (resampling_replicas == 0 || rotation_replicas < 2 || rotation_repetitions == 0 ||
      ubiquity_replicas == 0 || fuzz_instances == 0 || poisson_samples < 2 || triples == 0) {
    throw ConfigError("sub-campaign sizes must be positive");
  }
  if (output_dir.empty()) throw ConfigError("output_dir must be nonempty");
  const auto& known = known_experiments();
  std::set<std::string> seen;
  for (const auto& e : experiments) {
    if (std::find(known.begin(), known.end(), e) == known.end()) throw ConfigError("unknown experiment: " + e);
    if (!seen.insert(e).second) throw ConfigError("duplicate experiment: " + e);
  }
}

CampaignSettings ExperimentConfig::campaign(std::size_t replica_count) const {
  CampaignSettings s;
  s.dimension = dimension;
  s.alpha = alpha;
  s.intensity = intensity;
  s.replicas = replica_count;
  s.master_seed = master_seed;
  s.padding = padding;
  s.threads = threads;
  return s;
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  ExperimentConfig c;
  bool theta_given = false;
  for (const auto& [key, v] : j.items()) {
    if (key == "dimension") c.dimension = get_as<int>(v, key);
    else if (key == "alpha") c.alpha = get_as<double>(v, key);
    else if (key == "intensity") c.intensity = get_as<double>(v, key);
    else if (key == "n_values") c.n_values = get_list<int>(v, key);
    else if (key == "replicas") c.replicas = get_as<std::size_t>(v, key);
    else if (key == "master_seed") c.master_seed = get_as<std::uint64_t>(v, key);
    else if (key == "padding") {
      if (v.is_string()) {
        if (v.get<std::string>() != "auto") throw ConfigError("padding must be a number or \"auto\"");
        c.padding.reset();
      } else {
        c.padding = get_as<double>(v, key);
      }
    } else if (key == "theta") {
      c.theta = get_as<double>(v, key);
      theta_given = true;
    } else if (key == "delta") c.delta = get_as<double>(v, key);
    else if (key == "c_ubiq") c.c_ubiq = get_as<double>(v, key);
    else if (key == "experiments") c.experiments = get_list<std::string>(v, key);
    else if (key == "output_dir") c.output_dir = get_as<std::string>(v, key);
    else if (key == "threads") c.threads = get_as<int>(v, key);
    else if (key == "phi_override") {
      if (v.is_null()) c.phi_override.reset();
      else c.phi_override = get_as<double>(v, key);
    } else if (key == "bench_n_values") c.bench_n_values = get_list<int>(v, key);
    else if (key == "bench_replicas") c.bench_replicas = get_as<std::size_t>(v, key);
    else if (key == "resampling_n") c.resampling_n = get_as<double>(v, key);
    else if (key == "resampling_replicas") c.resampling_replicas = get_as<std::size_t>(v, key);
    else if (key == "rotation_n") c.rotation_n = get_as<double>(v, key);
    else if (key == "rotation_replicas") c.rotation_replicas = get_as<std::size_t>(v, key);
    else if (key == "rotation_repetitions") c.rotation_repetitions = get_as<std::size_t>(v, key);
    else if (key == "ubiquity_replicas") c.ubiquity_replicas = get_as<std::size_t>(v, key);
    else if (key == "fuzz_instances") c.fuzz_instances = get_as<std::size_t>(v, key);
    else if (key == "poisson_samples") c.poisson_samples = get_as<std::size_t>(v, key);
    else if (key == "triples") c.triples = get_as<std::size_t>(v, key);
    else throw ConfigError("unknown config key: " + key);
  }
  if (!theta_given && c.delta > 0.0 && c.c_ubiq > 0.0 && c.dimension >= 2) {
    c.theta = 0.9 * BenchParams::theta_gate(c.dimension, c.c_ubiq, c.delta);
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const std::exception& e) {
    throw ConfigError("cannot read config " + path.string() + ": " + e.what());
  }
  return parse_config(text);
}

std::string serialize_config(const ExperimentConfig& c) {
  ordered_json j;
  j["dimension"] = c.dimension;
  j["alpha"] = c.alpha;
  j["intensity"] = c.intensity;
  j["n_values"] = c.n_values;
  j["replicas"] = c.replicas;
  j["master_seed"] = c.master_seed;
  if (c.padding) j["padding"] = *c.padding;
  else j["padding"] = "auto";
  j["theta"] = c.theta;
  j["delta"] = c.delta;
  j["c_ubiq"] = c.c_ubiq;
  j["experiments"] = c.experiments;
  j["output_dir"] = c.output_dir;
  j["threads"] = c.threads;
  if (c.phi_override) j["phi_override"] = *c.phi_override;
  else j["phi_override"] = nullptr;
  j["bench_n_values"] = c.bench_n_values;
  j["bench_replicas"] = c.bench_replicas;
  j["resampling_n"] = c.resampling_n;
  j["resampling_replicas"] = c.resampling_replicas;
  j["rotation_n"] = c.rotation_n;
  j["rotation_replicas"] = c.rotation_replicas;
  j["rotation_repetitions"] = c.rotation_repetitions;
  j["ubiquity_replicas"] = c.ubiquity_replicas;
  j["fuzz_instances"] = c.fuzz_instances;
  j["poisson_samples"] = c.poisson_samples;
  j["triples"] = c.triples;
  return j.dump(2) + "\n";
}

void apply_env_overrides(ExperimentConfig& c) {
  if (const char* dir = std::getenv("FPP_OUTPUT_DIR"); dir && *dir) c.output_dir = dir;
  if (const char* t = std::getenv("FPP_THREADS"); t && *t) {
    char* end = nullptr;
    const long v = std::strtol(t, &end, 10);
    if (*end != '\0') throw ConfigError("FPP_THREADS must be an integer");
    c.threads = static_cast<int>(v);
  }
}

}  // namespace fpp
