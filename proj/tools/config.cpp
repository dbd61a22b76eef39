#include "config.hpp"

#include <cstdio>
#include <fstream>

namespace rhogap::app {

using nlohmann::json;

namespace {

template <typename T>
T get(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

Matrix to_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) {
    throw ConfigError(where + ": expected a non-empty array of rows");
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ConfigError(where + ": rows must all have " + std::to_string(cols) + " entries");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!row[static_cast<std::size_t>(c)].is_number()) throw ConfigError(where + ": entries must be numbers");
      m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
  }
  return m;
}

Vector to_vector(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number()) throw ConfigError(where + ": entries must be numbers");
    v(static_cast<Eigen::Index>(k)) = j[k].get<double>();
  }
  return v;
}

bool is_auto(const json& j) { return j.is_string() && j.get<std::string>() == "auto"; }

}  // namespace

json default_config() {
  return json::parse(R"({
    "domain": null,
    "kernel": {
      "A": [[1.0, 0.0], [-1.0, 1.0]],
      "outputs": [
        {"signal_variance": 1.0, "length_scales": [0.5, 0.5], "active_dims": [0, 1]},
        {"signal_variance": 1.0, "length_scales": [0.5, 0.5], "active_dims": [0, 1]}
      ]
    },
    "noise": [[0.01, 0.0], [0.0, 0.01]],
    "bounds": {"delta": 0.05, "tau": "auto", "r0": "auto", "lipschitz_f": "auto", "grid": 5},
    "measure": {"M": 1, "nu": 0.001, "mode": "stability", "xi_cap": "signed"},
    "selection": {
      "budget": 10, "intervals": 10, "t_grid": 20, "method": "rho-gap",
      "methods": ["full", "mi-grid", "mi-reference", "rho-gap"],
      "mi_grid_half_width": 1.5, "mi_grid_per_dim": 10
    },
    "sim": {
      "N": 100, "T": 10.0, "dt": 0.001, "gain": 15.0, "rollouts": 20, "seed": 1,
      "rollout": 0, "trace_stride": 10, "keep_traces": false,
      "latency_repetitions": 20, "latency_queries": 50
    },
    "rho_map": {"grid": 50, "half_width": 2.0, "t": 0.0},
    "output": {"dir": "out"}
  })");
}

void merge_config(json& base, const json& overlay, const std::string& path) {
  if (!overlay.is_object()) throw ConfigError((path.empty() ? "config" : path) + ": expected an object");
  for (const auto& [key, value] : overlay.items()) {
    const std::string here = path.empty() ? key : path + "." + key;
    if (!base.contains(key)) throw ConfigError("unknown config key '" + here + "'");
    json& target = base[key];
    if (target.is_object() && value.is_object()) {
      merge_config(target, value, here);
    } else {
      target = value;
    }
  }
}

void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' must look like key.path=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json overlay = value;
  std::size_t end = path.size();
  while (true) {
    const auto dot = path.rfind('.', end - 1);
    const std::string key = path.substr(dot == std::string::npos ? 0 : dot + 1,
                                        end - (dot == std::string::npos ? 0 : dot + 1));
    if (key.empty()) throw ConfigError("override '" + assignment + "' has an empty key");
    overlay = json{{key, overlay}};
    if (dot == std::string::npos) break;
    end = dot;
  }
  merge_config(config, overlay);
}

AppConfig make_config(const json& effective) {
  AppConfig cfg;
  cfg.effective = effective;
  cfg.hash = config_hash(effective);
  ExperimentSettings& s = cfg.experiment;
  try {
    const json& k = effective.at("kernel");
    const Matrix A = to_matrix(k.at("A"), "kernel.A");
    std::vector<SEKernelParams> kernels;
    for (const auto& out : k.at("outputs")) {
      kernels.emplace_back(get<double>(out, "signal_variance", "kernel.outputs"),
                           get<std::vector<double>>(out, "length_scales", "kernel.outputs"),
                           get<std::vector<std::size_t>>(out, "active_dims", "kernel.outputs"));
    }
    s.kernel = CoregKernel(A, std::move(kernels));
    s.noise = to_matrix(effective.at("noise"), "noise");

    const json& d = effective.at("domain");
    if (!d.is_null()) {
      s.domain = Box{to_vector(d.at("lower"), "domain.lower"), to_vector(d.at("upper"), "domain.upper")};
    }

    const json& b = effective.at("bounds");
    s.delta = get<double>(b, "delta", "bounds");
    s.tau = is_auto(b.at("tau")) ? 0.0 : get<double>(b, "tau", "bounds");
    s.r0 = is_auto(b.at("r0")) ? 0.0 : get<double>(b, "r0", "bounds");
    if (!is_auto(b.at("lipschitz_f"))) s.lipschitz_f = get<std::vector<double>>(b, "lipschitz_f", "bounds");
    s.lipschitz_grid = get<int>(b, "grid", "bounds");
    if (!is_auto(b.at("tau")) && !(s.tau > 0.0)) throw ConfigError("bounds.tau must be positive or \"auto\"");
    if (!is_auto(b.at("r0")) && !(s.r0 > 0.0)) throw ConfigError("bounds.r0 must be positive or \"auto\"");

    const json& m = effective.at("measure");
    s.M = get<std::size_t>(m, "M", "measure");
    s.nu = get<double>(m, "nu", "measure");
    const auto mode = get<std::string>(m, "mode", "measure");
    if (mode == "stability") {
      s.mode = StabilityMode::kStability;
    } else if (mode == "exponential") {
      s.mode = StabilityMode::kExponential;
    } else {
      throw ConfigError("measure.mode must be \"stability\" or \"exponential\"");
    }
    const auto cap = get<std::string>(m, "xi_cap", "measure");
    if (cap == "signed") {
      s.xi_cap = XiCap::kSignedSum;
    } else if (cap == "absolute") {
      s.xi_cap = XiCap::kAbsoluteSum;
    } else {
      throw ConfigError("measure.xi_cap must be \"signed\" or \"absolute\"");
    }

    const json& sel = effective.at("selection");
    s.budget = get<std::size_t>(sel, "budget", "selection");
    s.intervals = get<std::size_t>(sel, "intervals", "selection");
    s.t_grid = get<std::size_t>(sel, "t_grid", "selection");
    cfg.method = parse_selection_method(get<std::string>(sel, "method", "selection"));
    s.methods.clear();
    for (const auto& name : get<std::vector<std::string>>(sel, "methods", "selection")) {
      s.methods.push_back(parse_selection_method(name));
    }
    s.mi_grid_half_width = get<double>(sel, "mi_grid_half_width", "selection");
    s.mi_grid_per_dim = get<std::size_t>(sel, "mi_grid_per_dim", "selection");

    const json& sim = effective.at("sim");
    s.N = get<std::size_t>(sim, "N", "sim");
    s.T = get<double>(sim, "T", "sim");
    s.dt = get<double>(sim, "dt", "sim");
    s.gain = get<double>(sim, "gain", "sim");
    s.rollouts = get<std::size_t>(sim, "rollouts", "sim");
    s.seed = get<std::uint64_t>(sim, "seed", "sim");
    cfg.rollout_index = get<std::size_t>(sim, "rollout", "sim");
    s.trace_stride = get<std::size_t>(sim, "trace_stride", "sim");
    s.keep_traces = get<bool>(sim, "keep_traces", "sim");
    s.latency_repetitions = get<int>(sim, "latency_repetitions", "sim");
    s.latency_queries = get<std::size_t>(sim, "latency_queries", "sim");

    const json& rm = effective.at("rho_map");
    cfg.rho_map.grid = get<std::size_t>(rm, "grid", "rho_map");
    cfg.rho_map.half_width = get<double>(rm, "half_width", "rho_map");
    cfg.rho_map.t = get<double>(rm, "t", "rho_map");
    if (cfg.rho_map.grid == 0 || !(cfg.rho_map.half_width > 0.0)) {
      throw ConfigError("rho_map: grid and half_width must be positive");
    }

    cfg.output_dir = get<std::string>(effective.at("output"), "dir", "output");
    s.validate();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

AppConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  json effective = default_config();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json file = json::parse(in, nullptr, false, true);
    if (file.is_discarded()) throw ConfigError("config file " + path.string() + " is not valid JSON");
    merge_config(effective, file);
  }
  for (const auto& o : overrides) apply_override(effective, o);
  return make_config(effective);
}

std::uint64_t config_hash(const json& config) {
  json hashed = config;
  if (hashed.is_object()) hashed.erase("output");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : hashed.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace rhogap::app
