#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ancsim/errors.hpp"

namespace ancsim {

using nlohmann::json;

// ---------------------------------------------------------------------------
// experiment configuration (strict: unknown keys are rejected so typos fail
// loudly instead of falling back to defaults)
// ---------------------------------------------------------------------------

constexpr int kMaxFilterLength = 512;

struct PathSource {
  // "bandpass_fir" | "file" | "taps" | "copy_secondary"
  std::string type = "bandpass_fir";
  int length = 128;
  double low_hz = 20.0;
  double high_hz = 5000.0;
  std::string path;
  std::string format = "auto";
  std::vector<double> taps;
};

struct NoiseSource {
  // "tone" | "bandlimited" | "compressor_standin" | "file"
  std::string type = "bandlimited";
  double freq_hz = 400.0;
  double amplitude = 1.0;
  double low_hz = 200.0;
  double high_hz = 2000.0;
  std::string path;
  double fundamental_hz = 150.0;
  int harmonics = 4;
  double floor_db = -20.0;
};

struct ControllerConfig {
  // "kf" | "kf-opc" | "fxlms" | "leaky-fxlms" | "off"
  std::string type = "kf";
  int length = 128;
  // Kalman knobs
  double q = 1e-2;
  double r = 1e-6;
  double p0 = 1.0;
  double lambda = 0.999;
  double rho_o = std::numeric_limits<double>::infinity();
  int warmup = 0;          // 0 -> 2 * length
  bool adaptive_q = false; // track q as the running innovation power
  // LMS knobs
  double mu = 1.0 / 1024.0;
  double leak = 0.0;
};

struct AmplifierConfig {
  double rated_power = 1.0;  // clip level is sqrt(2 * rated_power)
};

struct MeasurementConfig {
  double steady_fraction = 0.25;   // trailing window for steady-state power
  int nse_window = 1024;           // samples per attenuation-curve point
  int spectrum_segment = 4096;     // Welch segment (power of two)
  int weight_trace_index = 0;      // which coefficient to log over time
};

struct ExperimentConfig {
  double fs_hz = 16000.0;
  double duration_s = 10.0;
  std::uint64_t seed = 1;
  PathSource primary;
  PathSource secondary{"bandpass_fir", 32};       // shorter band-pass than the primary
  PathSource secondary_model{"copy_secondary"};   // mirrors the true secondary
  NoiseSource noise;
  ControllerConfig controller;
  std::optional<AmplifierConfig> amplifier;
  MeasurementConfig measurement;

  std::size_t total_samples() const {
    return static_cast<std::size_t>(std::llround(fs_hz * duration_s));
  }
};

// ---------------------------------------------------------------------------
// JSON binding
// ---------------------------------------------------------------------------

namespace detail {

inline void require_keys(const json& j, const std::string& where,
                         std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) { ok = true; break; }
    if (!ok) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

template <typename T>
T get_or(const json& j, const char* key, const T& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("key '") + key + "': " + e.what());
  }
}

inline double get_number(const json& j, const char* key, double fallback,
                         const std::string& where) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
    throw ConfigError(where + "." + key + ": expected a number, got string '" + s + "'");
  }
  if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
  return v.get<double>();
}

}  // namespace detail

inline PathSource parse_path_source(const json& j, const std::string& where) {
  detail::require_keys(j, where,
                       {"type", "length", "low_hz", "high_hz", "path", "format", "taps"});
  PathSource p;
  p.type = detail::get_or<std::string>(j, "type", p.type);
  p.length = detail::get_or<int>(j, "length", p.length);
  p.low_hz = detail::get_number(j, "low_hz", p.low_hz, where);
  p.high_hz = detail::get_number(j, "high_hz", p.high_hz, where);
  p.path = detail::get_or<std::string>(j, "path", p.path);
  p.format = detail::get_or<std::string>(j, "format", p.format);
  p.taps = detail::get_or<std::vector<double>>(j, "taps", p.taps);
  if (p.type != "bandpass_fir" && p.type != "file" && p.type != "taps" &&
      p.type != "copy_secondary")
    throw ConfigError(where + ".type: unknown path source '" + p.type + "'");
  if (p.type == "bandpass_fir" && p.length < 1)
    throw ConfigError(where + ".length: must be at least 1");
  if (p.type == "file" && p.path.empty())
    throw ConfigError(where + ".path: required for file paths");
  if (p.type == "taps" && p.taps.empty())
    throw ConfigError(where + ".taps: required and non-empty");
  return p;
}

inline NoiseSource parse_noise_source(const json& j, const std::string& where) {
  detail::require_keys(j, where,
                       {"type", "freq_hz", "amplitude", "low_hz", "high_hz", "path",
                        "fundamental_hz", "harmonics", "floor_db"});
  NoiseSource n;
  n.type = detail::get_or<std::string>(j, "type", n.type);
  n.freq_hz = detail::get_number(j, "freq_hz", n.freq_hz, where);
  n.amplitude = detail::get_number(j, "amplitude", n.amplitude, where);
  n.low_hz = detail::get_number(j, "low_hz", n.low_hz, where);
  n.high_hz = detail::get_number(j, "high_hz", n.high_hz, where);
  n.path = detail::get_or<std::string>(j, "path", n.path);
  n.fundamental_hz = detail::get_number(j, "fundamental_hz", n.fundamental_hz, where);
  n.harmonics = detail::get_or<int>(j, "harmonics", n.harmonics);
  n.floor_db = detail::get_number(j, "floor_db", n.floor_db, where);
  if (n.type != "tone" && n.type != "bandlimited" && n.type != "compressor_standin" &&
      n.type != "file")
    throw ConfigError(where + ".type: unknown noise source '" + n.type + "'");
  if (n.type == "file" && n.path.empty())
    throw ConfigError(where + ".path: required for file noise");
  if (n.amplitude < 0.0 || !std::isfinite(n.amplitude))
    throw ConfigError(where + ".amplitude: must be finite and non-negative");
  return n;
}

inline ControllerConfig parse_controller(const json& j, const std::string& where) {
  detail::require_keys(j, where,
                       {"type", "length", "q", "r", "p0", "lambda", "rho_o", "warmup",
                        "adaptive_q", "mu", "leak"});
  ControllerConfig c;
  c.type = detail::get_or<std::string>(j, "type", c.type);
  c.length = detail::get_or<int>(j, "length", c.length);
  c.q = detail::get_number(j, "q", c.q, where);
  c.r = detail::get_number(j, "r", c.r, where);
  c.p0 = detail::get_number(j, "p0", c.p0, where);
  c.lambda = detail::get_number(j, "lambda", c.lambda, where);
  c.rho_o = detail::get_number(j, "rho_o", c.rho_o, where);
  c.warmup = detail::get_or<int>(j, "warmup", c.warmup);
  c.adaptive_q = detail::get_or<bool>(j, "adaptive_q", c.adaptive_q);
  c.mu = detail::get_number(j, "mu", c.mu, where);
  c.leak = detail::get_number(j, "leak", c.leak, where);

  if (c.type != "kf" && c.type != "kf-opc" && c.type != "fxlms" &&
      c.type != "leaky-fxlms" && c.type != "off")
    throw ConfigError(where + ".type: unknown controller '" + c.type + "'");
  if (c.type != "off") {
    if (c.length < 1) throw ConfigError(where + ".length: must be at least 1");
    if (c.length > kMaxFilterLength)
      throw ConfigError(where + ".length: " + std::to_string(c.length) + " exceeds limit " +
                        std::to_string(kMaxFilterLength));
  }
  if (c.type == "kf-opc") {
    if (!j.contains("rho_o"))
      throw ConfigError(where + ": power-constrained controller requires 'rho_o'");
    if (!(c.rho_o > 0.0))
      throw ConfigError(where + ".rho_o: must be positive");
  }
  if (c.type == "kf" || c.type == "kf-opc") {
    if (!(c.q > 0.0)) throw ConfigError(where + ".q: must be positive");
    if (c.r < 0.0) throw ConfigError(where + ".r: must be non-negative");
    if (!(c.p0 > 0.0)) throw ConfigError(where + ".p0: must be positive");
    if (!(c.lambda > 0.0 && c.lambda < 1.0))
      throw ConfigError(where + ".lambda: must be inside (0, 1)");
    if (c.warmup < 0) throw ConfigError(where + ".warmup: must be non-negative");
  }
  if (c.type == "fxlms" || c.type == "leaky-fxlms") {
    if (!(c.mu > 0.0)) throw ConfigError(where + ".mu: must be positive");
    if (c.leak < 0.0) throw ConfigError(where + ".leak: must be non-negative");
  }
  return c;
}

inline MeasurementConfig parse_measurement(const json& j, const std::string& where) {
  detail::require_keys(j, where,
                       {"steady_fraction", "nse_window", "spectrum_segment",
                        "weight_trace_index"});
  MeasurementConfig m;
  m.steady_fraction = detail::get_number(j, "steady_fraction", m.steady_fraction, where);
  m.nse_window = detail::get_or<int>(j, "nse_window", m.nse_window);
  m.spectrum_segment = detail::get_or<int>(j, "spectrum_segment", m.spectrum_segment);
  m.weight_trace_index = detail::get_or<int>(j, "weight_trace_index", m.weight_trace_index);
  if (!(m.steady_fraction > 0.0 && m.steady_fraction <= 1.0))
    throw ConfigError(where + ".steady_fraction: must be inside (0, 1]");
  if (m.nse_window < 1) throw ConfigError(where + ".nse_window: must be at least 1");
  if (m.spectrum_segment < 2 || (m.spectrum_segment & (m.spectrum_segment - 1)) != 0)
    throw ConfigError(where + ".spectrum_segment: must be a power of two >= 2");
  if (m.weight_trace_index < 0)
    throw ConfigError(where + ".weight_trace_index: must be non-negative");
  return m;
}

inline ExperimentConfig parse_experiment_config(const json& root_in) {
  json root = root_in;
  // accept a previously written run manifest: the config lives under "config"
  if (root.is_object() && root.contains("config") && root.at("config").is_object())
    root = root.at("config");
  detail::require_keys(root, "config",
                       {"fs_hz", "duration_s", "seed", "primary", "secondary",
                        "secondary_model", "noise", "controller", "amplifier",
                        "measurement"});
  ExperimentConfig c;
  c.fs_hz = detail::get_number(root, "fs_hz", c.fs_hz, "config");
  c.duration_s = detail::get_number(root, "duration_s", c.duration_s, "config");
  if (root.contains("seed")) {
    const json& s = root.at("seed");
    if (!s.is_number_integer() && !s.is_number_unsigned())
      throw ConfigError("config.seed: expected an integer");
    c.seed = s.get<std::uint64_t>();
  }
  if (!(c.fs_hz > 0.0)) throw ConfigError("config.fs_hz: must be positive");
  if (!(c.duration_s >= 0.0)) throw ConfigError("config.duration_s: must be non-negative");

  if (root.contains("primary")) c.primary = parse_path_source(root.at("primary"), "config.primary");
  if (root.contains("secondary"))
    c.secondary = parse_path_source(root.at("secondary"), "config.secondary");
  if (root.contains("secondary_model"))
    c.secondary_model = parse_path_source(root.at("secondary_model"), "config.secondary_model");
  if (c.primary.type == "copy_secondary" || c.secondary.type == "copy_secondary")
    throw ConfigError("only config.secondary_model may use 'copy_secondary'");

  if (root.contains("noise")) c.noise = parse_noise_source(root.at("noise"), "config.noise");
  if (root.contains("controller"))
    c.controller = parse_controller(root.at("controller"), "config.controller");
  if (root.contains("amplifier") && !root.at("amplifier").is_null()) {
    const json& a = root.at("amplifier");
    detail::require_keys(a, "config.amplifier", {"rated_power"});
    AmplifierConfig amp;
    amp.rated_power = detail::get_number(a, "rated_power", amp.rated_power, "config.amplifier");
    if (!(amp.rated_power > 0.0) || !std::isfinite(amp.rated_power))
      throw ConfigError("config.amplifier.rated_power: must be finite and positive");
    c.amplifier = amp;
  }
  if (root.contains("measurement"))
    c.measurement = parse_measurement(root.at("measurement"), "config.measurement");

  if (c.noise.type == "tone" && !(c.noise.freq_hz > 0.0 && c.noise.freq_hz < c.fs_hz / 2.0))
    throw ConfigError("config.noise.freq_hz: must lie inside (0, fs/2)");
  return c;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open");
  json root;
  try {
    root = json::parse(in, nullptr, /*allow_exceptions=*/true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_experiment_config(root);
}

// Serialization for run manifests: emits the fields relevant to the chosen
// types so a manifest can be re-run bit-identically.
inline json to_json(const PathSource& p) {
  json j;
  j["type"] = p.type;
  if (p.type == "bandpass_fir") {
    j["length"] = p.length;
    j["low_hz"] = p.low_hz;
    j["high_hz"] = p.high_hz;
  } else if (p.type == "file") {
    j["path"] = p.path;
    j["format"] = p.format;
  } else if (p.type == "taps") {
    j["taps"] = p.taps;
  }
  return j;
}

inline json to_json(const NoiseSource& n) {
  json j;
  j["type"] = n.type;
  j["amplitude"] = n.amplitude;
  if (n.type == "tone") {
    j["freq_hz"] = n.freq_hz;
  } else if (n.type == "bandlimited") {
    j["low_hz"] = n.low_hz;
    j["high_hz"] = n.high_hz;
  } else if (n.type == "compressor_standin") {
    j["fundamental_hz"] = n.fundamental_hz;
    j["harmonics"] = n.harmonics;
    j["floor_db"] = n.floor_db;
  } else if (n.type == "file") {
    j["path"] = n.path;
  }
  return j;
}

inline json to_json(const ControllerConfig& c) {
  json j;
  j["type"] = c.type;
  if (c.type == "off") return j;
  j["length"] = c.length;
  if (c.type == "kf" || c.type == "kf-opc") {
    j["q"] = c.q;
    j["r"] = c.r;
    j["p0"] = c.p0;
    j["lambda"] = c.lambda;
    j["warmup"] = c.warmup;
    j["adaptive_q"] = c.adaptive_q;
    if (c.type == "kf-opc") {
      if (std::isinf(c.rho_o)) j["rho_o"] = "inf";
      else j["rho_o"] = c.rho_o;
    }
  } else {
    j["mu"] = c.mu;
    if (c.type == "leaky-fxlms") j["leak"] = c.leak;
  }
  return j;
}

inline json to_json(const ExperimentConfig& c) {
  json j;
  j["fs_hz"] = c.fs_hz;
  j["duration_s"] = c.duration_s;
  j["seed"] = c.seed;
  j["primary"] = to_json(c.primary);
  j["secondary"] = to_json(c.secondary);
  j["secondary_model"] = to_json(c.secondary_model);
  j["noise"] = to_json(c.noise);
  j["controller"] = to_json(c.controller);
  if (c.amplifier) j["amplifier"] = json{{"rated_power", c.amplifier->rated_power}};
  j["measurement"] = json{{"steady_fraction", c.measurement.steady_fraction},
                          {"nse_window", c.measurement.nse_window},
                          {"spectrum_segment", c.measurement.spectrum_segment},
                          {"weight_trace_index", c.measurement.weight_trace_index}};
  return j;
}

}  // namespace ancsim
