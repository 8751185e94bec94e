#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ancsim/config.hpp"
#include "ancsim/engine.hpp"
#include "ancsim/filter_design.hpp"
#include "ancsim/fir.hpp"
#include "ancsim/io.hpp"
#include "ancsim/rng.hpp"
#include "ancsim/signals.hpp"

namespace ancsim {

struct LabeledRun {
  std::string label;
  ExperimentConfig config;
  RunArtifacts artifacts;
};

// ---------------------------------------------------------------------------
// leaky baseline calibration
// ---------------------------------------------------------------------------

struct CalibrationReport {
  double mu = 1.0 / 1024.0;
  double leak = 0.0;
  double achieved_power = 0.0;
  double target_power = 0.0;
  int iterations = 0;
  bool target_unreachable = false;  // plant cannot produce target even with leak=0
};

// Largest step size mu = 2^-k that completes the probe without tripping the
// divergence flag. Probe runs with leak forced to 0.
inline double sweep_step_size(ExperimentConfig probe, int max_k = 20) {
  probe.controller.type = "leaky-fxlms";
  probe.controller.leak = 0.0;
  for (int k = 1; k <= max_k; ++k) {
    probe.controller.mu = std::ldexp(1.0, -k);
    const RunArtifacts ra = run_closed_loop(probe);
    if (!ra.summary.diverged) return probe.controller.mu;
  }
  throw ConfigError("step-size sweep: every candidate mu diverged on the probe");
}

// Bisection on the leak factor until the probe's steady output power lands
// within 2% of target_power. Power is monotone non-increasing in leak, so the
// bracket [lo, hi] keeps power(lo) > target >= power(hi); the step size is
// halved (up to 8 times) if the full-leak end fails to undershoot the target,
// and if 40 iterations pass without entering the 2% band the conservative
// high-leak end is returned.
inline CalibrationReport calibrate_leak(double target_power, ExperimentConfig probe) {
  if (!(target_power > 0.0)) throw ConfigError("calibrate_leak: target power must be positive");
  probe.controller.type = "leaky-fxlms";

  CalibrationReport rep;
  rep.mu = probe.controller.mu;
  rep.target_power = target_power;

  const auto power_at = [&](double leak) {
    probe.controller.leak = leak;
    const RunArtifacts ra = run_closed_loop(probe);
    if (ra.summary.diverged) return std::numeric_limits<double>::infinity();
    return ra.summary.steady_output_power;
  };

  const double p_unconstrained = power_at(0.0);
  if (p_unconstrained <= target_power) {
    rep.leak = 0.0;
    rep.achieved_power = p_unconstrained;
    rep.target_unreachable = true;
    return rep;
  }

  double lo = 0.0;
  double hi = 1.0 / probe.controller.mu;  // weight decay factor reaches 0 here
  double p_hi = power_at(hi);
  // A step size that is merely marginally stable at leak = 0 can diverge (or
  // hold a power floor above target) once the decay term is active. Halving
  // the step shrinks the full-leak weight floor, restoring a usable bracket.
  for (int halvings = 0; halvings < 8 && p_hi > target_power; ++halvings) {
    probe.controller.mu *= 0.5;
    rep.mu = probe.controller.mu;
    hi = 1.0 / probe.controller.mu;
    p_hi = power_at(hi);
  }
  rep.leak = hi;
  rep.achieved_power = p_hi;
  const double band = 0.02 * target_power;
  for (int it = 1; it <= 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double p_mid = power_at(mid);
    rep.iterations = it;
    if (std::abs(p_mid - target_power) <= band) {
      rep.leak = mid;
      rep.achieved_power = p_mid;
      return rep;
    }
    if (p_mid > target_power) {
      lo = mid;
    } else {
      hi = mid;
      p_hi = p_mid;
    }
    rep.leak = hi;
    rep.achieved_power = p_hi;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// tonal saturation protocol: 400 Hz tone, band-pass paths, amplifier clipping
// at sqrt(2), power target chosen so the constrained run keeps a small
// amplitude margin below the clip level
// ---------------------------------------------------------------------------

inline constexpr double kTonalToneHz = 400.0;
inline constexpr double kTonalRatedSatPower = 1.0;   // clip level sqrt(2)
inline constexpr double kTonalRhoO = 0.9;            // 5% amplitude margin under the clip
inline constexpr double kTonalDemandPowerRatio = 4.0;  // ideal control power vs clip rating

inline ExperimentConfig tonal_saturation_config(const std::string& controller) {
  ExperimentConfig cfg;
  cfg.fs_hz = 16000.0;
  cfg.duration_s = 10.0;
  cfg.seed = 1;
  cfg.primary = PathSource{"bandpass_fir", 128, 20.0, 5000.0, "", "auto", {}};
  cfg.secondary = PathSource{"bandpass_fir", 32, 20.0, 5000.0, "", "auto", {}};
  cfg.secondary_model.type = "copy_secondary";

  // amplitude set so the ideal cancelling control signal has power
  // kTonalDemandPowerRatio * rated power, i.e. it must clip when unconstrained
  FirPath p(design_bandpass_fir(cfg.primary.length, cfg.primary.low_hz, cfg.primary.high_hz,
                                cfg.fs_hz));
  FirPath s(design_bandpass_fir(cfg.secondary.length, cfg.secondary.low_hz,
                                cfg.secondary.high_hz, cfg.fs_hz));
  const double gp = p.gain_at(kTonalToneHz, cfg.fs_hz);
  const double gs = s.gain_at(kTonalToneHz, cfg.fs_hz);
  const double demand_amplitude =
      std::sqrt(2.0 * kTonalDemandPowerRatio * kTonalRatedSatPower);
  cfg.noise.type = "tone";
  cfg.noise.freq_hz = kTonalToneHz;
  cfg.noise.amplitude = demand_amplitude * gs / gp;

  cfg.amplifier = AmplifierConfig{kTonalRatedSatPower};

  cfg.controller.type = controller;
  cfg.controller.length = 128;
  cfg.controller.rho_o =
      (controller == "kf-opc") ? kTonalRhoO : std::numeric_limits<double>::infinity();
  // The adaptation transient right after startup overdrives the amplifier
  // until the constraint's power statistics converge (clipping dies out by
  // roughly sample 1300 at these settings, bounded by the estimator window);
  // the warm-up window is set well past that zone so post-warm-up clip
  // counts reflect steady-state behaviour rather than the startup transient.
  cfg.controller.warmup = 4096;
  return cfg;
}

struct TonalSaturationResult {
  LabeledRun kf;
  LabeledRun kf_opc;
};

inline TonalSaturationResult experiment_tonal_saturation() {
  TonalSaturationResult r;
  r.kf.label = "kf";
  r.kf.config = tonal_saturation_config("kf");
  r.kf.artifacts = run_closed_loop(r.kf.config);
  r.kf_opc.label = "kf-opc";
  r.kf_opc.config = tonal_saturation_config("kf-opc");
  r.kf_opc.artifacts = run_closed_loop(r.kf_opc.config);
  return r;
}

// ---------------------------------------------------------------------------
// broadband protocol: 200-2000 Hz noise, rated power 0.8, no amplifier; the
// leaky baseline is calibrated to the same power target
// ---------------------------------------------------------------------------

inline constexpr double kBroadbandRhoO = 0.8;
inline constexpr double kBroadbandNoiseAmplitude = 3.0;  // disturbance power well above rho_o

inline ExperimentConfig broadband_config(const std::string& controller) {
  ExperimentConfig cfg;
  cfg.fs_hz = 16000.0;
  cfg.duration_s = 10.0;
  cfg.seed = 42;
  cfg.primary = PathSource{"bandpass_fir", 128, 20.0, 5000.0, "", "auto", {}};
  cfg.secondary = PathSource{"bandpass_fir", 32, 20.0, 5000.0, "", "auto", {}};
  cfg.secondary_model.type = "copy_secondary";
  cfg.noise.type = "bandlimited";
  cfg.noise.low_hz = 200.0;
  cfg.noise.high_hz = 2000.0;
  cfg.noise.amplitude = kBroadbandNoiseAmplitude;
  cfg.controller.type = controller;
  cfg.controller.length = 128;
  cfg.controller.rho_o =
      (controller == "kf-opc") ? kBroadbandRhoO : std::numeric_limits<double>::infinity();
  return cfg;
}

struct BroadbandResult {
  LabeledRun kf;
  LabeledRun kf_opc;
  LabeledRun leaky;
  CalibrationReport calibration;
};

inline BroadbandResult experiment_broadband() {
  BroadbandResult r;
  r.kf.label = "kf";
  r.kf.config = broadband_config("kf");
  r.kf.artifacts = run_closed_loop(r.kf.config);
  r.kf_opc.label = "kf-opc";
  r.kf_opc.config = broadband_config("kf-opc");
  r.kf_opc.artifacts = run_closed_loop(r.kf_opc.config);

  ExperimentConfig probe = broadband_config("leaky-fxlms");
  probe.duration_s = 4.0;
  probe.controller.mu = sweep_step_size(probe);
  r.calibration = calibrate_leak(kBroadbandRhoO, probe);

  r.leaky.label = "leaky";
  r.leaky.config = broadband_config("leaky-fxlms");
  r.leaky.config.controller.mu = r.calibration.mu;
  r.leaky.config.controller.leak = r.calibration.leak;
  r.leaky.artifacts = run_closed_loop(r.leaky.config);
  return r;
}

// ---------------------------------------------------------------------------
// real-path protocol: impulse responses and noise loaded from files; shipped
// stand-ins are synthetic duct responses plus a compressor-like noise
// ---------------------------------------------------------------------------

inline constexpr double kRealPathRhoO = 0.5;
inline constexpr double kRealPathDisturbancePower = 0.8;

// Sparse-reflection duct model: pure delay, unit direct arrival, then an
// exponentially decaying seeded scatter tail; normalized to unit energy.
// `scatter` sets the tail-to-direct amplitude ratio: large values give a
// strongly coloured magnitude response, small values approach a pure delay
// whose response is nearly flat.
inline std::vector<double> synthetic_duct_ir(int length, int delay, double decay,
                                             std::uint64_t seed, double scatter = 0.35) {
  if (length < 2 || delay < 0 || delay >= length)
    throw std::invalid_argument("synthetic_duct_ir: bad length/delay");
  SeededRng rng(seed);
  std::vector<double> h(static_cast<std::size_t>(length), 0.0);
  h[static_cast<std::size_t>(delay)] = 1.0;
  double env = 1.0;
  for (int k = delay + 1; k < length; ++k) {
    env *= decay;
    h[static_cast<std::size_t>(k)] = scatter * env * rng.gaussian();
  }
  double energy = 0.0;
  for (double v : h) energy += v * v;
  const double scale = 1.0 / std::sqrt(energy);
  for (double& v : h) v *= scale;
  return h;
}

struct RealPathFiles {
  std::string primary_ir;
  std::string secondary_ir;
  std::string noise;
};

// Writes the three stand-in files (text IR, float32 IR, float32 WAV). The
// noise is scaled so its filtered power through the primary path lands on
// kRealPathDisturbancePower, keeping the rho_o = 0.5 constraint active.
inline RealPathFiles make_real_path_standins(const std::string& dir, std::uint64_t seed,
                                             double duration_s = 10.0, double fs_hz = 16000.0) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(dir, "cannot create directory: " + ec.message());

  // The primary path is strongly reverberant (it colours the disturbance and
  // slows gradient baselines down); the secondary path carries only light
  // scatter so its gain is close to flat across the noise band, which keeps
  // the reference-based gain estimate representative of the control output's
  // own path gain and lets the power constraint land on its target.
  const std::vector<double> primary = synthetic_duct_ir(128, 40, 0.94, 0xA11CEull);
  const std::vector<double> secondary = synthetic_duct_ir(32, 8, 0.85, 0xB0Bull, 0.015);

  const std::size_t n = static_cast<std::size_t>(std::llround(duration_s * fs_hz));
  CompressorStandinParams cp;
  std::vector<double> noise = generate_compressor_standin(cp, fs_hz, n, seed);
  FirPath p(primary);
  double acc = 0.0;
  for (double v : noise) {
    const double d = p.process(v);
    acc += d * d;
  }
  const double measured = acc / static_cast<double>(n);
  const double scale = std::sqrt(kRealPathDisturbancePower / measured);
  for (double& v : noise) v *= scale;

  RealPathFiles files;
  files.primary_ir = (fs::path(dir) / "primary_ir.txt").string();
  files.secondary_ir = (fs::path(dir) / "secondary_ir.f32").string();
  files.noise = (fs::path(dir) / "noise_standin.wav").string();
  save_taps_text(files.primary_ir, primary);
  save_taps_f32le(files.secondary_ir, secondary);
  save_wav_float32(files.noise, noise, fs_hz);
  return files;
}

inline ExperimentConfig real_path_config(const RealPathFiles& files, const std::string& controller,
                                         double rho_o, std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.fs_hz = 16000.0;
  cfg.duration_s = 10.0;
  cfg.seed = seed;
  cfg.primary = PathSource{"file", 0, 0.0, 0.0, files.primary_ir, "text", {}};
  cfg.secondary = PathSource{"file", 0, 0.0, 0.0, files.secondary_ir, "f32le", {}};
  cfg.secondary_model.type = "copy_secondary";
  cfg.noise.type = "file";
  cfg.noise.path = files.noise;
  cfg.noise.amplitude = 1.0;
  cfg.controller.type = controller;
  cfg.controller.length = 128;
  cfg.controller.rho_o =
      (controller == "kf-opc") ? rho_o : std::numeric_limits<double>::infinity();
  return cfg;
}

struct RealPathResult {
  LabeledRun kf;
  LabeledRun kf_opc;
  LabeledRun leaky;
  CalibrationReport calibration;
};

inline RealPathResult experiment_real_path(const RealPathFiles& files, double rho_o,
                                           std::uint64_t seed = 1) {
  RealPathResult r;
  r.kf.label = "kf";
  r.kf.config = real_path_config(files, "kf", rho_o, seed);
  r.kf.artifacts = run_closed_loop(r.kf.config);
  r.kf_opc.label = "kf-opc";
  r.kf_opc.config = real_path_config(files, "kf-opc", rho_o, seed);
  r.kf_opc.artifacts = run_closed_loop(r.kf_opc.config);

  ExperimentConfig probe = real_path_config(files, "leaky-fxlms", rho_o, seed);
  probe.duration_s = 4.0;
  probe.controller.mu = sweep_step_size(probe);
  r.calibration = calibrate_leak(rho_o, probe);

  r.leaky.label = "leaky";
  r.leaky.config = real_path_config(files, "leaky-fxlms", rho_o, seed);
  r.leaky.config.controller.mu = r.calibration.mu;
  r.leaky.config.controller.leak = r.calibration.leak;
  r.leaky.artifacts = run_closed_loop(r.leaky.config);
  return r;
}

inline RealPathResult experiment_real_path_standin(const std::string& dir,
                                                   std::uint64_t seed = 1) {
  return experiment_real_path(make_real_path_standins(dir, seed), kRealPathRhoO, seed);
}

}  // namespace ancsim
