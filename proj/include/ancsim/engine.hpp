#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ancsim/amplifier.hpp"
#include "ancsim/config.hpp"
#include "ancsim/controller.hpp"
#include "ancsim/errors.hpp"
#include "ancsim/filter_design.hpp"
#include "ancsim/fir.hpp"
#include "ancsim/io.hpp"
#include "ancsim/kalman.hpp"
#include "ancsim/lms.hpp"
#include "ancsim/signals.hpp"
#include "ancsim/spectrum.hpp"
#include "ancsim/stats.hpp"

namespace ancsim {

// ---------------------------------------------------------------------------
// config -> concrete objects
// ---------------------------------------------------------------------------

inline FirPath build_fir_path(const PathSource& src, double fs_hz) {
  if (src.type == "bandpass_fir")
    return FirPath(design_bandpass_fir(src.length, src.low_hz, src.high_hz, fs_hz));
  if (src.type == "file") return FirPath(load_impulse_response(src.path, src.format));
  if (src.type == "taps") return FirPath(src.taps);
  throw ConfigError("path source '" + src.type + "' cannot be built directly");
}

inline std::vector<double> make_noise(const NoiseSource& src, double fs_hz, std::size_t n,
                                      std::uint64_t seed) {
  if (src.type == "tone") return generate_tone(src.freq_hz, src.amplitude, fs_hz, n);
  if (src.type == "bandlimited") {
    auto sig = generate_bandlimited_noise(src.low_hz, src.high_hz, fs_hz, n, seed);
    for (double& v : sig) v *= src.amplitude;
    return sig;
  }
  if (src.type == "compressor_standin") {
    CompressorStandinParams p;
    p.fundamental_hz = src.fundamental_hz;
    p.harmonics = src.harmonics;
    p.amplitude = src.amplitude;
    p.floor_db = src.floor_db;
    return generate_compressor_standin(p, fs_hz, n, seed);
  }
  if (src.type == "file") {
    WavData wav = load_wav_mono(src.path);
    if (std::llround(wav.fs_hz) != std::llround(fs_hz))
      throw ConfigError("noise file sample rate " + std::to_string(wav.fs_hz) +
                        " does not match configured fs " + std::to_string(fs_hz));
    if (wav.samples.empty()) throw IoError(src.path, "no samples");
    std::vector<double> sig(n);
    for (std::size_t i = 0; i < n; ++i)
      sig[i] = src.amplitude * wav.samples[i % wav.samples.size()];  // tile short files
    return sig;
  }
  throw ConfigError("unknown noise source '" + src.type + "'");
}

// Null controller: y frozen at zero, used for open-loop reference runs.
class OffController final : public AdaptiveController {
 public:
  explicit OffController(int length) : w_(Eigen::VectorXd::Zero(std::max(length, 1))) {}
  double output(double) override { return 0.0; }
  void update(double) override {}
  bool diverged() const override { return false; }
  const Eigen::VectorXd& weights() const override { return w_; }

 private:
  Eigen::VectorXd w_;
};

inline std::unique_ptr<AdaptiveController> make_controller(const ControllerConfig& cc,
                                                           const Eigen::VectorXd& s_hat_taps) {
  if (cc.type == "off") return std::make_unique<OffController>(cc.length);
  if (cc.type == "kf" || cc.type == "kf-opc") {
    KalmanControllerConfig kc;
    kc.length = static_cast<std::size_t>(cc.length);
    kc.q = cc.q;
    kc.r = cc.r;
    kc.p0 = cc.p0;
    kc.lambda = cc.lambda;
    kc.rho_o = cc.rho_o;
    kc.constrained = (cc.type == "kf-opc");
    kc.warmup = static_cast<std::size_t>(cc.warmup);
    kc.adaptive_q = cc.adaptive_q;
    return std::make_unique<KalmanAncController>(kc, FirPath(s_hat_taps));
  }
  LmsControllerConfig lc;
  lc.length = static_cast<std::size_t>(cc.length);
  lc.mu = cc.mu;
  lc.leak = (cc.type == "leaky-fxlms") ? cc.leak : 0.0;
  return std::make_unique<FxLmsController>(lc, FirPath(s_hat_taps));
}

// ---------------------------------------------------------------------------
// run artifacts
// ---------------------------------------------------------------------------

struct RunSummary {
  std::size_t samples_run = 0;
  bool diverged = false;
  double steady_output_power = std::numeric_limits<double>::quiet_NaN();
  double final_nse_db = std::numeric_limits<double>::quiet_NaN();
  double final_alpha = 1.0;
  std::size_t clipped_total = 0;
  std::size_t clipped_post_warmup = 0;
};

struct RunArtifacts {
  double fs_hz = 0.0;
  std::size_t warmup_samples = 0;
  int weight_trace_index = 0;
  std::vector<double> x, d, e, y, y_amp, y_prime, alpha, out_power_inst;
  std::vector<std::uint8_t> clipped;
  std::vector<double> weight_history;
  std::vector<NsePoint> nse;
  std::vector<SpectrumPoint> error_spectrum;
  Eigen::VectorXd final_w;
  Eigen::VectorXd final_cov_diag;
  RunSummary summary;
};

inline std::size_t controller_warmup_samples(const ControllerConfig& cc) {
  if (cc.type == "off") return 0;
  if ((cc.type == "kf" || cc.type == "kf-opc") && cc.warmup > 0)
    return static_cast<std::size_t>(cc.warmup);
  return 2 * static_cast<std::size_t>(cc.length);
}

// ---------------------------------------------------------------------------
// the closed loop
// ---------------------------------------------------------------------------

inline RunArtifacts run_closed_loop(const ExperimentConfig& cfg) {
  const std::size_t n_total = cfg.total_samples();

  FirPath primary = build_fir_path(cfg.primary, cfg.fs_hz);
  FirPath secondary = build_fir_path(cfg.secondary, cfg.fs_hz);
  FirPath s_hat = (cfg.secondary_model.type == "copy_secondary")
                      ? FirPath(secondary.taps())
                      : build_fir_path(cfg.secondary_model, cfg.fs_hz);

  const std::vector<double> noise = make_noise(cfg.noise, cfg.fs_hz, n_total, cfg.seed);
  auto ctrl = make_controller(cfg.controller, s_hat.taps());
  const Eigen::Index wti = static_cast<Eigen::Index>(cfg.measurement.weight_trace_index);
  if (cfg.controller.type != "off" && wti >= ctrl->weights().size())
    throw ConfigError("config.measurement.weight_trace_index: " +
                      std::to_string(cfg.measurement.weight_trace_index) +
                      " out of range for controller length " +
                      std::to_string(ctrl->weights().size()));
  const Eigen::Index wtrace = (wti < ctrl->weights().size()) ? wti : 0;

  std::optional<SaturatingAmplifier> amp;
  if (cfg.amplifier) amp.emplace(SaturatingAmplifier::from_rated_power(cfg.amplifier->rated_power));

  RunArtifacts ra;
  ra.fs_hz = cfg.fs_hz;
  ra.warmup_samples = controller_warmup_samples(cfg.controller);
  ra.weight_trace_index = cfg.measurement.weight_trace_index;
  ra.x.reserve(n_total);
  ra.d.reserve(n_total);
  ra.e.reserve(n_total);
  ra.y.reserve(n_total);
  ra.y_amp.reserve(n_total);
  ra.y_prime.reserve(n_total);
  ra.alpha.reserve(n_total);
  ra.out_power_inst.reserve(n_total);
  ra.clipped.reserve(n_total);
  ra.weight_history.reserve(n_total);

  for (std::size_t n = 0; n < n_total; ++n) {
    const double x = noise[n];
    const double d_raw = primary.process(x);
    const double y = ctrl->output(x);
    bool clip = false;
    double y_a = y;
    if (amp) {
      y_a = amp->process(y);
      clip = amp->last_clipped();
    }
    const double y_p = secondary.process(y_a);
    const double e = d_raw - y_p;
    const double d = e + y_p;  // stored so the loop identity is exact in floating point
    ctrl->update(e);

    ra.x.push_back(x);
    ra.d.push_back(d);
    ra.e.push_back(e);
    ra.y.push_back(y);
    ra.y_amp.push_back(y_a);
    ra.y_prime.push_back(y_p);
    ra.alpha.push_back(ctrl->alpha());
    ra.out_power_inst.push_back(y_a * y_a);
    ra.clipped.push_back(clip ? 1 : 0);
    ra.weight_history.push_back(ctrl->weights()(wtrace));
    if (clip) {
      ++ra.summary.clipped_total;
      if (n >= ra.warmup_samples) ++ra.summary.clipped_post_warmup;
    }
    if (ctrl->diverged()) {
      ra.summary.diverged = true;
      break;
    }
  }

  ra.summary.samples_run = ra.e.size();
  ra.final_w = ctrl->weights();
  ra.final_cov_diag = ctrl->covariance_diagonal();
  if (!ra.alpha.empty()) ra.summary.final_alpha = ra.alpha.back();

  const std::size_t ran = ra.summary.samples_run;
  if (ran > 0) {
    std::size_t steady_len =
        static_cast<std::size_t>(std::llround(cfg.measurement.steady_fraction * ran));
    steady_len = std::clamp<std::size_t>(steady_len, 1, ran);
    const std::size_t s0 = ran - steady_len;

    double acc_pow = 0.0;
    for (std::size_t i = s0; i < ran; ++i) acc_pow += ra.y_amp[i] * ra.y_amp[i];
    ra.summary.steady_output_power = acc_pow / static_cast<double>(steady_len);

    double acc_e = 0.0, acc_d = 0.0;
    for (std::size_t i = s0; i < ran; ++i) {
      acc_e += ra.e[i] * ra.e[i];
      acc_d += ra.d[i] * ra.d[i];
    }
    if (acc_d > 0.0) {
      ra.summary.final_nse_db =
          (acc_e > 0.0) ? std::max(10.0 * std::log10(acc_e / acc_d), kNseFloorDb) : kNseFloorDb;
    }

    ra.nse = nse_curve(ra.e, ra.d, static_cast<std::size_t>(cfg.measurement.nse_window));

    const std::size_t seg = static_cast<std::size_t>(cfg.measurement.spectrum_segment);
    if (steady_len >= seg) {
      std::vector<double> tail(ra.e.begin() + static_cast<std::ptrdiff_t>(s0), ra.e.end());
      ra.error_spectrum = welch_spectrum(tail, cfg.fs_hz, seg);
    } else if (ran >= seg) {
      ra.error_spectrum = welch_spectrum(ra.e, cfg.fs_hz, seg);
    }
  }
  return ra;
}

// ---------------------------------------------------------------------------
// artifact emission
// ---------------------------------------------------------------------------

inline json summary_to_json(const RunSummary& s) {
  json j;
  j["samples_run"] = s.samples_run;
  j["diverged"] = s.diverged;
  j["steady_output_power"] = s.steady_output_power;
  j["final_nse_db"] = s.final_nse_db;
  j["final_alpha"] = s.final_alpha;
  j["clipped_total"] = s.clipped_total;
  j["clipped_post_warmup"] = s.clipped_post_warmup;
  return j;
}

inline void emit_artifacts(const RunArtifacts& ra, const ExperimentConfig& cfg,
                           const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(dir, "cannot create directory: " + ec.message());
  const auto path = [&](const char* name) { return (fs::path(dir) / name).string(); };

  {
    CsvWriter csv(path("traces.csv"),
                  {"sample", "x", "d", "e", "y", "y_amp", "y_prime", "alpha",
                   "out_power_inst", "clipped"});
    for (std::size_t i = 0; i < ra.e.size(); ++i)
      csv.row({static_cast<double>(i), ra.x[i], ra.d[i], ra.e[i], ra.y[i], ra.y_amp[i],
               ra.y_prime[i], ra.alpha[i], ra.out_power_inst[i],
               static_cast<double>(ra.clipped[i])});
    csv.close();
  }
  {
    CsvWriter csv(path("nse.csv"), {"end_sample", "nse_db"});
    for (const auto& p : ra.nse) csv.row({static_cast<double>(p.end_sample), p.nse_db});
    csv.close();
  }
  {
    CsvWriter csv(path("spectrum.csv"), {"freq_hz", "power"});
    for (const auto& p : ra.error_spectrum) csv.row({p.freq_hz, p.power});
    csv.close();
  }
  {
    CsvWriter csv(path("weights.csv"), {"index", "weight"});
    for (Eigen::Index i = 0; i < ra.final_w.size(); ++i)
      csv.row({static_cast<double>(i), ra.final_w(i)});
    csv.close();
  }
  if (ra.final_cov_diag.size() > 0) {
    CsvWriter csv(path("covariance.csv"), {"index", "variance"});
    for (Eigen::Index i = 0; i < ra.final_cov_diag.size(); ++i)
      csv.row({static_cast<double>(i), ra.final_cov_diag(i)});
    csv.close();
  }
  {
    CsvWriter csv(path("weight_history.csv"), {"sample", "weight"});
    for (std::size_t i = 0; i < ra.weight_history.size(); ++i)
      csv.row({static_cast<double>(i), ra.weight_history[i]});
    csv.close();
  }
  {
    json manifest;
    manifest["schema_version"] = 1;
    manifest["config"] = to_json(cfg);
    manifest["summary"] = summary_to_json(ra.summary);
    std::ofstream out(path("manifest.json"));
    if (!out) throw IoError(path("manifest.json"), "cannot open for writing");
    out << manifest.dump(2) << '\n';
    if (!out) throw IoError(path("manifest.json"), "write failed");
  }
}

}  // namespace ancsim
