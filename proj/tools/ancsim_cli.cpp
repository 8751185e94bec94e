// Command-line front end: single runs from a config file, the full
// three-experiment suite, and leak calibration for the power-matched
// baseline. Exit codes: 0 ok, 2 config error, 3 divergence, 4 I/O error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "ancsim/ancsim.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitIo = 4;

struct CommonOpts {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> controller;
};

void apply_overrides(ancsim::ExperimentConfig& cfg, const CommonOpts& opts) {
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.controller) {
    cfg.controller.type = *opts.controller;
    if (*opts.controller == "kf-opc" && std::isinf(cfg.controller.rho_o))
      throw ancsim::ConfigError(
          "controller override 'kf-opc' needs rho_o in the config file");
  }
}

void print_summary(const std::string& label, const ancsim::RunArtifacts& ra) {
  const auto& s = ra.summary;
  std::cout << label << ": samples=" << s.samples_run
            << " output_power=" << s.steady_output_power << " nse_db=" << s.final_nse_db
            << " alpha=" << s.final_alpha << " clipped=" << s.clipped_total
            << (s.diverged ? " DIVERGED" : "") << '\n';
}

int run_single(const CommonOpts& opts) {
  ancsim::ExperimentConfig cfg = ancsim::load_experiment_config(opts.config_path);
  apply_overrides(cfg, opts);
  const ancsim::RunArtifacts ra = ancsim::run_closed_loop(cfg);
  ancsim::emit_artifacts(ra, cfg, opts.out_dir);
  print_summary("run", ra);
  std::cout << "artifacts: " << opts.out_dir << '\n';
  return ra.summary.diverged ? kExitDivergence : kExitOk;
}

void emit_run(const ancsim::LabeledRun& run, const std::filesystem::path& dir) {
  ancsim::emit_artifacts(run.artifacts, run.config, (dir / run.label).string());
  print_summary(run.label, run.artifacts);
}

void write_calibration(const ancsim::CalibrationReport& cal, const std::filesystem::path& path) {
  ancsim::json j;
  j["mu"] = cal.mu;
  j["leak"] = cal.leak;
  j["target_power"] = cal.target_power;
  j["achieved_power"] = cal.achieved_power;
  j["iterations"] = cal.iterations;
  j["target_unreachable"] = cal.target_unreachable;
  std::ofstream out(path);
  if (!out) throw ancsim::IoError(path.string(), "cannot open for writing");
  out << j.dump(2) << '\n';
}

int run_suite(const CommonOpts& opts) {
  namespace fs = std::filesystem;
  const fs::path root(opts.out_dir);
  bool diverged = false;

  std::cout << "[tonal-saturation]\n";
  const ancsim::TonalSaturationResult tonal = ancsim::experiment_tonal_saturation();
  emit_run(tonal.kf, root / "tonal-saturation");
  emit_run(tonal.kf_opc, root / "tonal-saturation");
  diverged |= tonal.kf.artifacts.summary.diverged || tonal.kf_opc.artifacts.summary.diverged;

  std::cout << "[broadband]\n";
  const ancsim::BroadbandResult bb = ancsim::experiment_broadband();
  emit_run(bb.kf, root / "broadband");
  emit_run(bb.kf_opc, root / "broadband");
  emit_run(bb.leaky, root / "broadband");
  write_calibration(bb.calibration, root / "broadband" / "calibration.json");
  if (bb.calibration.target_unreachable)
    std::cerr << "warning: broadband leak calibration target not reachable at leak=0\n";
  diverged |= bb.kf.artifacts.summary.diverged || bb.kf_opc.artifacts.summary.diverged ||
              bb.leaky.artifacts.summary.diverged;

  std::cout << "[real-path]\n";
  const std::uint64_t seed = opts.seed.value_or(1);
  const ancsim::RealPathResult rp =
      ancsim::experiment_real_path_standin((root / "real-path" / "standins").string(), seed);
  emit_run(rp.kf, root / "real-path");
  emit_run(rp.kf_opc, root / "real-path");
  emit_run(rp.leaky, root / "real-path");
  write_calibration(rp.calibration, root / "real-path" / "calibration.json");
  if (rp.calibration.target_unreachable)
    std::cerr << "warning: real-path leak calibration target not reachable at leak=0\n";
  diverged |= rp.kf.artifacts.summary.diverged || rp.kf_opc.artifacts.summary.diverged ||
              rp.leaky.artifacts.summary.diverged;

  std::cout << "suite artifacts: " << opts.out_dir << '\n';
  return diverged ? kExitDivergence : kExitOk;
}

int run_calibrate(const CommonOpts& opts, double target_power, double probe_seconds) {
  ancsim::ExperimentConfig cfg = ancsim::load_experiment_config(opts.config_path);
  apply_overrides(cfg, opts);
  cfg.duration_s = probe_seconds;
  cfg.controller.type = "leaky-fxlms";
  cfg.controller.mu = ancsim::sweep_step_size(cfg);
  const ancsim::CalibrationReport cal = ancsim::calibrate_leak(target_power, cfg);
  if (cal.target_unreachable)
    std::cerr << "warning: target power " << target_power
              << " is not reachable; unconstrained power is " << cal.achieved_power
              << ", returning leak=0\n";
  std::filesystem::create_directories(opts.out_dir);
  write_calibration(cal, std::filesystem::path(opts.out_dir) / "calibration.json");
  std::cout << "mu=" << cal.mu << " leak=" << cal.leak
            << " achieved_power=" << cal.achieved_power << " iterations=" << cal.iterations
            << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic active-noise-control simulation toolkit"};
  app.require_subcommand(1);

  CommonOpts opts;
  double target_power = 0.8;
  double probe_seconds = 4.0;

  CLI::App* cmd_run = app.add_subcommand("run", "Run one closed-loop simulation from a config");
  cmd_run->add_option("--config", opts.config_path, "Config or manifest JSON path")->required();
  cmd_run->add_option("--seed", opts.seed, "Override the config seed");
  cmd_run->add_option("--out", opts.out_dir, "Artifact output directory");
  cmd_run->add_option("--controller", opts.controller,
                      "Override controller type (kf | kf-opc | fxlms | leaky-fxlms | off)");

  CLI::App* cmd_suite = app.add_subcommand("suite", "Run the three shipped experiments");
  cmd_suite->add_option("--seed", opts.seed, "Seed for the real-path stand-in noise");
  cmd_suite->add_option("--out", opts.out_dir, "Artifact output directory");

  CLI::App* cmd_cal =
      app.add_subcommand("calibrate-leak", "Bisect the leak factor to hit a power target");
  cmd_cal->add_option("--config", opts.config_path, "Config JSON path (controller forced to leaky)")
      ->required();
  cmd_cal->add_option("--target-power", target_power, "Steady-state output power target");
  cmd_cal->add_option("--probe-seconds", probe_seconds, "Probe simulation length in seconds");
  cmd_cal->add_option("--seed", opts.seed, "Override the config seed");
  cmd_cal->add_option("--out", opts.out_dir, "Directory for calibration.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (cmd_run->parsed()) return run_single(opts);
    if (cmd_suite->parsed()) return run_suite(opts);
    if (cmd_cal->parsed()) return run_calibrate(opts, target_power, probe_seconds);
  } catch (const ancsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ancsim::IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
