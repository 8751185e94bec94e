#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ancsim/engine.hpp"

using namespace ancsim;
namespace fs = std::filesystem;

namespace {

ExperimentConfig base_config() {
  ExperimentConfig cfg;
  cfg.fs_hz = 16000.0;
  cfg.duration_s = 1.0;
  cfg.seed = 1;
  cfg.primary.type = "taps";
  cfg.primary.taps = {1.0};
  cfg.secondary.type = "taps";
  cfg.secondary.taps = {1.0};
  cfg.noise.type = "tone";
  cfg.noise.freq_hz = 400.0;
  cfg.noise.amplitude = 1.0;
  cfg.controller.type = "kf";
  cfg.controller.length = 8;
  return cfg;
}

std::vector<std::vector<double>> read_csv_rows(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

TEST_CASE("silent input keeps the loop silent") {
  ExperimentConfig cfg = base_config();
  cfg.noise.amplitude = 0.0;
  const RunArtifacts ra = run_closed_loop(cfg);
  REQUIRE(ra.summary.samples_run == 16000);
  for (std::size_t i = 0; i < ra.e.size(); ++i) {
    REQUIRE(ra.e[i] == 0.0);
    REQUIRE(ra.y[i] == 0.0);
  }
  REQUIRE_FALSE(ra.summary.diverged);
}

TEST_CASE("disabled controller passes the disturbance straight through") {
  ExperimentConfig cfg = base_config();
  cfg.controller.type = "off";
  const RunArtifacts ra = run_closed_loop(cfg);
  for (std::size_t i = 0; i < ra.e.size(); ++i) {
    REQUIRE(ra.y[i] == 0.0);
    REQUIRE(ra.e[i] == ra.d[i]);
  }
  REQUIRE(ra.warmup_samples == 0);
  REQUIRE(ra.summary.final_nse_db == 0.0);
}

TEST_CASE("identity plant tone run converges fast and deep") {
  ExperimentConfig cfg = base_config();
  const RunArtifacts ra = run_closed_loop(cfg);
  REQUIRE_FALSE(ra.summary.diverged);
  REQUIRE(ra.summary.final_nse_db <= -40.0);
  bool deep_within_first_second = false;
  for (const auto& p : ra.nse)
    if (p.end_sample <= 16000 && p.nse_db <= -40.0) deep_within_first_second = true;
  REQUIRE(deep_within_first_second);
}

TEST_CASE("the stored error and output satisfy the loop identity bitwise") {
  ExperimentConfig cfg = base_config();
  cfg.duration_s = 2.0;
  cfg.noise.type = "bandlimited";
  cfg.noise.low_hz = 200.0;
  cfg.noise.high_hz = 2000.0;
  cfg.noise.amplitude = 2.0;
  cfg.primary.type = "bandpass_fir";
  cfg.primary.taps.clear();
  cfg.primary.length = 64;
  cfg.primary.low_hz = 20.0;
  cfg.primary.high_hz = 5000.0;
  cfg.secondary.type = "bandpass_fir";
  cfg.secondary.taps.clear();
  cfg.secondary.length = 16;
  cfg.secondary.low_hz = 20.0;
  cfg.secondary.high_hz = 5000.0;
  cfg.controller.type = "kf-opc";
  cfg.controller.rho_o = 0.25;
  cfg.controller.length = 32;
  cfg.amplifier = AmplifierConfig{0.25};
  const RunArtifacts ra = run_closed_loop(cfg);
  REQUIRE(ra.summary.samples_run == 32000);
  for (std::size_t i = 0; i < ra.e.size(); ++i)
    REQUIRE(ra.e[i] + ra.y_prime[i] == ra.d[i]);
}

TEST_CASE("identical configs give identical runs") {
  ExperimentConfig cfg = base_config();
  cfg.noise.type = "bandlimited";
  cfg.controller.type = "kf-opc";
  cfg.controller.rho_o = 0.5;
  const RunArtifacts a = run_closed_loop(cfg);
  const RunArtifacts b = run_closed_loop(cfg);
  REQUIRE(a.x == b.x);
  REQUIRE(a.e == b.e);
  REQUIRE(a.y == b.y);
  REQUIRE(a.final_w == b.final_w);
  REQUIRE(a.summary.steady_output_power == b.summary.steady_output_power);
}

TEST_CASE("a diverging adaptive filter stops the run and flags it") {
  ExperimentConfig cfg = base_config();
  cfg.controller.type = "fxlms";
  cfg.controller.mu = 8.0;
  cfg.noise.amplitude = 2.0;
  const RunArtifacts ra = run_closed_loop(cfg);
  REQUIRE(ra.summary.diverged);
  REQUIRE(ra.summary.samples_run < 16000);
  REQUIRE(ra.e.size() == ra.summary.samples_run);
}

TEST_CASE("artifacts land on disk and the traces re-read exactly") {
  ExperimentConfig cfg = base_config();
  cfg.duration_s = 0.5;
  const RunArtifacts ra = run_closed_loop(cfg);
  const fs::path dir = fs::temp_directory_path() / "ancsim_engine_emit";
  fs::remove_all(dir);
  emit_artifacts(ra, cfg, dir.string());

  for (const char* name : {"traces.csv", "nse.csv", "spectrum.csv", "weights.csv",
                           "covariance.csv", "weight_history.csv", "manifest.json"})
    REQUIRE(fs::exists(dir / name));

  const auto rows = read_csv_rows((dir / "traces.csv").string());
  REQUIRE(rows.size() == ra.e.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    REQUIRE(rows[i].size() == 10);
    REQUIRE(rows[i][0] == static_cast<double>(i));
    REQUIRE(rows[i][1] == ra.x[i]);
    REQUIRE(rows[i][2] == ra.d[i]);
    REQUIRE(rows[i][3] == ra.e[i]);
    REQUIRE(rows[i][4] == ra.y[i]);
    REQUIRE(rows[i][6] == ra.y_prime[i]);
  }

  const auto wrows = read_csv_rows((dir / "weights.csv").string());
  REQUIRE(wrows.size() == static_cast<std::size_t>(ra.final_w.size()));
  for (std::size_t i = 0; i < wrows.size(); ++i) REQUIRE(wrows[i][1] == ra.final_w(i));
}

TEST_CASE("a manifest re-runs bit identically") {
  ExperimentConfig cfg = base_config();
  cfg.duration_s = 0.5;
  cfg.noise.type = "bandlimited";
  cfg.seed = 77;
  cfg.controller.type = "kf-opc";
  cfg.controller.rho_o = 0.4;
  const RunArtifacts first = run_closed_loop(cfg);
  const fs::path dir = fs::temp_directory_path() / "ancsim_engine_manifest";
  fs::remove_all(dir);
  emit_artifacts(first, cfg, dir.string());

  const ExperimentConfig again = load_experiment_config((dir / "manifest.json").string());
  const RunArtifacts second = run_closed_loop(again);
  REQUIRE(first.x == second.x);
  REQUIRE(first.d == second.d);
  REQUIRE(first.e == second.e);
  REQUIRE(first.y == second.y);
  REQUIRE(first.y_amp == second.y_amp);
  REQUIRE(first.alpha == second.alpha);
  REQUIRE(first.final_w == second.final_w);
}

TEST_CASE("a zero-length run emits headers only") {
  ExperimentConfig cfg = base_config();
  cfg.duration_s = 0.0;
  const RunArtifacts ra = run_closed_loop(cfg);
  REQUIRE(ra.summary.samples_run == 0);
  const fs::path dir = fs::temp_directory_path() / "ancsim_engine_empty";
  fs::remove_all(dir);
  emit_artifacts(ra, cfg, dir.string());
  std::ifstream in((dir / "traces.csv").string());
  std::string line;
  REQUIRE(std::getline(in, line));
  REQUIRE(line == "sample,x,d,e,y,y_amp,y_prime,alpha,out_power_inst,clipped");
  REQUIRE_FALSE(std::getline(in, line));
}

TEST_CASE("an out-of-range weight trace index is rejected") {
  ExperimentConfig cfg = base_config();
  cfg.measurement.weight_trace_index = 8;  // controller length is 8, valid indices 0..7
  REQUIRE_THROWS_AS(run_closed_loop(cfg), ConfigError);
  cfg.measurement.weight_trace_index = 7;
  REQUIRE_NOTHROW(run_closed_loop(cfg));
}

TEST_CASE("file-backed noise must match the configured sample rate") {
  const fs::path dir = fs::temp_directory_path() / "ancsim_engine_wav";
  fs::create_directories(dir);
  const std::string wav = (dir / "noise.wav").string();
  save_wav_float32(wav, {0.1, -0.2, 0.3, 0.0}, 8000.0);

  ExperimentConfig cfg = base_config();
  cfg.noise.type = "file";
  cfg.noise.path = wav;
  REQUIRE_THROWS_AS(run_closed_loop(cfg), ConfigError);

  cfg.fs_hz = 8000.0;
  const RunArtifacts ra = run_closed_loop(cfg);
  REQUIRE(ra.summary.samples_run == 8000);
  // short files tile
  const float f1 = 0.1f, f2 = -0.2f;
  REQUIRE(ra.x[0] == static_cast<double>(f1));
  REQUIRE(ra.x[4] == static_cast<double>(f1));
  REQUIRE(ra.x[5] == static_cast<double>(f2));
}

TEST_CASE("the amplifier clips the commanded output inside the loop") {
  ExperimentConfig cfg = base_config();
  cfg.noise.amplitude = 3.0;
  cfg.amplifier = AmplifierConfig{0.125};  // clip level = 0.5
  const RunArtifacts ra = run_closed_loop(cfg);
  REQUIRE(ra.summary.clipped_total > 0);
  const double clip = std::sqrt(2.0 * 0.125);
  for (std::size_t i = 0; i < ra.y_amp.size(); ++i) {
    REQUIRE(std::abs(ra.y_amp[i]) <= clip + 1e-15);
    if (ra.clipped[i]) REQUIRE(std::abs(ra.y_amp[i]) == Catch::Approx(clip).margin(1e-15));
  }
  REQUIRE(ra.summary.clipped_post_warmup <= ra.summary.clipped_total);
}

TEST_CASE("adaptive measurement noise is wired through the config") {
  ExperimentConfig cfg = base_config();
  cfg.controller.adaptive_q = true;
  const RunArtifacts ra = run_closed_loop(cfg);
  REQUIRE_FALSE(ra.summary.diverged);
  REQUIRE(ra.summary.final_nse_db <= -40.0);

  // and the two modes genuinely differ
  ExperimentConfig plain = base_config();
  const RunArtifacts rb = run_closed_loop(plain);
  REQUIRE(ra.e != rb.e);
}
