#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ancsim/filter_design.hpp"
#include "ancsim/fir.hpp"
#include "ancsim/rng.hpp"

namespace ancsim {

// n samples of amplitude * sin(2*pi*freq*k/fs).
inline std::vector<double> generate_tone(double freq_hz, double amplitude, double fs_hz,
                                         std::size_t n) {
  if (!(freq_hz > 0.0 && freq_hz < fs_hz / 2.0))
    throw std::invalid_argument("generate_tone: frequency must lie in (0, fs/2)");
  std::vector<double> out(n);
  const double w = 2.0 * M_PI * freq_hz / fs_hz;
  for (std::size_t k = 0; k < n; ++k) out[k] = amplitude * std::sin(w * static_cast<double>(k));
  return out;
}

inline constexpr std::size_t kNoiseFilterLength = 511;

// Seeded unit-variance white Gaussian noise shaped by a linear-phase
// windowed-sinc band-pass. The filter state is warmed with earlier draws of
// the same stream so the output is stationary from the first sample.
inline std::vector<double> generate_bandlimited_noise(double lo_hz, double hi_hz, double fs_hz,
                                                      std::size_t n, std::uint64_t seed,
                                                      std::size_t filter_length = kNoiseFilterLength) {
  if (!(lo_hz > 0.0 && lo_hz < hi_hz && hi_hz < fs_hz / 2.0))
    throw std::invalid_argument("generate_bandlimited_noise: need 0 < lo < hi < fs/2");
  FirPath bp(design_bandpass_fir(filter_length, lo_hz, hi_hz, fs_hz));
  SeededRng rng(seed);
  for (std::size_t k = 0; k < filter_length; ++k) bp.process(rng.gaussian());
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = bp.process(rng.gaussian());
  return out;
}

struct CompressorStandinParams {
  double fundamental_hz = 150.0;
  int harmonics = 4;          // lines at fundamental, 2x, 3x, 4x
  double amplitude = 1.0;     // RMS of the full signal
  double floor_db = -20.0;    // broadband floor power relative to the line stack
  double floor_lo_hz = 50.0;
  double floor_hi_hz = 4000.0;
};

// Synthetic stand-in for recorded compressor noise: a harmonic line stack
// plus a band-limited broadband floor. Phases and floor noise are seeded.
inline std::vector<double> generate_compressor_standin(const CompressorStandinParams& p,
                                                       double fs_hz, std::size_t n,
                                                       std::uint64_t seed) {
  if (p.harmonics < 1) throw std::invalid_argument("compressor standin: need >= 1 harmonic");
  if (!(p.fundamental_hz > 0.0 &&
        p.fundamental_hz * static_cast<double>(p.harmonics) < fs_hz / 2.0))
    throw std::invalid_argument("compressor standin: harmonics must lie below fs/2");
  if (!(p.amplitude >= 0.0)) throw std::invalid_argument("compressor standin: amplitude >= 0");

  const double floor_ratio = std::pow(10.0, p.floor_db / 10.0);
  const double total_power = p.amplitude * p.amplitude;
  const double line_power = total_power / (1.0 + floor_ratio);
  const double floor_power = total_power - line_power;
  const double per_line_amp = std::sqrt(2.0 * line_power / static_cast<double>(p.harmonics));

  SeededRng rng(seed);
  std::vector<double> phases(static_cast<std::size_t>(p.harmonics));
  for (auto& ph : phases) ph = 2.0 * M_PI * rng.uniform01();

  std::vector<double> out(n, 0.0);
  for (int h = 1; h <= p.harmonics; ++h) {
    const double w = 2.0 * M_PI * p.fundamental_hz * static_cast<double>(h) / fs_hz;
    const double ph = phases[static_cast<std::size_t>(h - 1)];
    for (std::size_t k = 0; k < n; ++k)
      out[k] += per_line_amp * std::sin(w * static_cast<double>(k) + ph);
  }

  if (floor_power > 0.0 && n > 0) {
    auto noise = generate_bandlimited_noise(p.floor_lo_hz, p.floor_hi_hz, fs_hz, n,
                                            rng.next_u64());
    // scale the realized noise to the requested floor power
    double ms = 0.0;
    for (double v : noise) ms += v * v;
    ms /= static_cast<double>(n);
    const double scale = ms > 0.0 ? std::sqrt(floor_power / ms) : 0.0;
    for (std::size_t k = 0; k < n; ++k) out[k] += scale * noise[k];
  }
  return out;
}

}  // namespace ancsim
