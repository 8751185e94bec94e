#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace ancsim {

namespace detail {

inline double sinc(double t) {
  if (t == 0.0) return 1.0;
  const double pt = M_PI * t;
  return std::sin(pt) / pt;
}

// Symmetric Hann window, w[0] = w[len-1] = 0.
inline double hann(std::size_t k, std::size_t len) {
  if (len == 1) return 1.0;
  return 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(k) / static_cast<double>(len - 1));
}

}  // namespace detail

// Hann-windowed sinc low-pass prototype, linear phase, unity DC-to-passband
// gain by construction of the sinc kernel.
inline Eigen::VectorXd design_lowpass_fir(std::size_t length, double cutoff_hz, double fs_hz) {
  if (length < 1) throw std::invalid_argument("design_lowpass_fir: length must be >= 1");
  if (!(cutoff_hz > 0.0 && cutoff_hz < fs_hz / 2.0))
    throw std::invalid_argument("design_lowpass_fir: cutoff must lie in (0, fs/2)");
  const double fc = cutoff_hz / fs_hz;
  const double mid = (static_cast<double>(length) - 1.0) / 2.0;
  Eigen::VectorXd h(static_cast<Eigen::Index>(length));
  for (std::size_t k = 0; k < length; ++k) {
    const double t = static_cast<double>(k) - mid;
    h[static_cast<Eigen::Index>(k)] = 2.0 * fc * detail::sinc(2.0 * fc * t) * detail::hann(k, length);
  }
  return h;
}

// Band-pass as the difference of two low-pass prototypes. Linear phase.
inline Eigen::VectorXd design_bandpass_fir(std::size_t length, double lo_hz, double hi_hz,
                                           double fs_hz) {
  if (!(lo_hz > 0.0 && lo_hz < hi_hz && hi_hz < fs_hz / 2.0))
    throw std::invalid_argument("design_bandpass_fir: need 0 < lo < hi < fs/2");
  return design_lowpass_fir(length, hi_hz, fs_hz) - design_lowpass_fir(length, lo_hz, fs_hz);
}

}  // namespace ancsim
