#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace ancsim {

namespace detail {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 Cooley-Tukey, in place. Size must be a power of two.
inline void fft_radix2(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  if (!is_power_of_two(n)) throw std::invalid_argument("fft_radix2: size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j |= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * M_PI / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

}  // namespace detail

struct SpectrumPoint {
  double freq_hz;
  double power;  // signal-units squared per bin, one-sided
};

// Welch-averaged one-sided power spectrum: Hann window, 50% overlap.
// Normalized so the powers sum to (approximately) the time-domain mean
// square of the signal.
inline std::vector<SpectrumPoint> welch_spectrum(std::span<const double> signal, double fs_hz,
                                                 std::size_t segment) {
  if (signal.empty()) throw std::invalid_argument("welch_spectrum: empty signal");
  if (!detail::is_power_of_two(segment))
    throw std::invalid_argument("welch_spectrum: segment must be a power of two");
  if (segment > signal.size())
    throw std::invalid_argument("welch_spectrum: segment longer than signal");

  // periodic Hann window and its power normalization
  std::vector<double> win(segment);
  double u = 0.0;
  for (std::size_t k = 0; k < segment; ++k) {
    win[k] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(k) / static_cast<double>(segment));
    u += win[k] * win[k];
  }

  const std::size_t hop = segment / 2;
  std::vector<double> acc(segment / 2 + 1, 0.0);
  std::size_t nseg = 0;
  std::vector<std::complex<double>> buf(segment);
  for (std::size_t start = 0; start + segment <= signal.size(); start += hop) {
    for (std::size_t k = 0; k < segment; ++k)
      buf[k] = std::complex<double>(win[k] * signal[start + k], 0.0);
    detail::fft_radix2(buf);
    for (std::size_t k = 0; k <= segment / 2; ++k) acc[k] += std::norm(buf[k]);
    ++nseg;
  }

  // |X_k|^2 summed over all bins equals segment * sum((w x)^2); fold to one
  // side and divide by segment * U so the bin powers add up to mean square.
  const double scale = 1.0 / (static_cast<double>(nseg) * static_cast<double>(segment) * u);
  std::vector<SpectrumPoint> out(segment / 2 + 1);
  for (std::size_t k = 0; k <= segment / 2; ++k) {
    const double fold = (k == 0 || k == segment / 2) ? 1.0 : 2.0;
    out[k] = {static_cast<double>(k) * fs_hz / static_cast<double>(segment),
              fold * acc[k] * scale};
  }
  return out;
}

// Sum of bin powers with centers in [lo_hz, hi_hz].
inline double band_power(const std::vector<SpectrumPoint>& spectrum, double lo_hz, double hi_hz) {
  double p = 0.0;
  for (const auto& s : spectrum)
    if (s.freq_hz >= lo_hz && s.freq_hz <= hi_hz) p += s.power;
  return p;
}

// Power of a narrowband component: bins within half_width of the bin nearest
// freq_hz are summed, absorbing window leakage around a tone.
inline double power_near(const std::vector<SpectrumPoint>& spectrum, double freq_hz,
                         std::size_t half_width = 1) {
  if (spectrum.size() < 2) throw std::invalid_argument("spectrum too short");
  const double df = spectrum[1].freq_hz - spectrum[0].freq_hz;
  const std::ptrdiff_t center = static_cast<std::ptrdiff_t>(std::llround(freq_hz / df));
  double p = 0.0;
  for (std::ptrdiff_t k = center - static_cast<std::ptrdiff_t>(half_width);
       k <= center + static_cast<std::ptrdiff_t>(half_width); ++k)
    if (k >= 0 && k < static_cast<std::ptrdiff_t>(spectrum.size())) p += spectrum[k].power;
  return p;
}

// Median bin power in [lo_hz, hi_hz], skipping bins within exclude_hz of any
// listed center frequency. Robust broadband-floor estimate around tonal peaks.
inline double median_power_excluding(const std::vector<SpectrumPoint>& spectrum, double lo_hz,
                                     double hi_hz, const std::vector<double>& exclude_centers,
                                     double exclude_hz) {
  std::vector<double> vals;
  for (const auto& s : spectrum) {
    if (s.freq_hz < lo_hz || s.freq_hz > hi_hz) continue;
    bool skip = false;
    for (double c : exclude_centers)
      if (std::abs(s.freq_hz - c) <= exclude_hz) { skip = true; break; }
    if (!skip) vals.push_back(s.power);
  }
  if (vals.empty()) throw std::invalid_argument("no spectrum bins left after exclusions");
  std::nth_element(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(vals.size() / 2),
                   vals.end());
  return vals[vals.size() / 2];
}

}  // namespace ancsim
