#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ancsim/delay_line.hpp"

namespace ancsim {

// Fixed FIR path: y(n) = sum_k taps[k] * x(n-k). Models the acoustic
// primary/secondary paths and their estimates. Strictly FIR: the output
// depends only on the last taps.size() inputs.
class FirPath {
 public:
  explicit FirPath(Eigen::VectorXd taps)
      : taps_(std::move(taps)), line_(static_cast<std::size_t>(taps_.size() > 0 ? taps_.size() : 1)) {
    if (taps_.size() < 1) throw std::invalid_argument("FirPath: need at least one tap");
    if (!taps_.allFinite()) throw std::invalid_argument("FirPath: taps must be finite");
  }

  explicit FirPath(const std::vector<double>& taps)
      : FirPath(Eigen::Map<const Eigen::VectorXd>(taps.data(),
                                                  static_cast<Eigen::Index>(taps.size()))) {}

  double process(double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("FirPath: non-finite input sample");
    line_.push(x);
    return taps_.dot(line_.values());
  }

  // Magnitude of the frequency response at freq_hz, evaluated directly
  // from the tap DTFT. Used to plan experiment amplitudes.
  double gain_at(double freq_hz, double fs_hz) const {
    const double w = 2.0 * M_PI * freq_hz / fs_hz;
    std::complex<double> h{0.0, 0.0};
    for (Eigen::Index k = 0; k < taps_.size(); ++k)
      h += taps_[k] * std::exp(std::complex<double>(0.0, -w * static_cast<double>(k)));
    return std::abs(h);
  }

  const Eigen::VectorXd& taps() const { return taps_; }
  std::size_t length() const { return static_cast<std::size_t>(taps_.size()); }
  void reset() { line_.reset(); }

 private:
  Eigen::VectorXd taps_;
  TappedDelayLine line_;
};

}  // namespace ancsim
