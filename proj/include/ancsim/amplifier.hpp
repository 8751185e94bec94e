#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace ancsim {

// Hard symmetric clipper standing in for a power amplifier driven past its
// rated output. clip_level = sqrt(2 * rated_power), the peak amplitude of a
// sinusoid at rated power.
class SaturatingAmplifier {
 public:
  explicit SaturatingAmplifier(double clip_level) : clip_(clip_level) {
    if (!(clip_level > 0.0)) throw std::invalid_argument("SaturatingAmplifier: clip level must be > 0");
  }

  static SaturatingAmplifier from_rated_power(double rated_power) {
    if (!(rated_power > 0.0))
      throw std::invalid_argument("SaturatingAmplifier: rated power must be > 0");
    return SaturatingAmplifier(std::sqrt(2.0 * rated_power));
  }

  double process(double x) {
    last_clipped_ = false;
    if (x > clip_) {
      last_clipped_ = true;
      ++clipped_count_;
      return clip_;
    }
    if (x < -clip_) {
      last_clipped_ = true;
      ++clipped_count_;
      return -clip_;
    }
    return x;
  }

  double clip_level() const { return clip_; }
  bool last_clipped() const { return last_clipped_; }
  std::uint64_t clipped_count() const { return clipped_count_; }
  void reset_count() { clipped_count_ = 0; }

 private:
  double clip_;
  bool last_clipped_ = false;
  std::uint64_t clipped_count_ = 0;
};

}  // namespace ancsim
