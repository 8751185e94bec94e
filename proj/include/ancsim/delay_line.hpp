#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <stdexcept>

namespace ancsim {

// Tapped delay line with newest-first layout: values()[k] == x(n-k).
// Kept contiguous so filters and the Kalman observation row can take
// dot products against it directly.
class TappedDelayLine {
 public:
  explicit TappedDelayLine(std::size_t length)
      : buf_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(length))) {
    if (length == 0) throw std::invalid_argument("delay line length must be >= 1");
  }

  void push(double x) {
    const Eigen::Index n = buf_.size();
    double* p = buf_.data();
    std::copy_backward(p, p + n - 1, p + n);
    p[0] = x;
  }

  const Eigen::VectorXd& values() const { return buf_; }
  std::size_t size() const { return static_cast<std::size_t>(buf_.size()); }
  void reset() { buf_.setZero(); }

 private:
  Eigen::VectorXd buf_;
};

}  // namespace ancsim
