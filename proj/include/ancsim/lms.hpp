#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>

#include "ancsim/controller.hpp"
#include "ancsim/delay_line.hpp"
#include "ancsim/fir.hpp"

namespace ancsim {

struct LmsState {
  Eigen::VectorXd w;
  double mu;    // step size
  double leak;  // penalty factor, 0 disables the leak
  TappedDelayLine x_filt;
  TappedDelayLine x_ref;

  LmsState(std::size_t length, double step, double leak_factor)
      : w(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(length))),
        mu(step),
        leak(leak_factor),
        x_filt(length),
        x_ref(length) {
    if (length == 0) throw std::invalid_argument("LmsState: length must be >= 1");
    if (!(mu >= 0.0)) throw std::invalid_argument("LmsState: mu must be >= 0");
    if (!(leak >= 0.0)) throw std::invalid_argument("LmsState: leak must be >= 0");
  }
};

struct LmsControllerConfig {
  std::size_t length = 128;
  double mu = 1.0 / 1024.0;
  double leak = 0.0;
  double divergence_bound = 1e3;  // flag when ||w||_inf exceeds this
};

// Filtered-x LMS with an optional leak:
//   w <- (1 - mu*leak) w + mu * e * x'
// The sign convention matches e = d - y', so the error power decreases on a
// static plant. leak = 0 reduces bit-for-bit to plain FxLMS since the decay
// factor is then exactly 1.
class FxLmsController : public AdaptiveController {
 public:
  FxLmsController(const LmsControllerConfig& cfg, FirPath s_hat)
      : st_(cfg.length, cfg.mu, cfg.leak), s_hat_(std::move(s_hat)), bound_(cfg.divergence_bound) {
    s_hat_.reset();
  }

  double output(double x) override {
    st_.x_ref.push(x);
    st_.x_filt.push(s_hat_.process(x));
    y_last_ = st_.w.dot(st_.x_ref.values());
    return y_last_;
  }

  void update(double e) override {
    st_.w *= (1.0 - st_.mu * st_.leak);
    st_.w.noalias() += (st_.mu * e) * st_.x_filt.values();
    if (!st_.w.allFinite() || st_.w.cwiseAbs().maxCoeff() > bound_) diverged_ = true;
  }

  bool diverged() const override { return diverged_; }
  const Eigen::VectorXd& weights() const override { return st_.w; }
  const LmsState& state() const { return st_; }

 private:
  LmsState st_;
  FirPath s_hat_;
  double bound_;
  bool diverged_ = false;
  double y_last_ = 0.0;
};

}  // namespace ancsim
