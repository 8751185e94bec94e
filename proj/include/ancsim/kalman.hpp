#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>

#include "ancsim/controller.hpp"
#include "ancsim/delay_line.hpp"
#include "ancsim/fir.hpp"
#include "ancsim/stats.hpp"

namespace ancsim {

// Random-walk state-space view of the control filter: the filter vector is
// the state, the disturbance sample is the measurement, and the filtered
// reference delay line is the observation row.
//
//   w(n)  = w(n-1) + v(n),            state noise variance r
//   d(n)  = x_filt(n)^T w(n) + e_o(n), measurement noise variance q
struct KalmanState {
  Eigen::VectorXd w;        // posterior filter estimate
  Eigen::MatrixXd P;        // state-error covariance
  double q;                 // measurement-error variance
  double r;                 // state-error variance
  TappedDelayLine x_filt;   // filtered-reference delay line (observation row)

  KalmanState(std::size_t length, double q_var, double r_var, double p0)
      : w(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(length))),
        P(p0 * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(length),
                                         static_cast<Eigen::Index>(length))),
        q(q_var),
        r(r_var),
        x_filt(length) {
    if (length == 0) throw std::invalid_argument("KalmanState: length must be >= 1");
    if (!(q >= 0.0) || !(r >= 0.0)) throw std::invalid_argument("KalmanState: q, r must be >= 0");
    if (!(p0 >= 0.0)) throw std::invalid_argument("KalmanState: p0 must be >= 0");
  }

  std::size_t length() const { return static_cast<std::size_t>(w.size()); }

  // Predict: the state estimate carries over, the covariance inflates by r*I.
  void time_update() { P.diagonal().array() += r; }

  // K = P x' / (x'^T P x' + q), with the prior covariance.
  Eigen::VectorXd gain() const {
    const Eigen::VectorXd& xf = x_filt.values();
    Eigen::VectorXd px = P * xf;
    const double denom = xf.dot(px) + q;
    if (!(denom > 0.0))
      throw std::domain_error("KalmanState::gain: innovation variance is not positive");
    return px / denom;
  }

  // Measurement update with the re-scaled measurement alpha*d:
  //   w <- w + K (alpha d - x'^T w)
  //   P <- (I - K x'^T) P, then re-symmetrized against drift.
  void correct(double d_meas, double alpha = 1.0) {
    if (!(alpha > 0.0 && alpha <= 1.0))
      throw std::invalid_argument("KalmanState::correct: alpha must be in (0,1]");
    const Eigen::VectorXd& xf = x_filt.values();
    const Eigen::VectorXd k = gain();
    const double innovation = alpha * d_meas - xf.dot(w);
    w.noalias() += k * innovation;
    const Eigen::RowVectorXd xtp = xf.transpose() * P;
    P.noalias() -= k * xtp;
    symmetrize();
  }

 private:
  void symmetrize() {
    const Eigen::Index n = P.rows();
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double m = 0.5 * (P(i, j) + P(j, i));
        P(i, j) = m;
        P(j, i) = m;
      }
  }
};

// Running estimates behind the constraint factor: disturbance power,
// reference power and filtered-reference power (their ratio estimates the
// secondary path gain).
struct ConstraintEstimators {
  double rho_o;              // rated output power
  RunningPower delta_d_sq;   // E[d^2]
  RunningPower pow_x;        // E[x^2]
  RunningPower pow_x_filt;   // E[x'^2]
  double alpha = 1.0;

  ConstraintEstimators(double rated_power, double lambda)
      : rho_o(rated_power), delta_d_sq(lambda), pow_x(lambda), pow_x_filt(lambda) {
    if (!(rho_o > 0.0)) throw std::invalid_argument("ConstraintEstimators: rho_o must be > 0");
  }

  void observe(double d_hat, double x, double x_filt) {
    delta_d_sq.update(d_hat);
    pow_x.update(x);
    pow_x_filt.update(x_filt);
  }

  // alpha = min(sqrt(rho_o * Gs / delta_d^2), 1) with Gs = E[x'^2]/E[x^2].
  // Degenerate statistics (zero reference, disturbance or path-gain power,
  // as when the secondary path is a not-yet-filled pure delay) hold the
  // previous value instead of producing an undefined factor.
  double compute_alpha() {
    const double px = pow_x.value();
    const double dd = delta_d_sq.value();
    if (!(px > 0.0) || !(dd > 0.0)) return alpha;
    const double gs = pow_x_filt.value() / px;
    if (!(gs > 0.0)) return alpha;
    if (rho_o * gs >= dd)
      alpha = 1.0;
    else
      alpha = std::sqrt(rho_o * gs / dd);
    return alpha;
  }
};

struct KalmanControllerConfig {
  std::size_t length = 128;
  double q = 1e-2;
  double r = 1e-6;
  double p0 = 1.0;
  double lambda = 0.999;   // forgetting factor of the running power estimates
  double rho_o = std::numeric_limits<double>::infinity();
  bool constrained = false;     // false: plain recursion, alpha pinned to 1
  std::size_t warmup = 0;       // 0 -> default 2*length
  bool adaptive_q = false;      // q tracks the running innovation power
};

// The per-sample adaptive controller. output() pushes the new reference
// through the W(z) tap line and the estimated secondary path; update()
// rebuilds the disturbance measurement from the residual error via the
// modified structure, refreshes the constraint estimators and runs one
// predict/correct cycle.
class KalmanAncController : public AdaptiveController {
 public:
  KalmanAncController(const KalmanControllerConfig& cfg, FirPath s_hat)
      : cfg_(cfg),
        ks_(cfg.length, cfg.q, cfg.r, cfg.p0),
        ce_(cfg.rho_o, cfg.lambda),
        s_hat_x_(s_hat),
        s_hat_y_(std::move(s_hat)),
        x_ref_(cfg.length),
        y_pow_(cfg.lambda),
        innov_pow_(cfg.lambda, cfg.q),
        warmup_(cfg.warmup ? cfg.warmup : 2 * cfg.length) {
    s_hat_x_.reset();
    s_hat_y_.reset();
  }

  double output(double x) override {
    x_ref_.push(x);
    x_last_ = x;
    xf_last_ = s_hat_x_.process(x);
    ks_.x_filt.push(xf_last_);
    y_last_ = ks_.w.dot(x_ref_.values());
    return y_last_;
  }

  void update(double e) override {
    const double sy = s_hat_y_.process(y_last_);
    d_hat_last_ = e + sy;
    ce_.observe(d_hat_last_, x_last_, xf_last_);
    y_pow_.update(y_last_);
    ks_.time_update();
    const double a = cfg_.constrained ? next_alpha() : 1.0;
    if (!cfg_.constrained) ce_.alpha = 1.0;
    if (cfg_.adaptive_q) {
      const double innovation = a * d_hat_last_ - ks_.x_filt.values().dot(ks_.w);
      ks_.q = std::max(innov_pow_.update(innovation), 1e-12);
    }
    ks_.correct(d_hat_last_, a);
    ++n_;
    if (!(std::isfinite(y_last_) && std::isfinite(d_hat_last_)) || !ks_.w.allFinite())
      diverged_ = true;
  }

  // Single-call convenience for plants where e(n) is available before y(n)
  // (pure-delay secondary paths, open-loop drives).
  ControllerStep step(double x, double e) {
    const double y = output(x);
    update(e);
    return {x, d_hat_last_, y};
  }

  bool diverged() const override { return diverged_; }
  double alpha() const override { return ce_.alpha; }
  const Eigen::VectorXd& weights() const override { return ks_.w; }
  Eigen::VectorXd covariance_diagonal() const override { return ks_.P.diagonal(); }
  double last_disturbance_estimate() const { return d_hat_last_; }
  const KalmanState& state() const { return ks_; }
  const ConstraintEstimators& estimators() const { return ce_; }

 private:
  // Warm-up policy: with empty statistics the constraint law is undefined,
  // so alpha rides at 1 while the estimated output power stays inside the
  // rated power. Once the output power first exceeds the rating the
  // statistics are manifestly populated, so the computed value takes over
  // per sample from that point on; a quiet start keeps alpha at 1 until the
  // warm-up window has passed.
  double next_alpha() {
    if (n_ < warmup_ && !warm_exceeded_) {
      if (y_pow_.value() <= ce_.rho_o) {
        ce_.alpha = 1.0;
        return 1.0;
      }
      warm_exceeded_ = true;
    }
    return ce_.compute_alpha();
  }

  KalmanControllerConfig cfg_;
  KalmanState ks_;
  ConstraintEstimators ce_;
  FirPath s_hat_x_;   // filters x -> x'
  FirPath s_hat_y_;   // filters y for the disturbance reconstruction
  TappedDelayLine x_ref_;
  RunningPower y_pow_;
  RunningPower innov_pow_;
  std::size_t warmup_;
  std::size_t n_ = 0;
  bool warm_exceeded_ = false;
  bool diverged_ = false;
  double x_last_ = 0.0;
  double xf_last_ = 0.0;
  double y_last_ = 0.0;
  double d_hat_last_ = 0.0;
};

}  // namespace ancsim
