#pragma once

#include <Eigen/Dense>

#include <cstddef>

namespace ancsim {

// Per-sample exchange record: reference in, estimated disturbance, control out.
struct ControllerStep {
  double x = 0.0;
  double d_hat = 0.0;
  double y = 0.0;
};

// Adaptive controllers run a two-phase sample cycle against the loop:
//   y(n) = output(x(n))   -- emit the control sample for the new reference
//   update(e(n))          -- absorb the residual error measured with y(n) active
// A single instance must be stepped strictly in sample order.
class AdaptiveController {
 public:
  virtual ~AdaptiveController() = default;

  virtual double output(double x) = 0;
  virtual void update(double e) = 0;

  virtual bool diverged() const { return false; }
  virtual double alpha() const { return 1.0; }
  virtual const Eigen::VectorXd& weights() const = 0;
  virtual Eigen::VectorXd covariance_diagonal() const { return Eigen::VectorXd(); }
};

}  // namespace ancsim
