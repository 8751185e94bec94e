#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "ancsim/filter_design.hpp"
#include "ancsim/kalman.hpp"
#include "ancsim/rng.hpp"

using namespace ancsim;

TEST_CASE("time update leaves the estimate alone and inflates the covariance") {
  KalmanState ks(2, 1e-2, 0.1, 1.0);
  ks.w << 0.5, -0.5;
  const Eigen::VectorXd w_before = ks.w;
  ks.time_update();
  REQUIRE(ks.w == w_before);
  REQUIRE(ks.P(0, 0) == Catch::Approx(1.1).margin(1e-15));
  REQUIRE(ks.P(1, 1) == Catch::Approx(1.1).margin(1e-15));
  REQUIRE(ks.P(0, 1) == 0.0);
}

TEST_CASE("time update with zero state noise is the identity on P") {
  KalmanState ks(3, 1e-2, 0.0, 2.0);
  const Eigen::MatrixXd before = ks.P;
  ks.time_update();
  REQUIRE(ks.P == before);
}

TEST_CASE("time update preserves symmetry of a random symmetric covariance") {
  SeededRng rng(8);
  KalmanState ks(4, 1e-2, 0.05, 1.0);
  Eigen::MatrixXd m(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) m(i, j) = rng.gaussian();
  ks.P = m * m.transpose();  // symmetric PSD
  const Eigen::MatrixXd before = ks.P;
  ks.time_update();
  REQUIRE((ks.P - ks.P.transpose()).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((ks.P - before).diagonal().minCoeff() == Catch::Approx(0.05).margin(1e-12));
}

TEST_CASE("scalar gain formula") {
  KalmanState ks(1, 1.0, 0.0, 1.0);
  ks.x_filt.push(1.0);
  REQUIRE(ks.gain()(0) == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("zero observation row gives zero gain") {
  KalmanState ks(3, 1e-2, 1e-6, 1.0);
  REQUIRE(ks.gain().isZero());
}

TEST_CASE("gain matches a dense direct evaluation") {
  SeededRng rng(17);
  KalmanState ks(2, 0.3, 0.0, 1.0);
  Eigen::MatrixXd m(2, 2);
  m << 1.2, 0.4, -0.3, 0.9;
  ks.P = m * m.transpose();
  ks.x_filt.push(0.7);
  ks.x_filt.push(-1.1);
  const Eigen::VectorXd xf = ks.x_filt.values();
  const Eigen::VectorXd expect = (ks.P * xf) / (xf.dot(ks.P * xf) + 0.3);
  REQUIRE((ks.gain() - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gain with no innovation variance is rejected") {
  KalmanState ks(2, 0.0, 0.0, 1.0);
  ks.P.setZero();
  ks.x_filt.push(1.0);
  REQUIRE_THROWS_AS(ks.gain(), std::domain_error);
}

TEST_CASE("scalar correction with a half-weight measurement") {
  KalmanState ks(1, 1.0, 0.0, 1.0);
  ks.x_filt.push(1.0);
  ks.time_update();
  ks.correct(2.0, 0.5);
  REQUIRE(ks.w(0) == Catch::Approx(0.5).margin(1e-15));
  REQUIRE(ks.P(0, 0) == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("correction with zero observation row changes nothing") {
  KalmanState ks(2, 1e-2, 0.0, 1.0);
  ks.w << 1.0, -2.0;
  const Eigen::VectorXd w_before = ks.w;
  const Eigen::MatrixXd p_before = ks.P;
  ks.correct(5.0, 1.0);
  REQUIRE(ks.w == w_before);
  REQUIRE(ks.P == p_before);
}

TEST_CASE("correction validates the measurement weight") {
  KalmanState ks(1, 1.0, 0.0, 1.0);
  ks.x_filt.push(1.0);
  REQUIRE_THROWS_AS(ks.correct(1.0, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(ks.correct(1.0, 1.5), std::invalid_argument);
  REQUIRE_THROWS_AS(ks.correct(1.0, -0.2), std::invalid_argument);
}

TEST_CASE("full-weight correction equals the unconstrained update bit for bit") {
  SeededRng rng(23);
  KalmanState a(3, 1e-2, 1e-6, 1.0);
  KalmanState b(3, 1e-2, 1e-6, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double x = rng.gaussian();
    const double d = rng.gaussian();
    a.x_filt.push(x);
    b.x_filt.push(x);
    a.time_update();
    b.time_update();
    // explicit unconstrained arithmetic for b
    const Eigen::VectorXd xf = b.x_filt.values();
    const Eigen::VectorXd k = b.gain();
    b.w.noalias() += k * (1.0 * d - xf.dot(b.w));
    const Eigen::RowVectorXd xtp = xf.transpose() * b.P;
    b.P.noalias() -= k * xtp;
    for (Eigen::Index r = 0; r < 3; ++r)
      for (Eigen::Index c = r + 1; c < 3; ++c) {
        const double m = 0.5 * (b.P(r, c) + b.P(c, r));
        b.P(r, c) = m;
        b.P(c, r) = m;
      }
    a.correct(d, 1.0);
    REQUIRE(a.w == b.w);
    REQUIRE(a.P == b.P);
  }
}

TEST_CASE("length-one recursion matches the closed-form scalar filter") {
  SeededRng rng(29);
  KalmanState ks(1, 0.05, 1e-4, 2.0);
  double w = 0.0, p = 2.0;
  for (int i = 0; i < 500; ++i) {
    const double x = rng.gaussian();
    const double d = 0.8 * x + 0.1 * rng.gaussian();
    ks.x_filt.push(x);
    ks.time_update();
    ks.correct(d, 1.0);
    p += 1e-4;
    const double k = p * x / (x * x * p + 0.05);
    w += k * (d - x * w);
    p = (1.0 - k * x) * p;
    REQUIRE(ks.w(0) == Catch::Approx(w).margin(1e-10));
    REQUIRE(ks.P(0, 0) == Catch::Approx(p).margin(1e-10));
  }
}

TEST_CASE("zero-state-noise recursion solves the regularized batch problem") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SeededRng rng(seed);
    const int L = 1 + static_cast<int>(seed % 4);
    const double q = 0.04, p0 = 1.0;
    KalmanState ks(static_cast<std::size_t>(L), q, 0.0, p0);

    Eigen::MatrixXd gram = (1.0 / p0) * Eigen::MatrixXd::Identity(L, L);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(L);
    for (int n = 0; n < 300; ++n) {
      const double x = rng.gaussian();
      const double d = rng.gaussian();
      ks.x_filt.push(x);
      const Eigen::VectorXd phi = ks.x_filt.values();
      ks.time_update();
      ks.correct(d, 1.0);
      gram.noalias() += (1.0 / q) * phi * phi.transpose();
      rhs.noalias() += (1.0 / q) * phi * d;
    }
    const Eigen::VectorXd batch = gram.ldlt().solve(rhs);
    REQUIRE((ks.w - batch).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("covariance stays symmetric positive and contracts on corrections") {
  SeededRng rng(101);
  const int L = 8;
  KalmanState ks(L, 1e-2, 1e-6, 1.0);
  for (int n = 0; n < 20000; ++n) {
    const double burst = (n % 997 == 0) ? 10.0 : 1.0;
    ks.x_filt.push(burst * rng.gaussian());
    ks.time_update();
    const double trace_prior = ks.P.trace();
    ks.correct(rng.gaussian(), 1.0);
    const double trace_post = ks.P.trace();
    REQUIRE(trace_post <= trace_prior + 1e-12 * std::abs(trace_prior));

    const double scale = ks.P.cwiseAbs().maxCoeff();
    REQUIRE((ks.P - ks.P.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * scale);
    if (n % 1000 == 0) {
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(ks.P);
      REQUIRE(eig.eigenvalues().minCoeff() >= -1e-9 * ks.P.trace());
    }
  }
}

TEST_CASE("constraint factor follows the closed-form power law on a grid") {
  for (double rho : {0.1, 0.5, 1.0, 2.0}) {
    for (double gs : {0.5, 1.0, 2.0}) {
      for (double dd : {0.1, 1.0, 4.0, 100.0}) {
        ConstraintEstimators ce(rho, 0.5);
        ce.pow_x.set_value(1.0);
        ce.pow_x_filt.set_value(gs);
        ce.delta_d_sq.set_value(dd);
        const double got = ce.compute_alpha();
        const double ratio = rho * (gs / 1.0);
        const double expect = (ratio >= dd) ? 1.0 : std::sqrt(ratio / dd);
        REQUIRE(got == expect);
        REQUIRE(got == ce.alpha);
      }
    }
  }
}

TEST_CASE("unbounded rated power pins the constraint factor at one") {
  ConstraintEstimators ce(std::numeric_limits<double>::infinity(), 0.5);
  ce.pow_x.set_value(1.0);
  ce.pow_x_filt.set_value(0.7);
  ce.delta_d_sq.set_value(1e12);
  REQUIRE(ce.compute_alpha() == 1.0);
}

TEST_CASE("degenerate statistics hold the previous constraint factor") {
  ConstraintEstimators ce(1.0, 0.5);
  ce.pow_x.set_value(1.0);
  ce.pow_x_filt.set_value(1.0);
  ce.delta_d_sq.set_value(4.0);
  REQUIRE(ce.compute_alpha() == 0.5);

  ce.pow_x.set_value(0.0);  // no reference power
  REQUIRE(ce.compute_alpha() == 0.5);
  ce.pow_x.set_value(1.0);
  ce.delta_d_sq.set_value(0.0);  // no disturbance power
  REQUIRE(ce.compute_alpha() == 0.5);
  ce.delta_d_sq.set_value(4.0);
  ce.pow_x_filt.set_value(0.0);  // path gain not yet observable
  REQUIRE(ce.compute_alpha() == 0.5);
}

TEST_CASE("constraint factor is non-increasing in the disturbance power") {
  double prev = 1.0;
  for (double dd = 0.25; dd <= 32.0; dd *= 2.0) {
    ConstraintEstimators ce(1.0, 0.5);
    ce.pow_x.set_value(1.0);
    ce.pow_x_filt.set_value(1.0);
    ce.delta_d_sq.set_value(dd);
    const double a = ce.compute_alpha();
    REQUIRE(a <= prev);
    prev = a;
  }
}

TEST_CASE("identity-path constraint estimators measure unit path gain") {
  ConstraintEstimators ce(1.0, 0.9);
  SeededRng rng(3);
  for (int i = 0; i < 5000; ++i) {
    const double x = rng.gaussian();
    ce.observe(x, x, x);  // x' = x through an identity path
  }
  REQUIRE(ce.pow_x_filt.value() == Catch::Approx(ce.pow_x.value()).margin(1e-12));
}

TEST_CASE("controller output is the control filter applied to the raw reference") {
  KalmanControllerConfig cfg;
  cfg.length = 4;
  KalmanAncController ctrl(cfg, FirPath(std::vector<double>{1.0}));
  REQUIRE(ctrl.output(1.0) == 0.0);  // weights start at zero

  // force a unit first tap and check pass-through behavior
  KalmanControllerConfig cfg2;
  cfg2.length = 2;
  KalmanAncController c2(cfg2, FirPath(std::vector<double>{1.0}));
  // one converged-ish step: drive with d = x so the first weight rises
  SeededRng rng(10);
  for (int i = 0; i < 400; ++i) {
    const double x = rng.gaussian();
    const double y = c2.output(x);
    const double e = x - y;  // identity plant: d = x, y' = y
    c2.update(e);
  }
  REQUIRE(c2.weights()(0) == Catch::Approx(1.0).margin(1e-2));
  REQUIRE(std::abs(c2.weights()(1)) < 1e-2);
}

TEST_CASE("random control filter output matches a direct convolution") {
  SeededRng rng(13);
  KalmanControllerConfig cfg;
  cfg.length = 6;
  KalmanAncController ctrl(cfg, FirPath(std::vector<double>{1.0}));
  // seed the weights through the state accessor path: run a few updates, then
  // compare outputs against a convolution with the frozen weights
  std::vector<double> xs;
  for (int i = 0; i < 50; ++i) {
    const double x = rng.gaussian();
    ctrl.output(x);
    ctrl.update(rng.gaussian());
    xs.push_back(x);
  }
  const Eigen::VectorXd w = ctrl.weights();
  const double x_new = 0.77;
  xs.push_back(x_new);
  double expect = 0.0;
  for (int k = 0; k < 6; ++k)
    expect += w(k) * xs[xs.size() - 1 - static_cast<std::size_t>(k)];
  REQUIRE(ctrl.output(x_new) == Catch::Approx(expect).margin(1e-12));
}

TEST_CASE("adaptive measurement-noise mode stays finite and tracks convergence") {
  KalmanControllerConfig cfg;
  cfg.length = 8;
  cfg.adaptive_q = true;
  KalmanAncController ctrl(cfg, FirPath(std::vector<double>{1.0}));
  SeededRng rng(77);
  for (int i = 0; i < 4000; ++i) {
    const double x = rng.gaussian();
    const double y = ctrl.output(x);
    ctrl.update(x - y);  // identity plant
  }
  REQUIRE_FALSE(ctrl.diverged());
  REQUIRE(ctrl.state().q > 0.0);
  REQUIRE(ctrl.state().q < 1e-2);  // innovation power shrinks as it converges
  REQUIRE(ctrl.weights()(0) == Catch::Approx(1.0).margin(0.05));
}
