#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace ancsim {

// Exponentially weighted mean-square estimator:
//   value <- lambda * value + (1 - lambda) * x^2
// The streaming stand-in for the E[.] power terms of the constraint law.
class RunningPower {
 public:
  explicit RunningPower(double lambda, double initial = 0.0)
      : lambda_(lambda), value_(initial) {
    if (!(lambda > 0.0 && lambda < 1.0))
      throw std::invalid_argument("RunningPower: lambda must be in (0,1)");
    if (!(initial >= 0.0))
      throw std::invalid_argument("RunningPower: initial value must be >= 0");
  }

  double update(double x) {
    value_ = lambda_ * value_ + (1.0 - lambda_) * x * x;
    return value_;
  }

  double value() const { return value_; }
  double forgetting() const { return lambda_; }
  void set_value(double v) { value_ = v; }

 private:
  double lambda_;
  double value_;
};

inline constexpr double kNseFloorDb = -100.0;

// Normalized squared error, 10*log10(sum e^2 / sum d^2), floored so the
// metric stays total on perfect cancellation.
inline double nse_db(std::span<const double> error, std::span<const double> disturbance,
                     double floor_db = kNseFloorDb) {
  if (error.empty() || error.size() != disturbance.size())
    throw std::invalid_argument("nse_db: windows must be non-empty and equal length");
  double se = 0.0, sd = 0.0;
  for (double v : error) se += v * v;
  for (double v : disturbance) sd += v * v;
  if (!(sd > 0.0)) throw std::invalid_argument("nse_db: disturbance window has zero energy");
  if (se <= 0.0) return floor_db;
  const double nse = 10.0 * std::log10(se / sd);
  return nse < floor_db ? floor_db : nse;
}

struct NsePoint {
  std::size_t end_sample;  // exclusive end index of the window
  double nse_db;
};

// NSE over consecutive non-overlapping windows; a trailing partial window
// is dropped. Windows whose disturbance energy is zero are skipped.
inline std::vector<NsePoint> nse_curve(std::span<const double> error,
                                       std::span<const double> disturbance,
                                       std::size_t window, double floor_db = kNseFloorDb) {
  if (window == 0) throw std::invalid_argument("nse_curve: window must be >= 1");
  if (error.size() != disturbance.size())
    throw std::invalid_argument("nse_curve: traces must have equal length");
  std::vector<NsePoint> out;
  for (std::size_t start = 0; start + window <= error.size(); start += window) {
    double sd = 0.0;
    for (std::size_t i = start; i < start + window; ++i) sd += disturbance[i] * disturbance[i];
    if (!(sd > 0.0)) continue;
    out.push_back({start + window,
                   nse_db(error.subspan(start, window), disturbance.subspan(start, window),
                          floor_db)});
  }
  return out;
}

inline constexpr std::size_t kNeverConverged = std::numeric_limits<std::size_t>::max();

// First end_sample from which every later point of the curve stays at or
// below threshold_db; kNeverConverged if the curve never settles there.
inline std::size_t first_sustained_below(const std::vector<NsePoint>& curve,
                                         double threshold_db) {
  std::size_t idx = kNeverConverged;
  for (const auto& p : curve) {
    if (p.nse_db <= threshold_db) {
      if (idx == kNeverConverged) idx = p.end_sample;
    } else {
      idx = kNeverConverged;
    }
  }
  return idx;
}

}  // namespace ancsim
