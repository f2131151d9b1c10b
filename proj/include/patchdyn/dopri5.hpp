#pragma once

// Embedded Dormand-Prince 5(4) stepper with FSAL, PI-free step control,
// optional positivity enforcement by step rejection and an externally
// supplied step ceiling (used for explicit diffusion limits).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

namespace patchdyn {

struct StepperOptions {
  double rtol = 1e-8;
  double atol = 1e-8;
  double initial_step = 0;     ///< 0 selects a starting step automatically
  double min_step = 1e-13;     ///< relative to max(1, |t|)
  bool reject_negative = true; ///< reject steps producing any component < 0
  long max_steps = 50'000'000;
};

enum class StepStatus { Reached, Stopped, StepFailure };

struct StepperStats {
  long accepted = 0;
  long rejected = 0;
  long rhs_evaluations = 0;
  std::size_t failure_index = 0;  ///< worst component at the last rejection
};

namespace dp5 {
// Butcher tableau
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// fifth minus fourth order weights
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
}  // namespace dp5

/// Vec is any fixed- or dynamic-size container of doubles with size() and
/// operator[] that is copy-constructible (std::array, std::vector).
template <class Vec>
class DormandPrince {
 public:
  explicit DormandPrince(StepperOptions opt = {}) : opt_(opt) {}

  [[nodiscard]] const StepperStats& stats() const { return stats_; }
  [[nodiscard]] double step_size() const { return h_; }
  [[nodiscard]] const StepperOptions& options() const { return opt_; }

  /// Advances (t, y) to t_end. rhs(t, y, dydt); ceiling(y) returns the largest
  /// admissible step; observer(t, y) is called after each accepted step and
  /// returns false to stop early. The step size carries across calls.
  template <class Rhs, class Ceiling, class Observer>
  StepStatus advance(Rhs&& rhs, double& t, Vec& y, double t_end, Ceiling&& ceiling,
                     Observer&& observer) {
    resize_like(y);
    rhs(t, y, k1_);
    ++stats_.rhs_evaluations;
    if (h_ <= 0) h_ = initial_step(rhs, t, y, t_end);

    while (t < t_end) {
      if (stats_.accepted + stats_.rejected >= opt_.max_steps) return StepStatus::StepFailure;
      const double floor = opt_.min_step * std::max(1.0, std::abs(t));
      double h = std::min(h_, ceiling(y));
      const bool last = t + h >= t_end;
      if (last) h = t_end - t;
      if (h < floor && !last) return StepStatus::StepFailure;

      attempt(rhs, t, y, h);
      const double err = error_norm(y);
      bool negative = false;
      if (opt_.reject_negative) {
        for (std::size_t i = 0; i < y.size(); ++i) {
          if (ynew_[i] < 0) {
            negative = true;
            stats_.failure_index = i;
            break;
          }
        }
      }
      if (!std::isfinite(err) || err > 1.0 || negative) {
        ++stats_.rejected;
        const double fac = negative || !std::isfinite(err)
                               ? 0.5
                               : std::max(0.2, 0.9 * std::pow(err, -0.2));
        h_ = h * fac;
        if (h_ < floor) return StepStatus::StepFailure;
        continue;
      }
      ++stats_.accepted;
      t = last ? t_end : t + h;
      std::swap(y, ynew_);
      std::swap(k1_, k7_);  // FSAL
      const double grow = err == 0 ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(err, -0.2)));
      // keep the controller step when the last step was clipped to t_end
      if (!last || h * grow > h_) h_ = h * grow;
      if (!observer(t, static_cast<const Vec&>(y))) return StepStatus::Stopped;
    }
    return StepStatus::Reached;
  }

  template <class Rhs>
  StepStatus advance(Rhs&& rhs, double& t, Vec& y, double t_end) {
    return advance(
        rhs, t, y, t_end, [](const Vec&) { return std::numeric_limits<double>::infinity(); },
        [](double, const Vec&) { return true; });
  }

 private:
  void resize_like(const Vec& y) {
    if (k1_.size() != y.size()) {
      k1_ = k2_ = k3_ = k4_ = k5_ = k6_ = k7_ = tmp_ = ynew_ = y;
    }
  }

  template <class Rhs>
  double initial_step(Rhs& rhs, double t, const Vec& y, double t_end) {
    if (opt_.initial_step > 0) return opt_.initial_step;
    double d0 = 0, d1 = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double sc = opt_.atol + opt_.rtol * std::abs(y[i]);
      d0 = std::max(d0, std::abs(y[i]) / sc);
      d1 = std::max(d1, std::abs(k1_[i]) / sc);
    }
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, std::abs(t_end - t));
    (void)rhs;
    return std::max(h0, 1e-12);
  }

  template <class Rhs>
  void attempt(Rhs& rhs, double t, const Vec& y, double h) {
    using namespace dp5;
    const std::size_t n = y.size();
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + h * a21 * k1_[i];
    rhs(t + c2 * h, tmp_, k2_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + h * (a31 * k1_[i] + a32 * k2_[i]);
    rhs(t + c3 * h, tmp_, k3_);
    for (std::size_t i = 0; i < n; ++i)
      tmp_[i] = y[i] + h * (a41 * k1_[i] + a42 * k2_[i] + a43 * k3_[i]);
    rhs(t + c4 * h, tmp_, k4_);
    for (std::size_t i = 0; i < n; ++i)
      tmp_[i] = y[i] + h * (a51 * k1_[i] + a52 * k2_[i] + a53 * k3_[i] + a54 * k4_[i]);
    rhs(t + c5 * h, tmp_, k5_);
    for (std::size_t i = 0; i < n; ++i)
      tmp_[i] = y[i] + h * (a61 * k1_[i] + a62 * k2_[i] + a63 * k3_[i] + a64 * k4_[i] +
                            a65 * k5_[i]);
    rhs(t + h, tmp_, k6_);
    for (std::size_t i = 0; i < n; ++i)
      ynew_[i] = y[i] + h * (b1 * k1_[i] + b3 * k3_[i] + b4 * k4_[i] + b5 * k5_[i] +
                             b6 * k6_[i]);
    rhs(t + h, ynew_, k7_);
    stats_.rhs_evaluations += 6;
    for (std::size_t i = 0; i < n; ++i)
      tmp_[i] = h * (e1 * k1_[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] + e6 * k6_[i] +
                     e7 * k7_[i]);
  }

  // RMS of the scaled error estimate held in tmp_
  double error_norm(const Vec& y) {
    const std::size_t n = y.size();
    double sum = 0, worst = -1;
    for (std::size_t i = 0; i < n; ++i) {
      const double sc = opt_.atol + opt_.rtol * std::max(std::abs(y[i]), std::abs(ynew_[i]));
      const double r = tmp_[i] / sc;
      sum += r * r;
      if (r * r > worst) {
        worst = r * r;
        worst_ = i;
      }
    }
    const double err = std::sqrt(sum / static_cast<double>(n));
    if (err > 1.0) stats_.failure_index = worst_;
    return err;
  }

  StepperOptions opt_;
  StepperStats stats_;
  double h_ = 0;
  std::size_t worst_ = 0;
  Vec k1_{}, k2_{}, k3_{}, k4_{}, k5_{}, k6_{}, k7_{}, tmp_{}, ynew_{};
};

}  // namespace patchdyn
