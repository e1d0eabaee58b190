#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace ags {

struct IntegratorOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double initial_step = 0.0;  // 0 selects automatically
  double min_step = 1e-13;
  long max_steps = 2'000'000;
  int error_dims = -1;  // leading components under error control; -1 = all
};

class PropagationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Adaptive Dormand-Prince 5(4) with FSAL and standard PI-free step control.
///
/// `rhs(t, y, dydt)` evaluates the vector field. `observer(t, y)` is called
/// after every accepted step; returning false stops integration early (the
/// returned time then marks where it stopped).
template <int Dim>
class DormandPrince {
 public:
  using State = Eigen::Matrix<double, Dim, 1>;

  explicit DormandPrince(IntegratorOptions opts) : opts_(opts) {}

  template <class Rhs, class Observer>
  State integrate(Rhs&& rhs, State y, double t0, double t1, Observer&& observer,
                  double* t_stop = nullptr) {
    steps_ = 0;
    if (t1 == t0) {
      if (t_stop) *t_stop = t0;
      return y;
    }
    const double dir = t1 > t0 ? 1.0 : -1.0;
    const double span = std::abs(t1 - t0);
    const int n_err = opts_.error_dims < 0 ? static_cast<int>(y.size()) : opts_.error_dims;

    State k1, k2, k3, k4, k5, k6, k7, ytmp, ynew, err;
    double t = t0;
    rhs(t, y, k1);

    double h = opts_.initial_step > 0.0 ? opts_.initial_step : initial_step(rhs, t, y, k1, dir, n_err);
    h = std::min(h, span);

    while (true) {
      const double remaining = std::abs(t1 - t);
      if (remaining <= 1e-15 * std::max(1.0, std::abs(t1))) break;
      bool last = false;
      if (h >= remaining) {
        h = remaining;
        last = true;
      }
      if (h < opts_.min_step && !last)
        throw PropagationError("step size underflow at t = " + std::to_string(t));
      if (++steps_ > opts_.max_steps) throw PropagationError("step limit exceeded");

      const double hs = dir * h;
      ytmp = y + hs * (a21 * k1);
      rhs(t + c2 * hs, ytmp, k2);
      ytmp = y + hs * (a31 * k1 + a32 * k2);
      rhs(t + c3 * hs, ytmp, k3);
      ytmp = y + hs * (a41 * k1 + a42 * k2 + a43 * k3);
      rhs(t + c4 * hs, ytmp, k4);
      ytmp = y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
      rhs(t + c5 * hs, ytmp, k5);
      ytmp = y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
      rhs(t + hs, ytmp, k6);
      ynew = y + hs * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
      const double t_new = last ? t1 : t + hs;
      rhs(t_new, ynew, k7);
      err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

      double acc = 0.0;
      for (int i = 0; i < n_err; ++i) {
        const double sc = opts_.abs_tol + opts_.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
        const double r = err[i] / sc;
        acc += r * r;
      }
      const double err_norm = std::sqrt(acc / n_err);
      if (!std::isfinite(err_norm)) {
        h *= 0.2;
        continue;
      }
      if (err_norm <= 1.0) {
        t = t_new;
        y = ynew;
        k1 = k7;
        if (!observer(t, y)) {
          if (t_stop) *t_stop = t;
          return y;
        }
        if (last) break;
        const double fac = err_norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);
        h *= fac;
      } else {
        h *= std::max(0.2, 0.9 * std::pow(err_norm, -0.2));
      }
    }
    if (t_stop) *t_stop = t1;
    last_step_ = h;
    return y;
  }

  template <class Rhs>
  State integrate(Rhs&& rhs, const State& y, double t0, double t1) {
    return integrate(std::forward<Rhs>(rhs), y, t0, t1, [](double, const State&) { return true; });
  }

  long steps() const { return steps_; }

 private:
  template <class Rhs>
  double initial_step(Rhs& rhs, double t, const State& y, const State& f0, double dir, int n_err) {
    // Hairer, Norsett & Wanner, Solving ODEs I, II.4
    double d0 = 0.0, d1 = 0.0;
    for (int i = 0; i < n_err; ++i) {
      const double sc = opts_.abs_tol + opts_.rel_tol * std::abs(y[i]);
      d0 += (y[i] / sc) * (y[i] / sc);
      d1 += (f0[i] / sc) * (f0[i] / sc);
    }
    d0 = std::sqrt(d0 / n_err);
    d1 = std::sqrt(d1 / n_err);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    State y1 = y + dir * h0 * f0;
    State f1;
    rhs(t + dir * h0, y1, f1);
    double d2 = 0.0;
    for (int i = 0; i < n_err; ++i) {
      const double sc = opts_.abs_tol + opts_.rel_tol * std::abs(y[i]);
      const double r = (f1[i] - f0[i]) / sc;
      d2 += r * r;
    }
    d2 = std::sqrt(d2 / n_err) / h0;
    const double h1 = std::max(d1, d2) <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                                  : std::pow(0.01 / std::max(d1, d2), 0.2);
    return std::min(100.0 * h0, h1);
  }

  IntegratorOptions opts_;
  long steps_ = 0;
  double last_step_ = 0.0;

  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                          a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
};

}  // namespace ags
