#pragma once

// Test-only oracles, kept independent of the library code paths they check.

#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>

#include "emfg/model.hpp"

namespace emfg::test {

/// Plain bisection on the strictly decreasing map m -> H(x,p,m) - s; no
/// warm starts, no Newton polish, no closed forms.
inline double oracle_invert(const Model& model, const Vec& x, const Vec& p, double s) {
  auto f = [&](double m) { return model.hamiltonian(x, p, m) - s; };
  double lo = 1.0, hi = 1.0;
  int guard = 0;
  while (f(lo) < 0.0) {
    lo *= 0.5;
    if (++guard > 2000) throw std::runtime_error("oracle_invert: no lower bracket");
  }
  guard = 0;
  while (f(hi) > 0.0) {
    hi *= 2.0;
    if (++guard > 2000) throw std::runtime_error("oracle_invert: no upper bracket");
  }
  for (int k = 0; k < 400 && hi - lo > 1e-16 * hi; ++k) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) >= 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Centered difference of a scalar function of one real argument.
inline double fd_derivative(const std::function<double(double)>& f, double at,
                            double h = 1e-6) {
  return (f(at + h) - f(at - h)) / (2.0 * h);
}

/// Deterministic smooth space-time test functions u(x, t) with analytic
/// derivatives, for exercising the pointwise linearization off the grid.
struct SmoothFunction1d {
  double a = 0.3, b = 0.2, c = 0.15, omega = 2.0 * M_PI;

  double value(double x, double t) const {
    return a * std::cos(omega * x) * (1.0 + t) + b * t * t + c * std::sin(omega * x);
  }
  double dx(double x, double t) const {
    return -a * omega * std::sin(omega * x) * (1.0 + t) + c * omega * std::cos(omega * x);
  }
  double dt(double x, double t) const { return a * std::cos(omega * x) + 2.0 * b * t; }
  double dxx(double x, double t) const {
    return -a * omega * omega * std::cos(omega * x) * (1.0 + t) -
           c * omega * omega * std::sin(omega * x);
  }
  double dxt(double x, double) const { return -a * omega * std::sin(omega * x); }
  double dtt(double, double) const { return 2.0 * b; }
};

}  // namespace emfg::test
