#pragma once

#include <memory>
#include <string>

#include "emfg/model.hpp"

namespace emfg {

/// Scalar coupling choices for the density cost f and terminal cost g.
enum class Coupling { Log, Identity };

Coupling coupling_from_string(const std::string& s);
std::string to_string(Coupling c);

/// Separated quadratic Hamiltonian with logarithmic coupling:
///   H = |p|^2/2 + V(x) - log m,  B = m p,  g = log m,
///   V = kappa_v cos(2 pi x_1),   m0 = 1 + m0_amplitude cos(2 pi x_1).
struct QuadLogParams {
  double kappa_v = 0.1;
  double m0_amplitude = 0.2;
  double C0 = 4.0;
};
ModelPtr make_quad_log(int d, const QuadLogParams& params = {});

/// Congestion model:
///   H = |p|^2 / (2 (m+c0)^alpha) - V(x) - f(m),
///   B = m p / (m+c0)^alpha,
/// with f strictly increasing. alpha in (0,2) gives the elliptic regime;
/// larger alpha is constructible so the certificate engine can expose the
/// ellipticity loss.
struct CongestionParams {
  double alpha = 1.0;
  double c0 = 1.0;
  double kappa_v = 0.1;
  double m0_amplitude = 0.2;
  Coupling f = Coupling::Log;
  Coupling g = Coupling::Log;
  double C0 = 4.0;
};
ModelPtr make_congestion(int d, const CongestionParams& params = {});

/// Separated Hamiltonian with configurable superlinear growth:
///   H = (1/gamma) (1+|p|^2)^(gamma/2) + V(x) - f(m),  B = m D_pH.
struct PowerParams {
  double gamma = 2.0;
  double kappa_v = 0.1;
  double m0_amplitude = 0.2;
  Coupling f = Coupling::Log;
  Coupling g = Coupling::Log;
  double C0 = 4.0;
};
ModelPtr make_power(int d, const PowerParams& params = {});

}  // namespace emfg
