#pragma once

#include "emfg/model.hpp"
#include "emfg/types.hpp"

namespace emfg {

/// Value of the space-time gradient (and of u itself) at a point.
/// p holds the spatial gradient, s the time derivative; z is the value of u
/// and is consumed only by the terminal boundary operator.
struct GradientPoint {
  Vec x;
  Vec p;
  double s = 0.0;
  double z = 0.0;
};

/// Solves H(x, p, m) = s for the density m > 0.
///
/// Uses the model's registered closed form when available (verified against
/// the equation and fallen back on if it misses tolerance); the numeric path
/// warm-starts a bracket at `warm`, expands it by doubling/halving up to 200
/// times, bisects to relative width 1e-13 and polishes with up to 3 Newton
/// steps. Postcondition: |H(x,p,m) - s| <= 1e-11 (1 + |s|).
double invert_h(const Model& model, const Vec& x, const Vec& p, double s, double warm = 1.0);

/// The bracketing/bisection path regardless of any registered closed form.
double invert_h_numeric(const Model& model, const Vec& x, const Vec& p, double s,
                        double warm = 1.0);

/// Pointwise data of the quasilinear operator at a gradient point: the
/// symmetrized coefficient matrix A, the scalar source b, the inverted
/// density and the vectors Y+- = B_m +- D_pH, plus the full derivative
/// record they came from.
struct PointAssembly {
  Mat A;        // (d+1) x (d+1), symmetric; time-time entry is exactly 1
  double b = 0.0;
  double m = 0.0;
  Vec Yplus;
  Vec Yminus;
  EvalRecord rec;
};

PointAssembly assemble_point(const Model& model, const GradientPoint& gp, double warm = 1.0);

Mat assemble_A(const Model& model, const GradientPoint& gp, double warm = 1.0);
double assemble_b(const Model& model, const GradientPoint& gp, double warm = 1.0);

enum class TimeFace { Initial, Terminal };

/// Oblique boundary operator: -s + H(x, p, m0(x)) on the initial face,
/// z - g(x, H^{-1}(x, p, s)) on the terminal face.
double boundary_value(const Model& model, TimeFace face, const GradientPoint& gp,
                      double warm = 1.0);

struct BoundaryGradient {
  double dz = 0.0;
  Vec dp;
  double ds = 0.0;  // -1 on the initial face, -g_m/H_m > 0 on the terminal face
};

BoundaryGradient boundary_gradient(const Model& model, TimeFace face, const GradientPoint& gp,
                                   double warm = 1.0);

/// Smallest eigenvalue of
///   sym(-4 H_m D_pB) - (1 + 1/C0) (B_m - D_pH) (x) (B_m - D_pH);
/// positivity certifies strict ellipticity of the reformulated operator at
/// the point.
double ellipticity_gap(const Model& model, const Vec& x, const Vec& p, double m);

/// Coefficients of the linearized operator at a point, for a frozen value of
/// the space-time Hessian. dq_* are (d+1)-vectors c with directional
/// derivative c . (p_hat, s_hat); trace_Ax and dx_source_dot_p are the
/// spatial-derivative diagnostics of the same coefficient fields.
struct Linearization {
  Vec dq_quasilinear;        // direction-gradient of tr(A(x, Du) D^2u)
  Vec dq_source;             // direction-gradient of b(x, Du)
  Vec trace_Ax;              // tr(dA/dx_i . D^2u), i = 1..d
  double dx_source_dot_p = 0.0;  // D_x b . p
};

Linearization linearize(const PointAssembly& pa, const GradientPoint& gp, const Mat& hess);

inline Linearization linearize(const Model& model, const GradientPoint& gp, const Mat& hess,
                               double warm = 1.0) {
  return linearize(assemble_point(model, gp, warm), gp, hess);
}

}  // namespace emfg
