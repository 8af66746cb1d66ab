#include "emfg/reform.hpp"

#include <algorithm>
#include <cmath>

namespace emfg {

namespace {

constexpr int kMaxExpansions = 200;
constexpr int kNewtonPolish = 3;
constexpr double kBisectRelWidth = 1e-13;

double inversion_tol(double s) { return 1e-11 * (1.0 + std::abs(s)); }

}  // namespace

double invert_h_numeric(const Model& model, const Vec& x, const Vec& p, double s, double warm) {
  auto f = [&](double m) { return model.hamiltonian(x, p, m) - s; };

  double mid = std::clamp(warm, 1e-10, 1e10);
  double fm = f(mid);
  if (!std::isfinite(fm)) {
    mid = 1.0;
    fm = f(mid);
  }

  // H is strictly decreasing in m: f >= 0 to the left of the root.
  double lo, hi, flo, fhi;
  if (fm >= 0.0) {
    lo = mid;
    flo = fm;
    hi = mid;
    fhi = fm;
    int k = 0;
    while (fhi > 0.0) {
      if (++k > kMaxExpansions) throw InversionError(InversionError::Kind::NoBracket, x, p, s);
      hi *= 2.0;
      fhi = f(hi);
      if (!std::isfinite(fhi)) throw InversionError(InversionError::Kind::NoBracket, x, p, s);
    }
  } else {
    hi = mid;
    fhi = fm;
    lo = mid;
    flo = fm;
    int k = 0;
    while (flo < 0.0) {
      if (++k > kMaxExpansions) throw InversionError(InversionError::Kind::NoBracket, x, p, s);
      lo *= 0.5;
      flo = f(lo);
      if (!std::isfinite(flo)) throw InversionError(InversionError::Kind::NoBracket, x, p, s);
    }
  }

  while (hi - lo > kBisectRelWidth * hi) {
    const double m = 0.5 * (lo + hi);
    if (m <= lo || m >= hi) break;  // interval at rounding resolution
    const double v = f(m);
    if (v >= 0.0)
      lo = m;
    else
      hi = m;
  }

  double m = 0.5 * (lo + hi);
  for (int k = 0; k < kNewtonPolish; ++k) {
    const double v = f(m);
    if (std::abs(v) <= 0.1 * inversion_tol(s)) break;
    const double hm = model.hamiltonian_m(x, p, m);
    if (!(hm < 0.0) || !std::isfinite(hm)) break;
    const double next = m - v / hm;
    if (!(next > lo * 0.5) || !(next < hi * 2.0) || !std::isfinite(next)) break;
    m = next;
  }

  if (!(m >= kDensityFloor)) throw InversionError(InversionError::Kind::DensityUnderflow, x, p, s);
  return m;
}

double invert_h(const Model& model, const Vec& x, const Vec& p, double s, double warm) {
  if (auto closed = model.closed_form_inverse(x, p, s)) {
    const double m = *closed;
    if (std::isfinite(m) && m > 0.0 &&
        std::abs(model.hamiltonian(x, p, m) - s) <= inversion_tol(s)) {
      if (!(m >= kDensityFloor))
        throw InversionError(InversionError::Kind::DensityUnderflow, x, p, s);
      return m;
    }
  }
  return invert_h_numeric(model, x, p, s, warm);
}

PointAssembly assemble_point(const Model& model, const GradientPoint& gp, double warm) {
  const int d = model.dim();
  PointAssembly pa;
  pa.m = invert_h(model, gp.x, gp.p, gp.s, warm);
  pa.rec = model.eval(gp.x, gp.p, pa.m);
  const EvalRecord& r = pa.rec;

  pa.Yplus = r.Bm + r.dpH;
  pa.Yminus = r.Bm - r.dpH;

  Vec v(d + 1);
  v.head(d) = 0.5 * pa.Yplus;
  v(d) = -1.0;
  Mat A = v * v.transpose();
  A.topLeftCorner(d, d) -=
      0.25 * pa.Yminus * pa.Yminus.transpose() + r.Hm * r.dpB;
  pa.A = symmetrized(A);

  pa.b = -r.dxH.dot(r.Bm) + r.Hm * r.divxB;
  return pa;
}

Mat assemble_A(const Model& model, const GradientPoint& gp, double warm) {
  return assemble_point(model, gp, warm).A;
}

double assemble_b(const Model& model, const GradientPoint& gp, double warm) {
  return assemble_point(model, gp, warm).b;
}

double boundary_value(const Model& model, TimeFace face, const GradientPoint& gp, double warm) {
  if (face == TimeFace::Initial) {
    const double m0 = model.initial_density(gp.x).value;
    return -gp.s + model.hamiltonian(gp.x, gp.p, m0);
  }
  const double m = invert_h(model, gp.x, gp.p, gp.s, warm);
  return gp.z - model.terminal_cost(gp.x, m).g;
}

BoundaryGradient boundary_gradient(const Model& model, TimeFace face, const GradientPoint& gp,
                                   double warm) {
  BoundaryGradient out;
  if (face == TimeFace::Initial) {
    const double m0 = model.initial_density(gp.x).value;
    const EvalRecord r = model.eval(gp.x, gp.p, m0);
    out.dz = 0.0;
    out.dp = r.dpH;
    out.ds = -1.0;
    return out;
  }
  const double m = invert_h(model, gp.x, gp.p, gp.s, warm);
  const EvalRecord r = model.eval(gp.x, gp.p, m);
  const TerminalCost tc = model.terminal_cost(gp.x, m);
  // m = H^{-1}(x, p, s):  dm/dp = -D_pH / H_m,  dm/ds = 1 / H_m.
  out.dz = 1.0;
  out.dp = (tc.gm / r.Hm) * r.dpH;
  out.ds = -tc.gm / r.Hm;
  return out;
}

double ellipticity_gap(const Model& model, const Vec& x, const Vec& p, double m) {
  const EvalRecord r = model.eval(x, p, m);
  const Vec ym = r.Bm - r.dpH;
  const double c0 = model.constants().C0;
  const Mat gapmat =
      symmetrized(-4.0 * r.Hm * r.dpB) - (1.0 + 1.0 / c0) * ym * ym.transpose();
  return min_eigenvalue(gapmat);
}

namespace {

/// Direction-gradient of a scalar coefficient F(x, p, m(x,p,s)) with respect
/// to q = (p, s), where m follows the inverted density:
/// dm in direction (p^, s^) equals (s^ - D_pH . p^) / H_m.
Vec direction_gradient(const Vec& dpF, double Fm, const EvalRecord& r) {
  const Index d = r.dpH.size();
  Vec g(d + 1);
  const double ratio = Fm / r.Hm;
  g.head(d) = dpF - ratio * r.dpH;
  g(d) = ratio;
  return g;
}

}  // namespace

Linearization linearize(const PointAssembly& pa, const GradientPoint& gp, const Mat& hess) {
  const EvalRecord& r = pa.rec;
  const Index d = r.dpH.size();
  Linearization out;

  const Mat S = hess.topLeftCorner(d, d);          // spatial Hessian block
  const Vec dxut = hess.block(0, d, d, 1);         // mixed space-time column
  const Vec wplus = -dxut + 0.5 * S * pa.Yplus;
  const Vec sym_minus = S * pa.Yminus;
  const double trBS = (r.dpB * S).trace();

  const Mat dpYp = r.dpBm + r.dppH;  // row j: p-gradient of Y+_j
  const Mat dpYm = r.dpBm - r.dppH;
  const Vec Ypm = r.Bmm + r.dpHm;
  const Vec Ymm = r.Bmm - r.dpHm;

  // Direction-gradient of tr(D_pB S): p-part contracts the flux p-Hessian
  // tensor with S, the m-part is tr(D_pBm S).
  Vec dp_trBS = Vec::Zero(d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j)
      dp_trBS += S(j, i) * r.dppB.slice(i).row(j).transpose();
  const double trBmS = (r.dpBm * S).trace();

  Vec cq = Vec::Zero(d + 1);
  // Sum_j wplus_j * Gq(Y+_j)  -  (1/2) Sum_j (S Y-)_j * Gq(Y-_j)
  cq += direction_gradient(dpYp.transpose() * wplus, Ypm.dot(wplus), r);
  cq -= 0.5 * direction_gradient(dpYm.transpose() * sym_minus, Ymm.dot(sym_minus), r);
  // - Gq(H_m) tr(D_pB S)  -  H_m Gq(tr(D_pB S))
  cq -= trBS * direction_gradient(r.dpHm, r.Hmm, r);
  cq -= r.Hm * direction_gradient(dp_trBS, trBmS, r);
  out.dq_quasilinear = cq;

  // b = -D_xH . B_m + H_m div_x B.
  Vec dp_divxB = Vec::Zero(d);
  for (Index i = 0; i < d; ++i) dp_divxB += r.dxpB.slice(i).row(i).transpose();
  const double divxBm = r.dxBm.trace();

  Vec cb = Vec::Zero(d + 1);
  for (Index j = 0; j < d; ++j) {
    cb -= r.Bm(j) * direction_gradient(r.dxpH.row(j).transpose(), r.dxHm(j), r);
    cb -= r.dxH(j) * direction_gradient(r.dpBm.row(j).transpose(), r.Bmm(j), r);
  }
  cb += r.divxB * direction_gradient(r.dpHm, r.Hmm, r);
  cb += r.Hm * direction_gradient(dp_divxB, divxBm, r);
  out.dq_source = cb;

  // Spatial-derivative diagnostics: the same chain rule with
  // dm/dx_i = -H_{x_i} / H_m.
  auto grad_x = [&](Index i, double Fxi, double Fm) { return Fxi - Fm / r.Hm * r.dxH(i); };

  out.trace_Ax = Vec::Zero(d);
  for (Index i = 0; i < d; ++i) {
    double acc = 0.0;
    for (Index j = 0; j < d; ++j) {
      const double yp_xi = r.dxBm(j, i) + r.dxpH(i, j);
      const double ym_xi = r.dxBm(j, i) - r.dxpH(i, j);
      acc += wplus(j) * grad_x(i, yp_xi, Ypm(j));
      acc -= 0.5 * sym_minus(j) * grad_x(i, ym_xi, Ymm(j));
    }
    acc -= grad_x(i, r.dxHm(i), r.Hmm) * trBS;
    double tr_dxB_S = 0.0;
    for (Index j = 0; j < d; ++j) tr_dxB_S += r.dxpB.slice(j).row(i).dot(S.col(j));
    acc -= r.Hm * grad_x(i, tr_dxB_S, trBmS);
    out.trace_Ax(i) = acc;
  }

  double dxb = 0.0;
  for (Index i = 0; i < d; ++i) {
    double acc = 0.0;
    for (Index j = 0; j < d; ++j) {
      acc -= r.Bm(j) * grad_x(i, r.dxxH(j, i), r.dxHm(j));
      acc -= r.dxH(j) * grad_x(i, r.dxBm(j, i), r.Bmm(j));
    }
    acc += r.divxB * grad_x(i, r.dxHm(i), r.Hmm);
    double dx_divxB = 0.0;
    for (Index j = 0; j < d; ++j) dx_divxB += r.dxxB.slice(j)(j, i);
    acc += r.Hm * grad_x(i, dx_divxB, divxBm);
    dxb += acc * gp.p(i);
  }
  out.dx_source_dot_p = dxb;

  return out;
}

}  // namespace emfg
