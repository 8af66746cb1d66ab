#include "emfg/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "emfg/reform.hpp"

namespace emfg {

namespace {

constexpr double kEigSlack = -1e-10;  // roundoff slack for matrix inequalities

struct CheckAccumulator {
  CheckRecord rec;

  explicit CheckAccumulator(std::string name) {
    rec.name = std::move(name);
    rec.worst_margin = std::numeric_limits<double>::infinity();
  }

  void observe(double margin, const SamplePoint& pt) {
    ++rec.samples;
    if (margin < rec.worst_margin) {
      rec.worst_margin = margin;
      rec.worst_point = pt;
    }
    if (margin < kEigSlack) ++rec.violations;
  }
};

double pow_growth(double base, double expo) { return std::pow(base, expo); }

}  // namespace

long AssumptionReport::total_violations() const {
  long total = 0;
  for (const auto& c : checks) total += c.violations;
  return total;
}

const CheckRecord* AssumptionReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

AssumptionReport check_assumptions(const Model& model, const CheckBox& box, int n_samples) {
  if (n_samples <= 0) throw ConfigError("check_assumptions: sample count must be positive");
  const int d = model.dim();
  const ModelConstants& cst = model.constants();
  const double C0 = cst.C0;
  const double g = cst.gamma, g1 = cst.gamma1, g2 = cst.gamma2;
  const Mat I = Mat::Identity(d, d);

  CheckAccumulator m1("M1"), h1("H1"), h2("H2"), hm1("HM1"), hm2("HM2"), hx1("HX1"),
      hx2("HX2"), hx3("HX3"), b1("B1"), b2("B2"), bm("BM"), bx1("BX1"), bx2("BX2"),
      bx3("BX3"), gx("GX"), e1("E1"), e2("E2"), e3("E3"), expo("exponent-condition");

  const auto points = sample_box(d, n_samples, box.p_max, box.m_min, box.m_max);
  for (const auto& pt : points) {
    const EvalRecord r = model.eval(pt.x, pt.p, pt.m);
    const double psi = cst.psi(pt.m);
    const double cb = cst.Cbar(pt.m);
    const double pn = pt.p.norm();
    const double onep = 1.0 + pn;

    h1.observe(std::min(min_eigenvalue(symmetrized(r.dppH) -
                                       (psi / C0) * pow_growth(onep, g - 2.0) * I),
                        min_eigenvalue(C0 * psi * pow_growth(onep, g - 2.0) * I -
                                       symmetrized(r.dppH))),
               pt);
    h2.observe(std::min(C0 * psi * pow_growth(onep, g - 1.0) - r.dpH.norm(),
                        r.dpH.dot(pt.p) - (1.0 + 1.0 / C0) * r.H + cb),
               pt);
    hm1.observe(std::min(-pt.m * r.Hm - (psi / C0) * pow_growth(pn, g1),
                         C0 * psi * pow_growth(pn, g1) + cb + pt.m * r.Hm),
                pt);
    hm2.observe(std::min(-C0 * r.Hm - std::abs(pt.m * r.Hmm),
                         -C0 * r.Hm - pn * r.dpHm.norm()),
                pt);
    hx1.observe(std::min({C0 * psi * pow_growth(onep, g2) - r.dxH.norm(),
                          C0 * psi * pow_growth(onep, g2) - spectral_norm(r.dxxH),
                          C0 * psi * pow_growth(onep, g2 - 1.0) - spectral_norm(r.dxpH)}),
                pt);
    hx2.observe(C0 * psi * pow_growth(onep, g2) - pt.m * r.dxHm.norm(), pt);

    b1.observe(std::min(min_eigenvalue(symmetrized(r.dpB) -
                                       (pt.m * psi / C0) * pow_growth(pn, g - 2.0) * I),
                        min_eigenvalue(C0 * pt.m * psi * pow_growth(onep, g - 2.0) * I -
                                       symmetrized(r.dpB))),
               pt);
    b2.observe(std::min({C0 * psi * pow_growth(onep, g - 1.0) - r.Bm.norm(),
                         C0 * psi * pow_growth(onep, g - 2.0) - spectral_norm(r.dpBm),
                         C0 * pt.m * psi * pow_growth(onep, g - 3.0) -
                             r.dppB.frobenius_norm()}),
               pt);
    bm.observe(-C0 * onep * r.Hm - r.Bmm.norm(), pt);
    bx1.observe(std::min({pt.m * C0 * psi * pow_growth(onep, g2 - 1.0) - spectral_norm(r.dxB),
                          pt.m * C0 * psi * pow_growth(onep, g2 - 1.0) -
                              r.dxxB.frobenius_norm(),
                          C0 * psi * pow_growth(onep, g2 - 1.0) - spectral_norm(r.dxBm)}),
                pt);
    bx2.observe(C0 * pt.m * psi * pow_growth(onep, g2 - 2.0) - r.dxpB.frobenius_norm(), pt);

    // Rest-point (p = 0) controls.
    SamplePoint rest = pt;
    rest.p = Vec::Zero(d);
    const EvalRecord r0 = model.eval(rest.x, rest.p, rest.m);
    hx3.observe(C0 - r0.dxH.norm(), rest);
    bx3.observe(C0 * pt.m - spectral_norm(r0.dxB), rest);

    // Strict ellipticity.
    const Vec ym = r.Bm - r.dpH;
    e3.observe(min_eigenvalue(symmetrized(-4.0 * r.Hm * r.dpB) -
                              (1.0 + 1.0 / C0) * ym * ym.transpose()),
               pt);
  }

  // Initial density: positivity and unit mass on a spatial grid.
  {
    const int n = d == 1 ? 512 : 64;
    double mass = 0.0, min_m0 = std::numeric_limits<double>::infinity();
    SamplePoint worst;
    worst.p = Vec::Zero(d);
    worst.m = 1.0;
    long count = d == 1 ? n : n * n;
    for (long i = 0; i < count; ++i) {
      Vec x(d);
      if (d == 1)
        x(0) = double(i) / n;
      else {
        x(0) = double(i % n) / n;
        x(1) = double(i / n) / n;
      }
      const double v = model.initial_density(x).value;
      mass += v;
      if (v < min_m0) {
        min_m0 = v;
        worst.x = x;
      }
    }
    mass /= double(count);
    m1.observe(std::min(min_m0, 1e-8 - std::abs(mass - 1.0)), worst);
  }

  // Terminal-cost range: the attainable value band must not depend on x.
  {
    double lo_spread = 0.0, hi_spread = 0.0;
    SamplePoint worst;
    worst.p = Vec::Zero(d);
    for (double m_ext : {1e-6, 1e6}) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (int i = 0; i < 64; ++i) {
        Vec x = Vec::Zero(d);
        x(0) = i / 64.0;
        const double v = model.terminal_cost(x, m_ext).g;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      (m_ext < 1.0 ? lo_spread : hi_spread) = hi - lo;
      worst.m = m_ext;
    }
    gx.observe(1e-8 - std::max(lo_spread, hi_spread), worst);
  }

  // Coercivity proxies: H must keep growing along m -> 0, and the growth
  // envelope must keep falling along m -> infinity; total movement over a
  // ten-rung geometric ladder must exceed 1, and each rung must be monotone.
  {
    const auto probes = sample_box(d, 64, box.p_max, box.m_min, box.m_max);
    auto h_min = [&](double m) {
      double v = std::numeric_limits<double>::infinity();
      for (const auto& q : probes) v = std::min(v, model.hamiltonian(q.x, q.p, m));
      return v;
    };
    auto env_max = [&](double m) {
      double v = -std::numeric_limits<double>::infinity();
      const double psi = cst.psi(m);
      for (const auto& q : probes)
        v = std::max(v, model.hamiltonian(q.x, q.p, m) -
                            C0 * psi * pow_growth(q.p.norm(), g));
      return v;
    };
    SamplePoint lad;
    lad.x = Vec::Zero(d);
    lad.p = Vec::Zero(d);

    double prev = h_min(box.m_min), total = 0.0, worst_step = 0.0;
    bool first = true;
    for (double m = box.m_min / 4.0; m >= box.m_min / std::pow(4.0, 10); m /= 4.0) {
      const double cur = h_min(m);
      const double step = cur - prev;
      worst_step = first ? step : std::min(worst_step, step);
      first = false;
      total += step;
      prev = cur;
    }
    lad.m = box.m_min / std::pow(4.0, 10);
    e1.observe(std::min(worst_step, total - 1.0), lad);

    prev = env_max(box.m_max);
    total = 0.0;
    worst_step = 0.0;
    first = true;
    for (double m = box.m_max * 4.0; m <= box.m_max * std::pow(4.0, 10); m *= 4.0) {
      const double cur = env_max(m);
      const double step = prev - cur;
      worst_step = first ? step : std::min(worst_step, step);
      first = false;
      total += step;
      prev = cur;
    }
    lad.m = box.m_max * std::pow(4.0, 10);
    e2.observe(std::min(worst_step, total - 1.0), lad);
  }

  // Exponent relation between the growth orders (one record; it holds by
  // construction for models built through ModelConstants::validate).
  {
    SamplePoint pt;
    pt.x = Vec::Zero(d);
    pt.p = Vec::Zero(d);
    pt.m = 1.0;
    expo.observe(std::min({2.0 * g1 - g + 2.0 - g2, g1 - g2, g - g1, g - 1.0}), pt);
  }

  AssumptionReport report;
  for (auto* acc : {&m1, &h1, &h2, &hm1, &hm2, &hx1, &hx2, &hx3, &b1, &b2, &bm, &bx1, &bx2,
                    &bx3, &gx, &e1, &e2, &e3, &expo})
    report.checks.push_back(acc->rec);
  return report;
}

namespace {

/// Expanding-bracket bisection for a continuous strictly increasing map.
double monotone_inverse(const std::function<double(double)>& f, double target,
                        const std::string& label) {
  double lo = 1.0, hi = 1.0;
  double flo = f(lo), fhi = f(hi);
  int k = 0;
  while (flo > target) {
    if (++k > 200) throw RangeError(label, target);
    lo *= 0.5;
    flo = f(lo);
    if (!std::isfinite(flo)) throw RangeError(label, target);
  }
  k = 0;
  while (fhi < target) {
    if (++k > 200) throw RangeError(label, target);
    hi *= 2.0;
    fhi = f(hi);
    if (!std::isfinite(fhi)) throw RangeError(label, target);
  }
  while (hi - lo > 1e-13 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (f(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

BoundFunctions::BoundFunctions(ModelPtr model, int x_resolution, int p_resolution, double p_max)
    : model_(std::move(model)) {
  const int d = model_->dim();
  if (x_resolution <= 0) x_resolution = d == 1 ? 256 : 48;

  if (d == 1) {
    for (int i = 0; i < x_resolution; ++i)
      x_samples_.push_back(Vec::Constant(1, i / double(x_resolution)));
  } else {
    for (int i = 0; i < x_resolution; ++i)
      for (int j = 0; j < x_resolution; ++j) {
        Vec x(2);
        x << i / double(x_resolution), j / double(x_resolution);
        x_samples_.push_back(std::move(x));
      }
  }

  // Log-spaced radial grid including p = 0, along the axis directions and
  // (for d = 2) the diagonal.
  std::vector<Vec> dirs;
  dirs.push_back(Vec::Unit(d, 0));
  dirs.push_back(-Vec::Unit(d, 0));
  if (d == 2) {
    dirs.push_back(Vec::Unit(2, 1));
    dirs.push_back(-Vec::Unit(2, 1));
    dirs.push_back(Vec::Constant(2, 1.0 / std::numbers::sqrt2));
  }
  p_samples_.push_back(Vec::Zero(d));
  const double r_min = 1e-3;
  for (int k = 0; k < p_resolution; ++k) {
    const double r =
        r_min * std::pow(p_max / r_min, k / std::max(1.0, p_resolution - 1.0));
    for (const auto& dir : dirs) p_samples_.push_back(r * dir);
  }
}

double BoundFunctions::f0(double m) const {
  double v = std::numeric_limits<double>::infinity();
  const Vec p0 = Vec::Zero(model_->dim());
  for (const auto& x : x_samples_) v = std::min(v, -model_->hamiltonian(x, p0, m));
  return v;
}

double BoundFunctions::f1(double m) const {
  double v = -std::numeric_limits<double>::infinity();
  const Vec p0 = Vec::Zero(model_->dim());
  for (const auto& x : x_samples_) v = std::max(v, -model_->hamiltonian(x, p0, m));
  return v;
}

double BoundFunctions::g0(double m) const {
  double v = std::numeric_limits<double>::infinity();
  for (const auto& x : x_samples_) v = std::min(v, model_->terminal_cost(x, m).g);
  return v;
}

double BoundFunctions::g1(double m) const {
  double v = -std::numeric_limits<double>::infinity();
  for (const auto& x : x_samples_) v = std::max(v, model_->terminal_cost(x, m).g);
  return v;
}

double BoundFunctions::f0_inv(double y) const {
  return monotone_inverse([this](double m) { return f0(m); }, y, "f0_inv");
}
double BoundFunctions::f1_inv(double y) const {
  return monotone_inverse([this](double m) { return f1(m); }, y, "f1_inv");
}
double BoundFunctions::g0_inv(double y) const {
  return monotone_inverse([this](double m) { return g0(m); }, y, "g0_inv");
}
double BoundFunctions::g1_inv(double y) const {
  return monotone_inverse([this](double m) { return g1(m); }, y, "g1_inv");
}

double BoundFunctions::envelope(double m) const {
  const double c0 = model_->constants().C0;
  const double gamma = model_->constants().gamma;
  const double psi = model_->constants().psi(m);
  double v = -std::numeric_limits<double>::infinity();
  for (const auto& x : x_samples_)
    for (const auto& p : p_samples_)
      v = std::max(v, model_->hamiltonian(x, p, m) - c0 * psi * std::pow(p.norm(), gamma));
  return v;
}

BoundFunctions::Ceiling BoundFunctions::h(double s) const {
  if (envelope(1e-8) < -s) return {0.0, true};
  double lo = 1e-8, hi = std::max(lo * 2.0, 1.0);
  while (envelope(hi) >= -s) {
    if (hi > 1e300) throw RangeError("h: growth envelope never drops below -s", s);
    lo = hi;
    hi *= 8.0;
  }
  while (hi - lo > 1e-12 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (envelope(mid) >= -s ? lo : hi) = mid;
  }
  return {0.5 * (lo + hi), false};
}

double BoundFunctions::delta_K(double K) const {
  double v = std::numeric_limits<double>::infinity();
  double warm = 1.0;
  for (const auto& x : x_samples_)
    for (const auto& p : p_samples_) {
      try {
        warm = invert_h(*model_, x, p, K, warm);
      } catch (const InversionError& e) {
        // H stays above level K for every representable density at this
        // momentum; the inverted density is astronomically large and cannot
        // be the infimum.
        if (e.kind == InversionError::Kind::NoBracket) continue;
        throw;
      }
      v = std::min(v, warm);
    }
  if (!std::isfinite(v)) throw RangeError("delta_K", K);
  return v;
}

SolutionBounds value_bounds(const BoundFunctions& bf, double C, double T, double t) {
  const double band = C * (std::exp(C * T) - std::exp(C * t));
  SolutionBounds out;
  out.u_lower = bf.g0(bf.f1_inv(-C)) - band;
  out.u_upper = bf.g1(bf.f0_inv(C)) + band;
  return out;
}

std::pair<double, double> terminal_density_interval(const BoundFunctions& bf, double C) {
  return {bf.g1_inv(bf.g0(bf.f1_inv(-C))), bf.g0_inv(bf.g1(bf.f0_inv(C)))};
}

MfgResidual mfg_residual(const Model& model, const SpaceTimeGrid& grid, const DiscreteField& u,
                         const DiscreteField& m) {
  MfgResidual out;
  const int d = grid.dim();

  Mat flux(grid.num_nodes(), d);
  for (Index node = 0; node < grid.num_nodes(); ++node) {
    const GradientPoint gp = gradient_at(grid, u, node);
    out.hjb_norm =
        std::max(out.hjb_norm, std::abs(-gp.s + model.hamiltonian(gp.x, gp.p, m(node))));
    const EvalRecord r = model.eval(gp.x, gp.p, m(node));
    flux.row(node) = r.B.transpose();
  }

  // Centered five-point quotients keep the probe's own truncation below the
  // fields' error, and the band [T/4, 3T/4] keeps a grid-independent margin
  // from the faces: the density there is anchored to the boundary data, so
  // its error profile is not the interior one and would dominate the norm
  // with a first-order layer artifact.
  auto quotient = [&](const auto& values, Index node, int axis, double h) {
    return (values(grid.shift(node, axis, -2)) - 8.0 * values(grid.shift(node, axis, -1)) +
            8.0 * values(grid.shift(node, axis, +1)) - values(grid.shift(node, axis, +2))) /
           (12.0 * h);
  };
  const int margin = std::max(3, grid.nt() / 4);
  for (Index node = 0; node < grid.num_nodes(); ++node) {
    const int it = grid.time_of(node);
    if (it < margin || it > grid.nt() - margin) continue;
    const double mt = quotient(m, node, d, grid.ht());
    double div = 0.0;
    for (int a = 0; a < d; ++a) div += quotient(flux.col(a), node, a, grid.hx());
    out.continuity_norm = std::max(out.continuity_norm, std::abs(mt - div));
  }
  return out;
}

ObliqueMargins oblique_margins(const Model& model, const SpaceTimeGrid& grid,
                               const DiscreteField& u) {
  ObliqueMargins out;
  out.initial_max_ds = -std::numeric_limits<double>::infinity();
  out.terminal_min_ds = std::numeric_limits<double>::infinity();
  for (Index node = 0; node < grid.num_nodes(); ++node) {
    if (!grid.on_boundary(node)) continue;
    const GradientPoint gp = gradient_at(grid, u, node);
    const bool initial = grid.on_initial_face(node);
    const BoundaryGradient bg = boundary_gradient(
        model, initial ? TimeFace::Initial : TimeFace::Terminal, gp);
    if (initial)
      out.initial_max_ds = std::max(out.initial_max_ds, bg.ds);
    else
      out.terminal_min_ds = std::min(out.terminal_min_ds, bg.ds);
  }
  return out;
}

bool CertificateReport::all_pass() const {
  return mass_pass && positivity_pass && density_interval_pass && ellipticity_pass &&
         hjb_pass && value_bounds_pass && terminal_interval_pass && oblique_pass;
}

CertificateReport certify(ModelPtr model, const SpaceTimeGrid& grid, const DiscreteField& u,
                          const DiscreteField& m, double search_Cmax) {
  CertificateReport rep;
  const ModelConstants& cst = model->constants();

  // Mass drift under periodic trapezoid quadrature (the nodal mean).
  for (int it = 0; it <= grid.nt(); ++it) {
    double mass = 0.0;
    for (Index sp = 0; sp < grid.num_spatial(); ++sp)
      mass += m(it * grid.num_spatial() + sp);
    mass /= double(grid.num_spatial());
    rep.mass_drift = std::max(rep.mass_drift, std::abs(mass - 1.0));
  }
  rep.min_m = m.minCoeff();
  rep.max_m = m.maxCoeff();

  double max_p = 0.0, max_grad = 0.0;
  double min_gap = std::numeric_limits<double>::infinity();
  for (Index node = 0; node < grid.num_nodes(); ++node) {
    const GradientPoint gp = gradient_at(grid, u, node);
    max_p = std::max(max_p, gp.p.norm());
    max_grad = std::max(max_grad, std::sqrt(gp.p.squaredNorm() + gp.s * gp.s));
    min_gap = std::min(min_gap, ellipticity_gap(*model, gp.x, gp.p, m(node)));
  }
  rep.grad_bound = max_grad;
  rep.min_gap = min_gap;

  BoundFunctions bf(model);
  bool interval_defined = true;
  try {
    rep.density_floor = bf.delta_K(rep.grad_bound);
    rep.level_constant =
        rep.grad_bound + cst.C0 * cst.psi(rep.density_floor) * std::pow(max_p, cst.gamma);
    const auto ceiling = bf.h(rep.level_constant);
    rep.density_ceiling = ceiling.value;
    rep.ceiling_degenerate = ceiling.degenerate;
  } catch (const RangeError&) {
    // The interval endpoints fall outside representable densities; report
    // the check as uncertified rather than failing the whole certificate.
    rep.density_floor = std::numeric_limits<double>::quiet_NaN();
    rep.density_ceiling = std::numeric_limits<double>::quiet_NaN();
    interval_defined = false;
  }

  const MfgResidual mr = mfg_residual(*model, grid, u, m);
  rep.hjb_norm = mr.hjb_norm;
  rep.continuity_norm = mr.continuity_norm;
  rep.oblique = oblique_margins(*model, grid, u);

  // Smallest C <= search_Cmax validating the two-sided value bound at every
  // node and the terminal-density interval, bisected to two decimals.
  const double T = grid.horizon();
  auto holds = [&](double C) {
    try {
      for (int it = 0; it <= grid.nt(); ++it) {
        const double t = it * grid.ht();
        const SolutionBounds sb = value_bounds(bf, C, T, t);
        for (Index sp = 0; sp < grid.num_spatial(); ++sp) {
          const double v = u(Index(it) * grid.num_spatial() + sp);
          if (v < sb.u_lower - 1e-12 || v > sb.u_upper + 1e-12) return false;
        }
      }
      const auto [mt_lo, mt_hi] = terminal_density_interval(bf, C);
      for (Index sp = 0; sp < grid.num_spatial(); ++sp) {
        const double v = m(Index(grid.nt()) * grid.num_spatial() + sp);
        if (v < mt_lo - 1e-12 || v > mt_hi + 1e-12) return false;
      }
      return true;
    } catch (const RangeError&) {
      return false;
    }
  };

  if (holds(search_Cmax)) {
    double lo = 0.0, hi = search_Cmax;
    while (hi - lo > 5e-3) {
      const double mid = 0.5 * (lo + hi);
      (holds(mid) ? hi : lo) = mid;
    }
    rep.smallest_C = std::ceil(hi * 100.0) / 100.0;
    rep.value_bounds_pass = true;
    rep.terminal_interval_pass = true;
  } else {
    rep.smallest_C = std::numeric_limits<double>::quiet_NaN();
    rep.value_bounds_pass = false;
    rep.terminal_interval_pass = false;
  }

  rep.mass_pass = rep.mass_drift <= 1e-2;
  rep.positivity_pass = rep.min_m > 0.0;
  rep.density_interval_pass = interval_defined && !rep.ceiling_degenerate &&
                              rep.min_m >= rep.density_floor * (1.0 - 1e-9) &&
                              rep.max_m <= rep.density_ceiling * (1.0 + 1e-9);
  rep.ellipticity_pass = rep.min_gap > 0.0;

  double max_s = 0.0;
  for (Index node = 0; node < grid.num_nodes(); ++node)
    max_s = std::max(max_s, std::abs(gradient_at(grid, u, node).s));
  rep.hjb_pass = rep.hjb_norm <= 10.0 * 1e-11 * (1.0 + max_s);
  rep.oblique_pass = rep.oblique.initial_max_ds < 0.0 && rep.oblique.terminal_min_ds > 0.0;
  return rep;
}

ConvergenceStudy self_convergence(ModelPtr model, std::span<const int> grid_sizes, int d,
                                  double T, const ContinuationConfig& cfg) {
  if (grid_sizes.size() < 3)
    throw std::invalid_argument("self_convergence needs at least 3 nested grids");
  for (std::size_t k = 1; k < grid_sizes.size(); ++k)
    if (grid_sizes[k] != 2 * grid_sizes[k - 1])
      throw std::invalid_argument("self_convergence grids must double");

  ConvergenceStudy study;
  std::vector<DiscreteField> us, ms;
  std::vector<SpaceTimeGrid> grids;
  for (int nx : grid_sizes) {
    study.grid_sizes.push_back(nx);
    grids.emplace_back(d, nx, nx, T);
    const ContinuationResult run = continuation_solve(model, grids.back(), cfg);
    if (run.status != ContinuationStatus::Success)
      throw StallError("continuation stalled at theta=" + std::to_string(run.theta_stall) +
                           " on grid " + std::to_string(nx),
                       run.theta_stall);
    us.push_back(run.u);
    ms.push_back(recover_m(*theta_model(model, 1.0), grids.back(), run.u));
    study.continuity_norms.push_back(
        mfg_residual(*theta_model(model, 1.0), grids.back(), us.back(), ms.back())
            .continuity_norm);
  }

  auto coarse_diff = [&](const DiscreteField& coarse, const DiscreteField& fine,
                         const SpaceTimeGrid& cg, const SpaceTimeGrid& fg) {
    double diff = 0.0;
    for (Index node = 0; node < cg.num_nodes(); ++node) {
      const auto ix = cg.spatial_of(node);
      const Index fine_node =
          fg.index_of(2 * cg.time_of(node), {2 * ix[0], 2 * ix[1]});
      diff = std::max(diff, std::abs(coarse(node) - fine(fine_node)));
    }
    return diff;
  };

  for (std::size_t k = 0; k + 1 < us.size(); ++k) {
    study.u_diffs.push_back(coarse_diff(us[k], us[k + 1], grids[k], grids[k + 1]));
    study.m_diffs.push_back(coarse_diff(ms[k], ms[k + 1], grids[k], grids[k + 1]));
  }

  const auto last = study.u_diffs.size() - 1;
  if (study.u_diffs[last - 1] < 1e-12 && study.u_diffs[last] < 1e-12) {
    study.exact = true;
    study.u_order = study.m_order = std::numeric_limits<double>::quiet_NaN();
  } else {
    study.u_order = std::log2(study.u_diffs[last - 1] / study.u_diffs[last]);
    study.m_order = std::log2(study.m_diffs[last - 1] / study.m_diffs[last]);
  }
  return study;
}

}  // namespace emfg
