#include "emfg/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace emfg {

namespace {

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19};

double radical_inverse(long i, int base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * (i % base);
    i /= base;
  }
  return r;
}

}  // namespace

HaltonSequence::HaltonSequence(int dim) {
  for (int k = 0; k < dim; ++k) bases_.push_back(kPrimes[k % 8]);
}

Vec HaltonSequence::next() {
  ++index_;
  Vec out(static_cast<Index>(bases_.size()));
  for (std::size_t k = 0; k < bases_.size(); ++k)
    out(static_cast<Index>(k)) = radical_inverse(index_, bases_[k]);
  return out;
}

namespace {

std::string point_string(const Vec& x, const Vec& p, double m) {
  std::ostringstream os;
  os << "x=[";
  for (Index k = 0; k < x.size(); ++k) os << (k ? "," : "") << x(k);
  os << "], p=[";
  for (Index k = 0; k < p.size(); ++k) os << (k ? "," : "") << p(k);
  os << "], m=" << m;
  return os.str();
}

}  // namespace

ModelEvalError::ModelEvalError(std::string evaluator_, Vec x_, Vec p_, double m_)
    : Error("model evaluation failed in '" + evaluator_ + "' at " + point_string(x_, p_, m_)),
      evaluator(std::move(evaluator_)),
      x(std::move(x_)),
      p(std::move(p_)),
      m(m_) {}

InversionError::InversionError(Kind kind_, Vec x_, Vec p_, double s_)
    : Error(kind_ == Kind::NoBracket
                ? "density inversion found no bracket after 200 expansions (coercivity violated "
                  "numerically)"
                : "density inversion fell below the admissible floor"),
      kind(kind_),
      x(std::move(x_)),
      p(std::move(p_)),
      s(s_) {}

InversionError InversionError::at_node(Index node_, double t_) const {
  InversionError copy = *this;
  copy.node = node_;
  copy.t = t_;
  return copy;
}

RangeError::RangeError(std::string composition_, double argument_)
    : Error("monotone inverse '" + composition_ + "' has no solution at argument " +
            std::to_string(argument_)),
      composition(std::move(composition_)),
      argument(argument_) {}

void ModelConstants::validate() const {
  std::ostringstream bad;
  if (!(C0 > 0.0)) bad << "C0 must be positive; ";
  if (!(gamma > 1.0)) bad << "gamma must exceed 1; ";
  if (!(gamma1 >= 0.0)) bad << "gamma1 must be non-negative; ";
  if (!(gamma2 <= gamma1)) bad << "gamma2 must not exceed gamma1; ";
  if (!(gamma1 <= gamma)) bad << "gamma1 must not exceed gamma; ";
  if (!(gamma2 < 2.0 * gamma1 - gamma + 2.0))
    bad << "exponent condition gamma2 < 2 gamma1 - gamma + 2 fails; ";
  if (!psi) bad << "psi is required; ";
  if (!Cbar) bad << "Cbar is required; ";

  if (psi) {
    double prev = std::numeric_limits<double>::infinity();
    bool valid = true;
    for (double m = 1e-6; m <= 1e9; m *= 10.0) {
      const double v = psi(m);
      if (!(v > 0.0) || !std::isfinite(v)) {
        bad << "psi must be finite and positive on samples; ";
        valid = false;
        break;
      }
      if (v > prev * (1.0 + 1e-12)) {
        bad << "psi must be non-increasing on samples; ";
        valid = false;
        break;
      }
      prev = v;
    }
    // A decade-spanning decay of psi on the sampled tail signals a zero
    // limit, which is inadmissible when gamma1 < gamma.
    if (valid && gamma1 < gamma && psi(1e9) < 1e-3 * psi(1e3))
      bad << "psi must stay positive for large m when gamma1 < gamma; ";
  }
  if (Cbar) {
    for (double m : {1e-3, 1.0, 1e3}) {
      const double v = Cbar(m);
      if (!(v > 0.0) || !std::isfinite(v)) {
        bad << "Cbar must be finite and positive on samples; ";
        break;
      }
    }
  }

  const std::string msg = bad.str();
  if (!msg.empty()) throw std::invalid_argument("model constants rejected: " + msg);
}

void EvalRecord::resize(int d) {
  dpH = Vec::Zero(d);
  dppH = Mat::Zero(d, d);
  dxpH = Mat::Zero(d, d);
  dxH = Vec::Zero(d);
  dpHm = Vec::Zero(d);
  dxHm = Vec::Zero(d);
  dxxH = Mat::Zero(d, d);
  B = Vec::Zero(d);
  Bm = Vec::Zero(d);
  dpB = Mat::Zero(d, d);
  dpBm = Mat::Zero(d, d);
  Bmm = Vec::Zero(d);
  dxB = Mat::Zero(d, d);
  dxBm = Mat::Zero(d, d);
  dppB.resize(d, d, d);
  dxpB.resize(d, d, d);
  dxxB.resize(d, d, d);
  H = Hm = Hmm = divxB = 0.0;
}

Model::Model(std::string name, int d, ModelConstants constants)
    : name_(std::move(name)), d_(d), constants_(std::move(constants)) {
  if (d < 1) throw std::invalid_argument("model dimension must be at least 1");
  constants_.validate();
}

EvalRecord Model::eval(const Vec& x, const Vec& p, double m) const {
  if (!(m >= kDensityFloor)) throw ModelEvalError("density floor", x, p, m);
  EvalRecord rec;
  rec.resize(d_);
  eval_impl(x, p, m, rec);
  rec.visit([&](const char* name, double, bool finite) {
    if (!finite) throw ModelEvalError(name, x, p, m);
  });
  return rec;
}

std::vector<SamplePoint> sample_box(int d, int n, double p_max, double m_min, double m_max) {
  HaltonSequence seq(2 * d + 1);
  std::vector<SamplePoint> pts;
  pts.reserve(static_cast<std::size_t>(n));
  const double lg_lo = std::log(m_min), lg_hi = std::log(m_max);
  for (int i = 0; i < n; ++i) {
    const Vec u = seq.next();
    SamplePoint pt;
    pt.x = u.head(d);
    pt.p = Vec(d);
    for (int k = 0; k < d; ++k) pt.p(k) = p_max * (2.0 * u(d + k) - 1.0);
    pt.m = std::exp(lg_lo + (lg_hi - lg_lo) * u(2 * d));
    pts.push_back(std::move(pt));
  }
  return pts;
}

void validate_model(const Model& model, int mass_resolution) {
  std::ostringstream bad;
  const int d = model.dim();

  const auto pts = sample_box(d, 128, 5.0, 1e-3, 1e3);
  for (const auto& pt : pts) {
    const double hm = model.hamiltonian_m(pt.x, pt.p, pt.m);
    if (!(hm < 0.0)) {
      bad << "H_m must be negative (got " << hm << " at m=" << pt.m << "); ";
      break;
    }
  }
  for (const auto& pt : pts) {
    const TerminalCost tc = model.terminal_cost(pt.x, pt.m);
    if (!(tc.gm > 0.0)) {
      bad << "g_m must be positive (got " << tc.gm << " at m=" << pt.m << "); ";
      break;
    }
  }

  // Initial density: positive, unit mass under periodic trapezoid quadrature.
  const int n = std::max(mass_resolution, 16);
  double mass = 0.0;
  double min_m0 = std::numeric_limits<double>::infinity();
  if (d == 1) {
    for (int i = 0; i < n; ++i) {
      const double v = model.initial_density(Vec::Constant(1, i / double(n))).value;
      min_m0 = std::min(min_m0, v);
      mass += v;
    }
    mass /= n;
  } else {
    const int nq = std::max(64, n / 8);
    for (int i = 0; i < nq; ++i)
      for (int j = 0; j < nq; ++j) {
        Vec x(2);
        x << i / double(nq), j / double(nq);
        const double v = model.initial_density(x).value;
        min_m0 = std::min(min_m0, v);
        mass += v;
      }
    mass /= double(nq) * double(nq);
  }
  if (!(min_m0 > 0.0)) bad << "m0 must be positive (min " << min_m0 << "); ";
  if (std::abs(mass - 1.0) > 1e-8)
    bad << "m0 must have unit mass (quadrature " << mass << "); ";

  for (const auto& pt : pts) {
    const auto b0 = model.flux_at_zero_density(pt.x, pt.p);
    if (b0 && sup_norm(*b0) > 1e-12) {
      bad << "flux must vanish at zero density (|B| = " << sup_norm(*b0) << "); ";
      break;
    }
  }

  const std::string msg = bad.str();
  if (!msg.empty()) throw std::invalid_argument("model '" + model.name() + "' rejected: " + msg);
}

namespace {

using ErrMap = std::map<std::string, double>;

double rel_err(double analytic, double fd) {
  return std::abs(analytic - fd) / std::max({1.0, std::abs(analytic), std::abs(fd)});
}

void track(ErrMap& errs, const std::string& key, double analytic, double fd) {
  double& slot = errs[key];
  slot = std::max(slot, rel_err(analytic, fd));
}

}  // namespace

std::map<std::string, double> fd_self_check(const Model& model,
                                            std::span<const SamplePoint> points, double h) {
  ErrMap errs;
  const int d = model.dim();

  for (const auto& pt : points) {
    const EvalRecord r = model.eval(pt.x, pt.p, pt.m);
    const double hm = std::min(h, 0.25 * pt.m);  // keep m - h_m well above zero

    auto at = [&](const Vec& x, const Vec& p, double m) { return model.eval(x, p, m); };
    auto shift = [](const Vec& v, int k, double delta) {
      Vec out = v;
      out(k) += delta;
      return out;
    };

    // m-derivatives of the H and B stacks.
    {
      const EvalRecord up = at(pt.x, pt.p, pt.m + hm), dn = at(pt.x, pt.p, pt.m - hm);
      const double inv = 1.0 / (2.0 * hm);
      track(errs, "Hm", r.Hm, (up.H - dn.H) * inv);
      track(errs, "Hmm", r.Hmm, (up.Hm - dn.Hm) * inv);
      for (int i = 0; i < d; ++i) {
        track(errs, "Bm", r.Bm(i), (up.B(i) - dn.B(i)) * inv);
        track(errs, "Bmm", r.Bmm(i), (up.Bm(i) - dn.Bm(i)) * inv);
      }
    }

    // p-derivatives.
    for (int k = 0; k < d; ++k) {
      const EvalRecord up = at(pt.x, shift(pt.p, k, h), pt.m);
      const EvalRecord dn = at(pt.x, shift(pt.p, k, -h), pt.m);
      const double inv = 1.0 / (2.0 * h);
      track(errs, "dpH", r.dpH(k), (up.H - dn.H) * inv);
      track(errs, "dpHm", r.dpHm(k), (up.Hm - dn.Hm) * inv);
      for (int i = 0; i < d; ++i) {
        track(errs, "dppH", r.dppH(i, k), (up.dpH(i) - dn.dpH(i)) * inv);
        track(errs, "dpB", r.dpB(i, k), (up.B(i) - dn.B(i)) * inv);
        track(errs, "dpBm", r.dpBm(i, k), (up.Bm(i) - dn.Bm(i)) * inv);
        for (int j = 0; j < d; ++j)
          track(errs, "dppB", r.dppB.slice(i)(j, k), (up.dpB(i, j) - dn.dpB(i, j)) * inv);
      }
    }

    // x-derivatives.
    for (int k = 0; k < d; ++k) {
      const EvalRecord up = at(shift(pt.x, k, h), pt.p, pt.m);
      const EvalRecord dn = at(shift(pt.x, k, -h), pt.p, pt.m);
      const double inv = 1.0 / (2.0 * h);
      track(errs, "dxH", r.dxH(k), (up.H - dn.H) * inv);
      track(errs, "dxHm", r.dxHm(k), (up.Hm - dn.Hm) * inv);
      for (int j = 0; j < d; ++j) {
        track(errs, "dxpH", r.dxpH(k, j), (up.dpH(j) - dn.dpH(j)) * inv);
        track(errs, "dxxH", r.dxxH(j, k), (up.dxH(j) - dn.dxH(j)) * inv);
      }
      for (int i = 0; i < d; ++i) {
        track(errs, "dxB", r.dxB(i, k), (up.B(i) - dn.B(i)) * inv);
        track(errs, "dxBm", r.dxBm(i, k), (up.Bm(i) - dn.Bm(i)) * inv);
        for (int j = 0; j < d; ++j) {
          track(errs, "dxpB", r.dxpB.slice(i)(k, j), (up.dpB(i, j) - dn.dpB(i, j)) * inv);
          track(errs, "dxxB", r.dxxB.slice(i)(j, k), (up.dxB(i, j) - dn.dxB(i, j)) * inv);
        }
      }
      track(errs, "divxB", r.divxB - r.dxB.trace(), 0.0);  // consistency of the stored trace
    }

    // Terminal cost and initial density.
    {
      const double inv = 1.0 / (2.0 * hm);
      const TerminalCost up = model.terminal_cost(pt.x, pt.m + hm);
      const TerminalCost dn = model.terminal_cost(pt.x, pt.m - hm);
      const TerminalCost tc = model.terminal_cost(pt.x, pt.m);
      track(errs, "gm", tc.gm, (up.g - dn.g) * inv);
      for (int k = 0; k < d; ++k) {
        const TerminalCost gu = model.terminal_cost(shift(pt.x, k, h), pt.m);
        const TerminalCost gd = model.terminal_cost(shift(pt.x, k, -h), pt.m);
        track(errs, "dxg", tc.dxg(k), (gu.g - gd.g) / (2.0 * h));
        const InitialDensity mu = model.initial_density(shift(pt.x, k, h));
        const InitialDensity md = model.initial_density(shift(pt.x, k, -h));
        track(errs, "dxm0", model.initial_density(pt.x).gradient(k),
              (mu.value - md.value) / (2.0 * h));
      }
    }
  }
  return errs;
}

}  // namespace emfg
