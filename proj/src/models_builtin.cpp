#include "emfg/models_builtin.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace emfg {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// V(x) = kappa cos(2 pi x_1) together with its first two derivatives.
struct Potential {
  double kappa = 0.0;

  double value(const Vec& x) const { return kappa * std::cos(kTwoPi * x(0)); }
  Vec gradient(const Vec& x) const {
    Vec g = Vec::Zero(x.size());
    g(0) = -kTwoPi * kappa * std::sin(kTwoPi * x(0));
    return g;
  }
  Mat hessian(const Vec& x) const {
    Mat h = Mat::Zero(x.size(), x.size());
    h(0, 0) = -kTwoPi * kTwoPi * kappa * std::cos(kTwoPi * x(0));
    return h;
  }
};

struct CosineDensity {
  double amplitude = 0.0;

  InitialDensity eval(const Vec& x) const {
    InitialDensity out;
    out.value = 1.0 + amplitude * std::cos(kTwoPi * x(0));
    out.gradient = Vec::Zero(x.size());
    out.gradient(0) = -kTwoPi * amplitude * std::sin(kTwoPi * x(0));
    return out;
  }
};

// f(m), f'(m), f''(m) for the scalar couplings.
double coup(Coupling c, double m) { return c == Coupling::Log ? std::log(m) : m; }
double coup_d(Coupling c, double m) { return c == Coupling::Log ? 1.0 / m : 1.0; }
double coup_dd(Coupling c, double m) { return c == Coupling::Log ? -1.0 / (m * m) : 0.0; }

class QuadLogModel final : public Model {
public:
  QuadLogModel(int d, const QuadLogParams& prm)
      : Model("quadlog", d, make_constants(prm)), v_{prm.kappa_v}, m0_{prm.m0_amplitude} {
    if (!(std::abs(prm.m0_amplitude) < 1.0))
      throw std::invalid_argument("quadlog: |m0_amplitude| must be below 1");
  }

  double hamiltonian(const Vec& x, const Vec& p, double m) const override {
    return 0.5 * p.squaredNorm() + v_.value(x) - std::log(m);
  }
  double hamiltonian_m(const Vec&, const Vec&, double m) const override { return -1.0 / m; }

  TerminalCost terminal_cost(const Vec& x, double m) const override {
    return {std::log(m), 1.0 / m, Vec::Zero(x.size())};
  }
  InitialDensity initial_density(const Vec& x) const override { return m0_.eval(x); }

  std::optional<double> closed_form_inverse(const Vec& x, const Vec& p,
                                            double s) const override {
    return std::exp(0.5 * p.squaredNorm() + v_.value(x) - s);
  }

protected:
  void eval_impl(const Vec& x, const Vec& p, double m, EvalRecord& r) const override {
    const int d = dim();
    r.H = hamiltonian(x, p, m);
    r.dpH = p;
    r.Hm = -1.0 / m;
    r.dppH = Mat::Identity(d, d);
    r.dxH = v_.gradient(x);
    r.Hmm = 1.0 / (m * m);
    r.dxxH = v_.hessian(x);

    r.B = m * p;
    r.Bm = p;
    r.dpB = m * Mat::Identity(d, d);
    r.dpBm = Mat::Identity(d, d);
  }

private:
  static ModelConstants make_constants(const QuadLogParams& prm) {
    ModelConstants c;
    c.C0 = prm.C0;
    c.gamma = 2.0;
    c.gamma1 = 0.0;
    c.gamma2 = -1.0;
    c.psi = [](double) { return 1.0; };
    const double vmax = std::abs(prm.kappa_v);
    c.Cbar = [vmax](double m) { return 2.0 * (1.0 + vmax) + 2.0 * std::abs(std::log(m)); };
    return c;
  }

  Potential v_;
  CosineDensity m0_;
};

class CongestionModel final : public Model {
public:
  CongestionModel(int d, const CongestionParams& prm)
      : Model("congestion", d, make_constants(prm)),
        alpha_(prm.alpha),
        c0_(prm.c0),
        f_(prm.f),
        g_(prm.g),
        v_{prm.kappa_v},
        m0_{prm.m0_amplitude} {
    if (!(prm.alpha > 0.0)) throw std::invalid_argument("congestion: alpha must be positive");
    if (!(prm.c0 >= 0.0)) throw std::invalid_argument("congestion: c0 must be non-negative");
    if (!(std::abs(prm.m0_amplitude) < 1.0))
      throw std::invalid_argument("congestion: |m0_amplitude| must be below 1");
  }

  double hamiltonian(const Vec& x, const Vec& p, double m) const override {
    return 0.5 * p.squaredNorm() * phi(m) - v_.value(x) - coup(f_, m);
  }
  double hamiltonian_m(const Vec&, const Vec& p, double m) const override {
    return 0.5 * p.squaredNorm() * phi_d(m) - coup_d(f_, m);
  }

  TerminalCost terminal_cost(const Vec& x, double m) const override {
    return {coup(g_, m), coup_d(g_, m), Vec::Zero(x.size())};
  }
  InitialDensity initial_density(const Vec& x) const override { return m0_.eval(x); }

  std::optional<Vec> flux_at_zero_density(const Vec& x, const Vec& p) const override {
    // B = m p / (m + c0)^alpha ~ m^(1-alpha) p near zero when c0 = 0.
    if (c0_ == 0.0 && alpha_ >= 1.0) return std::nullopt;
    (void)x;
    return Vec::Zero(p.size());
  }

protected:
  void eval_impl(const Vec& x, const Vec& p, double m, EvalRecord& r) const override {
    const int d = dim();
    const double ph = phi(m), ph1 = phi_d(m), ph2 = phi_dd(m);
    const double p2 = p.squaredNorm();

    r.H = 0.5 * p2 * ph - v_.value(x) - coup(f_, m);
    r.dpH = ph * p;
    r.Hm = 0.5 * p2 * ph1 - coup_d(f_, m);
    r.dppH = ph * Mat::Identity(d, d);
    r.dxH = -v_.gradient(x);
    r.Hmm = 0.5 * p2 * ph2 - coup_dd(f_, m);
    r.dpHm = ph1 * p;
    r.dxxH = -v_.hessian(x);

    r.B = m * ph * p;
    r.Bm = (ph + m * ph1) * p;
    r.dpB = m * ph * Mat::Identity(d, d);
    r.dpBm = (ph + m * ph1) * Mat::Identity(d, d);
    r.Bmm = (2.0 * ph1 + m * ph2) * p;
  }

private:
  double phi(double m) const { return std::pow(m + c0_, -alpha_); }
  double phi_d(double m) const { return -alpha_ * std::pow(m + c0_, -alpha_ - 1.0); }
  double phi_dd(double m) const {
    return alpha_ * (alpha_ + 1.0) * std::pow(m + c0_, -alpha_ - 2.0);
  }

  static ModelConstants make_constants(const CongestionParams& prm) {
    ModelConstants c;
    c.C0 = prm.C0;
    c.gamma = 2.0;
    c.gamma1 = 2.0;
    c.gamma2 = 0.0;
    const double alpha = prm.alpha, c0 = prm.c0;
    c.psi = [alpha, c0](double m) { return std::pow(m + c0, -alpha); };
    const double vmax = std::abs(prm.kappa_v);
    const Coupling f = prm.f;
    c.Cbar = [vmax, f](double m) {
      return 2.0 * (1.0 + vmax) * (1.0 + std::abs(coup(f, m)));
    };
    return c;
  }

  double alpha_, c0_;
  Coupling f_, g_;
  Potential v_;
  CosineDensity m0_;
};

class PowerModel final : public Model {
public:
  PowerModel(int d, const PowerParams& prm)
      : Model("power", d, make_constants(prm)),
        gamma_(prm.gamma),
        f_(prm.f),
        g_(prm.g),
        v_{prm.kappa_v},
        m0_{prm.m0_amplitude} {
    if (!(prm.gamma > 1.0)) throw std::invalid_argument("power: gamma must exceed 1");
    if (!(std::abs(prm.m0_amplitude) < 1.0))
      throw std::invalid_argument("power: |m0_amplitude| must be below 1");
  }

  double hamiltonian(const Vec& x, const Vec& p, double m) const override {
    const double w = 1.0 + p.squaredNorm();
    return std::pow(w, 0.5 * gamma_) / gamma_ + v_.value(x) - coup(f_, m);
  }
  double hamiltonian_m(const Vec&, const Vec&, double m) const override {
    return -coup_d(f_, m);
  }

  TerminalCost terminal_cost(const Vec& x, double m) const override {
    return {coup(g_, m), coup_d(g_, m), Vec::Zero(x.size())};
  }
  InitialDensity initial_density(const Vec& x) const override { return m0_.eval(x); }

protected:
  void eval_impl(const Vec& x, const Vec& p, double m, EvalRecord& r) const override {
    const int d = dim();
    const double w = 1.0 + p.squaredNorm();
    const double g = gamma_;
    const double w0 = std::pow(w, 0.5 * g - 1.0);       // multiplies p in D_pH
    const double w1 = (g - 2.0) * std::pow(w, 0.5 * g - 2.0);
    const double w2 = (g - 2.0) * (g - 4.0) * std::pow(w, 0.5 * g - 3.0);
    const Mat I = Mat::Identity(d, d);
    const Mat pp = p * p.transpose();

    r.H = std::pow(w, 0.5 * g) / g + v_.value(x) - coup(f_, m);
    r.dpH = w0 * p;
    r.Hm = -coup_d(f_, m);
    r.dppH = w0 * I + w1 * pp;
    r.dxH = v_.gradient(x);
    r.Hmm = -coup_dd(f_, m);
    r.dxxH = v_.hessian(x);

    // B = m D_pH; the p-part of H carries no m-dependence.
    r.B = m * r.dpH;
    r.Bm = r.dpH;
    r.dpB = m * r.dppH;
    r.dpBm = r.dppH;
    for (int i = 0; i < d; ++i) {
      Mat& s = r.dppB.slice(i);
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) {
          double t = w2 * p(i) * p(j) * p(k);
          if (i == j) t += w1 * p(k);
          if (i == k) t += w1 * p(j);
          if (j == k) t += w1 * p(i);
          s(j, k) = m * t;
        }
    }
  }

private:
  static ModelConstants make_constants(const PowerParams& prm) {
    ModelConstants c;
    c.C0 = prm.C0;
    c.gamma = prm.gamma;
    c.gamma1 = 0.0;
    c.gamma2 = std::min(0.0, 2.0 - prm.gamma) - 0.5;
    c.psi = [](double) { return 1.0; };
    const double vmax = std::abs(prm.kappa_v);
    const Coupling f = prm.f;
    c.Cbar = [vmax, f](double m) {
      return 2.0 + 2.0 * (1.0 + vmax) * (1.0 + std::abs(coup(f, m)));
    };
    return c;
  }

  double gamma_;
  Coupling f_, g_;
  Potential v_;
  CosineDensity m0_;
};

}  // namespace

Coupling coupling_from_string(const std::string& s) {
  if (s == "log") return Coupling::Log;
  if (s == "identity") return Coupling::Identity;
  throw ConfigError("unknown coupling '" + s + "' (expected log or identity)");
}

std::string to_string(Coupling c) { return c == Coupling::Log ? "log" : "identity"; }

ModelPtr make_quad_log(int d, const QuadLogParams& params) {
  return std::make_shared<QuadLogModel>(d, params);
}

ModelPtr make_congestion(int d, const CongestionParams& params) {
  return std::make_shared<CongestionModel>(d, params);
}

ModelPtr make_power(int d, const PowerParams& params) {
  return std::make_shared<PowerModel>(d, params);
}

}  // namespace emfg
