#include <doctest.h>

#include <cmath>

#include "emfg/models_builtin.hpp"
#include "oracles.hpp"

using namespace emfg;

namespace {

// Fixed evaluators, for exercising the self-check machinery itself.
class ConstantModel final : public Model {
public:
  explicit ConstantModel(double c) : Model("constant", 1, constants()), c_(c) {}

  double hamiltonian(const Vec&, const Vec&, double) const override { return c_; }
  double hamiltonian_m(const Vec&, const Vec&, double) const override { return 0.0; }
  TerminalCost terminal_cost(const Vec& x, double) const override {
    return {c_, 0.0, Vec::Zero(x.size())};
  }
  InitialDensity initial_density(const Vec& x) const override {
    return {1.0, Vec::Zero(x.size())};
  }

protected:
  void eval_impl(const Vec&, const Vec&, double, EvalRecord& r) const override { r.H = c_; }

private:
  static ModelConstants constants() {
    ModelConstants c;
    c.C0 = 1.0;
    c.gamma = 2.0;
    c.gamma1 = 2.0;
    c.gamma2 = 0.0;
    c.psi = [](double) { return 1.0; };
    c.Cbar = [](double) { return 1.0; };
    return c;
  }
  double c_;
};

}  // namespace

TEST_CASE("quadlog stack values at a hand point") {
  const auto model = make_quad_log(1, {.kappa_v = 0.0});
  const Vec x = Vec::Zero(1);
  Vec p(1);
  p << 1.0;
  const EvalRecord r = model->eval(x, p, 1.0);
  CHECK(r.dpH(0) == doctest::Approx(1.0));
  CHECK(r.Hm == doctest::Approx(-1.0));
  CHECK(r.dpB(0, 0) == doctest::Approx(1.0));
  CHECK(r.Bm(0) == doctest::Approx(1.0));

  const EvalRecord r0 = model->eval(x, Vec::Zero(1), 1.0);
  CHECK(r0.dpH(0) == 0.0);
  CHECK(r0.B(0) == 0.0);
}

TEST_CASE("congestion stack values at a hand point") {
  const auto model = make_congestion(1, {.alpha = 1.0, .c0 = 1.0, .kappa_v = 0.0});
  Vec p(1);
  p << 1.0;
  const EvalRecord r = model->eval(Vec::Zero(1), p, 1.0);
  CHECK(r.dpH(0) == doctest::Approx(0.5));
  CHECK(r.Hm == doctest::Approx(-1.125));
}

TEST_CASE("derivative stacks agree with centered differences") {
  const auto pts1 = sample_box(1, 100, 5.0, 0.1, 10.0);
  for (const auto& model :
       {make_quad_log(1), make_congestion(1), make_power(1, {.gamma = 1.7})}) {
    const auto errs = fd_self_check(*model, pts1, 1e-5);
    for (const auto& [name, err] : errs) {
      INFO(model->name() << " / " << name);
      CHECK(err <= 1e-6);
    }
  }
  const auto pts2 = sample_box(2, 60, 5.0, 0.1, 10.0);
  for (const auto& model : {make_quad_log(2), make_congestion(2), make_power(2)}) {
    const auto errs = fd_self_check(*model, pts2, 1e-5);
    for (const auto& [name, err] : errs) {
      INFO(model->name() << " / " << name);
      CHECK(err <= 1e-6);
    }
  }
}

TEST_CASE("constant model: self-check discrepancies are exactly zero") {
  const ConstantModel model(3.0);
  const auto pts = sample_box(1, 10, 2.0, 0.5, 2.0);
  for (const auto& [name, err] : fd_self_check(model, pts, 1e-5)) {
    INFO(name);
    CHECK(err == 0.0);
  }
}

TEST_CASE("record Hamiltonian matches the scalar evaluators") {
  for (const auto& model : {make_quad_log(1), make_congestion(1), make_power(1)}) {
    for (const auto& pt : sample_box(1, 50, 5.0, 0.1, 10.0)) {
      const EvalRecord r = model->eval(pt.x, pt.p, pt.m);
      CHECK(r.H == doctest::Approx(model->hamiltonian(pt.x, pt.p, pt.m)).epsilon(1e-14));
      CHECK(r.Hm ==
            doctest::Approx(model->hamiltonian_m(pt.x, pt.p, pt.m)).epsilon(1e-14));
    }
  }
}

TEST_CASE("monotonicity: H decreasing and g increasing in m") {
  for (const auto& model : {make_quad_log(1), make_congestion(1), make_power(1)}) {
    for (const auto& pt : sample_box(1, 30, 5.0, 0.1, 10.0)) {
      double prev_h = model->hamiltonian(pt.x, pt.p, 0.05);
      double prev_g = model->terminal_cost(pt.x, 0.05).g;
      for (double m = 0.1; m < 30.0; m *= 2.0) {
        const double h = model->hamiltonian(pt.x, pt.p, m);
        const double g = model->terminal_cost(pt.x, m).g;
        CHECK(h < prev_h);
        CHECK(g > prev_g);
        prev_h = h;
        prev_g = g;
      }
    }
  }
}

TEST_CASE("flux m-derivative equals momentum gradient for separated models") {
  for (const auto& model : {make_quad_log(1), make_power(1, {.gamma = 2.5})}) {
    for (const auto& pt : sample_box(1, 40, 5.0, 0.1, 10.0)) {
      const EvalRecord r = model->eval(pt.x, pt.p, pt.m);
      CHECK(sup_norm(r.Bm - r.dpH) <= 1e-14 * (1.0 + r.dpH.norm()));
    }
  }
}

TEST_CASE("congestion momentum Jacobian of the flux is symmetric positive definite") {
  const auto model = make_congestion(2, {.alpha = 0.7, .c0 = 0.5});
  for (const auto& pt : sample_box(2, 40, 5.0, 0.1, 10.0)) {
    const EvalRecord r = model->eval(pt.x, pt.p, pt.m);
    CHECK(sup_norm(r.dpB - r.dpB.transpose()) == 0.0);
    CHECK(min_eigenvalue(symmetrized(r.dpB)) > 0.0);
  }
}

TEST_CASE("constants are rejected outside the exponent region") {
  ModelConstants c;
  c.psi = [](double) { return 1.0; };
  c.Cbar = [](double) { return 1.0; };
  c.C0 = 1.0;

  c.gamma = 2.0;
  c.gamma1 = 0.0;
  c.gamma2 = 0.0;  // needs gamma2 < 2*gamma1 - gamma + 2 = 0
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  c.gamma2 = -0.5;
  CHECK_NOTHROW(c.validate());

  c.gamma1 = 3.0;  // gamma1 > gamma
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  c.gamma1 = 1.0;
  c.gamma2 = 1.5;  // gamma2 > gamma1
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  c.gamma = 0.9;  // gamma <= 1
  c.gamma1 = 0.5;
  c.gamma2 = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("psi must stay positive for large m when gamma1 < gamma") {
  ModelConstants c;
  c.C0 = 1.0;
  c.gamma = 2.0;
  c.gamma1 = 0.5;
  c.gamma2 = -0.5;
  c.Cbar = [](double) { return 1.0; };
  c.psi = [](double m) { return 1.0 / (1.0 + m); };  // decays to zero
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("model validation accepts the builtins and checks mass") {
  for (const auto& model : {make_quad_log(1), make_congestion(1), make_power(1)})
    CHECK_NOTHROW(validate_model(*model));
  CHECK_NOTHROW(validate_model(*make_quad_log(2)));
  // Congestion with c0 = 0, alpha = 1 has no zero-density flux extension but
  // stays admissible on m > 0.
  CHECK_NOTHROW(validate_model(*make_congestion(1, {.alpha = 1.0, .c0 = 0.0})));
}

TEST_CASE("evaluation below the density floor is rejected") {
  const auto model = make_quad_log(1);
  CHECK_THROWS_AS(model->eval(Vec::Zero(1), Vec::Zero(1), 1e-13), ModelEvalError);
}

TEST_CASE("initial density has unit mass and matching gradient") {
  const auto model = make_quad_log(1, {.kappa_v = 0.1, .m0_amplitude = 0.2});
  const int n = 256;
  double mass = 0.0;
  for (int i = 0; i < n; ++i)
    mass += model->initial_density(Vec::Constant(1, i / double(n))).value;
  CHECK(mass / n == doctest::Approx(1.0).epsilon(1e-12));
}
