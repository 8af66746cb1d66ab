#include <doctest.h>

#include <cmath>
#include <random>

#include "emfg/models_builtin.hpp"
#include "emfg/solver.hpp"

using namespace emfg;

TEST_CASE("theta blend: endpoints and linearity") {
  const auto sql = make_quad_log(1);  // V(0) = 0.1
  const SpaceTimeGrid grid(1, 16, 16, 1.0);

  DiscreteField u(grid.num_nodes());
  for (Index i = 0; i < u.size(); ++i)
    u(i) = 0.07 * std::cos(2 * M_PI * grid.x_of(i)(0)) + 0.05 * grid.t_of(i);

  // theta = 1 passes through bitwise.
  const DiscreteField r_raw = residual(*sql, grid, u);
  const DiscreteField r_blend = residual(*theta_model(sql, 1.0), grid, u);
  for (Index i = 0; i < r_raw.size(); ++i) CHECK(r_raw(i) == r_blend(i));

  // theta = 0 freezes x at the origin: H0(x, p, m) = |p|^2/2 + V(0) - log m.
  const auto frozen = theta_model(sql, 0.0);
  Vec p(1);
  p << 0.8;
  for (double xv : {0.0, 0.3, 0.9})
    CHECK(frozen->hamiltonian(Vec::Constant(1, xv), p, 2.0) ==
          doctest::Approx(0.5 * 0.64 + 0.1 - std::log(2.0)).epsilon(1e-14));
  CHECK(frozen->terminal_cost(Vec::Zero(1), 1.7).g == doctest::Approx(1.7));
  CHECK(frozen->initial_density(Vec::Constant(1, 0.25)).value == doctest::Approx(1.0));

  // Halfway blend halves the density modulation and keeps unit mass.
  const auto half = theta_model(sql, 0.5);
  CHECK(half->initial_density(Vec::Zero(1)).value == doctest::Approx(1.1).epsilon(1e-14));
  const int n = 512;
  double mass = 0.0;
  for (int i = 0; i < n; ++i)
    mass += half->initial_density(Vec::Constant(1, i / double(n))).value;
  CHECK(mass / n == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(theta_model(sql, 1.5), std::invalid_argument);
}

TEST_CASE("base solution is an exact discrete solution of the frozen problem") {
  const auto sql = make_quad_log(1);  // H(0,0,1) = V(0) = 0.1
  const SpaceTimeGrid grid(1, 32, 32, 1.0);
  const auto frozen = theta_model(sql, 0.0);
  const DiscreteField u = base_solution(*frozen, grid);

  for (Index i : {Index(0), Index(100), grid.num_nodes() - 1})
    CHECK(u(i) == doctest::Approx(0.1 * (grid.t_of(i) - 1.0) + 1.0).epsilon(1e-14));

  CHECK(sup_norm(residual(*frozen, grid, u)) <= 1e-12);

  // Any model with H(0,0,1) = 0 has the constant base solution.
  const auto cong = make_congestion(1, {.alpha = 1.0, .c0 = 1.0, .kappa_v = 0.0});
  const DiscreteField ub = base_solution(*theta_model(cong, 0.0), grid);
  CHECK(sup_norm(ub - DiscreteField::Ones(grid.num_nodes())) == 0.0);
}

TEST_CASE("Newton: zero or one iteration from the exact start") {
  const auto frozen = theta_model(make_quad_log(1), 0.0);
  const SpaceTimeGrid grid(1, 32, 32, 1.0);
  ContinuationConfig cfg;
  const NewtonResult res = newton_solve(*frozen, grid, base_solution(*frozen, grid), cfg);
  CHECK(res.report.status == NewtonStatus::Converged);
  CHECK(res.report.iterations <= 1);
  CHECK(sup_norm(residual(*frozen, grid, res.u)) <= 1e-12);
}

TEST_CASE("Newton converges quadratically to the flat solution") {
  const auto flat = make_quad_log(1, {.kappa_v = 0.0, .m0_amplitude = 0.0});
  const SpaceTimeGrid grid(1, 32, 32, 1.0);
  DiscreteField u0(grid.num_nodes());
  for (Index i = 0; i < u0.size(); ++i)
    u0(i) = 0.1 * std::cos(2 * M_PI * grid.x_of(i)(0));

  ContinuationConfig cfg;
  cfg.newton_tol = 1e-12;
  const NewtonResult res = newton_solve(*flat, grid, u0, cfg);
  CHECK(res.report.status == NewtonStatus::Converged);
  CHECK(sup_norm(res.u) <= 1e-10);  // exact solution is u = 0
  CHECK(res.report.iterations <= 8);

  // Quadratic tail: ratios r_{k+1} / r_k^2 stay bounded once in the basin.
  const auto& hist = res.report.residual_history;
  REQUIRE(hist.size() >= 3);
  for (std::size_t k = hist.size() - 2; k + 1 < hist.size() + 0; ++k) {
    if (hist[k] < 1e-3 && hist[k] > 0.0)
      CHECK(hist[k + 1] / (hist[k] * hist[k]) <= 1e4);
  }
}

TEST_CASE("Newton reports an inversion failure at an inadmissible start") {
  const auto flat = make_quad_log(1, {.kappa_v = 0.0, .m0_amplitude = 0.0});
  const SpaceTimeGrid grid(1, 16, 16, 1.0);
  DiscreteField u0 = DiscreteField::Zero(grid.num_nodes());
  u0(grid.index_of(8, {5, 0})) = 1000.0;
  const NewtonResult res = newton_solve(*flat, grid, u0, ContinuationConfig{});
  CHECK(res.report.status == NewtonStatus::InversionFailure);
  CHECK(res.report.detail.find("node") != std::string::npos);
}

TEST_CASE("Newton solves a manufactured discrete solution") {
  const auto model = make_congestion(1, {.alpha = 1.0, .c0 = 1.0});
  const SpaceTimeGrid grid(1, 16, 16, 1.0);
  DiscreteField star(grid.num_nodes());
  for (Index i = 0; i < star.size(); ++i)
    star(i) = 0.2 * std::cos(2 * M_PI * grid.x_of(i)(0)) * (1.0 - 0.5 * grid.t_of(i));
  const DiscreteField forcing = residual(*model, grid, star);

  DiscreteField u0 = star;
  for (Index i = 0; i < u0.size(); ++i)
    u0(i) += 0.05 * std::sin(2 * M_PI * grid.x_of(i)(0)) * grid.t_of(i);

  ContinuationConfig cfg;
  cfg.newton_tol = 1e-12;
  const NewtonResult res = newton_solve(*model, grid, u0, cfg, &forcing);
  CHECK(res.report.status == NewtonStatus::Converged);
  CHECK(sup_norm(res.u - star) <= 1e-9);
}

TEST_CASE("density recovery: closed forms and boundary consistency") {
  const auto flat = make_quad_log(1, {.kappa_v = 0.0, .m0_amplitude = 0.0});
  const SpaceTimeGrid grid(1, 16, 16, 1.0);
  const DiscreteField zero = DiscreteField::Zero(grid.num_nodes());
  const DiscreteField m0f = recover_m(*flat, grid, zero);
  CHECK(sup_norm(m0f - DiscreteField::Ones(grid.num_nodes())) <= 1e-12);

  const auto frozen = theta_model(make_quad_log(1), 0.0);
  const DiscreteField mb = recover_m(*frozen, grid, base_solution(*frozen, grid));
  CHECK(sup_norm(mb - DiscreteField::Ones(grid.num_nodes())) <= 1e-11);

  // Against the closed form m = exp(|D_x u|^2/2 + V - u_t) nodewise.
  const auto sql = make_quad_log(1);
  DiscreteField u(grid.num_nodes());
  for (Index i = 0; i < u.size(); ++i)
    u(i) = 0.1 * std::cos(2 * M_PI * grid.x_of(i)(0)) + 0.2 * (grid.t_of(i) - 1.0);
  const DiscreteField m = recover_m(*sql, grid, u);
  for (Index i = 0; i < m.size(); ++i) {
    const GradientPoint gp = gradient_at(grid, u, i);
    const double closed =
        std::exp(0.5 * gp.p.squaredNorm() + 0.1 * std::cos(2 * M_PI * gp.x(0)) - gp.s);
    CHECK(m(i) == doctest::Approx(closed).epsilon(1e-10));
  }
}

TEST_CASE("continuation reaches the target model and logs monitors") {
  const auto sql = make_quad_log(1);
  const SpaceTimeGrid grid(1, 32, 32, 1.0);
  const ContinuationResult res = continuation_solve(sql, grid, ContinuationConfig{});
  REQUIRE(res.status == ContinuationStatus::Success);
  REQUIRE(!res.trace.steps.empty());
  CHECK(res.trace.steps.front().theta == 0.0);
  CHECK(res.trace.steps.back().theta == 1.0);
  for (std::size_t k = 1; k < res.trace.steps.size(); ++k)
    CHECK(res.trace.steps[k].theta > res.trace.steps[k - 1].theta);
  for (const auto& step : res.trace.steps) {
    CHECK(step.min_m > 0.0);
    CHECK(step.newton_iterations <= 6);
  }

  // Recovered density at t = 0 matches the initial density well within
  // O(h^2); the boundary row pins it down to solver tolerance.
  auto t0_error = [&](int n) {
    const SpaceTimeGrid g(1, n, n, 1.0);
    const ContinuationResult r = continuation_solve(sql, g, ContinuationConfig{});
    REQUIRE(r.status == ContinuationStatus::Success);
    const DiscreteField m = recover_m(*theta_model(sql, 1.0), g, r.u);
    double err = 0.0;
    for (Index sp = 0; sp < g.num_spatial(); ++sp) {
      const double m0 = sql->initial_density(g.x_of(sp)).value;
      err = std::max(err, std::abs(m(sp) - m0));
    }
    return err;
  };
  CHECK(t0_error(16) <= 1.0 / (16.0 * 16.0));
  CHECK(t0_error(32) <= 1e-8);
}

TEST_CASE("a unit first step either converges or the schedule adapts") {
  const auto sql = make_quad_log(1);
  const SpaceTimeGrid grid(1, 16, 16, 1.0);
  ContinuationConfig cfg;
  cfg.dtheta_init = 1.0;
  cfg.dtheta_max = 1.0;
  const ContinuationResult res = continuation_solve(sql, grid, cfg);
  CHECK(res.status == ContinuationStatus::Success);
  CHECK(res.trace.steps.back().theta == 1.0);
}

TEST_CASE("congestion with no offset solves with a positive gap") {
  const auto cong = make_congestion(1, {.alpha = 1.0, .c0 = 0.0});
  const SpaceTimeGrid grid(1, 16, 16, 0.5);
  const ContinuationResult res = continuation_solve(cong, grid, ContinuationConfig{});
  REQUIRE(res.status == ContinuationStatus::Success);
  for (const auto& step : res.trace.steps) CHECK(step.min_gap > 0.0);
}

TEST_CASE("d = 2 continuation on a small grid") {
  const auto sql = make_quad_log(2, {.kappa_v = 0.05, .m0_amplitude = 0.1});
  const SpaceTimeGrid grid(2, 8, 8, 0.5);
  const ContinuationResult res = continuation_solve(sql, grid, ContinuationConfig{});
  REQUIRE(res.status == ContinuationStatus::Success);
  const DiscreteField m = recover_m(*theta_model(sql, 1.0), grid, res.u);
  CHECK(m.minCoeff() > 0.0);
}

TEST_CASE("config validation rejects bad knobs") {
  ContinuationConfig cfg;
  cfg.dtheta_init = 0.5;
  cfg.dtheta_max = 0.25;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.newton_tol = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.max_halvings = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
