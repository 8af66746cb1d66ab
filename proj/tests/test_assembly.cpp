#include <doctest.h>

#include <cmath>
#include <random>

#include "emfg/assembly.hpp"
#include "emfg/models_builtin.hpp"
#include "emfg/solver.hpp"

using namespace emfg;

namespace {

DiscreteField jvp_fd(const Model& model, const SpaceTimeGrid& grid, const DiscreteField& u,
                     const DiscreteField& v, double eps) {
  const DiscreteField rp = residual(model, grid, u + eps * v);
  const DiscreteField rm = residual(model, grid, u - eps * v);
  return (rp - rm) / (2.0 * eps);
}

}  // namespace

TEST_CASE("flat separated model: zero field solves the system exactly") {
  const auto flat = make_quad_log(1, {.kappa_v = 0.0, .m0_amplitude = 0.0});
  const SpaceTimeGrid grid(1, 16, 16, 1.0);
  const DiscreteField r = residual(*flat, grid, DiscreteField::Zero(grid.num_nodes()));
  CHECK(sup_norm(r) <= 1e-14);
}

TEST_CASE("zero field against a nontrivial potential and initial density") {
  const auto sql = make_quad_log(1);  // V = 0.1 cos(2 pi x), m0 = 1 + 0.2 cos(2 pi x)
  const SpaceTimeGrid grid(1, 16, 16, 1.0);
  const DiscreteField r = residual(*sql, grid, DiscreteField::Zero(grid.num_nodes()));

  for (Index node = 0; node < grid.num_nodes(); ++node) {
    const double xv = grid.x_of(node)(0);
    if (grid.on_initial_face(node)) {
      // N = H(x, 0, m0(x)) = V(x) - log m0(x).
      const double expected =
          0.1 * std::cos(2 * M_PI * xv) - std::log(1.0 + 0.2 * std::cos(2 * M_PI * xv));
      CHECK(r(node) == doctest::Approx(expected).epsilon(1e-12));
    } else if (grid.on_terminal_face(node)) {
      // N = z - g(H^{-1}(x, 0, 0)) = -V(x).
      CHECK(r(node) == doctest::Approx(-0.1 * std::cos(2 * M_PI * xv)).epsilon(1e-12));
    } else {
      CHECK(std::abs(r(node)) <= 1e-13);  // p = 0 kills the source term
    }
  }
}

TEST_CASE("interior rows reduce to the unit-weight 5-point operator") {
  const auto flat = make_quad_log(1, {.kappa_v = 0.0, .m0_amplitude = 0.0});
  const SpaceTimeGrid grid(1, 16, 16, 1.0);
  const DiscreteField u0 = DiscreteField::Zero(grid.num_nodes());
  const SpMat J = jacobian(*flat, grid, u0);
  const double wx = 1.0 / (grid.hx() * grid.hx());
  const double wt = 1.0 / (grid.ht() * grid.ht());

  const Index node = grid.index_of(5, {3, 0});
  CHECK(J.coeff(node, node) == doctest::Approx(2.0 * wx + 2.0 * wt));
  CHECK(J.coeff(node, grid.shift(node, 0, +1)) == doctest::Approx(-wx));
  CHECK(J.coeff(node, grid.shift(node, 0, -1)) == doctest::Approx(-wx));
  CHECK(J.coeff(node, grid.shift(node, 1, +1)) == doctest::Approx(-wt));
  CHECK(J.coeff(node, grid.shift(node, 1, -1)) == doctest::Approx(-wt));
  // No mixed entries for the identity coefficient matrix.
  CHECK(J.coeff(node, grid.shift(grid.shift(node, 0, +1), 1, +1)) == 0.0);
}

TEST_CASE("initial-face row carries the one-sided time weights") {
  const auto flat = make_quad_log(1, {.kappa_v = 0.0, .m0_amplitude = 0.0});
  const SpaceTimeGrid grid(1, 16, 16, 1.0);
  const SpMat J = jacobian(*flat, grid, DiscreteField::Zero(grid.num_nodes()));

  const Index node = grid.index_of(0, {7, 0});
  const double ht = grid.ht();
  // dN/ds = -1 against weights (-11/6, 3, -3/2, 1/3)/ht; p = 0 kills dp entries.
  CHECK(J.coeff(node, node) == doctest::Approx(11.0 / (6.0 * ht)));
  CHECK(J.coeff(node, grid.shift(node, 1, +1)) == doctest::Approx(-3.0 / ht));
  CHECK(J.coeff(node, grid.shift(node, 1, +2)) == doctest::Approx(1.5 / ht));
  CHECK(J.coeff(node, grid.shift(node, 1, +3)) == doctest::Approx(-1.0 / (3.0 * ht)));
  CHECK(J.coeff(node, grid.shift(node, 0, +1)) == 0.0);
}

TEST_CASE("residual rows align with unknowns and footprints stay in stencil range") {
  const auto cong = make_congestion(1);
  const SpaceTimeGrid grid(1, 12, 12, 0.8);
  DiscreteField u(grid.num_nodes());
  for (Index i = 0; i < u.size(); ++i)
    u(i) = 0.05 * std::cos(2 * M_PI * grid.x_of(i)(0)) * (1.0 + grid.t_of(i));
  const DiscreteField r = residual(*cong, grid, u);
  const SpMat J = jacobian(*cong, grid, u);
  CHECK(r.size() == grid.num_nodes());
  CHECK(J.rows() == grid.num_nodes());
  CHECK(J.cols() == grid.num_nodes());
  const int d = grid.dim();
  const int bound = (2 * d + 3) * (2 * d + 3);
  std::vector<int> per_row(J.rows(), 0);
  for (int k = 0; k < J.outerSize(); ++k)
    for (SpMat::InnerIterator it(J, k); it; ++it) ++per_row[it.row()];
  for (int nnz : per_row) CHECK(nnz <= bound);
}

TEST_CASE("Jacobian-vector products match directional differences") {
  const auto model = make_quad_log(1);
  const SpaceTimeGrid grid(1, 16, 16, 1.0);
  std::mt19937 rng(19);
  std::normal_distribution<double> dist(0.0, 1.0);

  DiscreteField u(grid.num_nodes());
  for (Index i = 0; i < u.size(); ++i)
    u(i) = 0.1 * std::cos(2 * M_PI * grid.x_of(i)(0)) * (grid.horizon() - grid.t_of(i));

  for (const DiscreteField& at : {DiscreteField(DiscreteField::Zero(grid.num_nodes())), u}) {
    const SpMat J = jacobian(*model, grid, at);
    for (int k = 0; k < 20; ++k) {
      DiscreteField v(grid.num_nodes());
      for (Index i = 0; i < v.size(); ++i) v(i) = dist(rng);
      const double eps = 1e-6 * (1.0 + sup_norm(at)) / std::max(1.0, sup_norm(v));
      const DiscreteField analytic = J * v;
      const DiscreteField fd = jvp_fd(*model, grid, at, v, eps);
      CHECK(sup_norm(analytic - fd) <= 1e-5 * std::max(1.0, sup_norm(analytic)));
    }
  }
}

TEST_CASE("Jacobian-vector products for the coupled congestion model") {
  const auto model = make_congestion(1, {.alpha = 1.0, .c0 = 0.5});
  const SpaceTimeGrid grid(1, 12, 12, 0.5);
  std::mt19937 rng(23);
  std::normal_distribution<double> dist(0.0, 1.0);

  DiscreteField u(grid.num_nodes());
  for (Index i = 0; i < u.size(); ++i)
    u(i) = 0.08 * std::sin(2 * M_PI * grid.x_of(i)(0)) + 0.02 * grid.t_of(i);

  const SpMat J = jacobian(*model, grid, u);
  for (int k = 0; k < 10; ++k) {
    DiscreteField v(grid.num_nodes());
    for (Index i = 0; i < v.size(); ++i) v(i) = dist(rng);
    const DiscreteField fd = jvp_fd(*model, grid, u, v, 1e-6 / std::max(1.0, sup_norm(v)));
    const DiscreteField analytic = J * v;
    CHECK(sup_norm(analytic - fd) <= 1e-5 * std::max(1.0, sup_norm(analytic)));
  }
}

TEST_CASE("d = 2 Jacobian-vector products and mixed stencils") {
  const auto model = make_quad_log(2);
  const SpaceTimeGrid grid(2, 8, 8, 0.5);
  std::mt19937 rng(29);
  std::normal_distribution<double> dist(0.0, 1.0);

  DiscreteField u(grid.num_nodes());
  for (Index i = 0; i < u.size(); ++i) {
    const Vec x = grid.x_of(i);
    u(i) = 0.05 * std::cos(2 * M_PI * x(0)) * std::sin(2 * M_PI * x(1)) +
           0.03 * grid.t_of(i) * grid.t_of(i);
  }
  const SpMat J = jacobian(*model, grid, u);
  for (int k = 0; k < 5; ++k) {
    DiscreteField v(grid.num_nodes());
    for (Index i = 0; i < v.size(); ++i) v(i) = dist(rng);
    const DiscreteField fd = jvp_fd(*model, grid, u, v, 1e-6 / std::max(1.0, sup_norm(v)));
    const DiscreteField analytic = J * v;
    CHECK(sup_norm(analytic - fd) <= 2e-5 * std::max(1.0, sup_norm(analytic)));
  }
}

TEST_CASE("manufactured forcing makes any smooth field an exact solution") {
  const auto model = make_congestion(1);
  const SpaceTimeGrid grid(1, 12, 12, 1.0);
  DiscreteField star(grid.num_nodes());
  for (Index i = 0; i < star.size(); ++i)
    star(i) = 0.3 * std::cos(2 * M_PI * grid.x_of(i)(0)) + 0.1 * (grid.horizon() - grid.t_of(i));
  const DiscreteField forcing = residual(*model, grid, star);
  const DiscreteField r = residual(*model, grid, star, &forcing);
  CHECK(sup_norm(r) == 0.0);
}

TEST_CASE("inversion failure during assembly names the node") {
  const auto flat = make_quad_log(1, {.kappa_v = 0.0, .m0_amplitude = 0.0});
  const SpaceTimeGrid grid(1, 16, 16, 1.0);
  DiscreteField u = DiscreteField::Zero(grid.num_nodes());
  u(grid.index_of(8, {4, 0})) = 1000.0;  // drives u_t (hence 1/m) out of range
  try {
    residual(*flat, grid, u);
    FAIL("expected an inversion error");
  } catch (const InversionError& e) {
    CHECK(e.node >= 0);
    CHECK(e.x.size() == 1);
  }
}
