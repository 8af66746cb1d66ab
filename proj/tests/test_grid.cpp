#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "emfg/grid.hpp"

using namespace emfg;

namespace {

DiscreteField sample(const SpaceTimeGrid& grid, const std::function<double(Vec, double)>& f) {
  DiscreteField u(grid.num_nodes());
  for (Index i = 0; i < grid.num_nodes(); ++i) u(i) = f(grid.x_of(i), grid.t_of(i));
  return u;
}

}  // namespace

TEST_CASE("grid invariants and indexing") {
  CHECK_THROWS_AS(SpaceTimeGrid(1, 4, 32, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(SpaceTimeGrid(1, 32, 4, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(SpaceTimeGrid(3, 32, 32, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(SpaceTimeGrid(1, 32, 32, 0.0), std::invalid_argument);

  const SpaceTimeGrid g(2, 8, 9, 1.0);
  CHECK(g.num_nodes() == 8 * 8 * 10);
  for (Index node : {Index(0), Index(17), Index(333), g.num_nodes() - 1}) {
    const auto ix = g.spatial_of(node);
    CHECK(g.index_of(g.time_of(node), ix) == node);
  }
  // Periodic wrap in space, clamped range in time.
  CHECK(g.shift(g.index_of(3, {7, 2}), 0, +1) == g.index_of(3, {0, 2}));
  CHECK(g.shift(g.index_of(3, {0, 2}), 1, -3) == g.index_of(3, {0, 7}));
  CHECK_THROWS_AS(g.shift(g.index_of(0, {0, 0}), 2, -1), ContractViolation);
}

TEST_CASE("gradient stencils: constants, linears, trig error bound") {
  const SpaceTimeGrid g(1, 64, 16, 2.0);

  const DiscreteField uc = sample(g, [](Vec, double) { return 3.25; });
  for (Index node : {Index(0), Index(100), g.num_nodes() - 1}) {
    const GradientPoint gp = gradient_at(g, uc, node);
    CHECK(gp.p(0) == 0.0);
    CHECK(gp.s == 0.0);
  }

  // One-sided time stencils are exact on linears and quadratics (the face
  // stencils even on cubics); the interior centered quotient is not.
  const DiscreteField ul = sample(g, [](Vec, double t) { return 1.7 * t + 0.3; });
  const DiscreteField uq = sample(g, [](Vec, double t) { return t * t; });
  const DiscreteField uc3 = sample(g, [](Vec, double t) { return t * t * t; });
  for (Index node = 0; node < g.num_nodes(); node += 37) {
    CHECK(gradient_at(g, ul, node).s == doctest::Approx(1.7).epsilon(1e-13));
    CHECK(gradient_at(g, uq, node).s ==
          doctest::Approx(2.0 * g.t_of(node)).epsilon(1e-11));
  }
  CHECK(gradient_at(g, uc3, 0).s == doctest::Approx(0.0));
  const Index top = g.index_of(g.nt(), {0, 0});
  CHECK(gradient_at(g, uc3, top).s ==
        doctest::Approx(3.0 * 4.0).epsilon(1e-10));  // d/dt t^3 at t = 2

  const double w = 2.0 * M_PI;
  const DiscreteField us = sample(g, [&](Vec x, double) { return std::sin(w * x(0)); });
  const double err = std::abs(gradient_at(g, us, 0).p(0) - w);
  CHECK(err <= 1.6e-2);
  CHECK(err > 0.0);
}

TEST_CASE("hessian stencils: quadratic exactness and trig accuracy") {
  const SpaceTimeGrid g(1, 32, 16, 1.0);

  // Unwrapped x^2 away from the periodic seam.
  const DiscreteField ux2 = sample(g, [](Vec x, double) { return x(0) * x(0); });
  for (int it = 1; it < g.nt(); ++it)
    for (int ix = 2; ix < g.nx() - 2; ++ix) {
      const Mat h = hessian_at(g, ux2, g.index_of(it, {ix, 0}));
      CHECK(h(0, 0) == doctest::Approx(2.0).epsilon(1e-10));
      CHECK(h(1, 1) == doctest::Approx(0.0));
    }

  const DiscreteField uxt = sample(g, [](Vec x, double t) { return x(0) * t; });
  for (int it = 1; it < g.nt(); ++it)
    for (int ix = 2; ix < g.nx() - 2; ++ix)
      CHECK(hessian_at(g, uxt, g.index_of(it, {ix, 0}))(0, 1) ==
            doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(hessian_at(g, uxt, 0), ContractViolation);

  // Smooth field: entries converge at second order under refinement.
  auto worst_err = [&](int n) {
    const SpaceTimeGrid gr(1, n, n, 1.0);
    const double w = 2.0 * M_PI;
    const DiscreteField u = sample(gr, [&](Vec x, double t) {
      return std::sin(w * x(0)) * std::cos(M_PI * t);
    });
    double err = 0.0;
    for (int it = 1; it < gr.nt(); ++it)
      for (int ix = 0; ix < gr.nx(); ++ix) {
        const Index node = gr.index_of(it, {ix, 0});
        const double xv = gr.x_of(node)(0), tv = gr.t_of(node);
        const Mat h = hessian_at(gr, u, node);
        err = std::max(err, std::abs(h(0, 0) + w * w * std::sin(w * xv) * std::cos(M_PI * tv)));
        err = std::max(err,
                       std::abs(h(0, 1) + w * M_PI * std::cos(w * xv) * std::sin(M_PI * tv)));
        err = std::max(err, std::abs(h(1, 1) + M_PI * M_PI * std::sin(w * xv) * std::cos(M_PI * tv)));
      }
    return err;
  };
  const double e16 = worst_err(16), e32 = worst_err(32);
  CHECK(e16 / e32 == doctest::Approx(4.0).epsilon(0.3));
}

TEST_CASE("d = 2 stencils reproduce separable fields") {
  const SpaceTimeGrid g(2, 16, 8, 1.0);
  const double w = 2.0 * M_PI;
  const DiscreteField u = sample(g, [&](Vec x, double t) {
    return std::cos(w * x(0)) * std::sin(w * x(1)) + 0.5 * t * t;
  });
  const Index node = g.index_of(4, {3, 5});
  const Vec x = g.x_of(node);
  const GradientPoint gp = gradient_at(g, u, node);
  CHECK(gp.p(0) ==
        doctest::Approx(-w * std::sin(w * x(0)) * std::sin(w * x(1))).epsilon(4e-2));
  CHECK(gp.p(1) ==
        doctest::Approx(w * std::cos(w * x(0)) * std::cos(w * x(1))).epsilon(4e-2));
  CHECK(gp.s == doctest::Approx(g.t_of(node)).epsilon(1e-12));
  const Mat h = hessian_at(g, u, node);
  CHECK(h(0, 1) ==
        doctest::Approx(-w * w * std::sin(w * x(0)) * std::cos(w * x(1))).epsilon(6e-2));
  CHECK(h(2, 2) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("field round-trips through the columnar text format bit-exactly") {
  const SpaceTimeGrid g(1, 16, 8, 0.75);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> dist(-10.0, 10.0);
  DiscreteField u(g.num_nodes());
  for (Index i = 0; i < u.size(); ++i) u(i) = dist(rng) * std::pow(10.0, int(i % 7) - 3);

  const auto path = std::filesystem::temp_directory_path() / "emfg_field_roundtrip.txt";
  write_field(path, g, u);
  const DiscreteField back = read_field(path, g);
  for (Index i = 0; i < u.size(); ++i) CHECK(back(i) == u(i));

  const SpaceTimeGrid other(1, 16, 10, 0.75);
  CHECK_THROWS_AS(read_field(path, other), IoError);
  std::filesystem::remove(path);
}
