#include "emfg/assembly.hpp"

#include <vector>

namespace emfg {

namespace {

double warm_at(const DiscreteField* cache, Index node) {
  if (!cache || cache->size() == 0) return 1.0;
  return (*cache)(node);
}

void store_warm(DiscreteField* cache, Index node, double m) {
  if (cache && cache->size() > 0) (*cache)(node) = m;
}

/// One-sided third-order time stencil on a boundary layer, as
/// (node offsets, weights); the initial face uses forward differences.
/// Must match the face branch of gradient_at.
struct TimeStencil {
  int offsets[4];
  double weights[4];
};

TimeStencil face_stencil(const SpaceTimeGrid& grid, bool initial) {
  const double h6 = 6.0 * grid.ht();
  if (initial) return {{0, 1, 2, 3}, {-11.0 / h6, 18.0 / h6, -9.0 / h6, 2.0 / h6}};
  return {{0, -1, -2, -3}, {11.0 / h6, -18.0 / h6, 9.0 / h6, -2.0 / h6}};
}

}  // namespace

DiscreteField residual(const Model& model, const SpaceTimeGrid& grid, const DiscreteField& u,
                       const DiscreteField* forcing, DiscreteField* warm_cache) {
  const Index n = grid.num_nodes();
  DiscreteField r(n);
  for (Index node = 0; node < n; ++node) {
    const GradientPoint gp = gradient_at(grid, u, node);
    try {
      if (grid.on_boundary(node)) {
        const TimeFace face =
            grid.on_initial_face(node) ? TimeFace::Initial : TimeFace::Terminal;
        r(node) = boundary_value(model, face, gp, warm_at(warm_cache, node));
        if (face == TimeFace::Terminal)
          store_warm(warm_cache, node, invert_h(model, gp.x, gp.p, gp.s, warm_at(warm_cache, node)));
      } else {
        const PointAssembly pa = assemble_point(model, gp, warm_at(warm_cache, node));
        store_warm(warm_cache, node, pa.m);
        const Mat hess = hessian_at(grid, u, node);
        r(node) = -(pa.A * hess).trace() + pa.b;
      }
    } catch (const InversionError& e) {
      throw e.at_node(node, grid.t_of(node));
    }
    if (forcing) r(node) -= (*forcing)(node);
  }
  return r;
}

namespace {

void assemble_impl(const Model& model, const SpaceTimeGrid& grid, const DiscreteField& u,
                   const DiscreteField* forcing, DiscreteField* r, SpMat* J,
                   DiscreteField* warm_cache) {
  const Index n = grid.num_nodes();
  const int d = grid.dim();
  const double hx = grid.hx(), ht = grid.ht();

  std::vector<Eigen::Triplet<double>> trip;
  if (J) trip.reserve(static_cast<std::size_t>(n) * (d == 1 ? 9 : 21));
  auto add = [&](Index row, Index col, double v) {
    if (v != 0.0) trip.emplace_back(row, col, v);
  };

  for (Index node = 0; node < n; ++node) {
    const GradientPoint gp = gradient_at(grid, u, node);
    try {
      if (grid.on_boundary(node)) {
        const bool initial = grid.on_initial_face(node);
        const TimeFace face = initial ? TimeFace::Initial : TimeFace::Terminal;
        const double warm = warm_at(warm_cache, node);
        if (r) (*r)(node) = boundary_value(model, face, gp, warm);
        if (!initial) store_warm(warm_cache, node, invert_h(model, gp.x, gp.p, gp.s, warm));
        if (J) {
          const BoundaryGradient bg = boundary_gradient(model, face, gp, warm);
          add(node, node, bg.dz);
          const TimeStencil ts = face_stencil(grid, initial);
          for (int k = 0; k < 4; ++k)
            add(node, grid.shift(node, d, ts.offsets[k]), bg.ds * ts.weights[k]);
          for (int a = 0; a < d; ++a) {
            add(node, grid.shift(node, a, +1), bg.dp(a) / (2.0 * hx));
            add(node, grid.shift(node, a, -1), -bg.dp(a) / (2.0 * hx));
          }
        }
      } else {
        const PointAssembly pa = assemble_point(model, gp, warm_at(warm_cache, node));
        store_warm(warm_cache, node, pa.m);
        const Mat hess = hessian_at(grid, u, node);
        if (r) (*r)(node) = -(pa.A * hess).trace() + pa.b;
        if (J) {
          const Linearization lin = linearize(pa, gp, hess);
          const Vec c = -lin.dq_quasilinear + lin.dq_source;  // first-order coefficients

          auto step = [&](int axis) { return axis == d ? ht : hx; };
          for (int a = 0; a <= d; ++a) {
            const double ha = step(a);
            const double waa = -pa.A(a, a) / (ha * ha);
            add(node, grid.shift(node, a, +1), waa);
            add(node, grid.shift(node, a, -1), waa);
            add(node, node, -2.0 * waa);
            for (int bax = a + 1; bax <= d; ++bax) {
              const double hb = step(bax);
              const double w = -2.0 * pa.A(a, bax) / (4.0 * ha * hb);
              add(node, grid.shift(grid.shift(node, a, +1), bax, +1), w);
              add(node, grid.shift(grid.shift(node, a, -1), bax, -1), w);
              add(node, grid.shift(grid.shift(node, a, +1), bax, -1), -w);
              add(node, grid.shift(grid.shift(node, a, -1), bax, +1), -w);
            }
            // first-order centered difference along this axis
            add(node, grid.shift(node, a, +1), c(a) / (2.0 * ha));
            add(node, grid.shift(node, a, -1), -c(a) / (2.0 * ha));
          }
        }
      }
    } catch (const InversionError& e) {
      throw e.at_node(node, grid.t_of(node));
    }
    if (r && forcing) (*r)(node) -= (*forcing)(node);
  }

  if (J) {
    J->resize(n, n);
    J->setFromTriplets(trip.begin(), trip.end());
    J->makeCompressed();
  }
}

}  // namespace

SpMat jacobian(const Model& model, const SpaceTimeGrid& grid, const DiscreteField& u,
               DiscreteField* warm_cache) {
  SpMat J;
  assemble_impl(model, grid, u, nullptr, nullptr, &J, warm_cache);
  return J;
}

void assemble_system(const Model& model, const SpaceTimeGrid& grid, const DiscreteField& u,
                     const DiscreteField* forcing, DiscreteField& r, SpMat& J,
                     DiscreteField* warm_cache) {
  r.resize(grid.num_nodes());
  assemble_impl(model, grid, u, forcing, &r, &J, warm_cache);
}

Vec row_scales(const SpMat& J) {
  Vec scales = Vec::Ones(J.rows());
  for (int k = 0; k < J.outerSize(); ++k)
    for (SpMat::InnerIterator it(J, k); it; ++it)
      scales(it.row()) = std::max(scales(it.row()), 1.0 + std::abs(it.value()));
  return scales;
}

double scaled_sup_norm(const DiscreteField& r, const Vec& scales) {
  return (r.cwiseQuotient(scales)).cwiseAbs().maxCoeff();
}

}  // namespace emfg
