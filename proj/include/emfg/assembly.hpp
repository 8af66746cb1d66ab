#pragma once

#include "emfg/grid.hpp"
#include "emfg/model.hpp"
#include "emfg/reform.hpp"
#include "emfg/types.hpp"

namespace emfg {

/// Discrete residual of the oblique problem. Interior rows carry
/// -tr(A(x,Du) D^2u) + b(x,Du); the t = 0 and t = T layers carry the
/// boundary operator. When `forcing` is given (one value per row) it is
/// subtracted, which is the hook for manufactured-solution testing.
///
/// `warm_cache`, when provided, seeds and stores per-node density inversion
/// warm starts; it must have num_nodes entries and is owned by the caller.
/// Inversion failures are rethrown with the node attached.
DiscreteField residual(const Model& model, const SpaceTimeGrid& grid, const DiscreteField& u,
                       const DiscreteField* forcing = nullptr,
                       DiscreteField* warm_cache = nullptr);

/// Analytic Jacobian of the residual, rows aligned with it. Interior rows
/// discretize the linearized operator
///   v -> -tr(A D^2 v) - (dq tr(A D^2u)) . Dv + (dq b) . Dv,
/// boundary rows come from the boundary-operator gradient.
SpMat jacobian(const Model& model, const SpaceTimeGrid& grid, const DiscreteField& u,
               DiscreteField* warm_cache = nullptr);

/// One-pass residual + Jacobian assembly at the same iterate.
void assemble_system(const Model& model, const SpaceTimeGrid& grid, const DiscreteField& u,
                     const DiscreteField* forcing, DiscreteField& r, SpMat& J,
                     DiscreteField* warm_cache = nullptr);

/// Per-row scales 1 + max_j |J_ij|, balancing interior rows against boundary
/// rows in the convergence norm.
Vec row_scales(const SpMat& J);

double scaled_sup_norm(const DiscreteField& r, const Vec& scales);

}  // namespace emfg
