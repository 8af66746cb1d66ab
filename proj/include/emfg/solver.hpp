#pragma once

#include <string>
#include <vector>

#include "emfg/assembly.hpp"
#include "emfg/grid.hpp"
#include "emfg/model.hpp"

namespace emfg {

struct ContinuationConfig {
  double dtheta_init = 0.1;
  double dtheta_max = 0.25;
  int max_halvings = 8;
  double newton_tol = 1e-9;  // on the row-scaled residual sup norm
  int newton_max_iter = 30;
  double armijo_c = 1e-4;
  double armijo_min_step = 1e-4;

  void validate() const;  // throws std::invalid_argument
};

/// Homotopy blend of a model toward its x-frozen counterpart:
///   H_theta(x,p,m) = theta H(x,p,m) + (1-theta) H(0,p,m), likewise B;
///   g_theta = theta g + (1-theta) m;  m0_theta = theta m0 + (1-theta).
/// theta = 1 passes the original model through exactly.
ModelPtr theta_model(ModelPtr model, double theta);

/// Exact solution of the fully blended (theta = 0) problem sampled on the
/// grid: u(x,t) = (t - T) H(0,0,1) + 1, whose recovered density is 1.
DiscreteField base_solution(const Model& model, const SpaceTimeGrid& grid);

enum class NewtonStatus {
  Converged,
  MaxIterations,
  ArmijoUnderflow,
  LinearSolveFailure,
  InversionFailure
};

std::string to_string(NewtonStatus s);

struct NewtonReport {
  NewtonStatus status = NewtonStatus::MaxIterations;
  int iterations = 0;
  std::vector<double> residual_history;  // scaled sup norms, one per iterate
  std::vector<double> step_history;      // accepted damping factors
  std::string detail;
};

struct NewtonResult {
  DiscreteField u;  // the solution on success, the last iterate otherwise
  NewtonReport report;
};

/// Damped Newton on the discrete oblique system. Trial steps that leave the
/// density-inversion domain are treated as line-search rejections rather
/// than hard errors.
NewtonResult newton_solve(const Model& model, const SpaceTimeGrid& grid, DiscreteField u0,
                          const ContinuationConfig& cfg,
                          const DiscreteField* forcing = nullptr);

struct TraceEntry {
  double theta = 0.0;
  int newton_iterations = 0;
  double final_residual = 0.0;
  double min_m = 0.0;
  double max_m = 0.0;
  double max_grad = 0.0;  // sup over nodes of |(D_x u, u_t)|
  double min_gap = 0.0;   // sup-norm certified ellipticity gap minimum
};

struct ContinuationTrace {
  std::vector<TraceEntry> steps;  // theta strictly increasing; ends at 1 on success
};

enum class ContinuationStatus { Success, Stalled };

struct ContinuationResult {
  DiscreteField u;  // solution at theta = 1 on success, last accepted otherwise
  ContinuationTrace trace;
  ContinuationStatus status = ContinuationStatus::Stalled;
  double theta_reached = 0.0;
  double theta_stall = 0.0;  // failing target when stalled
  NewtonReport last_newton;
};

/// Predictor-corrector continuation in theta with adaptive steps: halve on
/// Newton failure (up to max_halvings), double after two consecutive
/// successes, cap at dtheta_max. The predictor is the previous solution.
ContinuationResult continuation_solve(ModelPtr model, const SpaceTimeGrid& grid,
                                      const ContinuationConfig& cfg);

/// Density recovered nodewise from the value function by inverting the
/// Hamiltonian at (x, D_x u, u_t). Inversion failures carry the node.
DiscreteField recover_m(const Model& model, const SpaceTimeGrid& grid, const DiscreteField& u);

}  // namespace emfg
