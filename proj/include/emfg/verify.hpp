#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "emfg/grid.hpp"
#include "emfg/model.hpp"
#include "emfg/solver.hpp"

namespace emfg {

/// Sample box for the assumption checker: x covers the torus, p the cube
/// [-p_max, p_max]^d, m is log-uniform in [m_min, m_max].
struct CheckBox {
  double p_max = 10.0;
  double m_min = 0.05;
  double m_max = 20.0;
};

struct CheckRecord {
  std::string name;
  long samples = 0;
  long violations = 0;
  double worst_margin = 0.0;  // smallest margin seen; negative means violated
  SamplePoint worst_point;
};

struct AssumptionReport {
  std::vector<CheckRecord> checks;

  long total_violations() const;
  const CheckRecord* find(const std::string& name) const;
};

/// Samples every structural inequality of the model class (growth envelopes
/// for H and B, terminal-cost range, coercivity, strict ellipticity, and the
/// exponent relation) at n quasi-random points of the box. Matrix
/// inequalities are decided by the smallest eigenvalue of the difference
/// with a -1e-10 roundoff slack. Reporting only; never throws on violations.
AssumptionReport check_assumptions(const Model& model, const CheckBox& box, int n_samples);

/// Spatial extremes of the Hamiltonian at rest and of the terminal cost,
/// their monotone inverses, the density ceiling h, and the density floor
/// delta_K, all evaluated by sampling and monotone bisection.
class BoundFunctions {
public:
  explicit BoundFunctions(ModelPtr model, int x_resolution = 0, int p_resolution = 64,
                          double p_max = 1e3);

  double f0(double m) const;  // min over x of -H(x, 0, m)
  double f1(double m) const;  // max over x of -H(x, 0, m)
  double g0(double m) const;  // min over x of g(x, m)
  double g1(double m) const;  // max over x of g(x, m)

  // Monotone inverses; throw RangeError when the target is unreachable.
  double f0_inv(double y) const;
  double f1_inv(double y) const;
  double g0_inv(double y) const;
  double g1_inv(double y) const;

  struct Ceiling {
    double value = 0.0;
    bool degenerate = false;  // criterion set empty; value 0 is returned
  };
  /// Largest density whose growth envelope sup_{x,p}(H - C0 psi(m)|p|^gamma)
  /// still reaches -s.
  Ceiling h(double s) const;

  /// Infimum over sampled (x, p) of the inverted density at level K.
  double delta_K(double K) const;

  /// sup over sampled (x, p) of H(x,p,m) - C0 psi(m) |p|^gamma.
  double envelope(double m) const;

private:
  ModelPtr model_;
  std::vector<Vec> x_samples_;
  std::vector<Vec> p_samples_;  // includes p = 0
};

struct SolutionBounds {
  double u_lower = 0.0;
  double u_upper = 0.0;
};

/// Two-sided value bound at time t for comparison constant C:
///   g0(f1^{-1}(-C)) - C(e^{CT} - e^{Ct}) <= u <= g1(f0^{-1}(C)) + C(e^{CT} - e^{Ct}).
SolutionBounds value_bounds(const BoundFunctions& bf, double C, double T, double t);

/// Terminal-density interval [g1^{-1} g0 f1^{-1}(-C), g0^{-1} g1 f0^{-1}(C)].
std::pair<double, double> terminal_density_interval(const BoundFunctions& bf, double C);

struct MfgResidual {
  double hjb_norm = 0.0;         // sup |-u_t + H(x, D_x u, m)|
  double continuity_norm = 0.0;  // sup over interior layers of |m_t - div B|
};

/// Round-trip residuals of the original forward-backward system for a
/// solved (u, m) pair.
MfgResidual mfg_residual(const Model& model, const SpaceTimeGrid& grid, const DiscreteField& u,
                         const DiscreteField& m);

struct ObliqueMargins {
  double initial_max_ds = 0.0;   // max over t=0 nodes of dN/ds (should be < 0)
  double terminal_min_ds = 0.0;  // min over t=T nodes of dN/ds (should be > 0)
};

ObliqueMargins oblique_margins(const Model& model, const SpaceTimeGrid& grid,
                               const DiscreteField& u);

struct CertificateReport {
  double mass_drift = 0.0;
  double min_m = 0.0;
  double max_m = 0.0;
  double grad_bound = 0.0;     // observed sup |(D_x u, u_t)|
  double level_constant = 0.0;  // grad_bound + C0 psi(floor) sup|D_x u|^gamma
  double density_floor = 0.0;  // delta at the observed gradient bound
  double density_ceiling = 0.0;
  bool ceiling_degenerate = false;
  double min_gap = 0.0;
  double hjb_norm = 0.0;
  double continuity_norm = 0.0;
  double smallest_C = 0.0;  // NaN when no C <= search_Cmax validates the bounds
  ObliqueMargins oblique;

  bool mass_pass = false;
  bool positivity_pass = false;
  bool density_interval_pass = false;
  bool ellipticity_pass = false;
  bool hjb_pass = false;
  bool value_bounds_pass = false;
  bool terminal_interval_pass = false;
  bool oblique_pass = false;

  bool all_pass() const;
};

/// Certificate engine: mass drift, positivity, the two-sided density
/// interval driven by the observed gradient bound, ellipticity gap,
/// round-trip residuals, oblique-direction signs, and the smallest constant
/// C <= search_Cmax (bisected to 2 decimals) for which the value and
/// terminal-density bounds hold. Pure reporting; mutates nothing.
CertificateReport certify(ModelPtr model, const SpaceTimeGrid& grid, const DiscreteField& u,
                          const DiscreteField& m, double search_Cmax = 10.0);

struct ConvergenceStudy {
  std::vector<int> grid_sizes;           // Nx = Nt per run
  std::vector<double> u_diffs;           // coarse-node sup norms between levels
  std::vector<double> m_diffs;
  std::vector<double> continuity_norms;  // one per grid
  double u_order = 0.0;
  double m_order = 0.0;
  bool exact = false;  // both differences below 1e-12
};

/// Runs the continuation on each grid of a nested sequence (sizes doubling)
/// and estimates observed orders by Richardson comparison on coarse nodes.
/// A stall on any grid propagates as StallError.
ConvergenceStudy self_convergence(ModelPtr model, std::span<const int> grid_sizes, int d,
                                  double T, const ContinuationConfig& cfg);

}  // namespace emfg
