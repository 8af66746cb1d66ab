#include "emfg/solver.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <sstream>

#include "emfg/reform.hpp"

namespace emfg {

void ContinuationConfig::validate() const {
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive(dtheta_init) || !positive(dtheta_max) || !positive(newton_tol) ||
      !positive(armijo_c) || !positive(armijo_min_step))
    throw std::invalid_argument("continuation config: all parameters must be positive");
  if (max_halvings <= 0 || newton_max_iter <= 0)
    throw std::invalid_argument("continuation config: iteration limits must be positive");
  if (dtheta_init > dtheta_max)
    throw std::invalid_argument("continuation config: dtheta_init must not exceed dtheta_max");
}

namespace {

class ThetaModel final : public Model {
public:
  ThetaModel(ModelPtr base, double theta)
      : Model(base->name() + "@theta", base->dim(), base->constants()),
        base_(std::move(base)),
        theta_(theta),
        origin_(Vec::Zero(base_->dim())) {}

  double hamiltonian(const Vec& x, const Vec& p, double m) const override {
    if (theta_ == 1.0) return base_->hamiltonian(x, p, m);
    return theta_ * base_->hamiltonian(x, p, m) +
           (1.0 - theta_) * base_->hamiltonian(origin_, p, m);
  }

  double hamiltonian_m(const Vec& x, const Vec& p, double m) const override {
    if (theta_ == 1.0) return base_->hamiltonian_m(x, p, m);
    return theta_ * base_->hamiltonian_m(x, p, m) +
           (1.0 - theta_) * base_->hamiltonian_m(origin_, p, m);
  }

  TerminalCost terminal_cost(const Vec& x, double m) const override {
    TerminalCost tc = base_->terminal_cost(x, m);
    if (theta_ == 1.0) return tc;
    tc.g = theta_ * tc.g + (1.0 - theta_) * m;
    tc.gm = theta_ * tc.gm + (1.0 - theta_);
    tc.dxg *= theta_;
    return tc;
  }

  InitialDensity initial_density(const Vec& x) const override {
    InitialDensity id = base_->initial_density(x);
    if (theta_ == 1.0) return id;
    id.value = theta_ * id.value + (1.0 - theta_);
    id.gradient *= theta_;
    return id;
  }

  std::optional<double> closed_form_inverse(const Vec& x, const Vec& p,
                                            double s) const override {
    if (theta_ == 1.0) return base_->closed_form_inverse(x, p, s);
    return std::nullopt;  // a blend of closed forms is not closed form
  }

  std::optional<Vec> flux_at_zero_density(const Vec& x, const Vec& p) const override {
    const auto at_x = base_->flux_at_zero_density(x, p);
    if (theta_ == 1.0) return at_x;
    const auto at_0 = base_->flux_at_zero_density(origin_, p);
    if (!at_x || !at_0) return std::nullopt;
    return (theta_ * *at_x + (1.0 - theta_) * *at_0).eval();
  }

protected:
  void eval_impl(const Vec& x, const Vec& p, double m, EvalRecord& r) const override {
    if (theta_ == 1.0) {
      r = base_->eval(x, p, m);
      return;
    }
    r = base_->eval(x, p, m);
    const EvalRecord frozen = base_->eval(origin_, p, m);
    const double th = theta_, om = 1.0 - theta_;

    // Quantities without x-derivatives blend; the frozen part of any
    // x-derivative vanishes, leaving a plain theta scaling.
    r.H = th * r.H + om * frozen.H;
    r.dpH = th * r.dpH + om * frozen.dpH;
    r.Hm = th * r.Hm + om * frozen.Hm;
    r.dppH = th * r.dppH + om * frozen.dppH;
    r.Hmm = th * r.Hmm + om * frozen.Hmm;
    r.dpHm = th * r.dpHm + om * frozen.dpHm;
    r.B = th * r.B + om * frozen.B;
    r.Bm = th * r.Bm + om * frozen.Bm;
    r.dpB = th * r.dpB + om * frozen.dpB;
    r.dpBm = th * r.dpBm + om * frozen.dpBm;
    r.Bmm = th * r.Bmm + om * frozen.Bmm;
    for (Index i = 0; i < r.dppB.extent0(); ++i)
      r.dppB.slice(i) = th * r.dppB.slice(i) + om * frozen.dppB.slice(i);

    r.dxH *= th;
    r.dxpH *= th;
    r.dxHm *= th;
    r.dxxH *= th;
    r.dxB *= th;
    r.divxB *= th;
    r.dxBm *= th;
    for (Index i = 0; i < r.dxpB.extent0(); ++i) r.dxpB.slice(i) *= th;
    for (Index i = 0; i < r.dxxB.extent0(); ++i) r.dxxB.slice(i) *= th;
  }

private:
  ModelPtr base_;
  double theta_;
  Vec origin_;
};

std::string node_detail(const InversionError& e) {
  std::ostringstream os;
  os << "inversion failed at node " << e.node << " (t=" << e.t << ", x=[";
  for (Index k = 0; k < e.x.size(); ++k) os << (k ? "," : "") << e.x(k);
  os << "], s=" << e.s << ")";
  return os.str();
}

}  // namespace

ModelPtr theta_model(ModelPtr model, double theta) {
  if (!(theta >= 0.0 && theta <= 1.0))
    throw std::invalid_argument("theta must lie in [0, 1]");
  return std::make_shared<ThetaModel>(std::move(model), theta);
}

DiscreteField base_solution(const Model& model, const SpaceTimeGrid& grid) {
  const Vec origin = Vec::Zero(model.dim());
  const double c = model.hamiltonian(origin, origin, 1.0);
  DiscreteField u(grid.num_nodes());
  for (Index node = 0; node < grid.num_nodes(); ++node)
    u(node) = (grid.t_of(node) - grid.horizon()) * c + 1.0;
  return u;
}

std::string to_string(NewtonStatus s) {
  switch (s) {
    case NewtonStatus::Converged: return "converged";
    case NewtonStatus::MaxIterations: return "max_iterations";
    case NewtonStatus::ArmijoUnderflow: return "armijo_underflow";
    case NewtonStatus::LinearSolveFailure: return "linear_solve_failure";
    case NewtonStatus::InversionFailure: return "inversion_failure";
  }
  return "unknown";
}

NewtonResult newton_solve(const Model& model, const SpaceTimeGrid& grid, DiscreteField u0,
                          const ContinuationConfig& cfg, const DiscreteField* forcing) {
  cfg.validate();
  NewtonResult res;
  res.u = std::move(u0);
  NewtonReport& rep = res.report;

  DiscreteField warm = DiscreteField::Ones(grid.num_nodes());
  DiscreteField r;
  SpMat J;

  for (int iter = 0; iter <= cfg.newton_max_iter; ++iter) {
    try {
      assemble_system(model, grid, res.u, forcing, r, J, &warm);
    } catch (const InversionError& e) {
      rep.status = NewtonStatus::InversionFailure;
      rep.detail = node_detail(e);
      return res;
    }
    const Vec scales = row_scales(J);
    const double rnorm = scaled_sup_norm(r, scales);
    rep.residual_history.push_back(rnorm);
    if (rnorm <= cfg.newton_tol) {
      rep.status = NewtonStatus::Converged;
      rep.iterations = iter;
      return res;
    }
    if (iter == cfg.newton_max_iter) break;

    Eigen::SparseLU<SpMat> lu(J);
    if (lu.info() != Eigen::Success) {
      rep.status = NewtonStatus::LinearSolveFailure;
      rep.detail = "sparse LU factorization failed";
      rep.iterations = iter;
      return res;
    }
    Vec delta = lu.solve(-r.matrix());
    delta += lu.solve(-(r.matrix() + J * delta));  // one refinement pass
    const double j_max = scales.maxCoeff();        // scales carry 1 + max|row|
    const double backward = sup_norm(J * delta + r) /
                            (j_max * std::max(sup_norm(delta), 1e-300) + sup_norm(r));
    if (!delta.allFinite() || backward > 1e-12) {
      rep.status = NewtonStatus::LinearSolveFailure;
      rep.detail = "linear solve exceeded the 1e-12 relative-residual contract";
      rep.iterations = iter;
      return res;
    }

    // Armijo backtracking on the scaled residual norm; trial iterates that
    // leave the inversion domain count as rejections.
    double alpha = 1.0;
    bool accepted = false;
    while (alpha >= cfg.armijo_min_step) {
      const DiscreteField trial = res.u + alpha * delta;
      double tnorm;
      try {
        const DiscreteField rt = residual(model, grid, trial, forcing, &warm);
        tnorm = scaled_sup_norm(rt, scales);
      } catch (const InversionError& e) {
        rep.detail = node_detail(e);
        alpha *= 0.5;
        continue;
      }
      if (tnorm <= (1.0 - cfg.armijo_c * alpha) * rnorm) {
        res.u = trial;
        rep.step_history.push_back(alpha);
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      rep.status = rep.detail.empty() ? NewtonStatus::ArmijoUnderflow
                                      : NewtonStatus::InversionFailure;
      if (rep.detail.empty()) rep.detail = "line search fell below the minimum step";
      rep.iterations = iter;
      return res;
    }
    rep.detail.clear();
  }

  rep.status = NewtonStatus::MaxIterations;
  rep.iterations = cfg.newton_max_iter;
  rep.detail = "Newton did not reach tolerance";
  return res;
}

DiscreteField recover_m(const Model& model, const SpaceTimeGrid& grid, const DiscreteField& u) {
  DiscreteField m(grid.num_nodes());
  double warm = 1.0;
  for (Index node = 0; node < grid.num_nodes(); ++node) {
    const GradientPoint gp = gradient_at(grid, u, node);
    try {
      m(node) = invert_h(model, gp.x, gp.p, gp.s, warm);
    } catch (const InversionError& e) {
      throw e.at_node(node, grid.t_of(node));
    }
    warm = m(node);
  }
  return m;
}

namespace {

TraceEntry make_entry(const Model& model, const SpaceTimeGrid& grid, const DiscreteField& u,
                      double theta, const NewtonReport& rep) {
  TraceEntry e;
  e.theta = theta;
  e.newton_iterations = rep.iterations;
  e.final_residual = rep.residual_history.empty() ? 0.0 : rep.residual_history.back();
  const DiscreteField m = recover_m(model, grid, u);
  e.min_m = m.minCoeff();
  e.max_m = m.maxCoeff();
  double max_grad = 0.0, min_gap = std::numeric_limits<double>::infinity();
  for (Index node = 0; node < grid.num_nodes(); ++node) {
    const GradientPoint gp = gradient_at(grid, u, node);
    max_grad = std::max(max_grad, std::sqrt(gp.p.squaredNorm() + gp.s * gp.s));
    min_gap = std::min(min_gap, ellipticity_gap(model, gp.x, gp.p, m(node)));
  }
  e.max_grad = max_grad;
  e.min_gap = min_gap;
  return e;
}

}  // namespace

ContinuationResult continuation_solve(ModelPtr model, const SpaceTimeGrid& grid,
                                      const ContinuationConfig& cfg) {
  cfg.validate();
  ContinuationResult out;

  const ModelPtr frozen = theta_model(model, 0.0);
  DiscreteField u = base_solution(*frozen, grid);
  NewtonResult base = newton_solve(*frozen, grid, std::move(u), cfg);
  out.last_newton = base.report;
  if (base.report.status != NewtonStatus::Converged) {
    out.status = ContinuationStatus::Stalled;
    out.theta_stall = 0.0;
    out.u = std::move(base.u);
    return out;
  }
  u = std::move(base.u);
  out.trace.steps.push_back(make_entry(*frozen, grid, u, 0.0, base.report));

  double theta = 0.0;
  double dtheta = cfg.dtheta_init;
  int consecutive = 0;
  int halvings = 0;

  while (theta < 1.0) {
    const double target = std::min(theta + dtheta, 1.0);
    const ModelPtr blended = theta_model(model, target);
    NewtonResult step = newton_solve(*blended, grid, u, cfg);
    out.last_newton = step.report;
    if (step.report.status == NewtonStatus::Converged) {
      u = std::move(step.u);
      theta = target;
      out.trace.steps.push_back(make_entry(*blended, grid, u, theta, step.report));
      halvings = 0;
      if (++consecutive >= 2) {
        dtheta = std::min(2.0 * dtheta, cfg.dtheta_max);
        consecutive = 0;
      }
    } else {
      consecutive = 0;
      if (++halvings > cfg.max_halvings) {
        out.status = ContinuationStatus::Stalled;
        out.theta_reached = theta;
        out.theta_stall = target;
        out.u = std::move(u);
        return out;
      }
      dtheta *= 0.5;
    }
  }

  out.status = ContinuationStatus::Success;
  out.theta_reached = 1.0;
  out.theta_stall = 0.0;
  out.u = std::move(u);
  return out;
}

}  // namespace emfg
