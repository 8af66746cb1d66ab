#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emfg/errors.hpp"
#include "emfg/types.hpp"

namespace emfg {

/// Densities below this are rejected rather than clamped.
inline constexpr double kDensityFloor = 1e-12;

/// Structural constants and growth envelopes shared by every model.
///
/// psi is non-increasing, Cbar continuous and positive; both are carried as
/// plain callables and checked on sampled arguments only.
struct ModelConstants {
  double C0 = 1.0;
  double gamma = 2.0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  std::function<double(double)> psi;
  std::function<double(double)> Cbar;

  /// Throws std::invalid_argument unless C0 > 0, gamma > 1, 0 <= gamma1,
  /// gamma2 <= gamma1 <= gamma, gamma2 < 2*gamma1 - gamma + 2, psi is
  /// non-increasing on samples and (when gamma1 < gamma) bounded away from
  /// zero for large arguments.
  void validate() const;
};

/// One evaluation of the Hamiltonian and flux stacks at a point (x, p, m).
///
/// Layout conventions:
///   dpB(i,j)   = dB_i/dp_j          dxB(i,j)  = dB_i/dx_j
///   dxpH(i,j)  = d2H/dx_i dp_j      dxBm(i,j) = d2B_i/dx_j dm
///   dppB.slice(i)(j,k) = d2B_i/dp_j dp_k, and likewise dxpB (x_j, p_k)
///   and dxxB (x_j, x_k).
struct EvalRecord {
  double H = 0.0;
  Vec dpH;
  double Hm = 0.0;
  Mat dppH;
  Mat dxpH;
  Vec dxH;
  double Hmm = 0.0;
  Vec dpHm;
  Vec dxHm;
  Mat dxxH;

  Vec B;
  Vec Bm;
  Mat dpB;
  Mat dpBm;
  Vec Bmm;
  Mat dxB;
  double divxB = 0.0;
  Mat dxBm;
  Tensor3 dppB, dxpB, dxxB;

  void resize(int d);

  /// Calls f(name, max_abs, is_finite) for every stored quantity.
  template <class F>
  void visit(F&& f) const {
    auto scalar = [&](const char* n, double v) { f(n, std::abs(v), std::isfinite(v)); };
    auto dense = [&](const char* n, const auto& v) { f(n, sup_norm(v), v.allFinite()); };
    auto tensor = [&](const char* n, const Tensor3& v) {
      f(n, v.frobenius_norm(), v.all_finite());
    };
    scalar("H", H);
    dense("dpH", dpH);
    scalar("Hm", Hm);
    dense("dppH", dppH);
    dense("dxpH", dxpH);
    dense("dxH", dxH);
    scalar("Hmm", Hmm);
    dense("dpHm", dpHm);
    dense("dxHm", dxHm);
    dense("dxxH", dxxH);
    dense("B", B);
    dense("Bm", Bm);
    dense("dpB", dpB);
    dense("dpBm", dpBm);
    dense("Bmm", Bmm);
    dense("dxB", dxB);
    scalar("divxB", divxB);
    dense("dxBm", dxBm);
    tensor("dppB", dppB);
    tensor("dxpB", dxpB);
    tensor("dxxB", dxxB);
  }
};

struct TerminalCost {
  double g = 0.0;
  double gm = 0.0;
  Vec dxg;
};

struct InitialDensity {
  double value = 0.0;
  Vec gradient;
};

/// A Hamiltonian/flux/terminal-cost/initial-density bundle with full
/// derivative stacks. Evaluators are pure and reentrant.
class Model {
public:
  virtual ~Model() = default;

  int dim() const { return d_; }
  const std::string& name() const { return name_; }
  const ModelConstants& constants() const { return constants_; }

  /// Full derivative record at (x, p, m). Throws ModelEvalError when m is
  /// below the density floor or any entry comes out non-finite.
  EvalRecord eval(const Vec& x, const Vec& p, double m) const;

  virtual double hamiltonian(const Vec& x, const Vec& p, double m) const = 0;
  virtual double hamiltonian_m(const Vec& x, const Vec& p, double m) const = 0;
  virtual TerminalCost terminal_cost(const Vec& x, double m) const = 0;
  virtual InitialDensity initial_density(const Vec& x) const = 0;

  /// Registered inverse of m -> H(x, p, m), when the model has one in closed
  /// form. The numeric path remains the reference oracle in tests.
  virtual std::optional<double> closed_form_inverse(const Vec& x, const Vec& p, double s) const {
    (void)x;
    (void)p;
    (void)s;
    return std::nullopt;
  }

  /// Continuous extension of B to m = 0, when it exists. Models whose flux
  /// has no continuous zero-density extension (e.g. congestion with c0 = 0
  /// and alpha >= 1) return nullopt and are validated on m > 0 only.
  virtual std::optional<Vec> flux_at_zero_density(const Vec& x, const Vec& p) const {
    (void)x;
    (void)p;
    return Vec::Zero(d_);
  }

protected:
  Model(std::string name, int d, ModelConstants constants);

  virtual void eval_impl(const Vec& x, const Vec& p, double m, EvalRecord& out) const = 0;

private:
  std::string name_;
  int d_;
  ModelConstants constants_;
};

using ModelPtr = std::shared_ptr<const Model>;

struct SamplePoint {
  Vec x;
  Vec p;
  double m = 1.0;
};

/// Quasi-random sample of the (x, p, m) box: x over the torus, p uniform in
/// [-p_max, p_max]^d, m log-uniform in [m_min, m_max].
std::vector<SamplePoint> sample_box(int d, int n, double p_max, double m_min, double m_max);

/// Sampled structural validation: H_m < 0 and g_m > 0 everywhere sampled,
/// m0 positive with unit mass, and B(x, p, 0) = 0 where the flux extends to
/// zero density. Throws std::invalid_argument listing the failures.
void validate_model(const Model& model, int mass_resolution = 512);

/// Max relative discrepancy per derivative evaluator between the analytic
/// value and a centered difference of its parent quantity, over the given
/// points. Discrepancies are measured as |a - fd| / max(1, |a|, |fd|).
std::map<std::string, double> fd_self_check(const Model& model,
                                            std::span<const SamplePoint> points, double h);

}  // namespace emfg
