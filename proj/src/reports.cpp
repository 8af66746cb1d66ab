#include "emfg/reports.hpp"

#include <cmath>
#include <fstream>

namespace emfg {

namespace {

Json number_or_null(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

}  // namespace

Json to_json(const RunConfig& cfg) {
  Json j;
  j["model"] = {{"name", cfg.model.name},       {"kappa_v", cfg.model.kappa_v},
                {"a", cfg.model.m0_amplitude},  {"alpha", cfg.model.alpha},
                {"c0", cfg.model.c0},           {"gamma", cfg.model.gamma},
                {"f", cfg.model.f},             {"g", cfg.model.g},
                {"C0", cfg.model.C0}};
  j["grid"] = {{"d", cfg.grid.d},
               {"nx", cfg.grid.nx},
               {"nt", cfg.grid.nt},
               {"t_horizon", cfg.grid.t_horizon}};
  j["continuation"] = {{"dtheta_init", cfg.continuation.dtheta_init},
                       {"dtheta_max", cfg.continuation.dtheta_max},
                       {"max_halvings", cfg.continuation.max_halvings},
                       {"newton_tol", cfg.continuation.newton_tol},
                       {"newton_max_iter", cfg.continuation.newton_max_iter},
                       {"armijo_c", cfg.continuation.armijo_c},
                       {"armijo_min_step", cfg.continuation.armijo_min_step}};
  j["check"] = {{"samples", cfg.check.samples},
                {"p_max", cfg.check.p_max},
                {"m_min", cfg.check.m_min},
                {"m_max", cfg.check.m_max}};
  j["certify"] = {{"search_cmax", cfg.certify.search_cmax},
                  {"u_field", cfg.certify.u_field},
                  {"m_field", cfg.certify.m_field}};
  j["convergence"] = {{"grids", cfg.convergence.grids},
                      {"order_min", cfg.convergence.order_min},
                      {"order_max", cfg.convergence.order_max}};
  j["output"] = {{"dir", cfg.output.dir}};
  return j;
}

Json to_json(const ContinuationTrace& trace) {
  Json steps = Json::array();
  for (const auto& e : trace.steps) {
    steps.push_back({{"theta", e.theta},
                     {"iters", e.newton_iterations},
                     {"residual", e.final_residual},
                     {"min_m", e.min_m},
                     {"max_m", e.max_m},
                     {"max_grad", e.max_grad},
                     {"min_gap", e.min_gap}});
  }
  return steps;
}

Json to_json(const ContinuationResult& result) {
  Json j;
  j["status"] = result.status == ContinuationStatus::Success ? "success" : "stalled";
  j["theta_reached"] = result.theta_reached;
  if (result.status == ContinuationStatus::Stalled) {
    j["theta_stall"] = result.theta_stall;
    j["last_newton_status"] = to_string(result.last_newton.status);
    j["last_newton_detail"] = result.last_newton.detail;
  }
  j["steps"] = to_json(result.trace);
  return j;
}

Json to_json(const AssumptionReport& report) {
  Json checks;
  for (const auto& c : report.checks) {
    Json worst;
    worst["x"] = std::vector<double>(c.worst_point.x.data(),
                                     c.worst_point.x.data() + c.worst_point.x.size());
    worst["p"] = std::vector<double>(c.worst_point.p.data(),
                                     c.worst_point.p.data() + c.worst_point.p.size());
    worst["m"] = c.worst_point.m;
    checks[c.name] = {{"samples", c.samples},
                      {"violations", c.violations},
                      {"worst_margin", c.worst_margin},
                      {"worst_point", worst}};
  }
  Json j;
  j["total_violations"] = report.total_violations();
  j["checks"] = checks;
  return j;
}

Json to_json(const CertificateReport& rep) {
  Json j;
  j["mass_drift"] = rep.mass_drift;
  j["min_m"] = rep.min_m;
  j["max_m"] = rep.max_m;
  j["grad_bound"] = rep.grad_bound;
  j["level_constant"] = rep.level_constant;
  j["density_floor"] = number_or_null(rep.density_floor);
  j["density_ceiling"] = number_or_null(rep.density_ceiling);
  j["ceiling_degenerate"] = rep.ceiling_degenerate;
  j["min_ellipticity_gap"] = rep.min_gap;
  j["hjb_residual"] = rep.hjb_norm;
  j["continuity_residual"] = rep.continuity_norm;
  j["smallest_C"] = number_or_null(rep.smallest_C);
  j["oblique_initial_max_ds"] = rep.oblique.initial_max_ds;
  j["oblique_terminal_min_ds"] = rep.oblique.terminal_min_ds;
  j["checks"] = {{"mass", rep.mass_pass},
                 {"positivity", rep.positivity_pass},
                 {"density_interval", rep.density_interval_pass},
                 {"ellipticity", rep.ellipticity_pass},
                 {"hjb_residual", rep.hjb_pass},
                 {"value_bounds", rep.value_bounds_pass},
                 {"terminal_density_interval", rep.terminal_interval_pass},
                 {"oblique_signs", rep.oblique_pass}};
  j["all_pass"] = rep.all_pass();
  return j;
}

Json to_json(const ConvergenceStudy& study) {
  Json j;
  j["grids"] = study.grid_sizes;
  j["u_diffs"] = study.u_diffs;
  j["m_diffs"] = study.m_diffs;
  j["continuity_norms"] = study.continuity_norms;
  j["exact"] = study.exact;
  j["u_order"] = number_or_null(study.u_order);
  j["m_order"] = number_or_null(study.m_order);
  return j;
}

void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace emfg
