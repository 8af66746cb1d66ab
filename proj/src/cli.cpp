#include "emfg/cli.hpp"

#include <iostream>
#include <optional>

#include "emfg/reports.hpp"

namespace emfg {

namespace {

namespace fs = std::filesystem;

int invariant_failure(const std::exception& e) {
  std::cerr << "error: " << e.what() << '\n';
  return kExitInvariant;
}

}  // namespace

int run_solve(const RunConfig& cfg, const fs::path& out_dir) {
  ModelPtr model;
  std::optional<SpaceTimeGrid> grid;
  try {
    model = cfg.make_model();
    validate_model(*model);
    grid.emplace(cfg.make_grid());
  } catch (const std::invalid_argument& e) {
    return invariant_failure(e);
  }

  fs::create_directories(out_dir);
  const ContinuationResult result = continuation_solve(model, *grid, cfg.continuation);

  Json trace = to_json(result);
  trace["config"] = to_json(cfg);
  write_json(out_dir / "trace.json", trace);

  if (result.status != ContinuationStatus::Success) {
    std::cerr << "continuation stalled at theta=" << result.theta_stall << " ("
              << to_string(result.last_newton.status) << ")\n";
    return kExitStall;
  }

  const DiscreteField m = recover_m(*theta_model(model, 1.0), *grid, result.u);
  write_field(out_dir / "u.txt", *grid, result.u);
  write_field(out_dir / "m.txt", *grid, m);

  const CertificateReport cert =
      certify(model, *grid, result.u, m, cfg.certify.search_cmax);
  Json cj = to_json(cert);
  cj["config"] = to_json(cfg);
  write_json(out_dir / "certificate.json", cj);

  std::cout << "solve: reached theta=1 in " << result.trace.steps.size()
            << " accepted steps; certificate "
            << (cert.all_pass() ? "all pass" : "has failing checks") << '\n';
  return kExitOk;
}

int run_check_assumptions(const RunConfig& cfg, const fs::path& out_dir) {
  ModelPtr model;
  CheckBox box;
  try {
    model = cfg.make_model();
    validate_model(*model);
    box = cfg.make_check_box();
  } catch (const std::invalid_argument& e) {
    return invariant_failure(e);
  }
  if (cfg.check.samples <= 0) throw ConfigError("config: check.samples must be positive");

  const AssumptionReport report = check_assumptions(*model, box, cfg.check.samples);
  fs::create_directories(out_dir);
  Json j = to_json(report);
  j["config"] = to_json(cfg);
  write_json(out_dir / "assumptions.json", j);

  const long violations = report.total_violations();
  std::cout << "check-assumptions: " << violations << " violation(s)\n";
  return violations == 0 ? kExitOk : kExitChecksFailed;
}

int run_certify(const RunConfig& cfg, const fs::path& out_dir) {
  ModelPtr model;
  std::optional<SpaceTimeGrid> grid;
  try {
    model = cfg.make_model();
    validate_model(*model);
    grid.emplace(cfg.make_grid());
  } catch (const std::invalid_argument& e) {
    return invariant_failure(e);
  }

  DiscreteField u, m;
  try {
    u = read_field(out_dir / cfg.certify.u_field, *grid);
    m = read_field(out_dir / cfg.certify.m_field, *grid);
  } catch (const IoError& e) {
    return invariant_failure(e);
  }

  const CertificateReport cert = certify(model, *grid, u, m, cfg.certify.search_cmax);
  fs::create_directories(out_dir);
  Json j = to_json(cert);
  j["config"] = to_json(cfg);
  write_json(out_dir / "certificate.json", j);

  std::cout << "certify: " << (cert.all_pass() ? "all pass" : "failing checks present")
            << '\n';
  return cert.all_pass() ? kExitOk : kExitChecksFailed;
}

int run_convergence(const RunConfig& cfg, const fs::path& out_dir) {
  ModelPtr model;
  try {
    model = cfg.make_model();
    validate_model(*model);
    if (cfg.convergence.grids.size() < 3)
      throw std::invalid_argument("convergence needs at least 3 grids");
  } catch (const std::invalid_argument& e) {
    return invariant_failure(e);
  }

  ConvergenceStudy study;
  try {
    study = self_convergence(model, cfg.convergence.grids, cfg.grid.d,
                             cfg.grid.t_horizon, cfg.continuation);
  } catch (const StallError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitStall;
  } catch (const std::invalid_argument& e) {
    return invariant_failure(e);
  }

  fs::create_directories(out_dir);
  Json j = to_json(study);
  j["window"] = {cfg.convergence.order_min, cfg.convergence.order_max};
  auto in_window = [&](double order) {
    return order >= cfg.convergence.order_min && order <= cfg.convergence.order_max;
  };
  const bool pass = study.exact || (in_window(study.u_order) && in_window(study.m_order));
  j["pass"] = pass;
  j["config"] = to_json(cfg);
  write_json(out_dir / "convergence.json", j);

  std::cout << "convergence: u order "
            << (study.exact ? std::string("exact") : std::to_string(study.u_order)) << '\n';
  return pass ? kExitOk : kExitChecksFailed;
}

}  // namespace emfg
