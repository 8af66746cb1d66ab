#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "emfg/model.hpp"
#include "emfg/models_builtin.hpp"
#include "emfg/solver.hpp"
#include "emfg/verify.hpp"

namespace emfg {

/// Resolved run configuration. Parsed from sectioned key = value text;
/// unknown sections or keys are rejected.
struct RunConfig {
  struct ModelSection {
    std::string name = "quadlog";  // quadlog | congestion | power
    double kappa_v = 0.1;
    double m0_amplitude = 0.2;
    double alpha = 1.0;
    double c0 = 1.0;
    double gamma = 2.0;
    std::string f = "log";
    std::string g = "log";
    double C0 = 4.0;
  } model;

  struct GridSection {
    int d = 1;
    int nx = 32;
    int nt = 32;
    double t_horizon = 1.0;
  } grid;

  ContinuationConfig continuation;

  struct CheckSection {
    int samples = 2000;
    double p_max = 10.0;
    double m_min = 0.05;
    double m_max = 20.0;
  } check;

  struct CertifySection {
    double search_cmax = 10.0;
    std::string u_field = "u.txt";
    std::string m_field = "m.txt";
  } certify;

  struct ConvergenceSection {
    std::vector<int> grids = {16, 32, 64};
    double order_min = 1.7;
    double order_max = 2.3;
  } convergence;

  struct OutputSection {
    std::string dir = "out";
  } output;

  /// Builds the configured model; throws std::invalid_argument on parameter
  /// violations, ConfigError on unknown names.
  ModelPtr make_model() const;
  SpaceTimeGrid make_grid() const;
  CheckBox make_check_box() const;
};

/// Parses the sectioned key = value format ('#' and ';' start comments).
/// Throws ConfigError on malformed text or unknown keys.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Applies overrides of the form section.key=value.
void apply_override(RunConfig& cfg, const std::string& spec);

}  // namespace emfg
