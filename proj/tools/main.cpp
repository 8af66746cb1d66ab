#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "emfg/cli.hpp"
#include "emfg/reports.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
};

void attach(CLI::App* sub, CommonArgs& args) {
  sub->add_option("--config", args.config_path, "configuration file")->required();
  sub->add_option("--out", args.out_dir, "output directory (default from config)");
  sub->add_option("--override", args.overrides, "section.key=value (repeatable)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"extended mean field game solver on the torus"};
  app.require_subcommand(1);

  CommonArgs args;
  auto* solve = app.add_subcommand("solve", "run the continuation solve and certify it");
  auto* check = app.add_subcommand("check-assumptions", "sample the structural inequalities");
  auto* certify = app.add_subcommand("certify", "certify stored solution fields");
  auto* convergence = app.add_subcommand("convergence", "self-convergence order study");
  for (auto* sub : {solve, check, certify, convergence}) attach(sub, args);

  CLI11_PARSE(app, argc, argv);

  emfg::RunConfig cfg;
  try {
    cfg = emfg::load_config(args.config_path);
    for (const auto& o : args.overrides) emfg::apply_override(cfg, o);
  } catch (const emfg::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return emfg::kExitBadConfig;
  }
  const std::filesystem::path out = args.out_dir.empty() ? cfg.output.dir : args.out_dir;

  try {
    if (solve->parsed()) return emfg::run_solve(cfg, out);
    if (check->parsed()) return emfg::run_check_assumptions(cfg, out);
    if (certify->parsed()) return emfg::run_certify(cfg, out);
    return emfg::run_convergence(cfg, out);
  } catch (const emfg::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return emfg::kExitBadConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return emfg::kExitInvariant;
  }
}
