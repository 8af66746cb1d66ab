#pragma once

#include <filesystem>

#include "emfg/config.hpp"

namespace emfg {

/// Exit codes shared by all subcommands:
///   0 success, 1 failed checks, 2 invalid config, 3 model/grid/field
///   invariant violations, 4 continuation stall.
inline constexpr int kExitOk = 0;
inline constexpr int kExitChecksFailed = 1;
inline constexpr int kExitBadConfig = 2;
inline constexpr int kExitInvariant = 3;
inline constexpr int kExitStall = 4;

int run_solve(const RunConfig& cfg, const std::filesystem::path& out_dir);
int run_check_assumptions(const RunConfig& cfg, const std::filesystem::path& out_dir);
int run_certify(const RunConfig& cfg, const std::filesystem::path& out_dir);
int run_convergence(const RunConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace emfg
