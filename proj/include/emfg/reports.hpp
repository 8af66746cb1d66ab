#pragma once

#include <json.hpp>

#include "emfg/config.hpp"
#include "emfg/solver.hpp"
#include "emfg/verify.hpp"

namespace emfg {

using Json = nlohmann::ordered_json;

/// JSON emission for the run artifacts. Every report embeds the resolved
/// configuration under "config" for provenance; key layouts are stable and
/// contain nothing time- or host-dependent, so identical runs serialize
/// byte-identically.
Json to_json(const RunConfig& cfg);
Json to_json(const ContinuationTrace& trace);
Json to_json(const ContinuationResult& result);
Json to_json(const AssumptionReport& report);
Json to_json(const CertificateReport& report);
Json to_json(const ConvergenceStudy& study);

void write_json(const std::filesystem::path& path, const Json& j);

}  // namespace emfg
