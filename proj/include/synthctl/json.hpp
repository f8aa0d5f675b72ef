#pragma once

#include "synthctl/conformal.hpp"
#include "synthctl/dte.hpp"
#include "synthctl/simlab.hpp"

#include <json.hpp>

#include <optional>
#include <ostream>

namespace synthctl {

/// Version stamped into every JSON document this library writes. Schemas for
/// each document kind live in schemas/.
inline constexpr const char* kSchemaVersion = "1.0";

nlohmann::json to_json(const SolveDiagnostics& d);
nlohmann::json to_json(const FitResult& fit, const PanelData& panel);
nlohmann::json to_json(const ConformalReport& report);
nlohmann::json to_json(const MmdReport& report);
nlohmann::json to_json(const Summary& s);
nlohmann::json to_json(const StudySpec& spec);
nlohmann::json to_json(const Theorem1Spec& spec, const Theorem1Result& result);
nlohmann::json dte_json(const BootstrapSample& sample, Method method, const std::vector<double>& probs,
                        const std::vector<double>& qs, const std::optional<MmdReport>& mmd);
nlohmann::json study_json(const StudySpec& spec, const ReplicationResult& result, const std::string& preset);

/// (alpha, p) pairs, one per grid point.
void write_pvalue_csv(std::ostream& out, const ConformalReport& report);
void write_draws_csv(std::ostream& out, const BootstrapSample& sample);
void write_records_csv(std::ostream& out, const std::vector<ReplicationRecord>& records, bool timing);

}  // namespace synthctl
