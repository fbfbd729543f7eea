#pragma once

// Session report: deviation analysis combined with the HRA surrogate models
// and the operator's TLX response. Shared by the service and the CLI.

#include <optional>

#include "procnav/deviation.hpp"
#include "procnav/hra_models.hpp"

namespace procnav {

// {"ratings":{"mental":50,...} | [6 ints], "pairs":[{"first","second","winner"}]}
// Throws malformed_format.
TlxResponse tlx_response_from_json(const Json& j);
Json to_json(const TlxResponse& r);
Json to_json(const TlxScore& s);
Json to_json(const TlxQuestionnaire& q);

// Predicted time and HEP for the plan under `settings`. Without t_avail the
// time term is zero.
Json hra_summary(const ProcedurePlan& plan, const IeGraph& graph, const HraSettings& settings);

Json compose_report(const DeviationReport& report, const ProcedurePlan& plan, const IeGraph& graph,
                    const HraSettings& settings, const std::optional<TlxScore>& tlx = std::nullopt);

}  // namespace procnav
