#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "procnav/hra_models.hpp"
#include "procnav/ie_kg.hpp"
#include "procnav/procedures.hpp"

namespace procnav {

enum class StepClass { single_action, multi_action };
std::string_view to_string(StepClass c) noexcept;

constexpr std::size_t kDefaultPathLimit = 64;

struct ResolvedTarget {
    ElementId id;
    std::vector<std::string> warnings;
};

struct NavigationPathSet {
    TaskStep step;
    ElementId target;
    std::vector<Path> paths;  // each root..target, shortest first
    StepClass classification = StepClass::single_action;
    std::size_t min_clicks = 0;
    bool limit_exceeded = false;
    std::vector<std::string> warnings;

    const Path& chosen_path() const { return paths.front(); }
};

// Target resolution: a parameter whose name or alias matches step.parameter
// under a container matching step.panel. Without a panel match, a unique
// global name match is accepted with a warning.
// Throws target_not_found or ambiguous_target (message lists candidates).
ResolvedTarget resolve_target(const TaskStep& step, const IeGraph& graph);

NavigationPathSet plan_step(const TaskStep& step, const IeGraph& graph, std::size_t limit = kDefaultPathLimit);

// Click sequence that realizes `path` from `state`: the suffix after the open
// panels when `state` is a prefix of the path, otherwise the full click
// sequence (its first click is a top-level tab, which resets the view).
Path clicks_from_state(const Path& path, const NavState& state);

struct PlannedStep {
    NavigationPathSet path_set;
    Path clicks;  // what gets executed; equals click_sequence(chosen) unless chaining
};

struct StepFailure {
    int step = 0;
    ErrorCode code{};
    std::string message;
};

struct PlanOptions {
    bool chaining = false;
    bool partial = false;  // collect failures instead of throwing
    std::size_t path_limit = kDefaultPathLimit;
};

struct ProcedurePlan {
    std::string scenario_id;
    bool chaining = false;
    std::vector<PlannedStep> steps;
    std::vector<StepFailure> failures;

    std::size_t total_clicks() const {
        std::size_t n = 0;
        for (const auto& s : steps) n += s.clicks.size();
        return n;
    }
};

class PlanError : public Error {
  public:
    explicit PlanError(std::vector<StepFailure> failures);
    const std::vector<StepFailure>& failures() const noexcept { return failures_; }

  private:
    std::vector<StepFailure> failures_;
};

ProcedurePlan plan_procedure(const ProcedureDoc& doc, const IeGraph& graph, const PlanOptions& options = {});

// --- scripts ------------------------------------------------------------

struct FixedDwell {
    std::int64_t dwell_ms = 100;
};
struct FittsDwell {
    FittsParams params;
};
using TimingPolicy = std::variant<FixedDwell, FittsDwell>;
std::string policy_id(const TimingPolicy& policy);
// "fixed:100", "fitts" or "fitts:a,b". Throws invalid_params.
TimingPolicy parse_policy(std::string_view text);

struct ScriptAction {
    ElementId element;
    Point point;  // bbox center
    std::int64_t dwell_ms = 0;
    friend bool operator==(const ScriptAction&, const ScriptAction&) = default;
};

struct ActionScript {
    int step = 0;
    std::vector<ScriptAction> actions;
    Path path;  // provenance: the chosen path
    std::string policy;
    friend bool operator==(const ActionScript&, const ActionScript&) = default;
};

// Compiles the chosen path's click sequence, or `clicks` when given (a
// chained suffix). Fitts dwells measure from `cursor`, defaulting to the
// center of the root view.
ActionScript compile_script(const NavigationPathSet& path_set, const IeGraph& graph, const TimingPolicy& timing,
                            const std::optional<Path>& clicks = std::nullopt,
                            std::optional<Point> cursor = std::nullopt);

std::vector<ActionScript> compile_plan(const ProcedurePlan& plan, const IeGraph& graph, const TimingPolicy& timing);

// Plan file (JSON). Scripts are embedded when given.
std::string save_plan(const ProcedurePlan& plan, const std::vector<ActionScript>& scripts = {});
struct LoadedPlan {
    ProcedurePlan plan;
    std::vector<ActionScript> scripts;
};
// Throws malformed_format.
LoadedPlan load_plan(std::string_view text);

}  // namespace procnav
