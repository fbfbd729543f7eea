#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "procnav/planner.hpp"
#include "procnav/serialization.hpp"
#include "procnav/sessions.hpp"

namespace procnav {

inline constexpr const char* kAnalysisVersion = "1";

struct ResolvedEvent {
    std::int64_t t = 0;
    EventKind kind = EventKind::click;
    std::optional<ElementId> element;  // clicks only; none for a miss
    int step = 0;                      // markers only
    friend bool operator==(const ResolvedEvent&, const ResolvedEvent&) = default;
};

// Folds the trace through the navigation state machine.
std::vector<ResolvedEvent> resolve_clicks(const SessionTrace& trace, const IeGraph& graph);

struct StepWindow {
    int step = 0;
    bool attempted = false;
    bool out_of_order = false;  // its marker came after a later step's marker
    std::int64_t marker_t = 0;
    NavState start_state;
    std::vector<ResolvedEvent> clicks;
};

// One window per plan step, in plan order. A window runs from its marker to
// the next marker of any step, or to the end of the trace.
// Throws duplicate_marker or invalid_marker.
std::vector<StepWindow> segment(const std::vector<ResolvedEvent>& resolved, const ProcedurePlan& plan,
                                const IeGraph& graph);

enum class EditKind { match, substitute, insert, del };

struct EditOp {
    EditKind kind = EditKind::match;
    std::optional<std::size_t> observed;  // index into the observed sequence
    std::optional<std::size_t> expected;  // index into the expected sequence
    friend bool operator==(const EditOp&, const EditOp&) = default;
};

// "" stands for a click that hit nothing.
using Symbol = std::string;

struct EditScript {
    std::size_t cost = 0;
    std::vector<EditOp> ops;
};

// Unit-cost Levenshtein with a deterministic backtrace.
EditScript levenshtein(const std::vector<Symbol>& observed, const std::vector<Symbol>& expected);

struct Alignment {
    std::size_t cost = 0;
    std::size_t path_index = 0;  // into path_set.paths
    Path path;                   // root..target
    std::vector<Symbol> expected;
    std::vector<EditOp> ops;
};

// Aligns against the click sequence of every valid path and, when
// `start_state` is a prefix of a path, against its remaining suffix too.
// Ties go to the shorter expected sequence, then lexicographic order.
Alignment align_step(const std::vector<Symbol>& observed, const NavigationPathSet& path_set,
                     const std::optional<NavState>& start_state = std::nullopt);

enum class DeviationKind { omission, commission, slip, sequence_error };
std::string_view to_string(DeviationKind k) noexcept;
constexpr std::size_t kDeviationKinds = 4;

struct SeverityWeights {
    double omission = 1.0;
    double commission = 1.0;
    double slip = 0.5;
    double sequence_error = 0.75;
    double of(DeviationKind k) const noexcept;
};

struct Deviation {
    int step = 0;
    DeviationKind kind = DeviationKind::omission;
    std::vector<ElementId> elements;     // missed target, or the offending click
    std::optional<std::size_t> position; // index in the observed window
    ElementId expected;                  // path element at the alignment position
    double severity = 0;
    bool partial = false;                // omission after some progress along the path
    friend bool operator==(const Deviation&, const Deviation&) = default;
};

struct ClassifyContext {
    std::set<ElementId> plan_elements;  // on any valid path of any step
    SeverityWeights weights;
};
ClassifyContext make_classify_context(const ProcedurePlan& plan, const SeverityWeights& weights = {});

std::vector<Deviation> classify(const Alignment& alignment, const std::vector<Symbol>& observed,
                                const NavigationPathSet& path_set, const ClassifyContext& ctx);

struct StepRecord {
    int step = 0;
    ElementId target;
    bool attempted = false;
    std::int64_t marker_t = 0;
    std::vector<ResolvedEvent> resolved;
    Path best_path;
    std::vector<ElementId> expected;
    std::size_t edit_cost = 0;
    std::vector<Deviation> deviations;
    std::optional<double> latency_s;
};

struct DeviationReport {
    std::string session_id;
    std::string scenario_id;
    std::vector<StepRecord> steps;
    double task_time_s = 0;
    std::array<std::size_t, kDeviationKinds> counts{};
    std::size_t total_deviations() const noexcept;
};

struct AnalysisOptions {
    SeverityWeights weights;
};

// Throws scenario_mismatch, duplicate_marker, invalid_marker.
DeviationReport analyze_session(const SessionTrace& trace, const ProcedurePlan& plan, const IeGraph& graph,
                                const AnalysisOptions& options = {});

// Totals equal the per-step sums.
bool totals_consistent(const DeviationReport& report);

Json to_json(const Deviation& d);
Json to_json(const DeviationReport& report);
// Throws malformed_format, also for another analysis version.
DeviationReport deviation_report_from_json(const Json& j);

// Incremental analysis for a session being recorded. Deviations already
// reported never disappear: finished steps are final, and the open step only
// contributes commissions, which no later event can undo.
class LiveAnalyzer {
  public:
    LiveAnalyzer(const ProcedurePlan& plan, const IeGraph& graph, std::string session_id,
                 const AnalysisOptions& options = {});

    // Throws duplicate_marker or invalid_marker (the event is not consumed).
    void feed(const InteractionEvent& event);

    std::optional<int> current_step() const;
    // The most recent click, resolved; its element is unset for a miss.
    const std::optional<ResolvedEvent>& last_click() const noexcept { return last_click_; }
    std::vector<Deviation> deviations() const;
    // Equals analyze_session over every event fed so far.
    DeviationReport finalize() const;

  private:
    StepRecord close_window(const StepWindow& w) const;

    const ProcedurePlan& plan_;
    const IeGraph& graph_;
    std::string session_id_;
    AnalysisOptions options_;
    ClassifyContext ctx_;
    NavState state_;
    std::optional<StepWindow> open_;
    std::optional<ResolvedEvent> last_click_;
    std::map<int, StepRecord> done_;
    std::set<int> seen_markers_;
    int max_marker_ = 0;
    std::optional<std::int64_t> first_marker_t_;
    std::int64_t last_t_ = 0;
    bool any_event_ = false;
};

// --- risk aggregation ---------------------------------------------------------

constexpr double kWilsonZ95 = 1.959963984540054;

struct Interval {
    double low = 0;
    double high = 0;
};
// Wilson score interval; n = 0 gives [0, 1].
Interval wilson_interval(std::size_t errors, std::size_t n, double z = kWilsonZ95);

struct RiskCell {
    std::size_t opportunities = 0;
    std::size_t errors = 0;
    double rate = 0;
    Interval interval{0, 1};
};

struct ElementRisk {
    ElementId element;
    RiskCell cell;
};
struct EdgeRisk {
    ElementId from;
    ElementId to;
    RiskCell cell;
};
struct PathwayRisk {
    int step = 0;
    ElementId target;
    Path path;
    StepClass classification = StepClass::single_action;
    RiskCell sessions;           // sessions with at least one deviation at the step
    std::size_t segment_errors = 0;  // summed edge errors along the path
    bool recommended = false;
};

struct RiskOptions {
    std::size_t automation_threshold = 1;
};

struct RiskReport {
    std::string scenario_id;
    std::size_t sessions = 0;
    std::vector<ElementRisk> elements;   // ranked
    std::vector<EdgeRisk> edges;         // ranked
    std::vector<PathwayRisk> pathways;   // ranked
    std::vector<int> recommendations;    // step indices flagged for automation
};

// Throws empty_input or scenario_mismatch.
RiskReport aggregate_risk(const std::vector<DeviationReport>& reports, const ProcedurePlan& plan,
                          const RiskOptions& options = {});

Json to_json(const RiskReport& report);
std::string risk_table_tsv(const RiskReport& report);

}  // namespace procnav
