#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "procnav/planner.hpp"
#include "procnav/sessions.hpp"

namespace procnav {

enum class ExecMode { sim, live };
std::string_view to_string(ExecMode m) noexcept;

enum class ActionState { dispatched, confirmed, failed };
std::string_view to_string(ActionState s) noexcept;

struct ActionStatus {
    ActionState state = ActionState::dispatched;
    std::string reason;  // failed only
};

struct ExecutionOutcome {
    int step = 0;
    std::string policy;
    ExecMode mode = ExecMode::sim;
    SessionTrace trace;
    // One entry per attempted action; execution stops at the first failure.
    std::vector<ActionStatus> statuses;
    double wall_time_s = 0;
    NavState final_state;
    std::optional<ErrorCode> error;
    std::optional<std::size_t> failed_action;
    std::string message;

    bool ok() const noexcept { return !error; }
    std::size_t dispatched() const noexcept { return statuses.size(); }
    std::size_t confirmed() const noexcept;
};

struct ExecStart {
    std::optional<NavState> state;  // initial state when unset
    std::int64_t t_ms = 0;          // virtual clock (sim) or trace offset (live)
};

// Replays the script through hit_test/apply_click on virtual time: a marker,
// then one click per action after its dwell. Fails fast with
// element_not_visible naming the action index.
ExecutionOutcome execute_sim(const ActionScript& script, const IeGraph& graph, const ExecStart& start = {});

// --- live -----------------------------------------------------------------

struct DriverCommand {
    std::uint64_t id = 0;
    ElementId element;
    Point point;
    std::int64_t dwell_ms = 0;
};
Json to_json(const DriverCommand& c);
// Throws malformed_format.
DriverCommand driver_command_from_json(const Json& j);

struct DriverAck {
    std::uint64_t id = 0;
    ElementId open_panel;
};
Json to_json(const DriverAck& a);
DriverAck driver_ack_from_json(const Json& j);

class LiveDriver {
  public:
    virtual ~LiveDriver() = default;
    // Performs one click on the attached UI and returns its ack.
    // Throws transport_failure.
    virtual DriverAck send(const DriverCommand& command) = 0;
};

// Drives an in-process navigation state machine; stands in for a UI.
class GraphDriver : public LiveDriver {
  public:
    explicit GraphDriver(const IeGraph& graph) : graph_(graph), state_(graph.initial_state()) {}
    DriverAck send(const DriverCommand& command) override;
    const NavState& state() const noexcept { return state_; }

  private:
    const IeGraph& graph_;
    NavState state_;
};

// Posts commands to the service's driver channel, which relays them to the
// attached UI and answers with its ack.
class HttpLiveDriver : public LiveDriver {
  public:
    HttpLiveDriver(std::string host, int port, int timeout_s = 30);
    ~HttpLiveDriver() override;
    DriverAck send(const DriverCommand& command) override;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Sends one command per action and checks each ack's open panel against the
// expected NavState. Mismatch fails with state_mismatch naming both panels;
// a lost UI fails with transport_failure. Trace times are wall-clock ms.
ExecutionOutcome execute_live(const ActionScript& script, const IeGraph& graph, LiveDriver& driver,
                              const ExecStart& start = {});

// --- plans and batches ----------------------------------------------------

struct PlanExecution {
    std::string scenario_id;
    std::vector<ExecutionOutcome> steps;
    SessionTrace trace;  // all steps, one session
    double total_time_s = 0;
    std::optional<ErrorCode> error;
    std::string message;
    bool ok() const noexcept { return !error; }
};

// Runs the scripts in order, carrying the navigation state and clock across
// steps. Stops at the first failed step.
PlanExecution execute_plan_sim(const ProcedurePlan& plan, const std::vector<ActionScript>& scripts,
                               const IeGraph& graph, const TraceMeta& meta = {});

struct BatchOptions {
    bool parallel = false;  // one thread per scenario
    TraceMeta meta;
};

struct BatchResult {
    std::vector<PlanExecution> runs;  // in plan order; failures recorded, not thrown

    // Completion times in seconds of the successful runs.
    std::vector<double> samples() const;
    std::size_t failures() const noexcept;
};

BatchResult run_batch(const std::vector<ProcedurePlan>& plans, const IeGraph& graph, const TimingPolicy& timing,
                      const BatchOptions& options = {});

Json to_json(const ExecutionOutcome& o);
Json to_json(const PlanExecution& e);

}  // namespace procnav
