#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "procnav/hra_models.hpp"
#include "procnav/planner.hpp"
#include "procnav/serialization.hpp"

namespace procnav {

enum class MouseButton { left, right };

struct ClickEvent {
    std::int64_t x = 0;
    std::int64_t y = 0;
    MouseButton button = MouseButton::left;
    friend bool operator==(const ClickEvent&, const ClickEvent&) = default;
};
struct KeyEvent {
    std::string key;
    friend bool operator==(const KeyEvent&, const KeyEvent&) = default;
};
// The operator starting a procedure step.
struct MarkerEvent {
    int step = 0;
    friend bool operator==(const MarkerEvent&, const MarkerEvent&) = default;
};

enum class EventKind { click, key, marker };

struct InteractionEvent {
    std::int64_t t = 0;  // ms since session start
    std::variant<ClickEvent, KeyEvent, MarkerEvent> data;

    EventKind kind() const noexcept { return EventKind(data.index()); }
    friend bool operator==(const InteractionEvent&, const InteractionEvent&) = default;
};

InteractionEvent click_at(std::int64_t t, std::int64_t x, std::int64_t y, MouseButton b = MouseButton::left);
InteractionEvent key_press(std::int64_t t, std::string key);
InteractionEvent marker(std::int64_t t, int step);

// Field order is fixed: t, kind, then the kind's fields.
Json to_json(const InteractionEvent& e);
// Throws invalid_event; the message starts with the offending field name.
InteractionEvent event_from_json(const Json& j);
std::string event_line(const InteractionEvent& e);

struct SessionTrace {
    std::string session_id;
    std::string subject_id;
    std::string scenario_id;
    std::string started_at;
    std::vector<InteractionEvent> events;
    friend bool operator==(const SessionTrace&, const SessionTrace&) = default;
};

// Optional header line {"session","subject","scenario","started_at"} followed
// by one event per line.
std::string save_trace(const SessionTrace& trace);
// Throws malformed_line with the 1-based line number.
SessionTrace load_trace(std::string_view text);

// --- store --------------------------------------------------------------

enum class SessionState { open, closed };
std::string_view to_string(SessionState s) noexcept;

struct SessionMeta {
    std::string session_id;
    std::string subject_id;
    std::string scenario_id;
    SessionState state = SessionState::open;
    std::string created_at;
    friend bool operator==(const SessionMeta&, const SessionMeta&) = default;
};

struct SessionFilter {
    std::optional<std::string> scenario_id;
    std::optional<std::string> subject_id;
};

// One trace file per session plus index.json of session metadata under `dir`.
// Every append is written and fsync'ed before it returns. Writers to one
// session are serialized; distinct sessions append independently.
class SessionStore {
  public:
    using Clock = std::function<std::string()>;

    explicit SessionStore(std::filesystem::path dir, Clock clock = {});
    ~SessionStore();
    SessionStore(const SessionStore&) = delete;
    SessionStore& operator=(const SessionStore&) = delete;

    std::string open_session(const std::string& subject_id, const std::string& scenario_id);
    // Throws unknown_session, session_closed, time_regression.
    void append_event(const std::string& id, const InteractionEvent& event);
    // All-or-nothing: the batch is checked before anything is written.
    void append_events(const std::string& id, std::span<const InteractionEvent> events);
    void close_session(const std::string& id);

    SessionMeta meta(const std::string& id) const;
    SessionTrace get_trace(const std::string& id) const;
    std::vector<SessionMeta> list_sessions(const SessionFilter& filter = {}) const;

    // Named immutable blobs attached to a session (reports, TLX responses).
    // put_artifact returns false if the name already exists.
    bool put_artifact(const std::string& id, const std::string& name, const std::string& body);
    std::optional<std::string> get_artifact(const std::string& id, const std::string& name) const;

  private:
    struct Session;
    Session& find(const std::string& id) const;
    void write_index_locked() const;

    std::filesystem::path dir_;
    Clock clock_;
    mutable std::mutex index_mutex_;
    std::map<std::string, std::unique_ptr<Session>> sessions_;
};

std::string utc_timestamp_now();

// --- synthesis ------------------------------------------------------------

struct MachinePolicy {
    std::int64_t dwell_ms = 100;
};

// Fitts movement per click plus a reading pause at the start of each step,
// each scaled by lognormal noise from a seeded generator.
struct HumanPolicy {
    FittsParams fitts;
    double reading_s = kDefaultReadingSeconds;
    double noise_sigma = 0.15;
    std::uint64_t seed = 0;
};

using OperatorPolicy = std::variant<MachinePolicy, HumanPolicy>;

enum class FaultKind { omission, wrong_panel, extra_click, swap_order };
std::string_view to_string(FaultKind k) noexcept;
std::optional<FaultKind> fault_kind_from_string(std::string_view s) noexcept;

// omission: the target click is skipped. wrong_panel: `element`, an off-path
// container, is clicked at the first point it is visible, then the step is
// redone from its top-level tab. extra_click: the target is clicked twice.
// swap_order: steps `step` and `step + 1` are performed (and marked) in
// reverse order.
struct Fault {
    int step = 0;
    FaultKind kind = FaultKind::omission;
    std::optional<ElementId> element;
};

struct FaultSpec {
    std::vector<Fault> faults;
};

// "omission@3,wrong_panel@5:0MKADW001"
FaultSpec parse_fault_spec(std::string_view text);
std::string format_fault_spec(const FaultSpec& spec);

struct TraceMeta {
    std::string session_id = "synthetic";
    std::string subject_id = "synthetic";
    std::string started_at = "1970-01-01T00:00:00Z";
};

// Containers lying on no valid path of any step in the plan.
std::vector<ElementId> off_path_containers(const ProcedurePlan& plan, const IeGraph& graph);

// Throws fault_missing_step or fault_invalid.
SessionTrace synthesize_trace(const ProcedurePlan& plan, const IeGraph& graph, const OperatorPolicy& policy,
                              const FaultSpec& faults = {}, const TraceMeta& meta = {});

}  // namespace procnav
