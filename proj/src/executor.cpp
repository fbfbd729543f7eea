#include "procnav/executor.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <future>

#include <httplib.h>

#include "procnav/error.hpp"

namespace procnav {

std::string_view to_string(ExecMode m) noexcept { return m == ExecMode::sim ? "sim" : "live"; }

std::string_view to_string(ActionState s) noexcept {
    switch (s) {
        case ActionState::dispatched: return "dispatched";
        case ActionState::confirmed: return "confirmed";
        case ActionState::failed: return "failed";
    }
    return "?";
}

std::size_t ExecutionOutcome::confirmed() const noexcept {
    std::size_t n = 0;
    for (const auto& s : statuses) n += s.state == ActionState::confirmed;
    return n;
}

namespace {

// Events carry integer pixels; use the pixel the point falls in.
std::pair<std::int64_t, std::int64_t> pixel(Point p) {
    return {std::int64_t(std::floor(p.x)), std::int64_t(std::floor(p.y))};
}

void fail(ExecutionOutcome& out, std::size_t index, ErrorCode code, std::string message) {
    if (out.statuses.size() <= index) out.statuses.resize(index + 1);
    out.statuses[index] = {ActionState::failed, message};
    out.error = code;
    out.failed_action = index;
    out.message = "action " + std::to_string(index) + ": " + message;
}

ExecutionOutcome begin(const ActionScript& script, const IeGraph& graph, const ExecStart& start, ExecMode mode) {
    ExecutionOutcome out;
    out.step = script.step;
    out.policy = script.policy;
    out.mode = mode;
    out.final_state = start.state.value_or(graph.initial_state());
    return out;
}

// Checks that `action` would land on its element in `state`.
std::optional<std::string> check_reachable(const IeGraph& graph, const NavState& state, const ScriptAction& action) {
    if (!graph.contains(action.element)) return "unknown element '" + action.element + "'";
    auto [x, y] = pixel(action.point);
    auto hit = graph.hit_test(state, Point{double(x), double(y)});
    if (hit != action.element)
        return "'" + action.element + "' is not visible at (" + std::to_string(x) + ", " + std::to_string(y) +
               ") in panel '" + state.current_panel() + "'";
    return std::nullopt;
}

}  // namespace

ExecutionOutcome execute_sim(const ActionScript& script, const IeGraph& graph, const ExecStart& start) {
    auto out = begin(script, graph, start, ExecMode::sim);
    if (script.actions.empty()) return out;
    std::int64_t t = start.t_ms;
    out.trace.events.push_back(marker(t, script.step));
    for (std::size_t i = 0; i < script.actions.size(); ++i) {
        const auto& a = script.actions[i];
        if (auto why = check_reachable(graph, out.final_state, a)) {
            fail(out, i, ErrorCode::element_not_visible, *why);
            break;
        }
        t += a.dwell_ms;
        auto [x, y] = pixel(a.point);
        out.trace.events.push_back(click_at(t, x, y));
        out.final_state = graph.apply_click(out.final_state, a.element);
        out.statuses.push_back({ActionState::confirmed, {}});
    }
    out.wall_time_s = double(t - start.t_ms) / 1000.0;
    return out;
}

// --- live -----------------------------------------------------------------

Json to_json(const DriverCommand& c) {
    return Json{{"id", c.id}, {"action", "click"}, {"element", c.element}, {"x", c.point.x}, {"y", c.point.y},
                {"dwell_ms", c.dwell_ms}};
}

DriverCommand driver_command_from_json(const Json& j) {
    const std::string where = "driver command";
    if (!j.is_object()) throw Error(ErrorCode::malformed_format, where + ": expected an object");
    json_reject_unknown(j, where, {"id", "action", "element", "x", "y", "dwell_ms"});
    if (json_string(j, "action", where) != "click")
        throw Error(ErrorCode::malformed_format, where + ": action must be \"click\"");
    DriverCommand c;
    c.id = std::uint64_t(j.contains("id") ? json_int(j, "id", where) : 0);
    c.element = json_string(j, "element", where);
    c.point = {json_number(j, "x", where), json_number(j, "y", where)};
    c.dwell_ms = j.contains("dwell_ms") ? json_int(j, "dwell_ms", where) : 0;
    return c;
}

Json to_json(const DriverAck& a) { return Json{{"id", a.id}, {"open_panel", a.open_panel}}; }

DriverAck driver_ack_from_json(const Json& j) {
    const std::string where = "driver ack";
    if (!j.is_object()) throw Error(ErrorCode::malformed_format, where + ": expected an object");
    json_reject_unknown(j, where, {"id", "open_panel"});
    return DriverAck{std::uint64_t(json_int(j, "id", where)), json_string(j, "open_panel", where)};
}

DriverAck GraphDriver::send(const DriverCommand& command) {
    auto hit = graph_.hit_test(state_, command.point);
    if (hit) state_ = graph_.apply_click(state_, *hit);
    return DriverAck{command.id, state_.current_panel()};
}

struct HttpLiveDriver::Impl {
    httplib::Client client;
    Impl(const std::string& host, int port) : client(host, port) {}
};

HttpLiveDriver::HttpLiveDriver(std::string host, int port, int timeout_s)
    : impl_(std::make_unique<Impl>(host, port)) {
    impl_->client.set_connection_timeout(5);
    impl_->client.set_read_timeout(timeout_s);
    impl_->client.set_write_timeout(timeout_s);
}

HttpLiveDriver::~HttpLiveDriver() = default;

DriverAck HttpLiveDriver::send(const DriverCommand& command) {
    auto res = impl_->client.Post("/driver/commands", to_json(command).dump(), "application/json");
    if (!res) throw Error(ErrorCode::transport_failure, "driver channel: " + httplib::to_string(res.error()));
    if (res->status != 200) {
        std::string detail = res->body;
        try {
            auto j = Json::parse(res->body);
            detail = j.value("message", j.value("error", res->body));
        } catch (const Json::exception&) {
        }
        throw Error(ErrorCode::transport_failure,
                    "driver channel returned " + std::to_string(res->status) + ": " + detail);
    }
    try {
        return driver_ack_from_json(Json::parse(res->body));
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::transport_failure, std::string("driver channel sent a bad ack: ") + e.what());
    } catch (const Error& e) {
        throw Error(ErrorCode::transport_failure, std::string("driver channel sent a bad ack: ") + e.what());
    }
}

ExecutionOutcome execute_live(const ActionScript& script, const IeGraph& graph, LiveDriver& driver,
                              const ExecStart& start) {
    using clock = std::chrono::steady_clock;
    auto out = begin(script, graph, start, ExecMode::live);
    if (script.actions.empty()) return out;
    const auto t0 = clock::now();
    auto now_ms = [&] {
        return start.t_ms + std::chrono::duration_cast<std::chrono::milliseconds>(clock::now() - t0).count();
    };
    out.trace.events.push_back(marker(start.t_ms, script.step));
    static std::atomic<std::uint64_t> next_id{0};
    for (std::size_t i = 0; i < script.actions.size(); ++i) {
        const auto& a = script.actions[i];
        if (auto why = check_reachable(graph, out.final_state, a)) {
            fail(out, i, ErrorCode::element_not_visible, *why);
            break;
        }
        const NavState expected = graph.apply_click(out.final_state, a.element);
        DriverCommand cmd{++next_id, a.element, a.point, a.dwell_ms};
        out.statuses.push_back({ActionState::dispatched, {}});
        DriverAck ack;
        try {
            ack = driver.send(cmd);
        } catch (const Error& e) {
            fail(out, i, ErrorCode::transport_failure, e.what());
            break;
        }
        auto [x, y] = pixel(a.point);
        out.trace.events.push_back(click_at(std::max(now_ms(), out.trace.events.back().t), x, y));
        if (ack.id != cmd.id) {
            fail(out, i, ErrorCode::transport_failure,
                 "protocol error: ack id " + std::to_string(ack.id) + " for command " + std::to_string(cmd.id));
            break;
        }
        if (ack.open_panel != expected.current_panel()) {
            fail(out, i, ErrorCode::state_mismatch,
                 "expected open panel '" + expected.current_panel() + "', UI reports '" + ack.open_panel + "'");
            break;
        }
        out.final_state = expected;
        out.statuses[i] = {ActionState::confirmed, {}};
    }
    out.wall_time_s = std::chrono::duration<double>(clock::now() - t0).count();
    return out;
}

// --- plans and batches ----------------------------------------------------

PlanExecution execute_plan_sim(const ProcedurePlan& plan, const std::vector<ActionScript>& scripts,
                               const IeGraph& graph, const TraceMeta& meta) {
    PlanExecution run;
    run.scenario_id = plan.scenario_id;
    run.trace.session_id = meta.session_id;
    run.trace.subject_id = meta.subject_id;
    run.trace.scenario_id = plan.scenario_id;
    run.trace.started_at = meta.started_at;
    ExecStart at{graph.initial_state(), 0};
    for (const auto& script : scripts) {
        auto out = execute_sim(script, graph, at);
        run.trace.events.insert(run.trace.events.end(), out.trace.events.begin(), out.trace.events.end());
        at.state = out.final_state;
        at.t_ms += std::llround(out.wall_time_s * 1000.0);
        const bool ok = out.ok();
        if (!ok) {
            run.error = out.error;
            run.message = "step " + std::to_string(out.step) + ", " + out.message;
        }
        run.steps.push_back(std::move(out));
        if (!ok) break;
    }
    run.total_time_s = double(at.t_ms) / 1000.0;
    return run;
}

std::vector<double> BatchResult::samples() const {
    std::vector<double> out;
    for (const auto& r : runs)
        if (r.ok()) out.push_back(r.total_time_s);
    return out;
}

std::size_t BatchResult::failures() const noexcept {
    std::size_t n = 0;
    for (const auto& r : runs) n += !r.ok();
    return n;
}

BatchResult run_batch(const std::vector<ProcedurePlan>& plans, const IeGraph& graph, const TimingPolicy& timing,
                      const BatchOptions& options) {
    auto one = [&](const ProcedurePlan& plan) {
        try {
            return execute_plan_sim(plan, compile_plan(plan, graph, timing), graph, options.meta);
        } catch (const Error& e) {
            PlanExecution failed;
            failed.scenario_id = plan.scenario_id;
            failed.error = e.code();
            failed.message = e.what();
            return failed;
        }
    };
    BatchResult result;
    if (options.parallel) {
        std::vector<std::future<PlanExecution>> jobs;
        for (const auto& p : plans) jobs.push_back(std::async(std::launch::async, one, std::cref(p)));
        for (auto& j : jobs) result.runs.push_back(j.get());
    } else {
        for (const auto& p : plans) result.runs.push_back(one(p));
    }
    return result;
}

Json to_json(const ExecutionOutcome& o) {
    Json statuses = Json::array();
    for (const auto& s : o.statuses) {
        Json j{{"state", to_string(s.state)}};
        if (s.state == ActionState::failed) j["reason"] = s.reason;
        statuses.push_back(std::move(j));
    }
    Json j{{"step", o.step},
           {"mode", to_string(o.mode)},
           {"policy", o.policy},
           {"statuses", std::move(statuses)},
           {"dispatched", o.dispatched()},
           {"confirmed", o.confirmed()},
           {"wall_time_s", o.wall_time_s},
           {"final_panel", o.final_state.open.empty() ? "" : o.final_state.current_panel()}};
    if (o.error) {
        j["error"] = code_name(*o.error);
        j["failed_action"] = *o.failed_action;
        j["message"] = o.message;
    }
    return j;
}

Json to_json(const PlanExecution& e) {
    Json steps = Json::array();
    for (const auto& s : e.steps) steps.push_back(to_json(s));
    Json j{{"scenario", e.scenario_id}, {"ok", e.ok()}, {"total_time_s", e.total_time_s}, {"steps", std::move(steps)}};
    if (e.error) {
        j["error"] = code_name(*e.error);
        j["message"] = e.message;
    }
    return j;
}

}  // namespace procnav
