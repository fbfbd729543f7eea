#include "procnav/planner.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "procnav/serialization.hpp"

namespace procnav {

namespace {

bool label_matches(const InterfaceElement& el, const std::string& normalized) {
    if (normalize_label(el.name) == normalized) return true;
    return std::any_of(el.aliases.begin(), el.aliases.end(),
                       [&](const std::string& a) { return normalize_label(a) == normalized; });
}

std::vector<ElementId> matching(const IeGraph& graph, const std::string& label, ElementKind kind) {
    const auto norm = normalize_label(label);
    std::vector<ElementId> out;
    for (const auto& [id, el] : graph.elements())
        if (el.kind == kind && label_matches(el, norm)) out.push_back(id);
    return out;
}

std::vector<ElementId> under_any(const IeGraph& graph, const std::vector<ElementId>& nodes,
                                 const std::vector<ElementId>& ancestors) {
    std::vector<ElementId> out;
    for (const auto& n : nodes)
        if (std::any_of(ancestors.begin(), ancestors.end(),
                        [&](const ElementId& a) { return graph.is_descendant(a, n); }))
            out.push_back(n);
    return out;
}

std::string join(const std::vector<ElementId>& ids) {
    std::string out;
    for (const auto& id : ids) out += (out.empty() ? "" : ", ") + id;
    return out;
}

}  // namespace

std::string_view to_string(StepClass c) noexcept {
    return c == StepClass::multi_action ? "multi_action" : "single_action";
}

ResolvedTarget resolve_target(const TaskStep& step, const IeGraph& graph) {
    const auto candidates = matching(graph, step.parameter, ElementKind::parameter);
    if (candidates.empty())
        throw Error(ErrorCode::target_not_found, "no parameter named '" + step.parameter + "'");

    const auto panels = matching(graph, step.panel, ElementKind::container);
    auto in_panel = under_any(graph, candidates, panels);
    if (in_panel.size() > 1) {
        auto in_system = under_any(graph, in_panel, matching(graph, step.system, ElementKind::container));
        if (in_system.size() == 1) return {in_system.front(), {}};
        throw Error(ErrorCode::ambiguous_target,
                    "'" + step.parameter + "' matches several elements under " + step.panel + ": " + join(in_panel));
    }
    if (in_panel.size() == 1) return {in_panel.front(), {}};

    if (candidates.size() == 1)
        return {candidates.front(),
                {"parameter '" + step.parameter + "' not found under panel '" + step.panel +
                 "'; using the only global match " + candidates.front()}};
    throw Error(ErrorCode::ambiguous_target,
                "'" + step.parameter + "' is not under panel '" + step.panel + "' and matches " + join(candidates));
}

NavigationPathSet plan_step(const TaskStep& step, const IeGraph& graph, std::size_t limit) {
    auto resolved = resolve_target(step, graph);
    auto paths = graph.enumerate_paths(resolved.id, std::max<std::size_t>(limit, 1));
    if (paths.paths.empty())
        throw Error(ErrorCode::target_not_found, "'" + resolved.id + "' is not reachable from the root");
    NavigationPathSet set;
    set.step = step;
    set.target = resolved.id;
    set.paths = std::move(paths.paths);
    set.limit_exceeded = paths.limit_exceeded;
    set.min_clicks = set.paths.front().size() - 1;
    set.classification = set.min_clicks > 1 ? StepClass::multi_action : StepClass::single_action;
    set.warnings = std::move(resolved.warnings);
    return set;
}

Path clicks_from_state(const Path& path, const NavState& state) {
    const auto& open = state.open;
    if (open.size() <= path.size() && std::equal(open.begin(), open.end(), path.begin()))
        return Path(path.begin() + std::ptrdiff_t(open.size()), path.end());
    return click_sequence(path);
}

PlanError::PlanError(std::vector<StepFailure> failures)
    : Error(failures.empty() ? ErrorCode::target_not_found : failures.front().code,
            [&] {
                std::ostringstream msg;
                for (const auto& f : failures) msg << "step " << f.step << ": " << f.message << "; ";
                return msg.str();
            }()),
      failures_(std::move(failures)) {}

ProcedurePlan plan_procedure(const ProcedureDoc& doc, const IeGraph& graph, const PlanOptions& options) {
    ProcedurePlan plan;
    plan.scenario_id = doc.scenario_id;
    plan.chaining = options.chaining;
    NavState state = graph.initial_state();
    for (const auto& step : doc.steps) {
        try {
            PlannedStep planned{plan_step(step, graph, options.path_limit), {}};
            const auto& chosen = planned.path_set.chosen_path();
            planned.clicks = options.chaining ? clicks_from_state(chosen, state) : click_sequence(chosen);
            for (const auto& id : planned.clicks) state = graph.apply_click(state, id);
            plan.steps.push_back(std::move(planned));
        } catch (const Error& e) {
            plan.failures.push_back({step.index, e.code(), e.what()});
        }
    }
    if (!options.partial && !plan.failures.empty()) throw PlanError(plan.failures);
    return plan;
}

// --- scripts ------------------------------------------------------------

std::string policy_id(const TimingPolicy& policy) {
    if (auto f = std::get_if<FixedDwell>(&policy)) return "fixed:" + std::to_string(f->dwell_ms);
    const auto& p = std::get<FittsDwell>(policy).params;
    std::ostringstream out;
    out << "fitts:" << p.a << "," << p.b;
    return out.str();
}

TimingPolicy parse_policy(std::string_view text) {
    auto bad = [&] { return Error(ErrorCode::invalid_params, "unknown timing policy '" + std::string(text) + "'"); };
    if (text.rfind("fixed:", 0) == 0) {
        try {
            std::size_t used = 0;
            auto ms = std::stoll(std::string(text.substr(6)), &used);
            if (used != text.size() - 6 || ms < 0) throw bad();
            return FixedDwell{ms};
        } catch (const std::logic_error&) {
            throw bad();
        }
    }
    if (text == "fitts") return FittsDwell{};
    if (text.rfind("fitts:", 0) == 0) {
        std::string rest(text.substr(6));
        auto comma = rest.find(',');
        if (comma == std::string::npos) throw bad();
        try {
            FittsParams p{std::stod(rest.substr(0, comma)), std::stod(rest.substr(comma + 1))};
            if (!(p.b > 0) || !(p.a >= 0)) throw bad();
            return FittsDwell{p};
        } catch (const std::logic_error&) {
            throw bad();
        }
    }
    throw bad();
}

ActionScript compile_script(const NavigationPathSet& path_set, const IeGraph& graph, const TimingPolicy& timing,
                            const std::optional<Path>& clicks, std::optional<Point> cursor) {
    if (path_set.paths.empty()) throw Error(ErrorCode::invalid_params, "path set is empty");
    ActionScript script;
    script.step = path_set.step.index;
    script.path = path_set.chosen_path();
    script.policy = policy_id(timing);
    Point at = cursor.value_or(graph.element(graph.root()).bbox.center());
    for (const auto& id : clicks ? *clicks : click_sequence(script.path)) {
        const auto& bbox = graph.element(id).bbox;
        ScriptAction action{id, bbox.center(), 0};
        if (auto f = std::get_if<FixedDwell>(&timing)) {
            action.dwell_ms = f->dwell_ms;
        } else {
            double d = std::hypot(action.point.x - at.x, action.point.y - at.y);
            double mt = fitts_time(d, double(bbox.width), std::get<FittsDwell>(timing).params);
            action.dwell_ms = std::llround(mt * 1000.0);
        }
        at = action.point;
        script.actions.push_back(std::move(action));
    }
    return script;
}

std::vector<ActionScript> compile_plan(const ProcedurePlan& plan, const IeGraph& graph, const TimingPolicy& timing) {
    std::vector<ActionScript> out;
    for (const auto& s : plan.steps) out.push_back(compile_script(s.path_set, graph, timing, s.clicks));
    return out;
}

// --- plan file ------------------------------------------------------------

namespace {

Json path_json(const Path& p) { return Json(p); }

Path path_from_json(const Json& j, const std::string& where) {
    if (!j.is_array()) throw Error(ErrorCode::malformed_format, where + ": expected an array of ids");
    Path p;
    for (const auto& v : j) {
        if (!v.is_string()) throw Error(ErrorCode::malformed_format, where + ": expected string ids");
        p.push_back(v.get<std::string>());
    }
    return p;
}

Json script_json(const ActionScript& s) {
    Json j;
    j["step"] = s.step;
    j["policy"] = s.policy;
    j["path"] = path_json(s.path);
    Json actions = Json::array();
    for (const auto& a : s.actions)
        actions.push_back(Json{{"element", a.element}, {"x", a.point.x}, {"y", a.point.y}, {"dwell_ms", a.dwell_ms}});
    j["actions"] = std::move(actions);
    return j;
}

ActionScript script_from_json(const Json& j, const std::string& where) {
    json_reject_unknown(j, where, {"step", "policy", "path", "actions"});
    ActionScript s;
    s.step = int(json_int(j, "step", where));
    s.policy = json_string(j, "policy", where);
    s.path = path_from_json(json_field(j, "path", where), where + "/path");
    const auto& actions = json_field(j, "actions", where);
    if (!actions.is_array()) throw Error(ErrorCode::malformed_format, where + "/actions: expected an array");
    for (std::size_t i = 0; i < actions.size(); ++i) {
        const auto w = where + "/actions/" + std::to_string(i);
        json_reject_unknown(actions[i], w, {"element", "x", "y", "dwell_ms"});
        s.actions.push_back({json_string(actions[i], "element", w),
                             {json_number(actions[i], "x", w), json_number(actions[i], "y", w)},
                             json_int(actions[i], "dwell_ms", w)});
    }
    return s;
}

}  // namespace

std::string save_plan(const ProcedurePlan& plan, const std::vector<ActionScript>& scripts) {
    Json doc;
    doc["version"] = 1;
    doc["scenario"] = plan.scenario_id;
    doc["chaining"] = plan.chaining;
    Json steps = Json::array();
    for (std::size_t i = 0; i < plan.steps.size(); ++i) {
        const auto& s = plan.steps[i];
        Json j;
        j["task"] = to_json(s.path_set.step);
        j["target"] = s.path_set.target;
        Json paths = Json::array();
        for (const auto& p : s.path_set.paths) paths.push_back(path_json(p));
        j["paths"] = std::move(paths);
        j["classification"] = std::string(to_string(s.path_set.classification));
        j["min_clicks"] = s.path_set.min_clicks;
        j["limit_exceeded"] = s.path_set.limit_exceeded;
        j["warnings"] = s.path_set.warnings;
        j["clicks"] = path_json(s.clicks);
        if (i < scripts.size()) j["script"] = script_json(scripts[i]);
        steps.push_back(std::move(j));
    }
    doc["steps"] = std::move(steps);
    Json failures = Json::array();
    for (const auto& f : plan.failures)
        failures.push_back(Json{{"step", f.step}, {"code", std::string(code_name(f.code))}, {"message", f.message}});
    doc["failures"] = std::move(failures);
    return doc.dump(2) + "\n";
}

LoadedPlan load_plan(std::string_view text) {
    Json doc = parse_json_text(text, "plan");
    json_reject_unknown(doc, "", {"version", "scenario", "chaining", "steps", "failures"});
    if (json_int(doc, "version", "") != 1) throw Error(ErrorCode::malformed_format, "/version: unsupported");
    LoadedPlan out;
    out.plan.scenario_id = json_string(doc, "scenario", "");
    const auto& chaining = json_field(doc, "chaining", "");
    if (!chaining.is_boolean()) throw Error(ErrorCode::malformed_format, "/chaining: expected a boolean");
    out.plan.chaining = chaining.get<bool>();
    const auto& steps = json_field(doc, "steps", "");
    if (!steps.is_array()) throw Error(ErrorCode::malformed_format, "/steps: expected an array");
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const auto where = "/steps/" + std::to_string(i);
        const auto& j = steps[i];
        json_reject_unknown(j, where,
                            {"task", "target", "paths", "classification", "min_clicks", "limit_exceeded", "warnings",
                             "clicks", "script"});
        PlannedStep s;
        s.path_set.step = task_step_from_json(json_field(j, "task", where), where + "/task");
        s.path_set.target = json_string(j, "target", where);
        const auto& paths = json_field(j, "paths", where);
        if (!paths.is_array() || paths.empty())
            throw Error(ErrorCode::malformed_format, where + "/paths: expected a non-empty array");
        for (std::size_t k = 0; k < paths.size(); ++k)
            s.path_set.paths.push_back(path_from_json(paths[k], where + "/paths/" + std::to_string(k)));
        auto cls = json_string(j, "classification", where);
        if (cls != "single_action" && cls != "multi_action")
            throw Error(ErrorCode::malformed_format, where + "/classification: unknown value");
        s.path_set.classification = cls == "multi_action" ? StepClass::multi_action : StepClass::single_action;
        s.path_set.min_clicks = std::size_t(json_int(j, "min_clicks", where));
        const auto& le = json_field(j, "limit_exceeded", where);
        if (!le.is_boolean()) throw Error(ErrorCode::malformed_format, where + "/limit_exceeded: expected a boolean");
        s.path_set.limit_exceeded = le.get<bool>();
        for (const auto& w : json_field(j, "warnings", where)) s.path_set.warnings.push_back(w.get<std::string>());
        s.clicks = path_from_json(json_field(j, "clicks", where), where + "/clicks");
        for (const auto& p : s.path_set.paths)
            if (p.empty() || p.back() != s.path_set.target)
                throw Error(ErrorCode::malformed_format, where + "/paths: every path must end at the target");
        if (s.path_set.min_clicks + 1 != s.path_set.paths.front().size())
            throw Error(ErrorCode::malformed_format, where + "/min_clicks: inconsistent with the shortest path");
        if (auto sc = j.find("script"); sc != j.end()) out.scripts.push_back(script_from_json(*sc, where + "/script"));
        out.plan.steps.push_back(std::move(s));
    }
    if (auto f = doc.find("failures"); f != doc.end())
        for (const auto& fj : *f)
            out.plan.failures.push_back({int(json_int(fj, "step", "/failures")), ErrorCode::target_not_found,
                                         json_string(fj, "message", "/failures")});
    return out;
}

}  // namespace procnav
