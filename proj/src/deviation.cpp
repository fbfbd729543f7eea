#include "procnav/deviation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "procnav/error.hpp"

namespace procnav {

std::vector<ResolvedEvent> resolve_clicks(const SessionTrace& trace, const IeGraph& graph) {
    std::vector<ResolvedEvent> out;
    out.reserve(trace.events.size());
    NavState state = graph.initial_state();
    for (const auto& e : trace.events) {
        ResolvedEvent r;
        r.t = e.t;
        r.kind = e.kind();
        if (const auto* c = std::get_if<ClickEvent>(&e.data)) {
            r.element = graph.hit_test(state, Point{double(c->x), double(c->y)});
            if (r.element) state = graph.apply_click(state, *r.element);
        } else if (const auto* m = std::get_if<MarkerEvent>(&e.data)) {
            r.step = m->step;
        }
        out.push_back(std::move(r));
    }
    return out;
}

namespace {

std::map<int, std::size_t> step_positions(const ProcedurePlan& plan) {
    std::map<int, std::size_t> pos;
    for (std::size_t i = 0; i < plan.steps.size(); ++i) pos[plan.steps[i].path_set.step.index] = i;
    return pos;
}

void check_marker(int step, const std::map<int, std::size_t>& positions, const std::set<int>& seen) {
    if (!positions.count(step)) throw Error(ErrorCode::invalid_marker, "marker for step " + std::to_string(step) + " not in the plan");
    if (seen.count(step)) throw Error(ErrorCode::duplicate_marker, "step " + std::to_string(step));
}

}  // namespace

std::vector<StepWindow> segment(const std::vector<ResolvedEvent>& resolved, const ProcedurePlan& plan,
                                const IeGraph& graph) {
    const auto positions = step_positions(plan);
    std::vector<StepWindow> windows(plan.steps.size());
    for (std::size_t i = 0; i < plan.steps.size(); ++i) windows[i].step = plan.steps[i].path_set.step.index;

    std::set<int> seen;
    int max_seen = 0;
    StepWindow* open = nullptr;
    NavState state = graph.initial_state();
    for (const auto& r : resolved) {
        if (r.kind == EventKind::marker) {
            check_marker(r.step, positions, seen);
            seen.insert(r.step);
            open = &windows[positions.at(r.step)];
            open->attempted = true;
            open->out_of_order = r.step < max_seen;
            open->marker_t = r.t;
            open->start_state = state;
            max_seen = std::max(max_seen, r.step);
        } else if (r.kind == EventKind::click) {
            if (r.element) state = graph.apply_click(state, *r.element);
            if (open) open->clicks.push_back(r);
        }
    }
    return windows;
}

EditScript levenshtein(const std::vector<Symbol>& observed, const std::vector<Symbol>& expected) {
    const std::size_t n = observed.size(), m = expected.size();
    std::vector<std::vector<std::size_t>> d(n + 1, std::vector<std::size_t>(m + 1));
    for (std::size_t i = 0; i <= n; ++i) d[i][0] = i;
    for (std::size_t j = 0; j <= m; ++j) d[0][j] = j;
    for (std::size_t i = 1; i <= n; ++i)
        for (std::size_t j = 1; j <= m; ++j) {
            const std::size_t diag = d[i - 1][j - 1] + (observed[i - 1] == expected[j - 1] ? 0 : 1);
            d[i][j] = std::min({diag, d[i - 1][j] + 1, d[i][j - 1] + 1});
        }

    EditScript out;
    out.cost = d[n][m];
    std::size_t i = n, j = m;
    while (i > 0 || j > 0) {
        if (i > 0 && j > 0 && observed[i - 1] == expected[j - 1] && d[i][j] == d[i - 1][j - 1]) {
            out.ops.push_back({EditKind::match, i - 1, j - 1});
            --i, --j;
        } else if (i > 0 && j > 0 && d[i][j] == d[i - 1][j - 1] + 1) {
            out.ops.push_back({EditKind::substitute, i - 1, j - 1});
            --i, --j;
        } else if (j > 0 && d[i][j] == d[i][j - 1] + 1) {
            out.ops.push_back({EditKind::del, std::nullopt, j - 1});
            --j;
        } else {
            out.ops.push_back({EditKind::insert, i - 1, std::nullopt});
            --i;
        }
    }
    std::reverse(out.ops.begin(), out.ops.end());
    return out;
}

Alignment align_step(const std::vector<Symbol>& observed, const NavigationPathSet& path_set,
                     const std::optional<NavState>& start_state) {
    std::optional<Alignment> best;
    auto consider = [&](std::size_t index, const Path& path, std::vector<Symbol> expected) {
        auto script = levenshtein(observed, expected);
        bool better = !best || script.cost < best->cost ||
                      (script.cost == best->cost &&
                       (expected.size() < best->expected.size() ||
                        (expected.size() == best->expected.size() && expected < best->expected)));
        if (better) best = Alignment{script.cost, index, path, std::move(expected), std::move(script.ops)};
    };
    for (std::size_t k = 0; k < path_set.paths.size(); ++k) {
        const auto& path = path_set.paths[k];
        consider(k, path, click_sequence(path));
        if (start_state && start_state->open.size() > 1 && start_state->open.size() < path.size() &&
            std::equal(start_state->open.begin(), start_state->open.end(), path.begin()))
            consider(k, path, Path(path.begin() + std::ptrdiff_t(start_state->open.size()), path.end()));
    }
    return *best;
}

std::string_view to_string(DeviationKind k) noexcept {
    switch (k) {
        case DeviationKind::omission: return "omission";
        case DeviationKind::commission: return "commission";
        case DeviationKind::slip: return "slip";
        case DeviationKind::sequence_error: return "sequence_error";
    }
    return "?";
}

double SeverityWeights::of(DeviationKind k) const noexcept {
    switch (k) {
        case DeviationKind::omission: return omission;
        case DeviationKind::commission: return commission;
        case DeviationKind::slip: return slip;
        case DeviationKind::sequence_error: return sequence_error;
    }
    return 0;
}

ClassifyContext make_classify_context(const ProcedurePlan& plan, const SeverityWeights& weights) {
    ClassifyContext ctx;
    ctx.weights = weights;
    for (const auto& s : plan.steps)
        for (const auto& p : s.path_set.paths) ctx.plan_elements.insert(p.begin(), p.end());
    return ctx;
}

std::vector<Deviation> classify(const Alignment& alignment, const std::vector<Symbol>& observed,
                                const NavigationPathSet& path_set, const ClassifyContext& ctx) {
    std::vector<Deviation> out;
    const int step = path_set.step.index;
    const auto& expected = alignment.expected;
    auto make = [&](DeviationKind kind, std::vector<ElementId> elements, std::optional<std::size_t> pos,
                    const ElementId& at) {
        Deviation d;
        d.step = step;
        d.kind = kind;
        d.elements = std::move(elements);
        d.position = pos;
        d.expected = at;
        d.severity = ctx.weights.of(kind);
        out.push_back(std::move(d));
    };
    const std::set<Symbol> on_chosen(expected.begin(), expected.end());
    // An observed click that is not part of the expected sequence.
    auto extra = [&](std::size_t i, const ElementId& at) {
        const auto& o = observed[i];
        bool slip = o.empty() || (i > 0 && observed[i - 1] == o) || ctx.plan_elements.count(o);
        make(slip ? DeviationKind::slip : DeviationKind::commission, o.empty() ? std::vector<ElementId>{} : std::vector<ElementId>{o},
             i, at);
    };

    std::size_t next_expected = 0;
    bool any_match = false;
    std::optional<ElementId> first_missed;
    for (const auto& op : alignment.ops) {
        switch (op.kind) {
            case EditKind::match:
                any_match = true;
                next_expected = *op.expected + 1;
                break;
            case EditKind::substitute: {
                const auto& e = expected[*op.expected];
                const auto& o = observed[*op.observed];
                if (!first_missed) first_missed = e;
                if (!o.empty() && on_chosen.count(o))
                    make(DeviationKind::sequence_error, {o, e}, op.observed, e);
                else
                    extra(*op.observed, e);
                next_expected = *op.expected + 1;
                break;
            }
            case EditKind::insert: {
                const auto& at = expected.empty() ? path_set.target : expected[std::min(next_expected, expected.size() - 1)];
                extra(*op.observed, at);
                break;
            }
            case EditKind::del:
                if (!first_missed) first_missed = expected[*op.expected];
                next_expected = *op.expected + 1;
                break;
        }
    }
    if (std::find(observed.begin(), observed.end(), path_set.target) == observed.end()) {
        make(DeviationKind::omission, {path_set.target}, std::nullopt, first_missed.value_or(path_set.target));
        out.back().partial = any_match;
    }
    return out;
}

namespace {

std::vector<Symbol> symbols_of(const std::vector<ResolvedEvent>& clicks) {
    std::vector<Symbol> out;
    out.reserve(clicks.size());
    for (const auto& c : clicks) out.push_back(c.element.value_or(""));
    return out;
}

StepRecord analyze_window(const StepWindow& w, const PlannedStep& planned, const ClassifyContext& ctx) {
    const auto& set = planned.path_set;
    StepRecord rec;
    rec.step = w.step;
    rec.target = set.target;
    rec.attempted = w.attempted;
    rec.marker_t = w.marker_t;
    rec.resolved = w.clicks;
    if (!w.attempted) {
        rec.best_path = set.chosen_path();
        rec.expected = click_sequence(rec.best_path);
        rec.edit_cost = rec.expected.size();
        Deviation d;
        d.step = w.step;
        d.kind = DeviationKind::omission;
        d.elements = {set.target};
        d.expected = rec.expected.empty() ? set.target : rec.expected.front();
        d.severity = ctx.weights.of(DeviationKind::omission);
        rec.deviations.push_back(std::move(d));
        return rec;
    }
    const auto observed = symbols_of(w.clicks);
    auto alignment = align_step(observed, set, w.start_state);
    rec.best_path = alignment.path;
    rec.expected = alignment.expected;
    rec.edit_cost = alignment.cost;
    if (w.out_of_order) {
        Deviation d;
        d.step = w.step;
        d.kind = DeviationKind::sequence_error;
        d.elements = {set.target};
        d.expected = rec.expected.empty() ? set.target : rec.expected.front();
        d.severity = ctx.weights.of(DeviationKind::sequence_error);
        rec.deviations.push_back(std::move(d));
    }
    auto devs = classify(alignment, observed, set, ctx);
    rec.deviations.insert(rec.deviations.end(), devs.begin(), devs.end());
    for (const auto& c : w.clicks)
        if (c.element == set.target) {
            rec.latency_s = double(c.t - w.marker_t) / 1000.0;
            break;
        }
    return rec;
}

void fill_totals(DeviationReport& r) {
    r.counts.fill(0);
    for (const auto& s : r.steps)
        for (const auto& d : s.deviations) ++r.counts[std::size_t(d.kind)];
}

}  // namespace

std::size_t DeviationReport::total_deviations() const noexcept {
    std::size_t n = 0;
    for (auto c : counts) n += c;
    return n;
}

DeviationReport analyze_session(const SessionTrace& trace, const ProcedurePlan& plan, const IeGraph& graph,
                                const AnalysisOptions& options) {
    if (!trace.scenario_id.empty() && trace.scenario_id != plan.scenario_id)
        throw Error(ErrorCode::scenario_mismatch,
                    "trace is for " + trace.scenario_id + " but the plan is for " + plan.scenario_id);
    const auto ctx = make_classify_context(plan, options.weights);
    const auto resolved = resolve_clicks(trace, graph);
    const auto windows = segment(resolved, plan, graph);

    DeviationReport report;
    report.session_id = trace.session_id;
    report.scenario_id = plan.scenario_id;
    for (std::size_t i = 0; i < windows.size(); ++i) report.steps.push_back(analyze_window(windows[i], plan.steps[i], ctx));

    std::optional<std::int64_t> first_marker;
    for (const auto& r : resolved)
        if (r.kind == EventKind::marker) {
            first_marker = r.t;
            break;
        }
    if (first_marker && !resolved.empty()) report.task_time_s = double(resolved.back().t - *first_marker) / 1000.0;
    fill_totals(report);
    return report;
}

bool totals_consistent(const DeviationReport& report) {
    std::array<std::size_t, kDeviationKinds> sums{};
    for (const auto& s : report.steps) {
        for (const auto& d : s.deviations) ++sums[std::size_t(d.kind)];
        if (s.latency_s && *s.latency_s < 0) return false;
    }
    return sums == report.counts;
}

namespace {

Json ids_json(const std::vector<ElementId>& ids) {
    Json a = Json::array();
    for (const auto& id : ids) a.push_back(id);
    return a;
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

Json to_json(const Deviation& d) {
    Json j;
    j["step"] = d.step;
    j["kind"] = std::string(to_string(d.kind));
    j["elements"] = ids_json(d.elements);
    j["position"] = d.position ? Json(*d.position) : Json(nullptr);
    j["expected"] = d.expected;
    j["severity"] = d.severity;
    j["partial"] = d.partial;
    return j;
}

Json to_json(const DeviationReport& report) {
    Json j;
    j["analysis_version"] = kAnalysisVersion;
    j["session"] = report.session_id;
    j["scenario"] = report.scenario_id;
    Json steps = Json::array();
    for (const auto& s : report.steps) {
        Json js;
        js["step"] = s.step;
        js["target"] = s.target;
        js["attempted"] = s.attempted;
        js["marker_t"] = s.attempted ? Json(s.marker_t) : Json(nullptr);
        Json resolved = Json::array();
        for (const auto& r : s.resolved) {
            Json e;
            e["t"] = r.t;
            e["element"] = r.element ? Json(*r.element) : Json(nullptr);
            resolved.push_back(std::move(e));
        }
        js["resolved"] = std::move(resolved);
        js["best_path"] = ids_json(s.best_path);
        js["expected"] = ids_json(s.expected);
        js["edit_cost"] = s.edit_cost;
        js["latency_s"] = optional_number(s.latency_s);
        Json devs = Json::array();
        for (const auto& d : s.deviations) devs.push_back(to_json(d));
        js["deviations"] = std::move(devs);
        steps.push_back(std::move(js));
    }
    j["steps"] = std::move(steps);
    Json totals;
    totals["task_time_s"] = report.task_time_s;
    totals["deviations"] = report.total_deviations();
    Json by_kind;
    double severity = 0;
    for (std::size_t k = 0; k < kDeviationKinds; ++k) by_kind[std::string(to_string(DeviationKind(k)))] = report.counts[k];
    for (const auto& s : report.steps)
        for (const auto& d : s.deviations) severity += d.severity;
    totals["by_kind"] = std::move(by_kind);
    totals["severity"] = severity;
    j["totals"] = std::move(totals);
    return j;
}

// --- live ---------------------------------------------------------------------

LiveAnalyzer::LiveAnalyzer(const ProcedurePlan& plan, const IeGraph& graph, std::string session_id,
                           const AnalysisOptions& options)
    : plan_(plan),
      graph_(graph),
      session_id_(std::move(session_id)),
      options_(options),
      ctx_(make_classify_context(plan, options.weights)),
      state_(graph.initial_state()) {}

StepRecord LiveAnalyzer::close_window(const StepWindow& w) const {
    for (const auto& s : plan_.steps)
        if (s.path_set.step.index == w.step) return analyze_window(w, s, ctx_);
    throw Error(ErrorCode::invalid_marker, "step " + std::to_string(w.step));
}

void LiveAnalyzer::feed(const InteractionEvent& event) {
    if (const auto* m = std::get_if<MarkerEvent>(&event.data)) {
        check_marker(m->step, step_positions(plan_), seen_markers_);
        if (open_) done_[open_->step] = close_window(*open_);
        seen_markers_.insert(m->step);
        StepWindow w;
        w.step = m->step;
        w.attempted = true;
        w.out_of_order = m->step < max_marker_;
        w.marker_t = event.t;
        w.start_state = state_;
        open_ = std::move(w);
        max_marker_ = std::max(max_marker_, m->step);
        if (!first_marker_t_) first_marker_t_ = event.t;
    } else if (const auto* c = std::get_if<ClickEvent>(&event.data)) {
        ResolvedEvent r;
        r.t = event.t;
        r.kind = EventKind::click;
        r.element = graph_.hit_test(state_, Point{double(c->x), double(c->y)});
        if (r.element) state_ = graph_.apply_click(state_, *r.element);
        last_click_ = r;
        if (open_) open_->clicks.push_back(std::move(r));
    }
    last_t_ = event.t;
    any_event_ = true;
}

std::optional<int> LiveAnalyzer::current_step() const {
    if (!open_) return std::nullopt;
    return open_->step;
}

std::vector<Deviation> LiveAnalyzer::deviations() const {
    std::vector<Deviation> out;
    for (const auto& s : plan_.steps) {
        auto it = done_.find(s.path_set.step.index);
        if (it != done_.end()) out.insert(out.end(), it->second.deviations.begin(), it->second.deviations.end());
    }
    if (open_) {
        if (open_->out_of_order) out.push_back(close_window(*open_).deviations.front());
        const auto observed = symbols_of(open_->clicks);
        for (std::size_t i = 0; i < observed.size(); ++i) {
            const auto& o = observed[i];
            if (o.empty() || ctx_.plan_elements.count(o) || (i > 0 && observed[i - 1] == o)) continue;
            Deviation d;
            d.step = open_->step;
            d.kind = DeviationKind::commission;
            d.elements = {o};
            d.position = i;
            d.severity = ctx_.weights.of(DeviationKind::commission);
            out.push_back(std::move(d));
        }
    }
    return out;
}

DeviationReport LiveAnalyzer::finalize() const {
    DeviationReport report;
    report.session_id = session_id_;
    report.scenario_id = plan_.scenario_id;
    for (const auto& s : plan_.steps) {
        const int idx = s.path_set.step.index;
        if (open_ && open_->step == idx) {
            report.steps.push_back(close_window(*open_));
        } else if (auto it = done_.find(idx); it != done_.end()) {
            report.steps.push_back(it->second);
        } else {
            StepWindow w;
            w.step = idx;
            report.steps.push_back(analyze_window(w, s, ctx_));
        }
    }
    if (first_marker_t_ && any_event_) report.task_time_s = double(last_t_ - *first_marker_t_) / 1000.0;
    fill_totals(report);
    return report;
}

namespace {

std::vector<ElementId> ids_from(const Json& j, const std::string& where) {
    if (!j.is_array()) throw Error(ErrorCode::malformed_format, where + ": expected an array of ids");
    std::vector<ElementId> out;
    for (const auto& v : j) {
        if (!v.is_string()) throw Error(ErrorCode::malformed_format, where + ": expected string ids");
        out.push_back(v.get<std::string>());
    }
    return out;
}

std::optional<double> optional_from(const Json& j, const char* key, const std::string& where) {
    const auto& v = json_field(j, key, where);
    if (v.is_null()) return std::nullopt;
    return json_number(j, key, where);
}

DeviationKind kind_from(const std::string& s, const std::string& where) {
    for (std::size_t k = 0; k < kDeviationKinds; ++k)
        if (to_string(DeviationKind(k)) == s) return DeviationKind(k);
    throw Error(ErrorCode::malformed_format, where + ": unknown deviation kind '" + s + "'");
}

}  // namespace

DeviationReport deviation_report_from_json(const Json& j) {
    const std::string where = "report";
    if (!j.is_object()) throw Error(ErrorCode::malformed_format, "report: expected an object");
    if (json_string(j, "analysis_version", where) != kAnalysisVersion)
        throw Error(ErrorCode::malformed_format, "report: analysis version " + j["analysis_version"].dump() +
                                                     " is not " + kAnalysisVersion);
    DeviationReport r;
    r.session_id = json_string(j, "session", where);
    r.scenario_id = json_string(j, "scenario", where);
    const auto& steps = json_field(j, "steps", where);
    if (!steps.is_array()) throw Error(ErrorCode::malformed_format, "report.steps: expected an array");
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const auto& js = steps[i];
        const std::string w = "report.steps[" + std::to_string(i) + "]";
        StepRecord s;
        s.step = int(json_int(js, "step", w));
        s.target = json_string(js, "target", w);
        s.attempted = json_field(js, "attempted", w).get<bool>();
        if (s.attempted) s.marker_t = json_int(js, "marker_t", w);
        for (const auto& e : json_field(js, "resolved", w)) {
            ResolvedEvent ev;
            ev.t = e.at("t").get<std::int64_t>();
            if (!e.at("element").is_null()) ev.element = e.at("element").get<std::string>();
            s.resolved.push_back(std::move(ev));
        }
        s.best_path = ids_from(json_field(js, "best_path", w), w + ".best_path");
        s.expected = ids_from(json_field(js, "expected", w), w + ".expected");
        s.edit_cost = std::size_t(json_int(js, "edit_cost", w));
        s.latency_s = optional_from(js, "latency_s", w);
        const auto& devs = json_field(js, "deviations", w);
        for (std::size_t k = 0; k < devs.size(); ++k) {
            const auto& jd = devs[k];
            const std::string wd = w + ".deviations[" + std::to_string(k) + "]";
            Deviation d;
            d.step = int(json_int(jd, "step", wd));
            d.kind = kind_from(json_string(jd, "kind", wd), wd);
            d.elements = ids_from(json_field(jd, "elements", wd), wd + ".elements");
            if (!json_field(jd, "position", wd).is_null()) d.position = std::size_t(json_int(jd, "position", wd));
            d.expected = json_string(jd, "expected", wd);
            d.severity = json_number(jd, "severity", wd);
            d.partial = json_field(jd, "partial", wd).get<bool>();
            s.deviations.push_back(std::move(d));
        }
        r.steps.push_back(std::move(s));
    }
    r.task_time_s = json_number(json_field(j, "totals", where), "task_time_s", "report.totals");
    fill_totals(r);
    return r;
}

// --- risk -----------------------------------------------------------------------

Interval wilson_interval(std::size_t errors, std::size_t n, double z) {
    if (n == 0) return {0, 1};
    const double nn = double(n), p = double(errors) / nn, z2 = z * z;
    const double denom = 1 + z2 / nn;
    const double center = (p + z2 / (2 * nn)) / denom;
    const double half = z * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn)) / denom;
    // The bounds are exact at the ends; the formula leaves rounding residue there.
    return {errors == 0 ? 0.0 : std::max(0.0, center - half), errors == n ? 1.0 : std::min(1.0, center + half)};
}

namespace {

RiskCell make_cell(std::size_t errors, std::size_t opportunities) {
    RiskCell c;
    c.errors = errors;
    c.opportunities = opportunities;
    c.rate = opportunities ? double(errors) / double(opportunities) : 0.0;
    c.interval = wilson_interval(errors, opportunities);
    return c;
}

bool riskier(const RiskCell& a, const RiskCell& b) {
    if (a.errors != b.errors) return a.errors > b.errors;
    return a.rate > b.rate;
}

}  // namespace

RiskReport aggregate_risk(const std::vector<DeviationReport>& reports, const ProcedurePlan& plan,
                          const RiskOptions& options) {
    if (reports.empty()) throw Error(ErrorCode::empty_input, "no reports to aggregate");
    RiskReport out;
    out.scenario_id = plan.scenario_id;
    out.sessions = reports.size();

    std::map<ElementId, std::pair<std::size_t, std::size_t>> elements;  // errors, opportunities
    std::map<std::pair<ElementId, ElementId>, std::pair<std::size_t, std::size_t>> edges;
    std::map<int, std::size_t> step_errors;
    for (const auto& r : reports) {
        if (r.scenario_id != plan.scenario_id)
            throw Error(ErrorCode::scenario_mismatch, "report " + r.session_id + " is for " + r.scenario_id);
        for (const auto& s : r.steps) {
            if (!s.deviations.empty()) ++step_errors[s.step];
            if (!s.attempted) continue;
            std::set<ElementId> erred;
            for (const auto& d : s.deviations) erred.insert(d.expected);
            // The expected sequence is a suffix of best_path.
            const std::size_t offset = s.best_path.size() - s.expected.size();
            for (std::size_t k = 0; k < s.expected.size(); ++k) {
                const auto& el = s.expected[k];
                const auto& from = s.best_path[offset + k - 1];
                const bool err = erred.count(el) != 0;
                auto& e = elements[el];
                e.second += 1;
                e.first += err;
                auto& g = edges[{from, el}];
                g.second += 1;
                g.first += err;
            }
        }
    }
    for (const auto& [id, c] : elements) out.elements.push_back({id, make_cell(c.first, c.second)});
    for (const auto& [key, c] : edges) out.edges.push_back({key.first, key.second, make_cell(c.first, c.second)});
    std::stable_sort(out.elements.begin(), out.elements.end(),
                     [](const ElementRisk& a, const ElementRisk& b) { return riskier(a.cell, b.cell); });
    std::stable_sort(out.edges.begin(), out.edges.end(),
                     [](const EdgeRisk& a, const EdgeRisk& b) { return riskier(a.cell, b.cell); });

    for (const auto& s : plan.steps) {
        PathwayRisk p;
        p.step = s.path_set.step.index;
        p.target = s.path_set.target;
        p.path = s.path_set.chosen_path();
        p.classification = s.path_set.classification;
        p.sessions = make_cell(step_errors[p.step], reports.size());
        for (std::size_t k = 1; k < p.path.size(); ++k) {
            auto it = edges.find({p.path[k - 1], p.path[k]});
            if (it != edges.end()) p.segment_errors += it->second.first;
        }
        p.recommended = p.classification == StepClass::multi_action && options.automation_threshold > 0 &&
                        p.sessions.errors >= options.automation_threshold;
        out.pathways.push_back(std::move(p));
    }
    std::stable_sort(out.pathways.begin(), out.pathways.end(), [](const PathwayRisk& a, const PathwayRisk& b) {
        if (a.sessions.errors != b.sessions.errors) return a.sessions.errors > b.sessions.errors;
        if (a.segment_errors != b.segment_errors) return a.segment_errors > b.segment_errors;
        return a.step < b.step;
    });
    for (const auto& p : out.pathways)
        if (p.recommended) out.recommendations.push_back(p.step);
    return out;
}

namespace {

Json cell_json(const RiskCell& c) {
    Json j;
    j["opportunities"] = c.opportunities;
    j["errors"] = c.errors;
    j["rate"] = c.rate;
    j["interval"] = Json::array({c.interval.low, c.interval.high});
    return j;
}

}  // namespace

Json to_json(const RiskReport& report) {
    Json j;
    j["analysis_version"] = kAnalysisVersion;
    j["scenario"] = report.scenario_id;
    j["sessions"] = report.sessions;
    Json pathways = Json::array();
    for (const auto& p : report.pathways) {
        Json e;
        e["step"] = p.step;
        e["target"] = p.target;
        e["path"] = ids_json(p.path);
        e["classification"] = std::string(to_string(p.classification));
        e["sessions"] = cell_json(p.sessions);
        e["segment_errors"] = p.segment_errors;
        e["recommended"] = p.recommended;
        pathways.push_back(std::move(e));
    }
    j["pathways"] = std::move(pathways);
    Json elements = Json::array();
    for (const auto& e : report.elements) {
        Json x = cell_json(e.cell);
        x["element"] = e.element;
        elements.push_back(std::move(x));
    }
    j["elements"] = std::move(elements);
    Json edges = Json::array();
    for (const auto& e : report.edges) {
        Json x = cell_json(e.cell);
        x["from"] = e.from;
        x["to"] = e.to;
        edges.push_back(std::move(x));
    }
    j["edges"] = std::move(edges);
    j["recommendations"] = report.recommendations;
    return j;
}

std::string risk_table_tsv(const RiskReport& report) {
    std::ostringstream out;
    out.precision(6);
    out << "rank\tview\tstep\tsubject\topportunities\terrors\trate\tci_low\tci_high\trecommended\n";
    auto row = [&](std::size_t rank, const char* view, const std::string& step, const std::string& subject,
                   const RiskCell& c, const std::string& rec) {
        out << rank << '\t' << view << '\t' << step << '\t' << subject << '\t' << c.opportunities << '\t' << c.errors
            << '\t' << c.rate << '\t' << c.interval.low << '\t' << c.interval.high << '\t' << rec << '\n';
    };
    std::size_t rank = 0;
    for (const auto& p : report.pathways)
        row(++rank, "pathway", std::to_string(p.step), p.target, p.sessions, p.recommended ? "yes" : "no");
    rank = 0;
    for (const auto& e : report.elements) row(++rank, "element", "", e.element, e.cell, "");
    rank = 0;
    for (const auto& e : report.edges) row(++rank, "edge", "", e.from + " -> " + e.to, e.cell, "");
    return out.str();
}

}  // namespace procnav
