#include "procnav/report.hpp"

#include <limits>

#include "procnav/error.hpp"

namespace procnav {

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::malformed_format, "tlx " + what); }

TlxScale scale_at(const Json& j, const char* key, std::size_t i) {
    if (!j.contains(key) || !j[key].is_string()) bad("pairs[" + std::to_string(i) + "]." + key + ": expected a scale name");
    auto s = tlx_scale_from_string(j[key].get<std::string>());
    if (!s) bad("pairs[" + std::to_string(i) + "]." + key + ": unknown scale '" + j[key].get<std::string>() + "'");
    return *s;
}

int rating(const Json& v, const std::string& where) {
    if (!v.is_number_integer()) bad(where + ": expected an integer");
    return v.get<int>();
}

}  // namespace

TlxResponse tlx_response_from_json(const Json& j) {
    if (!j.is_object()) bad("response: expected an object");
    json_reject_unknown(j, "tlx response", {"ratings", "pairs"});
    if (!j.contains("ratings")) bad("ratings: missing");
    TlxResponse r;
    const auto& ratings = j["ratings"];
    if (ratings.is_array()) {
        if (ratings.size() != kTlxScales) bad("ratings: expected 6 values");
        for (std::size_t i = 0; i < kTlxScales; ++i) r.ratings[i] = rating(ratings[i], "ratings[" + std::to_string(i) + "]");
    } else if (ratings.is_object()) {
        if (ratings.size() != kTlxScales) bad("ratings: expected all 6 scales");
        for (const auto& [key, v] : ratings.items()) {
            auto s = tlx_scale_from_string(key);
            if (!s) bad("ratings." + key + ": unknown scale");
            r.ratings[std::size_t(*s)] = rating(v, "ratings." + key);
        }
    } else {
        bad("ratings: expected an object or array");
    }
    if (j.contains("pairs") && !j["pairs"].is_null()) {
        if (!j["pairs"].is_array()) bad("pairs: expected an array");
        std::vector<TlxPairChoice> pairs;
        for (std::size_t i = 0; i < j["pairs"].size(); ++i) {
            const auto& p = j["pairs"][i];
            if (!p.is_object()) bad("pairs[" + std::to_string(i) + "]: expected an object");
            pairs.push_back({scale_at(p, "first", i), scale_at(p, "second", i), scale_at(p, "winner", i)});
        }
        r.pairs = std::move(pairs);
    }
    return r;
}

Json to_json(const TlxResponse& r) {
    Json ratings = Json::object();
    for (std::size_t i = 0; i < kTlxScales; ++i) ratings[std::string(to_string(TlxScale(i)))] = r.ratings[i];
    Json j{{"ratings", std::move(ratings)}};
    if (r.pairs) {
        Json pairs = Json::array();
        for (const auto& p : *r.pairs)
            pairs.push_back({{"first", to_string(p.first)}, {"second", to_string(p.second)}, {"winner", to_string(p.winner)}});
        j["pairs"] = std::move(pairs);
    }
    return j;
}

Json to_json(const TlxScore& s) {
    Json j{{"raw", s.raw}};
    if (s.weighted) j["weighted"] = *s.weighted;
    if (s.weights) {
        Json w = Json::object();
        for (std::size_t i = 0; i < kTlxScales; ++i) w[std::string(to_string(TlxScale(i)))] = (*s.weights)[i];
        j["weights"] = std::move(w);
    }
    return j;
}

Json to_json(const TlxQuestionnaire& q) {
    Json scales = Json::array();
    for (const auto& s : q.scales)
        scales.push_back({{"scale", to_string(s.scale)},
                          {"title", s.title},
                          {"question", s.question},
                          {"low", s.low_anchor},
                          {"high", s.high_anchor}});
    Json pairs = Json::array();
    for (const auto& [a, b] : q.pairs) pairs.push_back(Json::array({to_string(a), to_string(b)}));
    return Json{{"title", q.title},
                {"session", q.session_id},
                {"scenario", q.scenario_id},
                {"rating", {{"min", q.rating_min}, {"max", q.rating_max}, {"step", q.rating_step}}},
                {"scales", std::move(scales)},
                {"pairs", std::move(pairs)}};
}

Json hra_summary(const ProcedurePlan& plan, const IeGraph& graph, const HraSettings& settings) {
    TimingEstimate total;
    Json steps = Json::array();
    std::size_t actions = 0;
    for (const auto& s : plan.steps) {
        // Chained plans execute the suffix from the previous step's panel.
        auto t = predict_clicks_time(s.clicks, graph, settings.fitts, settings.reading_s);
        steps.push_back({{"step", s.path_set.step.index}, {"clicks", s.clicks.size()}, {"t_reqd_s", t.t_reqd_s}});
        total.movement_s.insert(total.movement_s.end(), t.movement_s.begin(), t.movement_s.end());
        total.reading_s += t.reading_s;
        total.t_reqd_s += t.t_reqd_s;
        actions += s.clicks.size();
    }
    HepParams params{settings.base_hep, settings.error_factor,
                     settings.t_avail_s.value_or(std::numeric_limits<double>::infinity())};
    auto hep = estimate_hep(total, params, actions);
    Json j{{"model", {{"fitts_a", settings.fitts.a},
                      {"fitts_b", settings.fitts.b},
                      {"reading_s", settings.reading_s},
                      {"base_hep", settings.base_hep},
                      {"error_factor", settings.error_factor}}},
           {"steps", std::move(steps)},
           {"n_actions", actions},
           {"t_reqd_s", total.t_reqd_s}};
    j["t_avail_s"] = settings.t_avail_s ? Json(*settings.t_avail_s) : Json(nullptr);
    j["hep"] = {{"action_term", hep.action_term}, {"time_term", hep.time_term}, {"hep", hep.hep}};
    return j;
}

Json compose_report(const DeviationReport& report, const ProcedurePlan& plan, const IeGraph& graph,
                    const HraSettings& settings, const std::optional<TlxScore>& tlx) {
    Json latencies = Json::array();
    for (const auto& s : report.steps)
        latencies.push_back({{"step", s.step}, {"latency_s", s.latency_s ? Json(*s.latency_s) : Json(nullptr)}});
    Json j{{"analysis_version", kAnalysisVersion},
           {"session", report.session_id},
           {"scenario", report.scenario_id},
           {"deviations", to_json(report)},
           {"timing", {{"task_time_s", report.task_time_s}, {"steps", std::move(latencies)}}},
           {"hra", hra_summary(plan, graph, settings)}};
    j["tlx"] = tlx ? to_json(*tlx) : Json(nullptr);
    return j;
}

}  // namespace procnav
