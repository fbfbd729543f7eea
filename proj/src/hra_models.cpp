#include "procnav/hra_models.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <json.hpp>

#include "procnav/error.hpp"
#include "procnav/planner.hpp"

namespace procnav {

double fitts_time(double distance, double width, const FittsParams& params) {
    if (!(width > 0)) throw Error(ErrorCode::nonpositive_width, "target width must be positive");
    if (!(distance >= 0)) throw Error(ErrorCode::invalid_params, "distance must be non-negative");
    if (!(params.b > 0) || !(params.a >= 0)) throw Error(ErrorCode::invalid_params, "Fitts params need a >= 0, b > 0");
    return params.a + params.b * std::log2(distance / width + 1.0);
}

TimingEstimate predict_clicks_time(const Path& clicks, const IeGraph& graph, const FittsParams& params,
                                   double reading_s) {
    if (!(reading_s >= 0)) throw Error(ErrorCode::invalid_params, "reading time must be non-negative");
    TimingEstimate t;
    t.reading_s = reading_s;
    Point cursor = graph.element(graph.root()).bbox.center();
    double total = reading_s;
    for (const auto& id : clicks) {
        const auto& bbox = graph.element(id).bbox;
        Point target = bbox.center();
        double d = std::hypot(target.x - cursor.x, target.y - cursor.y);
        double mt = fitts_time(d, double(bbox.width), params);
        t.movement_s.push_back(mt);
        total += mt;
        cursor = target;
    }
    t.t_reqd_s = total;
    return t;
}

TimingEstimate predict_step_time(const NavigationPathSet& path_set, const IeGraph& graph,
                                 const FittsParams& params, double reading_s) {
    if (path_set.paths.empty()) throw Error(ErrorCode::invalid_params, "path set is empty");
    return predict_clicks_time(click_sequence(path_set.paths.front()), graph, params, reading_s);
}

TimeMarginHepEstimator::TimeMarginHepEstimator(HepParams params) : params_(params) {
    if (!(params_.base_hep > 0 && params_.base_hep < 1))
        throw Error(ErrorCode::invalid_params, "base_hep must lie in (0, 1)");
    if (!(params_.error_factor > 1)) throw Error(ErrorCode::invalid_params, "error factor must exceed 1");
    if (!(params_.t_avail_s > 0)) throw Error(ErrorCode::invalid_params, "t_avail must be positive");
}

HepEstimate TimeMarginHepEstimator::estimate(const TimingEstimate& timing, std::size_t n_actions) const {
    HepEstimate out;
    // 1 - (1 - p)^n without cancellation for small p.
    out.action_term = -std::expm1(double(n_actions) * std::log1p(-params_.base_hep));
    if (timing.t_reqd_s > 0 && std::isfinite(params_.t_avail_s)) {
        // z_0.95 of the standard normal: EF = exp(1.645 sigma).
        constexpr double z95 = 1.6448536269514722;
        const double sigma = std::log(params_.error_factor) / z95;
        const double z = (std::log(params_.t_avail_s) - std::log(timing.t_reqd_s)) / sigma;
        out.time_term = 0.5 * std::erfc(z / std::sqrt(2.0));
    }
    double combined = 1.0 - (1.0 - out.action_term) * (1.0 - out.time_term);
    out.hep = std::clamp(combined, kHepFloor, kHepCeiling);
    return out;
}

HepEstimate estimate_hep(const TimingEstimate& timing, const HepParams& params, std::size_t n_actions) {
    return TimeMarginHepEstimator(params).estimate(timing, n_actions);
}

// --- NASA-TLX --------------------------------------------------------------

namespace {

constexpr std::array<TlxScale, kTlxScales> kAllScales = {TlxScale::mental,      TlxScale::physical,
                                                         TlxScale::temporal,    TlxScale::performance,
                                                         TlxScale::effort,      TlxScale::frustration};

}  // namespace

std::string_view to_string(TlxScale scale) noexcept {
    switch (scale) {
        case TlxScale::mental: return "mental";
        case TlxScale::physical: return "physical";
        case TlxScale::temporal: return "temporal";
        case TlxScale::performance: return "performance";
        case TlxScale::effort: return "effort";
        case TlxScale::frustration: return "frustration";
    }
    return "mental";
}

std::optional<TlxScale> tlx_scale_from_string(std::string_view text) noexcept {
    for (auto s : kAllScales)
        if (to_string(s) == text) return s;
    return std::nullopt;
}

TlxScore tlx_score(const TlxResponse& response) {
    TlxScore score;
    double sum = 0;
    for (std::size_t i = 0; i < kTlxScales; ++i) {
        int r = response.ratings[i];
        if (r < 0 || r > 100 || r % 5 != 0)
            throw Error(ErrorCode::out_of_range, std::string(to_string(kAllScales[i])) + " rating " +
                                                     std::to_string(r) + " is not in 0..100 step 5");
        sum += r;
    }
    score.raw = sum / double(kTlxScales);
    if (!response.pairs) return score;

    const auto& pairs = *response.pairs;
    if (pairs.size() != kTlxPairs)
        throw Error(ErrorCode::incomplete_pairs, "expected 15 pairwise choices, got " + std::to_string(pairs.size()));
    std::set<std::pair<int, int>> seen;
    std::array<int, kTlxScales> weights{};
    for (const auto& p : pairs) {
        int a = int(p.first), b = int(p.second);
        if (a == b) throw Error(ErrorCode::incomplete_pairs, "pair compares a scale with itself");
        if (!seen.insert(std::minmax(a, b)).second)
            throw Error(ErrorCode::incomplete_pairs, "pair " + std::string(to_string(p.first)) + "/" +
                                                         std::string(to_string(p.second)) + " appears twice");
        if (p.winner != p.first && p.winner != p.second)
            throw Error(ErrorCode::incomplete_pairs, "winner is not one of the compared scales");
        ++weights[std::size_t(p.winner)];
    }
    double weighted = 0;
    for (std::size_t i = 0; i < kTlxScales; ++i) weighted += double(weights[i]) * response.ratings[i];
    score.weighted = weighted / double(kTlxPairs);
    score.weights = weights;
    return score;
}

TlxQuestionnaire tlx_generate(const TlxTaskMeta& meta) {
    TlxQuestionnaire q;
    q.title = meta.task_title.empty() ? "Post-task workload questionnaire" : meta.task_title;
    q.session_id = meta.session_id;
    q.scenario_id = meta.scenario_id;
    q.scales = {
        {TlxScale::mental, "Mental Demand", "How mentally demanding was the task?", "Very Low", "Very High"},
        {TlxScale::physical, "Physical Demand", "How physically demanding was the task?", "Very Low", "Very High"},
        {TlxScale::temporal, "Temporal Demand", "How hurried or rushed was the pace of the task?", "Very Low",
         "Very High"},
        {TlxScale::performance, "Performance",
         "How successful were you in accomplishing what you were asked to do?", "Perfect", "Failure"},
        {TlxScale::effort, "Effort", "How hard did you have to work to accomplish your level of performance?",
         "Very Low", "Very High"},
        {TlxScale::frustration, "Frustration",
         "How insecure, discouraged, irritated, stressed, and annoyed were you?", "Very Low", "Very High"},
    };
    for (std::size_t i = 0; i < kTlxScales; ++i)
        for (std::size_t j = i + 1; j < kTlxScales; ++j) q.pairs.emplace_back(kAllScales[i], kAllScales[j]);
    std::mt19937 rng(meta.seed);
    std::shuffle(q.pairs.begin(), q.pairs.end(), rng);
    for (auto& p : q.pairs)
        if (rng() & 1u) std::swap(p.first, p.second);
    return q;
}

// --- configuration ------------------------------------------------------------

namespace {

using nlohmann::json;

[[noreturn]] void bad_config(const std::string& where, const std::string& what) {
    throw Error(ErrorCode::malformed_format, "HRA config " + where + ": " + what);
}

double number_at(const json& obj, const char* key, const std::string& where) {
    const auto& v = obj.at(key);
    if (!v.is_number()) bad_config(where + "/" + key, "expected a number");
    return v.get<double>();
}

void apply_settings(const json& obj, HraSettings& s, const std::string& where, bool allow_scenarios) {
    if (!obj.is_object()) bad_config(where, "expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        const auto& key = it.key();
        const auto& v = it.value();
        if (key == "fitts") {
            if (!v.is_object()) bad_config(where + "/fitts", "expected an object");
            for (auto f = v.begin(); f != v.end(); ++f) {
                if (f.key() == "a") s.fitts.a = number_at(v, "a", where + "/fitts");
                else if (f.key() == "b") s.fitts.b = number_at(v, "b", where + "/fitts");
                else bad_config(where + "/fitts/" + f.key(), "unknown field");
            }
        } else if (key == "reading_s") {
            s.reading_s = number_at(obj, "reading_s", where);
        } else if (key == "hep") {
            if (!v.is_object()) bad_config(where + "/hep", "expected an object");
            for (auto f = v.begin(); f != v.end(); ++f) {
                if (f.key() == "base") s.base_hep = number_at(v, "base", where + "/hep");
                else if (f.key() == "ef") s.error_factor = number_at(v, "ef", where + "/hep");
                else bad_config(where + "/hep/" + f.key(), "unknown field");
            }
        } else if (key == "t_avail_s") {
            if (v.is_null()) s.t_avail_s.reset();
            else s.t_avail_s = number_at(obj, "t_avail_s", where);
        } else if (key == "scenarios" && allow_scenarios) {
            continue;
        } else {
            bad_config(where + "/" + key, "unknown field");
        }
    }
    if (!(s.fitts.b > 0) || !(s.fitts.a >= 0)) bad_config(where + "/fitts", "need a >= 0 and b > 0");
    if (!(s.reading_s >= 0)) bad_config(where + "/reading_s", "must be non-negative");
    if (!(s.base_hep > 0 && s.base_hep < 1)) bad_config(where + "/hep/base", "must lie in (0, 1)");
    if (!(s.error_factor > 1)) bad_config(where + "/hep/ef", "must exceed 1");
    if (s.t_avail_s && !(*s.t_avail_s > 0)) bad_config(where + "/t_avail_s", "must be positive");
}

}  // namespace

HraConfig parse_hra_config(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        bad_config("", e.what());
    }
    HraConfig cfg;
    apply_settings(doc, cfg.defaults, "", true);
    if (auto sc = doc.find("scenarios"); sc != doc.end()) {
        if (!sc->is_object()) bad_config("/scenarios", "expected an object");
        for (auto it = sc->begin(); it != sc->end(); ++it) {
            HraSettings s = cfg.defaults;
            apply_settings(it.value(), s, "/scenarios/" + it.key(), false);
            cfg.per_scenario.emplace(it.key(), s);
        }
    }
    return cfg;
}

}  // namespace procnav
