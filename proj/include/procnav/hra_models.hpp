#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "procnav/ie_kg.hpp"

namespace procnav {

struct NavigationPathSet;

// Shannon form of Fitts' law, MT = a + b * log2(D / W + 1). The default
// coefficients are generic pointing-task values, not fitted to any plant HMI.
struct FittsParams {
    double a = 0.1;   // seconds
    double b = 0.15;  // seconds per bit
};

// Throws nonpositive_width (W <= 0) or invalid_params (D < 0, b <= 0, a < 0).
double fitts_time(double distance, double width, const FittsParams& params);

struct TimingEstimate {
    std::vector<double> movement_s;  // one per click
    double reading_s = 0;
    double t_reqd_s = 0;
};

constexpr double kDefaultReadingSeconds = 2.0;

// Movement distances run between consecutive click points along `clicks`,
// the first measured from the center of the root view. W is the bbox width.
TimingEstimate predict_clicks_time(const Path& clicks, const IeGraph& graph, const FittsParams& params,
                                   double reading_s);
// Uses the shortest path of the set.
TimingEstimate predict_step_time(const NavigationPathSet& path_set, const IeGraph& graph,
                                 const FittsParams& params, double reading_s = kDefaultReadingSeconds);

struct HepParams {
    double base_hep = 1e-3;      // per action
    double error_factor = 3.0;   // 95th / 50th percentile of the time-needed distribution
    double t_avail_s = 0;
};

struct HepEstimate {
    double action_term = 0;  // 1 - (1 - base)^n
    double time_term = 0;    // P(T_needed > t_avail)
    double hep = 0;
};

constexpr double kHepFloor = 1e-7;
constexpr double kHepCeiling = 0.999;

class HepEstimator {
  public:
    virtual ~HepEstimator() = default;
    virtual HepEstimate estimate(const TimingEstimate& timing, std::size_t n_actions) const = 0;
};

// Per-action base rate OR'ed with a lognormal time-adequacy failure whose
// median is t_reqd. The result is clamped to [kHepFloor, kHepCeiling].
class TimeMarginHepEstimator final : public HepEstimator {
  public:
    // Throws invalid_params.
    explicit TimeMarginHepEstimator(HepParams params);
    HepEstimate estimate(const TimingEstimate& timing, std::size_t n_actions) const override;

  private:
    HepParams params_;
};

HepEstimate estimate_hep(const TimingEstimate& timing, const HepParams& params, std::size_t n_actions);

// --- NASA-TLX --------------------------------------------------------------

enum class TlxScale { mental, physical, temporal, performance, effort, frustration };
constexpr std::size_t kTlxScales = 6;
constexpr std::size_t kTlxPairs = 15;

std::string_view to_string(TlxScale scale) noexcept;
std::optional<TlxScale> tlx_scale_from_string(std::string_view text) noexcept;

struct TlxPairChoice {
    TlxScale first;
    TlxScale second;
    TlxScale winner;
};

struct TlxResponse {
    std::array<int, kTlxScales> ratings{};  // 0..100, steps of 5, in TlxScale order
    std::optional<std::vector<TlxPairChoice>> pairs;
};

struct TlxScore {
    double raw = 0;
    std::optional<double> weighted;
    std::optional<std::array<int, kTlxScales>> weights;
};

// Throws out_of_range or incomplete_pairs.
TlxScore tlx_score(const TlxResponse& response);

struct TlxScaleSpec {
    TlxScale scale;
    std::string title;
    std::string question;
    std::string low_anchor;
    std::string high_anchor;
};

struct TlxQuestionnaire {
    std::string title;
    std::string session_id;
    std::string scenario_id;
    int rating_min = 0;
    int rating_max = 100;
    int rating_step = 5;
    std::vector<TlxScaleSpec> scales;
    std::vector<std::pair<TlxScale, TlxScale>> pairs;  // all 15, presentation order
};

struct TlxTaskMeta {
    std::string session_id;
    std::string scenario_id;
    std::string task_title;
    unsigned seed = 0;  // pair presentation order
};

TlxQuestionnaire tlx_generate(const TlxTaskMeta& meta);

// --- configuration ------------------------------------------------------------

struct HraSettings {
    FittsParams fitts;
    double reading_s = kDefaultReadingSeconds;
    double base_hep = 1e-3;
    double error_factor = 3.0;
    std::optional<double> t_avail_s;
};

struct HraConfig {
    HraSettings defaults;
    std::map<std::string, HraSettings> per_scenario;

    const HraSettings& for_scenario(const std::string& scenario) const {
        auto it = per_scenario.find(scenario);
        return it == per_scenario.end() ? defaults : it->second;
    }
};

// {"fitts":{"a","b"},"reading_s","hep":{"base","ef"},"t_avail_s","scenarios":{"S1":{...}}}
// Throws malformed_format.
HraConfig parse_hra_config(std::string_view text);

}  // namespace procnav
