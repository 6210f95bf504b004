#ifndef RISKWINDOW_LABELING_HPP
#define RISKWINDOW_LABELING_HPP

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "riskwindow/common.hpp"
#include "riskwindow/windowing.hpp"

namespace riskwindow {

enum class IndicatorMode { Harsh, Headway, Unified };

inline const char* indicator_name(IndicatorMode m) {
    switch (m) {
        case IndicatorMode::Harsh: return "harsh";
        case IndicatorMode::Headway: return "headway";
        case IndicatorMode::Unified: return "unified";
    }
    return "?";
}

inline IndicatorMode indicator_from_name(const std::string& s) {
    if (s == "harsh") return IndicatorMode::Harsh;
    if (s == "headway") return IndicatorMode::Headway;
    if (s == "unified") return IndicatorMode::Unified;
    throw std::invalid_argument("unknown indicator mode: " + s);
}

struct HeadwayScoreParams {
    std::array<double, 3> alpha{0.2, 0.5, 1.0};  // alpha_1 < alpha_2 < alpha_3
    double p_low = 10.0, p_high = 90.0;          // percentiles for speed bounds
    double sigma_quantile = 0.85;
    // Fitted on training windows and frozen afterwards.
    double s_low = 0.0, s_high = 0.0;
    double sigma = 0.0;
    bool fitted = false;

    void check() const {
        if (!(0.0 < alpha[0] && alpha[0] < alpha[1] && alpha[1] < alpha[2]))
            throw std::invalid_argument("HeadwayScoreParams: need 0 < alpha_1 < alpha_2 < alpha_3");
        if (!(0.0 <= p_low && p_low < p_high && p_high <= 100.0))
            throw std::invalid_argument("HeadwayScoreParams: need 0 <= p_low < p_high <= 100");
        if (!(sigma_quantile >= 0.0 && sigma_quantile <= 1.0))
            throw std::invalid_argument("HeadwayScoreParams: sigma_quantile must be in [0,1]");
    }
};

struct RiskLabel {
    std::string driver_id;
    std::string trip_id;
    int t = 0;
    bool r_harsh = false;
    double risk_score_hdw = 0.0;
    bool r_hdw = false;
    bool r = false;
    double tau_used = 0.0;
};

// b_x: strict exceedance in the observation window, or in the prediction
// window when one exists.
inline bool exceeds_threshold(double ev_obs, std::optional<double> ev_pred, double tau_e) {
    return ev_obs > tau_e || (ev_pred && *ev_pred > tau_e);
}

namespace detail {

inline std::optional<double> pred_prop(const WindowView& v, EventKind x) {
    if (!v.ev_pred) return std::nullopt;
    return (*v.ev_pred)[static_cast<std::size_t>(x)];
}

}  // namespace detail

// R_harsh: disjunction over the three harsh event kinds.
inline bool harsh_label(const WindowView& v, double tau_e) {
    for (EventKind x : {EventKind::HarshAccel, EventKind::HarshBrake, EventKind::HarshCorner}) {
        if (exceeds_threshold(v.ev_obs[static_cast<std::size_t>(x)], detail::pred_prop(v, x), tau_e))
            return true;
    }
    return false;
}

// w_k(v): 0 below s_low, linear ramp to alpha_k at s_high, alpha_k above.
inline double speed_weight(double speed_kmh, int level, const HeadwayScoreParams& params) {
    if (level < 1 || level > 3) throw std::invalid_argument("speed_weight: level must be in 1..3");
    if (!params.fitted) throw std::logic_error("speed_weight: params not fitted");
    if (params.s_low >= params.s_high)
        throw std::runtime_error(
            "speed_weight: degenerate speed bounds (s_low >= s_high); widen the percentile spread");
    const double a = params.alpha[static_cast<std::size_t>(level - 1)];
    if (speed_kmh <= params.s_low) return 0.0;
    if (speed_kmh >= params.s_high) return a;
    return a * (speed_kmh - params.s_low) / (params.s_high - params.s_low);
}

// RiskScore_hdw: speed-weighted sum over headway levels 1..3. Level 1
// participates with the smallest weight; it is not zeroed.
inline double headway_score(const WindowView& v, const HeadwayScoreParams& params) {
    double score = 0.0;
    for (int k = 1; k <= 3; ++k)
        score += speed_weight(v.mean_speed_kmh, k, params) * v.hdw_props[static_cast<std::size_t>(k - 1)];
    return score;
}

// Fits s_low/s_high as percentiles of window mean speeds and sigma as the
// configured quantile of headway scores under the fitted bounds.
inline HeadwayScoreParams fit_headway_params(std::span<const WindowView> training_views,
                                             HeadwayScoreParams params = {}) {
    params.check();
    if (training_views.size() < 2)
        throw std::invalid_argument("fit_headway_params: need at least 2 training windows");
    std::vector<double> speeds;
    speeds.reserve(training_views.size());
    for (const auto& v : training_views) speeds.push_back(v.mean_speed_kmh);
    params.s_low = percentile(speeds, params.p_low);
    params.s_high = percentile(speeds, params.p_high);
    if (params.s_low >= params.s_high)
        throw std::runtime_error(
            "fit_headway_params: degenerate percentiles (s_low >= s_high); widen p_low/p_high");
    params.fitted = true;

    std::vector<double> scores;
    scores.reserve(training_views.size());
    for (const auto& v : training_views) scores.push_back(headway_score(v, params));
    params.sigma = percentile(scores, params.sigma_quantile * 100.0);
    return params;
}

// R(t) under the selected indicator mode. The unified mode is the
// disjunction of the harsh and headway components.
inline RiskLabel unified_label(const WindowView& v, double tau_e, const HeadwayScoreParams& params,
                               IndicatorMode mode = IndicatorMode::Unified) {
    RiskLabel lab;
    lab.driver_id = v.driver_id;
    lab.trip_id = v.trip_id;
    lab.t = v.t;
    lab.tau_used = tau_e;
    lab.r_harsh = harsh_label(v, tau_e);
    lab.risk_score_hdw = headway_score(v, params);
    lab.r_hdw = lab.risk_score_hdw > params.sigma;
    switch (mode) {
        case IndicatorMode::Harsh: lab.r = lab.r_harsh; break;
        case IndicatorMode::Headway: lab.r = lab.r_hdw; break;
        case IndicatorMode::Unified: lab.r = lab.r_harsh || lab.r_hdw; break;
    }
    return lab;
}

// Observation-only label: the prediction-window clause of b_x is dropped.
// Used as the rolling evaluation target for regret.
inline bool label_obs_only(const WindowView& v, double tau_e, const HeadwayScoreParams& params,
                           IndicatorMode mode) {
    auto obs_exceeds = [&](EventKind x) {
        return v.ev_obs[static_cast<std::size_t>(x)] > tau_e;
    };
    const bool harsh = obs_exceeds(EventKind::HarshAccel) || obs_exceeds(EventKind::HarshBrake) ||
                       obs_exceeds(EventKind::HarshCorner);
    const bool hdw = headway_score(v, params) > params.sigma;
    switch (mode) {
        case IndicatorMode::Harsh: return harsh;
        case IndicatorMode::Headway: return hdw;
        case IndicatorMode::Unified: return harsh || hdw;
    }
    return false;
}

// Prediction-window label: exceedance of the mode's event kinds within P_t
// only. Windows without a prediction window have no such label.
inline std::optional<bool> label_pred_only(const WindowView& v, double tau_e, IndicatorMode mode) {
    if (!v.ev_pred) return std::nullopt;
    auto pred_exceeds = [&](EventKind x) {
        return (*v.ev_pred)[static_cast<std::size_t>(x)] > tau_e;
    };
    const bool harsh = pred_exceeds(EventKind::HarshAccel) || pred_exceeds(EventKind::HarshBrake) ||
                       pred_exceeds(EventKind::HarshCorner);
    const bool hdw = pred_exceeds(EventKind::Headway2) || pred_exceeds(EventKind::Headway3);
    switch (mode) {
        case IndicatorMode::Harsh: return harsh;
        case IndicatorMode::Headway: return hdw;
        case IndicatorMode::Unified: return harsh || hdw;
    }
    return std::nullopt;
}

}  // namespace riskwindow

#endif
