#ifndef RISKWINDOW_FEATURES_HPP
#define RISKWINDOW_FEATURES_HPP

#include <string>
#include <vector>

#include "riskwindow/dataset.hpp"
#include "riskwindow/labeling.hpp"
#include "riskwindow/windowing.hpp"

namespace riskwindow {

// Model feature vector extracted from each observation window. Only W_t
// aggregates — never prediction-window proportions — so the classifier sees
// no future information.
inline const std::vector<std::string>& feature_names() {
    static const std::vector<std::string> names{
        "harsh_accel_prop", "harsh_brake_prop", "harsh_corner_prop",
        "hdw1_prop",        "hdw2_prop",        "hdw3_prop",
        "mean_speed_kmh",   "mean_speeding",    "mean_overtaking",
        "wiper_share",      "mean_ibi_ms",      "ibi_coverage",
        "mean_tsr",
    };
    return names;
}

inline std::vector<double> feature_row(const WindowView& v) {
    return {
        v.ev_obs[0], v.ev_obs[1],     v.ev_obs[2],
        v.hdw_props[0], v.hdw_props[1], v.hdw_props[2],
        v.mean_speed_kmh, v.mean_speeding, v.mean_overtaking,
        v.wiper_share, v.mean_ibi_ms, v.ibi_coverage,
        v.mean_tsr,
    };
}

inline Dataset make_dataset(const std::vector<WindowView>& views, const std::vector<int>& labels) {
    if (!labels.empty() && labels.size() != views.size())
        throw std::invalid_argument("make_dataset: label/view count mismatch");
    Dataset d;
    d.feature_names = feature_names();
    d.n_cols = d.feature_names.size();
    for (std::size_t i = 0; i < views.size(); ++i) {
        d.push_row(feature_row(views[i]), labels.empty() ? 0 : labels[i]);
    }
    return d;
}

// Planted ground truth per window: risky when at least half of the
// observation steps were emitted under the aggressive regime.
inline std::vector<int> window_truth_labels(const Trip& trip, const std::vector<bool>& truth,
                                            const WindowParams& p) {
    p.check();
    std::vector<int> out;
    const long n = static_cast<long>(trip.records.size());
    if (n < p.omega) return out;
    for (long end = p.omega - 1; end < n; end += p.delta) {
        long risky = 0;
        for (long i = end - p.omega + 1; i <= end; ++i)
            risky += truth[static_cast<std::size_t>(i)] ? 1 : 0;
        out.push_back(2 * risky >= p.omega ? 1 : 0);
    }
    return out;
}

// Binary labels for a slice of windows at a given threshold and mode.
inline std::vector<int> label_views(const std::vector<WindowView>& views, double tau_e,
                                    const HeadwayScoreParams& params, IndicatorMode mode) {
    std::vector<int> y;
    y.reserve(views.size());
    for (const auto& v : views) y.push_back(unified_label(v, tau_e, params, mode).r ? 1 : 0);
    return y;
}

}  // namespace riskwindow

#endif
