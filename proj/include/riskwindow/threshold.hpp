#ifndef RISKWINDOW_THRESHOLD_HPP
#define RISKWINDOW_THRESHOLD_HPP

#include <cmath>
#include <deque>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "riskwindow/common.hpp"
#include "riskwindow/metrics.hpp"
#include "riskwindow/telemetry.hpp"

namespace riskwindow {

struct BernsteinParams {
    double delta_b = 0.05;  // confidence level, in (0,1)
    double c = 1.0;         // range constant (1 for proportions)

    void check() const {
        if (!(delta_b > 0.0 && delta_b < 1.0))
            throw std::invalid_argument("BernsteinParams: delta_b must be in (0,1)");
        if (!(c > 0.0)) throw std::invalid_argument("BernsteinParams: c must be > 0");
    }
};

// Maurer-Pontil closed-form empirical Bernstein bound:
//   B = sqrt(2 var ln(2/delta) / n) + 7 c ln(2/delta) / (3 (n-1))
inline double bernstein_bound(double var, long n, const BernsteinParams& p = {}) {
    p.check();
    if (n < 2) throw std::invalid_argument("bernstein_bound: need n >= 2");
    if (var < 0.0) throw std::invalid_argument("bernstein_bound: var must be >= 0");
    const double log_term = std::log(2.0 / p.delta_b);
    return std::sqrt(2.0 * var * log_term / static_cast<double>(n)) +
           7.0 * p.c * log_term / (3.0 * static_cast<double>(n - 1));
}

struct RegretEntry {
    double rolling = 0.0;  // R_i
    double pred = 0.0;     // R_{P_i}
};

struct ThresholdState {
    std::string driver_id;
    double tau_e = 0.5;
    double tau_min = 0.05, tau_max = 0.95;
    double alpha_sens = 1.0;    // weight of sigma(W_t)
    double gamma_pred = 0.5;    // weight of sigma(P_t)
    double kappa_regret = 0.05; // rolling-regret step scale
    double xi_regret = 0.02;    // prediction-regret step scale
    int regret_window = 10;     // W for RoR / RV
    std::deque<RegretEntry> regret_history;  // bounded to regret_window
    double hm_best = 0.0;       // HM* on the rolling slice
    double hm_best_pred = 0.0;  // HM* on the prediction slice

    void check() const {
        if (!(tau_min <= tau_e && tau_e <= tau_max))
            throw std::invalid_argument("ThresholdState: tau_e outside [tau_min, tau_max]");
        if (regret_window < 1) throw std::invalid_argument("ThresholdState: regret_window must be >= 1");
    }
};

// Statistical threshold (re-anchor value): mu + alpha*sigma_W + gamma*sigma_P + B,
// clamped to the state's bounds. The gamma term is omitted when sigma_P is
// unavailable (trip end).
inline double statistical_threshold(double mu, double sigma_w, std::optional<double> sigma_p,
                                    const ThresholdState& s, double bernstein) {
    double tau = mu + s.alpha_sens * sigma_w + bernstein;
    if (sigma_p) tau += s.gamma_pred * *sigma_p;
    return std::clamp(tau, s.tau_min, s.tau_max);
}

struct RegretStats {
    double ror = 0.0;  // rolling average regret
    double rv = 0.0;   // regret variation (population std dev of the sums)
};

// RoR / RV over the last `window` history entries; shorter histories average
// over what exists.
inline RegretStats rolling_regret(const std::deque<RegretEntry>& history, int window) {
    if (history.empty()) throw std::invalid_argument("rolling_regret: empty history");
    if (window < 1) throw std::invalid_argument("rolling_regret: window must be >= 1");
    const std::size_t n = std::min<std::size_t>(history.size(), static_cast<std::size_t>(window));
    std::vector<double> sums;
    sums.reserve(n);
    for (std::size_t i = history.size() - n; i < history.size(); ++i)
        sums.push_back(history[i].rolling + history[i].pred);
    RegretStats out;
    out.ror = mean(sums);
    out.rv = stdev(sums);
    return out;
}

// Regret-driven update: positive regret lowers tau_e, non-positive regret
// raises it toward exploration, both clamped.
inline double update_tau(ThresholdState& s, double r_t, double r_pt) {
    if (!std::isfinite(r_t) || !std::isfinite(r_pt))
        throw std::invalid_argument("update_tau: regret must be finite");
    double tau;
    if (r_t > 0.0) {
        // A strongly negative prediction regret can outweigh the decrease,
        // so clamp at both ends.
        tau = s.tau_e - s.kappa_regret * r_t - s.xi_regret * r_pt;
    } else {
        tau = s.tau_e + s.kappa_regret * (1.0 - s.hm_best) + s.xi_regret * (1.0 - s.hm_best_pred);
    }
    tau = std::clamp(tau, s.tau_min, s.tau_max);
    s.tau_e = tau;
    s.regret_history.push_back({r_t, r_pt});
    while (static_cast<int>(s.regret_history.size()) > s.regret_window) s.regret_history.pop_front();
    return tau;
}

struct RegretPair {
    double r_t = 0.0;
    double r_pt = 0.0;
    double hm_rolling = 0.0;
    double hm_pred = 0.0;
};

// Regret = shortfall of the current HM from the best HM achieved so far,
// separately for the rolling and prediction evaluation slices. Best values
// are updated to the running maxima after the shortfall is taken.
inline RegretPair compute_regret(std::span<const int> pred_rolling, std::span<const int> true_rolling,
                                 std::span<const int> pred_pred, std::span<const int> true_pred,
                                 ThresholdState& s, Diagnostics* diags = nullptr) {
    RegretPair out;
    auto hm_of = [](std::span<const int> preds, std::span<const int> labels) {
        auto m = basic_metrics(ConfusionCounts::from_pairs(labels, preds));
        return m.hm;
    };
    if (pred_rolling.empty() || pred_pred.empty()) {
        if (diags)
            diags->push_back({"empty_regret_slice", s.driver_id, "", -1,
                              "empty evaluation slice; regrets set to 0"});
        out.hm_rolling = s.hm_best;
        out.hm_pred = s.hm_best_pred;
        return out;
    }
    out.hm_rolling = hm_of(pred_rolling, true_rolling);
    out.hm_pred = hm_of(pred_pred, true_pred);
    out.r_t = s.hm_best - out.hm_rolling;
    out.r_pt = s.hm_best_pred - out.hm_pred;
    s.hm_best = std::max(s.hm_best, out.hm_rolling);
    s.hm_best_pred = std::max(s.hm_best_pred, out.hm_pred);
    return out;
}

// One row of the threshold trajectory log.
struct TrajectoryRow {
    std::string driver_id;
    long step = 0;
    double tau_e = 0.0, r_t = 0.0, r_pt = 0.0, ror = 0.0, rv = 0.0, bernstein = 0.0;

    static std::string csv_header() { return "driver,step,tau_e,r_t,r_pt,ror,rv,bernstein"; }
    std::string csv_row() const {
        std::ostringstream os;
        os << driver_id << ',' << step << ',' << tau_e << ',' << r_t << ',' << r_pt << ',' << ror
           << ',' << rv << ',' << bernstein;
        return os.str();
    }
};

}  // namespace riskwindow

#endif
