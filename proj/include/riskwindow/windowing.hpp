#ifndef RISKWINDOW_WINDOWING_HPP
#define RISKWINDOW_WINDOWING_HPP

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "riskwindow/telemetry.hpp"

namespace riskwindow {

// Event set X = {harsh accel, harsh brake, harsh corner, headway level 2,
// headway level 3}.
enum class EventKind : int {
    HarshAccel = 0,
    HarshBrake = 1,
    HarshCorner = 2,
    Headway2 = 3,
    Headway3 = 4,
};
inline constexpr int kNumEventKinds = 5;
inline constexpr std::array<const char*, kNumEventKinds> kEventNames{
    "harsh_accel", "harsh_brake", "harsh_corner", "headway2", "headway3"};

inline bool event_flag(const TelemetryRecord& r, EventKind x) {
    switch (x) {
        case EventKind::HarshAccel: return r.harsh_accel;
        case EventKind::HarshBrake: return r.harsh_brake;
        case EventKind::HarshCorner: return r.harsh_corner;
        case EventKind::Headway2: return r.headway_level == 2;
        case EventKind::Headway3: return r.headway_level == 3;
    }
    return false;
}

struct WindowParams {
    int omega = 5;    // observation window length in 1 Hz steps
    int delta = 1;    // slide step
    int horizon = 2;  // prediction window length P (0 = no prediction window)

    void check() const {
        if (omega < 1) throw std::invalid_argument("WindowParams: omega must be >= 1");
        if (delta < 1) throw std::invalid_argument("WindowParams: delta must be >= 1");
        if (horizon < 0) throw std::invalid_argument("WindowParams: horizon must be >= 0");
    }
};

struct WindowView {
    std::string driver_id;
    std::string trip_id;
    int t = 0;  // t of the window's last observation step
    std::array<double, kNumEventKinds> ev_obs{};
    // Prediction-window proportions; absent when the trip ends at t. When
    // fewer than `horizon` steps remain, computed over the remaining
    // `pred_len` steps (truncation rule).
    std::optional<std::array<double, kNumEventKinds>> ev_pred;
    int pred_len = 0;
    double mean_speed_kmh = 0.0;
    std::array<double, 3> hdw_props{};  // headway levels 1..3 over W_t

    // Additional per-window aggregates carried as model features.
    double mean_speeding = 0.0;
    double mean_overtaking = 0.0;
    double wiper_share = 0.0;
    double mean_ibi_ms = 0.0;  // over present samples; 0 when none present
    double ibi_coverage = 0.0;
    double mean_tsr = 0.0;
};

inline long window_count(long n, const WindowParams& p) {
    p.check();
    if (n < p.omega) return 0;
    return (n - p.omega) / p.delta + 1;
}

// Streaming pass over one trip: counts slide with the window, prediction
// proportions are recomputed over the (short) horizon. Windows never span
// trip boundaries.
inline std::vector<WindowView> windows(const Trip& trip, const WindowParams& p,
                                       Diagnostics* diags = nullptr) {
    p.check();
    const auto& recs = trip.records;
    const long n = static_cast<long>(recs.size());
    std::vector<WindowView> out;
    if (n < p.omega) {
        if (diags)
            diags->push_back({"trip_too_short", trip.driver_id, trip.trip_id, -1,
                              "trip shorter than observation window (" + std::to_string(n) + " < " +
                                  std::to_string(p.omega) + ")"});
        return out;
    }

    std::array<long, kNumEventKinds> counts{};
    std::array<long, 3> hdw_counts{};
    double speed_sum = 0.0, speeding_sum = 0.0, overtaking_sum = 0.0, wiper_sum = 0.0;
    double ibi_sum = 0.0, tsr_sum = 0.0;
    long ibi_n = 0;

    auto add = [&](const TelemetryRecord& r, int sign) {
        for (int x = 0; x < kNumEventKinds; ++x)
            counts[static_cast<std::size_t>(x)] += sign * (event_flag(r, static_cast<EventKind>(x)) ? 1 : 0);
        if (r.headway_level >= 1) hdw_counts[static_cast<std::size_t>(r.headway_level - 1)] += sign;
        speed_sum += sign * r.speed_kmh;
        speeding_sum += sign * r.speeding_level;
        overtaking_sum += sign * r.overtaking;
        wiper_sum += sign * (r.wiper ? 1.0 : 0.0);
        if (r.ibi_ms) {
            ibi_sum += sign * *r.ibi_ms;
            ibi_n += sign;
        }
        tsr_sum += sign * r.tsr_level;
    };

    for (long i = 0; i < p.omega; ++i) add(recs[static_cast<std::size_t>(i)], +1);

    for (long end = p.omega - 1; end < n; end += p.delta) {
        WindowView v;
        v.driver_id = trip.driver_id;
        v.trip_id = trip.trip_id;
        v.t = recs[static_cast<std::size_t>(end)].t;
        const double w = static_cast<double>(p.omega);
        for (int x = 0; x < kNumEventKinds; ++x)
            v.ev_obs[static_cast<std::size_t>(x)] = static_cast<double>(counts[static_cast<std::size_t>(x)]) / w;
        for (int k = 0; k < 3; ++k)
            v.hdw_props[static_cast<std::size_t>(k)] = static_cast<double>(hdw_counts[static_cast<std::size_t>(k)]) / w;
        v.mean_speed_kmh = speed_sum / w;
        v.mean_speeding = speeding_sum / w;
        v.mean_overtaking = overtaking_sum / w;
        v.wiper_share = wiper_sum / w;
        v.mean_ibi_ms = ibi_n > 0 ? ibi_sum / static_cast<double>(ibi_n) : 0.0;
        v.ibi_coverage = static_cast<double>(ibi_n) / w;
        v.mean_tsr = tsr_sum / w;

        const long pred_end = std::min(end + static_cast<long>(p.horizon), n - 1);
        const long m = pred_end - end;
        if (m > 0) {
            std::array<double, kNumEventKinds> pred{};
            for (long i = end + 1; i <= pred_end; ++i)
                for (int x = 0; x < kNumEventKinds; ++x)
                    pred[static_cast<std::size_t>(x)] +=
                        event_flag(recs[static_cast<std::size_t>(i)], static_cast<EventKind>(x)) ? 1.0 : 0.0;
            for (auto& c : pred) c /= static_cast<double>(m);
            v.ev_pred = pred;
            v.pred_len = static_cast<int>(m);
        }
        out.push_back(std::move(v));

        // Slide the counters by delta for the next window.
        if (end + p.delta < n) {
            for (long i = 0; i < p.delta; ++i) {
                add(recs[static_cast<std::size_t>(end - p.omega + 1 + i)], -1);
                add(recs[static_cast<std::size_t>(end + 1 + i)], +1);
            }
        }
    }
    return out;
}

}  // namespace riskwindow

#endif
