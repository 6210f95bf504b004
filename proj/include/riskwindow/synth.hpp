#ifndef RISKWINDOW_SYNTH_HPP
#define RISKWINDOW_SYNTH_HPP

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "riskwindow/common.hpp"
#include "riskwindow/telemetry.hpp"

namespace riskwindow {

// Two-regime (calm / aggressive) Markov generator. Ground truth marks the
// seconds emitted under the aggressive regime.
struct RegimeParams {
    double rate_harsh_accel = 0.01;
    double rate_harsh_brake = 0.01;
    double rate_harsh_corner = 0.005;
    double speed_mean_kmh = 60.0;
    double speed_std_kmh = 10.0;
    // Headway level emission, conditioned on speed being below/above
    // SynthConfig::speed_split_kmh. Index = level 0..3.
    std::array<double, 4> headway_probs_low{0.5, 0.4, 0.09, 0.01};
    std::array<double, 4> headway_probs_high{0.4, 0.45, 0.12, 0.03};
    std::array<double, 4> speeding_probs{0.9, 0.07, 0.02, 0.01};
    double rate_overtaking = 0.002;
};

struct SynthConfig {
    int n_drivers = 10;
    int trips_per_driver = 2;
    int trip_length_s = 600;
    double p_calm_to_aggressive = 0.02;
    double p_aggressive_to_calm = 0.10;
    double p_start_aggressive = 0.0;
    RegimeParams calm;
    RegimeParams aggressive{0.15, 0.18, 0.08, 95.0, 15.0,
                            {0.25, 0.25, 0.30, 0.20},
                            {0.15, 0.20, 0.35, 0.30},
                            {0.5, 0.2, 0.15, 0.15},
                            0.02};
    double speed_split_kmh = 80.0;
    double p_wiper_trip = 0.15;
    double p_ibi_present = 0.8;
    double ibi_mean_ms = 850.0;
    double ibi_std_ms = 80.0;
    int tsr_levels = 4;
    std::uint64_t seed = 1;

    Diagnostics check() const {
        Diagnostics out;
        auto bad = [&](const std::string& what) {
            out.push_back({"invalid_synth_config", "", "", -1, what});
        };
        auto prob = [&](double p, const std::string& name) {
            if (!(p >= 0.0 && p <= 1.0)) bad(name + " must be in [0,1]");
        };
        prob(p_calm_to_aggressive, "p_calm_to_aggressive");
        prob(p_aggressive_to_calm, "p_aggressive_to_calm");
        prob(p_start_aggressive, "p_start_aggressive");
        prob(p_wiper_trip, "p_wiper_trip");
        prob(p_ibi_present, "p_ibi_present");
        for (const RegimeParams* rp : {&calm, &aggressive}) {
            prob(rp->rate_harsh_accel, "rate_harsh_accel");
            prob(rp->rate_harsh_brake, "rate_harsh_brake");
            prob(rp->rate_harsh_corner, "rate_harsh_corner");
            prob(rp->rate_overtaking, "rate_overtaking");
            for (const auto* arr : {&rp->headway_probs_low, &rp->headway_probs_high, &rp->speeding_probs}) {
                double sum = 0.0;
                for (double p : *arr) {
                    prob(p, "emission probability");
                    sum += p;
                }
                if (std::abs(sum - 1.0) > 1e-9) bad("emission probabilities must sum to 1");
            }
        }
        if (n_drivers < 1 || trips_per_driver < 1 || trip_length_s < 1)
            bad("n_drivers, trips_per_driver and trip_length_s must be >= 1");
        return out;
    }

    // Long-run fraction of seconds in the aggressive regime.
    double stationary_aggressive() const {
        const double denom = p_calm_to_aggressive + p_aggressive_to_calm;
        if (denom == 0.0) return p_start_aggressive;
        return p_calm_to_aggressive / denom;
    }
};

struct SynthResult {
    std::vector<Trip> trips;
    std::vector<std::vector<bool>> ground_truth_risk;  // parallel to trips
    std::vector<DriverProfile> profiles;
};

namespace detail {

inline int sample_level(const std::array<double, 4>& probs, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double r = u(rng);
    double acc = 0.0;
    for (int k = 0; k < 4; ++k) {
        acc += probs[k];
        if (r < acc) return k;
    }
    return 3;
}

inline double headway_seconds_for_level(int level, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    switch (level) {
        case 1: return kHeadwaySafeSeconds + 2.5 * u(rng);
        case 2: return kHeadwayCrashSeconds + (kHeadwaySafeSeconds - kHeadwayCrashSeconds - 1e-6) * u(rng);
        default: return 0.05 + (kHeadwayCrashSeconds - 0.05 - 1e-6) * u(rng);
    }
}

}  // namespace detail

inline SynthResult generate_synthetic(const SynthConfig& cfg) {
    auto diags = cfg.check();
    if (!diags.empty()) throw std::invalid_argument("generate_synthetic: " + diags.front().message);

    SynthResult res;
    std::uniform_real_distribution<double> u(0.0, 1.0);

    for (int d = 0; d < cfg.n_drivers; ++d) {
        const std::string driver_id = "driver_" + std::to_string(d);
        Rng prof_rng(split_seed(cfg.seed, 1'000'000 + static_cast<std::uint64_t>(d)));
        DriverProfile prof;
        prof.driver_id = driver_id;
        prof.age = 20.0 + std::floor(u(prof_rng) * 50.0);
        prof.gender = u(prof_rng) < 0.7 ? "male" : "female";
        prof.education = u(prof_rng) < 0.5 ? "secondary" : "tertiary";
        prof.experience_years = std::max(0.0, prof.age - 18.0 - std::floor(u(prof_rng) * 10.0));
        prof.income = 20000.0 + std::floor(u(prof_rng) * 60000.0);
        const double a = u(prof_rng), b = u(prof_rng), c = u(prof_rng);
        const double s = a + b + c;
        prof.env_urban = a / s;
        prof.env_rural = b / s;
        prof.env_motorway = 1.0 - prof.env_urban - prof.env_rural;
        prof.survey_scales["speed_attitude"] = 1.0 + 4.0 * u(prof_rng);
        prof.survey_scales["safe_distance_attitude"] = 1.0 + 4.0 * u(prof_rng);
        prof.crash_involvement = u(prof_rng) < 0.1;
        prof.traffic_offence = u(prof_rng) < 0.2;
        res.profiles.push_back(prof);

        for (int tr = 0; tr < cfg.trips_per_driver; ++tr) {
            // Independent stream per (driver, trip): trips may be generated
            // in parallel without sharing RNG state.
            Rng rng(split_seed(cfg.seed, static_cast<std::uint64_t>(d) * 100'003 +
                                             static_cast<std::uint64_t>(tr)));
            Trip trip;
            trip.driver_id = driver_id;
            trip.trip_id = "trip_" + std::to_string(tr);
            std::vector<bool> risk;
            risk.reserve(static_cast<std::size_t>(cfg.trip_length_s));

            bool aggressive = u(rng) < cfg.p_start_aggressive;
            const bool wiper = u(rng) < cfg.p_wiper_trip;
            for (int t = 0; t < cfg.trip_length_s; ++t) {
                if (t > 0) {
                    const double p = aggressive ? cfg.p_aggressive_to_calm : cfg.p_calm_to_aggressive;
                    if (u(rng) < p) aggressive = !aggressive;
                }
                const RegimeParams& rp = aggressive ? cfg.aggressive : cfg.calm;
                TelemetryRecord r;
                r.driver_id = trip.driver_id;
                r.trip_id = trip.trip_id;
                r.t = t;
                std::normal_distribution<double> speed(rp.speed_mean_kmh, rp.speed_std_kmh);
                r.speed_kmh = std::max(0.0, speed(rng));
                r.harsh_accel = u(rng) < rp.rate_harsh_accel;
                r.harsh_brake = u(rng) < rp.rate_harsh_brake;
                r.harsh_corner = u(rng) < rp.rate_harsh_corner;
                const auto& hprobs =
                    r.speed_kmh > cfg.speed_split_kmh ? rp.headway_probs_high : rp.headway_probs_low;
                r.headway_level = detail::sample_level(hprobs, rng);
                if (r.headway_level > 0)
                    r.headway_s = detail::headway_seconds_for_level(r.headway_level, rng);
                r.speeding_level = detail::sample_level(rp.speeding_probs, rng);
                r.overtaking = u(rng) < rp.rate_overtaking ? 1 : 0;
                r.wiper = wiper;
                if (u(rng) < cfg.p_ibi_present) {
                    std::normal_distribution<double> ibi(cfg.ibi_mean_ms, cfg.ibi_std_ms);
                    r.ibi_ms = std::max(200.0, ibi(rng));
                }
                r.tsr_level = static_cast<int>(u(rng) * cfg.tsr_levels) % cfg.tsr_levels;
                trip.records.push_back(std::move(r));
                risk.push_back(aggressive);
            }
            res.trips.push_back(std::move(trip));
            res.ground_truth_risk.push_back(std::move(risk));
        }
    }
    return res;
}

}  // namespace riskwindow

#endif
