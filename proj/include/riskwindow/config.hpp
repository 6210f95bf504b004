#ifndef RISKWINDOW_CONFIG_HPP
#define RISKWINDOW_CONFIG_HPP

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "riskwindow/common.hpp"
#include "riskwindow/labeling.hpp"
#include "riskwindow/pipeline.hpp"
#include "riskwindow/synth.hpp"
#include "riskwindow/threshold.hpp"
#include "riskwindow/windowing.hpp"

namespace riskwindow {

// Every tunable of the pipeline in one flat struct. Loaded from key=value
// files (with `include other.cfg` support); unknown keys are rejected.
struct RunConfig {
    // windows
    int omega = 5;
    int delta = 1;
    int horizon = 2;
    // labeling
    std::string indicator = "unified";  // harsh | headway | unified
    double hdw_alpha_1 = 0.2, hdw_alpha_2 = 0.5, hdw_alpha_3 = 1.0;
    double hdw_p_low = 10.0, hdw_p_high = 90.0;
    double hdw_sigma_quantile = 0.85;
    // adaptive threshold
    double tau_init = 0.5;
    double tau_min = 0.05, tau_max = 0.95;
    double alpha_sens = 1.0;
    double gamma_pred = 0.5;
    double kappa_regret = 0.05;
    double xi_regret = 0.02;
    int regret_window = 10;
    double bernstein_delta = 0.05;
    double bernstein_c = 1.0;
    // split
    double train_frac = 0.70, val_frac = 0.15, test_frac = 0.15;
    // smote
    bool smote_enabled = true;
    int smote_k = 5;
    // feature selection
    int shapley_permutations = 30;
    int shapley_background = 100;
    int shapley_explain = 200;
    int selection_subset = 10000;  // windows sampled for selection
    double min_importance = 0.001;
    double drift_tau_delta = 0.01;
    double drift_wasserstein_delta = 0.05;
    bool feature_selection_enabled = true;
    // optimizer
    int trial_budget = 25;
    int inner_steps = 10;
    double rv_tol = 1e-3;
    int tpe_startup = 10;
    double tpe_gamma = 0.25;
    int tpe_candidates = 24;
    std::string models = "forest,gbt,network";  // comma-separated kinds
    std::string space_scale = "full";           // full | small (desk-scale spaces)
    // ensemble grid
    double grid_lo = 0.05, grid_hi = 0.95, grid_step = 0.01;
    // synthesis
    int synth_drivers = 10;
    int synth_trips_per_driver = 2;
    int synth_trip_length_s = 600;
    double synth_p_calm_to_aggressive = 0.02;
    double synth_p_aggressive_to_calm = 0.10;
    double synth_p_start_aggressive = 0.0;
    // io
    std::string data_csv;
    std::string column_map;
    std::string out_dir = "out";
    std::uint64_t seed = 1;

    // --- registry ----------------------------------------------------------

    struct Entry {
        std::string key;
        std::function<std::string(const RunConfig&)> get;
        std::function<void(RunConfig&, const std::string&)> set;
    };

    static const std::vector<Entry>& entries() {
        static const std::vector<Entry> table = [] {
            std::vector<Entry> e;
            auto add_int = [&](const std::string& k, int RunConfig::* f) {
                e.push_back({k, [f](const RunConfig& c) { return std::to_string(c.*f); },
                             [f, k](RunConfig& c, const std::string& v) { c.*f = parse_int(k, v); }});
            };
            auto add_dbl = [&](const std::string& k, double RunConfig::* f) {
                e.push_back({k,
                             [f](const RunConfig& c) {
                                 std::ostringstream os;
                                 os << (c.*f);
                                 return os.str();
                             },
                             [f, k](RunConfig& c, const std::string& v) { c.*f = parse_double(k, v); }});
            };
            auto add_str = [&](const std::string& k, std::string RunConfig::* f) {
                e.push_back({k, [f](const RunConfig& c) { return c.*f; },
                             [f](RunConfig& c, const std::string& v) { c.*f = v; }});
            };
            auto add_bool = [&](const std::string& k, bool RunConfig::* f) {
                e.push_back({k, [f](const RunConfig& c) { return c.*f ? "true" : "false"; },
                             [f, k](RunConfig& c, const std::string& v) {
                                 if (v == "true" || v == "1")
                                     c.*f = true;
                                 else if (v == "false" || v == "0")
                                     c.*f = false;
                                 else
                                     throw std::invalid_argument("config key " + k +
                                                                 ": expected true/false, got " + v);
                             }});
            };
            auto add_u64 = [&](const std::string& k, std::uint64_t RunConfig::* f) {
                e.push_back({k, [f](const RunConfig& c) { return std::to_string(c.*f); },
                             [f, k](RunConfig& c, const std::string& v) {
                                 try {
                                     c.*f = std::stoull(v);
                                 } catch (...) {
                                     throw std::invalid_argument("config key " + k +
                                                                 ": expected unsigned integer, got " + v);
                                 }
                             }});
            };

            add_int("omega", &RunConfig::omega);
            add_int("delta", &RunConfig::delta);
            add_int("horizon", &RunConfig::horizon);
            add_str("indicator", &RunConfig::indicator);
            add_dbl("hdw_alpha_1", &RunConfig::hdw_alpha_1);
            add_dbl("hdw_alpha_2", &RunConfig::hdw_alpha_2);
            add_dbl("hdw_alpha_3", &RunConfig::hdw_alpha_3);
            add_dbl("hdw_p_low", &RunConfig::hdw_p_low);
            add_dbl("hdw_p_high", &RunConfig::hdw_p_high);
            add_dbl("hdw_sigma_quantile", &RunConfig::hdw_sigma_quantile);
            add_dbl("tau_init", &RunConfig::tau_init);
            add_dbl("tau_min", &RunConfig::tau_min);
            add_dbl("tau_max", &RunConfig::tau_max);
            add_dbl("alpha_sens", &RunConfig::alpha_sens);
            add_dbl("gamma_pred", &RunConfig::gamma_pred);
            add_dbl("kappa_regret", &RunConfig::kappa_regret);
            add_dbl("xi_regret", &RunConfig::xi_regret);
            add_int("regret_window", &RunConfig::regret_window);
            add_dbl("bernstein_delta", &RunConfig::bernstein_delta);
            add_dbl("bernstein_c", &RunConfig::bernstein_c);
            add_dbl("train_frac", &RunConfig::train_frac);
            add_dbl("val_frac", &RunConfig::val_frac);
            add_dbl("test_frac", &RunConfig::test_frac);
            add_bool("smote_enabled", &RunConfig::smote_enabled);
            add_int("smote_k", &RunConfig::smote_k);
            add_int("shapley_permutations", &RunConfig::shapley_permutations);
            add_int("shapley_background", &RunConfig::shapley_background);
            add_int("shapley_explain", &RunConfig::shapley_explain);
            add_int("selection_subset", &RunConfig::selection_subset);
            add_dbl("min_importance", &RunConfig::min_importance);
            add_dbl("drift_tau_delta", &RunConfig::drift_tau_delta);
            add_dbl("drift_wasserstein_delta", &RunConfig::drift_wasserstein_delta);
            add_bool("feature_selection_enabled", &RunConfig::feature_selection_enabled);
            add_int("trial_budget", &RunConfig::trial_budget);
            add_int("inner_steps", &RunConfig::inner_steps);
            add_dbl("rv_tol", &RunConfig::rv_tol);
            add_int("tpe_startup", &RunConfig::tpe_startup);
            add_dbl("tpe_gamma", &RunConfig::tpe_gamma);
            add_int("tpe_candidates", &RunConfig::tpe_candidates);
            add_str("models", &RunConfig::models);
            add_str("space_scale", &RunConfig::space_scale);
            add_dbl("grid_lo", &RunConfig::grid_lo);
            add_dbl("grid_hi", &RunConfig::grid_hi);
            add_dbl("grid_step", &RunConfig::grid_step);
            add_int("synth_drivers", &RunConfig::synth_drivers);
            add_int("synth_trips_per_driver", &RunConfig::synth_trips_per_driver);
            add_int("synth_trip_length_s", &RunConfig::synth_trip_length_s);
            add_dbl("synth_p_calm_to_aggressive", &RunConfig::synth_p_calm_to_aggressive);
            add_dbl("synth_p_aggressive_to_calm", &RunConfig::synth_p_aggressive_to_calm);
            add_dbl("synth_p_start_aggressive", &RunConfig::synth_p_start_aggressive);
            add_str("data_csv", &RunConfig::data_csv);
            add_str("column_map", &RunConfig::column_map);
            add_str("out_dir", &RunConfig::out_dir);
            add_u64("seed", &RunConfig::seed);
            return e;
        }();
        return table;
    }

    static int parse_int(const std::string& key, const std::string& v) {
        try {
            std::size_t used = 0;
            const int x = std::stoi(v, &used);
            if (used != v.size()) throw std::invalid_argument("");
            return x;
        } catch (...) {
            throw std::invalid_argument("config key " + key + ": expected integer, got " + v);
        }
    }
    static double parse_double(const std::string& key, const std::string& v) {
        try {
            std::size_t used = 0;
            const double x = std::stod(v, &used);
            if (used != v.size()) throw std::invalid_argument("");
            return x;
        } catch (...) {
            throw std::invalid_argument("config key " + key + ": expected number, got " + v);
        }
    }

    void set(const std::string& key, const std::string& value) {
        for (const auto& e : entries()) {
            if (e.key == key) {
                e.set(*this, value);
                return;
            }
        }
        throw std::invalid_argument("unknown config key: " + key);
    }

    void validate() const {
        auto fail = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
        if (omega < 1) fail("omega must be >= 1");
        if (delta < 1) fail("delta must be >= 1");
        if (horizon < 0) fail("horizon must be >= 0");
        indicator_from_name(indicator);  // throws on unknown mode
        if (!(0.0 < hdw_alpha_1 && hdw_alpha_1 < hdw_alpha_2 && hdw_alpha_2 < hdw_alpha_3))
            fail("headway alphas must satisfy 0 < hdw_alpha_1 < hdw_alpha_2 < hdw_alpha_3");
        if (!(0.0 <= hdw_p_low && hdw_p_low < hdw_p_high && hdw_p_high <= 100.0))
            fail("need 0 <= hdw_p_low < hdw_p_high <= 100");
        if (!(tau_min <= tau_init && tau_init <= tau_max))
            fail("tau_init outside [tau_min, tau_max]");
        if (!(bernstein_delta > 0.0 && bernstein_delta < 1.0)) fail("bernstein_delta must be in (0,1)");
        if (!(train_frac > 0.0 && val_frac > 0.0 && test_frac > 0.0) ||
            std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9) {
            std::ostringstream os;
            os << "train_frac/val_frac/test_frac must be positive and sum to 1 (got " << train_frac
               << "/" << val_frac << "/" << test_frac << ")";
            fail(os.str());
        }
        if (smote_k < 1) fail("smote_k must be >= 1");
        if (trial_budget < 1) fail("trial_budget must be >= 1");
        if (inner_steps < 1) fail("inner_steps must be >= 1");
        if (!(tpe_gamma > 0.0 && tpe_gamma < 1.0)) fail("tpe_gamma must be in (0,1)");
        if (space_scale != "full" && space_scale != "small") fail("space_scale must be full or small");
        if (!(grid_lo <= grid_hi) || !(grid_step > 0.0)) fail("bad ensemble grid");
        for (const auto& m : model_kinds())
            if (m != "forest" && m != "gbt" && m != "network") fail("unknown model kind: " + m);
    }

    std::vector<std::string> model_kinds() const {
        std::vector<std::string> out;
        std::istringstream ss(models);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (!tok.empty()) out.push_back(tok);
        }
        return out;
    }

    // --- derived module configs ---------------------------------------------

    WindowParams window_params() const { return {omega, delta, horizon}; }

    HeadwayScoreParams headway_params() const {
        HeadwayScoreParams p;
        p.alpha = {hdw_alpha_1, hdw_alpha_2, hdw_alpha_3};
        p.p_low = hdw_p_low;
        p.p_high = hdw_p_high;
        p.sigma_quantile = hdw_sigma_quantile;
        return p;
    }

    ThresholdState threshold_state() const {
        ThresholdState s;
        s.tau_e = tau_init;
        s.tau_min = tau_min;
        s.tau_max = tau_max;
        s.alpha_sens = alpha_sens;
        s.gamma_pred = gamma_pred;
        s.kappa_regret = kappa_regret;
        s.xi_regret = xi_regret;
        s.regret_window = regret_window;
        return s;
    }

    BernsteinParams bernstein_params() const { return {bernstein_delta, bernstein_c}; }

    SplitSpec split_spec() const { return {train_frac, val_frac, test_frac, seed}; }

    SynthConfig synth_config() const {
        SynthConfig c;
        c.n_drivers = synth_drivers;
        c.trips_per_driver = synth_trips_per_driver;
        c.trip_length_s = synth_trip_length_s;
        c.p_calm_to_aggressive = synth_p_calm_to_aggressive;
        c.p_aggressive_to_calm = synth_p_aggressive_to_calm;
        c.p_start_aggressive = synth_p_start_aggressive;
        c.seed = seed;
        return c;
    }

    // --- serialisation -------------------------------------------------------

    std::string dump() const {
        std::ostringstream os;
        for (const auto& e : entries()) os << e.key << " = " << e.get(*this) << '\n';
        return os.str();
    }

    // FNV-1a over the canonical dump: identifies the exact configuration in
    // every output artifact.
    std::string hash() const { return to_hex(fnv1a(dump())); }
};

// key = value lines; '#' comments; `include <path>` pulls in another file
// relative to the including file.
inline void load_config_into(RunConfig& cfg, const std::string& path, int depth = 0) {
    if (depth > 8) throw std::runtime_error("config include depth exceeded at " + path);
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config file: " + path);
    std::string line;
    long line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto hash_pos = line.find('#');
        if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string();
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        if (line.rfind("include ", 0) == 0) {
            const std::string inc = trim(line.substr(8));
            const auto base = std::filesystem::path(path).parent_path();
            load_config_into(cfg, (base / inc).string(), depth + 1);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                        ": expected key = value, got '" + line + "'");
        cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

inline RunConfig load_config(const std::string& path) {
    RunConfig cfg;
    load_config_into(cfg, path);
    cfg.validate();
    return cfg;
}

}  // namespace riskwindow

#endif
