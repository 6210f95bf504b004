#ifndef RISKWINDOW_OPTIMIZER_HPP
#define RISKWINDOW_OPTIMIZER_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "riskwindow/dataset.hpp"
#include "riskwindow/features.hpp"
#include "riskwindow/labeling.hpp"
#include "riskwindow/learners/forest.hpp"
#include "riskwindow/learners/gbt.hpp"
#include "riskwindow/learners/network.hpp"
#include "riskwindow/metrics.hpp"
#include "riskwindow/pipeline.hpp"
#include "riskwindow/threshold.hpp"
#include "riskwindow/tpe.hpp"

#include "json.hpp"

namespace riskwindow {

// --- search spaces (Table 2 vocabulary) --------------------------------------

inline SearchSpace forest_space() {
    SearchSpace s;
    using K = ParamDomain::Kind;
    s.dims = {
        {"n_estimators", K::Int, 100, 1000, 100},
        {"max_depth", K::Int, 3, 20, 1},
        {"min_samples_split", K::Int, 2, 50, 1},
        {"min_samples_leaf", K::Int, 1, 20, 1},
        {"max_features", K::Categorical, 0, 0, 1, {"none", "sqrt", "log2"}},
        {"criterion", K::Categorical, 0, 0, 1, {"gini", "entropy", "log_loss"}},
        {"patience", K::Int, 5, 20, 1},
    };
    return s;
}

inline SearchSpace gbt_space() {
    SearchSpace s;
    using K = ParamDomain::Kind;
    s.dims = {
        {"n_estimators", K::Int, 100, 2000, 100},
        {"learning_rate", K::LogUniform, 0.01, 0.1},
        {"max_depth", K::Int, 3, 20, 1},
        {"subsample", K::Uniform, 0.5, 0.9},
        {"colsample_bytree", K::Uniform, 0.5, 0.9},
        {"gamma", K::Uniform, 0.0, 5.0},
        {"reg_lambda", K::Uniform, 0.1, 10.0},
        {"reg_alpha", K::Uniform, 0.1, 10.0},
    };
    return s;
}

inline SearchSpace network_space() {
    SearchSpace s;
    using K = ParamDomain::Kind;
    s.dims = {
        {"num_layers", K::Int, 1, 5, 1},
        {"units_1", K::Int, 64, 512, 64},
        {"activation_1", K::Categorical, 0, 0, 1, {"relu", "tanh", "leaky_relu"}},
        {"dropout_1", K::Discrete, 0.1, 0.3, 0.05},
        {"l2_reg_1", K::LogUniform, 1e-4, 1e-2},
        // Later-layer dimensions only exist for deeper networks.
        {"units_i", K::Int, 32, 512, 32, {}, "num_layers", 2},
        {"activation_i", K::Categorical, 0, 0, 1, {"relu", "tanh", "leaky_relu"}, "num_layers", 2},
        {"dropout_i", K::Discrete, 0.1, 0.3, 0.05, {}, "num_layers", 2},
        {"l2_reg_i", K::Discrete, 0.001, 0.05, 0.005, {}, "num_layers", 2},
        {"lr", K::LogUniform, 1e-4, 1e-2},
        {"epochs", K::Int, 50, 150, 1},
        {"batch_size", K::Int, 128, 512, 64},
        {"optimizer", K::Categorical, 0, 0, 1, {"Adam", "SGD", "RMSprop"}},
    };
    return s;
}

inline SearchSpace default_space(const std::string& kind) {
    if (kind == "forest") return forest_space();
    if (kind == "gbt") return gbt_space();
    if (kind == "network") return network_space();
    throw std::invalid_argument("default_space: unknown model kind " + kind);
}

// Desk-scale spaces for fast end-to-end runs; same shape, smaller models.
inline SearchSpace small_space(const std::string& kind) {
    SearchSpace s;
    using K = ParamDomain::Kind;
    if (kind == "forest") {
        s.dims = {
            {"n_estimators", K::Int, 20, 80, 20},
            {"max_depth", K::Int, 4, 10, 1},
            {"min_samples_split", K::Int, 2, 10, 1},
            {"min_samples_leaf", K::Int, 1, 5, 1},
            {"max_features", K::Categorical, 0, 0, 1, {"none", "sqrt", "log2"}},
            {"criterion", K::Categorical, 0, 0, 1, {"gini", "entropy", "log_loss"}},
            {"patience", K::Int, 5, 10, 1},
        };
        return s;
    }
    if (kind == "gbt") {
        s.dims = {
            {"n_estimators", K::Int, 30, 120, 30},
            {"learning_rate", K::LogUniform, 0.05, 0.3},
            {"max_depth", K::Int, 3, 6, 1},
            {"subsample", K::Uniform, 0.6, 0.9},
            {"colsample_bytree", K::Uniform, 0.6, 0.9},
            {"gamma", K::Uniform, 0.0, 1.0},
            {"reg_lambda", K::Uniform, 0.1, 5.0},
            {"reg_alpha", K::Uniform, 0.1, 1.0},
        };
        return s;
    }
    if (kind == "network") {
        s.dims = {
            {"num_layers", K::Int, 1, 2, 1},
            {"units_1", K::Int, 16, 64, 16},
            {"activation_1", K::Categorical, 0, 0, 1, {"relu", "tanh", "leaky_relu"}},
            {"dropout_1", K::Discrete, 0.1, 0.3, 0.05},
            {"l2_reg_1", K::LogUniform, 1e-4, 1e-2},
            {"units_i", K::Int, 16, 32, 16, {}, "num_layers", 2},
            {"activation_i", K::Categorical, 0, 0, 1, {"relu", "tanh", "leaky_relu"}, "num_layers", 2},
            {"dropout_i", K::Discrete, 0.1, 0.3, 0.05, {}, "num_layers", 2},
            {"l2_reg_i", K::Discrete, 0.001, 0.05, 0.005, {}, "num_layers", 2},
            {"lr", K::LogUniform, 1e-3, 1e-2},
            {"epochs", K::Int, 20, 40, 1},
            {"batch_size", K::Int, 64, 128, 64},
            {"optimizer", K::Categorical, 0, 0, 1, {"Adam", "SGD", "RMSprop"}},
        };
        return s;
    }
    throw std::invalid_argument("small_space: unknown model kind " + kind);
}

inline SearchSpace space_for(const std::string& kind, const std::string& scale) {
    if (scale == "small") return small_space(kind);
    return default_space(kind);
}

// Instantiates the right model class from an artifact's kind header.
inline std::unique_ptr<Classifier> load_model_file(const std::string& path) {
    std::string kind;
    {
        std::ifstream is(path);
        if (!is) throw std::runtime_error("cannot open model file: " + path);
        std::string line;
        std::getline(is, line);
        if (!std::getline(is, line) || line.rfind("kind ", 0) != 0)
            throw std::runtime_error("model artifact missing kind header: " + path);
        kind = line.substr(5);
    }
    std::unique_ptr<Classifier> model;
    if (kind == "forest")
        model = std::make_unique<RandomForest>();
    else if (kind == "gbt")
        model = std::make_unique<GradientBoostedTrees>();
    else if (kind == "network")
        model = std::make_unique<NeuralNet>();
    else
        throw std::runtime_error("unknown model kind in artifact: " + kind);
    std::ifstream is(path);
    model->load(is);
    return model;
}

namespace detail {

inline double p_num(const ParamMap& p, const std::string& name, double fallback) {
    auto it = p.find(name);
    return it == p.end() ? fallback : it->second;
}

inline std::string p_cat(const SearchSpace& space, const ParamMap& p, const std::string& name,
                         const std::string& fallback) {
    auto it = p.find(name);
    if (it == p.end()) return fallback;
    return cat_value(space.at(name), it->second);
}

}  // namespace detail

inline std::unique_ptr<Classifier> make_classifier(const std::string& kind, const ParamMap& p,
                                                   const SearchSpace& space, std::uint64_t seed) {
    using detail::p_cat;
    using detail::p_num;
    if (kind == "forest") {
        RFConfig c;
        c.n_estimators = static_cast<int>(p_num(p, "n_estimators", c.n_estimators));
        c.max_depth = static_cast<int>(p_num(p, "max_depth", c.max_depth));
        c.min_samples_split = static_cast<int>(p_num(p, "min_samples_split", c.min_samples_split));
        c.min_samples_leaf = static_cast<int>(p_num(p, "min_samples_leaf", c.min_samples_leaf));
        c.max_features = p_cat(space, p, "max_features", c.max_features);
        c.criterion = p_cat(space, p, "criterion", c.criterion);
        c.patience = static_cast<int>(p_num(p, "patience", c.patience));
        c.seed = seed;
        return std::make_unique<RandomForest>(c);
    }
    if (kind == "gbt") {
        GBTConfig c;
        c.n_estimators = static_cast<int>(p_num(p, "n_estimators", c.n_estimators));
        c.learning_rate = p_num(p, "learning_rate", c.learning_rate);
        c.max_depth = static_cast<int>(p_num(p, "max_depth", c.max_depth));
        c.subsample = p_num(p, "subsample", c.subsample);
        c.colsample_bytree = p_num(p, "colsample_bytree", c.colsample_bytree);
        c.gamma = p_num(p, "gamma", c.gamma);
        c.reg_lambda = p_num(p, "reg_lambda", c.reg_lambda);
        c.reg_alpha = p_num(p, "reg_alpha", c.reg_alpha);
        c.seed = seed;
        return std::make_unique<GradientBoostedTrees>(c);
    }
    if (kind == "network") {
        NNConfig c;
        c.num_layers = static_cast<int>(p_num(p, "num_layers", c.num_layers));
        c.units_1 = static_cast<int>(p_num(p, "units_1", c.units_1));
        c.activation_1 = p_cat(space, p, "activation_1", c.activation_1);
        c.dropout_1 = p_num(p, "dropout_1", c.dropout_1);
        c.l2_reg_1 = p_num(p, "l2_reg_1", c.l2_reg_1);
        c.units_i = static_cast<int>(p_num(p, "units_i", c.units_i));
        c.activation_i = p_cat(space, p, "activation_i", c.activation_i);
        c.dropout_i = p_num(p, "dropout_i", c.dropout_i);
        c.l2_reg_i = p_num(p, "l2_reg_i", c.l2_reg_i);
        // units_i may not exceed units_1 (Table 2's conditional upper bound).
        c.units_i = std::min(c.units_i, c.units_1);
        c.lr = p_num(p, "lr", c.lr);
        c.epochs = static_cast<int>(p_num(p, "epochs", c.epochs));
        c.batch_size = static_cast<int>(p_num(p, "batch_size", c.batch_size));
        c.optimizer = p_cat(space, p, "optimizer", c.optimizer);
        c.seed = seed;
        return std::make_unique<NeuralNet>(c);
    }
    throw std::invalid_argument("make_classifier: unknown model kind " + kind);
}

// --- the bi-level loop --------------------------------------------------------

struct TrialData {
    std::vector<WindowView> train_views;
    std::vector<WindowView> val_views;
    HeadwayScoreParams hdw_params;  // fitted on training windows
    IndicatorMode mode = IndicatorMode::Unified;
    std::vector<std::size_t> selected_cols;  // empty = all features
};

struct InnerLoopOptions {
    int inner_steps = 10;
    double rv_tol = 1e-3;
    ThresholdState threshold_defaults;  // copied into each trial
    bool smote = false;  // rebalance training data to 1:1 after each relabel
    int smote_k = 5;
};

enum class TrialStatus { Complete, Pruned, Failed };

inline const char* trial_status_name(TrialStatus s) {
    switch (s) {
        case TrialStatus::Complete: return "complete";
        case TrialStatus::Pruned: return "pruned";
        case TrialStatus::Failed: return "failed";
    }
    return "?";
}

struct Trial {
    int trial_id = 0;
    std::string kind;
    ParamMap params;
    TrialStatus status = TrialStatus::Failed;
    std::string error;
    double tau_final = 0.5;
    double tau_best = 0.5;
    double hm = 0.0;  // best validation HM over inner steps
    double intermediate_hm = 0.0;  // HM at the pruning checkpoint
    std::vector<double> tau_trace, hm_trace;
    std::vector<RegretEntry> regret_trace;
    std::shared_ptr<Classifier> best_model;  // model at the best inner step
};

// Called at the pruning checkpoint; returning true aborts the trial.
using PruneHook = std::function<bool(int step, double hm)>;

// Inner loop of the bi-level optimisation: alternate threshold updates,
// relabeling at the current tau_e, model refits, and regret computation.
inline Trial run_trial(int trial_id, const std::string& kind, const ParamMap& params,
                       const TrialData& data, const SearchSpace& space,
                       const InnerLoopOptions& opts, std::uint64_t seed,
                       const PruneHook& should_prune = {}) {
    Trial trial;
    trial.trial_id = trial_id;
    trial.kind = kind;
    trial.params = params;

    Dataset train_ds = make_dataset(data.train_views, {});
    Dataset val_ds = make_dataset(data.val_views, {});
    if (!data.selected_cols.empty()) {
        train_ds = train_ds.select_columns(data.selected_cols);
        val_ds = val_ds.select_columns(data.selected_cols);
    }
    ThresholdState st = opts.threshold_defaults;
    const int prune_step = std::max(1, opts.inner_steps / 2);

    double r_t = 0.0, r_pt = 0.0;
    for (int step = 0; step < opts.inner_steps; ++step) {
        if (step > 0) update_tau(st, r_t, r_pt);
        const double tau = st.tau_e;

        // Relabel both partitions at the trial's current threshold.
        train_ds.y = label_views(data.train_views, tau, data.hdw_params, data.mode);
        val_ds.y = label_views(data.val_views, tau, data.hdw_params, data.mode);

        // SMOTE after splitting, training partition only.
        Dataset fit_ds = train_ds;
        if (opts.smote) {
            const long pos = fit_ds.positives();
            const long neg = static_cast<long>(fit_ds.n_rows) - pos;
            const long minority = std::min(pos, neg);
            if (minority > 0 && minority < std::max(pos, neg)) {
                const int min_label = pos < neg ? 1 : 0;
                std::vector<std::vector<double>> min_rows;
                for (std::size_t i = 0; i < fit_ds.n_rows; ++i)
                    if (fit_ds.y[i] == min_label)
                        min_rows.emplace_back(fit_ds.row(i).begin(), fit_ds.row(i).end());
                const auto synth =
                    smote(min_rows, opts.smote_k, static_cast<std::size_t>(std::max(pos, neg) - minority),
                          split_seed(seed, 0x5A0 + static_cast<std::uint64_t>(step)));
                for (const auto& r : synth) fit_ds.push_row(r, min_label);
            }
        }

        std::shared_ptr<Classifier> model;
        std::vector<int> preds;
        try {
            model = make_classifier(kind, params, space,
                                    split_seed(seed, static_cast<std::uint64_t>(step)));
            model->fit(fit_ds, val_ds);
            preds = model->predict(val_ds, tau);
        } catch (const std::exception& e) {
            trial.status = TrialStatus::Failed;
            trial.error = e.what();
            return trial;
        }

        const auto m = basic_metrics(ConfusionCounts::from_pairs(val_ds.y, preds));
        const double hm = m.hm;
        trial.tau_trace.push_back(tau);
        trial.hm_trace.push_back(hm);
        if (hm > trial.hm || trial.best_model == nullptr) {
            trial.hm = hm;
            trial.tau_best = tau;
            trial.best_model = model;
        }
        trial.tau_final = tau;

        // Regret slices: rolling = observation-only labels, prediction =
        // prediction-window labels on the windows that have one.
        std::vector<int> true_roll, pred_roll, true_pred, pred_pred;
        for (std::size_t i = 0; i < data.val_views.size(); ++i) {
            true_roll.push_back(label_obs_only(data.val_views[i], tau, data.hdw_params, data.mode) ? 1 : 0);
            pred_roll.push_back(preds[i]);
            if (auto lp = label_pred_only(data.val_views[i], tau, data.mode)) {
                true_pred.push_back(*lp ? 1 : 0);
                pred_pred.push_back(preds[i]);
            }
        }
        const RegretPair rp = compute_regret(pred_roll, true_roll, pred_pred, true_pred, st);
        r_t = rp.r_t;
        r_pt = rp.r_pt;
        trial.regret_trace.push_back({r_t, r_pt});

        if (step + 1 == prune_step) {
            trial.intermediate_hm = hm;
            if (should_prune && should_prune(step + 1, hm)) {
                trial.status = TrialStatus::Pruned;
                return trial;
            }
        }
        if (step > 0 && !st.regret_history.empty()) {
            const auto rs = rolling_regret(st.regret_history, st.regret_window);
            if (rs.rv < opts.rv_tol && static_cast<int>(st.regret_history.size()) >= 2) break;
        }
    }
    trial.status = TrialStatus::Complete;
    return trial;
}

struct StudyResult {
    std::vector<Trial> trials;
    int best_index = -1;  // into trials; completed trials only

    const Trial& best() const {
        if (best_index < 0) throw std::runtime_error("study: no completed trial");
        return trials[static_cast<std::size_t>(best_index)];
    }
};

struct OptimizeOptions {
    int budget = 25;
    InnerLoopOptions inner;
    TPEOptions tpe;
};

// Outer loop: TPE-suggested hyperparameters, median pruning at the half-way
// checkpoint, argmax of completed-trial validation HM.
inline StudyResult optimize(const std::string& kind, const TrialData& data, const SearchSpace& space,
                            const OptimizeOptions& opts, std::uint64_t seed) {
    StudyResult study;
    std::vector<TPEObservation> history;
    std::vector<double> checkpoint_hms;  // intermediate HMs of prior non-failed trials

    Rng suggest_rng(split_seed(seed, 0x7BE));
    for (int t = 0; t < opts.budget; ++t) {
        const ParamMap params = tpe_suggest(space, history, suggest_rng, opts.tpe);
        auto should_prune = [&](int /*step*/, double hm) {
            if (checkpoint_hms.empty()) return false;
            std::vector<double> sorted = checkpoint_hms;
            std::sort(sorted.begin(), sorted.end());
            const std::size_t n = sorted.size();
            const double median =
                n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
            return hm < median;
        };
        Trial trial = run_trial(t, kind, params, data, space, opts.inner,
                                split_seed(seed, 1000 + static_cast<std::uint64_t>(t)), should_prune);
        if (trial.status != TrialStatus::Failed) checkpoint_hms.push_back(trial.intermediate_hm);
        if (trial.status == TrialStatus::Complete) {
            history.push_back({trial.params, trial.hm});
            if (study.best_index < 0 || trial.hm > study.trials[static_cast<std::size_t>(study.best_index)].hm)
                study.best_index = t;
        }
        study.trials.push_back(std::move(trial));
    }
    if (study.best_index < 0) throw std::runtime_error("optimize: all trials failed");
    return study;
}

// JSON-lines study log, one trial per line.
inline void write_study_log(std::ostream& os, const StudyResult& study, const SearchSpace& space,
                            const std::string& config_hash, std::uint64_t seed) {
    for (const auto& t : study.trials) {
        nlohmann::json j;
        j["trial_id"] = t.trial_id;
        j["kind"] = t.kind;
        j["status"] = trial_status_name(t.status);
        if (!t.error.empty()) j["error"] = t.error;
        nlohmann::json p;
        for (const auto& [name, v] : t.params) {
            const auto& dom = space.at(name);
            if (dom.kind == ParamDomain::Kind::Categorical)
                p[name] = cat_value(dom, v);
            else
                p[name] = v;
        }
        j["params"] = p;
        j["tau_final"] = t.tau_final;
        j["tau_best"] = t.tau_best;
        j["hm"] = t.hm;
        j["tau_trace"] = t.tau_trace;
        j["hm_trace"] = t.hm_trace;
        nlohmann::json reg = nlohmann::json::array();
        for (const auto& r : t.regret_trace) reg.push_back({{"r_t", r.rolling}, {"r_pt", r.pred}});
        j["regret_trace"] = reg;
        j["config_hash"] = config_hash;
        j["seed"] = seed;
        os << j.dump() << '\n';
    }
}

}  // namespace riskwindow

#endif
