// riskwindow: risky-driving episode detection over 1 Hz telemetry.
// Subcommands cover the whole pipeline: synth -> label/split -> optimize ->
// evaluate -> report. Every output embeds the config hash and seed.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "riskwindow/config.hpp"
#include "riskwindow/ensemble.hpp"
#include "riskwindow/features.hpp"
#include "riskwindow/optimizer.hpp"
#include "riskwindow/pipeline.hpp"
#include "riskwindow/report.hpp"
#include "riskwindow/synth.hpp"

namespace fs = std::filesystem;
using namespace riskwindow;

namespace {

struct Options {
    std::string config_path;
    std::vector<std::string> overrides;  // key=value
    std::string out_override;
};

RunConfig make_config(const Options& opt) {
    RunConfig cfg;
    if (!opt.config_path.empty()) load_config_into(cfg, opt.config_path);
    for (const auto& kv : opt.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--set expects key=value, got " + kv);
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!opt.out_override.empty()) cfg.out_dir = opt.out_override;
    if (const char* env = std::getenv("RISKWINDOW_OUT")) cfg.out_dir = env;
    cfg.validate();
    return cfg;
}

std::string provenance(const RunConfig& cfg) {
    return "# config_hash=" + cfg.hash() + " seed=" + std::to_string(cfg.seed) + "\n";
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    return os;
}

void ensure_out_dir(const RunConfig& cfg) { fs::create_directories(cfg.out_dir); }

std::string out_path(const RunConfig& cfg, const std::string& name) {
    return (fs::path(cfg.out_dir) / name).string();
}

// Telemetry source: a previously synthesised out/telemetry.csv wins, then the
// configured data_csv.
std::vector<Trip> load_trips(const RunConfig& cfg) {
    std::string path = out_path(cfg, "telemetry.csv");
    if (!fs::exists(path)) path = cfg.data_csv;
    if (path.empty() || !fs::exists(path))
        throw std::runtime_error("no telemetry input: run `riskwindow synth` or set data_csv");
    ColumnMap schema;
    if (!cfg.column_map.empty()) schema = ColumnMap::from_file(cfg.column_map);
    auto res = ingest_csv_file(path, schema);
    if (res.rows_rejected > 0)
        std::cerr << "warning: " << res.rows_rejected << " rows rejected during ingestion\n";
    if (res.trips.empty()) throw std::runtime_error("no usable trips in " + path);
    return res.trips;
}

std::vector<WindowView> all_windows(const std::vector<Trip>& trips, const WindowParams& p,
                                    Diagnostics* diags = nullptr) {
    std::vector<WindowView> out;
    for (const auto& trip : trips) {
        auto w = windows(trip, p, diags);
        out.insert(out.end(), w.begin(), w.end());
    }
    return out;
}

GroupSplit compute_split(const std::vector<WindowView>& views, const RunConfig& cfg) {
    std::map<std::string, std::size_t> volumes;
    for (const auto& v : views) ++volumes[v.driver_id];
    std::vector<std::pair<std::string, std::size_t>> vols(volumes.begin(), volumes.end());
    return group_split(vols, cfg.split_spec());
}

void write_split_csv(const GroupSplit& split, const RunConfig& cfg) {
    auto os = open_out(out_path(cfg, "split.csv"));
    os << provenance(cfg) << "driver,partition\n";
    for (const auto& d : split.train) os << d << ",train\n";
    for (const auto& d : split.val) os << d << ",val\n";
    for (const auto& d : split.test) os << d << ",test\n";
}

GroupSplit load_or_compute_split(const std::vector<WindowView>& views, const RunConfig& cfg) {
    const std::string path = out_path(cfg, "split.csv");
    if (fs::exists(path)) {
        GroupSplit split;
        std::ifstream is(path);
        std::string line;
        while (std::getline(is, line)) {
            if (line.empty() || line[0] == '#' || line.rfind("driver,", 0) == 0) continue;
            const auto comma = line.find(',');
            if (comma == std::string::npos) continue;
            const std::string driver = line.substr(0, comma);
            const std::string part = line.substr(comma + 1);
            if (part == "train")
                split.train.push_back(driver);
            else if (part == "val")
                split.val.push_back(driver);
            else if (part == "test")
                split.test.push_back(driver);
        }
        if (split.train.empty() || split.val.empty())
            throw std::runtime_error("split.csv is empty or malformed: " + path);
        return split;
    }
    GroupSplit split = compute_split(views, cfg);
    write_split_csv(split, cfg);
    return split;
}

struct Prepared {
    std::vector<WindowView> train_views, val_views, test_views;
    HeadwayScoreParams hdw;
    IndicatorMode mode = IndicatorMode::Unified;
};

Prepared prepare(const std::vector<Trip>& trips, const RunConfig& cfg) {
    Prepared prep;
    const auto views = all_windows(trips, cfg.window_params());
    if (views.empty()) throw std::runtime_error("no windows: trips shorter than omega");
    const GroupSplit split = load_or_compute_split(views, cfg);
    for (const auto& v : views) {
        switch (split.partition_of(v.driver_id)) {
            case 0: prep.train_views.push_back(v); break;
            case 1: prep.val_views.push_back(v); break;
            case 2: prep.test_views.push_back(v); break;
            default: throw std::runtime_error("driver missing from split: " + v.driver_id);
        }
    }
    if (prep.train_views.empty() || prep.val_views.empty())
        throw std::runtime_error("empty train or validation partition");
    prep.hdw = fit_headway_params(prep.train_views, cfg.headway_params());
    prep.mode = indicator_from_name(cfg.indicator);
    return prep;
}

std::string timestamp_utc() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

// Shapley-driven selection with the in-repo GBT surrogate. Returns selected
// column indices and writes selection.csv.
std::vector<std::size_t> run_feature_selection(const Prepared& prep, const RunConfig& cfg,
                                               const std::string& trigger_reason) {
    const auto& names = feature_names();
    if (!cfg.feature_selection_enabled) {
        std::vector<std::size_t> all(names.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        return all;
    }

    // Representative subset of training windows, labeled at the initial tau.
    std::vector<WindowView> subset = prep.train_views;
    if (static_cast<int>(subset.size()) > cfg.selection_subset) {
        Rng rng(split_seed(cfg.seed, 0xFE));
        std::shuffle(subset.begin(), subset.end(), rng);
        subset.resize(static_cast<std::size_t>(cfg.selection_subset));
    }
    Dataset ds = make_dataset(subset, label_views(subset, cfg.tau_init, prep.hdw, prep.mode));

    GBTConfig surrogate_cfg;
    surrogate_cfg.n_estimators = 60;
    surrogate_cfg.max_depth = 4;
    surrogate_cfg.seed = split_seed(cfg.seed, 0x5E1);
    GradientBoostedTrees surrogate(surrogate_cfg);
    surrogate.fit(ds, ds);

    Rng rng(split_seed(cfg.seed, 0x5E2));
    std::vector<std::size_t> idx(ds.n_rows);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t n_bg = std::min<std::size_t>(static_cast<std::size_t>(cfg.shapley_background), ds.n_rows);
    const std::size_t n_ex = std::min<std::size_t>(static_cast<std::size_t>(cfg.shapley_explain), ds.n_rows);
    Dataset background = ds.select_rows(std::span(idx.data(), n_bg));
    Dataset explain = ds.select_rows(std::span(idx.data(), n_ex));

    const auto shap = shapley_importance(surrogate, background, explain, cfg.shapley_permutations,
                                         split_seed(cfg.seed, 0x5E3));

    FeatureSelectionState state;
    state.candidate_pool = names;
    state.min_importance = cfg.min_importance;
    state.tau_delta = cfg.drift_tau_delta;
    state.wasserstein_delta = cfg.drift_wasserstein_delta;
    Diagnostics diags;
    select_features(state, shap.mean_abs, &diags);
    for (const auto& d : diags) std::cerr << "warning: " << d.message << '\n';

    auto os = open_out(out_path(cfg, "selection.csv"));
    os << provenance(cfg) << "feature,score,selected,trigger_reason,timestamp\n";
    const std::string ts = timestamp_utc();
    std::set<std::string> chosen(state.selected.begin(), state.selected.end());
    for (std::size_t i = 0; i < names.size(); ++i)
        os << names[i] << ',' << state.scores[i] << ',' << (chosen.count(names[i]) ? 1 : 0) << ','
           << trigger_reason << ',' << ts << '\n';

    std::vector<std::size_t> cols;
    for (std::size_t i = 0; i < names.size(); ++i)
        if (chosen.count(names[i])) cols.push_back(i);
    return cols;
}

// Statistical anchor: per event kind over training windows, tau = mu + alpha*sigma_W
// + gamma*sigma_P + B; the per-kind maximum anchors drift-triggered re-sets.
double compute_anchor(const Prepared& prep, const RunConfig& cfg, double* bernstein_out) {
    ThresholdState st = cfg.threshold_state();
    const long n = static_cast<long>(prep.train_views.size());
    double anchor = cfg.tau_min;
    double b_last = 0.0;
    for (int x = 0; x < kNumEventKinds; ++x) {
        std::vector<double> obs, pred;
        for (const auto& v : prep.train_views) {
            obs.push_back(v.ev_obs[static_cast<std::size_t>(x)]);
            if (v.ev_pred) pred.push_back((*v.ev_pred)[static_cast<std::size_t>(x)]);
        }
        const double mu = mean(obs);
        const double sd_w = stdev(obs);
        std::optional<double> sd_p;
        if (!pred.empty()) sd_p = stdev(pred);
        const double var = sd_w * sd_w;
        const double b = n >= 2 ? bernstein_bound(var, n, cfg.bernstein_params()) : 0.0;
        b_last = b;
        anchor = std::max(anchor, statistical_threshold(mu, sd_w, sd_p, st, b));
    }
    if (bernstein_out) *bernstein_out = b_last;
    return anchor;
}

// --- subcommands --------------------------------------------------------------

int cmd_config(const Options& opt, bool defaults) {
    if (defaults) {
        RunConfig cfg;
        std::cout << cfg.dump();
        return 0;
    }
    RunConfig cfg = make_config(opt);
    std::cout << "# config_hash=" << cfg.hash() << '\n' << cfg.dump();
    return 0;
}

int cmd_synth(const Options& opt) {
    RunConfig cfg = make_config(opt);
    ensure_out_dir(cfg);
    const auto result = generate_synthetic(cfg.synth_config());
    {
        auto os = open_out(out_path(cfg, "telemetry.csv"));
        os << provenance(cfg);
        write_csv(result.trips, os);
    }
    {
        auto os = open_out(out_path(cfg, "truth.csv"));
        os << provenance(cfg) << "driver_id,trip_id,t,risk\n";
        for (std::size_t i = 0; i < result.trips.size(); ++i) {
            const auto& trip = result.trips[i];
            for (std::size_t j = 0; j < trip.records.size(); ++j)
                os << trip.driver_id << ',' << trip.trip_id << ',' << trip.records[j].t << ','
                   << (result.ground_truth_risk[i][j] ? 1 : 0) << '\n';
        }
    }
    std::cout << "wrote " << out_path(cfg, "telemetry.csv") << " ("
              << result.trips.size() << " trips)\n";
    return 0;
}

int cmd_label(const Options& opt, bool dump_windows) {
    RunConfig cfg = make_config(opt);
    ensure_out_dir(cfg);
    const auto trips = load_trips(cfg);
    Diagnostics diags;
    const auto views = all_windows(trips, cfg.window_params(), &diags);
    if (views.empty()) throw std::runtime_error("no windows to label");
    const auto hdw = fit_headway_params(views, cfg.headway_params());
    const auto mode = indicator_from_name(cfg.indicator);

    auto os = open_out(out_path(cfg, "labels.csv"));
    os << provenance(cfg)
       << "driver_id,trip_id,t,r_harsh,risk_score_hdw,r_hdw,r,tau_used\n";
    for (const auto& v : views) {
        const auto lab = unified_label(v, cfg.tau_init, hdw, mode);
        os << lab.driver_id << ',' << lab.trip_id << ',' << lab.t << ',' << (lab.r_harsh ? 1 : 0)
           << ',' << lab.risk_score_hdw << ',' << (lab.r_hdw ? 1 : 0) << ',' << (lab.r ? 1 : 0)
           << ',' << lab.tau_used << '\n';
    }
    if (dump_windows) {
        auto ws = open_out(out_path(cfg, "windows.jsonl"));
        for (const auto& v : views) {
            nlohmann::json j;
            j["driver_id"] = v.driver_id;
            j["trip_id"] = v.trip_id;
            j["t"] = v.t;
            for (int x = 0; x < kNumEventKinds; ++x)
                j["ev_obs"][kEventNames[static_cast<std::size_t>(x)]] =
                    v.ev_obs[static_cast<std::size_t>(x)];
            if (v.ev_pred) {
                for (int x = 0; x < kNumEventKinds; ++x)
                    j["ev_pred"][kEventNames[static_cast<std::size_t>(x)]] =
                        (*v.ev_pred)[static_cast<std::size_t>(x)];
                j["pred_len"] = v.pred_len;
            }
            j["mean_speed_kmh"] = v.mean_speed_kmh;
            j["hdw_props"] = v.hdw_props;
            ws << j.dump() << '\n';
        }
    }
    for (const auto& d : diags) std::cerr << "diagnostic: " << d.to_jsonl() << '\n';
    std::cout << "wrote " << out_path(cfg, "labels.csv") << " (" << views.size() << " windows)\n";
    return 0;
}

int cmd_split(const Options& opt) {
    RunConfig cfg = make_config(opt);
    ensure_out_dir(cfg);
    const auto trips = load_trips(cfg);
    const auto views = all_windows(trips, cfg.window_params());
    if (views.empty()) throw std::runtime_error("no windows to split");
    write_split_csv(compute_split(views, cfg), cfg);
    std::cout << "wrote " << out_path(cfg, "split.csv") << '\n';
    return 0;
}

struct MemberRecord {
    std::string kind;
    std::string path;
    double tau = 0.5;
    double lambda = 0.0;
    double hm_val = 0.0;
};

void write_models_manifest(const RunConfig& cfg, const std::vector<MemberRecord>& members,
                           const std::vector<std::size_t>& cols) {
    auto os = open_out(out_path(cfg, "models.csv"));
    os << provenance(cfg) << "kind,path,tau,lambda,hm_val\n";
    for (const auto& m : members)
        os << m.kind << ',' << m.path << ',' << m.tau << ',' << m.lambda << ',' << m.hm_val << '\n';
    auto cs = open_out(out_path(cfg, "selected_columns.csv"));
    cs << provenance(cfg) << "index,feature\n";
    for (std::size_t c : cols) cs << c << ',' << feature_names()[c] << '\n';
}

std::vector<std::size_t> load_selected_columns(const RunConfig& cfg) {
    const std::string path = out_path(cfg, "selected_columns.csv");
    std::vector<std::size_t> cols;
    if (!fs::exists(path)) {
        for (std::size_t i = 0; i < feature_names().size(); ++i) cols.push_back(i);
        return cols;
    }
    std::ifstream is(path);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("index,", 0) == 0) continue;
        cols.push_back(static_cast<std::size_t>(std::stoul(line)));
    }
    return cols;
}

int cmd_optimize(const Options& opt) {
    RunConfig cfg = make_config(opt);
    ensure_out_dir(cfg);
    const auto trips = load_trips(cfg);
    const Prepared prep = prepare(trips, cfg);

    const auto cols = run_feature_selection(prep, cfg, "initial");
    double bernstein = 0.0;
    const double anchor = compute_anchor(prep, cfg, &bernstein);

    TrialData data;
    data.train_views = prep.train_views;
    data.val_views = prep.val_views;
    data.hdw_params = prep.hdw;
    data.mode = prep.mode;
    data.selected_cols = cols;

    OptimizeOptions oopt;
    oopt.budget = cfg.trial_budget;
    oopt.inner.inner_steps = cfg.inner_steps;
    oopt.inner.rv_tol = cfg.rv_tol;
    oopt.inner.threshold_defaults = cfg.threshold_state();
    oopt.inner.smote = cfg.smote_enabled;
    oopt.inner.smote_k = cfg.smote_k;
    oopt.tpe.n_startup = cfg.tpe_startup;
    oopt.tpe.gamma = cfg.tpe_gamma;
    oopt.tpe.n_candidates = cfg.tpe_candidates;

    std::vector<MemberRecord> manifest;
    std::vector<EnsembleMember> members;
    Dataset val_x = make_dataset(prep.val_views, {}).select_columns(cols);

    auto traj = open_out(out_path(cfg, "trajectory.csv"));
    traj << provenance(cfg) << TrajectoryRow::csv_header() << '\n';

    for (const auto& kind : cfg.model_kinds()) {
        const SearchSpace space = space_for(kind, cfg.space_scale);
        std::cerr << "optimizing " << kind << " (" << cfg.trial_budget << " trials)...\n";
        const StudyResult study = optimize(kind, data, space, oopt, split_seed(cfg.seed, fnv1a(kind)));
        {
            auto os = open_out(out_path(cfg, "study_" + kind + ".jsonl"));
            write_study_log(os, study, space, cfg.hash(), cfg.seed);
        }
        const Trial& best = study.best();
        const std::string model_path = out_path(cfg, "model_" + kind + ".txt");
        save_model_file(*best.best_model, model_path);

        const double lambda = confidence_weight(*best.best_model, val_x);
        manifest.push_back({kind, model_path, best.tau_best, lambda, best.hm});
        members.push_back({best.best_model, best.tau_best, lambda, kind});

        // Threshold trajectory of the winning trial, annotated with the
        // statistical anchor's Bernstein term.
        ThresholdState rs_state = cfg.threshold_state();
        for (std::size_t s = 0; s < best.tau_trace.size(); ++s) {
            rs_state.regret_history.push_back(best.regret_trace[s]);
            while (static_cast<int>(rs_state.regret_history.size()) > rs_state.regret_window)
                rs_state.regret_history.pop_front();
            const auto rr = rolling_regret(rs_state.regret_history, rs_state.regret_window);
            TrajectoryRow row;
            row.driver_id = kind;
            row.step = static_cast<long>(s);
            row.tau_e = best.tau_trace[s];
            row.r_t = best.regret_trace[s].rolling;
            row.r_pt = best.regret_trace[s].pred;
            row.ror = rr.ror;
            row.rv = rr.rv;
            row.bernstein = bernstein;
            traj << row.csv_row() << '\n';
        }
        std::cerr << "  best HM=" << best.hm << " tau=" << best.tau_best << '\n';
    }

    const auto grid = ensemble_threshold_grid(cfg.grid_lo, cfg.grid_hi, cfg.grid_step);
    const auto ens = select_ensemble_threshold(members, val_x, prep.val_views, prep.hdw, prep.mode, grid);
    {
        auto os = open_out(out_path(cfg, "ensemble.csv"));
        write_ensemble_csv(os, members, ens, cfg.hash(), cfg.seed);
    }
    write_models_manifest(cfg, manifest, cols);

    nlohmann::json summary;
    summary["config_hash"] = cfg.hash();
    summary["seed"] = cfg.seed;
    summary["indicator"] = cfg.indicator;
    summary["anchor_tau"] = anchor;
    summary["bernstein"] = bernstein;
    summary["tau_star"] = ens.tau_star;
    summary["ensemble_hm"] = ens.hm;
    summary["train_windows"] = prep.train_views.size();
    summary["val_windows"] = prep.val_views.size();
    summary["test_windows"] = prep.test_views.size();
    open_out(out_path(cfg, "run_summary.json")) << summary.dump(2) << '\n';

    std::cout << "ensemble tau*=" << ens.tau_star << " HM=" << ens.hm << '\n';
    return 0;
}

int cmd_train(const Options& opt) {
    RunConfig cfg = make_config(opt);
    ensure_out_dir(cfg);
    const auto trips = load_trips(cfg);
    const Prepared prep = prepare(trips, cfg);
    const auto cols = load_selected_columns(cfg);

    Dataset train_ds = make_dataset(prep.train_views,
                                    label_views(prep.train_views, cfg.tau_init, prep.hdw, prep.mode))
                           .select_columns(cols);
    Dataset val_ds = make_dataset(prep.val_views,
                                  label_views(prep.val_views, cfg.tau_init, prep.hdw, prep.mode))
                         .select_columns(cols);

    std::vector<MemberRecord> manifest;
    for (const auto& kind : cfg.model_kinds()) {
        const SearchSpace space = space_for(kind, cfg.space_scale);
        auto model = make_classifier(kind, {}, space, split_seed(cfg.seed, fnv1a(kind)));
        model->fit(train_ds, val_ds);
        const auto preds = model->predict(val_ds, cfg.tau_init);
        const auto m = basic_metrics(ConfusionCounts::from_pairs(val_ds.y, preds));
        const std::string model_path = out_path(cfg, "model_" + kind + ".txt");
        save_model_file(*model, model_path);
        manifest.push_back({kind, model_path, cfg.tau_init, confidence_weight(*model, val_ds), m.hm});
        std::cout << kind << ": val HM=" << m.hm << " -> " << model_path << '\n';
    }
    write_models_manifest(cfg, manifest, cols);
    return 0;
}

std::vector<MemberRecord> load_models_manifest(const RunConfig& cfg) {
    const std::string path = out_path(cfg, "models.csv");
    if (!fs::exists(path)) throw std::runtime_error("missing models.csv: run optimize or train first");
    std::vector<MemberRecord> out;
    std::ifstream is(path);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("kind,", 0) == 0) continue;
        std::istringstream ss(line);
        MemberRecord m;
        std::string tau, lambda, hm;
        std::getline(ss, m.kind, ',');
        std::getline(ss, m.path, ',');
        std::getline(ss, tau, ',');
        std::getline(ss, lambda, ',');
        std::getline(ss, hm, ',');
        m.tau = std::stod(tau);
        m.lambda = std::stod(lambda);
        m.hm_val = std::stod(hm);
        out.push_back(m);
    }
    return out;
}

double load_tau_star(const RunConfig& cfg) {
    const std::string path = out_path(cfg, "ensemble.csv");
    if (!fs::exists(path)) return 0.5;
    std::ifstream is(path);
    std::string line;
    while (std::getline(is, line)) {
        if (line.rfind("tau_star,", 0) == 0) {
            std::istringstream ss(line);
            std::string tok;
            std::getline(ss, tok, ',');
            std::getline(ss, tok, ',');
            std::getline(ss, tok, ',');
            return std::stod(tok);
        }
    }
    return 0.5;
}

int cmd_evaluate(const Options& opt) {
    RunConfig cfg = make_config(opt);
    ensure_out_dir(cfg);
    const auto trips = load_trips(cfg);
    const Prepared prep = prepare(trips, cfg);
    const auto cols = load_selected_columns(cfg);
    const auto manifest = load_models_manifest(cfg);
    if (prep.test_views.empty()) throw std::runtime_error("empty test partition");

    Dataset test_x = make_dataset(prep.test_views, {}).select_columns(cols);

    auto os = open_out(out_path(cfg, "metrics.csv"));
    MetricBundle header;
    os << provenance(cfg) << "name,tau," << header.csv_header() << '\n';

    std::vector<EnsembleMember> members;
    for (const auto& rec : manifest) {
        auto model = load_model_file(rec.path);
        const auto labels = label_views(prep.test_views, rec.tau, prep.hdw, prep.mode);
        const auto preds = model->predict(test_x, rec.tau);
        const auto scores = model->predict_proba(test_x);
        const auto m = full_metrics(labels, preds, scores);
        os << rec.kind << ',' << rec.tau << ',' << m.csv_row() << '\n';
        members.push_back({std::shared_ptr<Classifier>(std::move(model)), rec.tau, rec.lambda, rec.kind});
    }

    const double tau_star = load_tau_star(cfg);
    for (auto& m : members) m.tau = tau_star;
    const auto ens_preds = ensemble_vote(members, test_x);
    const auto ens_labels = label_views(prep.test_views, tau_star, prep.hdw, prep.mode);
    // Weighted vote share doubles as the ensemble score for AUC-PR.
    std::vector<double> ens_scores(test_x.n_rows, 0.0);
    {
        double total = 0.0;
        for (const auto& m : members) total += m.lambda;
        for (const auto& m : members) {
            const auto votes = m.model->predict(test_x, m.tau);
            for (std::size_t i = 0; i < ens_scores.size(); ++i)
                ens_scores[i] += m.lambda * votes[i] / total;
        }
    }
    const auto em = full_metrics(ens_labels, ens_preds, ens_scores);
    os << "ensemble," << tau_star << ',' << em.csv_row() << '\n';
    std::cout << "wrote " << out_path(cfg, "metrics.csv") << '\n';
    return 0;
}

int cmd_report(const Options& opt) {
    RunConfig cfg = make_config(opt);
    ensure_out_dir(cfg);

    // HM vs tau: per-model inner-loop points plus the ensemble grid sweep.
    {
        auto os = open_out(out_path(cfg, "hm_vs_tau.csv"));
        os << provenance(cfg) << "source,tau,hm\n";
        std::vector<Series> series;
        for (const auto& kind : cfg.model_kinds()) {
            const std::string path = out_path(cfg, "study_" + kind + ".jsonl");
            if (!fs::exists(path)) continue;
            std::vector<std::pair<double, double>> pts;
            std::ifstream is(path);
            std::string line;
            while (std::getline(is, line)) {
                const auto j = nlohmann::json::parse(line);
                if (j["status"] != "complete") continue;
                const auto taus = j["tau_trace"].get<std::vector<double>>();
                const auto hms = j["hm_trace"].get<std::vector<double>>();
                for (std::size_t i = 0; i < taus.size() && i < hms.size(); ++i)
                    pts.push_back({taus[i], hms[i]});
            }
            std::sort(pts.begin(), pts.end());
            for (const auto& [tau, hm] : pts) os << kind << ',' << tau << ',' << hm << '\n';
            series.push_back({kind, pts});
        }
        const std::string ens_path = out_path(cfg, "ensemble.csv");
        if (fs::exists(ens_path)) {
            std::vector<std::pair<double, double>> pts;
            std::ifstream is(ens_path);
            std::string line;
            while (std::getline(is, line)) {
                if (line.rfind("grid,", 0) != 0) continue;
                std::istringstream ss(line);
                std::string tok, tau, hm;
                std::getline(ss, tok, ',');
                std::getline(ss, tok, ',');
                std::getline(ss, tau, ',');
                std::getline(ss, hm, ',');
                pts.push_back({std::stod(tau), std::stod(hm)});
                os << "ensemble," << tau << ',' << hm << '\n';
            }
            series.push_back({"ensemble", pts});
        }
        write_svg_file(out_path(cfg, "hm_vs_tau.svg"), "HM vs tau_e", series);
    }

    // Regret per trial (mean summed regret over the inner loop).
    {
        auto os = open_out(out_path(cfg, "regret_trace.csv"));
        os << provenance(cfg) << "model,trial,regret\n";
        std::vector<Series> series;
        for (const auto& kind : cfg.model_kinds()) {
            const std::string path = out_path(cfg, "study_" + kind + ".jsonl");
            if (!fs::exists(path)) continue;
            Series s{kind, {}};
            std::ifstream is(path);
            std::string line;
            while (std::getline(is, line)) {
                const auto j = nlohmann::json::parse(line);
                double acc = 0.0;
                std::size_t n = 0;
                for (const auto& r : j["regret_trace"]) {
                    acc += r["r_t"].get<double>() + r["r_pt"].get<double>();
                    ++n;
                }
                const double val = n ? acc / static_cast<double>(n) : 0.0;
                const int id = j["trial_id"].get<int>();
                os << kind << ',' << id << ',' << val << '\n';
                s.points.push_back({static_cast<double>(id), val});
            }
            series.push_back(std::move(s));
        }
        write_svg_file(out_path(cfg, "regret_trace.svg"), "Regret over trials", series);
    }

    // Feature importances from the selection report.
    {
        const std::string sel = out_path(cfg, "selection.csv");
        auto os = open_out(out_path(cfg, "feature_importance.csv"));
        os << provenance(cfg) << "feature,score,selected\n";
        std::vector<std::pair<std::string, double>> bars;
        if (fs::exists(sel)) {
            std::ifstream is(sel);
            std::string line;
            while (std::getline(is, line)) {
                if (line.empty() || line[0] == '#' || line.rfind("feature,", 0) == 0) continue;
                std::istringstream ss(line);
                std::string name, score, selected;
                std::getline(ss, name, ',');
                std::getline(ss, score, ',');
                std::getline(ss, selected, ',');
                os << name << ',' << score << ',' << selected << '\n';
                bars.push_back({name, std::stod(score)});
            }
        }
        std::sort(bars.begin(), bars.end(),
                  [](const auto& a, const auto& b) { return a.second > b.second; });
        write_svg_bars_file(out_path(cfg, "feature_importance.svg"), "Mean |Shapley| per feature",
                            bars);
    }

    // Threshold trajectory re-export with a plot.
    {
        const std::string traj = out_path(cfg, "trajectory.csv");
        auto os = open_out(out_path(cfg, "threshold_trajectory.csv"));
        os << provenance(cfg) << TrajectoryRow::csv_header() << '\n';
        std::map<std::string, Series> per_model;
        if (fs::exists(traj)) {
            std::ifstream is(traj);
            std::string line;
            while (std::getline(is, line)) {
                if (line.empty() || line[0] == '#' || line.rfind("driver,", 0) == 0) continue;
                os << line << '\n';
                std::istringstream ss(line);
                std::string model, step, tau;
                std::getline(ss, model, ',');
                std::getline(ss, step, ',');
                std::getline(ss, tau, ',');
                auto& s = per_model[model];
                s.name = model;
                s.points.push_back({std::stod(step), std::stod(tau)});
            }
        }
        std::vector<Series> series;
        for (auto& [k, s] : per_model) series.push_back(std::move(s));
        write_svg_file(out_path(cfg, "threshold_trajectory.svg"), "tau_e trajectory", series);
    }
    std::cout << "wrote reports under " << cfg.out_dir << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"risky-driving episode detection over 1 Hz telemetry"};
    app.require_subcommand(1);
    Options opt;
    app.add_option("--config", opt.config_path, "configuration file (key = value)");
    app.add_option("--set", opt.overrides, "override a config key (key=value, repeatable)");
    app.add_option("--out", opt.out_override, "output directory (overrides config)");

    auto* synth = app.add_subcommand("synth", "generate a synthetic telemetry dataset");
    auto* label = app.add_subcommand("label", "compute windows and risk labels");
    bool dump_windows = false;
    label->add_flag("--dump-windows", dump_windows, "also write windows.jsonl");
    std::string indicator_flag;
    label->add_option("--indicator", indicator_flag, "harsh | headway | unified");
    auto* split = app.add_subcommand("split", "group-aware train/val/test split");
    auto* optimize_cmd = app.add_subcommand("optimize", "bi-level hyperparameter + threshold search");
    optimize_cmd->add_option("--indicator", indicator_flag, "harsh | headway | unified");
    auto* train = app.add_subcommand("train", "fit default-config models at tau_init");
    auto* evaluate = app.add_subcommand("evaluate", "score trained models on the test partition");
    auto* report = app.add_subcommand("report", "render tables and plots from run artifacts");
    auto* config_cmd = app.add_subcommand("config", "print the effective configuration");
    bool defaults = false;
    config_cmd->add_flag("--defaults", defaults, "print built-in defaults and exit");

    CLI11_PARSE(app, argc, argv);
    if (!indicator_flag.empty()) opt.overrides.push_back("indicator=" + indicator_flag);

    try {
        if (synth->parsed()) return cmd_synth(opt);
        if (label->parsed()) return cmd_label(opt, dump_windows);
        if (split->parsed()) return cmd_split(opt);
        if (optimize_cmd->parsed()) return cmd_optimize(opt);
        if (train->parsed()) return cmd_train(opt);
        if (evaluate->parsed()) return cmd_evaluate(opt);
        if (report->parsed()) return cmd_report(opt);
        if (config_cmd->parsed()) return cmd_config(opt, defaults);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
