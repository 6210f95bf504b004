#ifndef RISKWINDOW_PIPELINE_HPP
#define RISKWINDOW_PIPELINE_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "riskwindow/common.hpp"
#include "riskwindow/dataset.hpp"
#include "riskwindow/learners/classifier.hpp"
#include "riskwindow/telemetry.hpp"

namespace riskwindow {

// --- group-aware split ----------------------------------------------------

struct SplitSpec {
    double train_frac = 0.70;
    double val_frac = 0.15;
    double test_frac = 0.15;
    std::uint64_t seed = 0;

    void check() const {
        if (!(train_frac > 0.0 && val_frac > 0.0 && test_frac > 0.0))
            throw std::invalid_argument("SplitSpec: fractions must be positive");
        if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
            throw std::invalid_argument("SplitSpec: fractions must sum to 1");
    }
};

struct GroupSplit {
    std::vector<std::string> train, val, test;  // driver ids per partition

    int partition_of(const std::string& driver) const {
        auto in = [&](const std::vector<std::string>& v) {
            return std::find(v.begin(), v.end(), driver) != v.end();
        };
        if (in(train)) return 0;
        if (in(val)) return 1;
        if (in(test)) return 2;
        return -1;
    }
};

// Whole-driver assignment: drivers are placed largest-volume first into the
// partition with the largest remaining volume deficit, so realised fractions
// track the spec as closely as whole-driver packing permits.
inline GroupSplit group_split(const std::vector<std::pair<std::string, std::size_t>>& driver_volumes,
                              const SplitSpec& spec) {
    spec.check();
    if (driver_volumes.size() < 3)
        throw std::invalid_argument("group_split: need at least 3 drivers");

    std::vector<std::pair<std::string, std::size_t>> drivers = driver_volumes;
    // Canonical order first so the outcome is independent of input order,
    // then a seeded shuffle decides ties among equal volumes (stable sort).
    std::sort(drivers.begin(), drivers.end());
    Rng rng(split_seed(spec.seed, 0x517));
    std::shuffle(drivers.begin(), drivers.end(), rng);
    std::stable_sort(drivers.begin(), drivers.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });

    double total = 0.0;
    for (const auto& [id, vol] : drivers) total += static_cast<double>(vol);
    const double targets[3] = {spec.train_frac * total, spec.val_frac * total,
                               spec.test_frac * total};
    double assigned[3] = {0.0, 0.0, 0.0};
    GroupSplit out;
    std::vector<std::string>* parts[3] = {&out.train, &out.val, &out.test};

    for (const auto& [id, vol] : drivers) {
        int best = 0;
        double best_deficit = -1e300;
        for (int p = 0; p < 3; ++p) {
            const double deficit = targets[p] - assigned[p];
            if (deficit > best_deficit + 1e-12) {
                best_deficit = deficit;
                best = p;
            }
        }
        parts[best]->push_back(id);
        assigned[best] += static_cast<double>(vol);
    }

    // No partition may end up empty; borrow from the fullest one.
    for (int p = 0; p < 3; ++p) {
        if (!parts[p]->empty()) continue;
        int donor = 0;
        for (int q = 1; q < 3; ++q)
            if (parts[q]->size() > parts[donor]->size()) donor = q;
        if (parts[donor]->size() >= 2) {
            parts[p]->push_back(parts[donor]->back());
            parts[donor]->pop_back();
        }
    }
    return out;
}

// --- SMOTE ------------------------------------------------------------------

// Synthetic minority oversampling: each synthetic row interpolates between a
// minority row and one of its k nearest minority neighbours (Euclidean on
// standardised numeric features). Columns listed in `categorical` are copied
// from the seed row instead of interpolated.
inline std::vector<std::vector<double>> smote(const std::vector<std::vector<double>>& minority,
                                              int k_neighbors, std::size_t n_synthetic,
                                              std::uint64_t seed,
                                              const std::set<std::size_t>& categorical = {},
                                              Diagnostics* diags = nullptr) {
    std::vector<std::vector<double>> out;
    if (minority.empty() || n_synthetic == 0) return out;
    const std::size_t n = minority.size();
    const std::size_t d = minority.front().size();
    Rng rng(split_seed(seed, 0x5307E));

    if (static_cast<int>(n) <= k_neighbors || n < 2) {
        if (diags)
            diags->push_back({"smote_fallback", "", "", -1,
                              "too few minority rows for k=" + std::to_string(k_neighbors) +
                                  "; duplicating instead of interpolating"});
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        for (std::size_t s = 0; s < n_synthetic; ++s) out.push_back(minority[pick(rng)]);
        return out;
    }

    std::vector<double> mean(d, 0.0), sd(d, 0.0);
    for (const auto& row : minority)
        for (std::size_t j = 0; j < d; ++j) mean[j] += row[j];
    for (auto& m : mean) m /= static_cast<double>(n);
    for (const auto& row : minority)
        for (std::size_t j = 0; j < d; ++j) sd[j] += (row[j] - mean[j]) * (row[j] - mean[j]);
    for (auto& s : sd) {
        s = std::sqrt(s / static_cast<double>(n));
        if (s < 1e-12) s = 1.0;
    }
    auto dist2 = [&](std::size_t a, std::size_t b) {
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double dv = (minority[a][j] - minority[b][j]) / sd[j];
            acc += dv * dv;
        }
        return acc;
    };

    // k nearest minority neighbours per row.
    std::vector<std::vector<std::size_t>> nn(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::pair<double, std::size_t>> ds;
        ds.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) ds.push_back({dist2(i, j), j});
        std::partial_sort(ds.begin(), ds.begin() + k_neighbors, ds.end());
        for (int k = 0; k < k_neighbors; ++k) nn[i].push_back(ds[static_cast<std::size_t>(k)].second);
    }

    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::uniform_int_distribution<std::size_t> pick_nn(0, static_cast<std::size_t>(k_neighbors) - 1);
    std::uniform_real_distribution<double> lambda(0.0, 1.0);
    for (std::size_t s = 0; s < n_synthetic; ++s) {
        const std::size_t i = pick(rng);
        const std::size_t j = nn[i][pick_nn(rng)];
        const double lam = lambda(rng);
        std::vector<double> row(d);
        for (std::size_t c = 0; c < d; ++c) {
            if (categorical.count(c)) {
                row[c] = minority[i][c];
            } else {
                row[c] = minority[i][c] + lam * (minority[j][c] - minority[i][c]);
            }
        }
        out.push_back(std::move(row));
    }
    return out;
}

// --- Monte-Carlo Shapley ----------------------------------------------------

struct ShapleyResult {
    std::vector<double> mean_abs;             // per-feature score
    std::vector<double> std_err;              // MC standard error of the mean attribution
    std::vector<std::vector<double>> per_row; // mean attribution per explain row x feature
    std::vector<double> explain_pred;         // f(x) per explain row
    double background_mean_pred = 0.0;
};

// Permutation-sampling Shapley on predict_proba, marginalising absent
// features with background substitution. One background row is drawn per
// permutation, so each permutation's attributions telescope to
// f(x) - f(background).
inline ShapleyResult shapley_importance(const Classifier& model, const Dataset& background,
                                        const Dataset& explain, int n_permutations,
                                        std::uint64_t seed) {
    if (background.n_rows == 0 || explain.n_rows == 0)
        throw std::invalid_argument("shapley_importance: empty sample");
    if (n_permutations < 1)
        throw std::invalid_argument("shapley_importance: n_permutations must be >= 1");
    const std::size_t d = explain.n_cols;

    ShapleyResult res;
    res.mean_abs.assign(d, 0.0);
    res.std_err.assign(d, 0.0);
    res.per_row.assign(explain.n_rows, std::vector<double>(d, 0.0));
    res.explain_pred = model.predict_proba(explain);
    {
        auto bp = model.predict_proba(background);
        res.background_mean_pred = mean(bp);
    }

    std::vector<double> sq_accum(d, 0.0);  // across all (row, perm) samples
    const double n_samples = static_cast<double>(explain.n_rows) * n_permutations;

    for (std::size_t r = 0; r < explain.n_rows; ++r) {
        Rng rng(split_seed(seed, r));
        std::uniform_int_distribution<std::size_t> pick_bg(0, background.n_rows - 1);
        std::vector<std::size_t> perm(d);
        for (std::size_t j = 0; j < d; ++j) perm[j] = j;

        // Batch all evaluation points of this row into one predict call.
        Dataset eval;
        eval.n_cols = d;
        std::vector<std::vector<std::size_t>> perms;
        for (int p = 0; p < n_permutations; ++p) {
            std::shuffle(perm.begin(), perm.end(), rng);
            perms.push_back(perm);
            const auto bg = background.row(pick_bg(rng));
            std::vector<double> cur(bg.begin(), bg.end());
            // point 0: pure background; point j: first j features of the
            // permutation replaced by the explained row's values.
            eval.x.insert(eval.x.end(), cur.begin(), cur.end());
            for (std::size_t j = 0; j < d; ++j) {
                cur[perm[j]] = explain.at(r, perm[j]);
                eval.x.insert(eval.x.end(), cur.begin(), cur.end());
            }
        }
        eval.n_rows = eval.x.size() / d;
        const auto preds = model.predict_proba(eval);

        for (int p = 0; p < n_permutations; ++p) {
            const std::size_t base = static_cast<std::size_t>(p) * (d + 1);
            for (std::size_t j = 0; j < d; ++j) {
                const double contrib = preds[base + j + 1] - preds[base + j];
                const std::size_t feat = perms[static_cast<std::size_t>(p)][j];
                res.per_row[r][feat] += contrib / n_permutations;
                sq_accum[feat] += contrib * contrib;
            }
        }
    }

    std::vector<double> mean_attr(d, 0.0);
    for (std::size_t r = 0; r < explain.n_rows; ++r)
        for (std::size_t j = 0; j < d; ++j) {
            res.mean_abs[j] += std::abs(res.per_row[r][j]) / static_cast<double>(explain.n_rows);
            mean_attr[j] += res.per_row[r][j] / static_cast<double>(explain.n_rows);
        }
    for (std::size_t j = 0; j < d; ++j) {
        const double var = std::max(0.0, sq_accum[j] / n_samples - mean_attr[j] * mean_attr[j]);
        res.std_err[j] = std::sqrt(var / n_samples);
    }
    return res;
}

// --- drift + feature selection ----------------------------------------------

// 1-D Wasserstein distance between empirical samples: quantile-function
// integral, reducing to the mean absolute difference of matched order
// statistics for equal sizes.
inline double wasserstein_1d(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("wasserstein_1d: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const std::size_t n = a.size(), m = b.size();
    double dist = 0.0;
    double q = 0.0;
    std::size_t i = 0, j = 0;
    while (i < n && j < m) {
        const double qa = static_cast<double>(i + 1) / static_cast<double>(n);
        const double qb = static_cast<double>(j + 1) / static_cast<double>(m);
        const double q_next = std::min(qa, qb);
        dist += (q_next - q) * std::abs(a[i] - b[j]);
        q = q_next;
        if (qa <= qb + 1e-15) ++i;
        if (qb <= qa + 1e-15) ++j;
    }
    return dist;
}

struct FeatureSelectionState {
    std::vector<std::string> candidate_pool;
    std::vector<std::string> selected;
    std::vector<double> scores;  // normalised mean |Shapley| per candidate
    double min_importance = 0.001;
    double tau_delta = 0.01;
    double wasserstein_delta = 0.05;
    bool has_last_tau = false;
    double last_tau = 0.0;
    // Training feature distributions (standardised) captured at selection time.
    std::vector<std::vector<double>> last_distributions;
    std::vector<double> last_mean, last_std;
};

// Keeps candidates whose normalised score strictly exceeds min_importance;
// an empty selection falls back to the single best feature.
inline void select_features(FeatureSelectionState& state, const std::vector<double>& raw_scores,
                            Diagnostics* diags = nullptr) {
    if (raw_scores.size() != state.candidate_pool.size())
        throw std::invalid_argument("select_features: score/pool size mismatch");
    double total = 0.0;
    for (double s : raw_scores) total += s;
    state.scores.assign(raw_scores.size(), 0.0);
    for (std::size_t i = 0; i < raw_scores.size(); ++i)
        state.scores[i] = total > 0.0 ? raw_scores[i] / total : 0.0;

    state.selected.clear();
    for (std::size_t i = 0; i < state.scores.size(); ++i)
        if (state.scores[i] > state.min_importance) state.selected.push_back(state.candidate_pool[i]);
    if (state.selected.empty()) {
        const std::size_t best = static_cast<std::size_t>(
            std::max_element(state.scores.begin(), state.scores.end()) - state.scores.begin());
        state.selected.push_back(state.candidate_pool[best]);
        if (diags)
            diags->push_back({"selection_fallback", "", "", -1,
                              "no feature exceeded min importance; keeping " +
                                  state.candidate_pool[best]});
    }
}

// Standardises each feature sample by the stored training mean/std before
// measuring drift, so the 0.05 trigger is scale-free.
inline bool should_reselect(const FeatureSelectionState& state, double new_tau,
                            const std::vector<std::vector<double>>& new_distributions,
                            std::string* reason = nullptr) {
    if (state.has_last_tau && std::abs(new_tau - state.last_tau) > state.tau_delta) {
        if (reason) *reason = "tau_shift";
        return true;
    }
    for (std::size_t f = 0; f < state.last_distributions.size() && f < new_distributions.size(); ++f) {
        if (state.last_distributions[f].empty() || new_distributions[f].empty()) continue;
        std::vector<double> cur = new_distributions[f];
        const double m = f < state.last_mean.size() ? state.last_mean[f] : 0.0;
        const double s = f < state.last_std.size() && state.last_std[f] > 1e-12 ? state.last_std[f] : 1.0;
        for (double& v : cur) v = (v - m) / s;
        if (wasserstein_1d(state.last_distributions[f], cur) > state.wasserstein_delta) {
            if (reason) *reason = "feature_drift";
            return true;
        }
    }
    if (reason) *reason = "none";
    return false;
}

// Snapshot of the current training distributions for later drift checks.
inline void capture_distributions(FeatureSelectionState& state, const Dataset& train,
                                  std::size_t max_samples = 2000) {
    state.last_mean.assign(train.n_cols, 0.0);
    state.last_std.assign(train.n_cols, 0.0);
    Standardizer sc;
    sc.fit(train);
    state.last_mean = sc.mean_;
    state.last_std = sc.std_;
    state.last_distributions.assign(train.n_cols, {});
    const std::size_t stride = std::max<std::size_t>(1, train.n_rows / max_samples);
    for (std::size_t j = 0; j < train.n_cols; ++j)
        for (std::size_t i = 0; i < train.n_rows; i += stride)
            state.last_distributions[j].push_back((train.at(i, j) - sc.mean_[j]) / sc.std_[j]);
}

}  // namespace riskwindow

#endif
