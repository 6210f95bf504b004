#ifndef RISKWINDOW_LEARNERS_GBT_HPP
#define RISKWINDOW_LEARNERS_GBT_HPP

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "riskwindow/learners/classifier.hpp"
#include "riskwindow/common.hpp"

namespace riskwindow {

struct GBTConfig {
    int n_estimators = 200;
    double learning_rate = 0.1;
    int max_depth = 6;
    double subsample = 0.8;
    double colsample_bytree = 0.8;
    double gamma = 0.0;       // minimum gain to accept a split
    double reg_lambda = 1.0;  // L2 on leaf weights
    double reg_alpha = 0.0;   // L1 on leaf weights
    int early_stopping_rounds = 10;
    std::uint64_t seed = 0;
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Additive regression trees on logistic loss with second-order split gains.
// A boosting round whose root accepts no split contributes nothing, so a
// prohibitive gamma collapses the model to the intercept.
class GradientBoostedTrees : public Classifier {
public:
    struct Node {
        int feature = -1;
        double threshold = 0.0;
        int left = -1, right = -1;
        double weight = 0.0;  // leaf output before learning rate
    };
    struct Tree {
        std::vector<Node> nodes;
        double predict(std::span<const double> row) const {
            int n = 0;
            while (nodes[static_cast<std::size_t>(n)].feature >= 0) {
                const auto& nd = nodes[static_cast<std::size_t>(n)];
                n = row[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
            }
            return nodes[static_cast<std::size_t>(n)].weight;
        }
    };

    explicit GradientBoostedTrees(GBTConfig cfg = {}) : cfg_(std::move(cfg)) {}

    void fit(const Dataset& train, const Dataset& val) override {
        if (train.n_rows == 0) throw std::invalid_argument("GBT: empty training data");
        trees_.clear();
        importance_.assign(train.n_cols, 0.0);
        val_logloss_trace_.clear();
        probe_stage_proba_.clear();

        const long pos = train.positives();
        degenerate_ = pos == 0 || pos == static_cast<long>(train.n_rows);
        const double prior =
            std::clamp(static_cast<double>(pos) / static_cast<double>(train.n_rows), 1e-6, 1.0 - 1e-6);
        intercept_ = std::log(prior / (1.0 - prior));
        if (degenerate_) warning_ = "single-class training data; intercept-only model";

        std::vector<double> train_margin(train.n_rows, intercept_);
        std::vector<double> val_margin(val.n_rows, intercept_);
        double best_val = val.n_rows ? logloss(val_margin, val.y) : 0.0;
        int since_improve = 0;

        for (int m = 0; m < cfg_.n_estimators && !degenerate_; ++m) {
            Rng rng(split_seed(cfg_.seed, static_cast<std::uint64_t>(m)));
            // Row subsample without replacement.
            std::vector<std::size_t> rows(train.n_rows);
            for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
            if (cfg_.subsample < 1.0) {
                std::shuffle(rows.begin(), rows.end(), rng);
                rows.resize(std::max<std::size_t>(
                    1, static_cast<std::size_t>(cfg_.subsample * static_cast<double>(train.n_rows))));
            }
            // Feature subsample per tree.
            std::vector<std::size_t> feats(train.n_cols);
            for (std::size_t j = 0; j < feats.size(); ++j) feats[j] = j;
            if (cfg_.colsample_bytree < 1.0) {
                std::shuffle(feats.begin(), feats.end(), rng);
                feats.resize(std::max<std::size_t>(
                    1, static_cast<std::size_t>(cfg_.colsample_bytree * static_cast<double>(train.n_cols))));
            }

            std::vector<double> g(rows.size()), h(rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i) {
                const double p = sigmoid(train_margin[rows[i]]);
                g[i] = p - static_cast<double>(train.y[rows[i]]);
                h[i] = std::max(p * (1.0 - p), 1e-16);
            }

            Tree tree;
            std::vector<std::size_t> local(rows.size());
            for (std::size_t i = 0; i < local.size(); ++i) local[i] = i;
            build(tree, train, rows, local, g, h, feats, 0);
            if (tree.nodes.size() <= 1) continue;  // no split accepted this round

            for (std::size_t i = 0; i < train.n_rows; ++i)
                train_margin[i] += cfg_.learning_rate * tree.predict(train.row(i));
            for (std::size_t i = 0; i < val.n_rows; ++i)
                val_margin[i] += cfg_.learning_rate * tree.predict(val.row(i));
            trees_.push_back(std::move(tree));

            if (val.n_rows) {
                const double ll = logloss(val_margin, val.y);
                val_logloss_trace_.push_back(ll);
                if (ll < best_val - 1e-9) {
                    best_val = ll;
                    since_improve = 0;
                } else if (++since_improve >= cfg_.early_stopping_rounds) {
                    break;
                }
            }
        }

        double total = 0.0;
        for (double v : importance_) total += v;
        if (total > 0.0)
            for (double& v : importance_) v /= total;
        probe_.capture(*this, train);
        capture_probe_stages();
    }

    std::vector<double> predict_proba(const Dataset& data) const override {
        return staged_proba(data, trees_.size());
    }

    // Probability using only the first `m` boosting rounds.
    std::vector<double> staged_proba(const Dataset& data, std::size_t m) const {
        m = std::min(m, trees_.size());
        std::vector<double> out(data.n_rows);
        for (std::size_t i = 0; i < data.n_rows; ++i) {
            double margin = intercept_;
            for (std::size_t t = 0; t < m; ++t)
                margin += cfg_.learning_rate * trees_[t].predict(data.row(i));
            out[i] = sigmoid(margin);
        }
        return out;
    }

    std::string kind() const override { return "gbt"; }
    std::optional<std::vector<double>> importance() const override { return importance_; }

    double intercept() const { return intercept_; }
    std::size_t n_rounds() const { return trees_.size(); }
    const std::vector<double>& val_logloss_trace() const { return val_logloss_trace_; }
    // Per-stage probe probabilities recorded incrementally during fit.
    const std::vector<std::vector<double>>& probe_stage_proba() const { return probe_stage_proba_; }
    const ProbeBatch& probe() const { return probe_; }
    const std::string& warning() const { return warning_; }

    void save(std::ostream& os) const override {
        os << "riskwindow-model v1\n";
        os << "kind gbt\n";
        os << "seed " << cfg_.seed << '\n';
        os << "config " << cfg_.n_estimators << ' ' << artifact::fmt(cfg_.learning_rate) << ' '
           << cfg_.max_depth << ' ' << artifact::fmt(cfg_.subsample) << ' '
           << artifact::fmt(cfg_.colsample_bytree) << ' ' << artifact::fmt(cfg_.gamma) << ' '
           << artifact::fmt(cfg_.reg_lambda) << ' ' << artifact::fmt(cfg_.reg_alpha) << ' '
           << cfg_.early_stopping_rounds << '\n';
        os << "intercept " << artifact::fmt(intercept_) << '\n';
        artifact::write_vector(os, "importance", importance_);
        os << "n_trees " << trees_.size() << '\n';
        for (const auto& t : trees_) {
            os << "tree " << t.nodes.size() << '\n';
            for (const auto& n : t.nodes)
                os << n.feature << ' ' << artifact::fmt(n.threshold) << ' ' << n.left << ' '
                   << n.right << ' ' << artifact::fmt(n.weight) << '\n';
        }
        probe_.save(os);
        os << "end\n";
    }

    void load(std::istream& is) override {
        artifact::Reader r(is);
        r.expect("riskwindow-model v1");
        if (r.read_string("kind") != "gbt") throw std::runtime_error("not a gbt artifact");
        cfg_.seed = static_cast<std::uint64_t>(r.read_long("seed"));
        {
            std::istringstream ss(r.read_string("config"));
            std::string lr, sub, col, gm, l2, l1;
            ss >> cfg_.n_estimators >> lr >> cfg_.max_depth >> sub >> col >> gm >> l2 >> l1 >>
                cfg_.early_stopping_rounds;
            cfg_.learning_rate = std::strtod(lr.c_str(), nullptr);
            cfg_.subsample = std::strtod(sub.c_str(), nullptr);
            cfg_.colsample_bytree = std::strtod(col.c_str(), nullptr);
            cfg_.gamma = std::strtod(gm.c_str(), nullptr);
            cfg_.reg_lambda = std::strtod(l2.c_str(), nullptr);
            cfg_.reg_alpha = std::strtod(l1.c_str(), nullptr);
        }
        intercept_ = r.read_double("intercept");
        importance_ = r.read_vector("importance");
        const long nt = r.read_long("n_trees");
        trees_.assign(static_cast<std::size_t>(nt), {});
        for (auto& t : trees_) {
            const long nn = r.read_long("tree");
            t.nodes.resize(static_cast<std::size_t>(nn));
            for (auto& n : t.nodes) {
                std::istringstream ss(r.next_line());
                std::string thr, w;
                ss >> n.feature >> thr >> n.left >> n.right >> w;
                n.threshold = std::strtod(thr.c_str(), nullptr);
                n.weight = std::strtod(w.c_str(), nullptr);
            }
        }
        probe_.load(r);
        r.expect("end");
    }

private:
    GBTConfig cfg_;
    std::vector<Tree> trees_;
    double intercept_ = 0.0;
    std::vector<double> importance_;
    std::vector<double> val_logloss_trace_;
    std::vector<std::vector<double>> probe_stage_proba_;
    bool degenerate_ = false;
    std::string warning_;
    ProbeBatch probe_;

    static double logloss(const std::vector<double>& margins, const std::vector<int>& y) {
        double ll = 0.0;
        for (std::size_t i = 0; i < margins.size(); ++i) {
            const double p = std::clamp(sigmoid(margins[i]), 1e-12, 1.0 - 1e-12);
            ll -= y[i] ? std::log(p) : std::log(1.0 - p);
        }
        return ll / static_cast<double>(margins.size());
    }

    double soft(double grad_sum) const {
        const double a = cfg_.reg_alpha;
        if (grad_sum > a) return grad_sum - a;
        if (grad_sum < -a) return grad_sum + a;
        return 0.0;
    }
    double leaf_score(double grad_sum, double hess_sum) const {
        const double t = soft(grad_sum);
        return t * t / (hess_sum + cfg_.reg_lambda);
    }
    double leaf_weight(double grad_sum, double hess_sum) const {
        return -soft(grad_sum) / (hess_sum + cfg_.reg_lambda);
    }

    int build(Tree& tree, const Dataset& d, const std::vector<std::size_t>& rows,
              std::vector<std::size_t>& local, const std::vector<double>& g,
              const std::vector<double>& h, const std::vector<std::size_t>& feats, int depth) {
        const int node_id = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back({});
        double gsum = 0.0, hsum = 0.0;
        for (std::size_t i : local) {
            gsum += g[i];
            hsum += h[i];
        }
        tree.nodes[static_cast<std::size_t>(node_id)].weight = leaf_weight(gsum, hsum);
        if (depth >= cfg_.max_depth || local.size() < 2) return node_id;

        const double parent_score = leaf_score(gsum, hsum);
        double best_gain = 0.0;
        int best_feat = -1;
        double best_thr = 0.0;

        std::vector<std::pair<double, std::size_t>> vals(local.size());
        for (std::size_t f : feats) {
            for (std::size_t i = 0; i < local.size(); ++i)
                vals[i] = {d.at(rows[local[i]], f), local[i]};
            std::sort(vals.begin(), vals.end());
            double gl = 0.0, hl = 0.0;
            for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
                gl += g[vals[i].second];
                hl += h[vals[i].second];
                if (vals[i].first == vals[i + 1].first) continue;
                const double gain =
                    0.5 * (leaf_score(gl, hl) + leaf_score(gsum - gl, hsum - hl) - parent_score) -
                    cfg_.gamma;
                if (gain > best_gain + 1e-15) {
                    best_gain = gain;
                    best_feat = static_cast<int>(f);
                    best_thr = 0.5 * (vals[i].first + vals[i + 1].first);
                }
            }
        }
        if (best_feat < 0 || best_gain <= 0.0) return node_id;

        importance_[static_cast<std::size_t>(best_feat)] += best_gain;

        std::vector<std::size_t> left_idx, right_idx;
        for (std::size_t i : local)
            (d.at(rows[i], static_cast<std::size_t>(best_feat)) <= best_thr ? left_idx : right_idx)
                .push_back(i);
        local.clear();
        local.shrink_to_fit();

        tree.nodes[static_cast<std::size_t>(node_id)].feature = best_feat;
        tree.nodes[static_cast<std::size_t>(node_id)].threshold = best_thr;
        const int l = build(tree, d, rows, left_idx, g, h, feats, depth + 1);
        tree.nodes[static_cast<std::size_t>(node_id)].left = l;
        const int rr = build(tree, d, rows, right_idx, g, h, feats, depth + 1);
        tree.nodes[static_cast<std::size_t>(node_id)].right = rr;
        return node_id;
    }

    void capture_probe_stages() {
        probe_stage_proba_.clear();
        const Dataset pd = probe_.as_dataset();
        for (std::size_t m = 0; m <= trees_.size(); ++m)
            probe_stage_proba_.push_back(staged_proba(pd, m));
    }
};

}  // namespace riskwindow

#endif
