#ifndef RISKWINDOW_LEARNERS_TREE_HPP
#define RISKWINDOW_LEARNERS_TREE_HPP

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "riskwindow/common.hpp"
#include "riskwindow/dataset.hpp"

namespace riskwindow {

enum class SplitCriterion { Gini, Entropy, LogLoss };

inline SplitCriterion criterion_from_name(const std::string& s) {
    if (s == "gini") return SplitCriterion::Gini;
    if (s == "entropy") return SplitCriterion::Entropy;
    if (s == "log_loss") return SplitCriterion::LogLoss;
    throw std::invalid_argument("unknown split criterion: " + s);
}

inline double node_impurity(SplitCriterion c, double pos_frac) {
    const double p = pos_frac, q = 1.0 - pos_frac;
    if (c == SplitCriterion::Gini) return 1.0 - p * p - q * q;
    // entropy and log_loss coincide for binary node impurity
    double h = 0.0;
    if (p > 0.0) h -= p * std::log(p);
    if (q > 0.0) h -= q * std::log(q);
    return h;
}

enum class MaxFeatures { All, Sqrt, Log2 };

inline MaxFeatures max_features_from_name(const std::string& s) {
    if (s == "none" || s == "None" || s.empty()) return MaxFeatures::All;
    if (s == "sqrt") return MaxFeatures::Sqrt;
    if (s == "log2") return MaxFeatures::Log2;
    throw std::invalid_argument("unknown max_features: " + s);
}

inline std::size_t resolve_max_features(MaxFeatures mf, std::size_t n_cols) {
    switch (mf) {
        case MaxFeatures::All: return n_cols;
        case MaxFeatures::Sqrt:
            return std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(n_cols))));
        case MaxFeatures::Log2:
            return std::max<std::size_t>(1, static_cast<std::size_t>(std::log2(static_cast<double>(n_cols))));
    }
    return n_cols;
}

// CART-style binary classification tree. Leaves store the positive-class
// fraction of their training samples.
class ClassificationTree {
public:
    struct Node {
        int feature = -1;  // -1 for leaf
        double threshold = 0.0;
        int left = -1, right = -1;
        double pos_frac = 0.0;
    };

    struct Params {
        int max_depth = 20;
        int min_samples_split = 2;
        int min_samples_leaf = 1;
        MaxFeatures max_features = MaxFeatures::Sqrt;
        SplitCriterion criterion = SplitCriterion::Gini;
    };

    void fit(const Dataset& data, std::span<const std::size_t> sample_idx, const Params& p, Rng& rng,
             std::vector<double>* impurity_importance = nullptr) {
        nodes_.clear();
        std::vector<std::size_t> idx(sample_idx.begin(), sample_idx.end());
        build(data, idx, p, rng, 0, impurity_importance);
    }

    double predict_pos_frac(std::span<const double> row) const {
        int n = 0;
        while (nodes_[static_cast<std::size_t>(n)].feature >= 0) {
            const auto& nd = nodes_[static_cast<std::size_t>(n)];
            n = row[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
        }
        return nodes_[static_cast<std::size_t>(n)].pos_frac;
    }

    int vote(std::span<const double> row) const { return predict_pos_frac(row) > 0.5 ? 1 : 0; }

    const std::vector<Node>& nodes() const { return nodes_; }
    std::vector<Node>& nodes() { return nodes_; }

private:
    std::vector<Node> nodes_;

    int build(const Dataset& d, std::vector<std::size_t>& idx, const Params& p, Rng& rng, int depth,
              std::vector<double>* importance) {
        const int node_id = static_cast<int>(nodes_.size());
        nodes_.push_back({});
        long pos = 0;
        for (std::size_t i : idx) pos += d.y[i];
        const double pos_frac = static_cast<double>(pos) / static_cast<double>(idx.size());
        nodes_[static_cast<std::size_t>(node_id)].pos_frac = pos_frac;

        const bool pure = pos == 0 || pos == static_cast<long>(idx.size());
        if (pure || depth >= p.max_depth || static_cast<int>(idx.size()) < p.min_samples_split)
            return node_id;

        // Candidate features for this node.
        std::vector<std::size_t> feats(d.n_cols);
        for (std::size_t j = 0; j < d.n_cols; ++j) feats[j] = j;
        const std::size_t k = resolve_max_features(p.max_features, d.n_cols);
        if (k < d.n_cols) {
            std::shuffle(feats.begin(), feats.end(), rng);
            feats.resize(k);
        }

        const double parent_imp = node_impurity(p.criterion, pos_frac);
        double best_gain = 0.0;
        int best_feat = -1;
        double best_thr = 0.0;

        std::vector<std::pair<double, int>> vals(idx.size());
        for (std::size_t f : feats) {
            for (std::size_t i = 0; i < idx.size(); ++i)
                vals[i] = {d.at(idx[i], f), d.y[idx[i]]};
            std::sort(vals.begin(), vals.end());
            long left_pos = 0;
            for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
                left_pos += vals[i].second;
                if (vals[i].first == vals[i + 1].first) continue;
                const long nl = static_cast<long>(i) + 1;
                const long nr = static_cast<long>(vals.size()) - nl;
                if (nl < p.min_samples_leaf || nr < p.min_samples_leaf) continue;
                const double pl = static_cast<double>(left_pos) / static_cast<double>(nl);
                const double pr = static_cast<double>(pos - left_pos) / static_cast<double>(nr);
                const double wl = static_cast<double>(nl) / static_cast<double>(vals.size());
                const double gain = parent_imp - wl * node_impurity(p.criterion, pl) -
                                    (1.0 - wl) * node_impurity(p.criterion, pr);
                if (gain > best_gain + 1e-15) {
                    best_gain = gain;
                    best_feat = static_cast<int>(f);
                    best_thr = 0.5 * (vals[i].first + vals[i + 1].first);
                }
            }
        }
        if (best_feat < 0) return node_id;

        if (importance)
            (*importance)[static_cast<std::size_t>(best_feat)] +=
                best_gain * static_cast<double>(idx.size());

        std::vector<std::size_t> left_idx, right_idx;
        for (std::size_t i : idx)
            (d.at(i, static_cast<std::size_t>(best_feat)) <= best_thr ? left_idx : right_idx).push_back(i);
        idx.clear();
        idx.shrink_to_fit();

        nodes_[static_cast<std::size_t>(node_id)].feature = best_feat;
        nodes_[static_cast<std::size_t>(node_id)].threshold = best_thr;
        const int l = build(d, left_idx, p, rng, depth + 1, importance);
        nodes_[static_cast<std::size_t>(node_id)].left = l;
        const int r = build(d, right_idx, p, rng, depth + 1, importance);
        nodes_[static_cast<std::size_t>(node_id)].right = r;
        return node_id;
    }
};

}  // namespace riskwindow

#endif
