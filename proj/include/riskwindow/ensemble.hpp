#ifndef RISKWINDOW_ENSEMBLE_HPP
#define RISKWINDOW_ENSEMBLE_HPP

#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "riskwindow/features.hpp"
#include "riskwindow/labeling.hpp"
#include "riskwindow/learners/classifier.hpp"
#include "riskwindow/metrics.hpp"

namespace riskwindow {

struct EnsembleMember {
    std::shared_ptr<const Classifier> model;
    double tau = 0.5;     // member decision threshold tau_{e_i}
    double lambda = 0.0;  // confidence weight
    std::string name;
};

// lambda_i = mean predicted positive-class probability over validation data.
inline double confidence_weight(const Classifier& model, const Dataset& validation) {
    if (validation.n_rows == 0) throw std::invalid_argument("confidence_weight: empty validation data");
    const auto p = model.predict_proba(validation);
    double acc = 0.0;
    for (double v : p) acc += v;
    return acc / static_cast<double>(p.size());
}

// Weighted majority vote: 1 iff sum(lambda_i * p_i) / sum(lambda_i) >= 0.5,
// inclusive at the boundary.
inline std::vector<int> ensemble_vote(const std::vector<EnsembleMember>& members,
                                      const Dataset& data) {
    if (members.empty()) throw std::invalid_argument("ensemble_vote: no members");
    double total = 0.0;
    for (const auto& m : members) total += m.lambda;
    if (!(total > 0.0)) throw std::invalid_argument("ensemble_vote: all-zero weights");

    std::vector<double> weighted(data.n_rows, 0.0);
    for (const auto& m : members) {
        const auto votes = m.model->predict(data, m.tau);
        for (std::size_t i = 0; i < data.n_rows; ++i)
            weighted[i] += m.lambda * static_cast<double>(votes[i]);
    }
    std::vector<int> out(data.n_rows);
    for (std::size_t i = 0; i < data.n_rows; ++i) out[i] = weighted[i] / total >= 0.5 ? 1 : 0;
    return out;
}

inline bool ensemble_vote_row(const std::vector<EnsembleMember>& members,
                              const std::vector<double>& row) {
    Dataset d;
    d.n_cols = row.size();
    d.push_row(row, 0);
    return ensemble_vote(members, d)[0] == 1;
}

inline std::vector<double> ensemble_threshold_grid(double lo = 0.05, double hi = 0.95,
                                                   double step = 0.01) {
    std::vector<double> grid;
    for (int i = 0;; ++i) {
        const double tau = lo + i * step;
        if (tau > hi + 1e-12) break;
        grid.push_back(tau);
    }
    return grid;
}

struct GridPoint {
    double tau = 0.0;
    double hm = 0.0;
};

struct EnsembleThresholdResult {
    double tau_star = 0.0;
    double hm = 0.0;
    std::vector<GridPoint> grid;  // full HM-vs-tau table
};

// Grid sweep: every member votes at the candidate tau, validation windows
// are relabeled at it, and the candidate with the highest HM wins; ties break
// toward the smaller tau.
inline EnsembleThresholdResult select_ensemble_threshold(std::vector<EnsembleMember> members,
                                                         const Dataset& val_x,
                                                         const std::vector<WindowView>& val_views,
                                                         const HeadwayScoreParams& hdw_params,
                                                         IndicatorMode mode,
                                                         const std::vector<double>& grid) {
    if (grid.empty()) throw std::invalid_argument("select_ensemble_threshold: empty grid");
    if (val_x.n_rows != val_views.size())
        throw std::invalid_argument("select_ensemble_threshold: feature/view count mismatch");
    EnsembleThresholdResult res;
    res.hm = -1.0;
    for (double tau : grid) {
        for (auto& m : members) m.tau = tau;
        const auto preds = ensemble_vote(members, val_x);
        const auto labels = label_views(val_views, tau, hdw_params, mode);
        const auto metrics = basic_metrics(ConfusionCounts::from_pairs(labels, preds));
        res.grid.push_back({tau, metrics.hm});
        if (metrics.hm > res.hm + 1e-12) {  // strict improvement: ties keep the smaller tau
            res.hm = metrics.hm;
            res.tau_star = tau;
        }
    }
    return res;
}

// Ensemble artifact: member references, weights, tau_e*, and the grid table.
inline void write_ensemble_csv(std::ostream& os, const std::vector<EnsembleMember>& members,
                               const EnsembleThresholdResult& res, const std::string& config_hash,
                               std::uint64_t seed) {
    os << "# config_hash=" << config_hash << " seed=" << seed << '\n';
    os << "section,name,value1,value2\n";
    for (const auto& m : members)
        os << "member," << m.name << ',' << m.lambda << ',' << m.tau << '\n';
    os << "tau_star,," << res.tau_star << ',' << res.hm << '\n';
    for (const auto& g : res.grid) os << "grid,," << g.tau << ',' << g.hm << '\n';
}

}  // namespace riskwindow

#endif
