#ifndef RISKWINDOW_METRICS_HPP
#define RISKWINDOW_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace riskwindow {

struct ConfusionCounts {
    long tp = 0, fp = 0, fn = 0, tn = 0;

    long total() const { return tp + fp + fn + tn; }

    static ConfusionCounts from_pairs(std::span<const int> labels, std::span<const int> preds) {
        if (labels.size() != preds.size())
            throw std::invalid_argument("ConfusionCounts: size mismatch");
        ConfusionCounts c;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] && preds[i]) ++c.tp;
            else if (!labels[i] && preds[i]) ++c.fp;
            else if (labels[i] && !preds[i]) ++c.fn;
            else ++c.tn;
        }
        return c;
    }
};

struct MetricBundle {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double mcc = 0.0;
    double auc_pr = 0.0;
    double hm = 0.0;
    bool degenerate = false;  // some denominator was zero; affected metrics are 0

    std::string csv_header() const {
        return "accuracy,precision,recall,f1,mcc,auc_pr,hm,degenerate";
    }
    std::string csv_row() const {
        std::ostringstream os;
        os << accuracy << ',' << precision << ',' << recall << ',' << f1 << ',' << mcc << ','
           << auc_pr << ',' << hm << ',' << (degenerate ? 1 : 0);
        return os.str();
    }
};

// HM(Acc, F1); 0 when both inputs are 0.
inline double harmonic_mean(double a, double b) {
    if (a + b == 0.0) return 0.0;
    return 2.0 * a * b / (a + b);
}

// Accuracy, precision, recall and F1. Zero denominators yield 0 and set the
// degenerate flag.
inline MetricBundle basic_metrics(const ConfusionCounts& c) {
    if (c.total() == 0) throw std::invalid_argument("basic_metrics: all counts zero");
    MetricBundle m;
    m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
    if (c.tp + c.fp > 0) {
        m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    } else {
        m.degenerate = true;
    }
    if (c.tp + c.fn > 0) {
        m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    } else {
        m.degenerate = true;
    }
    if (m.precision + m.recall > 0.0) {
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    } else {
        m.degenerate = true;
    }
    m.hm = harmonic_mean(m.accuracy, m.f1);
    return m;
}

// Matthews correlation coefficient; 0 by convention when any factor of the
// radicand is zero.
inline double mcc(const ConfusionCounts& c, bool* degenerate = nullptr) {
    const double a = static_cast<double>(c.tp + c.fp);
    const double b = static_cast<double>(c.tp + c.fn);
    const double d = static_cast<double>(c.tn + c.fp);
    const double e = static_cast<double>(c.tn + c.fn);
    if (a == 0.0 || b == 0.0 || d == 0.0 || e == 0.0) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    const double num = static_cast<double>(c.tp) * static_cast<double>(c.tn) -
                       static_cast<double>(c.fp) * static_cast<double>(c.fn);
    return num / std::sqrt(a * b * d * e);
}

// Area under the precision-recall curve via step-wise (rectangular)
// integration over all distinct score thresholds, ties grouped. A point is
// predicted positive when its score >= threshold.
inline double auc_pr(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw std::invalid_argument("auc_pr: bad input sizes");
    long pos = 0;
    for (int y : labels) pos += y ? 1 : 0;
    if (pos == 0 || pos == static_cast<long>(labels.size()))
        throw std::invalid_argument("auc_pr: both classes must be present");

    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    double auc = 0.0;
    double prev_recall = 0.0;
    long tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        // Group tied scores: one threshold per distinct score.
        const double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            if (labels[order[i]]) ++tp;
            else ++fp;
            ++i;
        }
        const double recall = static_cast<double>(tp) / static_cast<double>(pos);
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        auc += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return auc;
}

inline MetricBundle full_metrics(std::span<const int> labels, std::span<const int> preds,
                                 std::span<const double> scores = {}) {
    auto c = ConfusionCounts::from_pairs(labels, preds);
    MetricBundle m = basic_metrics(c);
    bool deg = m.degenerate;
    m.mcc = mcc(c, &deg);
    if (!scores.empty()) {
        long pos = 0;
        for (int y : labels) pos += y ? 1 : 0;
        if (pos > 0 && pos < static_cast<long>(labels.size())) {
            m.auc_pr = auc_pr(scores, labels);
        } else {
            deg = true;
        }
    }
    m.degenerate = deg;
    return m;
}

}  // namespace riskwindow

#endif
