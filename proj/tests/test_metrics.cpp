#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "riskwindow/common.hpp"
#include "riskwindow/metrics.hpp"

using namespace riskwindow;

namespace {

// Independent AUC-PR: for every distinct score threshold, recount the whole
// confusion table from scratch and rectangle-integrate in recall order.
double brute_auc_pr(const std::vector<double>& scores, const std::vector<int>& labels) {
    std::set<double, std::greater<double>> thresholds(scores.begin(), scores.end());
    long pos = 0;
    for (int y : labels) pos += y ? 1 : 0;
    double auc = 0.0, prev_recall = 0.0;
    for (double thr : thresholds) {
        long tp = 0, fp = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            if (scores[i] >= thr) {
                if (labels[i]) ++tp;
                else ++fp;
            }
        }
        const double recall = static_cast<double>(tp) / static_cast<double>(pos);
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        auc += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return auc;
}

void check_published_row(double f1, double acc, double prec, double rec, double hm) {
    CHECK(2.0 * prec * rec / (prec + rec) == Catch::Approx(f1).margin(0.0015));
    CHECK(harmonic_mean(acc, f1) == Catch::Approx(hm).margin(0.0015));
}

}  // namespace

TEST_CASE("confusion counts from pairs") {
    std::vector<int> labels{1, 1, 0, 0, 1, 0};
    std::vector<int> preds{1, 0, 1, 0, 1, 0};
    auto c = ConfusionCounts::from_pairs(labels, preds);
    CHECK(c.tp == 2);
    CHECK(c.fn == 1);
    CHECK(c.fp == 1);
    CHECK(c.tn == 2);
    CHECK_THROWS(ConfusionCounts::from_pairs(labels, std::vector<int>{1}));
}

TEST_CASE("basic metrics on a hand-worked table") {
    ConfusionCounts c{4, 3, 4, 9};  // tp, fp, fn, tn
    auto m = basic_metrics(c);
    CHECK(m.accuracy == Catch::Approx(13.0 / 20.0));
    CHECK(m.precision == Catch::Approx(4.0 / 7.0));
    CHECK(m.recall == Catch::Approx(0.5));
    CHECK(m.f1 == Catch::Approx(8.0 / 15.0));
    CHECK(m.hm == Catch::Approx(2.0 * 0.65 * (8.0 / 15.0) / (0.65 + 8.0 / 15.0)));
    CHECK_FALSE(m.degenerate);
}

TEST_CASE("MCC hand value and conventions") {
    ConfusionCounts c{4, 3, 4, 9};
    CHECK(mcc(c) == Catch::Approx(24.0 / std::sqrt(7.0 * 8.0 * 12.0 * 13.0)));

    bool deg = false;
    ConfusionCounts no_pred_pos{0, 0, 5, 5};
    CHECK(mcc(no_pred_pos, &deg) == 0.0);
    CHECK(deg);

    ConfusionCounts perfect{5, 0, 0, 5};
    CHECK(mcc(perfect) == Catch::Approx(1.0));
    ConfusionCounts inverted{0, 5, 5, 0};
    CHECK(mcc(inverted) == Catch::Approx(-1.0));
}

TEST_CASE("degenerate denominators zero the metric and set the flag") {
    ConfusionCounts none_predicted{0, 0, 3, 7};
    auto m = basic_metrics(none_predicted);
    CHECK(m.precision == 0.0);
    CHECK(m.f1 == 0.0);
    CHECK(m.degenerate);

    ConfusionCounts no_positives{0, 2, 0, 8};
    auto m2 = basic_metrics(no_positives);
    CHECK(m2.recall == 0.0);
    CHECK(m2.degenerate);

    CHECK_THROWS(basic_metrics(ConfusionCounts{}));
}

TEST_CASE("harmonic mean bounds and edge cases") {
    CHECK(harmonic_mean(0.0, 0.0) == 0.0);
    CHECK(harmonic_mean(0.0, 0.9) == 0.0);
    CHECK(harmonic_mean(0.7, 0.7) == Catch::Approx(0.7));
    Rng rng(2);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double a = unit(rng), b = unit(rng);
        const double h = harmonic_mean(a, b);
        CHECK(h == Catch::Approx(harmonic_mean(b, a)));
        CHECK(h >= std::min(a, b) - 1e-12);
        CHECK(h <= std::max(a, b) + 1e-12);
    }
}

TEST_CASE("AUC-PR known values") {
    // Perfect ranking.
    std::vector<double> s1{0.9, 0.8, 0.2, 0.1};
    std::vector<int> y1{1, 1, 0, 0};
    CHECK(auc_pr(s1, y1) == Catch::Approx(1.0));

    // Constant scores collapse to a single point at (recall 1, prevalence).
    std::vector<double> s2{0.5, 0.5, 0.5, 0.5, 0.5};
    std::vector<int> y2{1, 0, 0, 0, 1};
    CHECK(auc_pr(s2, y2) == Catch::Approx(0.4));

    // Worst ranking: the single positive is scored last.
    std::vector<double> s3{0.9, 0.8, 0.7, 0.1};
    std::vector<int> y3{0, 0, 0, 1};
    CHECK(auc_pr(s3, y3) == Catch::Approx(0.25));

    CHECK_THROWS(auc_pr(s1, std::vector<int>{1, 1, 1, 1}));
    CHECK_THROWS(auc_pr(std::vector<double>{}, std::vector<int>{}));
}

TEST_CASE("AUC-PR matches exhaustive recount on random sets") {
    Rng rng(7);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> len(5, 60);
    std::uniform_int_distribution<int> coarse(0, 9);
    for (int rep = 0; rep < 200; ++rep) {
        const int n = len(rng);
        std::vector<double> scores;
        std::vector<int> labels;
        long pos = 0;
        for (int i = 0; i < n; ++i) {
            // Coarse grid forces plenty of tied scores.
            scores.push_back(rep % 2 == 0 ? unit(rng) : coarse(rng) / 10.0);
            labels.push_back(unit(rng) < 0.4 ? 1 : 0);
            pos += labels.back();
        }
        if (pos == 0 || pos == n) continue;
        CHECK(auc_pr(scores, labels) == Catch::Approx(brute_auc_pr(scores, labels)).margin(1e-12));
    }
}

TEST_CASE("full_metrics composes the parts") {
    std::vector<int> labels{1, 0, 1, 0, 1, 1, 0, 0};
    std::vector<int> preds{1, 0, 0, 1, 1, 1, 0, 0};
    std::vector<double> scores{0.9, 0.2, 0.4, 0.6, 0.8, 0.7, 0.1, 0.3};
    auto m = full_metrics(labels, preds, scores);
    auto c = ConfusionCounts::from_pairs(labels, preds);
    auto b = basic_metrics(c);
    CHECK(m.accuracy == b.accuracy);
    CHECK(m.f1 == b.f1);
    CHECK(m.mcc == Catch::Approx(mcc(c)));
    CHECK(m.auc_pr == Catch::Approx(auc_pr(scores, labels)));

    // Single-class labels: AUC is skipped and flagged, not thrown.
    std::vector<int> ones{1, 1, 1};
    std::vector<int> p1{1, 0, 1};
    std::vector<double> s1{0.9, 0.1, 0.8};
    auto deg = full_metrics(ones, p1, s1);
    CHECK(deg.auc_pr == 0.0);
    CHECK(deg.degenerate);
}

TEST_CASE("published benchmark rows are internally consistent") {
    // Model rows reported at fixed decision thresholds; F1 must match its
    // precision/recall and HM must match HM(accuracy, F1) within rounding.
    check_published_row(0.882, 0.8130, 0.909, 0.857, 0.846);  // RF, harsh
    check_published_row(0.886, 0.8152, 0.898, 0.874, 0.849);  // XGB, harsh
    check_published_row(0.916, 0.8533, 0.862, 0.977, 0.883);  // DNN, harsh
    check_published_row(0.860, 0.945, 0.924, 0.805, 0.901);   // RF, headway
    check_published_row(0.860, 0.945, 0.924, 0.805, 0.901);   // XGB, headway
    check_published_row(0.861, 0.946, 0.927, 0.804, 0.901);   // DNN, headway
}

TEST_CASE("csv row emits eight fields") {
    MetricBundle m;
    std::string row = m.csv_row();
    CHECK(std::count(row.begin(), row.end(), ',') == 7);
    const std::string header = m.csv_header();
    CHECK(std::count(header.begin(), header.end(), ',') == 7);
}
