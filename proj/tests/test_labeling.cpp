#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "riskwindow/features.hpp"
#include "riskwindow/labeling.hpp"

using namespace riskwindow;

namespace {

HeadwayScoreParams fitted_params(double s_low = 40.0, double s_high = 100.0, double sigma = 0.15) {
    HeadwayScoreParams p;
    p.s_low = s_low;
    p.s_high = s_high;
    p.sigma = sigma;
    p.fitted = true;
    return p;
}

WindowView random_view(Rng& rng) {
    WindowView v;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> speed(0.0, 130.0);
    for (auto& e : v.ev_obs) e = unit(rng);
    v.mean_speed_kmh = speed(rng);
    double rem = 1.0;
    for (auto& h : v.hdw_props) {
        h = unit(rng) * rem;
        rem -= h;
    }
    if (unit(rng) < 0.7) {
        std::array<double, kNumEventKinds> pred{};
        for (auto& e : pred) e = unit(rng);
        v.ev_pred = pred;
        v.pred_len = 2;
    }
    return v;
}

// Straight transcription of the label definitions, independent of the
// library's short-circuiting structure.
bool oracle_unified(const WindowView& v, double tau, const HeadwayScoreParams& p,
                    IndicatorMode mode) {
    bool harsh = false;
    for (int x = 0; x < 3; ++x) {
        if (v.ev_obs[static_cast<std::size_t>(x)] > tau) harsh = true;
        if (v.ev_pred && (*v.ev_pred)[static_cast<std::size_t>(x)] > tau) harsh = true;
    }
    double score = 0.0;
    for (int k = 1; k <= 3; ++k) {
        double w;
        const double a = p.alpha[static_cast<std::size_t>(k - 1)];
        if (v.mean_speed_kmh <= p.s_low) w = 0.0;
        else if (v.mean_speed_kmh >= p.s_high) w = a;
        else w = a * (v.mean_speed_kmh - p.s_low) / (p.s_high - p.s_low);
        score += w * v.hdw_props[static_cast<std::size_t>(k - 1)];
    }
    const bool hdw = score > p.sigma;
    if (mode == IndicatorMode::Harsh) return harsh;
    if (mode == IndicatorMode::Headway) return hdw;
    return harsh || hdw;
}

}  // namespace

TEST_CASE("threshold exceedance is strict") {
    CHECK_FALSE(exceeds_threshold(0.4, std::nullopt, 0.4));
    CHECK(exceeds_threshold(0.4000001, std::nullopt, 0.4));
    CHECK(exceeds_threshold(0.1, 0.5, 0.4));       // prediction clause fires
    CHECK_FALSE(exceeds_threshold(0.1, 0.4, 0.4)); // boundary in prediction too
}

TEST_CASE("speed_weight knots and ramp") {
    auto p = fitted_params();
    CHECK(speed_weight(40.0, 3, p) == 0.0);
    CHECK(speed_weight(20.0, 3, p) == 0.0);
    CHECK(speed_weight(100.0, 3, p) == 1.0);
    CHECK(speed_weight(130.0, 2, p) == 0.5);
    CHECK(speed_weight(70.0, 3, p) == Catch::Approx(0.5));
    CHECK(speed_weight(70.0, 2, p) == Catch::Approx(0.25));
    CHECK(speed_weight(70.0, 1, p) == Catch::Approx(0.1));
}

TEST_CASE("speed_weight guards") {
    auto p = fitted_params();
    CHECK_THROWS(speed_weight(70.0, 0, p));
    CHECK_THROWS(speed_weight(70.0, 4, p));
    HeadwayScoreParams unfitted;
    CHECK_THROWS_AS(speed_weight(70.0, 1, unfitted), std::logic_error);
    auto degenerate = fitted_params(80.0, 80.0);
    CHECK_THROWS_AS(speed_weight(70.0, 1, degenerate), std::runtime_error);
}

TEST_CASE("headway_score hand value and linearity") {
    auto p = fitted_params();
    WindowView v;
    v.mean_speed_kmh = 70.0;  // weights 0.1 / 0.25 / 0.5
    v.hdw_props = {0.2, 0.4, 0.2};
    CHECK(headway_score(v, p) == Catch::Approx(0.02 + 0.10 + 0.10));

    auto scaled = p;
    for (auto& a : scaled.alpha) a *= 3.0;
    CHECK(headway_score(v, scaled) == Catch::Approx(3.0 * headway_score(v, p)));

    WindowView doubled = v;
    for (auto& h : doubled.hdw_props) h *= 0.5;
    CHECK(headway_score(doubled, p) == Catch::Approx(0.5 * headway_score(v, p)));
}

TEST_CASE("headway_score is monotone in speed") {
    auto p = fitted_params();
    WindowView v;
    v.hdw_props = {0.3, 0.3, 0.3};
    double prev = -1.0;
    for (double s = 0.0; s <= 130.0; s += 5.0) {
        v.mean_speed_kmh = s;
        const double cur = headway_score(v, p);
        CHECK(cur >= prev);
        prev = cur;
    }
}

TEST_CASE("fit_headway_params recovers speed percentiles") {
    std::vector<WindowView> views(121);
    Rng rng(3);
    for (int i = 0; i <= 120; ++i) {
        views[static_cast<std::size_t>(i)].mean_speed_kmh = static_cast<double>(i);
        views[static_cast<std::size_t>(i)].hdw_props = {0.2, 0.1, 0.05};
    }
    auto p = fit_headway_params(views);
    CHECK(p.s_low == Catch::Approx(12.0));
    CHECK(p.s_high == Catch::Approx(108.0));
    CHECK(p.fitted);
    CHECK(p.sigma > 0.0);
}

TEST_CASE("sigma at quantile 1.0 suppresses all headway labels") {
    Rng rng(11);
    std::vector<WindowView> views;
    for (int i = 0; i < 200; ++i) views.push_back(random_view(rng));
    HeadwayScoreParams base;
    base.sigma_quantile = 1.0;
    auto p = fit_headway_params(views, base);
    for (const auto& v : views) {
        auto lab = unified_label(v, 0.5, p, IndicatorMode::Headway);
        CHECK_FALSE(lab.r_hdw);
    }
}

TEST_CASE("fit rejects degenerate inputs") {
    std::vector<WindowView> one(1);
    CHECK_THROWS(fit_headway_params(one));
    std::vector<WindowView> flat(10);
    for (auto& v : flat) v.mean_speed_kmh = 55.0;
    CHECK_THROWS_AS(fit_headway_params(flat), std::runtime_error);
}

TEST_CASE("harsh label is monotone non-increasing in tau") {
    Rng rng(17);
    for (int i = 0; i < 200; ++i) {
        auto v = random_view(rng);
        bool prev = true;
        for (double tau = 0.05; tau <= 0.95; tau += 0.05) {
            const bool cur = harsh_label(v, tau);
            if (!prev) CHECK_FALSE(cur);
            prev = cur;
        }
    }
}

TEST_CASE("scaling alphas and sigma together leaves headway labels unchanged") {
    Rng rng(23);
    auto p = fitted_params();
    auto scaled = p;
    for (auto& a : scaled.alpha) a *= 2.5;
    scaled.sigma *= 2.5;
    for (int i = 0; i < 300; ++i) {
        auto v = random_view(rng);
        CHECK(unified_label(v, 0.5, p, IndicatorMode::Headway).r ==
              unified_label(v, 0.5, scaled, IndicatorMode::Headway).r);
    }
}

TEST_CASE("unified label matches direct transcription on random views") {
    Rng rng(31);
    auto p = fitted_params(30.0, 110.0, 0.12);
    std::uniform_real_distribution<double> taud(0.05, 0.95);
    for (int i = 0; i < 1000; ++i) {
        auto v = random_view(rng);
        const double tau = taud(rng);
        for (auto mode : {IndicatorMode::Harsh, IndicatorMode::Headway, IndicatorMode::Unified}) {
            auto lab = unified_label(v, tau, p, mode);
            CHECK(lab.r == oracle_unified(v, tau, p, mode));
        }
        CHECK(unified_label(v, tau, p, IndicatorMode::Unified).r ==
              (unified_label(v, tau, p, IndicatorMode::Harsh).r ||
               unified_label(v, tau, p, IndicatorMode::Headway).r));
    }
}

TEST_CASE("observation-only label ignores the prediction window") {
    auto p = fitted_params();
    WindowView v;
    v.mean_speed_kmh = 20.0;  // headway weight zero
    v.ev_obs = {0.0, 0.0, 0.0, 0.0, 0.0};
    v.ev_pred = std::array<double, kNumEventKinds>{1.0, 1.0, 1.0, 1.0, 1.0};
    v.pred_len = 2;
    CHECK(unified_label(v, 0.5, p, IndicatorMode::Harsh).r);
    CHECK_FALSE(label_obs_only(v, 0.5, p, IndicatorMode::Harsh));
}

TEST_CASE("prediction-only label exists iff a prediction window exists") {
    WindowView v;
    CHECK_FALSE(label_pred_only(v, 0.5, IndicatorMode::Unified).has_value());
    v.ev_pred = std::array<double, kNumEventKinds>{0.0, 0.9, 0.0, 0.0, 0.0};
    v.pred_len = 1;
    auto lab = label_pred_only(v, 0.5, IndicatorMode::Harsh);
    REQUIRE(lab.has_value());
    CHECK(*lab);
    auto hdw = label_pred_only(v, 0.5, IndicatorMode::Headway);
    REQUIRE(hdw.has_value());
    CHECK_FALSE(*hdw);
}

TEST_CASE("label_views agrees with per-view labelling") {
    Rng rng(41);
    auto p = fitted_params();
    std::vector<WindowView> views;
    for (int i = 0; i < 100; ++i) views.push_back(random_view(rng));
    auto ys = label_views(views, 0.3, p, IndicatorMode::Unified);
    REQUIRE(ys.size() == views.size());
    for (std::size_t i = 0; i < views.size(); ++i)
        CHECK(ys[i] == (unified_label(views[i], 0.3, p, IndicatorMode::Unified).r ? 1 : 0));
}

TEST_CASE("indicator names round-trip") {
    for (auto m : {IndicatorMode::Harsh, IndicatorMode::Headway, IndicatorMode::Unified})
        CHECK(indicator_from_name(indicator_name(m)) == m);
    CHECK_THROWS(indicator_from_name("bogus"));
}
