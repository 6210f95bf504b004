#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "riskwindow/ensemble.hpp"

using namespace riskwindow;

namespace {

// Test stub: the "probability" of a row is its first feature value.
class PassThrough : public Classifier {
public:
    void fit(const Dataset&, const Dataset&) override {}
    std::vector<double> predict_proba(const Dataset& d) const override {
        std::vector<double> out(d.n_rows);
        for (std::size_t i = 0; i < d.n_rows; ++i) out[i] = d.at(i, 0);
        return out;
    }
    std::string kind() const override { return "passthrough"; }
    void save(std::ostream&) const override {}
    void load(std::istream&) override {}
};

class ConstantProba : public Classifier {
public:
    explicit ConstantProba(double p) : p_(p) {}
    void fit(const Dataset&, const Dataset&) override {}
    std::vector<double> predict_proba(const Dataset& d) const override {
        return std::vector<double>(d.n_rows, p_);
    }
    std::string kind() const override { return "constant"; }
    void save(std::ostream&) const override {}
    void load(std::istream&) override {}

private:
    double p_;
};

EnsembleMember member(double proba, double tau, double lambda) {
    return {std::make_shared<ConstantProba>(proba), tau, lambda, "m"};
}

Dataset one_row() {
    Dataset d;
    d.push_row(std::vector<double>{0.0}, 0);
    return d;
}

HeadwayScoreParams fitted_params(double sigma) {
    HeadwayScoreParams p;
    p.s_low = 40.0;
    p.s_high = 100.0;
    p.sigma = sigma;
    p.fitted = true;
    return p;
}

WindowView risky_view() {
    WindowView v;
    v.mean_speed_kmh = 120.0;
    v.hdw_props = {0.0, 0.0, 0.6};  // headway score 0.6 at full weight
    return v;
}

}  // namespace

TEST_CASE("weighted vote hand values") {
    // Votes {1, 0} with weights {0.7, 0.3}: weighted share 0.7 -> positive.
    std::vector<EnsembleMember> two{member(0.9, 0.5, 0.7), member(0.1, 0.5, 0.3)};
    CHECK(ensemble_vote(two, one_row()) == std::vector<int>{1});

    // Votes {1, 0} with weights {0.3, 0.7}: share 0.3 -> negative.
    std::vector<EnsembleMember> flipped{member(0.9, 0.5, 0.3), member(0.1, 0.5, 0.7)};
    CHECK(ensemble_vote(flipped, one_row()) == std::vector<int>{0});

    // Votes {1, 1, 0} with weights {0.5, 0.3, 0.2}: share 0.8 -> positive.
    std::vector<EnsembleMember> three{member(0.8, 0.5, 0.5), member(0.6, 0.5, 0.3),
                                      member(0.2, 0.5, 0.2)};
    CHECK(ensemble_vote(three, one_row()) == std::vector<int>{1});
}

TEST_CASE("the 0.5 boundary is inclusive") {
    std::vector<EnsembleMember> split{member(0.9, 0.5, 0.5), member(0.1, 0.5, 0.5)};
    CHECK(ensemble_vote(split, one_row()) == std::vector<int>{1});
}

TEST_CASE("vote is invariant to rescaling all weights") {
    Rng rng(3);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<EnsembleMember> a, b;
        for (int m = 0; m < 4; ++m) {
            const double p = unit(rng), lam = 0.1 + unit(rng);
            a.push_back(member(p, 0.5, lam));
            b.push_back(member(p, 0.5, 17.0 * lam));
        }
        CHECK(ensemble_vote(a, one_row()) == ensemble_vote(b, one_row()));
    }
}

TEST_CASE("a single member reduces to its own thresholded prediction") {
    auto model = std::make_shared<PassThrough>();
    Dataset d;
    for (double v : {0.1, 0.4, 0.55, 0.9}) d.push_row(std::vector<double>{v}, 0);
    std::vector<EnsembleMember> one{{model, 0.5, 0.37, "solo"}};
    CHECK(ensemble_vote(one, d) == model->predict(d, 0.5));
}

TEST_CASE("degenerate ensembles are rejected") {
    CHECK_THROWS(ensemble_vote({}, one_row()));
    std::vector<EnsembleMember> zero{member(0.9, 0.5, 0.0), member(0.8, 0.5, 0.0)};
    CHECK_THROWS(ensemble_vote(zero, one_row()));
}

TEST_CASE("ensemble_vote_row matches the batched vote") {
    std::vector<EnsembleMember> ms{member(0.9, 0.5, 0.6), member(0.2, 0.5, 0.4)};
    CHECK(ensemble_vote_row(ms, {0.0}) == (ensemble_vote(ms, one_row())[0] == 1));
}

TEST_CASE("confidence weight is the mean validation probability") {
    PassThrough model;
    Dataset d;
    for (double v : {0.2, 0.4, 0.9}) d.push_row(std::vector<double>{v}, 0);
    CHECK(confidence_weight(model, d) == Catch::Approx(0.5));
    CHECK_THROWS(confidence_weight(model, Dataset{}));
}

TEST_CASE("threshold grid covers 0.05..0.95 in 0.01 steps") {
    auto grid = ensemble_threshold_grid();
    REQUIRE(grid.size() == 91);
    CHECK(grid.front() == Catch::Approx(0.05));
    CHECK(grid.back() == Catch::Approx(0.95));
    for (std::size_t i = 1; i < grid.size(); ++i)
        CHECK(grid[i] - grid[i - 1] == Catch::Approx(0.01));
}

TEST_CASE("flat HM ties resolve to the smallest threshold") {
    // Labels are 1 at any tau (sigma < 0) and the member always votes 1, so
    // HM is identical across the grid.
    std::vector<WindowView> views(6, risky_view());
    Dataset val_x;
    for (std::size_t i = 0; i < views.size(); ++i) val_x.push_row(std::vector<double>{1.0}, 0);
    std::vector<EnsembleMember> ms{member(1.0, 0.5, 1.0)};
    auto grid = ensemble_threshold_grid();
    auto res = select_ensemble_threshold(ms, val_x, views, fitted_params(-1.0),
                                         IndicatorMode::Headway, grid);
    CHECK(res.tau_star == Catch::Approx(0.05));
    CHECK(res.hm == Catch::Approx(1.0));
    REQUIRE(res.grid.size() == grid.size());
    for (const auto& g : res.grid) CHECK(g.hm == Catch::Approx(1.0));
}

TEST_CASE("selected threshold attains the grid maximum") {
    // Mixed views: half risky at low sigma, the member's vote flips with tau.
    std::vector<WindowView> views;
    Dataset val_x;
    Rng rng(9);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 40; ++i) {
        WindowView v = risky_view();
        v.hdw_props[2] = unit(rng);
        views.push_back(v);
        val_x.push_row(std::vector<double>{unit(rng)}, 0);
    }
    std::vector<EnsembleMember> ms{{std::make_shared<PassThrough>(), 0.5, 0.6, "a"},
                                   {std::make_shared<ConstantProba>(0.4), 0.5, 0.4, "b"}};
    auto grid = ensemble_threshold_grid();
    auto res = select_ensemble_threshold(ms, val_x, views, fitted_params(0.3),
                                         IndicatorMode::Headway, grid);
    double max_hm = -1.0;
    double first_argmax = 0.0;
    for (const auto& g : res.grid) {
        if (g.hm > max_hm + 1e-12) {
            max_hm = g.hm;
            first_argmax = g.tau;
        }
    }
    CHECK(res.hm == Catch::Approx(max_hm));
    CHECK(res.tau_star == Catch::Approx(first_argmax));
}

TEST_CASE("threshold selection guards") {
    std::vector<WindowView> views(3, risky_view());
    Dataset val_x;
    val_x.push_row(std::vector<double>{1.0}, 0);  // row count mismatch
    std::vector<EnsembleMember> ms{member(1.0, 0.5, 1.0)};
    CHECK_THROWS(select_ensemble_threshold(ms, val_x, views, fitted_params(0.1),
                                           IndicatorMode::Headway, ensemble_threshold_grid()));
    Dataset ok;
    for (int i = 0; i < 3; ++i) ok.push_row(std::vector<double>{1.0}, 0);
    CHECK_THROWS(select_ensemble_threshold(ms, ok, views, fitted_params(0.1),
                                           IndicatorMode::Headway, {}));
}

TEST_CASE("ensemble csv lists members, tau_star and the grid") {
    std::vector<EnsembleMember> ms{member(0.9, 0.45, 0.6)};
    ms[0].name = "forest";
    EnsembleThresholdResult res;
    res.tau_star = 0.45;
    res.hm = 0.8;
    res.grid = {{0.44, 0.7}, {0.45, 0.8}};
    std::ostringstream os;
    write_ensemble_csv(os, ms, res, "cafe", 7);
    const std::string s = os.str();
    CHECK(s.find("# config_hash=cafe seed=7") != std::string::npos);
    CHECK(s.find("member,forest,0.6,0.45") != std::string::npos);
    CHECK(s.find("tau_star,,0.45,0.8") != std::string::npos);
    CHECK(s.find("grid,,0.44,0.7") != std::string::npos);
}
