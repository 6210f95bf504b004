#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "riskwindow/pipeline.hpp"

using namespace riskwindow;

namespace {

std::vector<std::pair<std::string, std::size_t>> equal_drivers(int n, std::size_t volume = 100) {
    std::vector<std::pair<std::string, std::size_t>> out;
    for (int i = 0; i < n; ++i) out.push_back({"d" + std::to_string(i), volume});
    return out;
}

bool disjoint(const GroupSplit& s) {
    std::set<std::string> seen;
    for (const auto* part : {&s.train, &s.val, &s.test})
        for (const auto& id : *part)
            if (!seen.insert(id).second) return false;
    return true;
}

// Fixed linear scorer: attribution of each feature under permutation Shapley
// is exactly coef_j * (x_j - bg_j).
class LinearModel : public Classifier {
public:
    explicit LinearModel(std::vector<double> coef, double bias) : coef_(std::move(coef)), bias_(bias) {}
    void fit(const Dataset&, const Dataset&) override {}
    std::vector<double> predict_proba(const Dataset& d) const override {
        std::vector<double> out(d.n_rows, bias_);
        for (std::size_t i = 0; i < d.n_rows; ++i)
            for (std::size_t j = 0; j < d.n_cols; ++j) out[i] += coef_[j] * d.at(i, j);
        return out;
    }
    std::string kind() const override { return "linear-test"; }
    void save(std::ostream&) const override {}
    void load(std::istream&) override {}

private:
    std::vector<double> coef_;
    double bias_;
};

class ConstantModel : public Classifier {
public:
    void fit(const Dataset&, const Dataset&) override {}
    std::vector<double> predict_proba(const Dataset& d) const override {
        return std::vector<double>(d.n_rows, 0.42);
    }
    std::string kind() const override { return "constant-test"; }
    void save(std::ostream&) const override {}
    void load(std::istream&) override {}
};

// Two-feature product model for a non-additive Shapley check.
class ProductModel : public Classifier {
public:
    void fit(const Dataset&, const Dataset&) override {}
    std::vector<double> predict_proba(const Dataset& d) const override {
        std::vector<double> out(d.n_rows);
        for (std::size_t i = 0; i < d.n_rows; ++i) out[i] = d.at(i, 0) * d.at(i, 1);
        return out;
    }
    std::string kind() const override { return "product-test"; }
    void save(std::ostream&) const override {}
    void load(std::istream&) override {}
};

Dataset from_rows(const std::vector<std::vector<double>>& rows) {
    Dataset d;
    for (const auto& r : rows) d.push_row(r, 0);
    return d;
}

double point_to_segment(const std::vector<double>& p, const std::vector<double>& a,
                        const std::vector<double>& b) {
    double ab2 = 0.0, ap_ab = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
        ab2 += (b[j] - a[j]) * (b[j] - a[j]);
        ap_ab += (p[j] - a[j]) * (b[j] - a[j]);
    }
    const double t = ab2 > 0.0 ? std::clamp(ap_ab / ab2, 0.0, 1.0) : 0.0;
    double d2 = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
        const double c = a[j] + t * (b[j] - a[j]);
        d2 += (p[j] - c) * (p[j] - c);
    }
    return std::sqrt(d2);
}

}  // namespace

TEST_CASE("group split packs ten equal drivers as 7/2/1") {
    SplitSpec spec;
    auto s = group_split(equal_drivers(10), spec);
    CHECK(s.train.size() == 7);
    CHECK(s.val.size() == 2);
    CHECK(s.test.size() == 1);
    CHECK(disjoint(s));
}

TEST_CASE("group split guards") {
    SplitSpec spec;
    CHECK_THROWS(group_split(equal_drivers(2), spec));
    SplitSpec bad;
    bad.train_frac = 0.5;
    bad.val_frac = 0.2;
    bad.test_frac = 0.2;
    CHECK_THROWS(group_split(equal_drivers(10), bad));
    bad.train_frac = 1.0;
    bad.val_frac = 0.0;
    bad.test_frac = 0.0;
    CHECK_THROWS(group_split(equal_drivers(10), bad));
}

TEST_CASE("no driver leaks across partitions over many seeds") {
    Rng rng(1);
    std::uniform_int_distribution<std::size_t> vol(10, 500);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::vector<std::pair<std::string, std::size_t>> drivers;
        for (int i = 0; i < 40; ++i) drivers.push_back({"d" + std::to_string(i), vol(rng)});
        SplitSpec spec;
        spec.seed = seed;
        auto s = group_split(drivers, spec);
        CHECK(disjoint(s));
        CHECK(s.train.size() + s.val.size() + s.test.size() == drivers.size());
        CHECK_FALSE(s.train.empty());
        CHECK_FALSE(s.val.empty());
        CHECK_FALSE(s.test.empty());

        // Realised volume fractions track the spec.
        auto vol_of = [&](const std::vector<std::string>& part) {
            double v = 0.0;
            for (const auto& [id, volume] : drivers)
                if (std::find(part.begin(), part.end(), id) != part.end())
                    v += static_cast<double>(volume);
            return v;
        };
        double total = 0.0;
        for (const auto& [id, volume] : drivers) total += static_cast<double>(volume);
        CHECK(vol_of(s.train) / total == Catch::Approx(0.70).margin(0.06));
        CHECK(vol_of(s.val) / total == Catch::Approx(0.15).margin(0.06));
    }
}

TEST_CASE("group split is independent of input row order") {
    Rng rng(9);
    std::uniform_int_distribution<std::size_t> vol(10, 500);
    std::vector<std::pair<std::string, std::size_t>> drivers;
    for (int i = 0; i < 25; ++i) drivers.push_back({"d" + std::to_string(i), vol(rng)});
    SplitSpec spec;
    spec.seed = 17;
    auto base = group_split(drivers, spec);
    for (int rep = 0; rep < 5; ++rep) {
        auto shuffled = drivers;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        auto s = group_split(shuffled, spec);
        CHECK(s.train == base.train);
        CHECK(s.val == base.val);
        CHECK(s.test == base.test);
    }
}

TEST_CASE("group split varies with the seed") {
    std::set<std::string> signatures;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        SplitSpec spec;
        spec.seed = seed;
        auto s = group_split(equal_drivers(20), spec);
        std::string sig;
        for (const auto& id : s.test) sig += id + ",";
        signatures.insert(sig);
    }
    CHECK(signatures.size() > 1);
}

TEST_CASE("smote interpolates on segments between minority neighbours") {
    Rng rng(4);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::vector<double>> minority;
    for (int i = 0; i < 12; ++i) minority.push_back({unit(rng), unit(rng), unit(rng)});
    auto synth = smote(minority, 3, 50, 7);
    REQUIRE(synth.size() == 50);
    for (const auto& s : synth) {
        double best = 1e300;
        for (std::size_t i = 0; i < minority.size(); ++i)
            for (std::size_t j = i + 1; j < minority.size(); ++j)
                best = std::min(best, point_to_segment(s, minority[i], minority[j]));
        CHECK(best < 1e-9);
    }
}

TEST_CASE("smote preserves linear structure of the minority class") {
    std::vector<std::vector<double>> minority;
    for (int i = 0; i < 10; ++i) {
        const double t = static_cast<double>(i);
        minority.push_back({t, 2.0 * t, 3.0 * t});
    }
    auto synth = smote(minority, 4, 40, 11);
    for (const auto& s : synth) {
        CHECK(std::abs(s[1] - 2.0 * s[0]) < 1e-9);
        CHECK(std::abs(s[2] - 3.0 * s[0]) < 1e-9);
    }
}

TEST_CASE("smote copies categorical columns from the seed row") {
    Rng rng(5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::vector<double>> minority;
    for (int i = 0; i < 10; ++i) minority.push_back({unit(rng), static_cast<double>(i % 3)});
    std::set<double> cat_values{0.0, 1.0, 2.0};
    auto synth = smote(minority, 3, 60, 13, {1});
    for (const auto& s : synth) CHECK(cat_values.count(s[1]) == 1);
}

TEST_CASE("smote falls back to duplication with too few rows") {
    std::vector<std::vector<double>> minority{{1.0, 2.0}, {3.0, 4.0}};
    Diagnostics diags;
    auto synth = smote(minority, 5, 10, 3, {}, &diags);
    REQUIRE(synth.size() == 10);
    REQUIRE_FALSE(diags.empty());
    CHECK(diags[0].kind == "smote_fallback");
    for (const auto& s : synth) CHECK((s == minority[0] || s == minority[1]));
}

TEST_CASE("smote is deterministic and respects n_synthetic") {
    std::vector<std::vector<double>> minority;
    for (int i = 0; i < 8; ++i) minority.push_back({static_cast<double>(i), 1.0});
    CHECK(smote(minority, 3, 25, 9) == smote(minority, 3, 25, 9));
    CHECK(smote(minority, 3, 0, 9).empty());
    CHECK(smote({}, 3, 10, 9).empty());
}

TEST_CASE("shapley on a constant model attributes nothing") {
    ConstantModel m;
    auto bg = from_rows({{0.0, 0.0}, {1.0, 1.0}});
    auto ex = from_rows({{0.3, 0.7}, {0.9, 0.1}});
    auto res = shapley_importance(m, bg, ex, 10, 3);
    for (double v : res.mean_abs) CHECK(v == Catch::Approx(0.0).margin(1e-12));
    for (const auto& row : res.per_row)
        for (double v : row) CHECK(v == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("shapley is exact for a linear model") {
    LinearModel m({0.1, 0.2, -0.3}, 0.5);
    auto bg = from_rows({{0.2, 0.4, 0.6}});  // single background row
    auto ex = from_rows({{0.9, 0.1, 0.5}, {0.0, 1.0, 1.0}});
    auto res = shapley_importance(m, bg, ex, 8, 5);
    const std::vector<double> coef{0.1, 0.2, -0.3};
    for (std::size_t r = 0; r < ex.n_rows; ++r) {
        double total = 0.0;
        for (std::size_t j = 0; j < 3; ++j) {
            const double expect = coef[j] * (ex.at(r, j) - bg.at(0, j));
            CHECK(res.per_row[r][j] == Catch::Approx(expect).margin(1e-12));
            total += res.per_row[r][j];
        }
        // Efficiency: attributions telescope to f(x) - f(background).
        CHECK(total == Catch::Approx(res.explain_pred[r] - res.background_mean_pred).margin(1e-12));
    }
}

TEST_CASE("shapley matches exact enumeration for a product model") {
    ProductModel m;
    auto bg = from_rows({{0.2, 0.5}});
    auto ex = from_rows({{0.8, 0.9}});
    // d=2: phi_0 = 0.5[f(x0,b1)-f(b0,b1)] + 0.5[f(x0,x1)-f(b0,x1)]
    const double b0 = 0.2, b1 = 0.5, x0 = 0.8, x1 = 0.9;
    const double phi0 = 0.5 * (x0 * b1 - b0 * b1) + 0.5 * (x0 * x1 - b0 * x1);
    const double phi1 = 0.5 * (b0 * x1 - b0 * b1) + 0.5 * (x0 * x1 - x0 * b1);
    auto res = shapley_importance(m, bg, ex, 400, 7);
    CHECK(res.per_row[0][0] == Catch::Approx(phi0).margin(3.0 * res.std_err[0] + 1e-3));
    CHECK(res.per_row[0][0] + res.per_row[0][1] ==
          Catch::Approx(x0 * x1 - b0 * b1).margin(1e-12));
    CHECK(res.per_row[0][1] == Catch::Approx(phi1).margin(0.05));
    CHECK_THROWS(shapley_importance(m, from_rows({}), ex, 10, 1));
    CHECK_THROWS(shapley_importance(m, bg, ex, 0, 1));
}

TEST_CASE("wasserstein hand values") {
    CHECK(wasserstein_1d({0.0, 1.0}, {0.0, 1.0}) == Catch::Approx(0.0));
    CHECK(wasserstein_1d({0.0}, {1.0}) == Catch::Approx(1.0));
    CHECK(wasserstein_1d({0.0, 1.0}, {2.0, 3.0}) == Catch::Approx(2.0));
    CHECK(wasserstein_1d({0.0}, {0.0, 2.0}) == Catch::Approx(1.0));
    CHECK(wasserstein_1d({1.0, 5.0}, {2.0}) == Catch::Approx(2.0));
    // Symmetry and translation invariance.
    std::vector<double> a{0.1, 0.9, 0.4, 0.4};
    std::vector<double> b{0.2, 0.3, 0.8};
    CHECK(wasserstein_1d(a, b) == Catch::Approx(wasserstein_1d(b, a)));
    std::vector<double> a2 = a, b2 = b;
    for (double& v : a2) v += 3.0;
    for (double& v : b2) v += 3.0;
    CHECK(wasserstein_1d(a2, b2) == Catch::Approx(wasserstein_1d(a, b)));
    CHECK_THROWS(wasserstein_1d({}, {1.0}));
}

TEST_CASE("select_features keeps strictly-above-threshold candidates") {
    FeatureSelectionState st;
    st.candidate_pool = {"a", "b", "c"};
    select_features(st, {5.0, 3.0, 0.004});
    CHECK(st.selected == std::vector<std::string>{"a", "b"});
    CHECK(st.scores[0] == Catch::Approx(5.0 / 8.004));

    // Exactly at the threshold is excluded (strict >).
    FeatureSelectionState st2;
    st2.candidate_pool = {"a", "b"};
    select_features(st2, {1.0, 999.0});
    CHECK(st2.scores[0] == Catch::Approx(0.001));
    CHECK(st2.selected == std::vector<std::string>{"b"});

    CHECK_THROWS(select_features(st, {1.0}));
}

TEST_CASE("empty selection falls back to the single best feature") {
    FeatureSelectionState st;
    st.candidate_pool = {"a", "b", "c"};
    Diagnostics diags;
    select_features(st, {0.0, 0.0, 0.0}, &diags);
    REQUIRE(st.selected.size() == 1);
    REQUIRE_FALSE(diags.empty());
    CHECK(diags[0].kind == "selection_fallback");
}

TEST_CASE("reselection triggers on threshold shift") {
    FeatureSelectionState st;
    st.has_last_tau = true;
    st.last_tau = 0.0;
    std::string reason;
    CHECK(should_reselect(st, 0.015, {}, &reason));
    CHECK(reason == "tau_shift");
    // A shift of exactly tau_delta does not trigger (strict >).
    CHECK_FALSE(should_reselect(st, st.tau_delta, {}, &reason));
    CHECK(reason == "none");
    CHECK_FALSE(should_reselect(st, 0.005, {}, &reason));
}

TEST_CASE("reselection triggers on feature drift") {
    Dataset train;
    Rng rng(6);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int i = 0; i < 500; ++i) train.push_row(std::vector<double>{g(rng), 5.0 + 2.0 * g(rng)}, 0);

    FeatureSelectionState st;
    capture_distributions(st, train);
    st.has_last_tau = true;
    st.last_tau = 0.5;

    // Identical data: zero distance, no trigger.
    std::vector<std::vector<double>> same(2);
    for (std::size_t i = 0; i < train.n_rows; ++i) {
        same[0].push_back(train.at(i, 0));
        same[1].push_back(train.at(i, 1));
    }
    std::string reason;
    CHECK_FALSE(should_reselect(st, 0.5, same, &reason));

    // Shift feature 1 by two of its standard deviations.
    auto shifted = same;
    for (double& v : shifted[1]) v += 4.0;
    CHECK(should_reselect(st, 0.5, shifted, &reason));
    CHECK(reason == "feature_drift");
}
