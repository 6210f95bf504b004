#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <random>
#include <sstream>

#include "riskwindow/learners/forest.hpp"
#include "riskwindow/learners/gbt.hpp"
#include "riskwindow/learners/network.hpp"

using namespace riskwindow;

namespace {

// Two well-separated Gaussian blobs.
Dataset blobs(std::size_t n_per_class, std::size_t n_cols, std::uint64_t seed,
              double separation = 4.0) {
    Dataset d;
    Rng rng(seed);
    std::normal_distribution<double> noise(0.0, 0.5);
    std::vector<double> row(n_cols);
    for (int cls = 0; cls < 2; ++cls) {
        const double center = cls == 0 ? -separation / 2.0 : separation / 2.0;
        for (std::size_t i = 0; i < n_per_class; ++i) {
            for (auto& v : row) v = center + noise(rng);
            d.push_row(row, cls);
        }
    }
    return d;
}

bool identical_probas(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    return std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

double accuracy(const std::vector<int>& preds, const std::vector<int>& y) {
    long ok = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) ok += preds[i] == y[i] ? 1 : 0;
    return static_cast<double>(ok) / static_cast<double>(preds.size());
}

}  // namespace

TEST_CASE("predict is thresholded predict_proba for every model kind") {
    auto train = blobs(60, 4, 1);
    auto val = blobs(20, 4, 2);

    RFConfig rf_cfg;
    rf_cfg.n_estimators = 25;
    RandomForest rf(rf_cfg);
    GBTConfig gbt_cfg;
    gbt_cfg.n_estimators = 30;
    GradientBoostedTrees gbt(gbt_cfg);
    NNConfig nn_cfg;
    nn_cfg.units_1 = 8;
    nn_cfg.epochs = 10;
    nn_cfg.batch_size = 32;
    NeuralNet nn(nn_cfg);

    for (Classifier* m : std::initializer_list<Classifier*>{&rf, &gbt, &nn}) {
        m->fit(train, val);
        for (double thr : {0.3, 0.5, 0.7}) {
            auto p = m->predict_proba(val);
            auto yhat = m->predict(val, thr);
            REQUIRE(p.size() == yhat.size());
            for (std::size_t i = 0; i < p.size(); ++i)
                CHECK(yhat[i] == (p[i] > thr ? 1 : 0));
        }
    }
}

TEST_CASE("forest separates blobs perfectly") {
    auto train = blobs(80, 4, 3);
    auto test = blobs(40, 4, 4);
    RFConfig cfg;
    cfg.n_estimators = 50;
    RandomForest rf(cfg);
    rf.fit(train, {});
    CHECK(accuracy(rf.predict(test, 0.5), test.y) == 1.0);
    CHECK(rf.n_trees() >= 1);
    CHECK(rf.n_trees() <= 50);
    CHECK_FALSE(rf.oob_trace().empty());

    auto imp = rf.importance();
    REQUIRE(imp.has_value());
    double total = 0.0;
    for (double v : *imp) {
        CHECK(v >= 0.0);
        total += v;
    }
    CHECK(total == Catch::Approx(1.0));
}

TEST_CASE("forest probability is the fraction of positive tree votes") {
    auto train = blobs(50, 3, 5, 2.0);
    RFConfig cfg;
    cfg.n_estimators = 15;
    cfg.patience = 15;
    RandomForest rf(cfg);
    rf.fit(train, {});
    auto probe = blobs(10, 3, 6, 2.0);
    auto p = rf.predict_proba(probe);
    auto& trees = rf.trees_for_test();
    for (std::size_t i = 0; i < probe.n_rows; ++i) {
        long votes = 0;
        for (const auto& t : trees) votes += t.vote(probe.row(i));
        CHECK(p[i] == Catch::Approx(static_cast<double>(votes) /
                                    static_cast<double>(trees.size())));
    }
}

TEST_CASE("forest on single-class data degrades to a constant model") {
    Dataset d;
    for (int i = 0; i < 20; ++i) d.push_row(std::vector<double>{static_cast<double>(i), 1.0}, 1);
    RandomForest rf;
    rf.fit(d, {});
    CHECK_FALSE(rf.warning().empty());
    auto p = rf.predict_proba(d);
    for (double v : p) CHECK(v == 1.0);
}

TEST_CASE("prohibitive gamma collapses boosting to the intercept") {
    auto train = blobs(60, 4, 7);
    auto val = blobs(20, 4, 8);
    GBTConfig cfg;
    cfg.gamma = 1e9;
    GradientBoostedTrees gbt(cfg);
    gbt.fit(train, val);
    CHECK(gbt.n_rounds() == 0);
    const double prior = 0.5;  // balanced blobs
    auto p = gbt.predict_proba(val);
    for (double v : p) CHECK(v == Catch::Approx(prior));
    CHECK(sigmoid(gbt.intercept()) == Catch::Approx(prior));
}

TEST_CASE("gbt staged probabilities telescope to the full model") {
    auto train = blobs(80, 4, 9);
    auto val = blobs(30, 4, 10);
    GBTConfig cfg;
    cfg.n_estimators = 25;
    GradientBoostedTrees gbt(cfg);
    gbt.fit(train, val);
    REQUIRE(gbt.n_rounds() >= 1);

    auto full = gbt.predict_proba(val);
    auto staged = gbt.staged_proba(val, gbt.n_rounds());
    CHECK(identical_probas(full, staged));

    auto stage0 = gbt.staged_proba(val, 0);
    for (double v : stage0) CHECK(v == Catch::Approx(sigmoid(gbt.intercept())));

    const auto& trace = gbt.probe_stage_proba();
    REQUIRE(trace.size() == gbt.n_rounds() + 1);
    CHECK(identical_probas(trace.back(), gbt.probe().proba));
    CHECK(accuracy(gbt.predict(val, 0.5), val.y) >= 0.95);
}

TEST_CASE("network gradients match central finite differences") {
    for (int num_layers : {1, 2}) {
        NNConfig cfg;
        cfg.units_1 = 4;
        cfg.units_i = 3;
        cfg.num_layers = num_layers;
        cfg.activation_1 = "tanh";  // smooth, so finite differences are clean
        cfg.activation_i = "tanh";
        cfg.dropout_1 = 0.0;
        cfg.dropout_i = 0.0;
        cfg.l2_reg_1 = 1e-3;
        cfg.l2_reg_i = 1e-3;
        cfg.seed = 11;
        NeuralNet nn(cfg);
        nn.initialize(3);

        auto batch = blobs(4, 3, 12, 1.5);
        std::vector<double> grad;
        nn.loss_and_grad(batch, &grad);
        REQUIRE(grad.size() == nn.params().size());

        const double eps = 1e-5;
        for (std::size_t i = 0; i < nn.params().size(); ++i) {
            const double orig = nn.params()[i];
            nn.params()[i] = orig + eps;
            const double up = nn.loss_and_grad(batch, nullptr);
            nn.params()[i] = orig - eps;
            const double dn = nn.loss_and_grad(batch, nullptr);
            nn.params()[i] = orig;
            const double fd = (up - dn) / (2.0 * eps);
            CHECK(std::abs(fd - grad[i]) <= 1e-4 * std::max(1.0, std::abs(grad[i])));
        }
    }
}

TEST_CASE("network training is deterministic and eval mode is stable") {
    auto train = blobs(80, 4, 13);
    auto val = blobs(30, 4, 14);
    NNConfig cfg;
    cfg.units_1 = 16;
    cfg.epochs = 15;
    cfg.batch_size = 32;
    cfg.seed = 21;

    NeuralNet a(cfg), b(cfg);
    a.fit(train, val);
    b.fit(train, val);
    CHECK(identical_probas(a.predict_proba(val), b.predict_proba(val)));

    // Repeated inference never mutates the model.
    auto p1 = a.predict_proba(val);
    auto p2 = a.predict_proba(val);
    CHECK(identical_probas(p1, p2));
    CHECK(accuracy(a.predict(val, 0.5), val.y) >= 0.9);
    CHECK(a.train_loss_trace().size() == a.val_loss_trace().size());
}

TEST_CASE("cdsc correlation hand values") {
    std::vector<double> down{3.0, 2.0, 1.0};
    std::vector<double> up{1.0, 2.0, 3.0};
    auto anti = cdsc_correlation(down, up);
    REQUIRE(anti.has_value());
    CHECK(*anti == Catch::Approx(-1.0));
    auto pos = cdsc_correlation(up, up);
    REQUIRE(pos.has_value());
    CHECK(*pos == Catch::Approx(1.0));

    std::vector<double> flat{2.0, 2.0, 2.0};
    CHECK_FALSE(cdsc_correlation(up, flat).has_value());
    CHECK_THROWS(cdsc_correlation(up, std::vector<double>{1.0}));
    // Hand value: e_tr={1,2,4}, e_va={1,3,5}; cov=2, var_tr=14/9,
    // var_va=8/3 -> r = 2/sqrt(112/27)
    std::vector<double> tr{1.0, 2.0, 4.0};
    std::vector<double> va{1.0, 3.0, 5.0};
    auto r = cdsc_correlation(tr, va);
    REQUIRE(r.has_value());
    CHECK(*r == Catch::Approx(2.0 / std::sqrt(112.0 / 27.0)));
}

TEST_CASE("artifacts round-trip bit-identically for every model kind") {
    auto train = blobs(60, 4, 15);
    auto val = blobs(20, 4, 16);
    auto fresh = blobs(25, 4, 17);

    RFConfig rf_cfg;
    rf_cfg.n_estimators = 20;

    SECTION("forest") {
        RandomForest rf(rf_cfg);
        rf.fit(train, val);
        std::stringstream ss;
        rf.save(ss);
        RandomForest loaded;
        loaded.load(ss);
        CHECK(identical_probas(loaded.predict_proba(rf.probe().as_dataset()), rf.probe().proba));
        CHECK(identical_probas(loaded.predict_proba(fresh), rf.predict_proba(fresh)));
    }

    SECTION("gbt") {
        GBTConfig cfg;
        cfg.n_estimators = 20;
        GradientBoostedTrees gbt(cfg);
        gbt.fit(train, val);
        std::stringstream ss;
        gbt.save(ss);
        GradientBoostedTrees loaded;
        loaded.load(ss);
        CHECK(identical_probas(loaded.predict_proba(gbt.probe().as_dataset()), gbt.probe().proba));
        CHECK(identical_probas(loaded.predict_proba(fresh), gbt.predict_proba(fresh)));
    }

    SECTION("network") {
        NNConfig cfg;
        cfg.units_1 = 8;
        cfg.epochs = 8;
        cfg.batch_size = 32;
        NeuralNet nn(cfg);
        nn.fit(train, val);
        std::stringstream ss;
        nn.save(ss);
        NeuralNet loaded;
        loaded.load(ss);
        CHECK(identical_probas(loaded.predict_proba(nn.probe().as_dataset()), nn.probe().proba));
        CHECK(identical_probas(loaded.predict_proba(fresh), nn.predict_proba(fresh)));
    }

    SECTION("kind mismatch is rejected") {
        RandomForest rf(rf_cfg);
        rf.fit(train, val);
        std::stringstream ss;
        rf.save(ss);
        GradientBoostedTrees wrong;
        CHECK_THROWS(wrong.load(ss));
    }
}

TEST_CASE("name parsing guards") {
    CHECK_THROWS(criterion_from_name("mse"));
    CHECK_THROWS(max_features_from_name("cube_root"));
    CHECK_THROWS(activation_from_name("gelu"));
    CHECK(resolve_max_features(MaxFeatures::Sqrt, 16) == 4);
    CHECK(resolve_max_features(MaxFeatures::Log2, 16) == 4);
    CHECK(resolve_max_features(MaxFeatures::All, 16) == 16);
}
