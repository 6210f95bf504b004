#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "riskwindow/config.hpp"

using namespace riskwindow;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("rw_cfg_test_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string write(const std::string& name, const std::string& content) const {
        const auto p = path / name;
        std::ofstream os(p);
        os << content;
        return p.string();
    }
};

}  // namespace

TEST_CASE("defaults validate and round-trip through dump") {
    RunConfig cfg;
    CHECK_NOTHROW(cfg.validate());

    TempDir tmp;
    const auto path = tmp.write("defaults.cfg", cfg.dump());
    auto reloaded = load_config(path);
    CHECK(reloaded.dump() == cfg.dump());
    CHECK(reloaded.hash() == cfg.hash());
}

TEST_CASE("hash changes with any value") {
    RunConfig a, b;
    b.omega = 7;
    CHECK(a.hash() != b.hash());
    b.omega = a.omega;
    CHECK(a.hash() == b.hash());
    b.seed = 999;
    CHECK(a.hash() != b.hash());
}

TEST_CASE("unknown keys are rejected by name") {
    RunConfig cfg;
    try {
        cfg.set("omgea", "5");
        FAIL("expected throw");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("omgea") != std::string::npos);
    }
}

TEST_CASE("typed parsing errors name the key") {
    RunConfig cfg;
    CHECK_THROWS_WITH(cfg.set("omega", "five"), Catch::Matchers::ContainsSubstring("omega"));
    CHECK_THROWS_WITH(cfg.set("tau_init", "0.5x"), Catch::Matchers::ContainsSubstring("tau_init"));
    CHECK_THROWS_WITH(cfg.set("smote_enabled", "maybe"),
                      Catch::Matchers::ContainsSubstring("smote_enabled"));
    CHECK_NOTHROW(cfg.set("smote_enabled", "false"));
    CHECK_FALSE(cfg.smote_enabled);
    CHECK_NOTHROW(cfg.set("seed", "12345"));
    CHECK(cfg.seed == 12345);
}

TEST_CASE("fraction validation names the offending keys") {
    RunConfig cfg;
    cfg.train_frac = 0.8;
    cfg.val_frac = 0.15;
    cfg.test_frac = 0.15;
    try {
        cfg.validate();
        FAIL("expected throw");
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        CHECK(msg.find("train_frac") != std::string::npos);
        CHECK(msg.find("val_frac") != std::string::npos);
        CHECK(msg.find("test_frac") != std::string::npos);
    }
}

TEST_CASE("validation covers the headline constraints") {
    RunConfig cfg;
    cfg.indicator = "both";
    CHECK_THROWS(cfg.validate());
    cfg = {};
    cfg.tau_init = 0.01;
    CHECK_THROWS(cfg.validate());
    cfg = {};
    cfg.hdw_alpha_2 = 0.1;  // violates alpha_1 < alpha_2
    CHECK_THROWS(cfg.validate());
    cfg = {};
    cfg.models = "forest,svm";
    CHECK_THROWS(cfg.validate());
    cfg = {};
    cfg.space_scale = "medium";
    CHECK_THROWS(cfg.validate());
    cfg = {};
    cfg.tpe_gamma = 1.0;
    CHECK_THROWS(cfg.validate());
}

TEST_CASE("config files support comments, whitespace and includes") {
    TempDir tmp;
    tmp.write("base.cfg",
              "omega = 7          # wider window\n"
              "\n"
              "indicator = harsh\n");
    const auto main_path = tmp.write("main.cfg",
                                     "include base.cfg\n"
                                     "  delta=2  \n"
                                     "# a full-line comment\n"
                                     "seed = 42\n");
    auto cfg = load_config(main_path);
    CHECK(cfg.omega == 7);
    CHECK(cfg.delta == 2);
    CHECK(cfg.indicator == "harsh");
    CHECK(cfg.seed == 42);
}

TEST_CASE("later keys override included ones") {
    TempDir tmp;
    tmp.write("inc.cfg", "omega = 9\n");
    const auto p = tmp.write("main.cfg", "include inc.cfg\nomega = 3\n");
    CHECK(load_config(p).omega == 3);
}

TEST_CASE("config file errors are reported with location") {
    TempDir tmp;
    const auto p = tmp.write("bad.cfg", "omega 5\n");
    CHECK_THROWS_WITH(load_config(p), Catch::Matchers::ContainsSubstring(":1"));
    CHECK_THROWS(load_config((tmp.path / "missing.cfg").string()));

    // Self-including file trips the depth guard instead of looping forever.
    const auto loop = tmp.write("loop.cfg", "include loop.cfg\n");
    CHECK_THROWS_WITH(load_config(loop), Catch::Matchers::ContainsSubstring("depth"));
}

TEST_CASE("model kinds parse from the comma list") {
    RunConfig cfg;
    CHECK(cfg.model_kinds() == std::vector<std::string>{"forest", "gbt", "network"});
    cfg.models = "gbt";
    CHECK(cfg.model_kinds() == std::vector<std::string>{"gbt"});
    cfg.models = "forest,,network";
    CHECK(cfg.model_kinds() == std::vector<std::string>{"forest", "network"});
}

TEST_CASE("derived module configs mirror the flat keys") {
    RunConfig cfg;
    cfg.omega = 8;
    cfg.delta = 2;
    cfg.horizon = 3;
    cfg.tau_init = 0.4;
    cfg.regret_window = 7;
    cfg.synth_drivers = 4;

    auto wp = cfg.window_params();
    CHECK(wp.omega == 8);
    CHECK(wp.delta == 2);
    CHECK(wp.horizon == 3);

    auto ts = cfg.threshold_state();
    CHECK(ts.tau_e == 0.4);
    CHECK(ts.regret_window == 7);

    auto hp = cfg.headway_params();
    CHECK(hp.alpha[0] == cfg.hdw_alpha_1);
    CHECK(hp.sigma_quantile == cfg.hdw_sigma_quantile);

    auto sc = cfg.synth_config();
    CHECK(sc.n_drivers == 4);
    CHECK(sc.seed == cfg.seed);

    auto ss = cfg.split_spec();
    CHECK(ss.train_frac == cfg.train_frac);
    CHECK(ss.seed == cfg.seed);
}
