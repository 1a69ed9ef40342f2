#include "cvbias/config.hpp"
#include "cvbias/errors.hpp"

#include <gtest/gtest.h>

namespace cvbias::config {
namespace {

json base() {
    return parse_text(R"({
      "dgp": {"mean_kind": {"kind": "ar1", "rho": 0.5},
              "errors": {"kind": "iid_gaussian", "sigma2": 2.0}},
      "models": [{"id": "ar1", "columns": [0]},
                 {"id": "ar2c", "columns": [0, 1], "intercept": true}],
      "schemes": [{"kind": "loo"}, {"kind": "h_block", "h": "default"},
                  {"kind": "h_block", "h": 3}, {"kind": "k_fold", "k": 5, "contiguous": false},
                  {"kind": "expanding_window", "min_train": 10, "horizon": 2}],
      "experiment": {"T_grid": [20, 50], "reps": 100, "seed": 9}
    })");
}

std::string message_of(const json& j) {
    try {
        experiment_from_json(j);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

TEST(Config, ParsesFullDocument) {
    const auto c = experiment_from_json(base());
    EXPECT_EQ(c.mc.models.size(), 2u);
    EXPECT_TRUE(c.mc.models[1].intercept);
    EXPECT_FALSE(c.mc.models[0].intercept);
    ASSERT_EQ(c.mc.schemes.size(), 5u);
    EXPECT_FALSE(c.mc.schemes[1].h.has_value());
    EXPECT_EQ(*c.mc.schemes[2].h, 3);
    EXPECT_EQ(c.mc.schemes[3].k, 5);
    EXPECT_FALSE(c.mc.schemes[3].contiguous);
    EXPECT_EQ(c.mc.schemes[4].min_train, 10);
    EXPECT_EQ(c.mc.schemes[4].horizon, 2);
    EXPECT_EQ(c.mc.T_grid, (std::vector<int>{20, 50}));
    EXPECT_EQ(c.mc.seed, 9u);
    // max_lag defaults to the largest lag any model needs.
    EXPECT_EQ(c.mc.max_lag, 2);
    EXPECT_EQ(c.mc.dgp.burn_in, 1000);
}

TEST(Config, RoundTripsThroughJson) {
    auto j = base();
    j["dgp"]["errors"] = {{"kind", "arch1"}, {"arch_omega", 0.5}, {"arch_alpha", 0.5}};
    j["experiment"]["rho_grid"] = {0.0, 0.5, 0.9};
    j["experiment"]["crosscheck"] = true;
    const auto c = experiment_from_json(j);
    EXPECT_DOUBLE_EQ(c.mc.dgp.errors.sigma2, 1.0);
    const auto again = experiment_from_json(to_json(c));
    EXPECT_TRUE(again == c);
    EXPECT_EQ(to_json(again).dump(), to_json(c).dump());

    json v = base();
    v["dgp"]["mean_kind"] = json::parse(R"({"kind": "var_p", "k": 2, "p": 1, "target": 1,
        "coefficients": [[[0.5, 0.1], [0.0, 0.3]]]})");
    v["models"] = json::parse(R"([{"id": "m", "columns": [0, 1]}])");
    const auto cv = experiment_from_json(v);
    EXPECT_TRUE(experiment_from_json(to_json(cv)) == cv);

    json r = base();
    r["dgp"]["mean_kind"] = json::parse(R"({"kind": "iid_regression", "beta": [1, 2],
        "regressor_cov": [[1, 0], [0, 1]], "fixed_design": true, "design_seed": 4})");
    r["models"] = json::parse(R"([{"id": "m", "columns": [0, 1]}])");
    r["experiment"]["max_lag"] = 0;
    const auto cr = experiment_from_json(r);
    EXPECT_TRUE(experiment_from_json(to_json(cr)) == cr);
}

TEST(Config, UnknownKeysNameTheirPath) {
    auto j = base();
    j["dgp"]["errors"]["sigma"] = 1.0;
    EXPECT_NE(message_of(j).find("/dgp/errors/sigma"), std::string::npos) << message_of(j);
    j = base();
    j["schemes"][3]["folds"] = 2;
    EXPECT_NE(message_of(j).find("/schemes/3/folds"), std::string::npos) << message_of(j);
    j = base();
    j["extra"] = 1;
    EXPECT_NE(message_of(j).find("/extra"), std::string::npos);
}

TEST(Config, MissingAndMistypedFields) {
    auto j = base();
    j["dgp"]["mean_kind"].erase("rho");
    EXPECT_NE(message_of(j).find("/dgp/mean_kind/rho"), std::string::npos) << message_of(j);
    j = base();
    j["experiment"]["reps"] = "many";
    EXPECT_NE(message_of(j).find("/experiment/reps"), std::string::npos);
    j = base();
    j["models"][1]["columns"][0] = 1.5;
    EXPECT_NE(message_of(j).find("/models/1/columns/0"), std::string::npos) << message_of(j);
    j = base();
    j["schemes"][0]["kind"] = "bootstrap";
    EXPECT_NE(message_of(j).find("/schemes/0"), std::string::npos);
    j = base();
    j["schemes"][1]["h"] = "wide";
    EXPECT_NE(message_of(j).find("/schemes/1/h"), std::string::npos);
}

TEST(Config, SemanticValidation) {
    auto j = base();
    j["dgp"]["mean_kind"]["rho"] = 1.0;
    EXPECT_THROW(experiment_from_json(j), StationarityError);
    j = base();
    j["experiment"]["T_grid"] = json::array();
    EXPECT_THROW(experiment_from_json(j), ConfigError);
    j = base();
    j["experiment"]["T_grid"] = {2};
    EXPECT_THROW(experiment_from_json(j), SizeError);
    j = base();
    j["dgp"]["errors"] = {{"kind", "arch1"}, {"arch_omega", 0.5}, {"arch_alpha", 0.5}, {"sigma2", 2.0}};
    EXPECT_THROW(experiment_from_json(j), ConfigError);
    j = base();
    j["models"][1]["id"] = "ar1";
    EXPECT_THROW(experiment_from_json(j), ConfigError);
}

TEST(Config, RhoGridRules) {
    auto j = base();
    j["experiment"]["rho_grid"] = json::array();
    EXPECT_THROW(experiment_from_json(j), ConfigError);
    j["experiment"]["rho_grid"] = {0.2, 1.2};
    EXPECT_THROW(experiment_from_json(j), ConfigError);
    j = base();
    j["dgp"]["mean_kind"] = json::parse(R"({"kind": "var_p", "k": 1, "p": 1, "coefficients": [[[0.5]]]})");
    j["experiment"]["rho_grid"] = {0.2};
    EXPECT_THROW(experiment_from_json(j), ConfigError);
}

TEST(Config, SyntaxErrorsReportLineAndColumn) {
    try {
        parse_text("{\n  \"a\": 1,\n  \"b\": ]\n}", "cfg.json");
        FAIL() << "expected a syntax error";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("cfg.json:3:"), std::string::npos) << e.what();
    }
}

}  // namespace
}  // namespace cvbias::config
