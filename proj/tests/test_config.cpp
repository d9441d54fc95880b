#include <algorithm>

#include "doctest.h"
#include "fer/config.hpp"

using namespace fer;

namespace {

std::vector<std::string> problems_of(std::string_view text) {
    try {
        validate_config(text);
    } catch (const ConfigError& e) {
        return e.problems();
    }
    return {};
}

bool mentions(const std::vector<std::string>& problems, std::string_view needle) {
    return std::any_of(problems.begin(), problems.end(),
                       [&](const std::string& p) { return p.find(needle) != std::string::npos; });
}

}  // namespace

TEST_CASE("empty document yields the protocol defaults") {
    const TrainConfig d;
    CHECK(validate_config("") == d);
    CHECK(validate_config("  \n") == d);
    CHECK(validate_config("{}") == d);
    CHECK(d.initial_lr == 0.1);
    CHECK(d.momentum == 0.9);
    CHECK(d.batch_size == 128);
    CHECK(d.weight_decay == 0.0001);
    CHECK(d.plateau_patience == 10);
    CHECK(d.lr_factor == 0.5);
    CHECK(d.pad == 4);
    CHECK(d.mirror_probability == 0.5);
}

TEST_CASE("partial documents override only their keys") {
    const auto c = validate_config(R"({"batch_size": 32, "global_seed": 9, "initial_lr": 0.05})");
    CHECK(c.batch_size == 32);
    CHECK(c.global_seed == 9);
    CHECK(c.initial_lr == 0.05);
    CHECK(c.momentum == 0.9);
}

TEST_CASE("to_json round trips") {
    TrainConfig c;
    c.dropout_rate = 0.2;
    c.global_seed = 123456789012345ULL;
    c.max_epochs = 7;
    CHECK(validate_config(to_json(c).dump()) == c);
    CHECK(to_json(c).size() == config_keys().size());
}

TEST_CASE("range errors name the key") {
    const auto p = problems_of(R"({"batch_size": -1})");
    REQUIRE(p.size() == 1);
    CHECK(p[0].rfind("batch_size", 0) == 0);
    CHECK(mentions(problems_of(R"({"momentum": 1.0})"), "momentum"));
    CHECK(mentions(problems_of(R"({"lr_factor": 1.0})"), "lr_factor"));
    CHECK(mentions(problems_of(R"({"dropout_rate": 1.0})"), "dropout_rate"));
    CHECK(mentions(problems_of(R"({"initial_lr": 0})"), "initial_lr"));
}

TEST_CASE("unknown keys get a suggestion") {
    const auto p = problems_of(R"({"learning_rat": 0.1})");
    REQUIRE(p.size() == 1);
    CHECK(mentions(p, "learning_rat"));
    CHECK(suggest_key("learning_rat") == "initial_lr");
    CHECK(suggest_key("batchsize") == "batch_size");
    CHECK(suggest_key("momentun") == "momentum");
    CHECK(suggest_key("completely_unrelated_option_name").empty());
}

TEST_CASE("all problems are reported at once") {
    const auto p = problems_of(R"({"batch_size": 0, "momentum": "high", "max_epoch": 3, "pad": 1.5})");
    CHECK(p.size() == 4);
    CHECK(mentions(p, "batch_size"));
    CHECK(mentions(p, "momentum"));
    CHECK(mentions(p, "max_epoch"));
    CHECK(mentions(p, "pad"));
}

TEST_CASE("type errors") {
    CHECK(mentions(problems_of(R"({"batch_size": 12.5})"), "expected an integer"));
    CHECK(mentions(problems_of(R"({"global_seed": -3})"), "nonnegative"));
    CHECK(mentions(problems_of(R"({"initial_lr": null})"), "expected a number"));
    CHECK_THROWS_AS(validate_config("[1, 2]"), ConfigError);
    CHECK_THROWS_AS(validate_config("{not json"), ConfigError);
    CHECK_THROWS_AS(validate_config_file("/nonexistent/cfg.json"), ConfigError);
}
