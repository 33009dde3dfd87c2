#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "ppmkit/experiment.hpp"
#include "ppmkit/toml_lite.hpp"

using namespace ppm;

TEST_SUITE_BEGIN("toml_config");

TEST_CASE("toml subset parsing") {
    SUBCASE("scalars, arrays, comments") {
        auto doc = parse_toml_lite(R"(
# comment
name = "hello world"   # trailing comment
count = 42
ratio = 0.75
flag = true
items = [1, 2, 3]
words = ["a", "b"]
)");
        CHECK(doc["name"] == "hello world");
        CHECK(doc["count"] == 42);
        CHECK(doc["ratio"] == 0.75);
        CHECK(doc["flag"] == true);
        CHECK(doc["items"].size() == 3);
        CHECK(doc["words"][1] == "b");
    }
    SUBCASE("tables and nested tables") {
        auto doc = parse_toml_lite("[a]\nx = 1\n[a.b]\ny = 2\n");
        CHECK(doc["a"]["x"] == 1);
        CHECK(doc["a"]["b"]["y"] == 2);
    }
    SUBCASE("arrays of tables") {
        auto doc = parse_toml_lite("[[items]]\nname = \"first\"\n[[items]]\nname = \"second\"\n");
        REQUIRE(doc["items"].size() == 2);
        CHECK(doc["items"][0]["name"] == "first");
        CHECK(doc["items"][1]["name"] == "second");
    }
    SUBCASE("string escapes") {
        auto doc = parse_toml_lite(R"(text = "line\nbreak \"quoted\"")");
        CHECK(doc["text"] == "line\nbreak \"quoted\"");
    }
    SUBCASE("errors carry line numbers") {
        CHECK_THROWS_WITH_AS(parse_toml_lite("x = 1\ny 2\n", "cfg"),
                             doctest::Contains("cfg:2"), Error);
        CHECK_THROWS_AS(parse_toml_lite("x = \"unterminated\n"), Error);
        CHECK_THROWS_AS(parse_toml_lite("x = 1\nx = 2\n"), Error);
        CHECK_THROWS_AS(parse_toml_lite("[table\n"), Error);
    }
}

namespace {

std::string data_dir() {
    const char* dir = std::getenv("PPMKIT_DATA_DIR");
    return dir ? dir : "data";
}

const char* kMinimalConfig = R"(
[experiment]
name = "mini"
log_path = "log.csv"
kpi = "total_time"
n_train = 5
repetitions = 2

[schema]
[[schema.attributes]]
name = "amount"
type = "numeric"
scope = "global"
)";

}  // namespace

TEST_CASE("config loading") {
    SUBCASE("bundled configs parse") {
        ExperimentConfig total = load_config(data_dir() + "/synthetic_total_time.toml");
        CHECK(total.schema.kpi == KpiKind::TotalTime);
        CHECK(total.n_train == 100);
        CHECK(total.repetitions == 3);
        CHECK(total.hashed);
        CHECK(total.learners.size() == 4);
        CHECK(total.learners[0].id() == "knn_act median");
        CHECK(total.mode == LlmMode::Replay);

        ExperimentConfig occ = load_config(data_dir() + "/synthetic_occurrence.toml");
        CHECK(occ.schema.kpi == KpiKind::ActivityOccurrence);
        CHECK(occ.schema.target_activity == "Final Review");
        // No learners listed: the default classification set applies.
        CHECK(occ.effective_learners().size() == 4);
    }
    SUBCASE("minimal config and defaults") {
        ExperimentConfig config = config_from_json(parse_toml_lite(kMinimalConfig));
        CHECK(config.name == "mini");
        CHECK(config.split_fraction == 0.8);
        CHECK(config.effective_seeds() == std::vector<std::uint64_t>{1, 2});
        CHECK(config.effective_learners().size() == 12);
    }
    SUBCASE("unknown keys are hard errors") {
        std::string bad = std::string(kMinimalConfig) + "typo_key = 1\n";
        CHECK_THROWS_WITH_AS(config_from_json(parse_toml_lite(bad)),
                             doctest::Contains("unknown key 'typo_key'"), Error);
    }
    SUBCASE("seeds must match repetitions") {
        std::string bad = std::string(kMinimalConfig) + "seeds = [1, 2, 3]\n";
        CHECK_THROWS_AS(config_from_json(parse_toml_lite(bad)), Error);
    }
    SUBCASE("occurrence kpi requires a target activity") {
        std::string bad = kMinimalConfig;
        bad.replace(bad.find("total_time"), 10, "activity_occurrence");
        CHECK_THROWS_AS(config_from_json(parse_toml_lite(bad)), Error);
    }
    SUBCASE("learner families must match the kpi") {
        std::string bad = std::string(kMinimalConfig) +
                          "[[learners]]\nfamily = \"positive_evidence\"\n";
        CHECK_THROWS_AS(config_from_json(parse_toml_lite(bad)), Error);
    }
}

TEST_CASE("config json round trip and digest") {
    ExperimentConfig config = load_config(data_dir() + "/synthetic_total_time.toml");
    ExperimentConfig reloaded = config_from_json(config_to_json(config));
    CHECK(config_digest(config) == config_digest(reloaded));
    CHECK(reloaded.llm.model_name == config.llm.model_name);
    CHECK(reloaded.learners.size() == config.learners.size());

    // Digest reacts to content changes.
    reloaded.n_train += 1;
    CHECK(config_digest(config) != config_digest(reloaded));
}

TEST_SUITE_END();
