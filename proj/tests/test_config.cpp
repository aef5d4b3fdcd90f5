#include <filesystem>
#include <fstream>

#include "catch_amalgamated.hpp"
#include "wph/config.hpp"

using namespace wph;

TEST_CASE("defaults validate") {
    RunConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.channels.gating.family == WaveletFamily::haar);
    CHECK(cfg.channels.gating.depth == 2);
    CHECK(cfg.channels.max_side == 96);
    CHECK(cfg.channels.side == 256);
    CHECK(cfg.channels.apply_mask);
}

TEST_CASE("config text sets every key") {
    RunConfig cfg;
    apply_config_text(cfg, R"(
# full example
family = db4
depth = 3
h1_pct = 0.25   # trailing comment
epsilon = 1e-4
max_side = 64
side = 512
mask = off
h1_order = lowest
diagram_source = wavelet
input = /data/in
output = out
seed = 17
aggregate = max
score_aggregate = mean
concat = true
dump_pyramid = yes
workers = 3
)");
    const auto& g = cfg.channels.gating;
    CHECK(g.family == WaveletFamily::db4);
    CHECK(g.depth == 3);
    CHECK(g.h1_pct == 0.25);
    CHECK(g.epsilon == 1e-4);
    CHECK(g.h1_order == H1Order::lowest);
    CHECK(cfg.channels.max_side == 64);
    CHECK(cfg.channels.side == 512);
    CHECK(!cfg.channels.apply_mask);
    CHECK(cfg.channels.diagram_source == DiagramSource::wavelet);
    CHECK(cfg.input == "/data/in");
    CHECK(cfg.output == "out");
    CHECK(cfg.seed == 17);
    CHECK(cfg.embedding_aggregate == AggregateMode::max);
    CHECK(cfg.score_aggregate == AggregateMode::mean);
    CHECK(cfg.concat);
    CHECK(cfg.dump_pyramid);
    CHECK(cfg.workers == 3);
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("later values override earlier ones") {
    RunConfig cfg;
    apply_config_text(cfg, "depth = 1\n");
    set_config_value(cfg, "depth", "3");
    CHECK(cfg.channels.gating.depth == 3);
}

TEST_CASE("malformed config is a configuration error") {
    RunConfig cfg;
    CHECK_THROWS_AS(apply_config_text(cfg, "depth 2\n"), ConfigError);
    CHECK_THROWS_AS(apply_config_text(cfg, "colour = red\n"), ConfigError);
    CHECK_THROWS_AS(apply_config_text(cfg, "depth = two\n"), ConfigError);
    CHECK_THROWS_AS(apply_config_text(cfg, "depth = 2.5\n"), ConfigError);
    CHECK_THROWS_AS(apply_config_text(cfg, "mask = maybe\n"), ConfigError);
    CHECK_THROWS_AS(apply_config_text(cfg, "family = db3\n"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/wph.cfg"), ConfigError);
}

TEST_CASE("validation rejects out-of-range parameters") {
    auto rejects = [](const std::string& key, const std::string& value) {
        RunConfig cfg;
        set_config_value(cfg, key, value);
        return [cfg] { cfg.validate(); };
    };
    CHECK_THROWS_AS(rejects("depth", "0")(), ConfigError);
    CHECK_THROWS_AS(rejects("depth", "4")(), ConfigError);
    CHECK_THROWS_AS(rejects("h1_pct", "0")(), ConfigError);
    CHECK_THROWS_AS(rejects("h1_pct", "1.5")(), ConfigError);
    CHECK_THROWS_AS(rejects("epsilon", "0")(), ConfigError);
    CHECK_THROWS_AS(rejects("epsilon", "-1")(), ConfigError);
    CHECK_THROWS_AS(rejects("max_side", "7")(), ConfigError);
    CHECK_THROWS_AS(rejects("side", "200")(), ConfigError);
    CHECK_THROWS_AS(rejects("workers", "0")(), ConfigError);
    CHECK_NOTHROW(rejects("h1_pct", "1")());
    CHECK_NOTHROW(rejects("max_side", "8")());

    RunConfig tight;
    apply_config_text(tight, "family = db4\ndepth = 3\nside = 32\n");
    CHECK_THROWS_AS(tight.validate(), ConfigError);
}

TEST_CASE("canonical text round trips and hashes stably") {
    RunConfig cfg;
    apply_config_text(cfg, "family = db2\nh1_pct = 0.1\nseed = 5\n");
    const auto text = canonical_config(cfg);
    RunConfig back;
    apply_config_text(back, text);
    CHECK(canonical_config(back) == text);
    CHECK(config_hash(back) == config_hash(cfg));
    CHECK(config_hash(cfg).size() == 64);

    const auto path = std::filesystem::temp_directory_path() / "wph_test_config.cfg";
    std::ofstream(path) << text;
    CHECK(config_hash(load_config(path)) == config_hash(cfg));
    std::filesystem::remove(path);
}

TEST_CASE("hash ignores paths and workers but tracks output-affecting keys") {
    RunConfig base;
    const auto h = config_hash(base);
    for (const auto& [key, value] : std::vector<std::pair<std::string, std::string>>{
             {"input", "/a"}, {"output", "/b"}, {"workers", "4"}}) {
        RunConfig c = base;
        set_config_value(c, key, value);
        CHECK(config_hash(c) == h);
    }
    for (const auto& [key, value] : std::vector<std::pair<std::string, std::string>>{
             {"family", "db2"}, {"depth", "1"}, {"h1_pct", "0.25"}, {"epsilon", "1e-5"}, {"max_side", "64"},
             {"side", "128"}, {"mask", "false"}, {"h1_order", "lowest"}, {"diagram_source", "wavelet"},
             {"seed", "1"}, {"aggregate", "max"}, {"score_aggregate", "mean"}, {"concat", "true"},
             {"dump_pyramid", "true"}}) {
        RunConfig c = base;
        set_config_value(c, key, value);
        INFO(key);
        CHECK(config_hash(c) != h);
    }
}

TEST_CASE("every listed key is accepted") {
    for (const auto& key : config_keys()) {
        RunConfig cfg;
        const std::string value = key == "family" ? "haar"
                                  : key == "h1_order" ? "top"
                                  : key == "diagram_source" ? "image"
                                  : key == "aggregate" || key == "score_aggregate" ? "mean"
                                  : key == "mask" || key == "concat" || key == "dump_pyramid" ? "true"
                                  : key == "input" || key == "output" ? "x"
                                  : key == "h1_pct" ? "0.5"
                                  : key == "epsilon" ? "1e-6"
                                  : key == "max_side" ? "96"
                                  : key == "side" ? "256"
                                  : key == "depth" ? "2"
                                                     : "1";
        INFO(key);
        CHECK_NOTHROW(set_config_value(cfg, key, value));
    }
}
