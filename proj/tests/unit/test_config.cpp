#include "doctest.h"
#include "evtrack/config.hpp"
#include "evtrack/error.hpp"

using namespace evtrack;

TEST_CASE("defaults") {
    RunConfig c;
    CHECK(c.train.epochs == 50);
    CHECK(c.train.momentum == 0.9);
    CHECK(c.train.weight_decay == 5e-4);
    CHECK(c.train.lr_start == 1e-2);
    CHECK(c.train.lr_end == 1e-5);
    CHECK(c.tracker.window_influence == 0.176);
    CHECK(c.tracker.edge_ratio == 0.05);
    CHECK(c.tracker.window_us == 40000);
    CHECK(c.tracker.upsample == 16);
    CHECK(c.embedding().bins == 9);
    CHECK(c.sim.positive_threshold == 0.15);
    CHECK(c.sim.negative_threshold == 0.15);
    CHECK(c.sim.log_epsilon == 1e-3);
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("documented keys parse") {
    RunConfig c = parse_config(
        "# comment\n"
        "embedding.bins = 3\n"
        "\n"
        "tracker.window_influence = 0.25\n"
        "tracker.window_us = 20000\n"
        "tracker.exemplar_policy = sliding\n"
        "train.epochs = 7\n"
        "train.lr_start = 0.02\n"
        "train.lr_end = 0.0001\n"
        "train.momentum = 0.8\n"
        "train.weight_decay = 0.001\n"
        "sim.threshold = 0.2\n"
        "seed = 42   # trailing comment\n");
    CHECK(c.embedding().bins == 3);
    CHECK(c.tracker.window_influence == 0.25);
    CHECK(c.tracker.window_us == 20000);
    CHECK(c.tracker.exemplar_policy == ExemplarPolicy::Sliding);
    CHECK(c.train.epochs == 7);
    CHECK(c.train.lr_start == 0.02);
    CHECK(c.train.lr_end == 0.0001);
    CHECK(c.train.momentum == 0.8);
    CHECK(c.train.weight_decay == 0.001);
    CHECK(c.sim.positive_threshold == 0.2);
    CHECK(c.sim.negative_threshold == 0.2);
    CHECK(c.seed == 42);
}

TEST_CASE("format then parse reproduces the configuration") {
    RunConfig c;
    c.tracker.scales = {0.96, 1.0, 1.04};
    c.tracker.embedding.method = EmbeddingMethod::TwoChannelVoxel;
    c.train.width = 0.5;
    c.train.use_init = false;
    c.sim.negative_threshold = 0.17;
    c.seed = 123456789012345ULL;
    c.dataset = "data/set";
    c.tracker.window_influence = 0.1 + 0.2;
    std::string text = format_config(c);
    RunConfig back = parse_config(text);
    CHECK(format_config(back) == text);
    CHECK(back.tracker.scales == c.tracker.scales);
    CHECK(back.tracker.window_influence == c.tracker.window_influence);
    CHECK(back.seed == c.seed);
    CHECK(back.dataset == "data/set");
    CHECK_FALSE(back.train.use_init);
    CHECK(format_config(parse_config(format_config(RunConfig{}))) == format_config(RunConfig{}));
}

TEST_CASE("malformed configurations report the line") {
    try {
        parse_config("seed = 1\nbogus.key = 3\n", "run.cfg");
        FAIL("unknown key accepted");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("run.cfg:2") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config("train.epochs = many\n"), ParseError);
    CHECK_THROWS_AS(parse_config("train.epochs\n"), ParseError);
    CHECK_THROWS_AS(parse_config("train.epochs = 0\n"), ParseError);
    CHECK_THROWS_AS(parse_config("tracker.window_influence = 2\n"), ParseError);
}

TEST_CASE("set_config_value") {
    RunConfig c;
    set_config_value(c, "train.epochs", "3");
    CHECK(c.train.epochs == 3);
    CHECK_THROWS(set_config_value(c, "nope", "1"));
}
