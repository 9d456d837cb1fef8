#include <gtest/gtest.h>

#include <map>
#include <string>

#include "lfss/config.hpp"

using namespace lfss;

namespace {

std::string value_of(const std::string& dumped, const std::string& key) {
    const std::string prefix = key + " = ";
    std::size_t pos = 0;
    while (pos < dumped.size()) {
        const std::size_t end = dumped.find('\n', pos);
        const std::string line = dumped.substr(pos, end - pos);
        if (line.rfind(prefix, 0) == 0) return line.substr(prefix.size());
        pos = end + 1;
    }
    return "<missing>";
}

template <class Fn>
std::string error_of(Fn&& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(Config, EmptyTextGivesDefaults) {
    const RunConfig c = parse_config_text("# nothing but a comment\n\n");
    EXPECT_EQ(dump(c), dump(RunConfig{}));
}

TEST(Config, DefaultConstants) {
    const std::string d = dump(RunConfig{});
    EXPECT_EQ(value_of(d, "window"), "60");
    EXPECT_EQ(value_of(d, "cost"), "0.002");
    EXPECT_EQ(value_of(d, "agent.learning_rate"), "0.01");
    EXPECT_EQ(value_of(d, "agent.batch_size"), "32");
    EXPECT_EQ(value_of(d, "pv0"), "10000");
    EXPECT_EQ(value_of(d, "extractor.zoomsvd.block"), "60");
    EXPECT_EQ(value_of(d, "extractor.ae.latent"), "30");
    EXPECT_EQ(value_of(d, "split"), "0.7");
    EXPECT_EQ(value_of(d, "benchmarks"), "EW,WMAMR,IMVK-moderate,IMVK-aggressive");
}

TEST(Config, DumpRoundTrips) {
    RunConfig c;
    c.window = 20;
    c.extractor = ExtractorKind::crbm;
    c.cost = 0.0015;
    c.agent.optimizer = Optimizer::adam;
    c.benchmarks = {Benchmark::ew, Benchmark::imvk_aggressive};
    c.seed = 99;
    const RunConfig back = parse_config_text(dump(c));
    EXPECT_EQ(dump(back), dump(c));
    EXPECT_EQ(config_hash(back), config_hash(c));
}

TEST(Config, RangeErrorNamesTheField) {
    const std::string msg = error_of([] { parse_config_text("cost = -0.1\n"); });
    EXPECT_NE(msg.find("cost"), std::string::npos) << msg;
    EXPECT_THROW(parse_config_text("cost = -0.1\n"), ValidationError);
    EXPECT_THROW(parse_config_text("split = 1.0\n"), ValidationError);
    EXPECT_THROW(parse_config_text("window = 1\n"), ValidationError);
    EXPECT_THROW(parse_config_text("agent.gamma = 1.5\n"), ValidationError);
    EXPECT_THROW(parse_config_text("extractor.ae.variant = conv\nwindow = 62\n"), ValidationError);
    EXPECT_THROW(parse_config_text("data.source = /no/such/file.csv\n"), ValidationError);
}

TEST(Config, UnknownKeyIsParseErrorWithLine) {
    try {
        parse_config_text("window = 30\nwindw = 30\n");
        FAIL() << "unknown key accepted";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
        EXPECT_NE(std::string(e.what()).find("windw"), std::string::npos);
    }
}

TEST(Config, DuplicateKeyRejected) {
    EXPECT_THROW(parse_config_text("seed = 1\nseed = 2\n"), ParseError);
}

TEST(Config, MalformedValuesRejected) {
    EXPECT_THROW(parse_config_text("window = sixty\n"), ParseError);
    EXPECT_THROW(parse_config_text("filter.enabled = maybe\n"), ParseError);
    EXPECT_THROW(parse_config_text("extractor = pca\n"), ParseError);
    EXPECT_THROW(parse_config_text("benchmarks = EW,XYZ\n"), ParseError);
    EXPECT_THROW(parse_config_text("just a line\n"), ParseError);
}

TEST(Config, EnvOverrides) {
    std::map<std::string, std::string> env{{"LFSS_SEED", "17"}, {"LFSS_OUTPUT_DIR", "/tmp/elsewhere"}};
    auto lookup = [&](const char* k) -> const char* {
        const auto it = env.find(k);
        return it == env.end() ? nullptr : it->second.c_str();
    };
    RunConfig c;
    apply_env_overrides(c, lookup);
    EXPECT_EQ(c.seed, 17u);
    EXPECT_EQ(c.output_dir, "/tmp/elsewhere");
    env["LFSS_SEED"] = "-3";
    EXPECT_THROW(apply_env_overrides(c, lookup), ValidationError);
}

TEST(Config, HashIgnoresOutputDirOnly) {
    RunConfig a, b;
    b.output_dir = "somewhere/else";
    EXPECT_EQ(config_hash(a), config_hash(b));
    b.seed = 1;
    EXPECT_NE(config_hash(a), config_hash(b));
    EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(Config, StageSeedsDifferByStageAndRunSeed) {
    RunConfig a, b;
    b.seed = 5;
    EXPECT_NE(stage_seed(a, 1), stage_seed(a, 2));
    EXPECT_NE(stage_seed(a, 1), stage_seed(b, 1));
    EXPECT_EQ(stage_seed(a, 3), stage_seed(RunConfig{}, 3));
}
