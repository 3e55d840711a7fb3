#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dact/config.hpp"

using namespace dact;

namespace {

RunSettings resolve(const std::string& text, Phase phase, const KeyValues& flags = {},
                    std::optional<ModelKind> hint = std::nullopt) {
    std::istringstream in(text);
    std::vector<std::string> problems;
    auto kv = parse_config_text(in, problems);
    if (!problems.empty()) throw ConfigErrors(problems);
    return resolve_settings(kv, flags, phase, hint);
}

std::vector<std::string> problems_of(const std::string& text, Phase phase, const KeyValues& flags = {}) {
    const auto path = (std::filesystem::temp_directory_path() / "dact_config_test.cfg").string();
    std::ofstream(path) << text;
    try {
        validate_config(path, phase, flags);
    } catch (const ConfigErrors& e) {
        std::filesystem::remove(path);
        return e.problems();
    }
    std::filesystem::remove(path);
    return {};
}

bool mentions(const std::vector<std::string>& problems, const std::string& needle) {
    for (const auto& p : problems)
        if (p.find(needle) != std::string::npos) return true;
    return false;
}

}  // namespace

TEST(Config, EmptyFileGivesInitialDefaults) {
    auto s = resolve("", Phase::initial);
    EXPECT_EQ(s.train.epochs, 200u);
    EXPECT_DOUBLE_EQ(s.train.learning_rate, 0.002);
    EXPECT_EQ(s.model.kind, ModelKind::mlp);
    EXPECT_EQ(s.runs, 10u);
    EXPECT_EQ(s.conditions.size(), 4u);
}

TEST(Config, FinetuneDefaultsFollowModel) {
    EXPECT_EQ(resolve("model = cnn", Phase::finetune).train.epochs, 15u);
    EXPECT_EQ(resolve("model = mlp", Phase::finetune).train.epochs, 25u);
    EXPECT_EQ(resolve("model = mhsatt", Phase::finetune).train.epochs, 50u);
    EXPECT_EQ(resolve("", Phase::finetune, {}, ModelKind::mhsatt).train.epochs, 50u);
    EXPECT_DOUBLE_EQ(resolve("model = cnn", Phase::finetune).train.learning_rate, 0.001);
    EXPECT_EQ(resolve("", Phase::finetune).train.freeze, FreezePolicy::head_only);
}

TEST(Config, ZeroEpochsIsOutOfRange) {
    auto p = problems_of("epochs = 0\n", Phase::initial);
    ASSERT_EQ(p.size(), 1u);
    EXPECT_NE(p[0].find("epochs"), std::string::npos);
    EXPECT_NE(p[0].find("out of range"), std::string::npos);
}

TEST(Config, UnknownKeyIsNamed) {
    auto p = problems_of("[train]\noptimzer = adam\n", Phase::initial);
    ASSERT_EQ(p.size(), 1u);
    EXPECT_NE(p[0].find("optimzer"), std::string::npos);
}

TEST(Config, AllProblemsReportedTogether) {
    auto p = problems_of("epochs = 0\nlr = -1\noptimzer = adam\ndropout = 1.5\n[bogus]\nthis line has no equals\n",
                         Phase::initial);
    EXPECT_EQ(p.size(), 6u);
    EXPECT_TRUE(mentions(p, "'epochs'"));
    EXPECT_TRUE(mentions(p, "'lr'"));
    EXPECT_TRUE(mentions(p, "optimzer"));
    EXPECT_TRUE(mentions(p, "bogus"));
    EXPECT_TRUE(mentions(p, "line 6"));
    EXPECT_TRUE(mentions(p, "dropout"));
}

TEST(Config, BadValuesRejected) {
    EXPECT_THROW(resolve("model = rnn", Phase::initial), ConfigErrors);
    EXPECT_THROW(resolve("model = mhsatt\nheads = 3\nmodel_dim = 128", Phase::initial), ConfigErrors);
    EXPECT_THROW(resolve("freeze_policy = some", Phase::finetune), ConfigErrors);
    EXPECT_THROW(resolve("conditions = scratch,sideways", Phase::finetune), ConfigErrors);
    EXPECT_THROW(resolve("stacked = maybe", Phase::finetune), ConfigErrors);
    EXPECT_THROW(resolve("folds = 1", Phase::initial), ConfigErrors);
    EXPECT_THROW(resolve("epochs = ten", Phase::initial), ConfigErrors);
}

TEST(Config, Precedence) {
    const std::string text = "epochs = 7\n[model]\nepochs = 8\nhidden = 64\n[train]\nepochs = 9\n[finetune]\nepochs = 11\n";
    EXPECT_EQ(resolve("epochs = 7", Phase::initial).train.epochs, 7u);
    EXPECT_EQ(resolve("epochs = 7\n[model]\nepochs = 8", Phase::initial).train.epochs, 8u);
    EXPECT_EQ(resolve(text, Phase::initial).train.epochs, 9u);
    EXPECT_EQ(resolve(text, Phase::finetune).train.epochs, 11u);
    EXPECT_EQ(resolve(text, Phase::finetune, {{"epochs", "12"}}).train.epochs, 12u);
    EXPECT_EQ(resolve(text, Phase::finetune).model.mlp_hidden, 64u);
}

TEST(Config, SectionsAndComments) {
    auto s = resolve("# comment\n; also\n\n[run]\nruns = 3\nconditions = finetune,majority\nthreads=2\n"
                     "[finetune]\nfreeze_policy = all\nextend_vocab = yes\nstacked = true\nmodel = mhsatt\n",
                     Phase::finetune);
    EXPECT_EQ(s.runs, 3u);
    EXPECT_EQ(s.threads, 2u);
    EXPECT_EQ(s.conditions, (std::vector<Condition>{Condition::finetune, Condition::majority}));
    EXPECT_EQ(s.train.freeze, FreezePolicy::all);
    EXPECT_TRUE(s.train.extend_vocab);
    EXPECT_EQ(s.train.stacked, std::optional<bool>(true));
    EXPECT_TRUE(s.model.stacked);
}

TEST(Config, MissingFileIsIoError) {
    EXPECT_THROW(validate_config("/nonexistent/run.cfg", Phase::initial), IoError);
}

TEST(Config, UnknownFlagNamed) {
    try {
        resolve("", Phase::initial, {{"learning_rate", "0.1"}});
        FAIL();
    } catch (const ConfigErrors& e) {
        EXPECT_TRUE(mentions(e.problems(), "learning_rate"));
    }
}
