#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <sstream>

#include "dact/checkpoint.hpp"

using namespace dact;

namespace {

Classifier<float> model(ModelKind kind, bool stacked = false, std::uint64_t seed = 3) {
    ModelConfig c;
    c.kind = kind;
    c.sentence_dim = 8;
    c.mlp_hidden = 6;
    c.word_dim = 5;
    c.filters = 4;
    c.model_dim = 6;
    c.heads = 3;
    c.stacked = stacked;
    c.dropout = 0.3;
    Vocabulary v;
    if (kind != ModelKind::mlp) {
        for (const char* w : {"en:hi", "xx:salut", "hi", "ok", "bye"}) v.add(w);
    }
    Rng rng(seed);
    return Classifier<float>::create(c, LabelSet({"GREET", "BYE", "INFORM"}), v, rng);
}

Example random_example(const Classifier<float>& m, std::mt19937_64& rng) {
    std::normal_distribution<float> n(0.0f, 1.0f);
    Example ex;
    ex.previous.resize(m.config.sentence_dim);
    ex.current.resize(m.config.sentence_dim);
    for (auto& v : ex.previous) v = n(rng);
    for (auto& v : ex.current) v = n(rng);
    for (std::size_t i = 0, len = rng() % 16; i < len; ++i)
        ex.english[i] = static_cast<std::int32_t>(1 + rng() % (m.vocab.size() - 1));
    for (std::size_t i = 0, len = rng() % 16; i < len; ++i)
        ex.foreign[i] = static_cast<std::int32_t>(1 + rng() % (m.vocab.size() - 1));
    return ex;
}

std::string bytes(const Classifier<float>& m) {
    std::ostringstream out;
    write_checkpoint(out, m);
    return out.str();
}

Classifier<float> from_bytes(const std::string& s, std::optional<ModelKind> kind = std::nullopt) {
    std::istringstream in(s);
    return read_checkpoint(in, kind);
}

}  // namespace

class CheckpointRoundTrip : public ::testing::TestWithParam<std::pair<ModelKind, bool>> {};

TEST_P(CheckpointRoundTrip, BitIdenticalOutputs) {
    const auto [kind, stacked] = GetParam();
    auto m = model(kind, stacked);
    const auto path = (std::filesystem::temp_directory_path() / ("dact_ckpt_" + to_string(kind) + ".bin")).string();
    save_checkpoint(m, path);
    auto loaded = load_checkpoint(path, kind);
    std::filesystem::remove(path);
    EXPECT_EQ(loaded.config.kind, m.config.kind);
    EXPECT_EQ(loaded.config.stacked, m.config.stacked);
    EXPECT_EQ(loaded.config.dropout, m.config.dropout);
    EXPECT_EQ(loaded.labels, m.labels);
    EXPECT_EQ(loaded.vocab, m.vocab);
    ASSERT_EQ(loaded.params.entries().size(), m.params.entries().size());
    for (std::size_t i = 0; i < m.params.entries().size(); ++i) {
        EXPECT_EQ(loaded.params.entries()[i].name, m.params.entries()[i].name);
        EXPECT_EQ(checksum(loaded.params.entries()[i].value), checksum(m.params.entries()[i].value));
    }
    std::mt19937_64 rng(17);
    for (int i = 0; i < 100; ++i) {
        const auto ex = random_example(m, rng);
        const auto a = m.logits(ex), b = loaded.logits(ex);
        ASSERT_EQ(a.size(), b.size());
        EXPECT_EQ(std::memcmp(a.data(), b.data(), a.size() * sizeof(float)), 0);
    }
    EXPECT_EQ(bytes(loaded), bytes(m));
}

INSTANTIATE_TEST_SUITE_P(AllArchitectures, CheckpointRoundTrip,
                         ::testing::Values(std::pair{ModelKind::mlp, false}, std::pair{ModelKind::cnn, false},
                                           std::pair{ModelKind::mhsatt, false}, std::pair{ModelKind::mhsatt, true}));

TEST(Checkpoint, TruncatedFileIsCorrupt) {
    const auto full = bytes(model(ModelKind::cnn));
    for (std::size_t cut : {std::size_t{0}, std::size_t{5}, std::size_t{12}, full.size() / 2, full.size() - 1}) {
        EXPECT_THROW(from_bytes(full.substr(0, cut)), CheckpointError) << "cut at " << cut;
    }
}

TEST(Checkpoint, ArchitectureMismatch) {
    const auto mlp = bytes(model(ModelKind::mlp));
    try {
        from_bytes(mlp, ModelKind::cnn);
        FAIL();
    } catch (const CheckpointError& e) {
        EXPECT_NE(std::string(e.what()).find("architecture"), std::string::npos);
    }
}

TEST(Checkpoint, VersionMismatch) {
    auto b = bytes(model(ModelKind::mlp));
    b[8] = static_cast<char>(kCheckpointVersion + 1);
    try {
        from_bytes(b);
        FAIL();
    } catch (const CheckpointError& e) {
        EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
    }
}

TEST(Checkpoint, BadMagicRejected) {
    auto b = bytes(model(ModelKind::mlp));
    b[0] = 'X';
    EXPECT_THROW(from_bytes(b), CheckpointError);
}

TEST(Checkpoint, TensorShapeMismatchRejected) {
    // Change the recorded hidden width without touching the tensors.
    auto m = model(ModelKind::mlp);
    auto b = bytes(m);
    const auto pos = b.find("mlp_hidden=6");
    ASSERT_NE(pos, std::string::npos);
    b[pos + 11] = '7';
    EXPECT_THROW(from_bytes(b), CheckpointError);
}

TEST(Checkpoint, CorruptEndMarkerRejected) {
    auto b = bytes(model(ModelKind::mlp));
    b.resize(b.size() - 8);
    b += "DACTEND?";
    EXPECT_THROW(from_bytes(b), CheckpointError);
}

TEST(Checkpoint, MissingFileIsIoError) {
    EXPECT_THROW(load_checkpoint("/nonexistent/model.ckpt"), IoError);
}
