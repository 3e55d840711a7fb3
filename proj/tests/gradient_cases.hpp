#pragma once

// Randomized gradient-check cases shared by the unit tests and the acceptance
// runner. Each family runs kCases cases and reports every result to a sink.

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "dact/models.hpp"
#include "dact/ops.hpp"
#include "gradcheck.hpp"

namespace dact::testing::gradient_cases {

inline constexpr int kCases = 20;
inline constexpr double kEps = 1e-3;
inline constexpr std::size_t kMaxElements = 256;

using Sink = std::function<void(const GradCheckResult&)>;

inline Tensor<double> gaussian(Shape shape, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    Tensor<double> t(std::move(shape));
    for (auto& v : t.values()) v = n(rng);
    return t;
}

inline std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// Scalar sum(x * r) for a fixed random r, so every output coordinate matters.
inline NodeId weighted_sum(Graph<double>& g, NodeId x, const Tensor<double>& r) {
    double s = 0;
    for (std::size_t i = 0; i < r.size(); ++i) s += g.value(x)[i] * r[i];
    return g.record(Tensor<double>::vector({s}), {x}, [x, r](Graph<double>& g, NodeId self) {
        const double dy = g.grad(self)[0];
        auto& dx = g.grad(x);
        for (std::size_t i = 0; i < r.size(); ++i) dx[i] += dy * r[i];
    });
}

inline void check(ParamStore<double>& store, const LossBuilder& build, const Sink& sink, const SkipRule& skip = {}) {
    sink(check_gradients(store, build, kEps, kMaxElements, skip));
}

inline void dense(const Sink& sink) {
    std::mt19937_64 rng(101);
    for (int c = 0; c < kCases; ++c) {
        const bool batched = c % 2 == 1;
        const std::size_t in = pick(rng, 1, 6), out = pick(rng, 1, 5), rows = pick(rng, 1, 4);
        ParamStore<double> s;
        s.add("x", batched ? gaussian({rows, in}, rng) : gaussian({in}, rng));
        s.add("W", gaussian({out, in}, rng));
        s.add("b", gaussian({out}, rng));
        const auto r = gaussian(batched ? Shape{rows, out} : Shape{out}, rng);
        check(s, [&](Graph<double>& g) {
            return weighted_sum(g, nn::dense(g, g.param("x"), g.param("W"), g.param("b")), r);
        }, sink);
    }
}

inline void relu(const Sink& sink) {
    std::mt19937_64 rng(102);
    for (int c = 0; c < kCases; ++c) {
        const std::size_t n = pick(rng, 1, 12);
        ParamStore<double> s;
        // keep inputs at least 10 eps from the kink
        auto x = gaussian({n}, rng);
        for (auto& v : x.values()) v += v < 0 ? -0.01 : 0.01;
        s.add("x", std::move(x));
        const auto r = gaussian({n}, rng);
        check(s, [&](Graph<double>& g) { return weighted_sum(g, nn::relu(g, g.param("x")), r); }, sink);
    }
}

inline void dropout(const Sink& sink) {
    std::mt19937_64 rng(103);
    for (int c = 0; c < kCases; ++c) {
        const std::size_t n = pick(rng, 2, 12);
        const std::uint64_t mask_seed = rng();
        ParamStore<double> s;
        s.add("x", gaussian({n}, rng));
        const auto r = gaussian({n}, rng);
        check(s, [&](Graph<double>& g) {
            Rng mask_rng(mask_seed);
            return weighted_sum(g, nn::dropout(g, g.param("x"), 0.5, true, mask_rng), r);
        }, sink);
    }
}

inline void concat(const Sink& sink) {
    std::mt19937_64 rng(104);
    for (int c = 0; c < kCases; ++c) {
        const std::size_t na = pick(rng, 1, 6), nb = pick(rng, 1, 6);
        ParamStore<double> s;
        s.add("a", gaussian({na}, rng));
        s.add("b", gaussian({nb}, rng));
        const auto r = gaussian({na + nb}, rng);
        check(s, [&](Graph<double>& g) { return weighted_sum(g, nn::concat(g, g.param("a"), g.param("b")), r); }, sink);
    }
}

inline void embedding(const Sink& sink) {
    std::mt19937_64 rng(105);
    for (int c = 0; c < kCases; ++c) {
        const std::size_t vocab = pick(rng, 3, 8), dim = pick(rng, 1, 5), len = pick(rng, 1, 7);
        std::vector<std::int32_t> ids(len);
        for (auto& id : ids) id = static_cast<std::int32_t>(pick(rng, 1, vocab - 1));
        ParamStore<double> s;
        s.add("table", gaussian({vocab, dim}, rng));
        const auto r = gaussian({len, dim}, rng);
        check(s, [&](Graph<double>& g) {
            return weighted_sum(g, nn::embedding(g, g.param("table"), std::span<const std::int32_t>(ids)), r);
        }, sink);
    }
}

inline void conv1d(const Sink& sink) {
    std::mt19937_64 rng(106);
    for (int c = 0; c < kCases; ++c) {
        const std::size_t w = pick(rng, 1, 3), len = pick(rng, w, 7), d = pick(rng, 1, 4), f = pick(rng, 1, 4);
        ParamStore<double> s;
        s.add("seq", gaussian({len, d}, rng));
        s.add("kernels", gaussian({f, w, d}, rng));
        s.add("bias", gaussian({f}, rng));
        const auto r = gaussian({len - w + 1, f}, rng);
        check(s, [&](Graph<double>& g) {
            return weighted_sum(g, nn::conv1d(g, g.param("seq"), g.param("kernels"), g.param("bias")), r);
        }, sink);
    }
}

inline void global_max_pool(const Sink& sink) {
    std::mt19937_64 rng(107);
    for (int c = 0; c < kCases; ++c) {
        const std::size_t len = pick(rng, 1, 6), d = pick(rng, 1, 5);
        std::vector<bool> valid(len, true);
        if (c % 2 == 1)
            for (std::size_t p = 0; p < len; ++p) valid[p] = p == 0 || rng() % 3 != 0;
        ParamStore<double> s;
        s.add("x", gaussian({len, d}, rng));
        const auto r = gaussian({d}, rng);
        check(s, [&](Graph<double>& g) { return weighted_sum(g, nn::global_max_pool(g, g.param("x"), valid), r); }, sink);
    }
}

inline void attention(const Sink& sink) {
    std::mt19937_64 rng(108);
    for (int c = 0; c < kCases; ++c) {
        const std::size_t heads = pick(rng, 1, 3), dm = heads * pick(rng, 1, 3), len = pick(rng, 1, 6);
        std::vector<bool> valid;
        if (c % 2 == 1) {
            valid.assign(len, true);
            for (std::size_t p = 1; p < len; ++p) valid[p] = rng() % 3 != 0;
        }
        ParamStore<double> s;
        s.add("x", gaussian({len, dm}, rng));
        for (const char* n : {"wq", "wk", "wv", "wo"}) s.add(n, gaussian({dm, dm}, rng, 0.7));
        const auto r = gaussian({len, dm}, rng);
        check(s, [&](Graph<double>& g) {
            return weighted_sum(g,
                                nn::multi_head_self_attention(g, g.param("x"), g.param("wq"), g.param("wk"),
                                                              g.param("wv"), g.param("wo"), heads, valid),
                                r);
        }, sink);
    }
}

inline void softmax_cross_entropy(const Sink& sink) {
    std::mt19937_64 rng(109);
    for (int c = 0; c < kCases; ++c) {
        const std::size_t k = pick(rng, 2, 8), label = pick(rng, 0, k - 1);
        ParamStore<double> s;
        s.add("logits", gaussian({k}, rng, 2.0));
        check(s, [&](Graph<double>& g) { return nn::softmax_cross_entropy(g, g.param("logits"), label); }, sink);
    }
}

inline LabelSet make_labels(std::size_t k) {
    LabelSet l;
    for (std::size_t i = 0; i < k; ++i) l.add("L" + std::to_string(i));
    return l;
}

inline Vocabulary make_vocab(std::size_t words, const std::string& prefix = "") {
    Vocabulary v;
    for (std::size_t i = 0; i < words; ++i) v.add(prefix + "w" + std::to_string(i));
    return v;
}

inline void random_window(TokenWindow& w, std::size_t vocab, std::mt19937_64& rng, std::size_t min_len = 1) {
    w.fill(kPadId);
    const std::size_t len = pick(rng, min_len, kWindow);
    for (std::size_t i = 0; i < len; ++i) w[i] = static_cast<std::int32_t>(pick(rng, 1, vocab - 1));
}

inline Example random_example(const ModelConfig& cfg, std::size_t vocab, std::size_t k, std::mt19937_64& rng) {
    Example ex;
    std::normal_distribution<float> n(0.0f, 1.0f);
    ex.previous.resize(cfg.sentence_dim);
    for (auto& v : ex.previous) v = n(rng);
    if (cfg.kind == ModelKind::mlp) {
        ex.current.resize(cfg.sentence_dim);
        for (auto& v : ex.current) v = n(rng);
    } else {
        random_window(ex.english, vocab, rng);
        random_window(ex.foreign, vocab, rng);
    }
    ex.label = pick(rng, 0, k - 1);
    return ex;
}

inline void classifier(const ModelConfig& base, std::uint64_t seed, const Sink& sink) {
    std::mt19937_64 rng(seed);
    for (int c = 0; c < kCases; ++c) {
        ModelConfig cfg = base;
        cfg.sentence_dim = pick(rng, 2, 5);
        if (cfg.kind == ModelKind::mhsatt) cfg.stacked = c % 2 == 1;
        const std::size_t k = pick(rng, 2, 4), words = pick(rng, 3, 9);
        Rng init(rng());
        auto model = Classifier<double>::create(cfg, make_labels(k), make_vocab(words), init);
        // Spread body parameters so pre-activations sit away from ReLU and pooling
        // kinks; a smaller head keeps the softmax out of saturation, where the
        // central difference drowns in cancellation.
        std::normal_distribution<double> body(0.0, 0.8), head(0.0, 0.3);
        for (auto& p : model.params.entries())
            for (std::size_t i = 0; i < p.value.size(); ++i)
                if (!(p.name == "embedding" && i < p.value.dim(1))) p.value[i] = is_head_param(p.name) ? head(rng) : body(rng);
        const auto ex = random_example(model.config, model.vocab.size(), k, rng);
        const std::uint64_t dropout_seed = rng();
        const std::size_t pad_cols = model.params.contains("embedding") ? model.params.value("embedding").dim(1) : 0;
        check(
            model.params,
            [&](Graph<double>& g) {
                Rng drop(dropout_seed);
                return nn::softmax_cross_entropy(g, model.forward(g, ex, true, &drop), ex.label);
            },
            sink, [&](const std::string& name, std::size_t i) { return name == "embedding" && i < pad_cols; });
    }
}

/// Desk-sized configurations of the three classifiers.
inline ModelConfig small_classifier(ModelKind kind) {
    ModelConfig cfg;
    cfg.kind = kind;
    cfg.mlp_hidden = 5;
    cfg.word_dim = 3;
    cfg.filters = 4;
    cfg.kernel_width = 3;
    cfg.model_dim = 4;
    cfg.heads = 2;
    return cfg;
}

inline void mlp(const Sink& sink) { classifier(small_classifier(ModelKind::mlp), 201, sink); }
inline void cnn(const Sink& sink) { classifier(small_classifier(ModelKind::cnn), 202, sink); }
inline void mhsatt(const Sink& sink) { classifier(small_classifier(ModelKind::mhsatt), 203, sink); }

struct Family {
    const char* name;
    void (*run)(const Sink&);
};

inline const std::vector<Family>& families() {
    static const std::vector<Family> all = {{"dense", dense},
                                            {"relu", relu},
                                            {"dropout", dropout},
                                            {"concat", concat},
                                            {"embedding", embedding},
                                            {"conv1d", conv1d},
                                            {"global_max_pool", global_max_pool},
                                            {"attention", attention},
                                            {"softmax_cross_entropy", softmax_cross_entropy},
                                            {"mlp_classifier", mlp},
                                            {"cnn_classifier", cnn},
                                            {"mhsatt_classifier", mhsatt}};
    return all;
}

}  // namespace dact::testing::gradient_cases
