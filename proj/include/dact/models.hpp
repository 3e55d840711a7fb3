#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dact/corpus.hpp"
#include "dact/embeddings.hpp"
#include "dact/error.hpp"
#include "dact/graph.hpp"
#include "dact/init.hpp"
#include "dact/ops.hpp"
#include "dact/param_store.hpp"
#include "dact/vocab.hpp"

namespace dact {

enum class ModelKind { mlp, cnn, mhsatt };

inline std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::mlp: return "mlp";
        case ModelKind::cnn: return "cnn";
        case ModelKind::mhsatt: return "mhsatt";
    }
    return "?";
}

inline ModelKind parse_model_kind(const std::string& s) {
    if (s == "mlp") return ModelKind::mlp;
    if (s == "cnn") return ModelKind::cnn;
    if (s == "mhsatt") return ModelKind::mhsatt;
    throw ConfigError("unknown model kind '" + s + "' (expected mlp, cnn or mhsatt)");
}

/// Architecture hyperparameters. Defaults are the full-size configuration;
/// tests shrink the widths.
struct ModelConfig {
    ModelKind kind = ModelKind::mlp;
    std::size_t sentence_dim = 1024;
    std::size_t mlp_hidden = 512;
    std::size_t word_dim = 128;
    std::size_t filters = 256;
    std::size_t kernel_width = 3;
    std::size_t model_dim = 128;
    std::size_t heads = 4;
    /// Attention model reads the translated and the original window (30 positions).
    bool stacked = false;
    double dropout = 0.5;

    bool operator==(const ModelConfig&) const = default;

    void validate() const {
        if (sentence_dim == 0) throw ConfigError("sentence_dim must be positive");
        if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
        switch (kind) {
            case ModelKind::mlp:
                if (mlp_hidden == 0) throw ConfigError("mlp hidden width must be positive");
                break;
            case ModelKind::cnn:
                if (word_dim == 0 || filters == 0) throw ConfigError("cnn widths must be positive");
                if (kernel_width == 0 || kernel_width > kWindow)
                    throw ConfigError("cnn kernel width must lie in [1, " + std::to_string(kWindow) + "]");
                break;
            case ModelKind::mhsatt:
                if (heads == 0 || model_dim % heads != 0)
                    throw ConfigError("attention model width " + std::to_string(model_dim) +
                                      " is not divisible by " + std::to_string(heads) + " heads");
                break;
        }
    }

    TextStreams streams() const { return kind == ModelKind::mhsatt ? TextStreams::bilingual : TextStreams::english; }
};

/// Model input for one turn. `current` is used by the MLP only; the token
/// windows by the CNN (english) and the attention model (both).
struct Example {
    std::vector<float> previous;
    std::vector<float> current;
    TokenWindow english = {};
    TokenWindow foreign = {};
    std::size_t label = 0;
};

inline constexpr const char* kHeadWeight = "head.W";
inline constexpr const char* kHeadBias = "head.b";

inline bool is_head_param(const std::string& name) { return name.rfind("head.", 0) == 0; }

/// A dialogue-act classifier: parameters, architecture metadata, the label set
/// its head predicts and the vocabulary its token windows index.
template <typename T>
class Classifier {
public:
    ModelConfig config;
    LabelSet labels;
    Vocabulary vocab;
    ParamStore<T> params;

    /// Fresh model. CNN embedding rows of words found in `pretrained` are
    /// copied from it (and word_dim becomes the table width).
    static Classifier create(ModelConfig cfg, LabelSet labels, Vocabulary vocab, Rng& rng,
                             const WordVectorTable* pretrained = nullptr) {
        if (labels.empty()) throw ConfigError("classifier needs a non-empty label set");
        if (pretrained && cfg.kind == ModelKind::cnn) cfg.word_dim = pretrained->dim;
        cfg.validate();
        Classifier m;
        m.config = cfg;
        m.labels = std::move(labels);
        m.vocab = std::move(vocab);
        switch (cfg.kind) {
            case ModelKind::mlp:
                m.params.add("hidden.W", glorot_uniform<T>({cfg.mlp_hidden, 2 * cfg.sentence_dim}, rng));
                m.params.add("hidden.b", zeros<T>({cfg.mlp_hidden}));
                break;
            case ModelKind::cnn: {
                auto emb = embedding_init(m.vocab.size(), cfg.word_dim, rng);
                if (pretrained) {
                    for (std::size_t id = 2; id < m.vocab.size(); ++id) {
                        if (const auto* v = pretrained->find(m.vocab.token(static_cast<std::int32_t>(id))))
                            std::copy(v->begin(), v->end(), emb.data() + id * cfg.word_dim);
                    }
                }
                m.params.add("embedding", std::move(emb));
                m.params.add("conv.kernels", glorot_uniform<T>({cfg.filters, cfg.kernel_width, cfg.word_dim}, rng));
                m.params.add("conv.bias", zeros<T>({cfg.filters}));
                break;
            }
            case ModelKind::mhsatt:
                m.params.add("embedding", embedding_init(m.vocab.size(), cfg.model_dim, rng));
                for (const char* name : {"attention.W_Q", "attention.W_K", "attention.W_V", "attention.W_O"})
                    m.params.add(name, glorot_uniform<T>({cfg.model_dim, cfg.model_dim}, rng));
                break;
        }
        m.params.add(kHeadWeight, glorot_uniform<T>({m.labels.size(), m.feature_width()}, rng));
        m.params.add(kHeadBias, zeros<T>({m.labels.size()}));
        return m;
    }

    /// Width of the vector entering the classification head.
    std::size_t feature_width() const {
        switch (config.kind) {
            case ModelKind::mlp: return config.mlp_hidden;
            case ModelKind::cnn: return config.filters + config.sentence_dim;
            case ModelKind::mhsatt: return config.model_dim + config.sentence_dim;
        }
        return 0;
    }

    std::size_t sequence_length() const { return config.stacked ? 2 * kWindow : kWindow; }

    /// Records the forward pass into `g` (which must be bound to `params`) and
    /// returns the logits node. Dropout is active only when `training`.
    NodeId forward(Graph<T>& g, const Example& ex, bool training, Rng* rng = nullptr) const {
        check_width(ex.previous, "previous-turn vector");
        Rng dummy(0);
        Rng& r = rng ? *rng : dummy;
        if (training && !rng && config.dropout > 0.0) throw StateError("training forward pass needs a generator");
        const NodeId prev = g.constant(to_tensor(ex.previous));
        NodeId features = kNoNode;
        switch (config.kind) {
            case ModelKind::mlp: {
                check_width(ex.current, "current-turn vector");
                const NodeId x = nn::concat(g, prev, g.constant(to_tensor(ex.current)));
                NodeId h = nn::relu(g, nn::dense(g, x, g.param("hidden.W"), g.param("hidden.b")));
                features = nn::dropout(g, h, config.dropout, training, r);
                break;
            }
            case ModelKind::cnn: {
                const NodeId emb = nn::embedding(g, g.param("embedding"), std::span<const std::int32_t>(ex.english));
                const NodeId conv = nn::relu(g, nn::conv1d(g, emb, g.param("conv.kernels"), g.param("conv.bias")));
                const NodeId turn = nn::global_max_pool(g, conv);
                features = nn::dropout(g, nn::concat(g, turn, prev), config.dropout, training, r);
                break;
            }
            case ModelKind::mhsatt: {
                std::vector<std::int32_t> ids(ex.english.begin(), ex.english.end());
                if (config.stacked) ids.insert(ids.end(), ex.foreign.begin(), ex.foreign.end());
                std::vector<bool> valid(ids.size());
                for (std::size_t i = 0; i < ids.size(); ++i) valid[i] = ids[i] != kPadId;
                const NodeId emb = nn::embedding(g, g.param("embedding"), std::span<const std::int32_t>(ids));
                const NodeId att = nn::multi_head_self_attention(g, emb, g.param("attention.W_Q"),
                                                                 g.param("attention.W_K"), g.param("attention.W_V"),
                                                                 g.param("attention.W_O"), config.heads, valid);
                const NodeId turn = nn::global_max_pool(g, att, valid);
                features = nn::dropout(g, nn::concat(g, turn, prev), config.dropout, training, r);
                break;
            }
        }
        return nn::dense(g, features, g.param(kHeadWeight), g.param(kHeadBias));
    }

    /// Inference-mode logits.
    std::vector<T> logits(const Example& ex) const {
        Graph<T> g(const_cast<ParamStore<T>*>(&params));
        const NodeId out = forward(g, ex, false);
        return g.value(out).values();
    }

    template <typename U>
    Classifier<U> cast() const {
        Classifier<U> out;
        out.config = config;
        out.labels = labels;
        out.vocab = vocab;
        out.params = params.template cast<U>();
        return out;
    }

    static Tensor<T> embedding_init(std::size_t rows, std::size_t dim, Rng& rng) {
        auto emb = glorot_uniform<T>({rows, dim}, rng);
        std::fill(emb.data(), emb.data() + dim, T{0});  // PAD
        return emb;
    }

private:
    void check_width(const std::vector<float>& v, const char* what) const {
        if (v.size() != config.sentence_dim) {
            throw DimensionError(std::string(what) + " has width " + std::to_string(v.size()) + ", model expects " +
                                 std::to_string(config.sentence_dim));
        }
    }

    static Tensor<T> to_tensor(const std::vector<float>& v) {
        return Tensor<T>::vector(std::vector<T>(v.begin(), v.end()));
    }
};

/// Arg-max with ties going to the lowest index.
template <typename T>
std::size_t predict(std::span<const T> logits) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i)
        if (logits[i] > logits[best]) best = i;
    return best;
}

template <typename T>
std::size_t predict(const std::vector<T>& logits) {
    return predict(std::span<const T>(logits));
}

/// Discards the classification head and installs a fresh Glorot-initialized
/// one sized for `new_labels`. Every other tensor is left untouched.
template <typename T>
void replace_head(Classifier<T>& model, const LabelSet& new_labels, std::uint64_t seed) {
    if (new_labels.empty()) throw ConfigError("replace_head: empty label set");
    Rng rng(seed);
    model.labels = new_labels;
    model.params.reset(kHeadWeight, glorot_uniform<T>({new_labels.size(), model.feature_width()}, rng));
    model.params.reset(kHeadBias, zeros<T>({new_labels.size()}));
}

/// Appends vocabulary entries for unseen tokens of `turns`; their embedding
/// rows are drawn fresh. Returns the number of tokens added.
template <typename T>
std::size_t extend_model_vocab(Classifier<T>& model, const std::vector<Turn>& turns, Rng& rng) {
    if (model.config.kind == ModelKind::mlp) return 0;
    const std::size_t old_rows = model.vocab.size();
    const std::size_t added = extend_vocab(model.vocab, turns, model.config.streams());
    if (added == 0) return 0;
    const auto& old = model.params.value("embedding");
    const std::size_t dim = old.dim(1);
    auto fresh = glorot_uniform<T>({model.vocab.size(), dim}, rng);
    std::copy(old.data(), old.data() + old_rows * dim, fresh.data());
    model.params.reset("embedding", std::move(fresh));
    return added;
}

/// Builds the model input for a turn. `gold` maps the turn's tag to the label
/// index stored in the example (pass the label set the evaluation uses).
template <typename T>
Example make_example(const Classifier<T>& model, const Turn& turn, const SentenceEmbeddingTable& sentences,
                     const LabelSet& gold) {
    if (sentences.dim != model.config.sentence_dim) {
        throw DimensionError("sentence embeddings have width " + std::to_string(sentences.dim) + ", model expects " +
                             std::to_string(model.config.sentence_dim));
    }
    Example ex;
    ex.previous = pair_with_previous(turn, sentences);
    ex.label = gold.index_of(turn.label);
    switch (model.config.kind) {
        case ModelKind::mlp:
            ex.current = sentences.at(turn);
            break;
        case ModelKind::cnn:
            ex.english = encode_turn_tokens(english_text(turn), model.vocab);
            break;
        case ModelKind::mhsatt:
            ex.english = encode_turn_tokens(english_text(turn), model.vocab, kEnglishPrefix);
            ex.foreign = encode_turn_tokens(foreign_text(turn), model.vocab, kForeignPrefix);
            break;
    }
    return ex;
}

}  // namespace dact
