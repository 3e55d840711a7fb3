#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "dact/adam.hpp"
#include "dact/corpus.hpp"
#include "dact/embeddings.hpp"
#include "dact/error.hpp"
#include "dact/models.hpp"
#include "dact/ops.hpp"
#include "dact/sampling.hpp"

namespace dact {

enum class FreezePolicy { head_only, all };

inline std::string to_string(FreezePolicy p) { return p == FreezePolicy::head_only ? "head_only" : "all"; }

inline FreezePolicy parse_freeze_policy(const std::string& s) {
    if (s == "head_only") return FreezePolicy::head_only;
    if (s == "all") return FreezePolicy::all;
    throw ConfigError("unknown freeze policy '" + s + "' (expected head_only or all)");
}

struct TrainConfig {
    std::size_t epochs = 200;
    double learning_rate = 0.002;
    std::size_t batch_size = 32;
    std::uint64_t seed = 1;
    /// Fine-tuning only: which tensors are updated.
    FreezePolicy freeze = FreezePolicy::head_only;
    /// Fine-tuning only: grow the vocabulary with the target corpus tokens.
    bool extend_vocab = false;
    /// Fine-tuning only: switch the attention model to stacked input.
    std::optional<bool> stacked;

    void validate() const {
        if (epochs < 1) throw ConfigError("epochs must be >= 1");
        if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
        if (batch_size < 1) throw ConfigError("batch size must be >= 1");
    }
};

/// Initial-phase defaults: 200 epochs at learning rate 0.002.
inline TrainConfig initial_defaults() { return TrainConfig{}; }

/// Fine-tuning defaults: 15 (CNN), 25 (MLP) or 50 (attention) epochs at 0.001.
inline TrainConfig finetune_defaults(ModelKind kind) {
    TrainConfig c;
    c.learning_rate = 0.001;
    switch (kind) {
        case ModelKind::cnn: c.epochs = 15; break;
        case ModelKind::mlp: c.epochs = 25; break;
        case ModelKind::mhsatt: c.epochs = 50; break;
    }
    return c;
}

/// Pretrained inputs shared (read-only) by every run.
struct Resources {
    const SentenceEmbeddingTable* sentences = nullptr;
    const WordVectorTable* word_vectors = nullptr;

    const SentenceEmbeddingTable& require_sentences() const {
        if (!sentences) throw MissingEmbeddingError("sentence embeddings are required for the previous-turn input");
        return *sentences;
    }
};

struct TrainResult {
    Classifier<float> model;
    std::vector<double> epoch_losses;
};

template <typename T>
std::vector<Example> featurize(const Classifier<T>& model, const std::vector<Turn>& turns,
                               const SentenceEmbeddingTable& sentences, const LabelSet& gold) {
    std::vector<Example> out;
    out.reserve(turns.size());
    for (const auto& t : turns) out.push_back(make_example(model, t, sentences, gold));
    return out;
}

/// Mini-batch Adam on mean softmax cross-entropy. Returns the mean training
/// loss of every epoch. Only parameters flagged trainable change.
template <typename T>
std::vector<double> fit(Classifier<T>& model, const std::vector<Example>& data, const TrainConfig& cfg) {
    cfg.validate();
    if (data.empty()) throw ConfigError("no training examples");
    Rng rng(cfg.seed * 0x9E3779B97F4A7C15ull + 0x1234567ull);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> losses;
    losses.reserve(cfg.epochs);
    Graph<T> g(&model.params);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double total = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const T scale = T(1) / T(end - start);
            model.params.zero_grad();
            for (std::size_t i = start; i < end; ++i) {
                const auto& ex = data[order[i]];
                g.clear();
                const NodeId logits = model.forward(g, ex, true, &rng);
                const NodeId loss = nn::softmax_cross_entropy(g, logits, ex.label);
                total += static_cast<double>(g.value(loss)[0]);
                g.backward(loss, scale);
            }
            adam_step(model.params, cfg.learning_rate);
        }
        losses.push_back(total / static_cast<double>(data.size()));
    }
    return losses;
}

template <typename T>
void set_freeze_policy(Classifier<T>& model, FreezePolicy policy) {
    for (auto& p : model.params.entries()) p.trainable = policy == FreezePolicy::all || is_head_param(p.name);
}

/// Initial phase: builds the vocabulary (token models), creates a model for
/// `labels` and trains it on the source corpus.
inline TrainResult train_initial(const std::vector<Turn>& turns, const LabelSet& labels, ModelConfig model_cfg,
                                 const TrainConfig& cfg, const Resources& res) {
    cfg.validate();
    if (turns.empty()) throw ConfigError("train_initial: empty corpus");
    const auto& sentences = res.require_sentences();
    model_cfg.sentence_dim = sentences.dim;
    Vocabulary vocab;
    if (model_cfg.kind != ModelKind::mlp) vocab = build_vocab(turns, model_cfg.streams());
    Rng init_rng(cfg.seed);
    const WordVectorTable* pretrained = model_cfg.kind == ModelKind::cnn ? res.word_vectors : nullptr;
    auto model = Classifier<float>::create(model_cfg, labels, std::move(vocab), init_rng, pretrained);
    auto data = featurize(model, turns, sentences, labels);
    auto losses = fit(model, data, cfg);
    return {std::move(model), std::move(losses)};
}

/// Fine-tuning phase: replaces the head for `labels` and trains on the target
/// corpus under the configured freeze policy. The source model is not modified.
inline TrainResult finetune(const Classifier<float>& source, const std::vector<Turn>& turns, const LabelSet& labels,
                            const TrainConfig& cfg, const Resources& res) {
    cfg.validate();
    if (turns.empty()) throw ConfigError("finetune: no target training examples");
    for (const auto& t : turns) {
        if (!labels.contains(t.label))
            throw ConfigError("finetune: target turn label '" + t.label + "' is not in the target label set");
    }
    const auto& sentences = res.require_sentences();
    Classifier<float> model = source;
    if (cfg.stacked) {
        if (*cfg.stacked && model.config.kind != ModelKind::mhsatt)
            throw ConfigError("stacked input is only defined for the attention model");
        model.config.stacked = *cfg.stacked;
    }
    Rng rng(cfg.seed ^ 0xA5A5A5A5ull);
    if (cfg.extend_vocab) extend_model_vocab(model, turns, rng);
    replace_head(model, labels, cfg.seed);
    model.params.reset_optimizer_state();
    set_freeze_policy(model, cfg.freeze);
    auto data = featurize(model, turns, sentences, labels);
    auto losses = fit(model, data, cfg);
    set_freeze_policy(model, FreezePolicy::all);
    return {std::move(model), std::move(losses)};
}

/// Accuracy plus a confusion matrix (rows = gold, columns = predicted).
struct Evaluation {
    double accuracy = 0.0;
    std::size_t correct = 0;
    std::size_t total = 0;
    std::vector<std::string> row_labels;
    std::vector<std::string> column_labels;
    std::vector<std::vector<std::size_t>> confusion;
};

inline Evaluation empty_evaluation(const std::vector<std::string>& rows, const std::vector<std::string>& cols) {
    Evaluation e;
    e.row_labels = rows;
    e.column_labels = cols;
    e.confusion.assign(rows.size(), std::vector<std::size_t>(cols.size(), 0));
    return e;
}

inline void finish(Evaluation& e) {
    e.accuracy = e.total ? static_cast<double>(e.correct) / static_cast<double>(e.total) : 0.0;
}

/// Evaluates against the model's own label set.
template <typename T>
Evaluation evaluate_accuracy(const Classifier<T>& model, const std::vector<Turn>& turns, const Resources& res) {
    if (turns.empty()) throw ConfigError("evaluate_accuracy: empty test set");
    const auto& sentences = res.require_sentences();
    auto e = empty_evaluation(model.labels.tags(), model.labels.tags());
    for (const auto& t : turns) {
        const auto ex = make_example(model, t, sentences, model.labels);
        const auto pred = predict(model.logits(ex));
        ++e.confusion[ex.label][pred];
        ++e.total;
        if (pred == ex.label) ++e.correct;
    }
    finish(e);
    return e;
}

/// Evaluates a model whose labels differ from the test labels: predictions map
/// to `target` by identical tag strings; unmapped predictions count as errors
/// and land in a trailing "<unmapped>" column.
template <typename T>
Evaluation evaluate_mapped(const Classifier<T>& model, const std::vector<Turn>& turns, const LabelSet& target,
                           const Resources& res) {
    if (turns.empty()) throw ConfigError("evaluate: empty test set");
    std::vector<std::optional<std::size_t>> mapping(model.labels.size());
    bool any = false;
    for (std::size_t i = 0; i < model.labels.size(); ++i) {
        mapping[i] = target.find(model.labels.tag(i));
        any = any || mapping[i].has_value();
    }
    if (!any) throw ConfigError("no dialogue-act tag is shared between the model and the target label set");
    const auto& sentences = res.require_sentences();
    auto cols = target.tags();
    cols.push_back("<unmapped>");
    auto e = empty_evaluation(target.tags(), cols);
    for (const auto& t : turns) {
        auto ex = make_example(model, t, sentences, target);
        const auto pred = mapping[predict(model.logits(ex))];
        const std::size_t col = pred ? *pred : target.size();
        ++e.confusion[ex.label][col];
        ++e.total;
        if (pred && *pred == ex.label) ++e.correct;
    }
    finish(e);
    return e;
}

struct MajorityResult {
    std::size_t label = 0;
    double accuracy = 0.0;
    Evaluation evaluation;
};

/// Always predicts the most frequent training label (ties: label-set order).
inline MajorityResult majority_class_baseline(const std::vector<Turn>& train, const std::vector<Turn>& test,
                                              const LabelSet& labels) {
    if (train.empty() || test.empty()) throw ConfigError("majority baseline needs non-empty train and test sets");
    const auto counts = label_counts(train, labels);
    const auto label = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    auto e = empty_evaluation(labels.tags(), labels.tags());
    for (const auto& t : test) {
        const auto gold = labels.index_of(t.label);
        ++e.confusion[gold][label];
        ++e.total;
        if (gold == label) ++e.correct;
    }
    finish(e);
    return {label, e.accuracy, std::move(e)};
}

/// Per-run accuracies with their mean and sample standard deviation (n - 1).
struct RunResult {
    std::vector<double> accuracies;
    double mean = 0.0;
    double std_dev = 0.0;
    /// False for a single run, where the deviation is reported as 0.
    bool std_defined = false;
    Evaluation last;
};

inline void summarize(RunResult& r) {
    const double n = static_cast<double>(r.accuracies.size());
    r.mean = r.accuracies.empty() ? 0.0 : std::accumulate(r.accuracies.begin(), r.accuracies.end(), 0.0) / n;
    r.std_defined = r.accuracies.size() > 1;
    if (!r.std_defined) {
        r.std_dev = 0.0;
        return;
    }
    double ss = 0.0;
    for (double a : r.accuracies) ss += (a - r.mean) * (a - r.mean);
    r.std_dev = std::sqrt(ss / (n - 1.0));
}

using Experiment = std::function<Evaluation(std::uint64_t seed)>;

/// Runs `experiment` with seeds base_seed + 0 ... base_seed + runs - 1, on up
/// to `threads` worker threads. Results are ordered by seed.
inline RunResult run_repeated(const Experiment& experiment, std::size_t runs, std::uint64_t base_seed = 0,
                              std::size_t threads = 1) {
    if (runs < 1) throw ConfigError("run_repeated needs runs >= 1");
    std::vector<Evaluation> results(runs);
    threads = std::max<std::size_t>(1, std::min(threads, runs));
    if (threads == 1) {
        for (std::size_t i = 0; i < runs; ++i) results[i] = experiment(base_seed + i);
    } else {
        std::vector<std::exception_ptr> errors(runs);
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < threads; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < runs; i += threads) {
                    try {
                        results[i] = experiment(base_seed + i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }
    RunResult r;
    for (const auto& e : results) r.accuracies.push_back(e.accuracy);
    r.last = results.back();
    summarize(r);
    return r;
}

struct CrossValidationResult {
    RunResult folds;
    double pooled_accuracy = 0.0;
    std::size_t correct = 0;
    std::size_t total = 0;
};

using FoldExperiment =
    std::function<Evaluation(const std::vector<Turn>& train, const std::vector<Turn>& test, std::uint64_t seed)>;

/// k-fold cross-validation: each fold is evaluated by a model built from the
/// other k - 1 folds. Reports the mean over folds and the pooled accuracy.
inline CrossValidationResult cross_validate(const std::vector<Turn>& turns, std::size_t k, std::uint64_t seed,
                                            const FoldExperiment& experiment, std::size_t threads = 1) {
    const auto folds = kfold_split(turns.size(), k, seed);
    std::vector<Evaluation> per_fold(k);
    auto run_fold = [&](std::uint64_t fold_seed) {
        const std::size_t f = static_cast<std::size_t>(fold_seed - seed);
        std::vector<Turn> train, test;
        for (std::size_t j = 0; j < k; ++j) {
            auto part = select(turns, folds[j]);
            auto& dst = j == f ? test : train;
            dst.insert(dst.end(), part.begin(), part.end());
        }
        per_fold[f] = experiment(train, test, fold_seed);
        return per_fold[f];
    };
    CrossValidationResult cv;
    cv.folds = run_repeated(run_fold, k, seed, threads);
    for (const auto& e : per_fold) {
        cv.correct += e.correct;
        cv.total += e.total;
    }
    cv.pooled_accuracy = cv.total ? static_cast<double>(cv.correct) / static_cast<double>(cv.total) : 0.0;
    return cv;
}

}  // namespace dact
