// dact: command-line driver for training, fine-tuning and evaluating
// dialogue-act classifiers.
//
// Exit status: 0 success, 2 usage or configuration error (bad flags, missing
// input files, invalid config), 1 runtime failure. Every failure prints one
// "error: ..." line to stderr.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dact/dact.hpp"

namespace {

using namespace dact;

std::string one_line(std::string s) {
    for (auto& c : s)
        if (c == '\n' || c == '\r') c = ' ';
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s;
}

// Flags that map one-to-one onto configuration keys.
struct Overrides {
    std::map<std::string, std::string> values;
    bool stacked = false;
    bool extend_vocab = false;

    void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
        app->add_option("--" + flag, values[key], help);
    }

    KeyValues collect() const {
        KeyValues kv;
        for (const auto& [k, v] : values)
            if (!v.empty()) kv[k] = v;
        if (stacked) kv["stacked"] = "true";
        if (extend_vocab) kv["extend_vocab"] = "true";
        return kv;
    }
};

void add_model_flags(CLI::App* app, Overrides& o) {
    o.add(app, "hidden", "hidden", "MLP hidden width");
    o.add(app, "word-dim", "word_dim", "CNN word-embedding width");
    o.add(app, "filters", "filters", "CNN filter count");
    o.add(app, "kernel-width", "kernel_width", "CNN kernel width");
    o.add(app, "model-dim", "model_dim", "attention model width");
    o.add(app, "heads", "heads", "attention heads");
    o.add(app, "dropout", "dropout", "dropout rate");
}

void add_train_flags(CLI::App* app, Overrides& o) {
    o.add(app, "epochs", "epochs", "training epochs");
    o.add(app, "lr", "lr", "Adam learning rate");
    o.add(app, "batch-size", "batch_size", "mini-batch size");
    o.add(app, "seed", "seed", "random seed");
    o.add(app, "threads", "threads", "worker threads for repeated runs");
}

void add_finetune_flags(CLI::App* app, Overrides& o) {
    o.add(app, "freeze-policy", "freeze_policy", "head_only or all");
    o.add(app, "sample", "sample", "stratified sample size drawn from the training corpus (0 = all)");
    app->add_flag("--extend-vocab", o.extend_vocab, "add unseen target tokens to the vocabulary");
    app->add_flag("--stacked", o.stacked, "attention model reads translated and original text");
}

void existing(CLI::App* app, const std::string& flag, std::string& target, const std::string& help, bool required) {
    auto* opt = app->add_option(flag, target, help)->check(CLI::ExistingFile);
    if (required) opt->required();
}

SentenceEmbeddingTable load_embeddings(const std::vector<std::string>& paths) {
    SentenceEmbeddingTable merged;
    for (const auto& p : paths) {
        auto t = load_sentence_embeddings(p);
        if (merged.rows.empty() && merged.dim == 0) merged.dim = t.dim;
        if (t.dim != merged.dim)
            throw DimensionError("embedding file '" + p + "' has width " + std::to_string(t.dim) + ", expected " +
                                 std::to_string(merged.dim));
        for (auto& [k, v] : t.rows) merged.rows[k] = std::move(v);
    }
    return merged;
}

// Label set from --labels, or inferred from the corpora in order of appearance.
LabelSet resolve_labels(const std::string& labels_path, const std::vector<std::vector<Turn>*>& corpora) {
    if (!labels_path.empty()) {
        auto labels = load_label_set(labels_path);
        for (const auto* c : corpora)
            for (const auto& t : *c)
                if (!labels.contains(t.label)) throw LabelError("label '" + t.label + "' is not in the label file");
        return labels;
    }
    LabelSet labels;
    for (const auto* c : corpora)
        for (const auto& t : *c)
            if (!labels.contains(t.label)) labels.add(t.label);
    return labels;
}

std::vector<Turn> read_turns(const std::string& path) { return load_corpus(path).turns(); }

std::vector<Turn> maybe_sample(const std::vector<Turn>& turns, const LabelSet& labels, std::size_t n,
                               std::uint64_t seed) {
    if (n == 0 || n >= turns.size()) return turns;
    return select(turns, stratified_sample(turns, labels, n, seed));
}

RunSettings settings_for(const std::string& config, Phase phase, const Overrides& o,
                         std::optional<ModelKind> hint = std::nullopt) {
    return validate_config(config, phase, o.collect(), hint);
}

// A kind named by flag or config file must agree with the checkpoint.
void check_kind(const RunSettings& s, const Classifier<float>& source) {
    if (s.model.kind != source.config.kind)
        throw ConfigError("model kind '" + to_string(s.model.kind) + "' does not match the checkpoint architecture '" +
                          to_string(source.config.kind) + "'");
}

std::string fmt(double v) { return detail::fixed(v); }

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << text;
}

// ---- commands ----

struct Paths {
    std::string config, corpus, train, test, labels, word_vectors, from, out, report, model;
    std::vector<std::string> embeddings;
};

int cmd_train(const Paths& p, const Overrides& o) {
    auto s = settings_for(p.config, Phase::initial, o);
    auto turns = read_turns(p.corpus);
    auto labels = resolve_labels(p.labels, {&turns});
    auto sentences = load_embeddings(p.embeddings);
    std::optional<WordVectorTable> words;
    if (!p.word_vectors.empty()) words = load_word_vectors(p.word_vectors);
    Resources res{&sentences, words ? &*words : nullptr};
    auto r = train_initial(turns, labels, s.model, s.train, res);
    save_checkpoint(r.model, p.out);
    std::cout << "trained " << to_string(s.model.kind) << " on " << turns.size() << " turns, " << s.train.epochs
              << " epochs, final loss " << fmt(r.epoch_losses.back()) << '\n';
    std::cout << "checkpoint: " << p.out << '\n';
    return 0;
}

int cmd_finetune(const Paths& p, const Overrides& o) {
    auto source = load_checkpoint(p.from);
    auto s = settings_for(p.config, Phase::finetune, o, source.config.kind);
    check_kind(s, source);
    auto turns = read_turns(p.corpus);
    auto labels = resolve_labels(p.labels, {&turns});
    turns = maybe_sample(turns, labels, s.sample, s.train.seed);
    auto sentences = load_embeddings(p.embeddings);
    auto r = finetune(source, turns, labels, s.train, Resources{&sentences, nullptr});
    save_checkpoint(r.model, p.out);
    std::cout << "fine-tuned " << to_string(source.config.kind) << " on " << turns.size() << " turns, "
              << s.train.epochs << " epochs, freeze " << to_string(s.train.freeze) << ", final loss "
              << fmt(r.epoch_losses.back()) << '\n';
    std::cout << "checkpoint: " << p.out << '\n';
    return 0;
}

int cmd_eval(const Paths& p) {
    auto model = load_checkpoint(p.model);
    auto corpus = load_corpus(p.corpus);
    auto turns = corpus.turns();
    auto sentences = load_embeddings(p.embeddings);
    Resources res{&sentences, nullptr};
    bool own_labels = true;
    for (const auto& t : turns) own_labels = own_labels && model.labels.contains(t.label);
    auto e = own_labels ? evaluate_accuracy(model, turns, res) : evaluate_mapped(model, turns, corpus.labels, res);
    const std::string report = p.report.empty() ? p.model + ".eval.txt" : p.report;
    std::ostringstream text;
    text << "# evaluation\n";
    text << "model: " << to_string(model.config.kind) << '\n';
    text << "turns: " << e.total << '\n';
    text << "correct: " << e.correct << '\n';
    text << "accuracy: " << fmt(e.accuracy) << '\n';
    text << "confusion:\n";
    write_confusion(text, e);
    write_text_file(report, text.str());
    write_text_file(report + ".json", evaluation_json(e).dump(2) + "\n");
    std::cout << "accuracy: " << fmt(e.accuracy) << " (" << e.correct << "/" << e.total << ")\n";
    std::cout << "report: " << report << '\n';
    return 0;
}

int cmd_cv(const Paths& p, const Overrides& o) {
    std::optional<Classifier<float>> source;
    if (!p.from.empty()) source = load_checkpoint(p.from);
    auto s = source ? settings_for(p.config, Phase::finetune, o, source->config.kind)
                    : settings_for(p.config, Phase::initial, o);
    if (source) check_kind(s, *source);
    auto turns = read_turns(p.corpus);
    auto labels = resolve_labels(p.labels, {&turns});
    auto sentences = load_embeddings(p.embeddings);
    std::optional<WordVectorTable> words;
    if (!p.word_vectors.empty()) words = load_word_vectors(p.word_vectors);
    Resources res{&sentences, words ? &*words : nullptr};
    auto cv = cross_validate(turns, s.folds, s.train.seed,
                             [&](const std::vector<Turn>& train, const std::vector<Turn>& test, std::uint64_t seed) {
                                 TrainConfig t = s.train;
                                 t.seed = seed;
                                 auto model = source ? finetune(*source, train, labels, t, res).model
                                                     : train_initial(train, labels, s.model, t, res).model;
                                 return evaluate_accuracy(model, test, res);
                             },
                             s.threads);
    std::ostringstream text;
    text << "# cross-validation\n";
    text << "model: " << to_string(source ? source->config.kind : s.model.kind) << '\n';
    text << "mode: " << (source ? "finetune" : "scratch") << '\n';
    text << "folds: " << s.folds << '\n';
    text << "seed: " << s.train.seed << '\n';
    text << "fold_accuracies:";
    for (double a : cv.folds.accuracies) text << ' ' << fmt(a);
    text << '\n';
    text << "mean: " << fmt(cv.folds.mean) << '\n';
    text << "std: " << fmt(cv.folds.std_dev) << '\n';
    text << "pooled: " << fmt(cv.pooled_accuracy) << " (" << cv.correct << "/" << cv.total << ")\n";
    if (!p.report.empty()) {
        write_text_file(p.report, text.str());
        nlohmann::json j{{"folds", s.folds},
                         {"seed", s.train.seed},
                         {"fold_accuracies", cv.folds.accuracies},
                         {"mean", cv.folds.mean},
                         {"std", cv.folds.std_dev},
                         {"pooled", cv.pooled_accuracy},
                         {"correct", cv.correct},
                         {"total", cv.total}};
        write_text_file(p.report + ".json", j.dump(2) + "\n");
    }
    std::cout << text.str();
    return 0;
}

int cmd_suite(const Paths& p, const Overrides& o) {
    std::optional<Classifier<float>> source;
    if (!p.from.empty()) source = load_checkpoint(p.from);
    auto s = settings_for(p.config, Phase::finetune, o,
                          source ? std::optional<ModelKind>(source->config.kind) : std::nullopt);
    if (source) check_kind(s, *source);
    SuiteInputs in;
    in.source = source ? &*source : nullptr;
    in.train = read_turns(p.train);
    in.test = read_turns(p.test);
    in.labels = resolve_labels(p.labels, {&in.train, &in.test});
    in.train = maybe_sample(in.train, in.labels, s.sample, s.train.seed);
    auto sentences = load_embeddings(p.embeddings);
    in.resources = Resources{&sentences, nullptr};
    SuiteConfig cfg;
    cfg.model = s.model;
    cfg.train = s.train;
    cfg.runs = s.runs;
    cfg.seed = s.train.seed;
    cfg.conditions = s.conditions;
    cfg.threads = s.threads;
    auto report = run_condition_suite(cfg, in);
    save_report(p.report, report);
    for (const auto& c : report.conditions)
        std::cout << to_string(c.condition) << ": mean " << fmt(c.result.mean) << " std " << fmt(c.result.std_dev)
                  << " over " << c.result.accuracies.size() << " runs\n";
    std::cout << "report: " << p.report << '\n';
    return 0;
}

int cmd_baseline(const Paths& p) {
    auto train = read_turns(p.train);
    auto test = read_turns(p.test);
    auto labels = resolve_labels(p.labels, {&train, &test});
    auto r = majority_class_baseline(train, test, labels);
    std::cout << "majority label: " << labels.tag(r.label) << '\n';
    std::cout << "accuracy: " << fmt(r.accuracy) << " (" << r.evaluation.correct << "/" << r.evaluation.total << ")\n";
    if (!p.report.empty()) {
        std::ostringstream text;
        text << "# majority-class baseline\nlabel: " << labels.tag(r.label) << "\naccuracy: " << fmt(r.accuracy)
             << "\nconfusion:\n";
        write_confusion(text, r.evaluation);
        write_text_file(p.report, text.str());
    }
    return 0;
}

int cmd_inspect(const Paths& p) {
    std::optional<LabelSet> declared;
    if (!p.labels.empty()) declared = load_label_set(p.labels);
    auto corpus = load_corpus(p.corpus, declared ? &*declared : nullptr);
    std::cout << "dialogues: " << corpus.dialogues.size() << '\n';
    std::cout << "turns: " << corpus.turn_count() << '\n';
    std::cout << "labels: " << corpus.labels.size() << "\n\n";
    write_distribution_table(std::cout, corpus.turns(), corpus.labels);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dialogue-act recognition toolkit"};
    app.require_subcommand(1);
    Paths p;
    Overrides o;

    auto* train = app.add_subcommand("train", "train a model on a source corpus");
    existing(train, "--corpus", p.corpus, "training corpus (TSV)", true);
    train->add_option("--embeddings", p.embeddings, "sentence-embedding file(s)")->required()->check(CLI::ExistingFile);
    existing(train, "--word-vectors", p.word_vectors, "pretrained word vectors for the CNN", false);
    existing(train, "--labels", p.labels, "label file, one tag per line", false);
    existing(train, "--config", p.config, "configuration file", false);
    train->add_option("--out", p.out, "checkpoint to write")->required();
    o.add(train, "model", "model", "mlp, cnn or mhsatt");
    add_model_flags(train, o);
    add_train_flags(train, o);
    train->add_flag("--stacked", o.stacked, "attention model reads translated and original text");

    auto* ft = app.add_subcommand("finetune", "fine-tune a trained model on a target corpus");
    existing(ft, "--from", p.from, "source checkpoint", true);
    existing(ft, "--corpus", p.corpus, "target training corpus (TSV)", true);
    ft->add_option("--embeddings", p.embeddings, "sentence-embedding file(s)")->required()->check(CLI::ExistingFile);
    existing(ft, "--labels", p.labels, "target label file", false);
    existing(ft, "--config", p.config, "configuration file", false);
    ft->add_option("--out", p.out, "checkpoint to write")->required();
    o.add(ft, "model", "model", "expected architecture of the checkpoint");
    add_train_flags(ft, o);
    add_finetune_flags(ft, o);

    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a labelled corpus");
    existing(ev, "--model", p.model, "checkpoint", true);
    existing(ev, "--corpus", p.corpus, "test corpus (TSV)", true);
    ev->add_option("--embeddings", p.embeddings, "sentence-embedding file(s)")->required()->check(CLI::ExistingFile);
    ev->add_option("--report", p.report, "report path (default: <model>.eval.txt)");

    auto* cv = app.add_subcommand("cv", "k-fold cross-validation");
    existing(cv, "--corpus", p.corpus, "corpus (TSV)", true);
    cv->add_option("--embeddings", p.embeddings, "sentence-embedding file(s)")->required()->check(CLI::ExistingFile);
    existing(cv, "--from", p.from, "fine-tune every fold from this checkpoint", false);
    existing(cv, "--word-vectors", p.word_vectors, "pretrained word vectors for the CNN", false);
    existing(cv, "--labels", p.labels, "label file", false);
    existing(cv, "--config", p.config, "configuration file", false);
    cv->add_option("--report", p.report, "report path");
    o.add(cv, "model", "model", "mlp, cnn or mhsatt");
    o.add(cv, "folds", "folds", "number of folds");
    add_model_flags(cv, o);
    add_train_flags(cv, o);
    o.add(cv, "freeze-policy", "freeze_policy", "head_only or all (with --from)");

    auto* suite = app.add_subcommand("suite", "run the experimental conditions over repeated seeds");
    existing(suite, "--train", p.train, "target training corpus (TSV)", true);
    existing(suite, "--test", p.test, "target test corpus (TSV)", true);
    suite->add_option("--embeddings", p.embeddings, "sentence-embedding file(s)")->required()->check(CLI::ExistingFile);
    existing(suite, "--from", p.from, "source checkpoint (needed by no_finetune and finetune)", false);
    existing(suite, "--labels", p.labels, "target label file", false);
    existing(suite, "--config", p.config, "configuration file", false);
    suite->add_option("--report", p.report, "report path (also writes <report>.json)")->required();
    o.add(suite, "model", "model", "architecture for the scratch condition");
    o.add(suite, "runs", "runs", "repetitions per condition");
    o.add(suite, "conditions", "conditions", "comma-separated: majority,scratch,no_finetune,finetune");
    add_model_flags(suite, o);
    add_train_flags(suite, o);
    add_finetune_flags(suite, o);

    auto* base = app.add_subcommand("baseline", "majority-class baseline");
    existing(base, "--train", p.train, "training corpus (TSV)", true);
    existing(base, "--test", p.test, "test corpus (TSV)", true);
    existing(base, "--labels", p.labels, "label file", false);
    base->add_option("--report", p.report, "report path");

    auto* inspect = app.add_subcommand("inspect-corpus", "label distribution table");
    existing(inspect, "--corpus", p.corpus, "corpus (TSV)", true);
    existing(inspect, "--labels", p.labels, "label file", false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << one_line(e.what()) << '\n';
        return 2;
    }

    try {
        if (train->parsed()) return cmd_train(p, o);
        if (ft->parsed()) return cmd_finetune(p, o);
        if (ev->parsed()) return cmd_eval(p);
        if (cv->parsed()) return cmd_cv(p, o);
        if (suite->parsed()) return cmd_suite(p, o);
        if (base->parsed()) return cmd_baseline(p);
        if (inspect->parsed()) return cmd_inspect(p);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << one_line(e.what()) << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << one_line(e.what()) << '\n';
        return 1;
    }
    return 2;
}
