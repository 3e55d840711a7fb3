#pragma once

#include <chrono>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dact/error.hpp"
#include "dact/pipeline.hpp"

namespace dact {

enum class Condition { majority, scratch, no_finetune, finetune };

inline std::string to_string(Condition c) {
    switch (c) {
        case Condition::majority: return "majority";
        case Condition::scratch: return "scratch";
        case Condition::no_finetune: return "no_finetune";
        case Condition::finetune: return "finetune";
    }
    return "?";
}

inline Condition parse_condition(const std::string& s) {
    if (s == "majority") return Condition::majority;
    if (s == "scratch") return Condition::scratch;
    if (s == "no_finetune") return Condition::no_finetune;
    if (s == "finetune") return Condition::finetune;
    throw ConfigError("unknown condition '" + s + "' (expected majority, scratch, no_finetune or finetune)");
}

struct ConditionRecord {
    Condition condition = Condition::majority;
    std::string model;  // empty for the majority baseline
    std::size_t epochs = 0;
    double learning_rate = 0.0;
    RunResult result;
    double wall_seconds = 0.0;
};

struct ExperimentReport {
    std::string title = "dialogue-act experiment";
    std::uint64_t seed = 0;
    std::size_t runs = 0;
    std::size_t train_turns = 0;
    std::size_t test_turns = 0;
    std::string freeze_policy;
    std::vector<ConditionRecord> conditions;
};

struct SuiteConfig {
    /// Architecture of from-scratch models (sentence_dim is taken from the embeddings).
    ModelConfig model;
    /// Training schedule for fine-tuning and from-scratch runs; the run seed overrides `seed`.
    TrainConfig train = finetune_defaults(ModelKind::mlp);
    std::size_t runs = 10;
    std::uint64_t seed = 1;
    std::vector<Condition> conditions = {Condition::majority, Condition::scratch, Condition::no_finetune,
                                         Condition::finetune};
    std::size_t threads = 1;
};

struct SuiteInputs {
    /// Source-phase model; required by no_finetune and finetune.
    const Classifier<float>* source = nullptr;
    std::vector<Turn> train;
    std::vector<Turn> test;
    LabelSet labels;
    Resources resources;
};

/// Model trained only on the target corpus, all parameters from random init.
inline Classifier<float> train_from_scratch(const SuiteInputs& in, const ModelConfig& model, const TrainConfig& cfg) {
    TrainConfig c = cfg;
    c.stacked.reset();
    return train_initial(in.train, in.labels, model, c, in.resources).model;
}

/// Runs every requested condition under run_repeated and collects one report.
inline ExperimentReport run_condition_suite(const SuiteConfig& cfg, const SuiteInputs& in) {
    ExperimentReport report;
    report.seed = cfg.seed;
    report.runs = cfg.runs;
    report.train_turns = in.train.size();
    report.test_turns = in.test.size();
    report.freeze_policy = to_string(cfg.train.freeze);
    if (cfg.conditions.empty()) throw ConfigError("no conditions requested");
    for (auto c : cfg.conditions) {
        if ((c == Condition::no_finetune || c == Condition::finetune) && !in.source)
            throw ConfigError("condition '" + to_string(c) + "' needs a source model checkpoint");
    }
    for (auto c : cfg.conditions) {
        ConditionRecord rec;
        rec.condition = c;
        Experiment experiment;
        switch (c) {
            case Condition::majority:
                experiment = [&](std::uint64_t) { return majority_class_baseline(in.train, in.test, in.labels).evaluation; };
                break;
            case Condition::scratch:
                rec.model = to_string(cfg.model.kind);
                rec.epochs = cfg.train.epochs;
                rec.learning_rate = cfg.train.learning_rate;
                experiment = [&](std::uint64_t seed) {
                    TrainConfig t = cfg.train;
                    t.seed = seed;
                    auto model = train_from_scratch(in, cfg.model, t);
                    return evaluate_accuracy(model, in.test, in.resources);
                };
                break;
            case Condition::no_finetune:
                rec.model = to_string(in.source->config.kind);
                experiment = [&](std::uint64_t) { return evaluate_mapped(*in.source, in.test, in.labels, in.resources); };
                break;
            case Condition::finetune:
                rec.model = to_string(in.source->config.kind);
                rec.epochs = cfg.train.epochs;
                rec.learning_rate = cfg.train.learning_rate;
                experiment = [&](std::uint64_t seed) {
                    TrainConfig t = cfg.train;
                    t.seed = seed;
                    auto tuned = finetune(*in.source, in.train, in.labels, t, in.resources).model;
                    return evaluate_accuracy(tuned, in.test, in.resources);
                };
                break;
        }
        const auto start = std::chrono::steady_clock::now();
        rec.result = run_repeated(experiment, cfg.runs, cfg.seed, cfg.threads);
        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        report.conditions.push_back(std::move(rec));
    }
    return report;
}

namespace detail {

inline std::string fixed(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

}  // namespace detail

/// Labeled confusion grid (rows = gold, columns = predicted).
inline void write_confusion(std::ostream& out, const Evaluation& e) {
    std::size_t width = 9;
    for (const auto& l : e.row_labels) width = std::max(width, l.size());
    for (const auto& l : e.column_labels) width = std::max(width, l.size());
    std::string line;
    auto cell = [&](const std::string& s) {
        line += s;
        line.resize(std::max(line.size(), line.size() - s.size() + width + 2), ' ');
    };
    auto flush = [&] {
        line.erase(line.find_last_not_of(' ') + 1);
        out << line << '\n';
        line.clear();
    };
    cell("gold\\pred");
    for (const auto& l : e.column_labels) cell(l);
    flush();
    for (std::size_t r = 0; r < e.row_labels.size(); ++r) {
        cell(e.row_labels[r]);
        for (auto v : e.confusion[r]) cell(std::to_string(v));
        flush();
    }
}

/// Plain-text report, one record per condition. Wall-clock times are only
/// written when `with_timing` is set so that reports stay byte-reproducible.
inline void write_report_text(std::ostream& out, const ExperimentReport& r, bool with_timing = false) {
    out << "# " << r.title << '\n';
    out << "seed: " << r.seed << '\n';
    out << "runs: " << r.runs << '\n';
    out << "train_turns: " << r.train_turns << '\n';
    out << "test_turns: " << r.test_turns << '\n';
    out << "freeze_policy: " << r.freeze_policy << '\n';
    for (const auto& c : r.conditions) {
        out << '\n' << "[condition " << to_string(c.condition) << "]\n";
        out << "model: " << (c.model.empty() ? "-" : c.model) << '\n';
        out << "runs: " << c.result.accuracies.size() << '\n';
        out << "epochs: " << (c.epochs ? std::to_string(c.epochs) : "-") << '\n';
        out << "lr: " << (c.epochs ? detail::fixed(c.learning_rate, 6) : "-") << '\n';
        out << "accuracies:";
        for (double a : c.result.accuracies) out << ' ' << detail::fixed(a);
        out << '\n';
        out << "mean: " << detail::fixed(c.result.mean) << '\n';
        out << "std: " << detail::fixed(c.result.std_dev) << (c.result.std_defined ? "" : " (single run)") << '\n';
        if (with_timing) out << "wall_seconds: " << detail::fixed(c.wall_seconds, 3) << '\n';
        out << "confusion (last run):\n";
        write_confusion(out, c.result.last);
    }
}

inline nlohmann::json evaluation_json(const Evaluation& e) {
    return {{"accuracy", e.accuracy},
            {"correct", e.correct},
            {"total", e.total},
            {"rows", e.row_labels},
            {"columns", e.column_labels},
            {"confusion", e.confusion}};
}

inline nlohmann::json report_json(const ExperimentReport& r, bool with_timing = false) {
    nlohmann::json j;
    j["title"] = r.title;
    j["seed"] = r.seed;
    j["runs"] = r.runs;
    j["train_turns"] = r.train_turns;
    j["test_turns"] = r.test_turns;
    j["freeze_policy"] = r.freeze_policy;
    j["conditions"] = nlohmann::json::array();
    for (const auto& c : r.conditions) {
        nlohmann::json cj{{"name", to_string(c.condition)},
                          {"model", c.model},
                          {"runs", c.result.accuracies.size()},
                          {"epochs", c.epochs},
                          {"lr", c.learning_rate},
                          {"accuracies", c.result.accuracies},
                          {"mean", c.result.mean},
                          {"std", c.result.std_dev},
                          {"std_defined", c.result.std_defined},
                          {"confusion", evaluation_json(c.result.last)}};
        if (with_timing) cj["wall_seconds"] = c.wall_seconds;
        j["conditions"].push_back(std::move(cj));
    }
    return j;
}

/// Writes `<path>` (text) and `<path>.json`.
inline void save_report(const std::string& path, const ExperimentReport& r, bool with_timing = false) {
    std::ofstream text(path);
    if (!text) throw IoError("cannot write report '" + path + "'");
    write_report_text(text, r, with_timing);
    std::ofstream json(path + ".json");
    if (!json) throw IoError("cannot write report '" + path + ".json'");
    json << report_json(r, with_timing).dump(2) << '\n';
}

/// Label distribution table: two label/percentage column pairs, most frequent first.
inline void write_distribution_table(std::ostream& out, const std::vector<Turn>& turns, const LabelSet& labels) {
    const auto counts = label_counts(turns, labels);
    std::vector<std::size_t> order(labels.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return counts[a] > counts[b]; });
    auto pct = [&](std::size_t n) -> std::string {
        if (turns.empty()) return "0%";
        const double p = 100.0 * static_cast<double>(n) / static_cast<double>(turns.size());
        if (p > 0.0 && p < 0.5) return "<1%";
        return std::to_string(static_cast<long>(std::lround(p))) + "%";
    };
    std::size_t lw = 5;
    for (const auto& t : labels.tags()) lw = std::max(lw, t.size());
    auto pad = [](std::string s, std::size_t w) {
        s.resize(std::max(s.size(), w), ' ');
        return s;
    };
    const std::size_t rows = (order.size() + 1) / 2;
    out << pad("Label", lw) << "  " << pad("Occurrence", 10) << "    " << pad("Label", lw) << "  Occurrence\n";
    for (std::size_t r = 0; r < rows; ++r) {
        const auto a = order[r];
        std::string line = pad(labels.tag(a), lw) + "  " + pct(counts[a]);
        if (r + rows < order.size()) {
            const auto b = order[r + rows];
            line = pad(line, lw + 12) + "    " + pad(labels.tag(b), lw) + "  " + pct(counts[b]);
        }
        out << line << '\n';
    }
}

}  // namespace dact
