#pragma once

// Run configuration files.
//
//   # comment
//   epochs = 30            top-level keys apply to every command
//   [model]                model and run keys, also always applied
//   hidden = 256
//   [train]                applied by the initial-phase commands (train, cv without --from)
//   lr = 0.002
//   [finetune]             applied by finetune, suite and cv --from
//   epochs = 25
//
// Precedence: command-line flags > phase section > [model]/[run] > top level > defaults.

#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dact/error.hpp"
#include "dact/models.hpp"
#include "dact/pipeline.hpp"
#include "dact/report.hpp"

namespace dact {

/// Every problem found in a configuration, reported together.
class ConfigErrors : public ConfigError {
public:
    explicit ConfigErrors(std::vector<std::string> problems)
        : ConfigError(join(problems)), problems_(std::move(problems)) {}
    const std::vector<std::string>& problems() const { return problems_; }

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string s;
        for (const auto& p : v) s += (s.empty() ? "" : "; ") + p;
        return s;
    }
    std::vector<std::string> problems_;
};

enum class Phase { initial, finetune };

/// Fully resolved settings for one CLI invocation.
struct RunSettings {
    ModelConfig model;
    TrainConfig train;
    std::size_t runs = 10;
    std::size_t folds = 10;
    std::size_t sample = 0;  // 0 = use the whole target training corpus
    std::size_t threads = 1;
    std::vector<Condition> conditions = {Condition::majority, Condition::scratch, Condition::no_finetune,
                                         Condition::finetune};
};

using KeyValues = std::map<std::string, std::string>;

/// Sectioned key=value text. Keys come back prefixed with their section
/// ("finetune.epochs"); top-level keys are unprefixed.
inline KeyValues parse_config_text(std::istream& in, std::vector<std::string>& problems) {
    static const std::vector<std::string> sections = {"model", "run", "train", "finetune"};
    KeyValues kv;
    std::string line, section;
    std::size_t lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string{};
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                problems.push_back("line " + std::to_string(lineno) + ": malformed section header");
                continue;
            }
            section = trim(line.substr(1, line.size() - 2));
            if (std::find(sections.begin(), sections.end(), section) == sections.end())
                problems.push_back("line " + std::to_string(lineno) + ": unknown section '" + section + "'");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            problems.push_back("line " + std::to_string(lineno) + ": expected key=value");
            continue;
        }
        const auto key = trim(line.substr(0, eq));
        kv[section.empty() ? key : section + "." + key] = trim(line.substr(eq + 1));
    }
    return kv;
}

namespace detail {

struct Resolver {
    std::vector<std::string>& problems;

    std::optional<std::size_t> count(const std::string& key, const std::string& v, std::size_t min) {
        std::size_t out = 0;
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc{} || p != v.data() + v.size() || v.empty()) {
            problems.push_back("key '" + key + "': expected a non-negative integer, got '" + v + "'");
            return std::nullopt;
        }
        if (out < min) {
            problems.push_back("key '" + key + "': value " + v + " out of range (must be >= " + std::to_string(min) + ")");
            return std::nullopt;
        }
        return out;
    }

    std::optional<double> real(const std::string& key, const std::string& v) {
        double out = 0;
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc{} || p != v.data() + v.size() || v.empty()) {
            problems.push_back("key '" + key + "': expected a number, got '" + v + "'");
            return std::nullopt;
        }
        return out;
    }

    std::optional<bool> boolean(const std::string& key, const std::string& v) {
        if (v == "1" || v == "true" || v == "yes") return true;
        if (v == "0" || v == "false" || v == "no") return false;
        problems.push_back("key '" + key + "': expected true or false, got '" + v + "'");
        return std::nullopt;
    }
};

}  // namespace detail

/// Resolves file contents plus flag overrides for one phase. All problems are
/// collected and thrown together as ConfigErrors.
inline RunSettings resolve_settings(const KeyValues& file, const KeyValues& flags, Phase phase,
                                    std::optional<ModelKind> kind_hint = std::nullopt) {
    std::vector<std::string> problems;
    const std::string phase_section = phase == Phase::initial ? "train" : "finetune";
    KeyValues merged;
    for (const auto& [k, v] : file) {
        if (k.find('.') == std::string::npos) merged[k] = v;
    }
    for (const auto& [k, v] : file) {
        const auto dot = k.find('.');
        if (dot == std::string::npos) continue;
        const auto sec = k.substr(0, dot);
        if (sec == "model" || sec == "run") merged[k.substr(dot + 1)] = v;
    }
    for (const auto& [k, v] : file) {
        if (k.rfind(phase_section + ".", 0) == 0) merged[k.substr(phase_section.size() + 1)] = v;
    }
    for (const auto& [k, v] : flags) merged[k] = v;

    static const std::vector<std::string> known = {
        "model", "hidden", "word_dim", "filters", "kernel_width", "model_dim", "heads", "stacked", "dropout",
        "epochs", "lr", "batch_size", "seed", "freeze_policy", "extend_vocab", "runs", "folds", "sample",
        "threads", "conditions"};
    // Section-qualified keys of the other phase are legal but unused here; still check their names.
    for (const auto& [k, v] : file) {
        const auto dot = k.find('.');
        const auto bare = dot == std::string::npos ? k : k.substr(dot + 1);
        if (std::find(known.begin(), known.end(), bare) == known.end()) problems.push_back("unknown key '" + k + "'");
    }
    for (const auto& [k, v] : flags) {
        if (std::find(known.begin(), known.end(), k) == known.end()) problems.push_back("unknown key '" + k + "'");
    }

    RunSettings s;
    detail::Resolver r{problems};
    if (kind_hint) s.model.kind = *kind_hint;
    if (auto it = merged.find("model"); it != merged.end()) {
        try {
            s.model.kind = parse_model_kind(it->second);
        } catch (const ConfigError& e) {
            problems.push_back(e.what());
        }
    }
    s.train = phase == Phase::initial ? initial_defaults() : finetune_defaults(s.model.kind);

    auto get = [&](const char* key) -> const std::string* {
        auto it = merged.find(key);
        return it == merged.end() ? nullptr : &it->second;
    };
    if (auto v = get("hidden")) if (auto x = r.count("hidden", *v, 1)) s.model.mlp_hidden = *x;
    if (auto v = get("word_dim")) if (auto x = r.count("word_dim", *v, 1)) s.model.word_dim = *x;
    if (auto v = get("filters")) if (auto x = r.count("filters", *v, 1)) s.model.filters = *x;
    if (auto v = get("kernel_width")) if (auto x = r.count("kernel_width", *v, 1)) s.model.kernel_width = *x;
    if (auto v = get("model_dim")) if (auto x = r.count("model_dim", *v, 1)) s.model.model_dim = *x;
    if (auto v = get("heads")) if (auto x = r.count("heads", *v, 1)) s.model.heads = *x;
    if (auto v = get("stacked")) if (auto x = r.boolean("stacked", *v)) {
        s.model.stacked = *x;
        s.train.stacked = *x;
    }
    if (auto v = get("dropout")) if (auto x = r.real("dropout", *v)) {
        if (*x < 0.0 || *x >= 1.0) problems.push_back("key 'dropout': value " + *v + " out of range [0, 1)");
        else s.model.dropout = *x;
    }
    if (auto v = get("epochs")) if (auto x = r.count("epochs", *v, 1)) s.train.epochs = *x;
    if (auto v = get("lr")) if (auto x = r.real("lr", *v)) {
        if (!(*x > 0.0)) problems.push_back("key 'lr': value " + *v + " out of range (must be > 0)");
        else s.train.learning_rate = *x;
    }
    if (auto v = get("batch_size")) if (auto x = r.count("batch_size", *v, 1)) s.train.batch_size = *x;
    if (auto v = get("seed")) if (auto x = r.count("seed", *v, 0)) s.train.seed = *x;
    if (auto v = get("freeze_policy")) {
        try {
            s.train.freeze = parse_freeze_policy(*v);
        } catch (const ConfigError& e) {
            problems.push_back(e.what());
        }
    }
    if (auto v = get("extend_vocab")) if (auto x = r.boolean("extend_vocab", *v)) s.train.extend_vocab = *x;
    if (auto v = get("runs")) if (auto x = r.count("runs", *v, 1)) s.runs = *x;
    if (auto v = get("folds")) if (auto x = r.count("folds", *v, 2)) s.folds = *x;
    if (auto v = get("sample")) if (auto x = r.count("sample", *v, 0)) s.sample = *x;
    if (auto v = get("threads")) if (auto x = r.count("threads", *v, 1)) s.threads = *x;
    if (auto v = get("conditions")) {
        s.conditions.clear();
        std::stringstream ss(*v);
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                s.conditions.push_back(parse_condition(item));
            } catch (const ConfigError& e) {
                problems.push_back(e.what());
            }
        }
        if (s.conditions.empty()) problems.push_back("key 'conditions': empty list");
    }
    try {
        s.model.validate();
    } catch (const ConfigError& e) {
        problems.push_back(e.what());
    }
    if (!problems.empty()) throw ConfigErrors(std::move(problems));
    return s;
}

/// Reads and resolves a configuration file (an empty path means no file).
inline RunSettings validate_config(const std::string& path, Phase phase, const KeyValues& flags = {},
                                   std::optional<ModelKind> kind_hint = std::nullopt) {
    std::vector<std::string> problems;
    KeyValues file;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open config file '" + path + "'");
        file = parse_config_text(in, problems);
    }
    RunSettings settings;
    try {
        settings = resolve_settings(file, flags, phase, kind_hint);
    } catch (const ConfigErrors& e) {
        problems.insert(problems.end(), e.problems().begin(), e.problems().end());
    }
    if (!problems.empty()) throw ConfigErrors(std::move(problems));
    return settings;
}

}  // namespace dact
