#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dact/error.hpp"

namespace dact {

/// One speaker turn. `text_translated` holds the English translation of a
/// foreign-language turn; English source corpora leave it empty.
struct Turn {
    std::string dialogue_id;
    std::size_t turn_index = 0;
    std::string speaker;
    std::string label;
    std::string text_original;
    std::optional<std::string> text_translated;

    bool operator==(const Turn&) const = default;
};

/// Text fed to the English stream: the translation when present, else the original.
inline const std::string& english_text(const Turn& t) {
    return t.text_translated && !t.text_translated->empty() ? *t.text_translated : t.text_original;
}

/// Text fed to the foreign stream: the original of a translated turn, else empty.
inline std::string foreign_text(const Turn& t) {
    return t.text_translated && !t.text_translated->empty() ? t.text_original : std::string{};
}

/// Ordered, duplicate-free list of dialogue-act tags.
class LabelSet {
public:
    LabelSet() = default;
    explicit LabelSet(std::vector<std::string> tags) {
        for (auto& t : tags) add(std::move(t));
    }

    std::size_t add(std::string tag) {
        if (index_.count(tag)) throw ConfigError("duplicate label '" + tag + "' in label set");
        index_.emplace(tag, tags_.size());
        tags_.push_back(std::move(tag));
        return tags_.size() - 1;
    }

    std::size_t size() const { return tags_.size(); }
    bool empty() const { return tags_.empty(); }
    const std::string& tag(std::size_t i) const { return tags_.at(i); }
    const std::vector<std::string>& tags() const { return tags_; }
    bool contains(const std::string& tag) const { return index_.count(tag) != 0; }

    std::optional<std::size_t> find(const std::string& tag) const {
        auto it = index_.find(tag);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    std::size_t index_of(const std::string& tag) const {
        auto it = index_.find(tag);
        if (it == index_.end()) throw LabelError("label '" + tag + "' is not in the label set");
        return it->second;
    }

    bool operator==(const LabelSet& o) const { return tags_ == o.tags_; }

private:
    std::vector<std::string> tags_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct Dialogue {
    std::string id;
    std::vector<Turn> turns;
};

struct Corpus {
    std::vector<Dialogue> dialogues;
    LabelSet labels;

    std::vector<Turn> turns() const {
        std::vector<Turn> out;
        for (const auto& d : dialogues) out.insert(out.end(), d.turns.begin(), d.turns.end());
        return out;
    }

    std::size_t turn_count() const {
        std::size_t n = 0;
        for (const auto& d : dialogues) n += d.turns.size();
        return n;
    }
};

namespace detail {

inline std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            return out;
        }
        out.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

inline std::optional<std::size_t> parse_index(std::string_view s) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

inline void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace detail

/// Lowercased whitespace tokenization (ASCII case folding; other bytes kept).
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : text) {
        auto u = static_cast<unsigned char>(c);
        if (std::isspace(u)) {
            if (!cur.empty()) tokens.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(static_cast<char>(u < 128 ? std::tolower(u) : u));
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

/// Reads one label per line; blank and '#' lines are skipped.
inline LabelSet load_label_set(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open label file '" + path + "'");
    LabelSet labels;
    std::string line;
    while (std::getline(in, line)) {
        detail::strip_cr(line);
        if (line.empty() || line[0] == '#') continue;
        labels.add(line);
    }
    return labels;
}

/// Parses the tab-separated corpus format:
///   dialogue_id <TAB> turn_index <TAB> speaker <TAB> label <TAB> text_original <TAB> text_translated
/// The trailing translated field may be empty or missing. When `declared` is
/// null the label set is inferred in first-occurrence order.
inline Corpus parse_corpus(std::istream& in, const LabelSet* declared = nullptr) {
    Corpus corpus;
    if (declared) corpus.labels = *declared;
    std::map<std::string, std::size_t> dialogue_pos;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        detail::strip_cr(line);
        if (line.empty() || line[0] == '#') continue;
        auto fields = detail::split(line, '\t');
        if (fields.size() != 5 && fields.size() != 6) {
            throw ParseError("line " + std::to_string(lineno) + ": expected 6 tab-separated fields, got " +
                             std::to_string(fields.size()));
        }
        auto index = detail::parse_index(fields[1]);
        if (!index) throw ParseError("line " + std::to_string(lineno) + ": bad turn index '" + fields[1] + "'");
        if (fields[0].empty()) throw ParseError("line " + std::to_string(lineno) + ": empty dialogue id");
        Turn t{fields[0], *index, fields[2], fields[3], fields[4], std::nullopt};
        if (fields.size() == 6 && !fields[5].empty()) t.text_translated = fields[5];
        if (!corpus.labels.contains(t.label)) {
            if (declared) {
                throw LabelError("line " + std::to_string(lineno) + ": unknown label '" + t.label + "'");
            }
            corpus.labels.add(t.label);
        }
        auto [it, inserted] = dialogue_pos.emplace(t.dialogue_id, corpus.dialogues.size());
        if (inserted) corpus.dialogues.push_back(Dialogue{t.dialogue_id, {}});
        corpus.dialogues[it->second].turns.push_back(std::move(t));
    }
    for (auto& d : corpus.dialogues) {
        std::stable_sort(d.turns.begin(), d.turns.end(),
                         [](const Turn& a, const Turn& b) { return a.turn_index < b.turn_index; });
        for (std::size_t i = 0; i < d.turns.size(); ++i) {
            if (d.turns[i].turn_index != i) {
                throw StructureError("dialogue '" + d.id + "': turn indices are not consecutive from 0 (expected " +
                                     std::to_string(i) + ", found " + std::to_string(d.turns[i].turn_index) + ")");
            }
        }
    }
    return corpus;
}

inline Corpus load_corpus(const std::string& path, const LabelSet* declared = nullptr) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open corpus file '" + path + "'");
    return parse_corpus(in, declared);
}

inline void write_corpus(std::ostream& out, const std::vector<Turn>& turns) {
    for (const auto& t : turns) {
        out << t.dialogue_id << '\t' << t.turn_index << '\t' << t.speaker << '\t' << t.label << '\t'
            << t.text_original << '\t' << t.text_translated.value_or("") << '\n';
    }
}

inline void save_corpus(const std::string& path, const std::vector<Turn>& turns) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write corpus file '" + path + "'");
    write_corpus(out, turns);
}

/// Label counts in LabelSet order.
inline std::vector<std::size_t> label_counts(const std::vector<Turn>& turns, const LabelSet& labels) {
    std::vector<std::size_t> counts(labels.size(), 0);
    for (const auto& t : turns) ++counts[labels.index_of(t.label)];
    return counts;
}

}  // namespace dact
