#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dact/corpus.hpp"
#include "dact/error.hpp"

namespace dact {

using TurnKey = std::pair<std::string, std::size_t>;

inline std::string key_string(const TurnKey& k) { return "(" + k.first + "," + std::to_string(k.second) + ")"; }

/// Fixed-width sentence vectors keyed by (dialogue_id, turn_index).
struct SentenceEmbeddingTable {
    std::size_t dim = 0;
    std::map<TurnKey, std::vector<float>> rows;
    /// Rows overwritten by a later duplicate key during load.
    std::size_t duplicates = 0;

    const std::vector<float>* find(const std::string& dialogue, std::size_t index) const {
        auto it = rows.find({dialogue, index});
        return it == rows.end() ? nullptr : &it->second;
    }

    const std::vector<float>& at(const Turn& t) const {
        const auto* v = find(t.dialogue_id, t.turn_index);
        if (!v) throw MissingEmbeddingError("missing sentence embedding for turn " + key_string({t.dialogue_id, t.turn_index}));
        return *v;
    }

    void insert(TurnKey key, std::vector<float> v) {
        if (v.size() != dim) {
            throw DimensionError("embedding for " + key_string(key) + " has width " + std::to_string(v.size()) +
                                 ", table dimension is " + std::to_string(dim));
        }
        rows[std::move(key)] = std::move(v);
    }

    bool operator==(const SentenceEmbeddingTable& o) const { return dim == o.dim && rows == o.rows; }
};

struct WordVectorTable {
    std::size_t dim = 0;
    std::vector<std::string> words;
    std::unordered_map<std::string, std::vector<float>> vectors;

    const std::vector<float>* find(const std::string& w) const {
        auto it = vectors.find(w);
        return it == vectors.end() ? nullptr : &it->second;
    }

    bool operator==(const WordVectorTable& o) const { return dim == o.dim && words == o.words && vectors == o.vectors; }
};

namespace detail {

inline std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
        if (j > i) out.emplace_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

inline bool parse_float(const std::string& s, float& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

inline std::string format_float(float v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace detail

/// Header `dim=<D>`, then per line `dialogue_id <TAB> turn_index <TAB> v1 ... vD`
/// (any mix of tabs and spaces between fields is accepted).
inline SentenceEmbeddingTable parse_sentence_embeddings(std::istream& in) {
    SentenceEmbeddingTable table;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        detail::strip_cr(line);
        if (line.empty()) continue;
        if (!have_header) {
            if (line.rfind("dim=", 0) != 0) throw ParseError("line 1: expected header 'dim=<D>'");
            auto d = detail::parse_index(std::string_view(line).substr(4));
            if (!d || *d == 0) throw ParseError("line 1: bad dimension in header '" + line + "'");
            table.dim = *d;
            have_header = true;
            continue;
        }
        auto fields = detail::split_ws(line);
        if (fields.size() < 2) throw ParseError("line " + std::to_string(lineno) + ": missing row key");
        auto index = detail::parse_index(fields[1]);
        if (!index) throw ParseError("line " + std::to_string(lineno) + ": bad turn index '" + fields[1] + "'");
        TurnKey key{fields[0], *index};
        if (fields.size() - 2 != table.dim) {
            throw ParseError("row " + key_string(key) + ": " + std::to_string(fields.size() - 2) +
                             " values, expected " + std::to_string(table.dim));
        }
        std::vector<float> v(table.dim);
        for (std::size_t i = 0; i < table.dim; ++i) {
            if (!detail::parse_float(fields[i + 2], v[i]))
                throw ParseError("row " + key_string(key) + ": bad value '" + fields[i + 2] + "'");
        }
        if (table.rows.count(key)) ++table.duplicates;
        table.rows[std::move(key)] = std::move(v);
    }
    if (!have_header) throw ParseError("embedding file has no 'dim=<D>' header");
    return table;
}

inline SentenceEmbeddingTable load_sentence_embeddings(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open embedding file '" + path + "'");
    return parse_sentence_embeddings(in);
}

inline void write_sentence_embeddings(std::ostream& out, const SentenceEmbeddingTable& table) {
    out << "dim=" << table.dim << '\n';
    for (const auto& [key, v] : table.rows) {
        out << key.first << '\t' << key.second << '\t';
        for (std::size_t i = 0; i < v.size(); ++i) out << (i ? " " : "") << detail::format_float(v[i]);
        out << '\n';
    }
}

inline void save_sentence_embeddings(const std::string& path, const SentenceEmbeddingTable& table) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write embedding file '" + path + "'");
    write_sentence_embeddings(out, table);
}

/// word2vec text format: `count dim`, then `word v1 ... v_dim`.
inline WordVectorTable parse_word_vectors(std::istream& in) {
    WordVectorTable table;
    std::string line;
    if (!std::getline(in, line)) throw ParseError("word-vector file is empty (missing 'count dim' header)");
    detail::strip_cr(line);
    auto header = detail::split_ws(line);
    std::optional<std::size_t> count, dim;
    if (header.size() == 2) {
        count = detail::parse_index(header[0]);
        dim = detail::parse_index(header[1]);
    }
    if (!count || !dim || *dim == 0) throw ParseError("line 1: expected 'count dim' header");
    table.dim = *dim;
    std::size_t lineno = 1, rows = 0;
    while (std::getline(in, line)) {
        ++lineno;
        detail::strip_cr(line);
        if (line.empty()) continue;
        auto fields = detail::split_ws(line);
        if (fields.size() != table.dim + 1) {
            throw ParseError("line " + std::to_string(lineno) + ": word '" + fields[0] + "' has " +
                             std::to_string(fields.size() - 1) + " values, expected " + std::to_string(table.dim));
        }
        std::vector<float> v(table.dim);
        for (std::size_t i = 0; i < table.dim; ++i) {
            if (!detail::parse_float(fields[i + 1], v[i]))
                throw ParseError("line " + std::to_string(lineno) + ": bad value '" + fields[i + 1] + "'");
        }
        ++rows;
        if (table.vectors.emplace(fields[0], std::move(v)).second) table.words.push_back(fields[0]);
    }
    if (rows != *count) {
        throw ParseError("word-vector header declares " + std::to_string(*count) + " entries, file has " +
                         std::to_string(rows));
    }
    return table;
}

inline WordVectorTable load_word_vectors(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open word-vector file '" + path + "'");
    return parse_word_vectors(in);
}

inline void write_word_vectors(std::ostream& out, const WordVectorTable& table) {
    out << table.words.size() << ' ' << table.dim << '\n';
    for (const auto& w : table.words) {
        out << w;
        for (float x : table.vectors.at(w)) out << ' ' << detail::format_float(x);
        out << '\n';
    }
}

/// Sentence vector of the turn before `t`; the zero vector for a dialogue's first turn.
inline std::vector<float> pair_with_previous(const Turn& t, const SentenceEmbeddingTable& table) {
    if (t.turn_index == 0) return std::vector<float>(table.dim, 0.0f);
    const auto* v = table.find(t.dialogue_id, t.turn_index - 1);
    if (!v) {
        throw MissingEmbeddingError("missing sentence embedding for turn " +
                                    key_string({t.dialogue_id, t.turn_index - 1}) + ", previous to " +
                                    key_string({t.dialogue_id, t.turn_index}));
    }
    return *v;
}

}  // namespace dact
