#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "dact/corpus.hpp"
#include "dact/error.hpp"

namespace dact {

/// Fixed token window fed to the CNN and attention encoders.
inline constexpr std::size_t kWindow = 15;
/// Trailing tokens always kept when a turn is truncated.
inline constexpr std::size_t kKeepTail = 2;

using TokenWindow = std::array<std::int32_t, kWindow>;

inline constexpr std::int32_t kPadId = 0;
inline constexpr std::int32_t kUnkId = 1;
inline constexpr const char* kPadToken = "<pad>";
inline constexpr const char* kUnkToken = "<unk>";
inline constexpr const char* kEnglishPrefix = "en:";
inline constexpr const char* kForeignPrefix = "xx:";

/// Dense token ids; PAD = 0 and UNK = 1 are always present.
class Vocabulary {
public:
    Vocabulary() {
        add(kPadToken);
        add(kUnkToken);
    }

    std::int32_t add(const std::string& token) {
        auto it = ids_.find(token);
        if (it != ids_.end()) return it->second;
        auto id = static_cast<std::int32_t>(tokens_.size());
        ids_.emplace(token, id);
        tokens_.push_back(token);
        return id;
    }

    std::int32_t id(const std::string& token) const {
        auto it = ids_.find(token);
        return it == ids_.end() ? kUnkId : it->second;
    }

    bool contains(const std::string& token) const { return ids_.count(token) != 0; }
    const std::string& token(std::int32_t id) const { return tokens_.at(static_cast<std::size_t>(id)); }
    const std::vector<std::string>& tokens() const { return tokens_; }
    std::size_t size() const { return tokens_.size(); }

    bool operator==(const Vocabulary& o) const { return tokens_ == o.tokens_; }

private:
    std::unordered_map<std::string, std::int32_t> ids_;
    std::vector<std::string> tokens_;
};

/// Which streams a vocabulary or model reads. Bilingual prefixes English
/// tokens with "en:" and original-language tokens with "xx:".
enum class TextStreams { english, original, bilingual };

/// Applies the window rule to a token list: over-long input keeps the first
/// 13 and the last 2 tokens.
inline std::vector<std::string> window_tokens(std::vector<std::string> tokens) {
    if (tokens.size() <= kWindow) return tokens;
    std::vector<std::string> out(tokens.begin(), tokens.begin() + (kWindow - kKeepTail));
    out.insert(out.end(), tokens.end() - kKeepTail, tokens.end());
    return out;
}

/// Tokenizes, applies the window rule, maps to ids (OOV -> UNK) and right-pads with PAD.
inline TokenWindow encode_turn_tokens(std::string_view text, const Vocabulary& vocab, std::string_view prefix = {}) {
    TokenWindow ids;
    ids.fill(kPadId);
    auto tokens = window_tokens(tokenize(text));
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        ids[i] = vocab.id(prefix.empty() ? tokens[i] : std::string(prefix) + tokens[i]);
    }
    return ids;
}

namespace detail {

template <typename Fn>
void for_each_stream_token(const Turn& t, TextStreams streams, Fn&& fn) {
    switch (streams) {
        case TextStreams::english:
            for (auto& tok : tokenize(english_text(t))) fn(tok);
            break;
        case TextStreams::original:
            for (auto& tok : tokenize(t.text_original)) fn(tok);
            break;
        case TextStreams::bilingual:
            for (auto& tok : tokenize(english_text(t))) fn(kEnglishPrefix + tok);
            for (auto& tok : tokenize(foreign_text(t))) fn(kForeignPrefix + tok);
            break;
    }
}

}  // namespace detail

/// Tokens in first-occurrence order after PAD/UNK, keeping those seen at least
/// `min_count` times.
inline Vocabulary build_vocab(const std::vector<Turn>& turns, TextStreams streams, std::size_t min_count = 1) {
    std::unordered_map<std::string, std::size_t> counts;
    std::vector<std::string> order;
    for (const auto& t : turns) {
        detail::for_each_stream_token(t, streams, [&](const std::string& tok) {
            if (counts[tok]++ == 0) order.push_back(tok);
        });
    }
    Vocabulary vocab;
    for (const auto& tok : order) {
        if (counts[tok] >= min_count) vocab.add(tok);
    }
    return vocab;
}

/// Adds every token of `turns` that `vocab` lacks; returns how many were added.
inline std::size_t extend_vocab(Vocabulary& vocab, const std::vector<Turn>& turns, TextStreams streams) {
    const std::size_t before = vocab.size();
    for (const auto& t : turns) {
        detail::for_each_stream_token(t, streams, [&](const std::string& tok) { vocab.add(tok); });
    }
    return vocab.size() - before;
}

}  // namespace dact
