#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "specdec/errors.hpp"

namespace specdec {

using TokenId = int32_t;

constexpr std::string_view kMaskSymbol = "<mask>";
constexpr std::string_view kBosSymbol  = "<bos>";

/// Token inventory shared by every model in a run. Carries two reserved
/// entries: MASK (the absorbing state, never emitted) and BOS (left padding
/// for contexts shorter than a model's order).
struct Vocab {
    std::vector<std::string> symbols;
    TokenId mask_id = -1;
    TokenId bos_id  = -1;

    int size() const { return static_cast<int>(symbols.size()); }

    bool valid_token(TokenId id) const { return id >= 0 && id < size(); }

    const std::string& symbol(TokenId id) const { return symbols[static_cast<size_t>(id)]; }
};

struct Tokenized {
    Vocab vocab;
    std::vector<TokenId> tokens;
};

namespace detail {

inline Vocab finish_vocab(std::vector<std::string> symbols) {
    for (const auto& s : symbols) {
        if (s == kMaskSymbol || s == kBosSymbol) {
            throw ConfigError("corpus token collides with reserved symbol '" + s +
                              "'; use byte-level vocab mode");
        }
    }
    Vocab v;
    v.symbols = std::move(symbols);
    v.symbols.emplace_back(kMaskSymbol);
    v.mask_id = static_cast<TokenId>(v.symbols.size() - 1);
    v.symbols.emplace_back(kBosSymbol);
    v.bos_id = static_cast<TokenId>(v.symbols.size() - 1);
    return v;
}

}  // namespace detail

/// Byte-level tokenization: one symbol per distinct byte present in the text,
/// ids assigned in byte order so the vocab is corpus-order independent.
inline Tokenized tokenize_bytes(std::string_view text) {
    std::map<unsigned char, TokenId> ids;
    for (unsigned char c : text) {
        ids.emplace(c, 0);
    }
    std::vector<std::string> symbols;
    for (auto& [c, id] : ids) {
        id = static_cast<TokenId>(symbols.size());
        symbols.emplace_back(1, static_cast<char>(c));
    }
    Tokenized out;
    out.vocab = detail::finish_vocab(std::move(symbols));
    out.tokens.reserve(text.size());
    for (unsigned char c : text) {
        out.tokens.push_back(ids.at(c));
    }
    return out;
}

/// Whitespace tokenization: symbols are the distinct whitespace-separated words.
inline Tokenized tokenize_whitespace(std::string_view text) {
    auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
    std::map<std::string, TokenId, std::less<>> ids;
    std::vector<std::string> words;
    size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        size_t start = i;
        while (i < text.size() && !is_space(text[i])) ++i;
        if (i > start) {
            words.emplace_back(text.substr(start, i - start));
        }
    }
    std::vector<std::string> symbols;
    for (const auto& w : words) {
        if (ids.emplace(w, 0).second) {
            symbols.push_back(w);
        }
    }
    std::sort(symbols.begin(), symbols.end());
    for (size_t s = 0; s < symbols.size(); ++s) {
        ids[symbols[s]] = static_cast<TokenId>(s);
    }
    Tokenized out;
    out.vocab = detail::finish_vocab(std::move(symbols));
    out.tokens.reserve(words.size());
    for (const auto& w : words) {
        out.tokens.push_back(ids.at(w));
    }
    return out;
}

/// Encode text against an existing vocab (prompts at generation time).
/// Unknown symbols are a configuration error, not a silent drop.
inline std::vector<TokenId> encode_with_vocab(const Vocab& vocab, std::string_view text, bool byte_mode) {
    std::map<std::string, TokenId, std::less<>> index;
    for (TokenId id = 0; id < vocab.size(); ++id) {
        if (id != vocab.mask_id && id != vocab.bos_id) {
            index.emplace(vocab.symbol(id), id);
        }
    }
    std::vector<TokenId> out;
    if (byte_mode) {
        constexpr char hex[] = "0123456789abcdef";
        for (char c : text) {
            auto it = index.find(std::string(1, c));
            if (it == index.end()) {
                unsigned char u = static_cast<unsigned char>(c);
                std::string msg = "prompt byte not in vocab: 0x";
                msg += hex[(u >> 4) & 0xF];
                msg += hex[u & 0xF];
                throw ConfigError(msg);
            }
            out.push_back(it->second);
        }
    } else {
        Tokenized t = tokenize_whitespace(text);
        for (TokenId id : t.tokens) {
            auto it = index.find(t.vocab.symbol(id));
            if (it == index.end()) {
                throw ConfigError("prompt word not in vocab: " + t.vocab.symbol(id));
            }
            out.push_back(it->second);
        }
    }
    return out;
}

inline std::string detokenize(const Vocab& vocab, std::span<const TokenId> tokens, bool byte_mode) {
    std::string out;
    bool first = true;
    for (TokenId id : tokens) {
        if (id == vocab.mask_id || id == vocab.bos_id) continue;
        if (!byte_mode && !first) out += ' ';
        out += vocab.symbol(id);
        first = false;
    }
    return out;
}

}  // namespace specdec
