#pragma once

// Token-level view of text. Two tokenizers share one pre-tokenizer, a
// hand-written matcher for the cl100k split pattern:
//
//   's|'t|'re|'ve|'m|'ll|'d          (case-insensitive)
//   [^\r\n\p{L}\p{N}]?\p{L}+
//   \p{N}{1,3}
//    ?[^\s\p{L}\p{N}]+[\r\n]*
//   \s*[\r\n]+
//   \s+(?!\S)
//   \s+
//
// Character classes are exact for ASCII and approximate elsewhere (see
// is_letter/is_number/is_space).
//
// BpeTokenizer applies byte-level BPE merges from a tiktoken-format ranks
// file to each piece. FallbackTokenizer uses each piece as one token whose id
// is the FNV-1a hash of its bytes.

#include <sage/error.hpp>
#include <sage/rng.hpp>
#include <sage/utf8.hpp>

#include <openssl/evp.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sage {

using TokenId = std::uint64_t;

struct TokenSequence {
    std::vector<TokenId> tokens;
    /// Code point count of the text that produced the sequence.
    std::size_t source_length = 0;

    std::size_t size() const noexcept { return tokens.size(); }
    bool empty() const noexcept { return tokens.empty(); }
};

/// Sorted, duplicate-free token ids.
using TokenSet = std::vector<TokenId>;

class Tokenizer {
public:
    virtual ~Tokenizer() = default;

    /// Throws InputError on ill-formed UTF-8.
    virtual TokenSequence encode(std::string_view text) const = 0;

    /// Throws InputError on an id outside the vocabulary. The result may be
    /// ill-formed UTF-8 when `ids` splits a multi-byte character.
    virtual std::string decode(std::span<const TokenId> ids) const = 0;

    /// Stable identifier recorded in report metadata.
    virtual std::string id() const = 0;

    std::string decode(const TokenSequence& seq) const { return decode(std::span(seq.tokens)); }

    std::size_t count(std::string_view text) const { return encode(text).size(); }
};

inline TokenSet token_set(const Tokenizer& tokenizer, std::string_view text) {
    TokenSet ids = tokenizer.encode(text).tokens;
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

// ---------------------------------------------------------------------------
// Character classes

inline bool is_space(char32_t c) noexcept {
    if (c < 0x80) return c == ' ' || (c >= 0x09 && c <= 0x0D);
    return c == 0x85 || c == 0xA0 || c == 0x1680 || (c >= 0x2000 && c <= 0x200A) || c == 0x2028 ||
           c == 0x2029 || c == 0x202F || c == 0x205F || c == 0x3000;
}

inline bool is_number(char32_t c) noexcept {
    if (c < 0x80) return c >= '0' && c <= '9';
    struct Range {
        char32_t lo, hi;
    };
    static constexpr Range kRanges[] = {
        {0xB2, 0xB3},     {0xB9, 0xB9},     {0xBC, 0xBE},     {0x660, 0x669},   {0x6F0, 0x6F9},
        {0x7C0, 0x7C9},   {0x966, 0x96F},   {0x9E6, 0x9EF},   {0xBE6, 0xBF2},   {0xE50, 0xE59},
        {0x2070, 0x2070}, {0x2074, 0x2079}, {0x2080, 0x2089}, {0x2150, 0x2189}, {0x2460, 0x249B},
        {0x24EA, 0x24FF}, {0x2776, 0x2793}, {0x3007, 0x3007}, {0x3021, 0x3029}, {0xFF10, 0xFF19},
    };
    for (auto r : kRanges)
        if (c >= r.lo && c <= r.hi) return true;
    return false;
}

inline bool is_letter(char32_t c) noexcept {
    if (c < 0x80) return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
    if (is_space(c) || is_number(c)) return false;
    if (c <= 0xBF) return c == 0xAA || c == 0xB5 || c == 0xBA;
    if (c == 0xD7 || c == 0xF7) return false;
    // Marks, punctuation, symbols, emoji, private use.
    struct Range {
        char32_t lo, hi;
    };
    static constexpr Range kNonLetters[] = {
        {0x2C2, 0x2C5},   {0x2D2, 0x2DF},   {0x2E5, 0x2EB},   {0x300, 0x36F},   {0x37E, 0x37E},
        {0x387, 0x387},   {0x55A, 0x55F},   {0x589, 0x58A},   {0x5BE, 0x5BE},   {0x600, 0x60F},
        {0x2000, 0x2BFF}, {0x2E00, 0x2E7F}, {0x3000, 0x3004}, {0x3008, 0x3020}, {0x3030, 0x303F},
        {0xD800, 0xF8FF}, {0xFE00, 0xFE6F}, {0xFF00, 0xFF0F}, {0xFF1A, 0xFF20}, {0xFF3B, 0xFF40},
        {0xFF5B, 0xFF65}, {0xFFF0, 0xFFFF}, {0x1F000, 0x1FAFF}, {0xE0000, 0x10FFFF},
    };
    for (auto r : kNonLetters)
        if (c >= r.lo && c <= r.hi) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Pre-tokenizer

namespace detail {

inline bool is_newline(char32_t c) noexcept { return c == '\r' || c == '\n'; }
inline bool is_other(char32_t c) noexcept { return !is_space(c) && !is_letter(c) && !is_number(c); }
inline char32_t ascii_lower(char32_t c) noexcept { return (c >= 'A' && c <= 'Z') ? c + 32 : c; }

// Length in code points of the piece starting at i.
inline std::size_t match_piece(const std::u32string& cp, std::size_t i) noexcept {
    const std::size_t n = cp.size();
    auto run = [&](std::size_t j, auto pred) {
        while (j < n && pred(cp[j])) ++j;
        return j;
    };

    if (cp[i] == '\'' && i + 1 < n) {
        const char32_t a = ascii_lower(cp[i + 1]);
        if (a == 's' || a == 't' || a == 'm' || a == 'd') return 2;
        if (i + 2 < n) {
            const char32_t b = ascii_lower(cp[i + 2]);
            if ((a == 'r' && b == 'e') || (a == 'v' && b == 'e') || (a == 'l' && b == 'l')) return 3;
        }
    }
    if (is_letter(cp[i])) return run(i, is_letter) - i;
    if (!is_newline(cp[i]) && !is_number(cp[i]) && i + 1 < n && is_letter(cp[i + 1]))
        return run(i + 1, is_letter) - i;
    if (is_number(cp[i])) {
        std::size_t j = i;
        while (j < n && j - i < 3 && is_number(cp[j])) ++j;
        return j - i;
    }
    {
        std::size_t j = i;
        if (cp[j] == ' ' && j + 1 < n && is_other(cp[j + 1])) ++j;
        if (is_other(cp[j])) {
            j = run(j, is_other);
            j = run(j, is_newline);
            return j - i;
        }
    }
    // Whitespace alternatives.
    const std::size_t end = run(i, is_space);
    for (std::size_t k = end; k > i; --k)
        if (is_newline(cp[k - 1])) return k - i;
    if (end == n || end - i == 1) return end - i;
    return end - 1 - i;
}

}  // namespace detail

/// Splits valid UTF-8 into pre-tokenizer pieces; their concatenation is `text`.
inline std::vector<std::string_view> pretokenize(std::string_view text) {
    std::vector<std::string_view> pieces;
    const std::u32string cp = utf8::decode(text);
    std::vector<std::size_t> offset(cp.size() + 1, 0);
    {
        std::size_t byte = 0;
        for (std::size_t k = 0; k < cp.size(); ++k) {
            offset[k] = byte;
            byte += utf8::encoded_size(cp[k]);
        }
        offset[cp.size()] = byte;
    }
    for (std::size_t i = 0; i < cp.size();) {
        const std::size_t len = detail::match_piece(cp, i);
        pieces.push_back(text.substr(offset[i], offset[i + len] - offset[i]));
        i += len;
    }
    return pieces;
}

namespace detail {

inline void require_utf8(std::string_view text) {
    if (!utf8::is_valid(text)) throw InputError("tokenizer input is not valid UTF-8");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Fallback tokenizer

/// Pre-tokenizer pieces as tokens, needing no vocabulary file. Ids are
/// FNV-1a hashes of the piece bytes; a piece must have been encoded by this
/// instance before its id can be decoded.
class FallbackTokenizer final : public Tokenizer {
public:
    TokenSequence encode(std::string_view text) const override {
        detail::require_utf8(text);
        TokenSequence seq;
        seq.source_length = utf8::length(text);
        const auto pieces = pretokenize(text);
        seq.tokens.reserve(pieces.size());

        std::vector<std::string_view> unseen;
        {
            std::shared_lock lock(mutex_);
            for (auto piece : pieces) {
                const TokenId id = fnv1a64(piece);
                seq.tokens.push_back(id);
                auto it = pieces_.find(id);
                if (it == pieces_.end())
                    unseen.push_back(piece);
                else if (it->second != piece)
                    throw Error("fallback tokenizer id collision on '" + std::string(piece) + "'");
            }
        }
        if (!unseen.empty()) {
            std::unique_lock lock(mutex_);
            for (auto piece : unseen) {
                auto [it, inserted] = pieces_.try_emplace(fnv1a64(piece), piece);
                if (!inserted && it->second != piece)
                    throw Error("fallback tokenizer id collision on '" + std::string(piece) + "'");
            }
        }
        return seq;
    }

    std::string decode(std::span<const TokenId> ids) const override {
        std::string out;
        std::shared_lock lock(mutex_);
        for (TokenId id : ids) {
            auto it = pieces_.find(id);
            if (it == pieces_.end()) throw InputError("unknown token id " + std::to_string(id));
            out += it->second;
        }
        return out;
    }

    using Tokenizer::decode;

    std::string id() const override { return "fallback-pretokenizer-v1"; }

private:
    mutable std::shared_mutex mutex_;
    mutable std::unordered_map<TokenId, std::string> pieces_;
};

// ---------------------------------------------------------------------------
// Byte-level BPE tokenizer

class BpeTokenizer final : public Tokenizer {
public:
    /// `ranks` maps token bytes to merge rank; every single byte must be present.
    BpeTokenizer(std::unordered_map<std::string, std::uint32_t> ranks, std::string name)
        : encoder_(std::move(ranks)), name_(std::move(name)) {
        for (const auto& [bytes, rank] : encoder_) {
            if (!decoder_.emplace(rank, bytes).second)
                throw ParseError("duplicate rank " + std::to_string(rank) + " in BPE vocabulary");
        }
        for (int b = 0; b < 256; ++b) {
            if (!encoder_.contains(std::string(1, static_cast<char>(b))))
                throw ParseError("BPE vocabulary is missing single byte " + std::to_string(b));
        }
    }

    /// Reads a tiktoken ranks file: one "<base64 token> <rank>" per line.
    static BpeTokenizer from_file(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open BPE vocabulary " + path.string());
        std::unordered_map<std::string, std::uint32_t> ranks;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            const auto space = line.find(' ');
            auto bad = [&](const std::string& why) {
                return ParseError(path.string() + ":" + std::to_string(line_no) + ": " + why);
            };
            if (space == std::string::npos) throw bad("expected '<base64> <rank>'");
            auto bytes = base64_decode(std::string_view(line).substr(0, space));
            if (!bytes) throw bad("invalid base64 token");
            std::uint32_t rank = 0;
            try {
                const unsigned long v = std::stoul(line.substr(space + 1));
                if (v > std::numeric_limits<std::uint32_t>::max()) throw std::out_of_range("rank");
                rank = static_cast<std::uint32_t>(v);
            } catch (const std::exception&) {
                throw bad("invalid rank");
            }
            if (!ranks.emplace(std::move(*bytes), rank).second) throw bad("duplicate token");
        }
        return BpeTokenizer(std::move(ranks), "bpe:" + path.filename().string());
    }

    TokenSequence encode(std::string_view text) const override {
        detail::require_utf8(text);
        TokenSequence seq;
        seq.source_length = utf8::length(text);
        for (auto piece : pretokenize(text)) {
            if (auto it = encoder_.find(std::string(piece)); it != encoder_.end()) {
                seq.tokens.push_back(it->second);
                continue;
            }
            merge_piece(piece, seq.tokens);
        }
        return seq;
    }

    std::string decode(std::span<const TokenId> ids) const override {
        std::string out;
        for (TokenId id : ids) {
            auto it = id <= std::numeric_limits<std::uint32_t>::max()
                          ? decoder_.find(static_cast<std::uint32_t>(id))
                          : decoder_.end();
            if (it == decoder_.end()) throw InputError("unknown token id " + std::to_string(id));
            out += it->second;
        }
        return out;
    }

    using Tokenizer::decode;

    std::string id() const override { return name_; }

    std::size_t vocabulary_size() const noexcept { return encoder_.size(); }

private:
    static constexpr std::uint32_t kNoRank = std::numeric_limits<std::uint32_t>::max();

    static std::optional<std::string> base64_decode(std::string_view in) {
        if (in.empty() || in.size() % 4 != 0) return std::nullopt;
        std::string out(in.size() / 4 * 3, '\0');
        const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                      reinterpret_cast<const unsigned char*>(in.data()),
                                      static_cast<int>(in.size()));
        if (n < 0) return std::nullopt;
        std::size_t pad = 0;
        if (in.back() == '=') ++pad;
        if (in.size() >= 2 && in[in.size() - 2] == '=') ++pad;
        out.resize(static_cast<std::size_t>(n) - pad);
        return out;
    }

    std::uint32_t rank_of(std::string_view piece, std::size_t begin, std::size_t end) const {
        auto it = encoder_.find(std::string(piece.substr(begin, end - begin)));
        return it == encoder_.end() ? kNoRank : it->second;
    }

    // Repeatedly merges the adjacent pair with the lowest rank (leftmost on
    // ties) until no adjacent pair is in the vocabulary.
    void merge_piece(std::string_view piece, std::vector<TokenId>& out) const {
        struct Part {
            std::size_t start;
            std::uint32_t pair_rank;  // rank of this part merged with its right neighbour
        };
        std::vector<Part> parts;
        parts.reserve(piece.size() + 1);
        for (std::size_t i = 0; i <= piece.size(); ++i) parts.push_back({i, kNoRank});
        auto pair_rank = [&](std::size_t i) {
            if (i + 2 >= parts.size()) return kNoRank;
            return rank_of(piece, parts[i].start, parts[i + 2].start);
        };
        for (std::size_t i = 0; i + 2 < parts.size(); ++i) parts[i].pair_rank = pair_rank(i);

        while (parts.size() > 2) {
            std::uint32_t best = kNoRank;
            std::size_t best_i = 0;
            for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
                if (parts[i].pair_rank < best) {
                    best = parts[i].pair_rank;
                    best_i = i;
                }
            }
            if (best == kNoRank) break;
            parts.erase(parts.begin() + static_cast<std::ptrdiff_t>(best_i) + 1);
            parts[best_i].pair_rank = pair_rank(best_i);
            if (best_i > 0) parts[best_i - 1].pair_rank = pair_rank(best_i - 1);
        }
        for (std::size_t i = 0; i + 1 < parts.size(); ++i)
            out.push_back(rank_of(piece, parts[i].start, parts[i + 1].start));
    }

    std::unordered_map<std::string, std::uint32_t> encoder_;
    std::unordered_map<std::uint32_t, std::string> decoder_;
    std::string name_;
};

/// BPE tokenizer when a vocabulary path is configured, otherwise the fallback.
inline std::shared_ptr<const Tokenizer> make_tokenizer(
    const std::optional<std::filesystem::path>& vocab_path) {
    if (vocab_path) return std::make_shared<BpeTokenizer>(BpeTokenizer::from_file(*vocab_path));
    return std::make_shared<FallbackTokenizer>();
}

}  // namespace sage
