#pragma once

// Deterministic text perturbations. Each function is pure in (text, params,
// seed); randomized ones draw only from sage::Rng.
//
// Meaning-preserving: random_capitalization, char_prune, numerize.
// Meaning-altering:   toggle_negation, shuffle_sentences, shuffle_words.
// Degradation:        insert_needle, remove_tokens.

#include <sage/error.hpp>
#include <sage/filler_text.hpp>
#include <sage/rng.hpp>
#include <sage/tokenization.hpp>
#include <sage/utf8.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sage {

/// Round half away from zero, the convention for every token count.
inline std::size_t round_count(double x) { return static_cast<std::size_t>(std::llround(std::max(x, 0.0))); }

// ---------------------------------------------------------------------------
// Superficial perturbations

namespace detail {

inline char32_t to_upper(char32_t c) noexcept {
    if (c >= 'a' && c <= 'z') return c - 32;
    if (c < 0x80) return c;
    if ((c >= 0xE0 && c <= 0xFE && c != 0xF7)) return c - 0x20;
    if (c == 0xFF) return 0x178;
    if (c >= 0x100 && c <= 0x17F && c != 0x131 && c != 0x138 && c != 0x149) {
        // Latin Extended-A alternates upper/lower, with the parity flipping in 0x139..0x148 and 0x179..0x17E.
        const bool odd_lower = (c >= 0x139 && c <= 0x148) || (c >= 0x179 && c <= 0x17E);
        if (odd_lower ? (c % 2 == 0) : (c % 2 == 1)) return c - 1;
        return c;
    }
    if (c >= 0x3B1 && c <= 0x3C9 && c != 0x3C2) return c - 0x20;
    if (c >= 0x430 && c <= 0x44F) return c - 0x20;
    if (c >= 0x450 && c <= 0x45F) return c - 0x50;
    return c;
}

}  // namespace detail

/// Uppercases round(fraction * L) of the L letters, chosen without
/// replacement. Letters already uppercase stay uppercase; nothing is
/// lowercased. Case mapping covers ASCII, Latin-1, Latin Extended-A, basic
/// Greek and Cyrillic.
inline std::string random_capitalization(std::string_view text, double fraction, std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw InputError("capitalization fraction must lie in [0, 1]");
    std::u32string cps = utf8::decode(text);
    std::vector<std::size_t> letters;
    for (std::size_t i = 0; i < cps.size(); ++i)
        if (is_letter(cps[i])) letters.push_back(i);
    const std::size_t k = std::min(round_count(fraction * static_cast<double>(letters.size())), letters.size());
    if (k == 0) return std::string(text);

    Rng rng(seed);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(letters.size() - i));
        std::swap(letters[i], letters[j]);
        cps[letters[i]] = detail::to_upper(cps[letters[i]]);
    }
    return utf8::encode(cps);
}

/// Removes characters at 1-based positions divisible by n, counted on the
/// original text. When such a character is whitespace, the next
/// non-whitespace character is removed instead so word boundaries survive.
inline std::string char_prune(std::string_view text, std::size_t n = 10) {
    if (n < 2) throw InputError("char_prune step must be >= 2");
    const std::u32string cps = utf8::decode(text);
    std::vector<bool> drop(cps.size(), false);
    for (std::size_t pos = n; pos <= cps.size(); pos += n) {
        std::size_t i = pos - 1;
        while (i < cps.size() && is_space(cps[i])) ++i;
        if (i < cps.size()) drop[i] = true;
    }
    std::u32string out;
    out.reserve(cps.size());
    for (std::size_t i = 0; i < cps.size(); ++i)
        if (!drop[i]) out.push_back(cps[i]);
    return utf8::encode(out);
}

/// Lowercase e/i/a/o become 3/1/4/0; everything else is untouched.
inline std::string numerize(std::string_view text) {
    std::string out(text);
    for (char& c : out) {
        switch (c) {
            case 'e': c = '3'; break;
            case 'i': c = '1'; break;
            case 'a': c = '4'; break;
            case 'o': c = '0'; break;
            default: break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Semantic alterations

namespace detail {

struct NegationRule {
    std::string_view match;        // lowercase; a space matches one or more whitespace characters
    std::size_t keep;              // leading characters of the match kept verbatim
    std::string_view replacement;  // appended after the kept prefix
};

// Negated forms precede their affirmatives so "is not" never becomes "is not not".
inline constexpr std::array<NegationRule, 21> kNegationRules = {{
    {"is not", 2, ""},
    {"are not", 3, ""},
    {"was not", 3, ""},
    {"were not", 4, ""},
    {"cannot", 3, ""},
    {"can not", 3, ""},
    {"will not", 4, ""},
    {"does not", 4, ""},
    {"do not", 2, ""},
    {"has not", 3, ""},
    {"have not", 4, ""},
    {"is", 2, " not"},
    {"are", 3, " not"},
    {"was", 3, " not"},
    {"were", 4, " not"},
    {"can", 3, "not"},
    {"will", 4, " not"},
    {"does", 4, " not"},
    {"do", 2, " not"},
    {"has", 3, " not"},
    {"have", 4, " not"},
}};

inline bool is_word_char(char c) noexcept {
    const auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) || c == '_' || u >= 0x80;
}

inline bool is_ascii_space(char c) noexcept { return c == ' ' || (c >= '\t' && c <= '\r'); }

// Length of `rule` matched at text[i], honoring word boundaries, or 0.
inline std::size_t match_rule(std::string_view text, std::size_t i, const NegationRule& rule) {
    std::size_t j = i;
    for (char want : rule.match) {
        if (want == ' ') {
            if (j >= text.size() || !is_ascii_space(text[j])) return 0;
            while (j < text.size() && is_ascii_space(text[j])) ++j;
            continue;
        }
        if (j >= text.size()) return 0;
        const char got = static_cast<char>(std::tolower(static_cast<unsigned char>(text[j])));
        if (got != want) return 0;
        ++j;
    }
    if (j < text.size() && is_word_char(text[j])) return 0;
    return j - i;
}

}  // namespace detail

/// One left-to-right pass over a fixed table of auxiliary verbs, toggling
/// each whole-word match between its affirmative and negated form
/// (is/is not, can/cannot, ...). Matching ignores ASCII case and the kept
/// verb keeps its original spelling; produced text is never rescanned.
inline std::string toggle_negation(std::string_view text) {
    std::string out;
    out.reserve(text.size() + text.size() / 8);
    std::size_t i = 0;
    while (i < text.size()) {
        const bool at_boundary = i == 0 || !detail::is_word_char(text[i - 1]);
        bool replaced = false;
        if (at_boundary) {
            for (const auto& rule : detail::kNegationRules) {
                if (const std::size_t len = detail::match_rule(text, i, rule)) {
                    out.append(text.substr(i, rule.keep));
                    out.append(rule.replacement);
                    i += len;
                    replaced = true;
                    break;
                }
            }
        }
        if (!replaced) out.push_back(text[i++]);
    }
    return out;
}

/// Sentences end at '.', '!' or '?' followed by whitespace or end of text; the
/// terminator stays with its sentence and surrounding whitespace is trimmed.
inline std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> sentences;
    auto push = [&](std::string_view s) {
        const auto b = s.find_first_not_of(" \t\n\r\f\v");
        if (b == std::string_view::npos) return;
        const auto e = s.find_last_not_of(" \t\n\r\f\v");
        sentences.emplace_back(s.substr(b, e - b + 1));
    };
    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if ((c == '.' || c == '!' || c == '?') &&
            (i + 1 == text.size() || detail::is_ascii_space(text[i + 1]))) {
            push(text.substr(start, i + 1 - start));
            start = i + 1;
        }
    }
    push(text.substr(start));
    return sentences;
}

inline std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> words;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && detail::is_ascii_space(text[i])) ++i;
        const std::size_t start = i;
        while (i < text.size() && !detail::is_ascii_space(text[i])) ++i;
        if (i > start) words.emplace_back(text.substr(start, i - start));
    }
    return words;
}

namespace detail {

inline std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out.push_back(' ');
        out += parts[i];
    }
    return out;
}

}  // namespace detail

/// Seeded Fisher-Yates permutation of sentences, joined by single spaces.
inline std::string shuffle_sentences(std::string_view text, std::uint64_t seed) {
    auto sentences = split_sentences(text);
    if (sentences.size() < 2) return std::string(text);
    Rng(seed).shuffle(std::span(sentences));
    return detail::join(sentences);
}

/// Seeded Fisher-Yates permutation of whitespace-delimited words.
inline std::string shuffle_words(std::string_view text, std::uint64_t seed) {
    auto words = split_words(text);
    if (words.size() < 2) return std::string(text);
    Rng(seed).shuffle(std::span(words));
    return detail::join(words);
}

// ---------------------------------------------------------------------------
// Degradation: needle insertion and token removal

/// Filler text used for needle insertion. Shorter sources are cycled,
/// joined by a space, until enough tokens are available.
class NeedleSource {
public:
    NeedleSource() : text_(kLoremIpsum) {}
    explicit NeedleSource(std::string text) : text_(std::move(text)) {
        if (text_.empty()) throw InputError("needle source text is empty");
        if (!utf8::is_valid(text_)) throw InputError("needle source is not valid UTF-8");
    }

    const std::string& text() const noexcept { return text_; }

    /// First `count` tokens of the (cycled) source, decoded.
    std::string take(std::size_t count, const Tokenizer& tokenizer) const {
        if (count == 0) return {};
        const std::size_t per_copy = std::max<std::size_t>(tokenizer.count(text_), 1);
        std::string stream = text_;
        for (std::size_t copies = 1; copies * per_copy < count + 1; ++copies) {
            stream += ' ';
            stream += text_;
        }
        auto seq = tokenizer.encode(stream);
        if (seq.size() < count) throw Error("needle source too short after cycling");
        return utf8::strip_invalid(tokenizer.decode(std::span(seq.tokens).first(count)));
    }

private:
    std::string text_;
};

namespace detail {

// floor() tolerant of products like 0.5 * (1 - 0.9) * 100 = 4.999999999999999.
inline std::size_t floor_count(double x) {
    return static_cast<std::size_t>(std::floor(std::max(x, 0.0) + 1e-9));
}

inline void require_unit_interval(double position) {
    if (!(position >= 0.0 && position <= 1.0)) throw InputError("position must lie in [0, 1]");
}

}  // namespace detail

/// Inserts round(proportion * |tokens(text)|) needle tokens at code point
/// floor(position * length(text)), padded by one space on each side that
/// has neighbouring text.
inline std::string insert_needle(std::string_view text, double proportion, double position,
                                 const Tokenizer& tokenizer, const NeedleSource& source = {}) {
    if (text.empty()) throw InputError("insert_needle on empty text");
    if (!(proportion > 0.0)) throw InputError("needle proportion must be > 0");
    detail::require_unit_interval(position);

    const std::size_t n_tokens = tokenizer.count(text);
    const std::string needle = source.take(round_count(proportion * static_cast<double>(n_tokens)), tokenizer);

    const std::u32string cps = utf8::decode(text);
    const std::size_t at = std::min(detail::floor_count(position * static_cast<double>(cps.size())), cps.size());
    std::string out = utf8::encode(std::u32string_view(cps).substr(0, at));
    if (!out.empty()) out += ' ';
    out += needle;
    std::string right = utf8::encode(std::u32string_view(cps).substr(at));
    if (!right.empty()) {
        out += ' ';
        out += right;
    }
    return out;
}

/// Removes k = round(proportion * |T|) contiguous tokens starting at
/// floor(position * (1 - proportion) * |T|).
inline std::string remove_tokens(std::string_view text, double proportion, double position,
                                 const Tokenizer& tokenizer) {
    if (text.empty()) throw InputError("remove_tokens on empty text");
    if (!(proportion > 0.0 && proportion <= 1.0)) throw InputError("removal proportion must lie in (0, 1]");
    detail::require_unit_interval(position);

    auto seq = tokenizer.encode(text);
    const double total = static_cast<double>(seq.size());
    const std::size_t k = std::min(round_count(proportion * total), seq.size());
    if (k == 0) return std::string(text);
    const std::size_t start = std::min(detail::floor_count(position * (1.0 - proportion) * total), seq.size() - k);
    auto& t = seq.tokens;
    t.erase(t.begin() + static_cast<std::ptrdiff_t>(start), t.begin() + static_cast<std::ptrdiff_t>(start + k));
    return utf8::strip_invalid(tokenizer.decode(seq));
}

// ---------------------------------------------------------------------------
// Specs

enum class PerturbationKind {
    random_caps,
    char_prune,
    numerize,
    negation,
    sentence_shuffle,
    word_shuffle,
    needle_insert,
    token_remove,
};

inline constexpr std::array<PerturbationKind, 8> kAllPerturbationKinds = {
    PerturbationKind::random_caps,      PerturbationKind::char_prune,   PerturbationKind::numerize,
    PerturbationKind::negation,         PerturbationKind::sentence_shuffle, PerturbationKind::word_shuffle,
    PerturbationKind::needle_insert,    PerturbationKind::token_remove,
};

inline std::string_view to_string(PerturbationKind kind) noexcept {
    switch (kind) {
        case PerturbationKind::random_caps: return "random_caps";
        case PerturbationKind::char_prune: return "char_prune";
        case PerturbationKind::numerize: return "numerize";
        case PerturbationKind::negation: return "negation";
        case PerturbationKind::sentence_shuffle: return "sentence_shuffle";
        case PerturbationKind::word_shuffle: return "word_shuffle";
        case PerturbationKind::needle_insert: return "needle_insert";
        case PerturbationKind::token_remove: return "token_remove";
    }
    return "unknown";
}

inline PerturbationKind parse_perturbation_kind(std::string_view name) {
    for (auto k : kAllPerturbationKinds)
        if (to_string(k) == name) return k;
    throw InputError("unknown perturbation kind '" + std::string(name) + "'");
}

inline bool is_superficial(PerturbationKind k) noexcept {
    return k == PerturbationKind::random_caps || k == PerturbationKind::char_prune || k == PerturbationKind::numerize;
}

inline bool is_randomized(PerturbationKind k) noexcept {
    return k == PerturbationKind::random_caps || k == PerturbationKind::sentence_shuffle ||
           k == PerturbationKind::word_shuffle;
}

struct PerturbationSpec {
    PerturbationKind kind = PerturbationKind::numerize;
    double position = 0.0;    // needle_insert / token_remove only
    double proportion = 0.0;  // needle_insert / token_remove only
    std::uint64_t seed = 0;

    void validate() const {
        if (kind == PerturbationKind::needle_insert || kind == PerturbationKind::token_remove) {
            detail::require_unit_interval(position);
            if (!(proportion > 0.0)) throw InputError("proportion must be > 0");
            if (kind == PerturbationKind::token_remove && proportion > 1.0)
                throw InputError("removal proportion must be <= 1");
        }
    }

    /// Stable label such as "needle_insert@0.5/0.15".
    std::string label() const {
        std::string s(to_string(kind));
        if (kind == PerturbationKind::needle_insert || kind == PerturbationKind::token_remove) {
            auto fmt = [](double v) {
                std::string r = std::to_string(v);
                r.erase(r.find_last_not_of('0') + 1);
                if (r.back() == '.') r.pop_back();
                return r;
            };
            s += "@" + fmt(position) + "/" + fmt(proportion);
        }
        return s;
    }

    friend bool operator==(const PerturbationSpec&, const PerturbationSpec&) = default;
};

inline constexpr double kCapitalizationFraction = 0.25;
inline constexpr std::size_t kPruneStep = 10;

struct PerturbationContext {
    const Tokenizer& tokenizer;
    const NeedleSource& needle;
};

inline std::string apply(const PerturbationSpec& spec, std::string_view text, const PerturbationContext& ctx) {
    spec.validate();
    switch (spec.kind) {
        case PerturbationKind::random_caps: return random_capitalization(text, kCapitalizationFraction, spec.seed);
        case PerturbationKind::char_prune: return char_prune(text, kPruneStep);
        case PerturbationKind::numerize: return numerize(text);
        case PerturbationKind::negation: return toggle_negation(text);
        case PerturbationKind::sentence_shuffle: return shuffle_sentences(text, spec.seed);
        case PerturbationKind::word_shuffle: return shuffle_words(text, spec.seed);
        case PerturbationKind::needle_insert:
            return insert_needle(text, spec.proportion, spec.position, ctx.tokenizer, ctx.needle);
        case PerturbationKind::token_remove: return remove_tokens(text, spec.proportion, spec.position, ctx.tokenizer);
    }
    throw InputError("unhandled perturbation kind");
}

/// Copy of `spec` seeded for one document; deterministic in (seed, doc id, kind).
inline PerturbationSpec seeded_for(PerturbationSpec spec, std::uint64_t global_seed, std::string_view doc_id) {
    spec.seed = derive_seed(global_seed, doc_id, to_string(spec.kind));
    return spec;
}

inline constexpr std::array<PerturbationKind, 3> kSuperficialKinds = {
    PerturbationKind::random_caps, PerturbationKind::char_prune, PerturbationKind::numerize};
inline constexpr std::array<PerturbationKind, 3> kSemanticKinds = {
    PerturbationKind::negation, PerturbationKind::sentence_shuffle, PerturbationKind::word_shuffle};

inline constexpr std::array<double, 3> kPositions = {0.0, 0.5, 1.0};
inline constexpr std::array<double, 3> kInsertionProportions = {0.15, 0.5, 1.0};
inline constexpr std::array<double, 3> kRemovalProportions = {0.15, 0.5, 0.9};
inline constexpr std::array<double, 2> kRetrievalProportions = {0.15, 0.5};

/// The 18 corpus perturbations: six transforms, then needle insertion and
/// token removal over positions {0, 0.5, 1} x sizes {15%, 50%}.
inline std::vector<PerturbationSpec> retrieval_perturbations() {
    std::vector<PerturbationSpec> specs;
    for (auto k : kSuperficialKinds) specs.push_back({k});
    for (auto k : kSemanticKinds) specs.push_back({k});
    for (auto kind : {PerturbationKind::needle_insert, PerturbationKind::token_remove})
        for (double pos : kPositions)
            for (double p : kRetrievalProportions) specs.push_back({kind, pos, p, 0});
    return specs;
}

}  // namespace sage
