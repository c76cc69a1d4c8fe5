#pragma once

// Pairwise similarity metrics: Levenshtein ratio, ROUGE-1/2 average F,
// token-set Jaccard, batch-normalized BM25+ and vector cosine.
//
// Token-based metrics never case-fold or drop stop words, so surface edits
// such as random capitalization remain visible to them.

#include <sage/error.hpp>
#include <sage/tokenization.hpp>
#include <sage/utf8.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace sage {

enum class MetricId { levenshtein, rouge, jaccard, bm25, cosine };

inline std::string_view to_string(MetricId id) noexcept {
    switch (id) {
        case MetricId::levenshtein: return "levenshtein";
        case MetricId::rouge: return "rouge";
        case MetricId::jaccard: return "jaccard";
        case MetricId::bm25: return "bm25";
        case MetricId::cosine: return "cosine";
    }
    return "unknown";
}

struct PairScore {
    double value = 0.0;
    MetricId metric = MetricId::levenshtein;
};

// ---------------------------------------------------------------------------
// Levenshtein ratio

/// Longest common subsequence length, bit-parallel over the shorter string.
inline std::size_t lcs_length(std::u32string_view a, std::u32string_view b) {
    if (a.size() > b.size()) std::swap(a, b);
    if (a.empty()) return 0;
    const std::size_t m = a.size();
    const std::size_t words = (m + 63) / 64;

    std::array<std::vector<std::uint64_t>, 128> ascii_masks;
    std::unordered_map<char32_t, std::vector<std::uint64_t>> other_masks;
    auto mask_for = [&](char32_t c) -> std::vector<std::uint64_t>& {
        if (c < 128) {
            auto& v = ascii_masks[c];
            if (v.empty()) v.assign(words, 0);
            return v;
        }
        auto& v = other_masks[c];
        if (v.empty()) v.assign(words, 0);
        return v;
    };
    for (std::size_t i = 0; i < m; ++i) mask_for(a[i])[i / 64] |= std::uint64_t{1} << (i % 64);

    const std::vector<std::uint64_t> none(words, 0);
    std::vector<std::uint64_t> s(words, ~std::uint64_t{0});
    for (char32_t c : b) {
        const std::vector<std::uint64_t>* pm = &none;
        if (c < 128) {
            if (!ascii_masks[c].empty()) pm = &ascii_masks[c];
        } else if (auto it = other_masks.find(c); it != other_masks.end()) {
            pm = &it->second;
        }
        std::uint64_t carry = 0;
        for (std::size_t w = 0; w < words; ++w) {
            const std::uint64_t u = s[w] & (*pm)[w];
            const std::uint64_t partial = s[w] + carry;
            const std::uint64_t c1 = partial < carry;
            const std::uint64_t sum = partial + u;
            const std::uint64_t c2 = sum < u;
            carry = c1 | c2;
            s[w] = sum | (s[w] & ~u);
        }
    }
    std::size_t ones = 0;
    for (std::size_t w = 0; w < words; ++w) {
        std::uint64_t v = s[w];
        if (w == words - 1 && m % 64 != 0) v &= (std::uint64_t{1} << (m % 64)) - 1;
        ones += static_cast<std::size_t>(std::popcount(v));
    }
    return m - ones;
}

/// ((|a|+|b|) - d2(a,b)) / (|a|+|b|) over code points, where d2 is edit
/// distance with substitution cost 2. Since a substitution then costs the
/// same as delete+insert, d2 = |a| + |b| - 2 LCS. Two empty strings score 1.
inline PairScore levenshtein_ratio(std::string_view a, std::string_view b) {
    const std::u32string ca = utf8::decode(a);
    const std::u32string cb = utf8::decode(b);
    const std::size_t total = ca.size() + cb.size();
    if (total == 0) return {1.0, MetricId::levenshtein};
    const double lcs = static_cast<double>(lcs_length(ca, cb));
    return {2.0 * lcs / static_cast<double>(total), MetricId::levenshtein};
}

// ---------------------------------------------------------------------------
// ROUGE

namespace detail {

template <typename Key>
double ngram_f1(const std::map<Key, int>& candidate, int candidate_total,
                const std::map<Key, int>& reference, int reference_total) {
    if (candidate_total == 0 || reference_total == 0) return 0.0;
    int overlap = 0;
    for (const auto& [gram, count] : candidate) {
        if (auto it = reference.find(gram); it != reference.end()) overlap += std::min(count, it->second);
    }
    if (overlap == 0) return 0.0;
    const double precision = static_cast<double>(overlap) / candidate_total;
    const double recall = static_cast<double>(overlap) / reference_total;
    return 2.0 * precision * recall / (precision + recall);
}

}  // namespace detail

/// Mean of the ROUGE-1 and ROUGE-2 F-measures on token sequences. A level
/// with no n-grams on either side contributes 0. Precision is taken over the
/// candidate and recall over the reference; swapping the arguments swaps the
/// two and leaves each F unchanged.
inline PairScore rouge_avg_f(std::string_view candidate, std::string_view reference,
                             const Tokenizer& tokenizer) {
    const auto cand = tokenizer.encode(candidate).tokens;
    const auto ref = tokenizer.encode(reference).tokens;

    auto unigrams = [](const std::vector<TokenId>& t) {
        std::map<TokenId, int> counts;
        for (TokenId id : t) ++counts[id];
        return counts;
    };
    auto bigrams = [](const std::vector<TokenId>& t) {
        std::map<std::pair<TokenId, TokenId>, int> counts;
        for (std::size_t i = 0; i + 1 < t.size(); ++i) ++counts[{t[i], t[i + 1]}];
        return counts;
    };
    const auto nc = static_cast<int>(cand.size());
    const auto nr = static_cast<int>(ref.size());
    const double f1 = detail::ngram_f1(unigrams(cand), nc, unigrams(ref), nr);
    const double f2 = detail::ngram_f1(bigrams(cand), std::max(nc - 1, 0), bigrams(ref), std::max(nr - 1, 0));
    return {(f1 + f2) / 2.0, MetricId::rouge};
}

// ---------------------------------------------------------------------------
// Jaccard

inline double jaccard_sets(const TokenSet& a, const TokenSet& b) {
    if (a.empty() && b.empty()) return 1.0;
    std::size_t inter = 0;
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (*i < *j) {
            ++i;
        } else if (*j < *i) {
            ++j;
        } else {
            ++inter, ++i, ++j;
        }
    }
    const std::size_t uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

inline PairScore jaccard(std::string_view a, std::string_view b, const Tokenizer& tokenizer) {
    return {jaccard_sets(token_set(tokenizer, a), token_set(tokenizer, b)), MetricId::jaccard};
}

// ---------------------------------------------------------------------------
// BM25+

struct Bm25Params {
    double k1 = 1.5;
    double b = 0.75;
    double epsilon = 0.25;
    double delta = 1.0;

    void validate() const {
        if (!(k1 > 0.0)) throw InputError("bm25 k1 must be > 0");
        if (!(b >= 0.0 && b <= 1.0)) throw InputError("bm25 b must lie in [0, 1]");
        if (!(epsilon >= 0.0)) throw InputError("bm25 epsilon must be >= 0");
        if (!(delta >= 0.0)) throw InputError("bm25 delta must be >= 0");
    }
};

/// Term statistics of one scoring batch.
///
/// IDF(t) = ln((N - n_t + 0.5) / (n_t + 0.5)). Values <= 0 are floored at
/// epsilon * (mean of the positive IDFs over the batch vocabulary), or at
/// epsilon alone when no term has a positive IDF.
class Bm25CorpusStats {
public:
    Bm25CorpusStats(std::span<const std::vector<TokenId>> docs, double epsilon) : docs_(docs.size()) {
        double total_len = 0.0;
        term_freqs_.reserve(docs.size());
        for (const auto& doc : docs) {
            std::unordered_map<TokenId, int> tf;
            for (TokenId t : doc) ++tf[t];
            for (const auto& [t, count] : tf) ++doc_freq_[t];
            term_freqs_.push_back(std::move(tf));
            lengths_.push_back(static_cast<double>(doc.size()));
            total_len += static_cast<double>(doc.size());
        }
        avg_len_ = docs.empty() ? 0.0 : total_len / static_cast<double>(docs.size());

        double positive_sum = 0.0;
        std::size_t positive_count = 0;
        for (const auto& [t, n] : doc_freq_) {
            const double v = raw_idf(n);
            if (v > 0.0) {
                positive_sum += v;
                ++positive_count;
            }
        }
        floor_ = epsilon * (positive_count ? positive_sum / static_cast<double>(positive_count) : 1.0);
    }

    std::size_t size() const noexcept { return docs_; }
    double average_length() const noexcept { return avg_len_; }
    double length(std::size_t doc) const { return lengths_.at(doc); }
    double floor() const noexcept { return floor_; }

    std::size_t doc_freq(TokenId term) const {
        auto it = doc_freq_.find(term);
        return it == doc_freq_.end() ? 0 : static_cast<std::size_t>(it->second);
    }

    int term_freq(std::size_t doc, TokenId term) const {
        const auto& tf = term_freqs_.at(doc);
        auto it = tf.find(term);
        return it == tf.end() ? 0 : it->second;
    }

    double idf(TokenId term) const {
        const double v = raw_idf(static_cast<int>(doc_freq(term)));
        return v > 0.0 ? v : floor_;
    }

private:
    double raw_idf(int n) const {
        const double big_n = static_cast<double>(docs_);
        return std::log((big_n - n + 0.5) / (n + 0.5));
    }

    std::size_t docs_;
    std::vector<std::unordered_map<TokenId, int>> term_freqs_;
    std::vector<double> lengths_;
    std::unordered_map<TokenId, int> doc_freq_;
    double avg_len_ = 0.0;
    double floor_ = 0.0;
};

inline double idf(TokenId term, const Bm25CorpusStats& stats) { return stats.idf(term); }

/// Raw BM25+ score of one batch document: sum over query tokens (with
/// repetition) of IDF(t) * (tf (k1+1) / (tf + k1 (1 - b + b |D| / avgDL)) + delta).
inline double bm25_raw_score(const std::vector<TokenId>& query, const Bm25CorpusStats& stats,
                             const Bm25Params& params, std::size_t doc) {
    const double avg = stats.average_length() > 0.0 ? stats.average_length() : 1.0;
    const double norm = params.k1 * (1.0 - params.b + params.b * stats.length(doc) / avg);
    double s = 0.0;
    for (TokenId t : query) {
        const double tf = stats.term_freq(doc, t);
        s += stats.idf(t) * (tf * (params.k1 + 1.0) / (tf + norm) + params.delta);
    }
    return s;
}

inline std::vector<double> bm25_raw_scores(const std::vector<TokenId>& query,
                                           const Bm25CorpusStats& stats, const Bm25Params& params) {
    std::vector<double> scores(stats.size(), 0.0);
    for (std::size_t d = 0; d < stats.size(); ++d) scores[d] = bm25_raw_score(query, stats, params, d);
    return scores;
}

/// Min-max normalizes in place; a constant batch maps to 0.5.
inline void min_max_normalize(std::vector<double>& values) {
    if (values.empty()) return;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double min = *lo;
    const double max = *hi;
    for (double& v : values) v = max == min ? 0.5 : (v - min) / (max - min);
}

/// BM25+ of `query` against each doc, min-max normalized over the batch.
/// Corpus statistics come from `docs` alone. Not symmetric in query/doc.
inline std::vector<PairScore> bm25_batch(std::string_view query, std::span<const std::string> docs,
                                         const Bm25Params& params, const Tokenizer& tokenizer) {
    if (docs.empty()) throw InputError("bm25_batch needs at least one document");
    params.validate();
    std::vector<std::vector<TokenId>> tokenized;
    tokenized.reserve(docs.size());
    for (const auto& d : docs) tokenized.push_back(tokenizer.encode(d).tokens);
    const Bm25CorpusStats stats(tokenized, params.epsilon);
    auto scores = bm25_raw_scores(tokenizer.encode(query).tokens, stats, params);
    min_max_normalize(scores);
    std::vector<PairScore> out;
    out.reserve(scores.size());
    for (double s : scores) out.push_back({s, MetricId::bm25});
    return out;
}

/// Independent (query, doc) pairs scored as one batch: corpus statistics
/// come from all pair documents, pair i scores query i against doc i, and
/// the scores are min-max normalized across the pairs.
inline std::vector<PairScore> bm25_pairs(std::span<const std::pair<std::string, std::string>> pairs,
                                         const Bm25Params& params, const Tokenizer& tokenizer) {
    if (pairs.empty()) throw InputError("bm25_pairs needs at least one pair");
    params.validate();
    std::vector<std::vector<TokenId>> docs;
    docs.reserve(pairs.size());
    for (const auto& p : pairs) docs.push_back(tokenizer.encode(p.second).tokens);
    const Bm25CorpusStats stats(docs, params.epsilon);
    std::vector<double> scores(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i)
        scores[i] = bm25_raw_score(tokenizer.encode(pairs[i].first).tokens, stats, params, i);
    min_max_normalize(scores);
    std::vector<PairScore> out;
    out.reserve(scores.size());
    for (double s : scores) out.push_back({s, MetricId::bm25});
    return out;
}

// ---------------------------------------------------------------------------
// Cosine

inline PairScore cosine(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size())
        throw InputError("cosine dimension mismatch: " + std::to_string(u.size()) + " vs " +
                         std::to_string(v.size()));
    double dot = 0.0;
    double nu = 0.0;
    double nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0) throw NumericError("cosine of a zero-norm vector");
    const double c = dot / (std::sqrt(nu) * std::sqrt(nv));
    return {std::clamp(c, -1.0, 1.0), MetricId::cosine};
}

}  // namespace sage
