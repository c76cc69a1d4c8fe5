#pragma once

// A subject is anything that scores text similarity: a classical metric or
// an embedding model compared by cosine. Tasks only see this interface.
//
// BM25 scores are normalized per batch. score_against treats `docs` as the
// batch; score_pairs treats the whole pair list as the batch. For other
// subjects both calls reduce to independent pair similarities.

#include <sage/embedding.hpp>
#include <sage/error.hpp>
#include <sage/metrics.hpp>
#include <sage/parallel.hpp>
#include <sage/tokenization.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <set>
#include <string_view>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sage {

using TextPair = std::pair<std::string, std::string>;

/// One query scored against its own batch of documents.
struct ScoreGroup {
    std::string query;
    std::span<const std::string> docs;
};

/// Symmetric n x n distances in [0, 1] with a zero diagonal.
class DistanceMatrix {
public:
    explicit DistanceMatrix(std::size_t n) : n_(n), d_(n * n, 0.0) {}

    std::size_t size() const noexcept { return n_; }
    double at(std::size_t i, std::size_t j) const { return d_[i * n_ + j]; }

    void set(std::size_t i, std::size_t j, double v) {
        v = std::clamp(v, 0.0, 1.0);
        d_[i * n_ + j] = v;
        d_[j * n_ + i] = v;
    }

    void validate() const {
        for (std::size_t i = 0; i < n_; ++i) {
            if (at(i, i) != 0.0) throw ValidationError("distance matrix diagonal is not zero");
            for (std::size_t j = 0; j < n_; ++j) {
                const double v = at(i, j);
                if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("distance outside [0, 1]");
                if (std::abs(v - at(j, i)) > 1e-9) throw ValidationError("distance matrix is not symmetric");
            }
        }
    }

private:
    std::size_t n_;
    std::vector<double> d_;
};

class Subject {
public:
    virtual ~Subject() = default;

    virtual std::string id() const = 0;
    virtual bool is_embedding() const { return false; }

    /// Similarity of each doc to `query`.
    virtual std::vector<double> score_against(const std::string& query, std::span<const std::string> docs) const = 0;

    /// Similarity of pair.first (reference) to pair.second, per pair.
    virtual std::vector<double> score_pairs(std::span<const TextPair> pairs) const = 0;

    /// Pairwise distances 1 - similarity.
    virtual DistanceMatrix distance_matrix(std::span<const std::string> texts) const = 0;

    /// score_against for many groups; each group is its own BM25 batch.
    virtual std::vector<std::vector<double>> score_groups(std::span<const ScoreGroup> groups) const {
        std::vector<std::vector<double>> out(groups.size());
        for (std::size_t g = 0; g < groups.size(); ++g) out[g] = score_against(groups[g].query, groups[g].docs);
        return out;
    }

    double score(const std::string& reference, const std::string& candidate) const {
        const TextPair p{reference, candidate};
        return score_pairs(std::span(&p, 1)).front();
    }
};

// ---------------------------------------------------------------------------

class MetricSubject : public Subject {
public:
    MetricSubject(MetricId metric, std::shared_ptr<const Tokenizer> tokenizer, Bm25Params bm25 = {},
                  std::size_t jobs = 1)
        : metric_(metric), tokenizer_(std::move(tokenizer)), bm25_(bm25), jobs_(jobs) {
        if (metric == MetricId::cosine) throw ConfigError("subjects: cosine needs an embedding model");
        if (!tokenizer_) throw ConfigError("subjects: metric " + std::string(to_string(metric)) + " needs a tokenizer");
        bm25_.validate();
    }

    std::string id() const override { return std::string(to_string(metric_)); }
    MetricId metric() const noexcept { return metric_; }

    std::vector<double> score_against(const std::string& query, std::span<const std::string> docs) const override {
        if (metric_ == MetricId::bm25) return values(bm25_batch(query, docs, bm25_, *tokenizer_));
        std::vector<double> out(docs.size());
        for (std::size_t i = 0; i < docs.size(); ++i) out[i] = pair_value(query, docs[i]);
        return out;
    }

    std::vector<std::vector<double>> score_groups(std::span<const ScoreGroup> groups) const override {
        std::vector<std::vector<double>> out(groups.size());
        parallel_for(groups.size(), jobs_,
                     [&](std::size_t g) { out[g] = score_against(groups[g].query, groups[g].docs); });
        return out;
    }

    std::vector<double> score_pairs(std::span<const TextPair> pairs) const override {
        if (metric_ == MetricId::bm25) return values(bm25_pairs(pairs, bm25_, *tokenizer_));
        std::vector<double> out(pairs.size());
        parallel_for(pairs.size(), jobs_, [&](std::size_t i) { out[i] = pair_value(pairs[i].first, pairs[i].second); });
        return out;
    }

    DistanceMatrix distance_matrix(std::span<const std::string> texts) const override {
        const std::size_t n = texts.size();
        DistanceMatrix dm(n);
        if (metric_ == MetricId::bm25) {
            // Row i queries with text i; asymmetric, so average with the transpose.
            std::vector<std::vector<double>> rows(n);
            parallel_for(n, jobs_, [&](std::size_t i) { rows[i] = score_against(texts[i], texts); });
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j) dm.set(i, j, 1.0 - 0.5 * (rows[i][j] + rows[j][i]));
            return dm;
        }
        std::vector<std::vector<double>> upper(n);
        parallel_for(n, jobs_, [&](std::size_t i) {
            upper[i].resize(n, 0.0);
            for (std::size_t j = i + 1; j < n; ++j) upper[i][j] = 1.0 - pair_value(texts[i], texts[j]);
        });
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) dm.set(i, j, upper[i][j]);
        return dm;
    }

private:
    static std::vector<double> values(const std::vector<PairScore>& scores) {
        std::vector<double> v;
        v.reserve(scores.size());
        for (const auto& s : scores) v.push_back(s.value);
        return v;
    }

    double pair_value(const std::string& reference, const std::string& candidate) const {
        switch (metric_) {
            case MetricId::levenshtein: return levenshtein_ratio(reference, candidate).value;
            case MetricId::rouge: return rouge_avg_f(candidate, reference, *tokenizer_).value;
            case MetricId::jaccard: return jaccard(reference, candidate, *tokenizer_).value;
            default: break;
        }
        throw InputError("pair_value: unsupported metric");
    }

    MetricId metric_;
    std::shared_ptr<const Tokenizer> tokenizer_;
    Bm25Params bm25_;
    std::size_t jobs_;
};

// ---------------------------------------------------------------------------

class EmbeddingSubject : public Subject {
public:
    explicit EmbeddingSubject(std::shared_ptr<EmbeddingClient> client) : client_(std::move(client)) {
        if (!client_) throw ConfigError("subjects: missing embedding client");
    }

    std::string id() const override { return client_->config().subject_name(); }
    bool is_embedding() const override { return true; }
    EmbeddingClient& client() const noexcept { return *client_; }

    std::vector<double> score_against(const std::string& query, std::span<const std::string> docs) const override {
        std::vector<std::string> texts(docs.begin(), docs.end());
        texts.push_back(query);
        const auto vecs = embed_unique(texts);
        const auto& q = vecs.at(query);
        std::vector<double> out;
        out.reserve(docs.size());
        for (const auto& d : docs) out.push_back(cosine(q, vecs.at(d)).value);
        return out;
    }

    std::vector<double> score_pairs(std::span<const TextPair> pairs) const override {
        std::vector<std::string> texts;
        texts.reserve(pairs.size() * 2);
        for (const auto& p : pairs) {
            texts.push_back(p.first);
            texts.push_back(p.second);
        }
        const auto vecs = embed_unique(texts);
        std::vector<double> out;
        out.reserve(pairs.size());
        for (const auto& p : pairs) out.push_back(cosine(vecs.at(p.first), vecs.at(p.second)).value);
        return out;
    }

    std::vector<std::vector<double>> score_groups(std::span<const ScoreGroup> groups) const override {
        std::set<std::string_view> unique;
        for (const auto& g : groups) {
            unique.insert(g.query);
            unique.insert(g.docs.begin(), g.docs.end());
        }
        std::vector<std::string> texts(unique.begin(), unique.end());
        const auto vecs = embed_unique(texts);
        std::vector<std::vector<double>> out(groups.size());
        for (std::size_t g = 0; g < groups.size(); ++g) {
            const auto& q = vecs.at(groups[g].query);
            for (const auto& d : groups[g].docs) out[g].push_back(cosine(q, vecs.at(d)).value);
        }
        return out;
    }

    DistanceMatrix distance_matrix(std::span<const std::string> texts) const override {
        std::vector<std::string> all(texts.begin(), texts.end());
        const auto vecs = embed_unique(all);
        std::vector<std::vector<double>> unit;
        unit.reserve(texts.size());
        for (const auto& t : texts) {
            auto v = vecs.at(t);
            double norm = 0;
            for (double x : v) norm += x * x;
            norm = std::sqrt(norm);
            if (norm == 0.0) throw NumericError("zero-norm embedding");
            for (double& x : v) x /= norm;
            unit.push_back(std::move(v));
        }
        DistanceMatrix dm(texts.size());
        for (std::size_t i = 0; i < texts.size(); ++i)
            for (std::size_t j = i + 1; j < texts.size(); ++j) {
                double dot = 0;
                for (std::size_t k = 0; k < unit[i].size(); ++k) dot += unit[i][k] * unit[j][k];
                dm.set(i, j, 1.0 - dot);
            }
        return dm;
    }

private:
    std::map<std::string, std::vector<double>> embed_unique(std::vector<std::string>& texts) const {
        std::sort(texts.begin(), texts.end());
        texts.erase(std::unique(texts.begin(), texts.end()), texts.end());
        auto vecs = client_->embed_batch(texts);
        std::map<std::string, std::vector<double>> out;
        for (std::size_t i = 0; i < texts.size(); ++i) out.emplace(texts[i], std::move(vecs[i].values));
        return out;
    }

    std::shared_ptr<EmbeddingClient> client_;
};

}  // namespace sage
