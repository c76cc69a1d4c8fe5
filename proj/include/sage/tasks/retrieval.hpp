#pragma once

// Retrieval under perturbation: NDCG@10 on the clean corpus versus NDCG@10
// on one corpus per perturbation type, aggregated by harmonic mean of the
// retention ratios.

#include <sage/datasets.hpp>
#include <sage/parallel.hpp>
#include <sage/perturbation.hpp>
#include <sage/subject.hpp>
#include <sage/tasks/robustness.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sage {

inline constexpr std::size_t kNdcgDepth = 10;

enum class Gain { linear, exponential };

inline Gain parse_gain(std::string_view s) {
    if (s == "linear") return Gain::linear;
    if (s == "exponential") return Gain::exponential;
    throw ConfigError("retrieval.gain: expected 'linear' or 'exponential', got '" + std::string(s) + "'");
}

using ScoredDoc = std::pair<std::string, double>;

/// Descending score, ascending id on ties.
inline std::vector<std::string> retrieve_topk(std::vector<ScoredDoc> scored, std::size_t k = kNdcgDepth) {
    if (scored.empty()) throw InputError("retrieve_topk: no documents");
    auto better = [](const ScoredDoc& a, const ScoredDoc& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    };
    k = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(), better);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back(std::move(scored[i].first));
    return out;
}

inline double gain_of(int rel, Gain g) {
    return g == Gain::linear ? static_cast<double>(rel) : std::exp2(static_cast<double>(rel)) - 1.0;
}

/// `rels` must contain at least one positive relevance.
inline double ndcg_at_k(std::span<const std::string> ranking, const std::map<std::string, int>& rels,
                        std::size_t k = kNdcgDepth, Gain gain = Gain::linear) {
    double dcg = 0;
    for (std::size_t i = 0; i < std::min(k, ranking.size()); ++i) {
        const auto it = rels.find(ranking[i]);
        if (it != rels.end() && it->second > 0) dcg += gain_of(it->second, gain) / std::log2(static_cast<double>(i) + 2.0);
    }
    std::vector<int> ideal;
    for (const auto& [id, r] : rels)
        if (r > 0) ideal.push_back(r);
    if (ideal.empty()) throw InputError("ndcg_at_k: query has no relevant documents");
    std::sort(ideal.rbegin(), ideal.rend());
    double idcg = 0;
    for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i)
        idcg += gain_of(ideal[i], gain) / std::log2(static_cast<double>(i) + 2.0);
    return dcg / idcg;
}

/// Zero anywhere gives 0.
inline double harmonic_mean(std::span<const double> xs) {
    if (xs.empty()) throw InputError("harmonic_mean: empty input");
    double inv = 0;
    for (double x : xs) {
        if (x < 0) throw InputError("harmonic_mean: negative ratio");
        if (x == 0) return 0.0;
        inv += 1.0 / x;
    }
    return static_cast<double>(xs.size()) / inv;
}

/// Title and body as one retrievable string.
inline std::string document_string(const CorpusDoc& d) {
    if (d.title.empty()) return d.text;
    if (d.text.empty()) return d.title;
    return d.title + " " + d.text;
}

/// Replaces every body with its perturbed version; titles, ids and empty
/// bodies are left alone.
inline std::map<std::string, CorpusDoc> build_perturbed_corpus(const std::map<std::string, CorpusDoc>& corpus,
                                                               const PerturbationSpec& spec, std::uint64_t seed,
                                                               const PerturbationContext& ctx, std::size_t jobs = 1) {
    std::vector<std::pair<std::string, CorpusDoc>> items(corpus.begin(), corpus.end());
    parallel_for(items.size(), jobs, [&](std::size_t i) {
        auto& doc = items[i].second;
        if (!doc.text.empty()) doc.text = apply(seeded_for(spec, seed, items[i].first), doc.text, ctx);
    });
    return {std::make_move_iterator(items.begin()), std::make_move_iterator(items.end())};
}

/// Queries with at least one positive judgement, in id order.
inline std::vector<std::string> judged_queries(const RetrievalDataset& ds) {
    std::vector<std::string> out;
    for (const auto& [qid, docs] : ds.qrels) {
        if (!ds.queries.count(qid)) continue;
        if (std::any_of(docs.begin(), docs.end(), [](const auto& d) { return d.second > 0; })) out.push_back(qid);
    }
    return out;
}

/// Mean NDCG@k of `queries` against the given corpus.
inline double mean_ndcg(const Subject& subject, const RetrievalDataset& ds,
                        const std::map<std::string, CorpusDoc>& corpus, const std::vector<std::string>& queries,
                        Gain gain = Gain::linear, std::size_t k = kNdcgDepth) {
    if (queries.empty()) throw DatasetError("retrieval: no query has a relevant document");
    std::vector<std::string> ids, texts;
    for (const auto& [id, doc] : corpus) {
        ids.push_back(id);
        texts.push_back(document_string(doc));
    }
    std::vector<ScoreGroup> groups;
    for (const auto& q : queries) groups.push_back({ds.queries.at(q), std::span<const std::string>(texts)});
    const auto scores = subject.score_groups(groups);
    double total = 0;
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
        std::vector<ScoredDoc> scored;
        for (std::size_t d = 0; d < ids.size(); ++d) scored.emplace_back(ids[d], scores[qi][d]);
        const auto ranking = retrieve_topk(std::move(scored), k);
        total += ndcg_at_k(ranking, ds.qrels.at(queries[qi]), k, gain);
    }
    return total / static_cast<double>(queries.size());
}

struct RetrievalRun {
    std::string label;
    double ndcg = 0;
    double retention = 0;
};

struct RetrievalDatasetResult {
    std::string name;
    std::size_t queries = 0;
    std::size_t excluded_queries = 0;
    double baseline = 0;
    std::vector<RetrievalRun> runs;
    double score = 0;  // harmonic mean of retentions
};

struct RetrievalResult {
    std::vector<RetrievalDatasetResult> datasets;
    std::vector<std::string> skipped;  // "name: reason"
    double category_score = 0;
};

struct NamedRetrieval {
    std::string name;
    RetrievalDataset data;
};

struct RetrievalOptions {
    std::vector<PerturbationSpec> specs = retrieval_perturbations();
    Gain gain = Gain::linear;
    std::size_t jobs = 1;
};

inline RetrievalDatasetResult run_retrieval_dataset(const Subject& subject, const NamedRetrieval& ds,
                                                    std::uint64_t seed, const PerturbationContext& ctx,
                                                    const RetrievalOptions& opts) {
    if (opts.specs.empty()) throw ConfigError("retrieval.perturbations: list is empty");
    RetrievalDatasetResult r;
    r.name = ds.name;
    const auto queries = judged_queries(ds.data);
    r.queries = queries.size();
    r.excluded_queries = ds.data.queries.size() - queries.size();
    r.baseline = mean_ndcg(subject, ds.data, ds.data.corpus, queries, opts.gain);
    if (r.baseline <= 0) throw DatasetError("retrieval: baseline NDCG@10 is zero for '" + ds.name + "'");

    r.runs.resize(opts.specs.size());
    parallel_for(opts.specs.size(), opts.jobs, [&](std::size_t i) {
        const auto corpus = build_perturbed_corpus(ds.data.corpus, opts.specs[i], seed, ctx);
        const double ndcg = mean_ndcg(subject, ds.data, corpus, queries, opts.gain);
        r.runs[i] = {opts.specs[i].label(), ndcg, ndcg / r.baseline};
    });
    std::vector<double> retention;
    for (const auto& run : r.runs) retention.push_back(run.retention);
    r.score = harmonic_mean(retention);
    return r;
}

/// Datasets with no usable baseline are skipped and listed; the category is
/// the mean over the rest.
inline RetrievalResult run_retrieval(const Subject& subject, const std::vector<NamedRetrieval>& datasets,
                                     std::uint64_t seed, const PerturbationContext& ctx,
                                     const RetrievalOptions& opts = {}) {
    if (datasets.empty()) throw DatasetError("retrieval: no datasets");
    RetrievalResult result;
    std::vector<double> scores;
    for (const auto& ds : datasets) {
        try {
            result.datasets.push_back(run_retrieval_dataset(subject, ds, seed, ctx, opts));
            scores.push_back(result.datasets.back().score);
        } catch (const DatasetError& e) {
            result.skipped.push_back(ds.name + ": " + e.what());
        }
    }
    if (scores.empty()) throw DatasetError("retrieval: every dataset was skipped");
    result.category_score = mean_of(scores);
    return result;
}

}  // namespace sage
