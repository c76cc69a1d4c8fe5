#pragma once

// Transformation robustness: a document should stay closer to its
// meaning-preserving variants than to its summary, and closer to its summary
// than to its meaning-altering variants. All comparisons are strict.

#include <sage/datasets.hpp>
#include <sage/perturbation.hpp>
#include <sage/subject.hpp>

#include <algorithm>
#include <array>
#include <span>
#include <string>
#include <vector>

namespace sage {

struct RobustnessOutcome {
    bool summary_over_semantic = false;
    bool superficial_over_summary = false;
    bool superficial_over_semantic = false;
};

inline RobustnessOutcome evaluate_outcome(std::span<const double> superficial, double summary,
                                          std::span<const double> semantic) {
    if (superficial.empty() || semantic.empty()) throw InputError("evaluate_outcome: empty variant set");
    const double sup_min = *std::min_element(superficial.begin(), superficial.end());
    const double sem_max = *std::max_element(semantic.begin(), semantic.end());
    return {summary > sem_max, sup_min > summary, sup_min > sem_max};
}

/// Texts scored against the original: [summary, 3 superficial, 3 semantic].
inline std::array<std::string, 7> robustness_variants(const DocumentSummaryPair& pair, std::uint64_t seed,
                                                      const PerturbationContext& ctx) {
    std::array<std::string, 7> v;
    v[0] = pair.summary;
    std::size_t i = 1;
    for (auto kind : kSuperficialKinds) v[i++] = apply(seeded_for({kind}, seed, pair.id), pair.text, ctx);
    for (auto kind : kSemanticKinds) v[i++] = apply(seeded_for({kind}, seed, pair.id), pair.text, ctx);
    return v;
}

inline RobustnessOutcome outcome_from_scores(std::span<const double> s) {
    return evaluate_outcome(s.subspan(1, 3), s[0], s.subspan(4, 3));
}

inline RobustnessOutcome evaluate_pair(const Subject& subject, const DocumentSummaryPair& pair, std::uint64_t seed,
                                       const PerturbationContext& ctx) {
    const auto v = robustness_variants(pair, seed, ctx);
    return outcome_from_scores(subject.score_against(pair.text, v));
}

struct RobustnessDatasetResult {
    std::string name;
    std::size_t pairs = 0;
    double summary_over_semantic = 0;  // fractions of pairs
    double superficial_over_summary = 0;
    double superficial_over_semantic = 0;
    double all_three = 0;
    double score = 0;  // mean of the three fractions
};

struct RobustnessResult {
    std::vector<RobustnessDatasetResult> datasets;
    double category_score = 0;
};

/// Mean of the three per-condition fractions.
inline RobustnessDatasetResult score_outcomes(std::string name, std::span<const RobustnessOutcome> outcomes) {
    if (outcomes.empty()) throw DatasetError("robustness: dataset '" + name + "' is empty");
    RobustnessDatasetResult r;
    r.name = std::move(name);
    r.pairs = outcomes.size();
    for (const auto& o : outcomes) {
        r.summary_over_semantic += o.summary_over_semantic;
        r.superficial_over_summary += o.superficial_over_summary;
        r.superficial_over_semantic += o.superficial_over_semantic;
        r.all_three += o.summary_over_semantic && o.superficial_over_summary && o.superficial_over_semantic;
    }
    const double n = static_cast<double>(outcomes.size());
    r.summary_over_semantic /= n;
    r.superficial_over_summary /= n;
    r.superficial_over_semantic /= n;
    r.all_three /= n;
    r.score = (r.summary_over_semantic + r.superficial_over_summary + r.superficial_over_semantic) / 3.0;
    return r;
}

inline double mean_of(std::span<const double> xs) {
    if (xs.empty()) throw InputError("mean of an empty list");
    double s = 0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

struct NamedPairs {
    std::string name;
    std::vector<DocumentSummaryPair> pairs;
};

inline RobustnessResult run_robustness(const Subject& subject, const std::vector<NamedPairs>& datasets,
                                       std::uint64_t seed, const PerturbationContext& ctx, std::size_t jobs = 1) {
    if (datasets.empty()) throw DatasetError("robustness: no datasets");
    RobustnessResult result;
    std::vector<double> scores;
    for (const auto& ds : datasets) {
        std::vector<std::array<std::string, 7>> variants(ds.pairs.size());
        parallel_for(ds.pairs.size(), jobs,
                     [&](std::size_t i) { variants[i] = robustness_variants(ds.pairs[i], seed, ctx); });
        std::vector<ScoreGroup> groups;
        for (std::size_t i = 0; i < ds.pairs.size(); ++i)
            groups.push_back({ds.pairs[i].text, std::span<const std::string>(variants[i])});
        const auto sims = subject.score_groups(groups);
        std::vector<RobustnessOutcome> outcomes;
        for (const auto& s : sims) outcomes.push_back(outcome_from_scores(s));
        result.datasets.push_back(score_outcomes(ds.name, outcomes));
        scores.push_back(result.datasets.back().score);
    }
    result.category_score = mean_of(scores);
    return result;
}

}  // namespace sage
