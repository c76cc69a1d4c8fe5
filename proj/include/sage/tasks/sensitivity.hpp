#pragma once

// Information sensitivity: observed similarity after needle insertion or
// token removal, compared with the target curve 1 - p/(1+p).

#include <sage/datasets.hpp>
#include <sage/perturbation.hpp>
#include <sage/subject.hpp>
#include <sage/tasks/robustness.hpp>

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace sage {

inline double theoretical_similarity(double p) {
    if (!(p >= 0.0)) throw InputError("theoretical_similarity: p must be >= 0");
    return 1.0 - p / (1.0 + p);
}

enum class SensitivityKind { insertion, removal };

inline std::string_view to_string(SensitivityKind k) noexcept {
    return k == SensitivityKind::insertion ? "insertion" : "removal";
}

struct SensitivityPoint {
    double proportion = 0;
    double position = 0;
    double observed = 0;
    double theoretical = 0;
};

/// 1 - MAE, with observed values clamped into [0, 1] first.
inline double sensitivity_score(std::span<const SensitivityPoint> grid) {
    if (grid.empty()) throw InputError("sensitivity_score: empty grid");
    double err = 0;
    for (const auto& p : grid) err += std::abs(std::clamp(p.observed, 0.0, 1.0) - p.theoretical);
    return 1.0 - err / static_cast<double>(grid.size());
}

struct GridSpec {
    SensitivityKind kind;
    double proportion;
    double position;
};

inline std::vector<GridSpec> sensitivity_grid(SensitivityKind kind) {
    std::vector<GridSpec> g;
    const auto& props = kind == SensitivityKind::insertion ? kInsertionProportions : kRemovalProportions;
    for (double p : props)
        for (double pos : kPositions) g.push_back({kind, p, pos});
    return g;
}

inline constexpr std::size_t kMinTokensForDeepRemoval = 20;
inline constexpr double kDeepRemoval = 0.9;

struct SensitivityDatasetResult {
    std::string name;
    std::size_t documents = 0;
    double insertion = 0;
    double removal = 0;
    std::size_t skipped_points = 0;  // deep-removal points dropped on short documents
};

struct SensitivityResult {
    std::vector<SensitivityDatasetResult> datasets;
    double insertion_mean = 0;
    double removal_mean = 0;
    double category_score = 0;
};

/// Mean of the per-kind means over datasets.
inline double sensitivity_category(std::span<const double> insertion_scores, std::span<const double> removal_scores) {
    return 0.5 * (mean_of(insertion_scores) + mean_of(removal_scores));
}

struct NamedTexts {
    std::string name;
    std::vector<std::string> texts;
};

/// Per-document sensitivity scores for one kind; every grid point is scored
/// as one batch across documents.
inline std::vector<double> document_sensitivity(const Subject& subject, const std::vector<std::string>& docs,
                                                SensitivityKind kind, const PerturbationContext& ctx,
                                                std::size_t jobs, std::size_t& skipped) {
    const auto grid = sensitivity_grid(kind);
    std::vector<std::size_t> lengths(docs.size());
    parallel_for(docs.size(), jobs, [&](std::size_t d) { lengths[d] = ctx.tokenizer.count(docs[d]); });

    std::vector<std::vector<SensitivityPoint>> per_doc(docs.size());
    for (const auto& g : grid) {
        std::vector<std::size_t> members;
        for (std::size_t d = 0; d < docs.size(); ++d) {
            if (kind == SensitivityKind::removal && g.proportion >= kDeepRemoval &&
                lengths[d] < kMinTokensForDeepRemoval) {
                ++skipped;
                continue;
            }
            members.push_back(d);
        }
        if (members.empty()) continue;
        std::vector<TextPair> pairs(members.size());
        const PerturbationSpec spec{kind == SensitivityKind::insertion ? PerturbationKind::needle_insert
                                                                       : PerturbationKind::token_remove,
                                    g.position, g.proportion, 0};
        parallel_for(members.size(), jobs, [&](std::size_t m) {
            pairs[m] = {docs[members[m]], apply(spec, docs[members[m]], ctx)};
        });
        const auto sims = subject.score_pairs(pairs);
        for (std::size_t m = 0; m < members.size(); ++m)
            per_doc[members[m]].push_back({g.proportion, g.position, sims[m], theoretical_similarity(g.proportion)});
    }
    std::vector<double> out;
    for (const auto& points : per_doc)
        if (!points.empty()) out.push_back(sensitivity_score(points));
    return out;
}

inline SensitivityResult run_sensitivity(const Subject& subject, const std::vector<NamedTexts>& datasets,
                                         const PerturbationContext& ctx, std::size_t jobs = 1) {
    if (datasets.empty()) throw DatasetError("sensitivity: no datasets");
    SensitivityResult result;
    std::vector<double> ins, rem;
    for (const auto& ds : datasets) {
        if (ds.texts.empty()) throw DatasetError("sensitivity: dataset '" + ds.name + "' is empty");
        SensitivityDatasetResult r;
        r.name = ds.name;
        r.documents = ds.texts.size();
        r.insertion = mean_of(document_sensitivity(subject, ds.texts, SensitivityKind::insertion, ctx, jobs,
                                                   r.skipped_points));
        r.removal = mean_of(document_sensitivity(subject, ds.texts, SensitivityKind::removal, ctx, jobs,
                                                 r.skipped_points));
        ins.push_back(r.insertion);
        rem.push_back(r.removal);
        result.datasets.push_back(std::move(r));
    }
    result.insertion_mean = mean_of(ins);
    result.removal_mean = mean_of(rem);
    result.category_score = sensitivity_category(ins, rem);
    return result;
}

}  // namespace sage
