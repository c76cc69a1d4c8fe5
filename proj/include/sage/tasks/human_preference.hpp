#pragma once

// Human preference alignment: pairwise preference prediction plus Pearson
// correlation of summary/source similarity with 1-7 human ratings.

#include <sage/datasets.hpp>
#include <sage/error.hpp>
#include <sage/subject.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace sage {

/// 0 when summary a scores strictly higher, otherwise 1 (ties go to b).
inline int predict_preference(double score_a, double score_b) noexcept { return score_a > score_b ? 0 : 1; }

struct ClassificationMetrics {
    double accuracy = 0;
    double precision = 0;
    double recall = 0;
    double f1 = 0;

    double mean() const noexcept { return (accuracy + precision + recall + f1) / 4.0; }
};

/// Positive class is choice 0 (the first summary preferred). Zero
/// denominators give 0.
inline ClassificationMetrics classification_metrics(std::span<const int> predictions, std::span<const int> truths) {
    if (predictions.size() != truths.size())
        throw InputError("classification_metrics: length mismatch");
    if (predictions.empty()) throw InputError("classification_metrics: no records");
    std::size_t tp = 0, fp = 0, fn = 0, correct = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const bool pred_pos = predictions[i] == 0;
        const bool true_pos = truths[i] == 0;
        correct += predictions[i] == truths[i];
        tp += pred_pos && true_pos;
        fp += pred_pos && !true_pos;
        fn += !pred_pos && true_pos;
    }
    ClassificationMetrics m;
    m.accuracy = static_cast<double>(correct) / static_cast<double>(predictions.size());
    m.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    m.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

/// Sample Pearson r. Throws DegenerateInputError when either side is constant.
inline double pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw InputError("pearson: length mismatch");
    if (xs.size() < 2) throw InputError("pearson: need at least 2 points");
    const double n = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw DegenerateInputError("pearson: zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline double normalize_correlation(double r) noexcept { return 0.5 * (r + 1.0); }

struct AlignmentResult {
    ClassificationMetrics comparisons;
    std::map<std::string, double> scoring;  // rating dimension -> normalized correlation
    std::vector<std::string> skipped_dimensions;
    std::map<std::string, std::size_t> subset_sizes;
    std::size_t n_comparisons = 0;
    std::size_t n_axis = 0;
    double category_score = 0;
};

/// Mean of the comparison metrics averaged with the mean normalized correlation.
inline double alignment_category(const ClassificationMetrics& comparisons, const std::map<std::string, double>& scoring) {
    if (scoring.empty()) throw DatasetError("human preference: no rating dimension could be correlated");
    double s = 0;
    for (const auto& [dim, v] : scoring) s += v;
    return 0.5 * (comparisons.mean() + s / static_cast<double>(scoring.size()));
}

inline AlignmentResult run_alignment(const Subject& subject, const std::vector<ComparisonRecord>& comparisons,
                                     const std::vector<AxisEvalRecord>& axis_evals) {
    if (comparisons.empty()) throw DatasetError("human preference: no comparison records");
    if (axis_evals.empty()) throw DatasetError("human preference: no axis-eval records");

    AlignmentResult r;
    r.n_comparisons = comparisons.size();
    r.n_axis = axis_evals.size();

    std::vector<std::array<std::string, 2>> candidates(comparisons.size());
    std::vector<ScoreGroup> groups;
    groups.reserve(comparisons.size());
    for (std::size_t i = 0; i < comparisons.size(); ++i) {
        candidates[i] = {comparisons[i].summary_a, comparisons[i].summary_b};
        groups.push_back({comparisons[i].post, std::span<const std::string>(candidates[i])});
        ++r.subset_sizes[comparisons[i].subset.empty() ? "all" : comparisons[i].subset];
    }
    const auto scores = subject.score_groups(groups);
    std::vector<int> preds, truths;
    for (std::size_t i = 0; i < comparisons.size(); ++i) {
        preds.push_back(predict_preference(scores[i][0], scores[i][1]));
        truths.push_back(comparisons[i].choice);
    }
    r.comparisons = classification_metrics(preds, truths);

    std::vector<TextPair> pairs;
    pairs.reserve(axis_evals.size());
    for (const auto& e : axis_evals) pairs.emplace_back(e.text, e.summary);
    const auto sims = subject.score_pairs(pairs);
    for (const char* dim : kRatingDimensions) {
        std::vector<double> ratings;
        for (const auto& e : axis_evals) ratings.push_back(e.ratings.at(dim));
        try {
            r.scoring[dim] = normalize_correlation(pearson(sims, ratings));
        } catch (const DegenerateInputError&) {
            r.skipped_dimensions.push_back(dim);
        }
    }
    r.category_score = alignment_category(r.comparisons, r.scoring);
    return r;
}

}  // namespace sage
