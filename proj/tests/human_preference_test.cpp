#include <sage/rng.hpp>
#include <sage/tasks/human_preference.hpp>

#include "support/fixture_subject.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

namespace sage {
namespace {

using testing_support::FixtureSubject;

TEST(Preference, StrictlyHigherWinsTiesGoToSecond) {
    EXPECT_EQ(predict_preference(0.9, 0.1), 0);
    EXPECT_EQ(predict_preference(0.1, 0.9), 1);
    EXPECT_EQ(predict_preference(0.5, 0.5), 1);
}

TEST(Classification, WorkedExample) {
    const std::vector<int> preds{0, 0, 1, 1}, truths{0, 1, 1, 1};
    const auto m = classification_metrics(preds, truths);
    EXPECT_DOUBLE_EQ(m.accuracy, 0.75);
    EXPECT_DOUBLE_EQ(m.precision, 0.5);
    EXPECT_DOUBLE_EQ(m.recall, 1.0);
    EXPECT_NEAR(m.f1, 2.0 / 3.0, 1e-12);
}

TEST(Classification, NoPositivePredictionsGivesZeroPrecision) {
    const std::vector<int> preds{1, 1}, truths{0, 1};
    const auto m = classification_metrics(preds, truths);
    EXPECT_EQ(m.precision, 0.0);
    EXPECT_EQ(m.recall, 0.0);
    EXPECT_EQ(m.f1, 0.0);
    EXPECT_DOUBLE_EQ(m.accuracy, 0.5);
    EXPECT_THROW(classification_metrics(std::vector<int>{0}, std::vector<int>{}), InputError);
}

TEST(Pearson, WorkedExample) {
    const std::vector<double> x{1, 2, 3, 4}, y{2, 1, 4, 3};
    EXPECT_NEAR(pearson(x, y), 0.6, 1e-12);
    EXPECT_NEAR(normalize_correlation(0.364), 0.682, 1e-12);
    EXPECT_THROW(pearson(x, std::vector<double>{3, 3, 3, 3}), DegenerateInputError);
}

// Raw-sums formula, written independently of the centered implementation.
double pearson_oracle(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

TEST(Pearson, MatchesOracleAndIsBounded) {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.below(30);
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = rng.uniform01();
            y[i] = static_cast<double>(1 + rng.below(7));
        }
        double r = 0;
        try {
            r = pearson(x, y);
        } catch (const DegenerateInputError&) {
            continue;
        }
        EXPECT_NEAR(r, pearson_oracle(x, y), 1e-9);
        EXPECT_LE(std::abs(r), 1.0);
        EXPECT_NEAR(pearson(y, x), r, 1e-12);
    }
}

TEST(Alignment, CategoryComposition) {
    // Comparison metrics and normalized correlations from published runs.
    const ClassificationMetrics large{0.714, 0.721, 0.702, 0.711};
    const std::map<std::string, double> large_scoring{
        {"overall", 0.694}, {"accuracy", 0.629}, {"coverage", 0.691}, {"coherence", 0.596}};
    EXPECT_NEAR(alignment_category(large, large_scoring), 0.68225, 1e-9);

    const ClassificationMetrics cohere{0.668, 0.668, 0.670, 0.669};
    const std::map<std::string, double> cohere_scoring{
        {"overall", 0.662}, {"accuracy", 0.599}, {"coverage", 0.662}, {"coherence", 0.587}};
    EXPECT_NEAR(alignment_category(cohere, cohere_scoring), 0.648125, 1e-9);

    EXPECT_THROW(alignment_category(large, {}), DatasetError);
}

struct AlignmentFixture {
    std::vector<ComparisonRecord> comparisons;
    std::vector<AxisEvalRecord> axis;
    std::map<std::string, double> hidden;  // summary -> score the fixture subject returns

    explicit AlignmentFixture(std::uint64_t seed) {
        Rng rng(seed);
        for (int i = 0; i < 40; ++i) {
            ComparisonRecord c;
            c.id = "c" + std::to_string(i);
            c.post = "post " + std::to_string(i);
            c.summary_a = "a" + std::to_string(i);
            c.summary_b = "b" + std::to_string(i);
            c.choice = static_cast<int>(rng.below(2));
            c.subset = i % 2 ? "tldr" : "cnndm";
            hidden[c.summary_a] = rng.uniform01();
            hidden[c.summary_b] = rng.uniform01();
            comparisons.push_back(c);
        }
        for (int i = 0; i < 30; ++i) {
            AxisEvalRecord e;
            e.id = "e" + std::to_string(i);
            e.text = "source " + std::to_string(i);
            e.summary = "s" + std::to_string(i);
            const int overall = 1 + static_cast<int>(rng.below(7));
            e.ratings = {{"overall", overall}, {"accuracy", 1 + static_cast<int>(rng.below(7))},
                         {"coverage", 1 + static_cast<int>(rng.below(7))}, {"coherence", 4}};
            hidden[e.summary] = overall / 7.0;
            axis.push_back(e);
        }
    }
};

TEST(Alignment, PipelineAgreesWithHandComputation) {
    AlignmentFixture fx(3);
    FixtureSubject subject([&](const std::string&, const std::string& c) { return fx.hidden.at(c); });
    const auto r = run_alignment(subject, fx.comparisons, fx.axis);

    std::vector<int> preds, truths;
    for (const auto& c : fx.comparisons) {
        preds.push_back(fx.hidden.at(c.summary_a) > fx.hidden.at(c.summary_b) ? 0 : 1);
        truths.push_back(c.choice);
    }
    const auto m = classification_metrics(preds, truths);
    EXPECT_DOUBLE_EQ(r.comparisons.accuracy, m.accuracy);
    EXPECT_DOUBLE_EQ(r.comparisons.f1, m.f1);

    // Similarity is a linear function of the overall rating; coherence is constant.
    EXPECT_NEAR(r.scoring.at("overall"), 1.0, 1e-12);
    EXPECT_EQ(r.scoring.count("coherence"), 0u);
    ASSERT_EQ(r.skipped_dimensions.size(), 1u);
    EXPECT_EQ(r.skipped_dimensions[0], "coherence");
    EXPECT_EQ(r.subset_sizes.at("tldr"), 20u);
    EXPECT_EQ(r.n_axis, 30u);
    EXPECT_NEAR(r.category_score, alignment_category(r.comparisons, r.scoring), 1e-12);
    EXPECT_GE(r.category_score, 0.0);
    EXPECT_LE(r.category_score, 1.0);
}

TEST(Alignment, ComparisonMetricsInvariantUnderMonotoneTransform) {
    AlignmentFixture fx(9);
    FixtureSubject plain([&](const std::string&, const std::string& c) { return fx.hidden.at(c); });
    FixtureSubject cubed([&](const std::string&, const std::string& c) { return std::pow(fx.hidden.at(c), 3); });
    const auto a = run_alignment(plain, fx.comparisons, fx.axis);
    const auto b = run_alignment(cubed, fx.comparisons, fx.axis);
    EXPECT_EQ(a.comparisons.accuracy, b.comparisons.accuracy);
    EXPECT_EQ(a.comparisons.precision, b.comparisons.precision);
    EXPECT_EQ(a.comparisons.recall, b.comparisons.recall);
}

TEST(Alignment, EmptyInputsAreDatasetErrors) {
    FixtureSubject s([](const std::string&, const std::string&) { return 0.5; });
    AlignmentFixture fx(1);
    EXPECT_THROW(run_alignment(s, {}, fx.axis), DatasetError);
    EXPECT_THROW(run_alignment(s, fx.comparisons, {}), DatasetError);
    // Constant similarity: every dimension is degenerate.
    EXPECT_THROW(run_alignment(s, fx.comparisons, fx.axis), DatasetError);
}

}  // namespace
}  // namespace sage
