#include <sage/tasks/retrieval.hpp>

#include "support/fixture_subject.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace sage {
namespace {

TEST(TopK, OrderAndTies) {
    EXPECT_EQ(retrieve_topk({{"d1", 0.9}, {"d2", 0.1}}, 1), (std::vector<std::string>{"d1"}));
    EXPECT_EQ(retrieve_topk({{"b", 0.5}, {"a", 0.5}, {"c", 0.7}}, 10), (std::vector<std::string>{"c", "a", "b"}));
    EXPECT_THROW(retrieve_topk({}, 3), InputError);
}

TEST(Ndcg, HandExamples) {
    const std::map<std::string, int> rel{{"x", 1}};
    const std::vector<std::string> first{"x", "y"}, second{"y", "x"};
    EXPECT_DOUBLE_EQ(ndcg_at_k(first, rel), 1.0);
    EXPECT_NEAR(ndcg_at_k(second, rel), 1.0 / std::log2(3.0), 1e-12);
    EXPECT_NEAR(ndcg_at_k(second, rel), 0.6309, 1e-4);
    std::vector<std::string> eleven;
    for (int i = 0; i < 10; ++i) eleven.push_back("n" + std::to_string(i));
    eleven.push_back("x");
    EXPECT_EQ(ndcg_at_k(eleven, rel), 0.0);
    EXPECT_THROW(ndcg_at_k(first, std::map<std::string, int>{{"x", 0}}), InputError);
}

using oracle::dcg;
double dcg_oracle(const std::vector<int>& order, bool expo) { return dcg(order, expo); }

TEST(Ndcg, BruteForceOverAllRankings) {
    Rng rng(4);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t n = 1 + rng.below(6);
        std::map<std::string, int> rels;
        std::vector<std::string> ids;
        for (std::size_t i = 0; i < n; ++i) {
            ids.push_back("d" + std::to_string(i));
            rels[ids.back()] = static_cast<int>(rng.below(4));
        }
        rels["d0"] = std::max(rels["d0"], 1);
        for (bool expo : {false, true}) {
            std::vector<std::size_t> perm(n);
            std::iota(perm.begin(), perm.end(), 0);
            double best_dcg = 0, best_ndcg = 0;
            do {
                std::vector<std::string> ranking;
                std::vector<int> order;
                for (auto p : perm) {
                    ranking.push_back(ids[p]);
                    order.push_back(rels[ids[p]]);
                }
                best_dcg = std::max(best_dcg, dcg_oracle(order, expo));
                const double v = ndcg_at_k(ranking, rels, 10, expo ? Gain::exponential : Gain::linear);
                EXPECT_GE(v, 0.0);
                EXPECT_LE(v, 1.0 + 1e-12);
                best_ndcg = std::max(best_ndcg, v);
                // Stash DCG to compare once the ideal is known.
            } while (std::next_permutation(perm.begin(), perm.end()));
            EXPECT_NEAR(best_ndcg, 1.0, 1e-12);
            // Spot-check the identity ranking against the oracle.
            std::vector<int> order;
            for (const auto& id : ids) order.push_back(rels[id]);
            EXPECT_NEAR(ndcg_at_k(ids, rels, 10, expo ? Gain::exponential : Gain::linear),
                        dcg_oracle(order, expo) / best_dcg, 1e-12);
        }
    }
}

TEST(Ndcg, GainsCoincideForBinaryRelevance) {
    const std::map<std::string, int> rel{{"a", 1}, {"c", 1}};
    const std::vector<std::string> ranking{"b", "c", "d", "a"};
    EXPECT_DOUBLE_EQ(ndcg_at_k(ranking, rel, 10, Gain::linear), ndcg_at_k(ranking, rel, 10, Gain::exponential));
    const std::map<std::string, int> graded{{"a", 3}, {"c", 1}};
    EXPECT_NE(ndcg_at_k(ranking, graded, 10, Gain::linear), ndcg_at_k(ranking, graded, 10, Gain::exponential));
}

TEST(HarmonicMean, Examples) {
    EXPECT_DOUBLE_EQ(harmonic_mean(std::vector<double>{1, 1, 1}), 1.0);
    EXPECT_NEAR(harmonic_mean(std::vector<double>{0.5, 1.0}), 2.0 / 3.0, 1e-12);
    EXPECT_EQ(harmonic_mean(std::vector<double>{0.5, 0.0}), 0.0);
    EXPECT_THROW(harmonic_mean(std::vector<double>{}), InputError);
    Rng rng(2);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> xs(1 + rng.below(20));
        for (double& x : xs) x = rng.uniform01() * 2;
        EXPECT_LE(harmonic_mean(xs), mean_of(xs) + 1e-12);
    }
}

RetrievalDataset tiny_dataset() {
    RetrievalDataset ds;
    ds.corpus = {
        {"d1", {"Solar", "Solar panels convert sunlight into electricity for homes."}},
        {"d2", {"Wind", "Wind turbines can not run when the air is still."}},
        {"d3", {"Coffee", "Coffee beans are roasted before they are ground."}},
        {"d4", {"Tea", "Green tea is made from leaves that are not oxidized."}},
        {"d5", {"", "Batteries store electricity from solar panels and wind turbines."}},
    };
    ds.queries = {{"q1", "solar electricity"}, {"q2", "how are coffee beans roasted"}, {"q3", "wind turbines"},
                  {"q4", "unjudged query"}};
    ds.qrels = {{"q1", {{"d1", 1}, {"d5", 1}}}, {"q2", {{"d3", 2}, {"d4", 0}}}, {"q3", {{"d2", 1}}},
                {"q4", {{"d4", 0}}}};
    ds.validate();
    return ds;
}

class RetrievalPipeline : public ::testing::Test {
protected:
    std::shared_ptr<const Tokenizer> tok = std::make_shared<FallbackTokenizer>();
    NeedleSource needle;
    PerturbationContext ctx{*tok, needle};
};

TEST_F(RetrievalPipeline, PerturbedCorpusKeepsIdsAndTitles) {
    const auto ds = tiny_dataset();
    const PerturbationSpec front{PerturbationKind::needle_insert, 0.0, 0.5, 0};
    const auto out = build_perturbed_corpus(ds.corpus, front, 1, ctx);
    ASSERT_EQ(out.size(), ds.corpus.size());
    for (const auto& [id, doc] : ds.corpus) {
        ASSERT_TRUE(out.count(id));
        EXPECT_EQ(out.at(id).title, doc.title);
        // Needle prefix: the original body survives as a suffix.
        const auto& t = out.at(id).text;
        EXPECT_EQ(t.substr(t.size() - doc.text.size()), doc.text);
        EXPECT_EQ(t.rfind(needle.text().substr(0, 5), 0), 0u);
    }
    const PerturbationSpec identity{PerturbationKind::token_remove, 0.5, 1e-6, 0};
    const auto same = build_perturbed_corpus(ds.corpus, identity, 1, ctx);
    for (const auto& [id, doc] : ds.corpus) EXPECT_EQ(same.at(id).text, doc.text);

    auto with_empty = ds.corpus;
    with_empty["d6"] = {"Empty", ""};
    EXPECT_EQ(build_perturbed_corpus(with_empty, front, 1, ctx).at("d6").text, "");
}

TEST_F(RetrievalPipeline, QueriesWithoutJudgementsAreExcluded) {
    const auto ds = tiny_dataset();
    EXPECT_EQ(judged_queries(ds), (std::vector<std::string>{"q1", "q2", "q3"}));
    MetricSubject jac(MetricId::jaccard, tok);
    const auto r = run_retrieval_dataset(jac, {"tiny", ds}, 42, ctx, {});
    EXPECT_EQ(r.queries, 3u);
    EXPECT_EQ(r.excluded_queries, 1u);
    EXPECT_EQ(r.runs.size(), 18u);
    for (const auto& run : r.runs) EXPECT_GE(run.retention, 0.0);
}

TEST_F(RetrievalPipeline, TitleKeyedScorerRetainsEverything) {
    const auto ds = tiny_dataset();
    // Scores depend only on the title, which perturbations never touch.
    testing_support::FixtureSubject by_title([](const std::string& q, const std::string& d) {
        static const std::map<std::string, std::map<std::string, double>> table{
            {"solar electricity", {{"Solar", 0.9}}},
            {"how are coffee beans roasted", {{"Coffee", 0.9}}},
            {"wind turbines", {{"Wind", 0.9}}}};
        const auto title = d.substr(0, d.find(' '));
        const auto& row = table.at(q);
        const auto it = row.find(title);
        return it == row.end() ? 0.1 : it->second;
    });
    const auto r = run_retrieval(by_title, {{"tiny", ds}}, 42, ctx, {retrieval_perturbations(), Gain::linear, 2});
    for (const auto& run : r.datasets[0].runs) EXPECT_DOUBLE_EQ(run.retention, 1.0) << run.label;
    EXPECT_DOUBLE_EQ(r.category_score, 1.0);
}

TEST_F(RetrievalPipeline, JaccardMatchesBruteForceOracle) {
    const auto ds = tiny_dataset();
    MetricSubject jac(MetricId::jaccard, tok, {}, 2);
    for (std::uint64_t seed : {1u, 42u}) {
        const auto r = run_retrieval(jac, {{"tiny", ds}}, seed, ctx, {retrieval_perturbations(), Gain::linear, 3});
        EXPECT_NEAR(r.category_score, oracle::retrieval_pipeline(ds, ctx, seed, retrieval_perturbations(),
                                                  [&](const std::string& q, const std::string& d) {
                                                      return jaccard(q, d, *tok).value;
                                                  }), 1e-12) << seed;
    }
}

TEST_F(RetrievalPipeline, ZeroBaselineSkipsDataset) {
    auto ds = tiny_dataset();
    testing_support::FixtureSubject anti([](const std::string&, const std::string& d) {
        // Judged documents always score lowest.
        return d.rfind("Solar", 0) == 0 || d.rfind("Coffee", 0) == 0 || d.rfind("Wind", 0) == 0 ||
                       d.rfind("Batteries", 0) == 0
                   ? 0.0
                   : 1.0;
    });
    // Pad with unjudged documents so judged ones fall out of the top 10.
    for (int i = 0; i < 12; ++i) ds.corpus["pad" + std::to_string(i)] = {"Pad", "filler"};
    EXPECT_THROW(run_retrieval(anti, {{"bad", ds}}, 1, ctx), DatasetError);
    MetricSubject jac(MetricId::jaccard, tok);
    const auto r = run_retrieval(jac, {{"good", tiny_dataset()}}, 1, ctx);
    EXPECT_TRUE(r.skipped.empty());
    EXPECT_THROW(run_retrieval_dataset(anti, {"bad", ds}, 1, ctx, {}), DatasetError);
}

}  // namespace
}  // namespace sage
