// Acceptance checks: one PASS/FAIL line per criterion.
//
//   acceptance [--expect-fail N]...
//
// Exits 0 when the failing criteria are exactly the expected ones, so a known
// failure still prints FAIL without breaking ctest. A criterion that is
// expected to fail but passes also makes the run exit 1.

#include <sage/sage.hpp>

#include "support/oracles.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace sage;

const fs::path kFixtures = SAGE_FIXTURES_DIR;
const std::string kCli = SAGE_CLI_PATH;

// Collects sub-check outcomes for one criterion.
struct Check {
    bool ok = true;
    std::vector<std::string> notes;

    void expect(bool cond, const std::string& what) {
        notes.push_back(std::string(cond ? "ok   " : "FAIL ") + what);
        ok = ok && cond;
    }
    void near(double got, double want, double tol, const std::string& what) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s: %.6f (want %.6f +/- %g)", what.c_str(), got, want, tol);
        expect(std::abs(got - want) <= tol, buf);
    }
};

std::map<std::string, double> five(double hp, double rob, double sens, double clu, double ret) {
    return {{"human_preference", hp}, {"robustness", rob}, {"sensitivity", sens}, {"clustering", clu},
            {"retrieval", ret}};
}

double mean(std::vector<double> xs) { return mean_of(xs); }

Check criterion1() {
    Check c;
    c.near(aggregate(five(0.682, 0.243, 0.794, 0.443, 0.457)), 0.524, 5e-4, "text-embedding-3-large");
    c.near(aggregate(five(0.577, 0.163, 0.905, 0.191, 0.280)), 0.423, 5e-4, "Jaccard");
    return c;
}

Check criterion2() {
    Check c;
    c.near(alignment_category({0.714, 0.721, 0.702, 0.711},
                              {{"overall", 0.694}, {"accuracy", 0.629}, {"coverage", 0.691}, {"coherence", 0.596}}),
           0.682, 5e-4, "human preference, text-embedding-3-large");
    c.near(alignment_category({0.668, 0.668, 0.670, 0.669},
                              {{"overall", 0.662}, {"accuracy", 0.599}, {"coverage", 0.662}, {"coherence", 0.587}}),
           0.648, 5e-4, "human preference, embed-v4.0");
    c.near(sensitivity_category(std::vector<double>{0.974, 0.972, 0.941, 0.964, 0.963, 0.947},
                                std::vector<double>{0.829, 0.835, 0.872, 0.849, 0.864, 0.852}),
           0.905, 5e-4, "sensitivity, Jaccard");
    c.near(sensitivity_category(std::vector<double>{0.809, 0.782, 0.765, 0.739, 0.751, 0.753},
                                std::vector<double>{0.878, 0.852, 0.783, 0.802, 0.794, 0.821}),
           0.794, 5e-4, "sensitivity, text-embedding-3-small");
    c.near(mean({0.335, 0.333, 0.331}), 0.333, 5e-4, "robustness, Levenshtein");
    c.near(mean({0.327, 0.333, 0.298}), 0.319, 5e-4, "robustness, gemini-embedding-001");
    return c;
}

std::string distinct_words(std::size_t n, char prefix) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) {
        if (i) s += ' ';
        s += prefix;
        s += static_cast<char>('a' + i / 26);
        s += static_cast<char>('a' + i % 26);
    }
    return s;
}

void metric_oracles(Check& c, const std::shared_ptr<const Tokenizer>& tok) {
    Rng rng(derive_seed(kDefaultSeed, "acceptance", "levenshtein"));
    const auto strings = oracle::all_strings("abc", 8);
    double worst = 0;
    for (int i = 0; i < 10000; ++i) {
        const auto& a = strings[rng.below(strings.size())];
        const auto& b = strings[rng.below(strings.size())];
        worst = std::max(worst, std::abs(levenshtein_ratio(a, b).value - oracle::ratio(a, b)));
    }
    for (std::size_t i = 0; i < 40; ++i)  // every pair up to length 3
        for (std::size_t j = 0; j < 40; ++j)
            worst = std::max(worst, std::abs(levenshtein_ratio(strings[i], strings[j]).value -
                                             oracle::ratio(strings[i], strings[j])));
    c.near(worst, 0.0, 1e-12, "levenshtein_ratio vs DP oracle, max error over 10^4 sampled pairs");

    const std::vector<std::string> vocab{"the", "cat", "sat", "on", "mat", "a", "dog", "ran", "far", "home", "red",
                                         "blue", "sky", "sea"};
    double wj = 0, wr = 0;
    for (int i = 0; i < 100; ++i) {
        const auto a = oracle::random_word_text(rng, 1 + rng.below(12), vocab);
        const auto b = oracle::random_word_text(rng, 1 + rng.below(12), vocab);
        wj = std::max(wj, std::abs(jaccard(a, b, *tok).value - oracle::jaccard(a, b)));
        wr = std::max(wr, std::abs(rouge_avg_f(a, b, *tok).value - oracle::rouge_avg_f(a, b)));
    }
    c.near(wj, 0.0, 1e-12, "jaccard vs hand count, 100 texts");
    c.near(wr, 0.0, 1e-12, "rouge vs hand count, 100 texts");
}

void sensitivity_fixture(Check& c, const std::shared_ptr<const Tokenizer>& tok) {
    const NeedleSource needle{distinct_words(400, 'q')};
    const PerturbationContext ctx{*tok, needle};
    MetricSubject jac(MetricId::jaccard, tok);
    std::vector<std::string> docs;
    for (std::size_t n : {60, 100, 150, 200, 300}) docs.push_back(distinct_words(n, 'z'));
    std::size_t skipped = 0;
    const auto scores = document_sensitivity(jac, docs, SensitivityKind::insertion, ctx, 1, skipped);
    for (std::size_t i = 0; i < scores.size(); ++i)
        c.near(scores[i], 1.0, 0.02, "Jaccard insertion score, " + std::to_string(tok->count(docs[i])) + " tokens");
}

void clustering_oracles(Check& c) {
    Rng rng(derive_seed(kDefaultSeed, "acceptance", "clustering"));
    double worst = 0;
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 1 + rng.below(12);
        std::vector<int> pred(n), truth(n);
        const int kp = 1 + static_cast<int>(rng.below(5)), kt = 1 + static_cast<int>(rng.below(5));
        for (std::size_t i = 0; i < n; ++i) {
            pred[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(kp)));
            truth[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(kt)));
        }
        worst = std::max(worst, std::abs(v_measure(pred, truth).v - oracle::v_measure(pred, truth)));
    }
    c.near(worst, 0.0, 1e-9, "V-measure vs entropy oracle, 200 labelings");

    int recovered = 0, optimal = 0, trials = 0;
    for (std::size_t n = 2; n <= 8; ++n)
        for (int t = 0; t < 20; ++t, ++trials) {
            std::vector<int> block(n);
            for (auto& b : block) b = static_cast<int>(rng.below(2));
            block[0] = 0;
            block[n - 1] = 1;
            DistanceMatrix dm(n);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j)
                    dm.set(i, j, block[i] == block[j] ? 0.4 * rng.uniform01() : 0.6 + 0.4 * rng.uniform01());
            const auto labels = agglomerative_complete(dm, 2);
            recovered += oracle::partition_of(labels) == oracle::partition_of(block);
            double diam = 0;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j)
                    if (labels[i] == labels[j]) diam = std::max(diam, dm.at(i, j));
            optimal += std::abs(diam - oracle::min_partition_diameter(dm, 2)) < 1e-12;
        }
    c.expect(recovered == trials, "planted 2-block recovered " + std::to_string(recovered) + "/" +
                                      std::to_string(trials) + " (n = 2..8)");
    c.expect(optimal == trials, "diameter equals exhaustive minimum " + std::to_string(optimal) + "/" +
                                    std::to_string(trials));
}

void ndcg_oracles(Check& c) {
    Rng rng(derive_seed(kDefaultSeed, "acceptance", "ndcg"));
    double worst = 0;
    std::size_t rankings = 0;
    for (std::size_t n = 1; n <= 6; ++n)
        for (int t = 0; t < 5; ++t) {
            std::vector<std::string> ids;
            std::map<std::string, int> rels;
            for (std::size_t i = 0; i < n; ++i) {
                ids.push_back("d" + std::to_string(i));
                rels[ids.back()] = static_cast<int>(rng.below(4));
            }
            rels["d0"] = std::max(rels["d0"], 1);
            for (Gain g : {Gain::linear, Gain::exponential}) {
                const bool expo = g == Gain::exponential;
                std::vector<int> ideal;
                for (const auto& [id, r] : rels) ideal.push_back(r);
                std::sort(ideal.rbegin(), ideal.rend());
                auto perm = ids;
                std::sort(perm.begin(), perm.end());
                do {
                    std::vector<int> order;
                    for (const auto& id : perm) order.push_back(rels[id]);
                    const double want = oracle::dcg(order, expo) / oracle::dcg(ideal, expo);
                    worst = std::max(worst, std::abs(ndcg_at_k(perm, rels, kNdcgDepth, g) - want));
                    ++rankings;
                } while (std::next_permutation(perm.begin(), perm.end()));
            }
        }
    c.near(worst, 0.0, 1e-12, "NDCG@10 vs brute force over " + std::to_string(rankings) + " rankings");

    double gap = 0;
    for (int t = 0; t < 200; ++t) {
        std::vector<std::string> ranking;
        std::map<std::string, int> rels;
        for (int i = 0; i < 12; ++i) {
            ranking.push_back("d" + std::to_string(i));
            if (rng.below(3) == 0) rels[ranking.back()] = 1;
        }
        rels["d" + std::to_string(rng.below(12))] = 1;
        rng.shuffle(std::span<std::string>(ranking));
        gap = std::max(gap, std::abs(ndcg_at_k(ranking, rels, kNdcgDepth, Gain::linear) -
                                     ndcg_at_k(ranking, rels, kNdcgDepth, Gain::exponential)));
    }
    c.near(gap, 0.0, 1e-12, "linear vs exponential gain under binary relevance");
}

void retrieval_fixture(Check& c, const std::shared_ptr<const Tokenizer>& tok) {
    const auto ds = load_retrieval(kFixtures / "retrieval");
    const NeedleSource needle;
    const PerturbationContext ctx{*tok, needle};
    const std::vector<PerturbationSpec> identity{{PerturbationKind::token_remove, 0.5, 1e-6, 0}};

    ProviderConfig mock_cfg;
    mock_cfg.dimension = 256;
    EmbeddingSubject emb(std::make_shared<EmbeddingClient>(mock_cfg, std::make_shared<MockProvider>(), nullptr));
    MetricSubject jac(MetricId::jaccard, tok), bm25(MetricId::bm25, tok);
    for (const Subject* s : std::initializer_list<const Subject*>{&jac, &bm25, &emb}) {
        const auto r = run_retrieval(*s, {{"mini", ds}}, kDefaultSeed, ctx, {identity, Gain::linear, 1});
        c.near(r.datasets.at(0).runs.at(0).retention, 1.0, 1e-9, "identity retention, " + s->id());
    }

    const auto full = retrieval_perturbations();
    const auto r = run_retrieval(jac, {{"mini", ds}}, kDefaultSeed, ctx, {full, Gain::linear, 2});
    const double want = oracle::retrieval_pipeline(ds, ctx, kDefaultSeed, full,
                                                   [&](const std::string& q, const std::string& d) {
                                                       // Hand-counted set overlap on the tokenizer's ids.
                                                       const auto a = tok->encode(q).tokens, b = tok->encode(d).tokens;
                                                       const std::set<TokenId> sa(a.begin(), a.end()),
                                                           sb(b.begin(), b.end());
                                                       std::size_t inter = 0;
                                                       for (auto t : sa) inter += sb.count(t);
                                                       const std::size_t uni = sa.size() + sb.size() - inter;
                                                       return uni ? double(inter) / double(uni) : 1.0;
                                                   });
    c.near(r.category_score, want, 1e-9, "fixture pipeline (18 perturbations, Jaccard) vs brute-force oracle");
}

Check criterion3() {
    Check c;
    const std::shared_ptr<const Tokenizer> tok = std::make_shared<FallbackTokenizer>();
    metric_oracles(c, tok);
    sensitivity_fixture(c, tok);
    clustering_oracles(c);
    ndcg_oracles(c);
    retrieval_fixture(c, tok);
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Check criterion4() {
    Check c;
    const auto dir = fs::temp_directory_path() / "sage_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::vector<std::string> outputs;
    for (int run = 0; run < 2; ++run) {
        const auto out = dir / ("report" + std::to_string(run) + ".json");
        const std::string cmd = kCli + " run --config " + (kFixtures / "config.json").string() + " --seed 42 --out " +
                                out.string() + " >/dev/null 2>" + (dir / "stderr").string();
        const auto t0 = std::chrono::steady_clock::now();
        const int status = std::system(cmd.c_str());
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        c.expect(WIFEXITED(status) && WEXITSTATUS(status) == 0, "run " + std::to_string(run + 1) + " exit code 0");
        char buf[64];
        std::snprintf(buf, sizeof buf, "run %d took %.2f s (< 60)", run + 1, secs);
        c.expect(secs < 60.0, buf);
        outputs.push_back(slurp(out));
    }
    c.expect(!outputs[0].empty() && outputs[0] == outputs[1],
             "report.json byte-identical across runs (" + std::to_string(outputs[0].size()) + " bytes)");
    const auto reports = reports_from_json(outputs[0]);
    c.expect(reports.size() == 5 && std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.overall; }),
             "five subjects with all categories");
    fs::remove_all(dir);
    return c;
}

Check criterion5() {
    Check c;
    const std::shared_ptr<const Tokenizer> tok = std::make_shared<FallbackTokenizer>();
    const NeedleSource needle;
    const PerturbationContext ctx{*tok, needle};
    MetricSubject lev(MetricId::levenshtein, tok);
    const auto pairs = load_pairs(kFixtures / "pairs.jsonl");
    const auto r = run_robustness(lev, {{"news", pairs}}, kDefaultSeed, ctx).datasets.at(0);
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "pairs %zu; summary_over_semantic %.3f, superficial_over_summary %.3f, score %.3f", r.pairs,
                  r.summary_over_semantic, r.superficial_over_summary, r.score);
    c.notes.push_back(std::string("info ") + buf);
    std::snprintf(buf, sizeof buf, "Levenshtein superficial_over_semantic %.3f (want >= 0.90)",
                  r.superficial_over_semantic);
    c.expect(r.superficial_over_semantic >= 0.90, buf);
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> expected;
    for (int i = 1; i < argc; ++i) {
        if (std::string(argv[i]) == "--expect-fail" && i + 1 < argc) {
            expected.insert(std::atoi(argv[++i]));
        } else {
            std::cerr << "usage: acceptance [--expect-fail N]...\n";
            return 2;
        }
    }

    const std::vector<std::pair<std::string, std::function<Check()>>> criteria{
        {"aggregation reproduction", criterion1},
        {"composition cross-checks", criterion2},
        {"property suites", criterion3},
        {"end-to-end determinism", criterion4},
        {"robustness sanity", criterion5},
    };
    std::set<int> failed;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        Check c;
        try {
            c = criteria[i].second();
        } catch (const std::exception& e) {
            c.expect(false, std::string("exception: ") + e.what());
        }
        if (!c.ok) failed.insert(id);
        std::cout << (c.ok ? "PASS" : "FAIL") << " criterion " << id << ": " << criteria[i].first
                  << (!c.ok && expected.count(id) ? " (expected)" : "") << "\n";
        for (const auto& n : c.notes) std::cout << "    " << n << "\n";
    }
    return failed == expected ? 0 : 1;
}
