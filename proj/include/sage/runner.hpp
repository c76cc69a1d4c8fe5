#pragma once

// Orchestration: load the configured datasets once, build each subject, run
// the selected tasks and assemble one report per subject.

#include <sage/config.hpp>
#include <sage/datasets.hpp>
#include <sage/embedding.hpp>
#include <sage/report.hpp>
#include <sage/subject.hpp>
#include <sage/tasks/clustering.hpp>
#include <sage/tasks/human_preference.hpp>
#include <sage/tasks/retrieval.hpp>
#include <sage/tasks/robustness.hpp>
#include <sage/tasks/sensitivity.hpp>

#include <json.hpp>

#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace sage {

struct LoadedData {
    std::vector<ComparisonRecord> comparisons;
    std::vector<AxisEvalRecord> axis_evals;
    std::vector<NamedPairs> robustness;
    std::vector<NamedTexts> sensitivity;
    std::vector<NamedSets> clustering;
    std::vector<NamedRetrieval> retrieval;
    nlohmann::json meta = nlohmann::json::object();  // task -> [{name, records}]
};

namespace detail {

template <typename T>
std::vector<T> maybe_sample(const std::vector<T>& items, const RunConfig& cfg, const std::string& task,
                            const std::string& name) {
    const auto it = cfg.sample.find(task);
    if (it == cfg.sample.end()) return items;
    return sample(items, it->second, derive_seed(cfg.seed, "sample", task, name));
}

inline void note_dataset(nlohmann::json& meta, const std::string& task, const std::string& name, std::size_t n) {
    meta[task].push_back({{"name", name}, {"records", n}});
}

inline std::string read_text_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot open " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace detail

inline LoadedData load_data(const RunConfig& cfg) {
    LoadedData d;
    if (cfg.has_task("human_preference")) {
        d.comparisons = detail::maybe_sample(load_comparisons(cfg.human_preference->comparisons), cfg,
                                             "human_preference", "comparisons");
        d.axis_evals = detail::maybe_sample(load_axis_evals(cfg.human_preference->axis_evals), cfg,
                                            "human_preference", "axis_evals");
        detail::note_dataset(d.meta, "human_preference", "comparisons", d.comparisons.size());
        detail::note_dataset(d.meta, "human_preference", "axis_evals", d.axis_evals.size());
    }
    if (cfg.has_task("robustness"))
        for (const auto& ref : cfg.robustness) {
            d.robustness.push_back({ref.name, detail::maybe_sample(load_pairs(ref.path), cfg, "robustness", ref.name)});
            detail::note_dataset(d.meta, "robustness", ref.name, d.robustness.back().pairs.size());
        }
    if (cfg.has_task("sensitivity"))
        for (const auto& ref : cfg.sensitivity) {
            NamedTexts t{ref.name, {}};
            for (auto& p : detail::maybe_sample(load_pairs(ref.path), cfg, "sensitivity", ref.name))
                t.texts.push_back(std::move(p.text));
            detail::note_dataset(d.meta, "sensitivity", ref.name, t.texts.size());
            d.sensitivity.push_back(std::move(t));
        }
    if (cfg.has_task("clustering"))
        for (const auto& ref : cfg.clustering) {
            d.clustering.push_back(
                {ref.name, detail::maybe_sample(load_clustering_sets(ref.path), cfg, "clustering", ref.name)});
            std::size_t items = 0;
            for (const auto& s : d.clustering.back().sets) items += s.texts.size();
            detail::note_dataset(d.meta, "clustering", ref.name, items);
        }
    if (cfg.has_task("retrieval"))
        for (const auto& ref : cfg.retrieval) {
            auto ds = load_retrieval(ref.path);
            if (const auto it = cfg.sample.find("retrieval"); it != cfg.sample.end()) {
                const auto keep = sample(judged_queries(ds), it->second, derive_seed(cfg.seed, "sample", "retrieval", ref.name));
                std::map<std::string, std::string> queries;
                std::map<std::string, std::map<std::string, int>> qrels;
                for (const auto& q : keep) {
                    queries[q] = ds.queries.at(q);
                    qrels[q] = ds.qrels.at(q);
                }
                ds.queries = std::move(queries);
                ds.qrels = std::move(qrels);
            }
            d.meta["retrieval"].push_back(
                {{"name", ref.name}, {"documents", ds.corpus.size()}, {"queries", ds.queries.size()}});
            d.retrieval.push_back({ref.name, std::move(ds)});
        }
    return d;
}

using ProviderFactory = std::function<std::shared_ptr<EmbeddingProvider>(const ProviderConfig&, std::uint64_t seed)>;

/// Mock provider only; the CLI passes a factory with HTTP adapters.
inline std::shared_ptr<EmbeddingProvider> mock_only_factory(const ProviderConfig& p, std::uint64_t seed) {
    if (p.provider_id == "mock") return std::make_shared<MockProvider>(seed);
    throw ConfigError("embedding.providers." + p.model_id + ".provider_id: '" + p.provider_id +
                      "' needs the HTTP provider build");
}

struct RunEnvironment {
    std::shared_ptr<const Tokenizer> tokenizer;
    NeedleSource needle;
    std::shared_ptr<EmbeddingCache> cache;
    ProviderFactory factory = mock_only_factory;
    std::shared_ptr<Clock> clock = std::make_shared<SystemClock>();
};

inline RunEnvironment make_environment(const RunConfig& cfg, ProviderFactory factory = mock_only_factory) {
    RunEnvironment env;
    env.tokenizer = make_tokenizer(cfg.vocab_path);
    if (cfg.needle_path) env.needle = NeedleSource(detail::read_text_file(*cfg.needle_path));
    env.cache = cfg.cache_dir ? std::make_shared<EmbeddingCache>(*cfg.cache_dir) : std::make_shared<EmbeddingCache>();
    env.factory = std::move(factory);
    return env;
}

inline std::shared_ptr<Subject> make_subject(const std::string& name, const RunConfig& cfg, const RunEnvironment& env) {
    if (auto m = RunConfig::parse_metric_opt(name)) return std::make_shared<MetricSubject>(*m, env.tokenizer, cfg.bm25, cfg.jobs);
    const ProviderConfig* p = cfg.provider_for(name);
    if (!p) throw ConfigError("subjects: unknown subject '" + name + "'");
    ClientOptions opts;
    opts.clock = env.clock;
    opts.tokenizer = env.tokenizer;
    opts.seed = cfg.seed;
    auto client = std::make_shared<EmbeddingClient>(*p, env.factory(*p, cfg.seed), env.cache, opts);
    return std::make_shared<EmbeddingSubject>(std::move(client));
}

// -- per-task detail blocks --------------------------------------------------

inline nlohmann::json details_of(const AlignmentResult& r) {
    return {{"comparisons",
             {{"accuracy", r.comparisons.accuracy},
              {"precision", r.comparisons.precision},
              {"recall", r.comparisons.recall},
              {"f1", r.comparisons.f1},
              {"records", r.n_comparisons},
              {"subsets", r.subset_sizes}}},
            {"scoring", r.scoring},
            {"scoring_records", r.n_axis},
            {"skipped_dimensions", r.skipped_dimensions}};
}

inline nlohmann::json details_of(const RobustnessResult& r) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& d : r.datasets)
        j.push_back({{"dataset", d.name},
                     {"pairs", d.pairs},
                     {"summary_over_semantic", d.summary_over_semantic},
                     {"superficial_over_summary", d.superficial_over_summary},
                     {"superficial_over_semantic", d.superficial_over_semantic},
                     {"all_three", d.all_three},
                     {"score", d.score}});
    return {{"datasets", j}};
}

inline nlohmann::json details_of(const SensitivityResult& r) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& d : r.datasets)
        j.push_back({{"dataset", d.name},
                     {"documents", d.documents},
                     {"insertion", d.insertion},
                     {"removal", d.removal},
                     {"skipped_points", d.skipped_points}});
    return {{"datasets", j}, {"insertion_mean", r.insertion_mean}, {"removal_mean", r.removal_mean}};
}

inline nlohmann::json details_of(const ClusteringResult& r) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& d : r.datasets) {
        nlohmann::json sets = nlohmann::json::array();
        for (const auto& s : d.sets)
            sets.push_back({{"set_id", s.set_id},
                            {"items", s.n},
                            {"k", s.k},
                            {"homogeneity", s.score.homogeneity},
                            {"completeness", s.score.completeness},
                            {"v_measure", s.score.v},
                            {"subsampled", s.subsampled}});
        j.push_back({{"dataset", d.name}, {"score", d.score}, {"sets", sets}});
    }
    return {{"datasets", j}, {"notices", r.notices}};
}

inline nlohmann::json details_of(const RetrievalResult& r) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& d : r.datasets) {
        nlohmann::json runs = nlohmann::json::array();
        for (const auto& run : d.runs)
            runs.push_back({{"perturbation", run.label}, {"ndcg_at_10", run.ndcg}, {"retention", run.retention}});
        j.push_back({{"dataset", d.name},
                     {"queries", d.queries},
                     {"excluded_queries", d.excluded_queries},
                     {"baseline_ndcg_at_10", d.baseline},
                     {"runs", runs},
                     {"score", d.score}});
    }
    return {{"datasets", j}, {"skipped", r.skipped}};
}

// ---------------------------------------------------------------------------

inline BenchmarkReport run_subject(const Subject& subject, const LoadedData& data, const RunConfig& cfg,
                                   const RunEnvironment& env) {
    BenchmarkReport rep;
    rep.subject_id = subject.id();
    const PerturbationContext ctx{*env.tokenizer, env.needle};
    for (const auto& task : cfg.tasks) {
        if (task == "human_preference") {
            const auto r = run_alignment(subject, data.comparisons, data.axis_evals);
            rep.category_scores[task] = r.category_score;
            rep.details[task] = details_of(r);
        } else if (task == "robustness") {
            const auto r = run_robustness(subject, data.robustness, cfg.seed, ctx, cfg.jobs);
            rep.category_scores[task] = r.category_score;
            rep.details[task] = details_of(r);
        } else if (task == "sensitivity") {
            const auto r = run_sensitivity(subject, data.sensitivity, ctx, cfg.jobs);
            rep.category_scores[task] = r.category_score;
            rep.details[task] = details_of(r);
        } else if (task == "clustering") {
            const auto r = run_clustering(subject, data.clustering, cfg.seed, cfg.clustering_max_items, cfg.jobs);
            rep.category_scores[task] = r.category_score;
            rep.details[task] = details_of(r);
        } else if (task == "retrieval") {
            RetrievalOptions opts;
            if (!cfg.retrieval_perturbations.empty()) opts.specs = cfg.retrieval_perturbations;
            opts.gain = parse_gain(cfg.retrieval_gain);
            opts.jobs = cfg.jobs;
            const auto r = run_retrieval(subject, data.retrieval, cfg.seed, ctx, opts);
            // Retention can exceed 1 when a perturbation happens to help; the
            // report scale is [0, 1], the raw value stays in the details.
            rep.category_scores[task] = std::min(1.0, r.category_score);
            rep.details[task] = details_of(r);
            rep.details[task]["uncapped_score"] = r.category_score;
        }
    }
    rep.metadata["seed"] = cfg.seed;
    rep.metadata["tokenizer"] = env.tokenizer->id();
    rep.metadata["datasets"] = data.meta;
    rep.metadata["clustering_max_items"] = cfg.clustering_max_items;
    rep.metadata["retrieval_gain"] = cfg.retrieval_gain;
    if (!cfg.sample.empty()) rep.metadata["sample"] = cfg.sample;
    if (const auto* es = dynamic_cast<const EmbeddingSubject*>(&subject)) {
        const auto& pc = es->client().config();
        rep.metadata["provider"] = {{"provider_id", pc.provider_id}, {"model_id", pc.model_id}, {"dimension", pc.dimension}};
        auto warnings = es->client().warnings();
        std::sort(warnings.begin(), warnings.end());  // workers finish in any order
        rep.metadata["warnings"] = warnings;
    }
    rep.finalize();
    return rep;
}

/// Reports in config subject order.
inline std::vector<BenchmarkReport> run_benchmark(const RunConfig& cfg, const RunEnvironment& env) {
    cfg.validate();
    const auto data = load_data(cfg);
    std::vector<BenchmarkReport> reports;
    for (const auto& name : cfg.subjects) reports.push_back(run_subject(*make_subject(name, cfg, env), data, cfg, env));
    return reports;
}

}  // namespace sage
