#pragma once

// Run configuration: one JSON file, relative paths resolved against the
// file's directory. Every error names the offending key.

#include <sage/embedding.hpp>
#include <sage/error.hpp>
#include <sage/metrics.hpp>
#include <sage/perturbation.hpp>
#include <sage/report.hpp>
#include <sage/rng.hpp>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace sage {

namespace fs = std::filesystem;

struct DatasetRef {
    std::string name;
    fs::path path;
};

struct HumanPreferencePaths {
    fs::path comparisons;
    fs::path axis_evals;
};

struct RunConfig {
    std::uint64_t seed = kDefaultSeed;
    std::size_t jobs = 1;
    std::vector<std::string> subjects;
    std::vector<std::string> tasks{kCategories.begin(), kCategories.end()};
    fs::path output = "report.json";
    std::optional<fs::path> cache_dir;
    std::optional<fs::path> vocab_path;
    std::optional<fs::path> needle_path;
    Bm25Params bm25;
    std::vector<ProviderConfig> providers;

    std::optional<HumanPreferencePaths> human_preference;
    std::vector<DatasetRef> robustness;
    std::vector<DatasetRef> sensitivity;
    std::vector<DatasetRef> clustering;
    std::vector<DatasetRef> retrieval;

    std::map<std::string, std::size_t> sample;  // task -> records per dataset
    std::size_t clustering_max_items = 2000;
    std::string retrieval_gain = "linear";
    std::vector<PerturbationSpec> retrieval_perturbations;  // empty: the standard 18

    bool has_task(std::string_view t) const { return std::find(tasks.begin(), tasks.end(), t) != tasks.end(); }

    const ProviderConfig* provider_for(std::string_view subject) const {
        for (const auto& p : providers)
            if (p.subject_name() == subject) return &p;
        return nullptr;
    }

    /// Checks cross-references and that every path the selected tasks need exists.
    void validate() const {
        if (jobs == 0) throw ConfigError("jobs: must be >= 1");
        if (subjects.empty()) throw ConfigError("subjects: list is empty");
        if (tasks.empty()) throw ConfigError("tasks: list is empty");
        std::set<std::string> seen;
        for (const auto& t : tasks) {
            parse_category(t);
            if (!seen.insert(t).second) throw ConfigError("tasks: duplicate '" + t + "'");
        }
        seen.clear();
        for (const auto& s : subjects) {
            if (!seen.insert(s).second) throw ConfigError("subjects: duplicate '" + s + "'");
            if (s == "cosine") throw ConfigError("subjects: 'cosine' needs an embedding model id");
            if (!parse_metric_opt(s) && !provider_for(s))
                throw ConfigError("subjects: '" + s + "' is neither a metric nor a configured embedding model");
        }
        for (const auto& p : providers) {
            try {
                p.validate();
            } catch (const ConfigError& e) {
                throw ConfigError("embedding.providers." + p.model_id + "." + e.what());
            }
        }
        bm25.validate();
        if (clustering_max_items < 2) throw ConfigError("clustering.max_items: must be >= 2");
        for (const auto& [task, n] : sample) {
            parse_category(task);
            if (n == 0) throw ConfigError("sample." + task + ": must be >= 1");
        }
        auto need = [](const fs::path& p, const std::string& key, bool dir) {
            if (!fs::exists(p)) throw ConfigError(key + ": path not found: " + p.string());
            if (dir != fs::is_directory(p))
                throw ConfigError(key + ": expected a " + (dir ? "directory" : "file") + ": " + p.string());
        };
        auto need_list = [&](const std::vector<DatasetRef>& refs, const std::string& task, bool dir) {
            if (!has_task(task)) return;
            if (refs.empty()) throw ConfigError("datasets." + task + ": required by the selected tasks");
            for (std::size_t i = 0; i < refs.size(); ++i)
                need(refs[i].path, "datasets." + task + "[" + std::to_string(i) + "].path", dir);
        };
        if (has_task("human_preference")) {
            if (!human_preference) throw ConfigError("datasets.human_preference: required by the selected tasks");
            need(human_preference->comparisons, "datasets.human_preference.comparisons", false);
            need(human_preference->axis_evals, "datasets.human_preference.axis_evals", false);
        }
        need_list(robustness, "robustness", false);
        need_list(sensitivity, "sensitivity", false);
        need_list(clustering, "clustering", false);
        need_list(retrieval, "retrieval", true);
        if (vocab_path) need(*vocab_path, "tokenizer.vocab_path", false);
        if (needle_path) need(*needle_path, "perturb.needle_path", false);
        parse_gain_key();
    }

    void parse_gain_key() const {
        if (retrieval_gain != "linear" && retrieval_gain != "exponential")
            throw ConfigError("retrieval.gain: expected 'linear' or 'exponential'");
    }

    static std::optional<MetricId> parse_metric_opt(std::string_view s) {
        for (MetricId m : {MetricId::levenshtein, MetricId::rouge, MetricId::jaccard, MetricId::bm25})
            if (to_string(m) == s) return m;
        return std::nullopt;
    }
};

namespace detail {

using nlohmann::json;

inline void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError((where.empty() ? std::string("config") : where) + ": expected an object");
    for (const auto& [k, v] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || k == a;
        if (!ok) throw ConfigError((where.empty() ? "" : where + ".") + k + ": unknown key");
    }
}

template <typename T>
T get_as(const json& obj, const char* key, const std::string& where) {
    const std::string name = where.empty() ? key : where + "." + key;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(name + ": missing or has the wrong type");
    }
}

template <typename T>
void read_opt(const json& obj, const char* key, const std::string& where, T& out) {
    if (obj.contains(key)) out = get_as<T>(obj, key, where);
}

inline std::size_t get_count(const json& obj, const char* key, const std::string& where) {
    const std::string name = where.empty() ? key : where + "." + key;
    const auto& v = obj.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError(name + ": expected a non-negative integer");
    return v.get<std::size_t>();
}

inline std::vector<DatasetRef> dataset_list(const json& arr, const std::string& key, const fs::path& base) {
    if (!arr.is_array()) throw ConfigError(key + ": expected a list of {name, path}");
    std::vector<DatasetRef> out;
    std::set<std::string> names;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string where = key + "[" + std::to_string(i) + "]";
        check_keys(arr[i], where, {"name", "path"});
        DatasetRef r{get_as<std::string>(arr[i], "name", where), base / get_as<std::string>(arr[i], "path", where)};
        if (r.name.empty()) throw ConfigError(where + ".name: must be non-empty");
        if (!names.insert(r.name).second) throw ConfigError(where + ".name: duplicate '" + r.name + "'");
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace detail

/// Parses a config document; relative paths are resolved against `base`.
inline RunConfig parse_config(const nlohmann::json& j, const fs::path& base) {
    using detail::check_keys;
    using detail::get_as;
    using detail::read_opt;
    check_keys(j, "", {"seed", "jobs", "subjects", "tasks", "output", "cache", "tokenizer", "perturb", "bm25",
                       "embedding", "datasets", "sample", "clustering", "retrieval"});
    RunConfig c;
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0))
            throw ConfigError("seed: expected a non-negative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("jobs")) c.jobs = detail::get_count(j, "jobs", "");
    read_opt(j, "subjects", "", c.subjects);
    read_opt(j, "tasks", "", c.tasks);
    if (j.contains("output")) c.output = base / get_as<std::string>(j, "output", "");
    if (j.contains("cache")) {
        check_keys(j["cache"], "cache", {"dir"});
        if (j["cache"].contains("dir")) c.cache_dir = base / get_as<std::string>(j["cache"], "dir", "cache");
    }
    if (j.contains("tokenizer")) {
        check_keys(j["tokenizer"], "tokenizer", {"vocab_path"});
        if (j["tokenizer"].contains("vocab_path"))
            c.vocab_path = base / get_as<std::string>(j["tokenizer"], "vocab_path", "tokenizer");
    }
    if (j.contains("perturb")) {
        check_keys(j["perturb"], "perturb", {"needle_path"});
        if (j["perturb"].contains("needle_path"))
            c.needle_path = base / get_as<std::string>(j["perturb"], "needle_path", "perturb");
    }
    if (j.contains("bm25")) {
        const auto& b = j["bm25"];
        check_keys(b, "bm25", {"k1", "b", "epsilon", "delta"});
        read_opt(b, "k1", "bm25", c.bm25.k1);
        read_opt(b, "b", "bm25", c.bm25.b);
        read_opt(b, "epsilon", "bm25", c.bm25.epsilon);
        read_opt(b, "delta", "bm25", c.bm25.delta);
        try {
            c.bm25.validate();
        } catch (const InputError& e) {
            throw ConfigError(std::string("bm25: ") + e.what());
        }
    }
    if (j.contains("embedding")) {
        check_keys(j["embedding"], "embedding", {"providers"});
        const auto& list = j["embedding"].value("providers", nlohmann::json::array());
        if (!list.is_array()) throw ConfigError("embedding.providers: expected a list");
        for (std::size_t i = 0; i < list.size(); ++i) {
            const std::string where = "embedding.providers[" + std::to_string(i) + "]";
            const auto& p = list[i];
            check_keys(p, where, {"provider_id", "model_id", "endpoint_url", "api_key_env", "dimension", "max_batch",
                                  "max_in_flight", "requests_per_minute", "max_input_tokens"});
            ProviderConfig pc;
            read_opt(p, "provider_id", where, pc.provider_id);
            read_opt(p, "model_id", where, pc.model_id);
            read_opt(p, "endpoint_url", where, pc.endpoint_url);
            read_opt(p, "api_key_env", where, pc.api_key_env);
            for (auto [key, field] : {std::pair{"dimension", &pc.dimension}, std::pair{"max_batch", &pc.max_batch},
                                      std::pair{"max_in_flight", &pc.max_in_flight},
                                      std::pair{"requests_per_minute", &pc.requests_per_minute},
                                      std::pair{"max_input_tokens", &pc.max_input_tokens}})
                if (p.contains(key)) *field = detail::get_count(p, key, where);
            try {
                pc.validate();
            } catch (const ConfigError& e) {
                throw ConfigError(where + "." + e.what());
            }
            for (const auto& other : c.providers)
                if (other.model_id == pc.model_id) throw ConfigError(where + ".model_id: duplicate '" + pc.model_id + "'");
            c.providers.push_back(std::move(pc));
        }
    }
    if (j.contains("datasets")) {
        const auto& d = j["datasets"];
        check_keys(d, "datasets", {"human_preference", "robustness", "sensitivity", "clustering", "retrieval"});
        if (d.contains("human_preference")) {
            const auto& h = d["human_preference"];
            check_keys(h, "datasets.human_preference", {"comparisons", "axis_evals"});
            c.human_preference = HumanPreferencePaths{
                base / get_as<std::string>(h, "comparisons", "datasets.human_preference"),
                base / get_as<std::string>(h, "axis_evals", "datasets.human_preference")};
        }
        if (d.contains("robustness")) c.robustness = detail::dataset_list(d["robustness"], "datasets.robustness", base);
        if (d.contains("sensitivity"))
            c.sensitivity = detail::dataset_list(d["sensitivity"], "datasets.sensitivity", base);
        if (d.contains("clustering")) c.clustering = detail::dataset_list(d["clustering"], "datasets.clustering", base);
        if (d.contains("retrieval")) c.retrieval = detail::dataset_list(d["retrieval"], "datasets.retrieval", base);
    }
    if (j.contains("sample")) {
        check_keys(j["sample"], "sample", {"human_preference", "robustness", "sensitivity", "clustering", "retrieval"});
        for (const auto& [task, v] : j["sample"].items()) c.sample[task] = detail::get_count(j["sample"], task.c_str(), "sample");
    }
    if (j.contains("clustering")) {
        check_keys(j["clustering"], "clustering", {"max_items"});
        if (j["clustering"].contains("max_items"))
            c.clustering_max_items = detail::get_count(j["clustering"], "max_items", "clustering");
    }
    if (j.contains("retrieval")) {
        const auto& r = j["retrieval"];
        check_keys(r, "retrieval", {"gain", "perturbations"});
        read_opt(r, "gain", "retrieval", c.retrieval_gain);
        c.parse_gain_key();
        if (r.contains("perturbations")) {
            const auto& list = r["perturbations"];
            if (!list.is_array()) throw ConfigError("retrieval.perturbations: expected a list");
            for (std::size_t i = 0; i < list.size(); ++i) {
                const std::string where = "retrieval.perturbations[" + std::to_string(i) + "]";
                check_keys(list[i], where, {"kind", "position", "proportion"});
                PerturbationSpec s;
                try {
                    s.kind = parse_perturbation_kind(get_as<std::string>(list[i], "kind", where));
                    read_opt(list[i], "position", where, s.position);
                    read_opt(list[i], "proportion", where, s.proportion);
                    s.validate();
                } catch (const InputError& e) {
                    throw ConfigError(where + ": " + e.what());
                }
                c.retrieval_perturbations.push_back(s);
            }
        }
    }
    return c;
}

inline RunConfig load_config(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("--config: cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("--config: " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_config(j, path.parent_path());
}

}  // namespace sage
