#pragma once

// Dataset loaders. Tabular data is JSON lines, one object per line:
//
//   pairs         {"id", "text", "summary"}
//   comparisons   {"id", "post", "summary_a", "summary_b", "choice": 0|1, ["subset"]}
//   axis evals    {"id", "text", "summary", "ratings": {"overall", "accuracy", "coverage", "coherence"}}
//   clustering    {"set_id", "texts": [..], "labels": [..], ["k"]}
//
// Retrieval datasets use the BEIR layout: corpus.jsonl {"_id", "title", "text"},
// queries.jsonl {"_id", "text"} and qrels/test.tsv (query-id, corpus-id, score)
// with a header line.
//
// Canonical form (what the serializers write) is compact JSON with sorted
// keys and raw UTF-8; files in canonical form round-trip byte-identically.

#include <sage/error.hpp>
#include <sage/rng.hpp>

#include <json.hpp>

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace sage {

struct DocumentSummaryPair {
    std::string id;
    std::string text;
    std::string summary;
};

struct ComparisonRecord {
    std::string id;
    std::string post;
    std::string summary_a;
    std::string summary_b;
    int choice = 0;      // 0: summary_a preferred
    std::string subset;  // optional source tag, e.g. "tldr" or "cnndm"
};

inline constexpr std::array<const char*, 4> kRatingDimensions = {"overall", "accuracy", "coverage", "coherence"};

struct AxisEvalRecord {
    std::string id;
    std::string text;
    std::string summary;
    std::map<std::string, int> ratings;
};

struct ClusteringSet {
    std::string set_id;
    std::vector<std::string> texts;
    std::vector<std::string> labels;
    std::size_t k = 0;
};

struct CorpusDoc {
    std::string title;
    std::string text;
};

struct RetrievalDataset {
    std::map<std::string, CorpusDoc> corpus;
    std::map<std::string, std::string> queries;
    std::map<std::string, std::map<std::string, int>> qrels;  // query id -> doc id -> relevance

    void validate() const {
        for (const auto& [qid, docs] : qrels) {
            if (!queries.count(qid)) throw ValidationError("qrels: unknown query id '" + qid + "'");
            for (const auto& [did, rel] : docs) {
                if (!corpus.count(did)) throw ValidationError("qrels: unknown doc id '" + did + "'");
                if (rel < 0) throw ValidationError("qrels: negative relevance for " + qid + "/" + did);
            }
        }
    }
};

namespace detail {

using nlohmann::json;

inline std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return in;
}

inline std::string where(const std::filesystem::path& path, std::size_t line) {
    return path.string() + ":" + std::to_string(line);
}

/// Calls `fn(json, line_no)` for each non-blank line.
inline void for_each_json_line(const std::filesystem::path& path, const std::function<void(const json&, std::size_t)>& fn) {
    auto in = open_input(path);
    std::string line;
    for (std::size_t no = 1; std::getline(in, line); ++no) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(where(path, no) + ": invalid JSON: " + e.what());
        }
        if (!j.is_object()) throw ParseError(where(path, no) + ": expected a JSON object");
        fn(j, no);
    }
}

inline const json& field(const json& j, const char* name, const std::filesystem::path& path, std::size_t no) {
    auto it = j.find(name);
    if (it == j.end()) throw ParseError(where(path, no) + ": missing field '" + name + "'");
    return *it;
}

inline std::string string_field(const json& j, const char* name, const std::filesystem::path& path, std::size_t no) {
    const auto& v = field(j, name, path, no);
    if (!v.is_string()) throw ParseError(where(path, no) + ": field '" + name + "' must be a string");
    return v.get<std::string>();
}

inline std::string nonempty(std::string s, const char* name, const std::filesystem::path& path, std::size_t no) {
    if (s.empty()) throw ValidationError(where(path, no) + ": field '" + name + "' is empty");
    return s;
}

inline int int_field(const json& j, const char* name, const std::filesystem::path& path, std::size_t no) {
    const auto& v = field(j, name, path, no);
    if (!v.is_number_integer()) throw ParseError(where(path, no) + ": field '" + name + "' must be an integer");
    return v.get<int>();
}

inline void check_unique(std::set<std::string>& seen, const std::string& id, const std::filesystem::path& path,
                         std::size_t no) {
    if (!seen.insert(id).second) throw ValidationError(where(path, no) + ": duplicate id '" + id + "'");
}

}  // namespace detail

inline std::vector<DocumentSummaryPair> load_pairs(const std::filesystem::path& path) {
    std::vector<DocumentSummaryPair> out;
    std::set<std::string> seen;
    detail::for_each_json_line(path, [&](const nlohmann::json& j, std::size_t no) {
        DocumentSummaryPair p;
        p.id = detail::string_field(j, "id", path, no);
        p.text = detail::nonempty(detail::string_field(j, "text", path, no), "text", path, no);
        p.summary = detail::nonempty(detail::string_field(j, "summary", path, no), "summary", path, no);
        detail::check_unique(seen, p.id, path, no);
        out.push_back(std::move(p));
    });
    return out;
}

inline std::vector<ComparisonRecord> load_comparisons(const std::filesystem::path& path) {
    std::vector<ComparisonRecord> out;
    std::set<std::string> seen;
    detail::for_each_json_line(path, [&](const nlohmann::json& j, std::size_t no) {
        ComparisonRecord r;
        r.id = detail::string_field(j, "id", path, no);
        r.post = detail::nonempty(detail::string_field(j, "post", path, no), "post", path, no);
        r.summary_a = detail::nonempty(detail::string_field(j, "summary_a", path, no), "summary_a", path, no);
        r.summary_b = detail::nonempty(detail::string_field(j, "summary_b", path, no), "summary_b", path, no);
        r.choice = detail::int_field(j, "choice", path, no);
        if (r.choice != 0 && r.choice != 1)
            throw ValidationError(detail::where(path, no) + ": field 'choice' must be 0 or 1");
        if (j.contains("subset")) r.subset = detail::string_field(j, "subset", path, no);
        detail::check_unique(seen, r.id, path, no);
        out.push_back(std::move(r));
    });
    return out;
}

inline std::vector<AxisEvalRecord> load_axis_evals(const std::filesystem::path& path) {
    std::vector<AxisEvalRecord> out;
    std::set<std::string> seen;
    detail::for_each_json_line(path, [&](const nlohmann::json& j, std::size_t no) {
        AxisEvalRecord r;
        r.id = detail::string_field(j, "id", path, no);
        r.text = detail::nonempty(detail::string_field(j, "text", path, no), "text", path, no);
        r.summary = detail::nonempty(detail::string_field(j, "summary", path, no), "summary", path, no);
        const auto& ratings = detail::field(j, "ratings", path, no);
        if (!ratings.is_object()) throw ParseError(detail::where(path, no) + ": field 'ratings' must be an object");
        for (const char* dim : kRatingDimensions) {
            const int v = detail::int_field(ratings, dim, path, no);
            if (v < 1 || v > 7)
                throw ValidationError(detail::where(path, no) + ": rating '" + dim + "' must lie in [1, 7]");
            r.ratings[dim] = v;
        }
        detail::check_unique(seen, r.id, path, no);
        out.push_back(std::move(r));
    });
    return out;
}

inline std::vector<ClusteringSet> load_clustering_sets(const std::filesystem::path& path) {
    std::vector<ClusteringSet> out;
    std::set<std::string> seen;
    detail::for_each_json_line(path, [&](const nlohmann::json& j, std::size_t no) {
        ClusteringSet s;
        s.set_id = detail::string_field(j, "set_id", path, no);
        for (const char* name : {"texts", "labels"}) {
            const auto& arr = detail::field(j, name, path, no);
            if (!arr.is_array()) throw ParseError(detail::where(path, no) + ": field '" + name + "' must be an array");
            auto& dst = std::string_view(name) == "texts" ? s.texts : s.labels;
            for (const auto& v : arr) {
                if (!v.is_string())
                    throw ParseError(detail::where(path, no) + ": field '" + name + "' must hold strings");
                dst.push_back(v.get<std::string>());
            }
        }
        if (s.texts.size() != s.labels.size())
            throw ValidationError(detail::where(path, no) + ": 'texts' and 'labels' differ in length");
        s.k = std::set<std::string>(s.labels.begin(), s.labels.end()).size();
        if (j.contains("k") && detail::int_field(j, "k", path, no) != static_cast<int>(s.k))
            throw ValidationError(detail::where(path, no) + ": field 'k' must equal the distinct label count");
        if (s.k < 2) throw ValidationError(detail::where(path, no) + ": need at least 2 classes");
        detail::check_unique(seen, s.set_id, path, no);
        out.push_back(std::move(s));
    });
    return out;
}

inline RetrievalDataset load_retrieval(const std::filesystem::path& dir) {
    RetrievalDataset ds;
    const auto corpus_path = dir / "corpus.jsonl";
    detail::for_each_json_line(corpus_path, [&](const nlohmann::json& j, std::size_t no) {
        const auto id = detail::string_field(j, "_id", corpus_path, no);
        CorpusDoc d;
        if (j.contains("title")) d.title = detail::string_field(j, "title", corpus_path, no);
        d.text = detail::string_field(j, "text", corpus_path, no);
        if (d.title.empty() && d.text.empty())
            throw ValidationError(detail::where(corpus_path, no) + ": document '" + id + "' has no text");
        if (!ds.corpus.emplace(id, std::move(d)).second)
            throw ValidationError(detail::where(corpus_path, no) + ": duplicate id '" + id + "'");
    });
    const auto queries_path = dir / "queries.jsonl";
    detail::for_each_json_line(queries_path, [&](const nlohmann::json& j, std::size_t no) {
        const auto id = detail::string_field(j, "_id", queries_path, no);
        auto text = detail::nonempty(detail::string_field(j, "text", queries_path, no), "text", queries_path, no);
        if (!ds.queries.emplace(id, std::move(text)).second)
            throw ValidationError(detail::where(queries_path, no) + ": duplicate id '" + id + "'");
    });

    const auto qrels_path = dir / "qrels" / "test.tsv";
    auto in = detail::open_input(qrels_path);
    std::string line;
    for (std::size_t no = 1; std::getline(in, line); ++no) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (no == 1 || line.empty()) continue;  // header
        std::vector<std::string> cols;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, '\t');) cols.push_back(c);
        if (cols.size() != 3) throw ParseError(detail::where(qrels_path, no) + ": expected 3 tab-separated columns");
        int rel;
        try {
            std::size_t used = 0;
            rel = std::stoi(cols[2], &used);
            if (used != cols[2].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ParseError(detail::where(qrels_path, no) + ": score '" + cols[2] + "' is not an integer");
        }
        if (!ds.queries.count(cols[0]))
            throw ValidationError(detail::where(qrels_path, no) + ": unknown query id '" + cols[0] + "'");
        if (!ds.corpus.count(cols[1]))
            throw ValidationError(detail::where(qrels_path, no) + ": unknown doc id '" + cols[1] + "'");
        ds.qrels[cols[0]][cols[1]] = rel;
    }
    ds.validate();
    return ds;
}

// ---------------------------------------------------------------------------
// Canonical serialization

inline nlohmann::json to_json(const DocumentSummaryPair& p) {
    return {{"id", p.id}, {"text", p.text}, {"summary", p.summary}};
}

inline nlohmann::json to_json(const ComparisonRecord& r) {
    nlohmann::json j = {{"id", r.id}, {"post", r.post}, {"summary_a", r.summary_a},
                        {"summary_b", r.summary_b}, {"choice", r.choice}};
    if (!r.subset.empty()) j["subset"] = r.subset;
    return j;
}

inline nlohmann::json to_json(const AxisEvalRecord& r) {
    return {{"id", r.id}, {"text", r.text}, {"summary", r.summary}, {"ratings", r.ratings}};
}

inline nlohmann::json to_json(const ClusteringSet& s) {
    return {{"set_id", s.set_id}, {"texts", s.texts}, {"labels", s.labels}};
}

template <typename Record>
std::string to_jsonl(const std::vector<Record>& records) {
    std::string out;
    for (const auto& r : records) {
        out += to_json(r).dump();
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sampling

/// Seeded sample of min(n, |items|) items without replacement, kept in original order.
template <typename T>
std::vector<T> sample(const std::vector<T>& items, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw InputError("sample size must be >= 1");
    if (n >= items.size()) return items;
    std::vector<std::size_t> idx(items.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
    idx.resize(n);
    std::sort(idx.begin(), idx.end());
    std::vector<T> out;
    out.reserve(n);
    for (auto i : idx) out.push_back(items[i]);
    return out;
}

}  // namespace sage
