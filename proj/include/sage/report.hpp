#pragma once

// Benchmark reports: five category scores per subject, the overall mean, and
// JSON / plain-table rendering. Wall-clock data never enters report.json; it
// goes to a sidecar so identical runs give identical bytes.

#include <sage/error.hpp>

#include <json.hpp>

#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace sage {

inline constexpr int kReportSchemaVersion = 1;

inline constexpr std::array<std::string_view, 5> kCategories = {"human_preference", "robustness", "sensitivity",
                                                                 "clustering", "retrieval"};

inline bool is_category(std::string_view name) {
    for (auto c : kCategories)
        if (c == name) return true;
    return false;
}

inline std::string_view parse_category(std::string_view name) {
    for (auto c : kCategories)
        if (c == name) return c;
    throw ConfigError("tasks: unknown task '" + std::string(name) + "'");
}

/// Unweighted mean of exactly the five categories.
inline double aggregate(const std::map<std::string, double>& scores) {
    for (auto c : kCategories)
        if (!scores.count(std::string(c))) throw InputError("aggregate: missing category '" + std::string(c) + "'");
    if (scores.size() != kCategories.size()) throw InputError("aggregate: unexpected extra categories");
    double s = 0;
    for (const auto& [name, v] : scores) s += v;
    return s / static_cast<double>(kCategories.size());
}

struct BenchmarkReport {
    std::string subject_id;
    std::map<std::string, double> category_scores;
    std::optional<double> overall;
    nlohmann::json details = nlohmann::json::object();   // per-task breakdowns
    nlohmann::json metadata = nlohmann::json::object();  // seed, datasets, tokenizer, skip counts

    /// Sets `overall` only when all five categories are present.
    void finalize() {
        overall.reset();
        for (const auto& [name, v] : category_scores) {
            if (!is_category(name)) throw InputError("report: unknown category '" + name + "'");
            if (!(v >= 0.0 && v <= 1.0)) throw InputError("report: category '" + name + "' outside [0, 1]");
        }
        if (category_scores.size() == kCategories.size()) overall = aggregate(category_scores);
    }

    bool operator==(const BenchmarkReport&) const = default;
};

inline nlohmann::json to_json(const BenchmarkReport& r) {
    nlohmann::json j;
    j["subject"] = r.subject_id;
    j["categories"] = r.category_scores;
    if (r.overall) j["overall"] = *r.overall;
    j["details"] = r.details;
    j["metadata"] = r.metadata;
    return j;
}

inline BenchmarkReport report_from_json(const nlohmann::json& j) {
    try {
        BenchmarkReport r;
        r.subject_id = j.at("subject").get<std::string>();
        r.category_scores = j.at("categories").get<std::map<std::string, double>>();
        if (j.contains("overall")) r.overall = j.at("overall").get<double>();
        r.details = j.value("details", nlohmann::json::object());
        r.metadata = j.value("metadata", nlohmann::json::object());
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("report: ") + e.what());
    }
}

inline std::string reports_to_json(const std::vector<BenchmarkReport>& reports) {
    nlohmann::json doc;
    doc["schema_version"] = kReportSchemaVersion;
    doc["reports"] = nlohmann::json::array();
    for (const auto& r : reports) doc["reports"].push_back(to_json(r));
    return doc.dump(2) + "\n";
}

inline std::vector<BenchmarkReport> reports_from_json(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("report: ") + e.what());
    }
    if (!doc.is_object() || doc.value("schema_version", 0) != kReportSchemaVersion)
        throw ParseError("report: unsupported schema_version");
    std::vector<BenchmarkReport> out;
    for (const auto& j : doc.at("reports")) out.push_back(report_from_json(j));
    return out;
}

inline std::string fixed3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

/// One row per subject: the five categories then the overall score, rounded
/// to three decimals. Missing values print as "-".
inline std::string reports_to_table(const std::vector<BenchmarkReport>& reports) {
    std::vector<std::string> header{"subject"};
    for (auto c : kCategories) header.emplace_back(c);
    header.emplace_back("overall");

    std::vector<std::vector<std::string>> rows{header};
    for (const auto& r : reports) {
        std::vector<std::string> row{r.subject_id};
        for (auto c : kCategories) {
            const auto it = r.category_scores.find(std::string(c));
            row.push_back(it == r.category_scores.end() ? "-" : fixed3(it->second));
        }
        row.push_back(r.overall ? fixed3(*r.overall) : "-");
        rows.push_back(std::move(row));
    }
    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& row : rows)
        for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());

    std::ostringstream out;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t i = 0; i < rows[r].size(); ++i) {
            const auto& cell = rows[r][i];
            const std::string pad(width[i] - cell.size(), ' ');
            if (i) out << "  ";
            out << (i == 0 ? cell + pad : pad + cell);  // numbers right-aligned
        }
        out << '\n';
        if (r == 0) {
            for (std::size_t i = 0; i < width.size(); ++i) out << (i ? "  " : "") << std::string(width[i], '-');
            out << '\n';
        }
    }
    return out.str();
}

inline std::string emit_reports(const std::vector<BenchmarkReport>& reports, std::string_view format) {
    if (format == "json") return reports_to_json(reports);
    if (format == "table") return reports_to_table(reports);
    throw InputError("unknown report format '" + std::string(format) + "' (expected json or table)");
}

}  // namespace sage
