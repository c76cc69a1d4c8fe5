#pragma once

// Clustering: complete-linkage agglomerative clustering on a subject's
// distance matrix, scored against ground truth with V-measure.

#include <sage/datasets.hpp>
#include <sage/parallel.hpp>
#include <sage/rng.hpp>
#include <sage/subject.hpp>
#include <sage/tasks/robustness.hpp>

#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

namespace sage {

/// Bottom-up complete linkage down to k clusters. Ties go to the smallest
/// (i, j), where a cluster is named by its smallest member index. Labels are
/// numbered by first appearance.
inline std::vector<int> agglomerative_complete(const DistanceMatrix& dist, std::size_t k) {
    const std::size_t n = dist.size();
    if (k < 1 || k > n) throw InputError("agglomerative_complete: k must be in [1, " + std::to_string(n) + "]");

    std::vector<double> d(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) d[i * n + j] = dist.at(i, j);
    std::vector<std::size_t> owner(n);  // item -> representative
    std::iota(owner.begin(), owner.end(), 0);
    std::vector<bool> active(n, true);

    // Row cache: nearest active j > i.
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> row_min(n, kInf);
    std::vector<std::size_t> row_arg(n, n);
    auto refresh = [&](std::size_t i) {
        row_min[i] = kInf;
        row_arg[i] = n;
        for (std::size_t j = i + 1; j < n; ++j)
            if (active[j] && d[i * n + j] < row_min[i]) {
                row_min[i] = d[i * n + j];
                row_arg[i] = j;
            }
    };
    for (std::size_t i = 0; i < n; ++i) refresh(i);

    for (std::size_t clusters = n; clusters > k; --clusters) {
        std::size_t bi = n;
        for (std::size_t i = 0; i < n; ++i)
            if (active[i] && row_arg[i] < n && (bi == n || row_min[i] < row_min[bi])) bi = i;
        const std::size_t a = bi, b = row_arg[bi];
        active[b] = false;
        for (std::size_t x = 0; x < n; ++x) {
            const double m = std::max(d[a * n + x], d[b * n + x]);
            d[a * n + x] = m;
            d[x * n + a] = m;
        }
        for (std::size_t x = 0; x < n; ++x)
            if (owner[x] == b) owner[x] = a;
        // Rows whose cached neighbour was a or b may now point elsewhere.
        for (std::size_t x = 0; x < n; ++x)
            if (active[x] && (x == a || row_arg[x] == a || row_arg[x] == b)) refresh(x);
    }

    std::vector<int> labels(n);
    std::map<std::size_t, int> names;
    for (std::size_t i = 0; i < n; ++i) {
        auto [it, fresh] = names.try_emplace(owner[i], static_cast<int>(names.size()));
        labels[i] = it->second;
    }
    return labels;
}

struct VMeasure {
    double homogeneity = 0;
    double completeness = 0;
    double v = 0;
};

/// Natural-log entropies; a constant truth gives homogeneity 1, a single
/// predicted cluster gives completeness 1.
template <typename P, typename T>
VMeasure v_measure(const std::vector<P>& predicted, const std::vector<T>& truth) {
    if (predicted.size() != truth.size()) throw InputError("v_measure: length mismatch");
    if (predicted.empty()) throw InputError("v_measure: no items");
    const double n = static_cast<double>(predicted.size());
    std::map<P, double> nk;
    std::map<T, double> nc;
    std::map<std::pair<P, T>, double> nck;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        nk[predicted[i]] += 1;
        nc[truth[i]] += 1;
        nck[{predicted[i], truth[i]}] += 1;
    }
    auto entropy = [n](const auto& counts) {
        double h = 0;
        for (const auto& [key, c] : counts) h -= c / n * std::log(c / n);
        return h;
    };
    const double hc = entropy(nc), hk = entropy(nk);
    double hc_given_k = 0, hk_given_c = 0;
    for (const auto& [key, c] : nck) {
        hc_given_k -= c / n * std::log(c / nk.at(key.first));
        hk_given_c -= c / n * std::log(c / nc.at(key.second));
    }
    VMeasure m;
    m.homogeneity = hc == 0.0 ? 1.0 : std::clamp(1.0 - hc_given_k / hc, 0.0, 1.0);
    m.completeness = hk == 0.0 ? 1.0 : std::clamp(1.0 - hk_given_c / hk, 0.0, 1.0);
    const double s = m.homogeneity + m.completeness;
    m.v = s == 0.0 ? 0.0 : 2.0 * m.homogeneity * m.completeness / s;
    return m;
}

inline constexpr std::size_t kDefaultClusteringCap = 2000;

struct NamedSets {
    std::string name;
    std::vector<ClusteringSet> sets;
};

struct ClusteringSetResult {
    std::string set_id;
    std::size_t n = 0;  // after subsampling
    std::size_t k = 0;
    VMeasure score;
    bool subsampled = false;
};

struct ClusteringDatasetResult {
    std::string name;
    std::vector<ClusteringSetResult> sets;
    double score = 0;
};

struct ClusteringResult {
    std::vector<ClusteringDatasetResult> datasets;
    std::vector<std::string> notices;
    double category_score = 0;
};

inline ClusteringSetResult cluster_set(const Subject& subject, const ClusteringSet& set, std::size_t cap,
                                       std::uint64_t seed) {
    if (set.texts.size() != set.labels.size()) throw DatasetError("clustering: set '" + set.set_id + "' is ragged");
    ClusteringSetResult r;
    r.set_id = set.set_id;
    std::vector<std::string> texts = set.texts, labels = set.labels;
    if (texts.size() > cap) {
        std::vector<std::size_t> idx(texts.size());
        std::iota(idx.begin(), idx.end(), 0);
        idx = sample(idx, cap, derive_seed(seed, set.set_id, "subsample"));
        texts.clear();
        labels.clear();
        for (auto i : idx) {
            texts.push_back(set.texts[i]);
            labels.push_back(set.labels[i]);
        }
        r.subsampled = true;
    }
    r.n = texts.size();
    r.k = std::set<std::string>(labels.begin(), labels.end()).size();
    if (r.n < 2) throw DatasetError("clustering: set '" + set.set_id + "' has fewer than 2 items");
    const auto dm = subject.distance_matrix(texts);
    r.score = v_measure(agglomerative_complete(dm, r.k), labels);
    return r;
}

inline ClusteringResult run_clustering(const Subject& subject, const std::vector<NamedSets>& datasets,
                                       std::uint64_t seed, std::size_t cap = kDefaultClusteringCap,
                                       std::size_t jobs = 1) {
    if (datasets.empty()) throw DatasetError("clustering: no datasets");
    if (cap < 2) throw ConfigError("clustering.max_items must be >= 2");
    ClusteringResult result;
    std::vector<double> scores;
    for (const auto& ds : datasets) {
        if (ds.sets.empty()) throw DatasetError("clustering: dataset '" + ds.name + "' has no sets");
        ClusteringDatasetResult d;
        d.name = ds.name;
        d.sets.resize(ds.sets.size());
        parallel_for(ds.sets.size(), jobs, [&](std::size_t i) { d.sets[i] = cluster_set(subject, ds.sets[i], cap, seed); });
        std::vector<double> vs;
        for (const auto& s : d.sets) {
            vs.push_back(s.score.v);
            if (s.subsampled)
                result.notices.push_back("clustering: set '" + s.set_id + "' subsampled to " + std::to_string(s.n) +
                                         " items");
        }
        d.score = mean_of(vs);
        scores.push_back(d.score);
        result.datasets.push_back(std::move(d));
    }
    result.category_score = mean_of(scores);
    return result;
}

}  // namespace sage
