#pragma once

// Filter feature importance: ReliefF, mRMR and their resampled ensemble.

#include "correlation.hpp"
#include "dataset.hpp"
#include "random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lmigtd {

enum class ImportanceMethod { ReliefF, MRMR, Ensemble };

inline std::string_view to_string(ImportanceMethod m)
{
    switch (m) {
    case ImportanceMethod::ReliefF: return "relieff";
    case ImportanceMethod::MRMR: return "mrmr";
    case ImportanceMethod::Ensemble: return "ensemble";
    }
    return "?";
}

struct ImportanceVector {
    ImportanceMethod method = ImportanceMethod::ReliefF;
    std::vector<std::string> names;
    std::vector<double> score;
    std::vector<double> normalized;
};

/// Shifts scores so the smallest is non-negative (only when some score is
/// negative) and rescales to unit sum. All-zero scores become uniform.
inline std::vector<double> normalize_scores(std::span<const double> score)
{
    std::vector<double> w(score.begin(), score.end());
    if (w.empty())
        return w;
    const double lo = *std::min_element(w.begin(), w.end());
    if (lo < 0.0)
        for (double& v : w)
            v -= lo;
    const double sum = std::accumulate(w.begin(), w.end(), 0.0);
    if (!(sum > 0.0)) {
        std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(w.size()));
        return w;
    }
    for (double& v : w)
        v /= sum;
    return w;
}

namespace featsel_detail {

inline double diff(const Feature& f, std::size_t a, std::size_t b)
{
    if (f.kind == FeatureKind::Numerical)
        return std::abs(f.values[a] - f.values[b]);
    return f.values[a] == f.values[b] ? 0.0 : 1.0;
}

inline std::vector<std::string> names_of(const TypedDataset& ds)
{
    std::vector<std::string> out;
    for (const auto& f : ds.features)
        out.push_back(f.name);
    return out;
}

} // namespace featsel_detail

/// Multiclass ReliefF over all samples with k nearest hits and k nearest
/// misses from every other class, misses weighted by class prior. Expects a
/// normalized dataset. Equal distances are ordered by a seeded random key.
inline ImportanceVector relieff(const TypedDataset& ds, std::size_t k_neighbors, std::uint64_t seed)
{
    const std::size_t n = ds.n_samples();
    const std::size_t m = ds.n_features();
    const auto counts = ds.class_counts();
    if (k_neighbors < 1)
        throw std::invalid_argument("relieff: k_neighbors must be at least 1");
    for (std::size_t c = 0; c < counts.size(); ++c)
        if (counts[c] < k_neighbors + 1)
            throw std::invalid_argument("relieff: class '" + ds.class_names[c] + "' has " +
                                        std::to_string(counts[c]) + " samples, need at least " +
                                        std::to_string(k_neighbors + 1));

    auto rng = make_engine(seed, {stream::relieff});
    std::vector<std::uint64_t> tiebreak(n);
    for (auto& t : tiebreak)
        t = rng();

    std::vector<double> dist(n * n, 0.0);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) {
            double s = 0.0;
            for (const auto& f : ds.features)
                s += featsel_detail::diff(f, a, b);
            dist[a * n + b] = dist[b * n + a] = s;
        }

    std::vector<double> prior(counts.size());
    for (std::size_t c = 0; c < counts.size(); ++c)
        prior[c] = static_cast<double>(counts[c]) / static_cast<double>(n);

    std::vector<double> w(m, 0.0);
    const double norm = static_cast<double>(n) * static_cast<double>(k_neighbors);
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < n; ++i) {
        const auto ci = static_cast<std::size_t>(ds.labels[i]);
        for (std::size_t c = 0; c < counts.size(); ++c) {
            members.clear();
            for (std::size_t j = 0; j < n; ++j)
                if (j != i && static_cast<std::size_t>(ds.labels[j]) == c)
                    members.push_back(j);
            const std::size_t take = std::min(k_neighbors, members.size());
            std::partial_sort(members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take), members.end(),
                              [&](std::size_t a, std::size_t b) {
                                  const double da = dist[i * n + a], db = dist[i * n + b];
                                  if (da != db)
                                      return da < db;
                                  return tiebreak[a] < tiebreak[b];
                              });
            const double factor = c == ci ? -1.0 : prior[c] / (1.0 - prior[ci]);
            for (std::size_t t = 0; t < take; ++t)
                for (std::size_t f = 0; f < m; ++f)
                    w[f] += factor * featsel_detail::diff(ds.features[f], i, members[t]) / norm;
        }
    }
    ImportanceVector iv;
    iv.method = ImportanceMethod::ReliefF;
    iv.names = featsel_detail::names_of(ds);
    iv.score = w;
    iv.normalized = normalize_scores(w);
    return iv;
}

/// Mutual information (nats) between two label columns.
inline double mutual_information(std::span<const int> a, std::span<const int> b)
{
    const auto ra = static_cast<std::size_t>(*std::max_element(a.begin(), a.end())) + 1;
    const auto cb = static_cast<std::size_t>(*std::max_element(b.begin(), b.end())) + 1;
    std::vector<double> joint(ra * cb, 0.0), pa(ra, 0.0), pb(cb, 0.0);
    const auto n = static_cast<double>(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        joint[static_cast<std::size_t>(a[i]) * cb + static_cast<std::size_t>(b[i])] += 1.0 / n;
        pa[static_cast<std::size_t>(a[i])] += 1.0 / n;
        pb[static_cast<std::size_t>(b[i])] += 1.0 / n;
    }
    double mi = 0.0;
    for (std::size_t i = 0; i < ra; ++i)
        for (std::size_t j = 0; j < cb; ++j) {
            const double p = joint[i * cb + j];
            if (p > 0.0)
                mi += p * std::log(p / (pa[i] * pb[j]));
        }
    return std::max(0.0, mi);
}

/// Greedy mRMR with the difference criterion: relevance MI(f; label) minus
/// mean MI(f; already selected). Numerical features are cut into 5 quantile
/// bins. Score is select_k - selection rank; unselected features score 0.
inline ImportanceVector mrmr(const TypedDataset& ds, std::size_t select_k)
{
    const std::size_t m = ds.n_features();
    if (select_k > m)
        throw std::invalid_argument("mrmr: select_k exceeds feature count");
    std::vector<std::vector<int>> disc(m);
    for (std::size_t f = 0; f < m; ++f)
        disc[f] = phik_detail::discretize(ds.features[f].values, ds.features[f].kind, 5);

    std::vector<double> relevance(m);
    for (std::size_t f = 0; f < m; ++f)
        relevance[f] = mutual_information(disc[f], ds.labels);

    std::vector<double> redundancy(m, 0.0);
    std::vector<bool> chosen(m, false);
    std::vector<double> score(m, 0.0);
    for (std::size_t rank = 0; rank < select_k; ++rank) {
        std::size_t best = m;
        double best_val = -std::numeric_limits<double>::infinity();
        for (std::size_t f = 0; f < m; ++f) {
            if (chosen[f])
                continue;
            const double val = relevance[f] - (rank ? redundancy[f] / static_cast<double>(rank) : 0.0);
            if (val > best_val) {
                best_val = val;
                best = f;
            }
        }
        chosen[best] = true;
        score[best] = static_cast<double>(select_k - rank);
        for (std::size_t f = 0; f < m; ++f)
            if (!chosen[f])
                redundancy[f] += mutual_information(disc[f], disc[best]);
    }
    ImportanceVector iv;
    iv.method = ImportanceMethod::MRMR;
    iv.names = featsel_detail::names_of(ds);
    iv.score = score;
    iv.normalized = normalize_scores(score);
    return iv;
}

struct EnsembleResult {
    ImportanceVector importance;
    /// Per-round base vectors, ReliefF then mRMR for each round.
    std::vector<ImportanceVector> base;
};

struct EnsembleOptions {
    std::size_t rounds = 10;
    double subsample = 0.8;
    std::size_t k_neighbors = 10;
};

/// Mean of normalized ReliefF and mRMR scores over stratified subsamples.
/// The ReliefF neighbour count is capped at (smallest subsampled class - 1).
inline EnsembleResult ensemble_importance(const TypedDataset& ds, const EnsembleOptions& opts, std::uint64_t seed)
{
    if (opts.rounds < 1)
        throw std::invalid_argument("ensemble_importance: rounds must be at least 1");
    if (!(opts.subsample > 0.0 && opts.subsample <= 1.0))
        throw std::invalid_argument("ensemble_importance: subsample must lie in (0, 1]");
    const std::size_t m = ds.n_features();
    const std::size_t select_k = (m + 1) / 2;
    EnsembleResult out;
    std::vector<double> mean(m, 0.0);
    for (std::size_t r = 0; r < opts.rounds; ++r) {
        std::vector<std::size_t> rows;
        for (std::size_t c = 0; c < ds.n_classes(); ++c) {
            std::vector<std::size_t> members;
            for (std::size_t i = 0; i < ds.n_samples(); ++i)
                if (ds.labels[i] == static_cast<int>(c))
                    members.push_back(i);
            auto rng = make_engine(seed, {stream::ensemble, r, c});
            std::shuffle(members.begin(), members.end(), rng);
            const auto keep = std::max<std::size_t>(
                1, static_cast<std::size_t>(std::llround(opts.subsample * static_cast<double>(members.size()))));
            rows.insert(rows.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(std::min(keep, members.size())));
        }
        std::sort(rows.begin(), rows.end());
        const auto sub = ds.select_rows(rows);
        const auto counts = sub.class_counts();
        const std::size_t smallest = *std::min_element(counts.begin(), counts.end());
        const std::size_t k = std::min(opts.k_neighbors, smallest > 0 ? smallest - 1 : 0);
        auto rf = relieff(sub, k, derive_seed(seed, {stream::ensemble, r, 0xffff}));
        auto mr = mrmr(sub, select_k);
        for (std::size_t f = 0; f < m; ++f)
            mean[f] += rf.normalized[f] + mr.normalized[f];
        out.base.push_back(std::move(rf));
        out.base.push_back(std::move(mr));
    }
    for (double& v : mean)
        v /= static_cast<double>(2 * opts.rounds);
    out.importance.method = ImportanceMethod::Ensemble;
    out.importance.names = featsel_detail::names_of(ds);
    out.importance.score = mean;
    out.importance.normalized = normalize_scores(mean);
    return out;
}

inline void write_importance_csv(std::ostream& os, const ImportanceVector& iv)
{
    text::write_csv_row(os, {"feature", "raw_score", "normalized_weight", "method"});
    for (std::size_t f = 0; f < iv.names.size(); ++f)
        text::write_csv_row(os, {iv.names[f], text::format_double(iv.score[f]), text::format_double(iv.normalized[f]),
                                 std::string(to_string(iv.method))});
}

} // namespace lmigtd
