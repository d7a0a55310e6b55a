#pragma once

// Mixed-type association measures (Spearman, point-biserial, phik) and the
// feature distance matrix built from them.

#include "dataset.hpp"
#include "normal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace lmigtd {

struct Association {
    double value = 0.0;
    bool degenerate = false;
};

enum class AssocKind : std::uint8_t { SPC, PBC, PHIK };

inline std::string_view to_string(AssocKind k)
{
    switch (k) {
    case AssocKind::SPC: return "SPC";
    case AssocKind::PBC: return "PBC";
    case AssocKind::PHIK: return "PHIK";
    }
    return "?";
}

/// Numerical-numerical pairs use Spearman, binary-numerical pairs use
/// point-biserial, everything else (any categorical side, binary-binary)
/// uses phik.
constexpr AssocKind dispatch(FeatureKind a, FeatureKind b)
{
    using K = FeatureKind;
    if (a == K::Numerical && b == K::Numerical)
        return AssocKind::SPC;
    if ((a == K::Binary && b == K::Numerical) || (a == K::Numerical && b == K::Binary))
        return AssocKind::PBC;
    return AssocKind::PHIK;
}

/// 1-based ranks, ties receive the average of the ranks they span.
inline std::vector<double> fractional_ranks(std::span<const double> x)
{
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]])
            ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k)
            ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

inline Association pearson(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size())
        throw std::invalid_argument("pearson: length mismatch");
    if (x.size() < 2)
        throw std::invalid_argument("pearson: need at least two observations");
    const auto n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0)
        return {0.0, true};
    return {std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0), false};
}

inline Association spearman(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size())
        throw std::invalid_argument("spearman: length mismatch");
    const auto rx = fractional_ranks(x);
    const auto ry = fractional_ranks(y);
    return pearson(rx, ry);
}

/// Point-biserial correlation of a two-valued column `g` (lower value coded
/// 0, higher coded 1) with a numeric column `y`.
inline Association point_biserial(std::span<const double> g, std::span<const double> y)
{
    if (g.size() != y.size())
        throw std::invalid_argument("point_biserial: length mismatch");
    if (g.size() < 2)
        throw std::invalid_argument("point_biserial: need at least two observations");
    const auto [lo_it, hi_it] = std::minmax_element(g.begin(), g.end());
    const double lo = *lo_it, hi = *hi_it;
    if (lo == hi)
        return {0.0, true};
    double sum1 = 0.0, sum0 = 0.0;
    std::size_t n1 = 0, n0 = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g[i] == hi) {
            sum1 += y[i];
            ++n1;
        } else if (g[i] == lo) {
            sum0 += y[i];
            ++n0;
        } else {
            throw std::invalid_argument("point_biserial: grouping column has more than two values");
        }
    }
    const auto n = static_cast<double>(g.size());
    const double mean = (sum1 + sum0) / n;
    double ss = 0.0;
    for (double v : y)
        ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / n);
    if (sd <= 0.0)
        return {0.0, true};
    const double p = static_cast<double>(n1) / n;
    const double q = static_cast<double>(n0) / n;
    const double r = (sum1 / static_cast<double>(n1) - sum0 / static_cast<double>(n0)) / sd * std::sqrt(p * q);
    return {std::clamp(r, -1.0, 1.0), false};
}

// ---------------------------------------------------------------------------
// phik

namespace phik_detail {

/// Bin labels 0..B-1 from quantile edges. Inner edges sit at the k/n_bins
/// quantiles (linear interpolation between order statistics); duplicate
/// edges are merged and empty bins dropped. A value equal to an edge falls
/// in the upper bin.
inline std::vector<int> quantile_bins(std::span<const double> x, std::size_t n_bins)
{
    std::vector<double> sorted(x.begin(), x.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    std::vector<double> edges;
    for (std::size_t k = 1; k < n_bins; ++k) {
        const double pos = static_cast<double>(k) / static_cast<double>(n_bins) * static_cast<double>(n - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, n - 1);
        const double frac = pos - static_cast<double>(lo);
        edges.push_back(sorted[lo] + frac * (sorted[hi] - sorted[lo]));
    }
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    std::vector<int> raw(n);
    for (std::size_t i = 0; i < n; ++i)
        raw[i] = static_cast<int>(std::upper_bound(edges.begin(), edges.end(), x[i]) - edges.begin());
    // Compact to occupied bins.
    std::vector<int> used(edges.size() + 1, -1);
    for (int b : raw)
        used[static_cast<std::size_t>(b)] = 0;
    int next = 0;
    for (int& u : used)
        if (u == 0)
            u = next++;
    for (int& b : raw)
        b = used[static_cast<std::size_t>(b)];
    return raw;
}

/// Labels 0..L-1 by ascending distinct value.
inline std::vector<int> category_codes(std::span<const double> x)
{
    std::vector<double> distinct(x.begin(), x.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<int> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = static_cast<int>(std::lower_bound(distinct.begin(), distinct.end(), x[i]) - distinct.begin());
    return out;
}

inline std::vector<int> discretize(std::span<const double> x, FeatureKind kind, std::size_t n_bins)
{
    return kind == FeatureKind::Numerical ? quantile_bins(x, n_bins) : category_codes(x);
}

/// Latent thresholds for `bins` equiprobable bins of a standard normal,
/// including the two infinite ends.
inline std::vector<double> latent_edges(std::size_t bins)
{
    std::vector<double> e(bins + 1);
    e.front() = -std::numeric_limits<double>::infinity();
    e.back() = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < bins; ++k)
        e[k] = normal::quantile(static_cast<double>(k) / static_cast<double>(bins));
    return e;
}

/// Chi-square per sample of a bivariate normal with correlation rho
/// discretized on an r x c equiprobable grid.
inline double chi2_per_sample(double rho, std::size_t r, std::size_t c)
{
    const double pr = 1.0 / static_cast<double>(r);
    const double pc = 1.0 / static_cast<double>(c);
    std::vector<double> F((r + 1) * (c + 1));
    if (rho >= 1.0) {
        // Perfect dependence: cell mass is the overlap of the two marginal
        // probability intervals.
        double acc = 0.0;
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) {
                const double lo = std::max(i * pr, j * pc);
                const double hi = std::min((i + 1) * pr, (j + 1) * pc);
                const double p = std::max(0.0, hi - lo);
                acc += p * p / (pr * pc);
            }
        return acc - 1.0;
    }
    const auto ex = latent_edges(r);
    const auto ey = latent_edges(c);
    for (std::size_t i = 0; i <= r; ++i)
        for (std::size_t j = 0; j <= c; ++j)
            F[i * (c + 1) + j] = normal::bivariate_cdf(ex[i], ey[j], rho);
    double acc = 0.0;
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) {
            const double p = F[(i + 1) * (c + 1) + j + 1] - F[i * (c + 1) + j + 1] - F[(i + 1) * (c + 1) + j] +
                             F[i * (c + 1) + j];
            const double e = pr * pc;
            acc += (p - e) * (p - e) / e;
        }
    return acc;
}

} // namespace phik_detail

/// Pearson chi-square of the contingency table of two label columns.
/// Returns {chi2, rows, cols} over occupied rows/columns.
struct Contingency {
    double chi2 = 0.0;
    std::size_t rows = 0;
    std::size_t cols = 0;
};

inline Contingency contingency_chi2(std::span<const int> a, std::span<const int> b)
{
    const auto ra = static_cast<std::size_t>(*std::max_element(a.begin(), a.end())) + 1;
    const auto cb = static_cast<std::size_t>(*std::max_element(b.begin(), b.end())) + 1;
    std::vector<double> table(ra * cb, 0.0), row(ra, 0.0), col(cb, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        table[static_cast<std::size_t>(a[i]) * cb + static_cast<std::size_t>(b[i])] += 1.0;
        row[static_cast<std::size_t>(a[i])] += 1.0;
        col[static_cast<std::size_t>(b[i])] += 1.0;
    }
    const auto n = static_cast<double>(a.size());
    Contingency out;
    for (std::size_t i = 0; i < ra; ++i) {
        if (row[i] == 0.0)
            continue;
        for (std::size_t j = 0; j < cb; ++j) {
            if (col[j] == 0.0)
                continue;
            const double e = row[i] * col[j] / n;
            const double d = table[i * cb + j] - e;
            out.chi2 += d * d / e;
        }
    }
    out.rows = static_cast<std::size_t>(std::count_if(row.begin(), row.end(), [](double v) { return v > 0.0; }));
    out.cols = static_cast<std::size_t>(std::count_if(col.begin(), col.end(), [](double v) { return v > 0.0; }));
    return out;
}

/// Maps an observed chi-square on an r x c table of n samples to the
/// correlation of a latent bivariate normal. The dof pedestal is removed
/// from the observation; the model curve runs from the pedestal at rho = 0
/// to its rho = 1 maximum, and the crossing is located by bisection.
inline double phik_from_chi2(double chi2, double n, std::size_t r, std::size_t c, double tolerance = 1e-12)
{
    const double pedestal = static_cast<double>((r - 1) * (c - 1));
    if (chi2 <= pedestal)
        return 0.0;
    const double chi2_max = n * phik_detail::chi2_per_sample(1.0, r, c);
    if (chi2 >= chi2_max)
        return 1.0;
    if (chi2_max <= pedestal)
        return 0.0;
    const double scale = 1.0 - pedestal / chi2_max;
    const double target = (chi2 - pedestal) / scale;
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200 && hi - lo > tolerance; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (n * phik_detail::chi2_per_sample(mid, r, c) < target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

/// phik association in [0, 1]. Numerical columns are cut into `n_bins`
/// quantile bins; discrete columns use their distinct values.
inline Association phik(std::span<const double> a, std::span<const double> b, FeatureKind kind_a, FeatureKind kind_b,
                        std::size_t n_bins = 10)
{
    if (a.size() != b.size())
        throw std::invalid_argument("phik: length mismatch");
    if (a.size() < 2)
        throw std::invalid_argument("phik: need at least two observations");
    const auto la = phik_detail::discretize(a, kind_a, n_bins);
    const auto lb = phik_detail::discretize(b, kind_b, n_bins);
    const auto t = contingency_chi2(la, lb);
    if (t.rows < 2 || t.cols < 2)
        return {0.0, true};
    return {phik_from_chi2(t.chi2, static_cast<double>(a.size()), t.rows, t.cols), false};
}

/// Association between two typed columns under the dispatch rule.
inline Association associate(std::span<const double> a, FeatureKind kind_a, std::span<const double> b,
                             FeatureKind kind_b)
{
    switch (dispatch(kind_a, kind_b)) {
    case AssocKind::SPC: return spearman(a, b);
    case AssocKind::PBC: return kind_a == FeatureKind::Binary ? point_biserial(a, b) : point_biserial(b, a);
    case AssocKind::PHIK: return phik(a, b, kind_a, kind_b);
    }
    return {};
}

// ---------------------------------------------------------------------------
// Matrices

/// Pairwise associations over the features of a dataset.
struct CorrelationMatrix {
    std::vector<std::string> names;
    std::vector<double> value;
    std::vector<AssocKind> kind;
    std::vector<std::uint8_t> degenerate;

    std::size_t size() const { return names.size(); }
    double operator()(std::size_t i, std::size_t j) const { return value[i * size() + j]; }
    AssocKind kind_at(std::size_t i, std::size_t j) const { return kind[i * size() + j]; }
    bool degenerate_at(std::size_t i, std::size_t j) const { return degenerate[i * size() + j] != 0; }
};

/// Symmetric dissimilarities d = 1 - |assoc|; degenerate pairs get 1.
struct DistanceMatrix {
    std::size_t n = 0;
    std::vector<double> d;
    std::vector<AssocKind> kind;

    double operator()(std::size_t i, std::size_t j) const { return d[i * n + j]; }
};

inline CorrelationMatrix correlation_matrix(const TypedDataset& ds)
{
    const std::size_t m = ds.n_features();
    CorrelationMatrix cm;
    for (const auto& f : ds.features)
        cm.names.push_back(f.name);
    cm.value.assign(m * m, 0.0);
    cm.kind.assign(m * m, AssocKind::SPC);
    cm.degenerate.assign(m * m, 0);
    for (std::size_t i = 0; i < m; ++i) {
        const auto& fi = ds.features[i];
        cm.kind[i * m + i] = dispatch(fi.kind, fi.kind);
        const bool constant = std::all_of(fi.values.begin(), fi.values.end(),
                                          [&](double v) { return v == fi.values.front(); });
        cm.value[i * m + i] = constant ? 0.0 : 1.0;
        cm.degenerate[i * m + i] = constant ? 1 : 0;
        for (std::size_t j = i + 1; j < m; ++j) {
            const auto& fj = ds.features[j];
            const auto a = associate(fi.values, fi.kind, fj.values, fj.kind);
            const auto k = dispatch(fi.kind, fj.kind);
            cm.value[i * m + j] = cm.value[j * m + i] = a.value;
            cm.kind[i * m + j] = cm.kind[j * m + i] = k;
            cm.degenerate[i * m + j] = cm.degenerate[j * m + i] = a.degenerate ? 1 : 0;
        }
    }
    return cm;
}

inline DistanceMatrix to_distance(const CorrelationMatrix& cm)
{
    const std::size_t m = cm.size();
    DistanceMatrix dm;
    dm.n = m;
    dm.kind = cm.kind;
    dm.d.assign(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            if (i == j)
                continue;
            dm.d[i * m + j] = cm.degenerate_at(i, j) ? 1.0 : 1.0 - std::abs(cm(i, j));
        }
    return dm;
}

inline DistanceMatrix distance_matrix(const TypedDataset& ds)
{
    if (ds.n_features() < 2)
        throw std::invalid_argument("distance matrix needs at least two features");
    return to_distance(correlation_matrix(ds));
}

inline void write_matrix_csv(std::ostream& os, const std::vector<std::string>& names, std::span<const double> values)
{
    const std::size_t m = names.size();
    std::vector<std::string> row{"feature"};
    row.insert(row.end(), names.begin(), names.end());
    text::write_csv_row(os, row);
    for (std::size_t i = 0; i < m; ++i) {
        row.assign(1, names[i]);
        for (std::size_t j = 0; j < m; ++j)
            row.push_back(text::format_double(values[i * m + j]));
        text::write_csv_row(os, row);
    }
}

} // namespace lmigtd
