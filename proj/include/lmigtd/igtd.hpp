#pragma once

// Pixel layout optimization: assign features to grid cells so that the
// ranking of pairwise feature distances matches the ranking of pairwise
// pixel distances, by greedy swaps.

#include "correlation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lmigtd {

struct Grid {
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::size_t cells() const { return rows * cols; }
    std::size_t row_of(std::size_t cell) const { return cell / cols; }
    std::size_t col_of(std::size_t cell) const { return cell % cols; }

    bool operator==(const Grid&) const = default;
};

struct GridChoice {
    Grid grid;
    std::size_t noise_budget = 0;
};

/// Square grid of side `target_side`, or by default
/// max(ceil(sqrt(2 n)), 8), so about half the cells hold noisy features.
inline GridChoice choose_grid(std::size_t n_original, std::optional<std::size_t> target_side = std::nullopt)
{
    if (n_original < 1)
        throw std::invalid_argument("choose_grid: need at least one feature");
    std::size_t side;
    if (target_side) {
        side = *target_side;
    } else {
        side = static_cast<std::size_t>(std::ceil(std::sqrt(2.0 * static_cast<double>(n_original)) - 1e-12));
        while (side * side < 2 * n_original)
            ++side;
        side = std::max<std::size_t>(side, 8);
    }
    if (side * side < n_original)
        throw std::invalid_argument("choose_grid: a " + std::to_string(side) + "x" + std::to_string(side) +
                                    " grid cannot hold " + std::to_string(n_original) + " features");
    return {{side, side}, side * side - n_original};
}

/// Symmetric matrix of pair ranks 1..m(m-1)/2 over the strict upper
/// triangle; the diagonal is 0.
struct RankingMatrix {
    std::size_t n = 0;
    std::vector<double> r;

    double operator()(std::size_t i, std::size_t j) const { return r[i * n + j]; }
};

/// How equal distances are ranked. Lexicographic gives every pair a distinct
/// rank in (i, j) order; Average gives tied pairs their mean rank.
enum class RankTies { Lexicographic, Average };

inline std::string_view to_string(RankTies t) { return t == RankTies::Average ? "average" : "lexicographic"; }

inline RankTies parse_rank_ties(std::string_view s)
{
    if (s == "lexicographic")
        return RankTies::Lexicographic;
    if (s == "average")
        return RankTies::Average;
    throw std::invalid_argument("unknown rank tie rule '" + std::string(s) + "' (expected lexicographic or average)");
}

/// Ranks pairs (i < j) by ascending distance.
inline RankingMatrix rank_matrix(std::span<const double> dist, std::size_t n, RankTies ties = RankTies::Lexicographic)
{
    if (n < 2)
        throw std::invalid_argument("rank_matrix: need at least two elements");
    if (dist.size() != n * n)
        throw std::invalid_argument("rank_matrix: distance matrix has the wrong size");
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            pairs.emplace_back(i, j);
    std::stable_sort(pairs.begin(), pairs.end(), [&](const auto& a, const auto& b) {
        return dist[a.first * n + a.second] < dist[b.first * n + b.second];
    });
    RankingMatrix rm;
    rm.n = n;
    rm.r.assign(n * n, 0.0);
    auto dist_of = [&](std::size_t k) { return dist[pairs[k].first * n + pairs[k].second]; };
    for (std::size_t k = 0; k < pairs.size();) {
        std::size_t end = k + 1;
        if (ties == RankTies::Average)
            while (end < pairs.size() && dist_of(end) == dist_of(k))
                ++end;
        const double rank = 0.5 * static_cast<double>(k + 1 + end);
        for (std::size_t q = k; q < end; ++q) {
            const auto [i, j] = pairs[q];
            rm.r[i * n + j] = rm.r[j * n + i] = rank;
        }
        k = end;
    }
    return rm;
}

/// Euclidean distances between cell coordinates, cells in row-major order.
inline std::vector<double> pixel_distances(const Grid& g)
{
    const std::size_t m = g.cells();
    std::vector<double> d(m * m, 0.0);
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b) {
            const double dr = static_cast<double>(g.row_of(a)) - static_cast<double>(g.row_of(b));
            const double dc = static_cast<double>(g.col_of(a)) - static_cast<double>(g.col_of(b));
            d[a * m + b] = std::sqrt(dr * dr + dc * dc);
        }
    return d;
}

inline RankingMatrix pixel_rank_matrix(const Grid& g, RankTies ties = RankTies::Lexicographic)
{
    return rank_matrix(pixel_distances(g), g.cells(), ties);
}

/// Distance used for padding placeholders; it exceeds every association
/// distance, which lies in [0, 1].
inline constexpr double padding_distance = 2.0;

/// Extends an n x n feature distance matrix to `cells` elements. The extra
/// elements are padding placeholders at maximal distance from everything.
inline std::vector<double> pad_distances(const DistanceMatrix& dm, std::size_t cells)
{
    if (cells < dm.n)
        throw std::invalid_argument("pad_distances: fewer cells than features");
    std::vector<double> d(cells * cells, padding_distance);
    for (std::size_t i = 0; i < cells; ++i)
        d[i * cells + i] = 0.0;
    for (std::size_t i = 0; i < dm.n; ++i)
        for (std::size_t j = 0; j < dm.n; ++j)
            d[i * cells + j] = dm(i, j);
    return d;
}

struct PixelLayout {
    Grid grid;
    std::size_t n_features = 0;
    /// cell_of[e] for every element; elements >= n_features are padding.
    std::vector<std::size_t> cell_of;
    double initial_error = 0.0;
    double final_error = 0.0;
    std::vector<double> error_trace;
    std::size_t swaps = 0;

    std::size_t iterations() const { return error_trace.size(); }

    /// Element in each cell (inverse of cell_of).
    std::vector<std::size_t> element_at() const
    {
        std::vector<std::size_t> out(cell_of.size());
        for (std::size_t e = 0; e < cell_of.size(); ++e)
            out[cell_of[e]] = e;
        return out;
    }

    bool is_padding_element(std::size_t e) const { return e >= n_features; }

    std::vector<std::size_t> padding_cells() const
    {
        std::vector<std::size_t> out;
        for (std::size_t e = n_features; e < cell_of.size(); ++e)
            out.push_back(cell_of[e]);
        std::sort(out.begin(), out.end());
        return out;
    }
};

/// Sum over element pairs i < j of |feat_rank(i,j) - pix_rank(cell(i), cell(j))|.
/// Ranks are integers or half-integers, so the sums are exact in double.
inline double layout_error(const RankingMatrix& feat, const RankingMatrix& pix, std::span<const std::size_t> cell_of)
{
    double e = 0.0;
    for (std::size_t i = 0; i < feat.n; ++i)
        for (std::size_t j = i + 1; j < feat.n; ++j)
            e += std::abs(feat(i, j) - pix(cell_of[i], cell_of[j]));
    return e;
}

struct OptimizeOptions {
    std::size_t max_steps = 30000;
    std::size_t patience = 300;
    RankTies ties = RankTies::Lexicographic;
};

/// Greedy swap search. Starting from the identity layout, each iteration
/// takes the element considered least recently (lowest index on ties),
/// evaluates swapping it with every other element, and applies the swap
/// with the largest error reduction if one exists (lowest partner index on
/// ties). Stops after max_steps iterations or `patience` consecutive
/// iterations without improvement.
inline PixelLayout optimize_layout(const RankingMatrix& feat, const RankingMatrix& pix, const Grid& grid,
                                   std::size_t n_features, const OptimizeOptions& opts = {})
{
    const std::size_t m = feat.n;
    if (pix.n != m || grid.cells() != m)
        throw std::invalid_argument("optimize_layout: ranking matrices and grid disagree on the element count");
    if (n_features > m)
        throw std::invalid_argument("optimize_layout: more features than cells");

    PixelLayout layout;
    layout.grid = grid;
    layout.n_features = n_features;
    layout.cell_of.resize(m);
    std::iota(layout.cell_of.begin(), layout.cell_of.end(), std::size_t{0});
    auto& cell = layout.cell_of;

    double error = layout_error(feat, pix, cell);
    layout.initial_error = error;

    // Change in error from exchanging the cells of elements a and b. The
    // (a, b) term itself is unchanged because pixel ranks are symmetric.
    auto swap_delta = [&](std::size_t a, std::size_t b) {
        const std::size_t ca = cell[a], cb = cell[b];
        double delta = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            if (k == a || k == b)
                continue;
            const std::size_t ck = cell[k];
            const double fa = feat(a, k), fb = feat(b, k);
            delta += std::abs(fa - pix(cb, ck)) + std::abs(fb - pix(ca, ck)) - std::abs(fa - pix(ca, ck)) -
                     std::abs(fb - pix(cb, ck));
        }
        return delta;
    };

    std::vector<std::int64_t> last_considered(m, -1);
    std::size_t idle = 0;
    for (std::size_t step = 0; step < opts.max_steps && idle < opts.patience && m > 1; ++step) {
        const auto e = static_cast<std::size_t>(
            std::min_element(last_considered.begin(), last_considered.end()) - last_considered.begin());
        double best = 0.0;
        std::size_t partner = m;
        for (std::size_t other = 0; other < m; ++other) {
            if (other == e)
                continue;
            const auto d = swap_delta(e, other);
            if (d < best) {
                best = d;
                partner = other;
            }
        }
        if (partner < m) {
            std::swap(cell[e], cell[partner]);
            error += best;
            ++layout.swaps;
            idle = 0;
            last_considered[partner] = static_cast<std::int64_t>(step);
        } else {
            ++idle;
        }
        last_considered[e] = static_cast<std::int64_t>(step);
        layout.error_trace.push_back(error);
    }
    layout.final_error = error;
    return layout;
}

/// Full layout step for a feature distance matrix on a grid.
inline PixelLayout layout_features(const DistanceMatrix& dm, const Grid& grid, const OptimizeOptions& opts = {})
{
    const auto feat = rank_matrix(pad_distances(dm, grid.cells()), grid.cells(), opts.ties);
    const auto pix = pixel_rank_matrix(grid, opts.ties);
    return optimize_layout(feat, pix, grid, dm.n, opts);
}

} // namespace lmigtd
