#pragma once

// Independent reference implementations used only by tests. None of these
// call into the library's numerical code.

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/owens_t.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <vector>

namespace oracle {

/// Average ranks by direct counting: rank = #less + (#equal + 1) / 2.
inline std::vector<long double> brute_ranks(const std::vector<double>& x)
{
    std::vector<long double> r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        std::size_t less = 0, equal = 0;
        for (double v : x) {
            less += v < x[i];
            equal += v == x[i];
        }
        r[i] = static_cast<long double>(less) + (static_cast<long double>(equal) + 1.0L) / 2.0L;
    }
    return r;
}

template <typename T>
long double pearson(const std::vector<T>& x, const std::vector<T>& y)
{
    const auto n = static_cast<long double>(x.size());
    long double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    long double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

inline long double spearman(const std::vector<double>& x, const std::vector<double>& y)
{
    return pearson(brute_ranks(x), brute_ranks(y));
}

/// Pearson correlation after coding the two-valued column as 0/1.
inline long double point_biserial(const std::vector<double>& g, const std::vector<double>& y)
{
    const double hi = *std::max_element(g.begin(), g.end());
    std::vector<long double> code(g.size()), yy(y.begin(), y.end());
    for (std::size_t i = 0; i < g.size(); ++i)
        code[i] = g[i] == hi ? 1.0L : 0.0L;
    return pearson(code, yy);
}

inline double Phi(double x)
{
    if (std::isinf(x))
        return x > 0 ? 1.0 : 0.0;
    return boost::math::cdf(boost::math::normal_distribution<double>(), x);
}

/// Owen's T(h, a) extended to a = +-infinity.
inline double owen_t(double h, double a)
{
    if (std::isinf(a)) {
        const double v = h == 0.0 ? 0.25 : 0.5 * Phi(-std::abs(h));
        return a > 0 ? v : -v;
    }
    return boost::math::owens_t(h, a);
}

/// Bivariate normal CDF via Owen's T function.
inline double bvn(double h, double k, double rho)
{
    if (h == -INFINITY || k == -INFINITY)
        return 0.0;
    if (h == INFINITY)
        return Phi(k);
    if (k == INFINITY)
        return Phi(h);
    if (rho >= 1.0)
        return Phi(std::min(h, k));
    const double s = std::sqrt(1.0 - rho * rho);
    if (h == 0.0 && k == 0.0)
        return 0.25 + std::asin(rho) / (2.0 * std::numbers::pi);
    const double inf = std::numeric_limits<double>::infinity();
    const double ah = h == 0.0 ? ((k - rho * h) >= 0 ? inf : -inf) : (k - rho * h) / (h * s);
    const double ak = k == 0.0 ? ((h - rho * k) >= 0 ? inf : -inf) : (h - rho * k) / (k * s);
    const double beta = (h * k > 0.0 || (h * k == 0.0 && h + k >= 0.0)) ? 0.0 : 0.5;
    return 0.5 * (Phi(h) + Phi(k)) - owen_t(h, ah) - owen_t(k, ak) - beta;
}

/// Quantile bins, numpy "linear" definition, merged duplicate edges, empty
/// bins dropped; equal-to-edge goes up.
inline std::vector<int> quantile_labels(const std::vector<double>& x, int bins)
{
    std::vector<double> s(x);
    std::sort(s.begin(), s.end());
    std::vector<double> edges;
    for (int k = 1; k < bins; ++k) {
        const double h = (static_cast<double>(s.size()) - 1.0) * k / bins;
        const auto f = static_cast<std::size_t>(h);
        const double e = f + 1 < s.size() ? s[f] + (h - f) * (s[f + 1] - s[f]) : s[f];
        if (edges.empty() || edges.back() != e)
            edges.push_back(e);
    }
    std::vector<int> raw(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        int b = 0;
        for (double e : edges)
            b += x[i] >= e;
        raw[i] = b;
    }
    std::vector<int> occupied;
    for (int b : raw)
        occupied.push_back(b);
    std::sort(occupied.begin(), occupied.end());
    occupied.erase(std::unique(occupied.begin(), occupied.end()), occupied.end());
    for (int& b : raw)
        b = static_cast<int>(std::find(occupied.begin(), occupied.end(), b) - occupied.begin());
    return raw;
}

inline std::vector<int> distinct_labels(const std::vector<double>& x)
{
    std::vector<double> d(x);
    std::sort(d.begin(), d.end());
    d.erase(std::unique(d.begin(), d.end()), d.end());
    std::vector<int> out;
    for (double v : x)
        out.push_back(static_cast<int>(std::find(d.begin(), d.end(), v) - d.begin()));
    return out;
}

/// Expected-vs-observed Pearson chi-square; returns {chi2, rows, cols}.
struct Table {
    double chi2;
    int r;
    int c;
};

inline Table chi2_table(const std::vector<int>& a, const std::vector<int>& b)
{
    const int r = *std::max_element(a.begin(), a.end()) + 1;
    const int c = *std::max_element(b.begin(), b.end()) + 1;
    std::vector<std::vector<double>> t(r, std::vector<double>(c, 0.0));
    for (std::size_t i = 0; i < a.size(); ++i)
        t[a[i]][b[i]] += 1;
    const double n = static_cast<double>(a.size());
    double chi2 = 0;
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) {
            double ri = 0, cj = 0;
            for (int jj = 0; jj < c; ++jj)
                ri += t[i][jj];
            for (int ii = 0; ii < r; ++ii)
                cj += t[ii][j];
            const double e = ri * cj / n;
            chi2 += (t[i][j] - e) * (t[i][j] - e) / e;
        }
    return {chi2, r, c};
}

/// Chi-square per sample of a bivariate normal at correlation rho cut on
/// equiprobable r x c thresholds.
inline double model_chi2(double rho, int r, int c)
{
    boost::math::normal_distribution<double> nd;
    std::vector<double> ex(r + 1), ey(c + 1);
    ex[0] = ey[0] = -INFINITY;
    ex[r] = ey[c] = INFINITY;
    for (int i = 1; i < r; ++i)
        ex[i] = boost::math::quantile(nd, static_cast<double>(i) / r);
    for (int j = 1; j < c; ++j)
        ey[j] = boost::math::quantile(nd, static_cast<double>(j) / c);
    double acc = 0;
    const double e = 1.0 / (static_cast<double>(r) * c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) {
            const double p = bvn(ex[i + 1], ey[j + 1], rho) - bvn(ex[i], ey[j + 1], rho) - bvn(ex[i + 1], ey[j], rho) +
                             bvn(ex[i], ey[j], rho);
            acc += (p - e) * (p - e) / e;
        }
    return acc;
}

/// phik by scanning rho on a fine grid to bracket the crossing of the
/// pedestal-corrected model curve, then refining with TOMS 748.
inline double phik(const std::vector<double>& a, bool a_numeric, const std::vector<double>& b, bool b_numeric)
{
    const auto la = a_numeric ? quantile_labels(a, 10) : distinct_labels(a);
    const auto lb = b_numeric ? quantile_labels(b, 10) : distinct_labels(b);
    const auto t = chi2_table(la, lb);
    if (t.r < 2 || t.c < 2)
        return 0.0;
    const double n = static_cast<double>(a.size());
    const double ped = static_cast<double>((t.r - 1) * (t.c - 1));
    if (t.chi2 <= ped)
        return 0.0;
    const double cmax = n * model_chi2(1.0, t.r, t.c);
    if (t.chi2 >= cmax)
        return 1.0;
    const double target = (t.chi2 - ped) / (1.0 - ped / cmax);
    auto f = [&](double rho) { return n * model_chi2(rho, t.r, t.c) - target; };
    const int grid = 200;
    double lo = 0.0, flo = f(0.0);
    for (int g = 1; g <= grid; ++g) {
        const double hi = static_cast<double>(g) / grid;
        const double fhi = g == grid ? n * model_chi2(1.0, t.r, t.c) - target : f(hi);
        if ((flo < 0) != (fhi < 0) || fhi == 0.0) {
            if (fhi == 0.0)
                return hi;
            std::uintmax_t iters = 200;
            const auto root = boost::math::tools::toms748_solve(
                f, lo, hi, flo, fhi, [](double x, double y) { return std::abs(x - y) < 1e-14; }, iters);
            return 0.5 * (root.first + root.second);
        }
        lo = hi;
        flo = fhi;
    }
    return 1.0;
}

/// Exhaustive minimum of the L1 rank mismatch over every assignment of
/// elements to cells. Ranks are given as dense n x n matrices.
inline double best_layout_error(const std::vector<double>& feat, const std::vector<double>& pix, std::size_t n)
{
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    double best = std::numeric_limits<double>::infinity();
    do {
        double e = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                e += std::abs(feat[i * n + j] - pix[perm[i] * n + perm[j]]);
        best = std::min(best, e);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

/// Hamilton apportionment on integer weights with exact integer arithmetic:
/// floor quotas, then one extra seat per largest remainder (lower index on
/// ties).
inline std::vector<std::size_t> hamilton(const std::vector<std::uint64_t>& w, std::size_t budget)
{
    const std::uint64_t total = std::accumulate(w.begin(), w.end(), std::uint64_t{0});
    std::vector<std::size_t> seats(w.size());
    std::vector<std::uint64_t> rem(w.size());
    std::size_t given = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        seats[i] = static_cast<std::size_t>(budget * w[i] / total);
        rem[i] = budget * w[i] % total;
        given += seats[i];
    }
    while (given < budget) {
        std::size_t pick = 0;
        for (std::size_t i = 1; i < w.size(); ++i)
            if (rem[i] > rem[pick])
                pick = i;
        ++seats[pick];
        rem[pick] = 0;
        ++given;
    }
    return seats;
}

} // namespace oracle
