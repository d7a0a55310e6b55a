#pragma once

// Univariate and bivariate standard normal distribution functions.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace lmigtd::normal {

inline double cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

/// Inverse of cdf. Acklam's rational approximation polished by two Halley
/// steps; accurate to a few ulps on (0, 1).
inline double quantile(double p)
{
    if (p <= 0.0)
        return -std::numeric_limits<double>::infinity();
    if (p >= 1.0)
        return std::numeric_limits<double>::infinity();
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    constexpr double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    for (int it = 0; it < 2; ++it) {
        const double e = cdf(x) - p;
        const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    return x;
}

namespace detail {

/// Gauss-Legendre rule on [-1, 1]: nodes in the negative half and weights
/// (the rule is symmetric).
template <int N>
struct HalfRule {
    std::array<double, N / 2> x{};
    std::array<double, N / 2> w{};
};

template <int N>
HalfRule<N> make_half_rule()
{
    HalfRule<N> r;
    for (int i = 0; i < N / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (N + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= N; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = N * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16)
                break;
        }
        r.x[static_cast<std::size_t>(i)] = -z;
        r.w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    return r;
}

template <int N>
const HalfRule<N>& half_rule()
{
    static const HalfRule<N> r = make_half_rule<N>();
    return r;
}

/// P(X > h, Y > k) for a standard bivariate normal with correlation r.
/// Genz's method (Drezner-Wesolowsky for |r| < 0.925, otherwise the
/// asymptotic expansion around |r| = 1).
template <int N>
double upper_orthant(double h, double k, double r)
{
    const auto& rule = half_rule<N>();
    constexpr double twopi = 2.0 * std::numbers::pi;
    double hk = h * k;
    double bvn = 0.0;
    if (std::abs(r) < 0.925) {
        const double hs = 0.5 * (h * h + k * k);
        const double asr = std::asin(r);
        for (std::size_t i = 0; i < rule.x.size(); ++i) {
            double sn = std::sin(asr * (1.0 + rule.x[i]) / 2.0);
            bvn += rule.w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
            sn = std::sin(asr * (1.0 - rule.x[i]) / 2.0);
            bvn += rule.w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
        }
        return bvn * asr / (2.0 * twopi) + cdf(-h) * cdf(-k);
    }
    if (r < 0.0) {
        k = -k;
        hk = -hk;
    }
    if (std::abs(r) < 1.0) {
        const double as = (1.0 - r) * (1.0 + r);
        double a = std::sqrt(as);
        const double bs = (h - k) * (h - k);
        const double c = (4.0 - hk) / 8.0;
        const double d = (12.0 - hk) / 16.0;
        bvn = a * std::exp(-(bs / as + hk) / 2.0) * (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
        if (hk > -160.0) {
            const double b = std::sqrt(bs);
            bvn -= std::exp(-hk / 2.0) * std::sqrt(twopi) * cdf(-b / a) * b * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
        }
        a /= 2.0;
        for (std::size_t i = 0; i < rule.x.size(); ++i) {
            for (int side : {-1, 1}) {
                const double xs = std::pow(a * (side * rule.x[i] + 1.0), 2);
                const double rs = std::sqrt(1.0 - xs);
                bvn += a * rule.w[i] *
                       (std::exp(-bs / (2.0 * xs) - hk / (1.0 + rs)) / rs -
                        std::exp(-(bs / xs + hk) / 2.0) * (1.0 + c * xs * (1.0 + d * xs)));
            }
        }
        bvn = -bvn / twopi;
    }
    if (r > 0.0)
        return bvn + cdf(-std::max(h, k));
    bvn = -bvn;
    if (k > h)
        bvn += cdf(k) - cdf(h);
    return bvn;
}

} // namespace detail

/// P(X <= x, Y <= y) for a standard bivariate normal with correlation rho.
/// Infinite limits are allowed.
inline double bivariate_cdf(double x, double y, double rho)
{
    if (x == -std::numeric_limits<double>::infinity() || y == -std::numeric_limits<double>::infinity())
        return 0.0;
    if (x == std::numeric_limits<double>::infinity())
        return cdf(y);
    if (y == std::numeric_limits<double>::infinity())
        return cdf(x);
    if (rho >= 1.0)
        return cdf(std::min(x, y));
    if (rho <= -1.0)
        return std::max(0.0, cdf(x) - cdf(-y));
    const double a = std::abs(rho);
    double p;
    if (a < 0.3)
        p = detail::upper_orthant<6>(-x, -y, rho);
    else if (a < 0.75)
        p = detail::upper_orthant<12>(-x, -y, rho);
    else
        p = detail::upper_orthant<20>(-x, -y, rho);
    return std::clamp(p, 0.0, 1.0);
}

} // namespace lmigtd::normal
