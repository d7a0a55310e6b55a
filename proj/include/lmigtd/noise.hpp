#pragma once

// Noisy-feature augmentation: allocation of noisy copies per source feature
// (homogeneous or importance-weighted) and generation with an association
// floor against the source.

#include "correlation.hpp"
#include "dataset.hpp"
#include "featsel.hpp"
#include "random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lmigtd {

enum class NoiseType { Gaussian, Swap, ZeroMask, SaltPepper };

inline std::string_view to_string(NoiseType t)
{
    switch (t) {
    case NoiseType::Gaussian: return "GAUSSIAN";
    case NoiseType::Swap: return "SWN";
    case NoiseType::ZeroMask: return "ZMN";
    case NoiseType::SaltPepper: return "SPN";
    }
    return "?";
}

inline bool compatible(NoiseType t, FeatureKind k)
{
    switch (t) {
    case NoiseType::Gaussian: return k == FeatureKind::Numerical;
    case NoiseType::Swap: return k == FeatureKind::Categorical;
    case NoiseType::ZeroMask:
    case NoiseType::SaltPepper: return k == FeatureKind::Binary;
    }
    return false;
}

/// Default noise type per source kind. Binary sources use zero masking.
inline NoiseType default_noise_type(FeatureKind k)
{
    switch (k) {
    case FeatureKind::Numerical: return NoiseType::Gaussian;
    case FeatureKind::Categorical: return NoiseType::Swap;
    case FeatureKind::Binary: return NoiseType::ZeroMask;
    }
    return NoiseType::Gaussian;
}

enum class NoiseMode { HoNG, HeNG };

inline std::string_view to_string(NoiseMode m) { return m == NoiseMode::HoNG ? "HoNG" : "HeNG"; }

inline NoiseMode parse_noise_mode(std::string_view s)
{
    if (s == "HoNG" || s == "hong")
        return NoiseMode::HoNG;
    if (s == "HeNG" || s == "heng")
        return NoiseMode::HeNG;
    throw std::invalid_argument("unknown noise mode '" + std::string(s) + "' (expected HoNG or HeNG)");
}

struct NoisePlanEntry {
    std::size_t count = 0;
    NoiseType type = NoiseType::Gaussian;
    double power = 0.2;
};

struct NoisePlan {
    NoiseMode mode = NoiseMode::HoNG;
    std::size_t total_budget = 0;
    std::vector<NoisePlanEntry> entries;
};

/// Largest-remainder apportionment of `budget` seats by `weights` (need not
/// be normalized). Remainders are compared at 1e-9 resolution so that
/// rounding noise does not decide exact ties; ties go to the lower index.
inline std::vector<std::size_t> largest_remainder(std::span<const double> weights, std::size_t budget)
{
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (weights.empty() || !(total > 0.0))
        throw std::invalid_argument("largest_remainder: weights must have a positive sum");
    std::vector<std::size_t> seats(weights.size());
    std::vector<long long> rem_key(weights.size());
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] < 0.0)
            throw std::invalid_argument("largest_remainder: negative weight");
        double q = static_cast<double>(budget) * weights[i] / total;
        if (std::abs(q - std::round(q)) < 1e-9)
            q = std::round(q);
        const double fl = std::floor(q);
        seats[i] = static_cast<std::size_t>(fl);
        rem_key[i] = std::llround((q - fl) * 1e9);
        assigned += seats[i];
    }
    std::vector<std::size_t> order(weights.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem_key[a] > rem_key[b]; });
    for (std::size_t t = 0; assigned < budget; ++t, ++assigned)
        ++seats[order[t % order.size()]];
    return seats;
}

/// HoNG spreads the budget evenly (earlier features take the remainder);
/// HeNG apportions it by importance weight.
inline NoisePlan plan_noise(const ImportanceVector* importance, std::span<const FeatureKind> kinds,
                            std::size_t total_budget, NoiseMode mode, double initial_power = 0.2)
{
    const std::size_t n = kinds.size();
    if (n == 0)
        throw std::invalid_argument("plan_noise: no features");
    NoisePlan plan;
    plan.mode = mode;
    plan.total_budget = total_budget;
    plan.entries.resize(n);
    std::vector<std::size_t> counts(n);
    if (mode == NoiseMode::HoNG) {
        for (std::size_t i = 0; i < n; ++i)
            counts[i] = total_budget / n + (i < total_budget % n ? 1 : 0);
    } else {
        if (!importance)
            throw std::invalid_argument("plan_noise: HeNG requires an importance vector");
        if (importance->normalized.size() != n)
            throw std::invalid_argument("plan_noise: importance vector length does not match feature count");
        counts = total_budget ? largest_remainder(importance->normalized, total_budget) : std::vector<std::size_t>(n, 0);
    }
    for (std::size_t i = 0; i < n; ++i)
        plan.entries[i] = {counts[i], default_noise_type(kinds[i]), initial_power};
    return plan;
}

struct Corruption {
    std::vector<double> column;
    /// Sorted positions selected for corruption (empty for Gaussian noise,
    /// which perturbs every entry).
    std::vector<std::size_t> mask;
};

/// Number of entries a mask-based noise corrupts: floor(power * n).
inline std::size_t corrupted_count(double power, std::size_t n)
{
    return static_cast<std::size_t>(std::floor(power * static_cast<double>(n) + 1e-9));
}

/// Gaussian: adds N(0, (power * sd)^2) to every entry, then min-max rescales
/// the result to [0,1] when it leaves that range. SWN/ZMN/SPN corrupt a mask
/// of floor(power * n) entries drawn without replacement.
inline Corruption corrupt(std::span<const double> source, FeatureKind kind, NoiseType type, double power, Engine& rng)
{
    if (!compatible(type, kind))
        throw std::invalid_argument("noise type " + std::string(to_string(type)) + " cannot be applied to a " +
                                    std::string(to_string(kind)) + " feature");
    if (!(power >= 0.0 && power <= 1.0))
        throw std::invalid_argument("noise power must lie in [0, 1]");
    Corruption out{std::vector<double>(source.begin(), source.end()), {}};
    const std::size_t n = source.size();
    if (n == 0 || power == 0.0)
        return out;

    if (type == NoiseType::Gaussian) {
        const double mean = std::accumulate(source.begin(), source.end(), 0.0) / static_cast<double>(n);
        double ss = 0.0;
        for (double v : source)
            ss += (v - mean) * (v - mean);
        const double sigma = power * std::sqrt(ss / static_cast<double>(n));
        if (sigma == 0.0)
            return out;
        std::normal_distribution<double> noise(0.0, sigma);
        for (double& v : out.column)
            v += noise(rng);
        const auto [lo, hi] = std::minmax_element(out.column.begin(), out.column.end());
        const double mn = *lo, mx = *hi;
        if (mn < 0.0 || mx > 1.0)
            for (double& v : out.column)
                v = (v - mn) / (mx - mn);
        return out;
    }

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const std::size_t k = corrupted_count(power, n);
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    out.mask.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(out.mask.begin(), out.mask.end());

    const auto [lo_it, hi_it] = std::minmax_element(source.begin(), source.end());
    const double lo = *lo_it, hi = *hi_it;
    switch (type) {
    case NoiseType::Swap: {
        std::vector<double> levels(source.begin(), source.end());
        std::sort(levels.begin(), levels.end());
        levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
        if (levels.size() < 2)
            break;
        std::uniform_int_distribution<std::size_t> other(0, levels.size() - 2);
        for (auto i : out.mask) {
            const auto cur = static_cast<std::size_t>(
                std::lower_bound(levels.begin(), levels.end(), source[i]) - levels.begin());
            std::size_t l = other(rng);
            if (l >= cur)
                ++l;
            out.column[i] = levels[l];
        }
        break;
    }
    case NoiseType::ZeroMask:
        for (auto i : out.mask)
            out.column[i] = lo;
        break;
    case NoiseType::SaltPepper: {
        std::bernoulli_distribution coin(0.5);
        for (auto i : out.mask)
            out.column[i] = coin(rng) ? hi : lo;
        break;
    }
    case NoiseType::Gaussian: break;
    }
    return out;
}

struct NoisyFeature {
    std::string name;
    std::size_t source = 0;
    std::size_t copy = 0;
    NoiseType type = NoiseType::Gaussian;
    double planned_power = 0.0;
    double achieved_power = 0.0;
    double association = 0.0;
    std::size_t attempts = 0;
    /// Set when no attempt reached the association floor; the column holds
    /// the best attempt.
    bool best_effort = false;
    std::vector<double> values;
};

struct AugmentedDataset {
    TypedDataset base;
    std::vector<NoisyFeature> noisy;

    std::size_t n_original() const { return base.n_features(); }
    std::size_t n_total() const { return base.n_features() + noisy.size(); }

    /// Originals followed by noisy features, as one dataset.
    TypedDataset flatten() const
    {
        TypedDataset out = base;
        for (const auto& nf : noisy) {
            const Feature& src = base.features[nf.source];
            Feature f;
            f.name = nf.name;
            f.kind = src.kind;
            f.levels = src.levels;
            f.level_values = src.level_values;
            f.values = nf.values;
            out.features.push_back(std::move(f));
            out.missing_mask.push_back(std::vector<std::uint8_t>(base.n_samples(), 0));
        }
        return out;
    }

    /// Noisy feature name -> source feature name.
    std::string lineage(const NoisyFeature& nf) const { return base.features[nf.source].name; }
};

inline std::string noisy_feature_name(const std::string& source, std::size_t copy)
{
    return source + "~n" + std::to_string(copy + 1);
}

struct NoiseOptions {
    double target_min_assoc = 0.90;
    std::size_t max_halvings = 6;
};

/// Creates the planned noisy copies. Each copy starts at the planned power;
/// while |assoc(copy, source)| stays under the floor the power is halved and
/// the copy regenerated, at most `max_halvings` times. Every copy draws from
/// its own (seed, source, copy) substream.
inline AugmentedDataset generate_noise(const TypedDataset& ds, const NoisePlan& plan, const NoiseOptions& opts,
                                       std::uint64_t seed)
{
    if (plan.entries.size() != ds.n_features())
        throw std::invalid_argument("noise plan does not match dataset feature count");
    AugmentedDataset out;
    out.base = ds;
    for (std::size_t s = 0; s < ds.n_features(); ++s) {
        const Feature& src = ds.features[s];
        const auto& entry = plan.entries[s];
        if (entry.count > 0 && !compatible(entry.type, src.kind))
            throw std::invalid_argument("noise plan assigns " + std::string(to_string(entry.type)) + " to " +
                                        std::string(to_string(src.kind)) + " feature '" + src.name + "'");
        for (std::size_t c = 0; c < entry.count; ++c) {
            auto rng = make_engine(seed, {stream::noise, s, c});
            NoisyFeature nf;
            nf.name = noisy_feature_name(src.name, c);
            nf.source = s;
            nf.copy = c;
            nf.type = entry.type;
            nf.planned_power = entry.power;
            double power = entry.power;
            double best = -1.0;
            for (std::size_t attempt = 0; attempt <= opts.max_halvings; ++attempt, power *= 0.5) {
                auto col = corrupt(src.values, src.kind, entry.type, power, rng);
                const double a = std::abs(associate(col.column, src.kind, src.values, src.kind).value);
                ++nf.attempts;
                if (a > best) {
                    best = a;
                    nf.values = std::move(col.column);
                    nf.achieved_power = power;
                    nf.association = a;
                }
                if (a >= opts.target_min_assoc)
                    break;
            }
            nf.best_effort = nf.association < opts.target_min_assoc;
            out.noisy.push_back(std::move(nf));
        }
    }
    return out;
}

inline void write_noise_report_csv(std::ostream& os, const AugmentedDataset& aug)
{
    text::write_csv_row(os, {"noisy_feature", "source", "type", "planned_power", "achieved_power",
                             "achieved_association", "flag"});
    for (const auto& nf : aug.noisy)
        text::write_csv_row(os, {nf.name, aug.lineage(nf), std::string(to_string(nf.type)),
                                 text::format_double(nf.planned_power), text::format_double(nf.achieved_power),
                                 text::format_double(nf.association), nf.best_effort ? "best_effort" : ""});
}

} // namespace lmigtd
