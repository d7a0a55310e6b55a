#pragma once

// Typed tabular datasets: CSV ingestion with kind inference, imputation,
// [0,1] normalization, class-balancing undersampling and stratified splits.

#include "random.hpp"
#include "text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lmigtd {

enum class FeatureKind { Numerical, Binary, Categorical };

inline std::string_view to_string(FeatureKind k)
{
    switch (k) {
    case FeatureKind::Numerical: return "numerical";
    case FeatureKind::Binary: return "binary";
    case FeatureKind::Categorical: return "categorical";
    }
    return "?";
}

inline FeatureKind parse_feature_kind(std::string_view s)
{
    if (s == "numerical" || s == "numeric")
        return FeatureKind::Numerical;
    if (s == "binary")
        return FeatureKind::Binary;
    if (s == "categorical")
        return FeatureKind::Categorical;
    throw std::invalid_argument("unknown feature kind '" + std::string(s) + "'");
}

/// One column. Binary and categorical columns store, for every sample, the
/// encoding value of its level: `values[i] == level_values[level]`. Raw
/// ingestion encodes levels by index; normalization replaces the encodings
/// with codes in [0,1].
struct Feature {
    std::string name;
    FeatureKind kind = FeatureKind::Numerical;
    std::vector<std::string> levels;
    std::vector<double> level_values;
    std::vector<double> values;

    bool is_discrete() const { return kind != FeatureKind::Numerical; }

    /// Level index for an encoded value, or -1.
    int level_of(double v) const
    {
        for (std::size_t l = 0; l < level_values.size(); ++l)
            if (level_values[l] == v)
                return static_cast<int>(l);
        return -1;
    }
};

struct TypedDataset {
    std::vector<Feature> features;
    std::vector<int> labels;
    std::vector<std::string> class_names;
    /// missing_mask[f][i] != 0 where cell (i, f) was imputed.
    std::vector<std::vector<std::uint8_t>> missing_mask;

    std::size_t n_samples() const { return labels.size(); }
    std::size_t n_features() const { return features.size(); }
    std::size_t n_classes() const { return class_names.size(); }

    std::vector<std::size_t> class_counts() const
    {
        std::vector<std::size_t> counts(n_classes(), 0);
        for (int y : labels)
            ++counts[static_cast<std::size_t>(y)];
        return counts;
    }

    std::size_t count_kind(FeatureKind k) const
    {
        return static_cast<std::size_t>(std::count_if(features.begin(), features.end(),
                                                      [k](const Feature& f) { return f.kind == k; }));
    }

    std::optional<std::size_t> index_of(std::string_view name) const
    {
        for (std::size_t f = 0; f < features.size(); ++f)
            if (features[f].name == name)
                return f;
        return std::nullopt;
    }

    std::vector<FeatureKind> kinds() const
    {
        std::vector<FeatureKind> out;
        out.reserve(features.size());
        for (const auto& f : features)
            out.push_back(f.kind);
        return out;
    }

    /// Row subset in the given order.
    TypedDataset select_rows(std::span<const std::size_t> rows) const
    {
        TypedDataset out;
        out.class_names = class_names;
        out.features.reserve(features.size());
        for (std::size_t f = 0; f < features.size(); ++f) {
            Feature col = features[f];
            col.values.clear();
            std::vector<std::uint8_t> mask;
            for (auto r : rows) {
                col.values.push_back(features[f].values.at(r));
                mask.push_back(f < missing_mask.size() ? missing_mask[f].at(r) : 0);
            }
            out.features.push_back(std::move(col));
            out.missing_mask.push_back(std::move(mask));
        }
        for (auto r : rows)
            out.labels.push_back(labels.at(r));
        return out;
    }
};

using Schema = std::map<std::string, FeatureKind, std::less<>>;

/// Reads a JSON object mapping feature name to "numerical", "binary" or
/// "categorical".
inline Schema load_schema(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open schema file '" + path + "'");
    const auto j = nlohmann::json::parse(in);
    if (!j.is_object())
        throw std::runtime_error("schema file must hold a JSON object");
    Schema schema;
    for (const auto& [name, kind] : j.items())
        schema.emplace(name, parse_feature_kind(kind.get<std::string>()));
    return schema;
}

struct IngestOptions {
    std::string label_column;
    std::optional<Schema> schema;
};

namespace detail {

inline bool is_missing_cell(std::string_view s) { return s.empty() || s == "?"; }

inline FeatureKind infer_kind(const std::vector<std::string>& distinct, std::size_t n_rows)
{
    if (distinct.size() <= 1) {
        // A constant column carries no information; it is kept numerical
        // and normalizes to 0.5 if it parses as a number.
        return FeatureKind::Numerical;
    }
    if (distinct.size() == 2)
        return FeatureKind::Binary;
    bool numeric = true, integral = true;
    for (const auto& s : distinct) {
        const auto v = text::parse_double(s);
        if (!v) {
            numeric = false;
            break;
        }
        integral = integral && text::is_integer(*v);
    }
    if (!numeric)
        return FeatureKind::Categorical;
    const double limit = std::max(10.0, 0.05 * static_cast<double>(n_rows));
    if (integral && static_cast<double>(distinct.size()) <= limit)
        return FeatureKind::Categorical;
    return FeatureKind::Numerical;
}

inline double median_of(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace detail

/// Parses a CSV table with a header row. Missing cells are "" or "?".
/// Numerical cells are median-imputed, discrete cells mode-imputed.
inline TypedDataset ingest(std::istream& in, const IngestOptions& opts)
{
    text::CsvReader reader(in);
    std::vector<std::string> header;
    if (!reader.next(header) || (header.size() == 1 && header[0].empty()))
        throw std::runtime_error("empty file: no header row");

    const auto label_it = std::find(header.begin(), header.end(), opts.label_column);
    if (label_it == header.end())
        throw std::runtime_error("label column '" + opts.label_column + "' not found in header");
    const auto label_col = static_cast<std::size_t>(label_it - header.begin());

    std::vector<std::vector<std::string>> rows;
    for (std::vector<std::string> rec; reader.next(rec);) {
        if (rec.size() == 1 && text::trim(rec[0]).empty())
            continue;
        if (rec.size() != header.size())
            throw std::runtime_error("line " + std::to_string(reader.line()) + ": expected " +
                                     std::to_string(header.size()) + " fields, found " +
                                     std::to_string(rec.size()));
        rows.push_back(std::move(rec));
    }
    if (rows.empty())
        throw std::runtime_error("empty file: no data rows");
    const std::size_t n = rows.size();

    TypedDataset ds;

    // Labels.
    {
        std::vector<std::string> names;
        for (const auto& r : rows) {
            if (detail::is_missing_cell(r[label_col]))
                throw std::runtime_error("missing label on a data row");
            names.push_back(r[label_col]);
        }
        std::vector<std::string> distinct = names;
        std::sort(distinct.begin(), distinct.end(), text::label_less);
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        if (distinct.size() < 2)
            throw std::runtime_error("label column must hold at least two classes");
        ds.class_names = distinct;
        for (const auto& s : names)
            ds.labels.push_back(static_cast<int>(
                std::lower_bound(distinct.begin(), distinct.end(), s, text::label_less) - distinct.begin()));
    }

    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c == label_col)
            continue;
        Feature feat;
        feat.name = header[c];
        std::vector<std::uint8_t> missing(n, 0);
        std::vector<std::string> distinct;
        for (std::size_t i = 0; i < n; ++i) {
            if (detail::is_missing_cell(rows[i][c]))
                missing[i] = 1;
            else
                distinct.push_back(rows[i][c]);
        }
        if (distinct.empty())
            throw std::runtime_error("feature '" + feat.name + "' has no observed values");
        std::sort(distinct.begin(), distinct.end(), text::label_less);
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

        std::optional<FeatureKind> declared;
        if (opts.schema) {
            if (auto it = opts.schema->find(feat.name); it != opts.schema->end())
                declared = it->second;
        }
        feat.kind = declared ? *declared : detail::infer_kind(distinct, n);

        if (feat.kind == FeatureKind::Binary && distinct.size() != 2)
            throw std::runtime_error("feature '" + feat.name + "' is declared binary but has " +
                                     std::to_string(distinct.size()) + " distinct value(s)");
        if (feat.kind == FeatureKind::Categorical && distinct.size() < 3)
            throw std::runtime_error("feature '" + feat.name + "' is declared categorical but has fewer than 3 levels");

        feat.values.assign(n, 0.0);
        if (feat.kind == FeatureKind::Numerical) {
            std::vector<double> observed;
            for (std::size_t i = 0; i < n; ++i) {
                if (missing[i])
                    continue;
                auto v = text::parse_double(rows[i][c]);
                if (!v && distinct.size() == 1 && !declared)
                    v = 0.0; // constant non-numeric column
                if (!v)
                    throw std::runtime_error("feature '" + feat.name + "': unparseable numeric cell '" +
                                             rows[i][c] + "' on data row " + std::to_string(i + 1));
                feat.values[i] = *v;
                observed.push_back(*v);
            }
            const double med = detail::median_of(observed);
            for (std::size_t i = 0; i < n; ++i)
                if (missing[i])
                    feat.values[i] = med;
        } else {
            feat.levels = distinct;
            feat.level_values.resize(distinct.size());
            std::iota(feat.level_values.begin(), feat.level_values.end(), 0.0);
            std::vector<std::size_t> freq(distinct.size(), 0);
            for (std::size_t i = 0; i < n; ++i) {
                if (missing[i])
                    continue;
                const auto l = static_cast<std::size_t>(
                    std::lower_bound(distinct.begin(), distinct.end(), rows[i][c], text::label_less) -
                    distinct.begin());
                feat.values[i] = static_cast<double>(l);
                ++freq[l];
            }
            // Mode, ties to the first level.
            const auto mode = static_cast<double>(std::max_element(freq.begin(), freq.end()) - freq.begin());
            for (std::size_t i = 0; i < n; ++i)
                if (missing[i])
                    feat.values[i] = mode;
        }
        ds.features.push_back(std::move(feat));
        ds.missing_mask.push_back(std::move(missing));
    }
    return ds;
}

inline TypedDataset ingest(const std::string& path, const IngestOptions& opts)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open dataset '" + path + "'");
    return ingest(in, opts);
}

// ---------------------------------------------------------------------------
// Normalization

struct NormalizationSpec {
    struct Range {
        double min = 0.0;
        double max = 0.0;
    };
    /// Set for numerical features.
    std::vector<std::optional<Range>> ranges;
    /// For discrete features: code in [0,1] per level, aligned with
    /// Feature::levels.
    std::vector<std::vector<double>> codes;
};

/// Fits min/max ranges and level codes on the given rows (all rows if empty).
inline NormalizationSpec fit_normalization(const TypedDataset& ds, std::span<const std::size_t> rows = {})
{
    std::vector<std::size_t> all;
    if (rows.empty()) {
        all.resize(ds.n_samples());
        std::iota(all.begin(), all.end(), std::size_t{0});
        rows = all;
    }
    NormalizationSpec spec;
    spec.ranges.resize(ds.n_features());
    spec.codes.resize(ds.n_features());
    for (std::size_t f = 0; f < ds.n_features(); ++f) {
        const Feature& feat = ds.features[f];
        if (feat.kind == FeatureKind::Numerical) {
            NormalizationSpec::Range r{feat.values[rows[0]], feat.values[rows[0]]};
            for (auto i : rows) {
                r.min = std::min(r.min, feat.values[i]);
                r.max = std::max(r.max, feat.values[i]);
            }
            spec.ranges[f] = r;
            continue;
        }
        const std::size_t L = feat.levels.size();
        std::vector<double> codes(L, 0.0);
        if (feat.kind == FeatureKind::Binary) {
            // Levels are kept in ascending label order: low -> 0, high -> 1.
            codes[0] = 0.0;
            codes[1] = 1.0;
        } else {
            std::vector<std::size_t> freq(L, 0);
            for (auto i : rows) {
                const int l = feat.level_of(feat.values[i]);
                if (l < 0)
                    throw std::logic_error("feature '" + feat.name + "' holds an unknown level encoding");
                ++freq[static_cast<std::size_t>(l)];
            }
            std::vector<std::size_t> order(L);
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                if (freq[a] != freq[b])
                    return freq[a] > freq[b];
                return feat.levels[a] < feat.levels[b];
            });
            for (std::size_t rank = 0; rank < L; ++rank)
                codes[order[rank]] = static_cast<double>(rank) / static_cast<double>(L - 1);
        }
        spec.codes[f] = std::move(codes);
    }
    return spec;
}

inline double normalize_value(double v, const NormalizationSpec::Range& r)
{
    if (r.max <= r.min)
        return 0.5;
    return std::clamp((v - r.min) / (r.max - r.min), 0.0, 1.0);
}

inline double denormalize_value(double v, const NormalizationSpec::Range& r)
{
    if (r.max <= r.min)
        return r.min;
    return r.min + v * (r.max - r.min);
}

/// Applies a fitted spec. Values outside a fitted numerical range are clamped.
inline TypedDataset apply_normalization(const TypedDataset& ds, const NormalizationSpec& spec)
{
    if (spec.ranges.size() != ds.n_features())
        throw std::invalid_argument("normalization spec does not match dataset");
    TypedDataset out = ds;
    for (std::size_t f = 0; f < ds.n_features(); ++f) {
        Feature& feat = out.features[f];
        if (feat.kind == FeatureKind::Numerical) {
            for (double& v : feat.values)
                v = normalize_value(v, *spec.ranges[f]);
            continue;
        }
        const auto& codes = spec.codes[f];
        for (double& v : feat.values)
            v = codes[static_cast<std::size_t>(ds.features[f].level_of(v))];
        feat.level_values = codes;
    }
    return out;
}

inline std::pair<TypedDataset, NormalizationSpec> normalize(const TypedDataset& ds)
{
    auto spec = fit_normalization(ds);
    return {apply_normalization(ds, spec), std::move(spec)};
}

// ---------------------------------------------------------------------------
// Resampling

/// Sorted row indices keeping min-class-count samples of every class.
inline std::vector<std::size_t> undersample_indices(const TypedDataset& ds, std::uint64_t seed)
{
    const auto counts = ds.class_counts();
    if (counts.size() < 2)
        throw std::invalid_argument("undersampling needs at least two classes");
    for (std::size_t c = 0; c < counts.size(); ++c)
        if (counts[c] == 0)
            throw std::invalid_argument("class '" + ds.class_names[c] + "' has no samples");
    const std::size_t keep = *std::min_element(counts.begin(), counts.end());

    std::vector<std::size_t> out;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < ds.n_samples(); ++i)
            if (ds.labels[i] == static_cast<int>(c))
                members.push_back(i);
        auto rng = make_engine(seed, {stream::undersample, c});
        std::shuffle(members.begin(), members.end(), rng);
        members.resize(keep);
        out.insert(out.end(), members.begin(), members.end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline TypedDataset undersample(const TypedDataset& ds, std::uint64_t seed)
{
    const auto rows = undersample_indices(ds, seed);
    return ds.select_rows(rows);
}

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// `repeats` independent stratified shuffles. Each class contributes
/// round(train_fraction * n_c) rows to train, clamped so both sides are
/// non-empty.
inline std::vector<SplitIndices> stratified_splits(const TypedDataset& ds, double train_fraction,
                                                   std::size_t repeats, std::uint64_t seed)
{
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw std::invalid_argument("train_fraction must lie strictly between 0 and 1");
    if (repeats < 1)
        throw std::invalid_argument("repeats must be at least 1");
    const auto counts = ds.class_counts();
    for (std::size_t c = 0; c < counts.size(); ++c)
        if (counts[c] < 2)
            throw std::invalid_argument("class '" + ds.class_names[c] + "' has fewer than 2 samples; cannot stratify");

    // Train rows per class: round(f * n) in total, shared out by largest
    // remainder (lower class index on ties), each kept in [1, n_c - 1].
    const std::size_t n = ds.n_samples();
    const auto total_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
    std::vector<std::size_t> n_train(counts.size());
    std::vector<double> rem(counts.size());
    std::size_t given = 0;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        const double quota = train_fraction * static_cast<double>(counts[c]);
        n_train[c] = static_cast<std::size_t>(std::floor(quota));
        rem[c] = quota - std::floor(quota);
        given += n_train[c];
    }
    std::vector<std::size_t> order(counts.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b] + 1e-12; });
    for (std::size_t k = 0; given < total_train && k < order.size(); ++k, ++given)
        ++n_train[order[k]];
    for (std::size_t c = 0; c < counts.size(); ++c)
        n_train[c] = std::clamp<std::size_t>(n_train[c], 1, counts[c] - 1);

    std::vector<SplitIndices> out;
    for (std::size_t r = 0; r < repeats; ++r) {
        SplitIndices s;
        for (std::size_t c = 0; c < counts.size(); ++c) {
            std::vector<std::size_t> members;
            for (std::size_t i = 0; i < n; ++i)
                if (ds.labels[i] == static_cast<int>(c))
                    members.push_back(i);
            auto rng = make_engine(seed, {stream::split, r, c});
            std::shuffle(members.begin(), members.end(), rng);
            const auto cut = static_cast<std::ptrdiff_t>(n_train[c]);
            s.train.insert(s.train.end(), members.begin(), members.begin() + cut);
            s.test.insert(s.test.end(), members.begin() + cut, members.end());
        }
        std::sort(s.train.begin(), s.train.end());
        std::sort(s.test.begin(), s.test.end());
        out.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Export

/// Writes feature values (as stored) and the class label per row.
inline void write_csv(std::ostream& os, const TypedDataset& ds, std::string_view label_name = "label")
{
    std::vector<std::string> row;
    for (const auto& f : ds.features)
        row.push_back(f.name);
    row.emplace_back(label_name);
    text::write_csv_row(os, row);
    for (std::size_t i = 0; i < ds.n_samples(); ++i) {
        row.clear();
        for (const auto& f : ds.features)
            row.push_back(text::format_double(f.values[i]));
        row.push_back(ds.class_names[static_cast<std::size_t>(ds.labels[i])]);
        text::write_csv_row(os, row);
    }
}

inline std::string to_csv_string(const TypedDataset& ds)
{
    std::ostringstream os;
    write_csv(os, ds);
    return os.str();
}

} // namespace lmigtd
