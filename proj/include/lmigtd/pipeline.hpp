#pragma once

// End-to-end transformation: ingest -> normalize -> importance -> noise ->
// distances -> layout -> images, plus the inspect/report readers that work
// from the written artifacts only.

#include "correlation.hpp"
#include "dataset.hpp"
#include "featsel.hpp"
#include "igtd.hpp"
#include "noise.hpp"
#include "render.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <numeric>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace lmigtd {

enum class Stage : int { Config = 1, Ingest = 2, FeatureSelection = 3, Noise = 4, Layout = 5, Render = 6 };

inline std::string_view to_string(Stage s)
{
    switch (s) {
    case Stage::Config: return "config";
    case Stage::Ingest: return "ingest";
    case Stage::FeatureSelection: return "featsel";
    case Stage::Noise: return "noise";
    case Stage::Layout: return "igtd";
    case Stage::Render: return "render";
    }
    return "?";
}

/// A pipeline failure tagged with the stage that raised it. The stage value
/// doubles as the process exit code.
class StageError : public std::runtime_error {
public:
    StageError(Stage stage, const std::string& what)
        : std::runtime_error(std::string(to_string(stage)) + ": " + what), stage_(stage)
    {
    }
    Stage stage() const { return stage_; }
    int exit_code() const { return static_cast<int>(stage_); }

private:
    Stage stage_;
};

template <typename F>
auto run_stage(Stage stage, F&& fn) -> decltype(fn())
{
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

struct RunConfig {
    std::string dataset;
    std::string label;
    std::optional<std::string> schema;
    std::string name;
    NoiseMode mode = NoiseMode::HeNG;
    std::optional<std::size_t> target_side;
    double target_min_assoc = 0.90;
    std::uint64_t seed = 0;
    bool undersample = false;
    double train_fraction = 0.8;
    /// 0 disables splitting.
    std::size_t repeats = 0;
    std::string output;
    std::size_t max_steps = 30000;
    std::size_t patience = 300;
    std::size_t fs_rounds = 10;
    RankTies rank_ties = RankTies::Lexicographic;

    std::string dataset_name() const
    {
        return name.empty() ? std::filesystem::path(dataset).stem().string() : name;
    }
};

inline nlohmann::json to_json(const RunConfig& c)
{
    nlohmann::json j;
    j["dataset"] = c.dataset;
    j["label"] = c.label;
    j["schema"] = c.schema ? nlohmann::json(*c.schema) : nlohmann::json(nullptr);
    j["name"] = c.dataset_name();
    j["mode"] = std::string(to_string(c.mode));
    j["target_side"] = c.target_side ? nlohmann::json(*c.target_side) : nlohmann::json(nullptr);
    j["target_min_assoc"] = c.target_min_assoc;
    j["seed"] = c.seed;
    j["undersample"] = c.undersample;
    j["splits"] = {{"train_fraction", c.train_fraction}, {"repeats", c.repeats}};
    j["output"] = c.output;
    j["max_steps"] = c.max_steps;
    j["patience"] = c.patience;
    j["fs_rounds"] = c.fs_rounds;
    j["rank_ties"] = std::string(to_string(c.rank_ties));
    return j;
}

/// Fields absent from `j` keep the values already in `c`.
inline void merge_json(RunConfig& c, const nlohmann::json& j)
{
    auto opt_str = [&](const char* key, std::string& dst) {
        if (j.contains(key) && !j[key].is_null())
            dst = j[key].get<std::string>();
    };
    opt_str("dataset", c.dataset);
    opt_str("label", c.label);
    opt_str("name", c.name);
    opt_str("output", c.output);
    if (j.contains("schema"))
        c.schema = j["schema"].is_null() ? std::nullopt : std::optional<std::string>(j["schema"].get<std::string>());
    if (j.contains("mode"))
        c.mode = parse_noise_mode(j["mode"].get<std::string>());
    if (j.contains("target_side"))
        c.target_side = j["target_side"].is_null() ? std::nullopt
                                                   : std::optional<std::size_t>(j["target_side"].get<std::size_t>());
    if (j.contains("target_min_assoc"))
        c.target_min_assoc = j["target_min_assoc"].get<double>();
    if (j.contains("seed"))
        c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("undersample"))
        c.undersample = j["undersample"].get<bool>();
    if (j.contains("splits")) {
        const auto& s = j["splits"];
        if (s.contains("train_fraction"))
            c.train_fraction = s["train_fraction"].get<double>();
        if (s.contains("repeats"))
            c.repeats = s["repeats"].get<std::size_t>();
    }
    if (j.contains("max_steps"))
        c.max_steps = j["max_steps"].get<std::size_t>();
    if (j.contains("patience"))
        c.patience = j["patience"].get<std::size_t>();
    if (j.contains("fs_rounds"))
        c.fs_rounds = j["fs_rounds"].get<std::size_t>();
    if (j.contains("rank_ties"))
        c.rank_ties = parse_rank_ties(j["rank_ties"].get<std::string>());
}

inline RunConfig load_run_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config '" + path + "'");
    RunConfig c;
    merge_json(c, nlohmann::json::parse(in));
    return c;
}

inline void validate(const RunConfig& c)
{
    if (c.dataset.empty())
        throw std::invalid_argument("no dataset path given");
    if (c.label.empty())
        throw std::invalid_argument("no label column given");
    if (c.output.empty())
        throw std::invalid_argument("no output directory given");
    if (c.repeats > 0 && !(c.train_fraction > 0.0 && c.train_fraction < 1.0))
        throw std::invalid_argument("train_fraction must lie strictly between 0 and 1");
    if (!(c.target_min_assoc >= 0.0 && c.target_min_assoc <= 1.0))
        throw std::invalid_argument("target_min_assoc must lie in [0, 1]");
}

// ---------------------------------------------------------------------------
// Artifact writers

namespace pipeline_detail {

inline void write_text(const std::filesystem::path& p, const std::string& content)
{
    std::ofstream os(p, std::ios::binary);
    if (!os)
        throw std::runtime_error("cannot write '" + p.string() + "'");
    os << content;
}

template <typename Fn>
void write_with(const std::filesystem::path& p, Fn&& fn)
{
    std::ofstream os(p, std::ios::binary);
    if (!os)
        throw std::runtime_error("cannot write '" + p.string() + "'");
    fn(os);
}

inline nlohmann::json normalization_json(const TypedDataset& raw, const NormalizationSpec& spec)
{
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t f = 0; f < raw.n_features(); ++f) {
        const auto& feat = raw.features[f];
        nlohmann::json e{{"feature", feat.name}, {"kind", std::string(to_string(feat.kind))}};
        if (spec.ranges[f]) {
            e["min"] = spec.ranges[f]->min;
            e["max"] = spec.ranges[f]->max;
        } else {
            nlohmann::json codes = nlohmann::json::object();
            for (std::size_t l = 0; l < feat.levels.size(); ++l)
                codes[feat.levels[l]] = spec.codes[f][l];
            e["codes"] = codes;
        }
        arr.push_back(e);
    }
    return arr;
}

inline nlohmann::json layout_json(const PixelLayout& layout, const std::vector<ManifestEntry>& manifest)
{
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& e : manifest)
        cells.push_back({{"row", e.row}, {"col", e.col}, {"feature", e.feature}});
    const auto& tr = layout.error_trace;
    nlohmann::json trace{{"length", tr.size()}};
    if (!tr.empty()) {
        trace["first"] = tr.front();
        trace["last"] = tr.back();
        // At most ~100 evenly spaced samples of the trace.
        const std::size_t stride = std::max<std::size_t>(1, tr.size() / 100);
        nlohmann::json samples = nlohmann::json::array();
        for (std::size_t i = 0; i < tr.size(); i += stride)
            samples.push_back({i, tr[i]});
        trace["samples"] = samples;
    }
    return {{"rows", layout.grid.rows},
            {"cols", layout.grid.cols},
            {"n_features", layout.n_features},
            {"cells", cells},
            {"initial_error", layout.initial_error},
            {"final_error", layout.final_error},
            {"iterations", layout.iterations()},
            {"swaps", layout.swaps},
            {"error_trace", trace}};
}

inline void write_json(const std::filesystem::path& p, const nlohmann::json& j) { write_text(p, j.dump(2) + "\n"); }

} // namespace pipeline_detail

/// In-memory products of one transform (one per split when splitting).
struct TransformProducts {
    std::filesystem::path dir;
    TypedDataset raw;
    NormalizationSpec normalization;
    std::optional<EnsembleResult> importance;
    NoisePlan plan;
    AugmentedDataset augmented;
    CorrelationMatrix correlation;
    PixelLayout layout;
    ImageBundle bundle;
    std::vector<std::size_t> train_rows;
};

struct TransformResult {
    std::vector<TransformProducts> runs;
};

/// Runs the layout pipeline on `raw`, fitting normalization, importance and
/// distances on `train_rows` (all rows when empty), and writes every
/// artifact into `dir`.
inline TransformProducts transform_core(const RunConfig& cfg, const TypedDataset& raw,
                                        std::vector<std::size_t> train_rows, const std::filesystem::path& dir,
                                        std::span<const std::size_t> sample_ids)
{
    namespace pd = pipeline_detail;
    TransformProducts out;
    out.dir = dir;
    out.raw = raw;
    if (train_rows.empty()) {
        train_rows.resize(raw.n_samples());
        std::iota(train_rows.begin(), train_rows.end(), std::size_t{0});
    }
    out.train_rows = train_rows;
    std::filesystem::create_directories(dir);

    TypedDataset norm, train;
    run_stage(Stage::Ingest, [&] {
        out.normalization = fit_normalization(raw, train_rows);
        norm = apply_normalization(raw, out.normalization);
        train = norm.select_rows(train_rows);
        pd::write_json(dir / "normalization.json", pd::normalization_json(raw, out.normalization));
        pd::write_with(dir / "normalized.csv", [&](std::ostream& os) { write_csv(os, norm); });
        return 0;
    });

    const auto choice = run_stage(Stage::Layout, [&] { return choose_grid(raw.n_features(), cfg.target_side); });

    if (cfg.mode == NoiseMode::HeNG) {
        run_stage(Stage::FeatureSelection, [&] {
            EnsembleOptions eo;
            eo.rounds = cfg.fs_rounds;
            out.importance = ensemble_importance(train, eo, cfg.seed);
            pd::write_with(dir / "importance.csv",
                           [&](std::ostream& os) { write_importance_csv(os, out.importance->importance); });
            return 0;
        });
    }

    run_stage(Stage::Noise, [&] {
        const auto kinds = raw.kinds();
        out.plan = plan_noise(out.importance ? &out.importance->importance : nullptr, kinds, choice.noise_budget, cfg.mode);
        NoiseOptions no;
        no.target_min_assoc = cfg.target_min_assoc;
        out.augmented = generate_noise(norm, out.plan, no, cfg.seed);
        pd::write_with(dir / "noise_report.csv", [&](std::ostream& os) { write_noise_report_csv(os, out.augmented); });
        pd::write_with(dir / "augmented.csv", [&](std::ostream& os) { write_csv(os, out.augmented.flatten()); });
        return 0;
    });

    run_stage(Stage::Layout, [&] {
        const auto flat_train = out.augmented.flatten().select_rows(train_rows);
        out.correlation = correlation_matrix(flat_train);
        const auto dm = to_distance(out.correlation);
        pd::write_with(dir / "correlation_matrix.csv",
                       [&](std::ostream& os) { write_matrix_csv(os, out.correlation.names, out.correlation.value); });
        pd::write_with(dir / "distance_matrix.csv", [&](std::ostream& os) { write_matrix_csv(os, out.correlation.names, dm.d); });
        OptimizeOptions oo;
        oo.max_steps = cfg.max_steps;
        oo.patience = cfg.patience;
        oo.ties = cfg.rank_ties;
        out.layout = layout_features(dm, choice.grid, oo);
        return 0;
    });

    run_stage(Stage::Render, [&] {
        out.bundle = emit_bundle(out.augmented, out.layout, dir, cfg.dataset_name(), sample_ids);
        pd::write_json(dir / "layout.json", pd::layout_json(out.layout, out.bundle.manifest));
        return 0;
    });
    return out;
}

/// Artifact names owned by a transform run; cleared before a new run.
inline const std::vector<std::string>& artifact_names()
{
    static const std::vector<std::string> names{
        "images",          "manifest.csv",       "legend.png",       "layout.json",          "noise_report.csv",
        "importance.csv",  "correlation_matrix.csv", "distance_matrix.csv", "run_config.json", "normalization.json",
        "normalized.csv",  "augmented.csv",      "split.json",       "FAILED",               "report_correlation.csv",
        "report_pairs.csv"};
    return names;
}

inline void clear_artifacts(const std::filesystem::path& dir)
{
    namespace fs = std::filesystem;
    if (!fs::exists(dir))
        return;
    for (const auto& n : artifact_names())
        fs::remove_all(dir / n);
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_directory() && entry.path().filename().string().rfind("split_", 0) == 0)
            fs::remove_all(entry.path());
}

/// Full pipeline. On failure writes a FAILED marker naming the stage and
/// rethrows the StageError.
inline TransformResult run_transform(const RunConfig& cfg)
{
    namespace fs = std::filesystem;
    namespace pd = pipeline_detail;
    run_stage(Stage::Config, [&] {
        validate(cfg);
        return 0;
    });
    const fs::path out_dir(cfg.output);
    try {
        clear_artifacts(out_dir);
        fs::create_directories(out_dir);
        pd::write_json(out_dir / "run_config.json", to_json(cfg));

        auto raw = run_stage(Stage::Ingest, [&] {
            IngestOptions io;
            io.label_column = cfg.label;
            if (cfg.schema)
                io.schema = load_schema(*cfg.schema);
            auto ds = ingest(cfg.dataset, io);
            return cfg.undersample ? undersample(ds, cfg.seed) : ds;
        });

        TransformResult result;
        if (cfg.repeats == 0) {
            result.runs.push_back(transform_core(cfg, raw, {}, out_dir, {}));
            return result;
        }
        const auto splits = run_stage(Stage::Ingest, [&] {
            return stratified_splits(raw, cfg.train_fraction, cfg.repeats, cfg.seed);
        });
        for (std::size_t r = 0; r < splits.size(); ++r) {
            const auto dir = out_dir / ("split_" + std::to_string(r));
            fs::create_directories(dir);
            pd::write_json(dir / "split.json", {{"repeat", r}, {"train", splits[r].train}, {"test", splits[r].test}});
            result.runs.push_back(transform_core(cfg, raw, splits[r].train, dir, {}));
        }
        return result;
    } catch (const StageError& e) {
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        std::ofstream marker(out_dir / "FAILED", std::ios::binary);
        marker << "stage: " << to_string(e.stage()) << "\nexit_code: " << e.exit_code() << "\nerror: " << e.what()
               << "\n";
        throw;
    } catch (const std::exception& e) {
        StageError wrapped(Stage::Render, e.what());
        std::ofstream marker(out_dir / "FAILED", std::ios::binary);
        marker << "stage: render\nexit_code: 6\nerror: " << e.what() << "\n";
        throw wrapped;
    }
}

// ---------------------------------------------------------------------------
// Readers used by inspect and report

struct NoiseReportRow {
    std::string noisy_feature;
    std::string source;
    std::string type;
    double planned_power = 0.0;
    double achieved_power = 0.0;
    double association = 0.0;
    bool best_effort = false;
};

inline std::vector<NoiseReportRow> read_noise_report(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in)
        throw std::runtime_error("missing run artifact '" + p.string() + "'");
    text::CsvReader reader(in);
    std::vector<std::string> rec;
    reader.next(rec);
    std::vector<NoiseReportRow> out;
    while (reader.next(rec)) {
        if (rec.size() != 7)
            throw std::runtime_error("noise_report.csv: malformed row");
        out.push_back({rec[0], rec[1], rec[2], text::parse_double(rec[3]).value_or(0.0),
                       text::parse_double(rec[4]).value_or(0.0), text::parse_double(rec[5]).value_or(0.0),
                       rec[6] == "best_effort"});
    }
    return out;
}

inline std::vector<ManifestEntry> read_manifest(const std::filesystem::path& dir)
{
    std::ifstream in(dir / "manifest.csv", std::ios::binary);
    if (!in)
        throw std::runtime_error("missing run artifact '" + (dir / "manifest.csv").string() + "'");
    return read_manifest_csv(in);
}

/// Values table written as augmented.csv: feature name -> column.
struct ValueTable {
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;
};

inline ValueTable read_value_table(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in)
        throw std::runtime_error("missing run artifact '" + p.string() + "'");
    text::CsvReader reader(in);
    std::vector<std::string> rec;
    if (!reader.next(rec) || rec.size() < 2)
        throw std::runtime_error(p.filename().string() + ": missing header");
    ValueTable t;
    t.names.assign(rec.begin(), rec.end() - 1);
    t.columns.resize(t.names.size());
    while (reader.next(rec)) {
        if (rec.size() != t.names.size() + 1)
            throw std::runtime_error(p.filename().string() + ": malformed row");
        for (std::size_t f = 0; f < t.names.size(); ++f) {
            const auto v = text::parse_double(rec[f]);
            if (!v)
                throw std::runtime_error(p.filename().string() + ": non-numeric cell");
            t.columns[f].push_back(*v);
        }
    }
    return t;
}

/// Prints where `feature` (an original, a noisy copy, or "PAD") sits in the
/// image, with its noisy copies and the layout error summary.
inline void inspect(const std::filesystem::path& dir, const std::string& feature, std::ostream& os)
{
    const auto manifest = read_manifest(dir);
    const auto noise = read_noise_report(dir / "noise_report.csv");
    std::ifstream lin(dir / "layout.json");
    if (!lin)
        throw std::runtime_error("missing run artifact '" + (dir / "layout.json").string() + "'");
    const auto layout = nlohmann::json::parse(lin);

    auto cell_str = [](const ManifestEntry& e) {
        return "(" + std::to_string(e.row) + ", " + std::to_string(e.col) + ")";
    };
    auto summary = [&] {
        os << "layout: " << layout["rows"].get<std::size_t>() << "x" << layout["cols"].get<std::size_t>()
           << ", rank error " << std::setprecision(15) << layout["initial_error"].get<double>() << " -> "
           << layout["final_error"].get<double>() << " after " << layout["iterations"].get<std::size_t>()
           << " iterations (" << layout["swaps"].get<std::size_t>() << " swaps)\n";
    };

    if (feature == "PAD") {
        std::size_t count = 0;
        for (const auto& e : manifest)
            count += e.is_padding;
        os << "padding cells: " << count << "\n";
        for (const auto& e : manifest)
            if (e.is_padding)
                os << "  " << cell_str(e) << "\n";
        summary();
        return;
    }

    const auto it = std::find_if(manifest.begin(), manifest.end(), [&](const ManifestEntry& e) { return e.feature == feature; });
    if (it == manifest.end()) {
        std::vector<std::pair<std::size_t, std::string>> scored;
        for (const auto& e : manifest)
            if (!e.is_padding && !e.is_noisy)
                scored.emplace_back(text::edit_distance(feature, e.feature), e.feature);
        std::sort(scored.begin(), scored.end());
        std::string hint;
        for (std::size_t i = 0; i < std::min<std::size_t>(3, scored.size()); ++i)
            hint += (i ? ", " : "") + scored[i].second;
        throw std::invalid_argument("unknown feature '" + feature + "'; nearest matches: " + hint);
    }

    const std::string original = it->is_noisy ? it->source_feature : it->feature;
    const auto orig_it =
        std::find_if(manifest.begin(), manifest.end(), [&](const ManifestEntry& e) { return e.feature == original; });
    os << "feature " << original << " (" << orig_it->kind << ") at cell " << cell_str(*orig_it) << "\n";
    std::size_t copies = 0;
    for (const auto& r : noise)
        copies += r.source == original;
    os << "noisy copies: " << copies << "\n";
    for (const auto& r : noise) {
        if (r.source != original)
            continue;
        const auto c = std::find_if(manifest.begin(), manifest.end(),
                                    [&](const ManifestEntry& e) { return e.feature == r.noisy_feature; });
        os << "  " << r.noisy_feature << " at cell " << (c != manifest.end() ? cell_str(*c) : "?") << ", " << r.type
           << " power " << text::format_double(r.achieved_power) << ", association "
           << text::format_double(r.association) << (r.best_effort ? " [best effort]" : "")
           << (r.noisy_feature == feature ? "  <- queried" : "") << "\n";
    }
    summary();
}

struct ReportPaths {
    std::filesystem::path matrix;
    std::filesystem::path pairs;
};

/// Writes the association matrix with every original followed by its noisy
/// copies (report_correlation.csv) and the original/copy pairs with their
/// association and flag (report_pairs.csv).
inline ReportPaths report(const std::filesystem::path& dir)
{
    namespace pd = pipeline_detail;
    const auto manifest = read_manifest(dir);
    const auto noise = read_noise_report(dir / "noise_report.csv");
    const auto table = read_value_table(dir / "augmented.csv");

    std::map<std::string, FeatureKind, std::less<>> kinds;
    for (const auto& e : manifest)
        if (!e.is_padding)
            kinds[e.feature] = parse_feature_kind(e.kind);

    std::map<std::string, std::size_t, std::less<>> column_of;
    for (std::size_t f = 0; f < table.names.size(); ++f)
        column_of[table.names[f]] = f;

    std::map<std::string, std::vector<std::string>, std::less<>> copies_of;
    for (const auto& r : noise)
        copies_of[r.source].push_back(r.noisy_feature);

    TypedDataset ordered;
    std::vector<std::string> originals;
    for (const auto& name : table.names)
        if (std::none_of(noise.begin(), noise.end(), [&](const NoiseReportRow& r) { return r.noisy_feature == name; }))
            originals.push_back(name);
    auto add = [&](const std::string& name) {
        const auto k = kinds.find(name);
        const auto c = column_of.find(name);
        if (k == kinds.end() || c == column_of.end())
            throw std::runtime_error("run artifacts disagree about feature '" + name + "'");
        Feature f;
        f.name = name;
        f.kind = k->second;
        f.values = table.columns[c->second];
        ordered.features.push_back(std::move(f));
    };
    for (const auto& o : originals) {
        add(o);
        for (const auto& c : copies_of[o])
            add(c);
    }
    ordered.labels.assign(table.columns.empty() ? 0 : table.columns[0].size(), 0);

    const auto cm = correlation_matrix(ordered);
    ReportPaths paths{dir / "report_correlation.csv", dir / "report_pairs.csv"};
    pd::write_with(paths.matrix, [&](std::ostream& os) { write_matrix_csv(os, cm.names, cm.value); });
    pd::write_with(paths.pairs, [&](std::ostream& os) {
        text::write_csv_row(os, {"original", "copy", "association", "best_effort"});
        for (const auto& r : noise) {
            const std::size_t i = static_cast<std::size_t>(
                std::find(cm.names.begin(), cm.names.end(), r.source) - cm.names.begin());
            const std::size_t j = static_cast<std::size_t>(
                std::find(cm.names.begin(), cm.names.end(), r.noisy_feature) - cm.names.begin());
            text::write_csv_row(os, {r.source, r.noisy_feature, text::format_double(cm(i, j)), r.best_effort ? "1" : "0"});
        }
    });
    return paths;
}

} // namespace lmigtd
