#pragma once

// Per-sample grayscale rasters, PNG I/O, the cell manifest and the legend.

#include "igtd.hpp"
#include "noise.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lmigtd {

/// 8-bit single-channel raster in row-major order.
struct Raster {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t channels = 1;
    std::vector<std::uint8_t> pixels;

    std::uint8_t at(std::size_t r, std::size_t c, std::size_t ch = 0) const
    {
        return pixels[(r * cols + c) * channels + ch];
    }

    bool operator==(const Raster&) const = default;
};

inline std::uint8_t quantize(double v)
{
    if (!(v >= 0.0 && v <= 1.0))
        throw std::domain_error("pixel value " + text::format_double(v) + " lies outside [0, 1]");
    return static_cast<std::uint8_t>(std::lround(255.0 * v));
}

/// Intensity round(255 v) at each feature's cell, 0 on padding cells.
/// `sample` holds one value per laid-out feature.
inline Raster render_sample(std::span<const double> sample, const PixelLayout& layout)
{
    if (sample.size() != layout.n_features)
        throw std::invalid_argument("render_sample: sample has " + std::to_string(sample.size()) +
                                    " values, layout holds " + std::to_string(layout.n_features) + " features");
    Raster img{layout.grid.rows, layout.grid.cols, 1, std::vector<std::uint8_t>(layout.grid.cells(), 0)};
    for (std::size_t f = 0; f < layout.n_features; ++f)
        img.pixels[layout.cell_of[f]] = quantize(sample[f]);
    return img;
}

// ---------------------------------------------------------------------------
// PNG

namespace png_detail {

struct FileCloser {
    void operator()(std::FILE* f) const noexcept
    {
        if (f)
            std::fclose(f);
    }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] inline void on_error(png_structp png, png_const_charp msg)
{
    auto* what = static_cast<std::string*>(png_get_error_ptr(png));
    if (what)
        *what = msg;
    png_longjmp(png, 1);
}

inline void on_warning(png_structp, png_const_charp) {}

} // namespace png_detail

/// Writes a grayscale (1 channel) or RGB (3 channel) 8-bit PNG.
inline void write_png(const std::filesystem::path& path, const Raster& img)
{
    if (img.channels != 1 && img.channels != 3)
        throw std::invalid_argument("write_png: only 1 or 3 channels are supported");
    png_detail::File fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp)
        throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    std::string err;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_detail::on_error, png_detail::on_warning);
    if (!png)
        throw std::runtime_error("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    std::vector<png_bytep> rows(img.rows);
    for (std::size_t r = 0; r < img.rows; ++r)
        rows[r] = const_cast<png_bytep>(img.pixels.data() + r * img.cols * img.channels);
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("writing '" + path.string() + "' failed: " + err);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.cols), static_cast<png_uint_32>(img.rows), 8,
                 img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

/// Reads an 8-bit grayscale or RGB PNG.
inline Raster read_png(const std::filesystem::path& path)
{
    png_detail::File fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp)
        throw std::runtime_error("cannot open '" + path.string() + "'");
    std::string err;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_detail::on_error, png_detail::on_warning);
    if (!png)
        throw std::runtime_error("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    Raster img;
    std::vector<png_bytep> rows;
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("reading '" + path.string() + "' failed: " + err);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);
    const auto color = png_get_color_type(png, info);
    if (png_get_bit_depth(png, info) != 8 || (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_RGB))
        png_error(png, "unsupported PNG format (expected 8-bit gray or RGB)");
    img.cols = png_get_image_width(png, info);
    img.rows = png_get_image_height(png, info);
    img.channels = color == PNG_COLOR_TYPE_GRAY ? 1 : 3;
    img.pixels.resize(img.rows * img.cols * img.channels);
    rows.resize(img.rows);
    for (std::size_t r = 0; r < img.rows; ++r)
        rows[r] = img.pixels.data() + r * img.cols * img.channels;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

// ---------------------------------------------------------------------------
// Manifest and legend

struct ManifestEntry {
    std::size_t row = 0;
    std::size_t col = 0;
    std::string feature;        // "PAD" for padding cells
    std::string source_feature; // empty unless noisy
    std::string kind;           // feature kind, or "padding"
    bool is_padding = false;
    bool is_noisy = false;
};

/// One entry per cell in row-major order.
inline std::vector<ManifestEntry> build_manifest(const AugmentedDataset& aug, const PixelLayout& layout)
{
    const auto element_at = layout.element_at();
    const std::size_t n_orig = aug.n_original();
    std::vector<ManifestEntry> out;
    out.reserve(layout.grid.cells());
    for (std::size_t cell = 0; cell < layout.grid.cells(); ++cell) {
        ManifestEntry e;
        e.row = layout.grid.row_of(cell);
        e.col = layout.grid.col_of(cell);
        const std::size_t el = element_at[cell];
        if (layout.is_padding_element(el)) {
            e.feature = "PAD";
            e.kind = "padding";
            e.is_padding = true;
        } else if (el < n_orig) {
            e.feature = aug.base.features[el].name;
            e.kind = std::string(to_string(aug.base.features[el].kind));
        } else {
            const auto& nf = aug.noisy[el - n_orig];
            e.feature = nf.name;
            e.source_feature = aug.lineage(nf);
            e.kind = std::string(to_string(aug.base.features[nf.source].kind));
            e.is_noisy = true;
        }
        out.push_back(std::move(e));
    }
    return out;
}

inline void write_manifest_csv(std::ostream& os, const std::vector<ManifestEntry>& manifest)
{
    text::write_csv_row(os, {"row", "col", "feature", "source_feature", "kind", "is_padding", "is_noisy"});
    for (const auto& e : manifest)
        text::write_csv_row(os, {std::to_string(e.row), std::to_string(e.col), e.feature, e.source_feature, e.kind,
                                 e.is_padding ? "1" : "0", e.is_noisy ? "1" : "0"});
}

inline std::vector<ManifestEntry> read_manifest_csv(std::istream& in)
{
    text::CsvReader reader(in);
    std::vector<std::string> rec;
    if (!reader.next(rec) || rec.size() != 7 || rec[0] != "row")
        throw std::runtime_error("manifest.csv: unexpected header");
    std::vector<ManifestEntry> out;
    while (reader.next(rec)) {
        if (rec.size() != 7)
            throw std::runtime_error("manifest.csv: malformed row");
        out.push_back({std::stoul(rec[0]), std::stoul(rec[1]), rec[2], rec[3], rec[4], rec[5] == "1", rec[6] == "1"});
    }
    return out;
}

using Rgb = std::array<std::uint8_t, 3>;

/// Reserved legend colour for padding cells; no feature hue maps to it.
inline constexpr Rgb padding_color{0, 0, 0};

/// Distinct hue per original feature (golden-angle spacing), medium
/// saturation and value so no colour is black.
inline Rgb feature_color(std::size_t index)
{
    const double h = std::fmod(static_cast<double>(index) * 137.50776405, 360.0) / 60.0;
    const double s = 0.75, v = 0.9;
    const double c = v * s;
    const double x = c * (1.0 - std::abs(std::fmod(h, 2.0) - 1.0));
    const double m = v - c;
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(h)) {
    case 0: r = c, g = x; break;
    case 1: r = x, g = c; break;
    case 2: g = c, b = x; break;
    case 3: g = x, b = c; break;
    case 4: r = x, b = c; break;
    default: r = c, b = x; break;
    }
    auto to8 = [&](double u) { return static_cast<std::uint8_t>(std::lround(255.0 * (u + m))); };
    return {to8(r), to8(g), to8(b)};
}

/// Noisy copies use their source's colour blended halfway toward white.
inline Rgb tint(const Rgb& c)
{
    return {static_cast<std::uint8_t>((c[0] + 255 + 1) / 2), static_cast<std::uint8_t>((c[1] + 255 + 1) / 2),
            static_cast<std::uint8_t>((c[2] + 255 + 1) / 2)};
}

/// RGB legend with `scale` x `scale` pixels per cell.
inline Raster render_legend(const AugmentedDataset& aug, const PixelLayout& layout, std::size_t scale = 16)
{
    const auto element_at = layout.element_at();
    const std::size_t n_orig = aug.n_original();
    Raster img{layout.grid.rows * scale, layout.grid.cols * scale, 3,
               std::vector<std::uint8_t>(layout.grid.cells() * scale * scale * 3, 0)};
    for (std::size_t cell = 0; cell < layout.grid.cells(); ++cell) {
        const std::size_t el = element_at[cell];
        Rgb color = padding_color;
        if (!layout.is_padding_element(el))
            color = el < n_orig ? feature_color(el) : tint(feature_color(aug.noisy[el - n_orig].source));
        const std::size_t r0 = layout.grid.row_of(cell) * scale, c0 = layout.grid.col_of(cell) * scale;
        for (std::size_t r = r0; r < r0 + scale; ++r)
            for (std::size_t c = c0; c < c0 + scale; ++c)
                for (std::size_t ch = 0; ch < 3; ++ch)
                    img.pixels[(r * img.cols + c) * 3 + ch] = color[ch];
    }
    return img;
}

/// Keeps [A-Za-z0-9._-] and replaces anything else with '_'.
inline std::string sanitize_filename(std::string_view s)
{
    std::string out(s);
    for (char& c : out)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-'))
            c = '_';
    return out;
}

struct ImageBundle {
    std::vector<std::filesystem::path> images;
    std::vector<ManifestEntry> manifest;
    std::filesystem::path manifest_path;
    std::filesystem::path legend_path;
};

/// Writes images/{dataset}_{index}_{label}.png for every sample plus
/// manifest.csv and legend.png in `out_dir`. `sample_ids` gives the index
/// used in each filename (defaults to the row number).
inline ImageBundle emit_bundle(const AugmentedDataset& aug, const PixelLayout& layout, const std::filesystem::path& out_dir,
                               const std::string& dataset_name, std::span<const std::size_t> sample_ids = {})
{
    namespace fs = std::filesystem;
    const auto flat = aug.flatten();
    if (flat.n_features() != layout.n_features)
        throw std::invalid_argument("emit: layout does not match the augmented dataset");
    if (!sample_ids.empty() && sample_ids.size() != flat.n_samples())
        throw std::invalid_argument("emit: sample id count does not match the dataset");
    fs::create_directories(out_dir / "images");

    ImageBundle bundle;
    std::set<std::string> seen;
    std::vector<double> row(flat.n_features());
    const std::string prefix = sanitize_filename(dataset_name);
    for (std::size_t i = 0; i < flat.n_samples(); ++i) {
        const std::size_t id = sample_ids.empty() ? i : sample_ids[i];
        const std::string name = prefix + "_" + std::to_string(id) + "_" +
                                 sanitize_filename(flat.class_names[static_cast<std::size_t>(flat.labels[i])]) + ".png";
        if (!seen.insert(name).second)
            throw std::runtime_error("duplicate output image name '" + name + "'");
        for (std::size_t f = 0; f < flat.n_features(); ++f)
            row[f] = flat.features[f].values[i];
        const auto path = out_dir / "images" / name;
        write_png(path, render_sample(row, layout));
        bundle.images.push_back(path);
    }

    bundle.manifest = build_manifest(aug, layout);
    bundle.manifest_path = out_dir / "manifest.csv";
    {
        std::ofstream os(bundle.manifest_path, std::ios::binary);
        if (!os)
            throw std::runtime_error("cannot write '" + bundle.manifest_path.string() + "'");
        write_manifest_csv(os, bundle.manifest);
    }
    bundle.legend_path = out_dir / "legend.png";
    write_png(bundle.legend_path, render_legend(aug, layout));
    return bundle;
}

} // namespace lmigtd
