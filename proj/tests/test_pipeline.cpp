#include <lmigtd/pipeline.hpp>

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace lmigtd;
namespace fs = std::filesystem;

namespace {

std::string data(const std::string& name) { return std::string(LMIGTD_TEST_DATA) + "/" + name; }

fs::path scratch(const std::string& name)
{
    const auto p = fs::temp_directory_path() / ("lmigtd_pipeline_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

RunConfig tae_config(const fs::path& out)
{
    RunConfig c;
    c.dataset = data("tae.csv");
    c.label = "class";
    c.output = out.string();
    c.seed = 3;
    return c;
}

int run_cli(const std::string& args, const std::string& env = "")
{
    const std::string cmd = env + (env.empty() ? "" : " ") + std::string(LMIGTD_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

} // namespace

TEST(Transform, TaeHeNGDefaults)
{
    const auto out = scratch("tae");
    const auto result = run_transform(tae_config(out));
    ASSERT_EQ(result.runs.size(), 1u);
    const auto& run = result.runs[0];
    EXPECT_EQ(run.bundle.images.size(), 151u);
    EXPECT_EQ(run.layout.grid, (Grid{8, 8}));
    EXPECT_EQ(run.augmented.noisy.size(), 59u);
    for (const char* f : {"manifest.csv", "legend.png", "layout.json", "noise_report.csv", "importance.csv",
                          "correlation_matrix.csv", "run_config.json", "augmented.csv", "normalization.json"})
        EXPECT_TRUE(fs::exists(out / f)) << f;
    const auto img = read_png(run.bundle.images[0]);
    EXPECT_EQ(img.rows, 8u);
    EXPECT_EQ(img.cols, 8u);
    const auto cfg = nlohmann::json::parse(slurp(out / "run_config.json"));
    EXPECT_EQ(cfg["mode"], "HeNG");
    EXPECT_EQ(cfg["seed"], 3);
}

TEST(Transform, HoNGWritesNoImportance)
{
    const auto out = scratch("hong");
    auto cfg = tae_config(out);
    cfg.mode = NoiseMode::HoNG;
    run_transform(cfg);
    EXPECT_FALSE(fs::exists(out / "importance.csv"));
}

TEST(Transform, SplitsGetSubdirectories)
{
    const auto out = scratch("splits");
    auto cfg = tae_config(out);
    cfg.repeats = 2;
    cfg.fs_rounds = 2;
    const auto result = run_transform(cfg);
    ASSERT_EQ(result.runs.size(), 2u);
    for (const char* d : {"split_0", "split_1"}) {
        EXPECT_TRUE(fs::exists(out / d / "manifest.csv"));
        EXPECT_TRUE(fs::exists(out / d / "split.json"));
    }
    const auto split = nlohmann::json::parse(slurp(out / "split_0" / "split.json"));
    EXPECT_EQ(split["train"].size() + split["test"].size(), 151u);
    EXPECT_TRUE(fs::exists(out / "run_config.json"));
}

TEST(Transform, RerunClearsStaleArtifacts)
{
    const auto out = scratch("stale");
    auto cfg = tae_config(out);
    run_transform(cfg);
    cfg.mode = NoiseMode::HoNG;
    run_transform(cfg);
    EXPECT_FALSE(fs::exists(out / "importance.csv"));
}

TEST(Transform, MissingDatasetIsIngestFailure)
{
    const auto out = scratch("missing");
    auto cfg = tae_config(out);
    cfg.dataset = data("no_such_file.csv");
    try {
        run_transform(cfg);
        FAIL() << "expected a StageError";
    } catch (const StageError& e) {
        EXPECT_EQ(e.stage(), Stage::Ingest);
        EXPECT_EQ(e.exit_code(), 2);
    }
    EXPECT_TRUE(fs::exists(out / "FAILED"));
    EXPECT_FALSE(fs::exists(out / "images"));
}

TEST(Transform, TooSmallGridIsLayoutFailure)
{
    const auto out = scratch("side");
    auto cfg = tae_config(out);
    cfg.target_side = 2;
    try {
        run_transform(cfg);
        FAIL() << "expected a StageError";
    } catch (const StageError& e) {
        EXPECT_EQ(e.exit_code(), 5);
    }
    EXPECT_NE(slurp(out / "FAILED").find("stage: igtd"), std::string::npos);
}

TEST(Config, JsonRoundTripAndMerge)
{
    RunConfig c;
    c.dataset = "d.csv";
    c.label = "y";
    c.mode = NoiseMode::HoNG;
    c.target_side = 9;
    c.repeats = 5;
    RunConfig back;
    merge_json(back, to_json(c));
    EXPECT_EQ(to_json(back), to_json(c));
    merge_json(back, nlohmann::json{{"seed", 99}});
    EXPECT_EQ(back.seed, 99u);
    EXPECT_EQ(back.mode, NoiseMode::HoNG);
}

TEST(Inspect, FeatureCopiesAndPadding)
{
    const auto out = scratch("inspect");
    RunConfig cfg;
    cfg.dataset = data("hepatitis.csv");
    cfg.label = "class";
    cfg.schema = data("hepatitis.schema.json");
    cfg.output = out.string();
    cfg.fs_rounds = 3;
    const auto result = run_transform(cfg);

    std::ostringstream os;
    inspect(out, "steroid", os);
    const auto text = os.str();
    EXPECT_NE(text.find("feature steroid (binary) at cell ("), std::string::npos);
    EXPECT_NE(text.find("layout: 8x8"), std::string::npos);
    std::size_t copies = 0;
    for (const auto& nf : result.runs[0].augmented.noisy)
        if (result.runs[0].augmented.lineage(nf) == "steroid") {
            ++copies;
            EXPECT_NE(text.find(nf.name + " at cell ("), std::string::npos);
        }
    EXPECT_NE(text.find("noisy copies: " + std::to_string(copies)), std::string::npos);

    std::ostringstream pad;
    inspect(out, "PAD", pad);
    EXPECT_NE(pad.str().find("padding cells: 0"), std::string::npos);

    try {
        std::ostringstream sink;
        inspect(out, "steriod", sink);
        FAIL() << "expected an error";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("steroid"), std::string::npos);
    }
}

TEST(Report, ZeroNoiseEqualsOriginalMatrix)
{
    const auto out = scratch("report0");
    RunConfig cfg;
    cfg.dataset = data("saheart.csv");
    cfg.label = "chd";
    cfg.output = out.string();
    cfg.target_side = 3; // 9 features on a 3x3 grid: no noise budget
    run_transform(cfg);
    const auto paths = report(out);
    EXPECT_EQ(slurp(paths.matrix), slurp(out / "correlation_matrix.csv"));
}

TEST(Report, CopiesAdjacentAndDeterministic)
{
    const auto out = scratch("report");
    run_transform(tae_config(out));
    const auto paths = report(out);
    const auto first = slurp(paths.matrix);
    const auto pairs = slurp(paths.pairs);
    report(out);
    EXPECT_EQ(slurp(paths.matrix), first);
    std::istringstream header(first.substr(0, first.find('\n')));
    std::string name;
    std::vector<std::string> names;
    while (std::getline(header, name, ','))
        names.push_back(name);
    ASSERT_EQ(names.size(), 65u);
    // Each original is followed directly by its copies.
    std::string current;
    for (std::size_t i = 1; i < names.size(); ++i) {
        const auto tilde = names[i].find('~');
        if (tilde == std::string::npos)
            current = names[i];
        else
            EXPECT_EQ(names[i].substr(0, tilde), current);
    }
    std::istringstream rows(pairs);
    std::string line;
    std::getline(rows, line);
    while (std::getline(rows, line)) {
        std::vector<std::string> f;
        std::istringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');)
            f.push_back(cell);
        ASSERT_EQ(f.size(), 4u);
        EXPECT_TRUE(std::abs(std::stod(f[2])) >= 0.90 || f[3] == "1") << line;
    }
}

TEST(Report, MissingArtifactsFail) { EXPECT_THROW(report(scratch("empty")), std::runtime_error); }

TEST(Cli, ExitCodesAndOverrides)
{
    const auto out = scratch("cli");
    EXPECT_EQ(run_cli("transform --dataset " + data("nope.csv") + " --label class --out " + out.string()), 2);
    EXPECT_TRUE(fs::exists(out / "FAILED"));
    EXPECT_EQ(run_cli("transform --bogus-flag"), 1);
    EXPECT_EQ(run_cli(""), 1);

    // Config file first, flags override.
    fs::create_directories(out);
    const auto cfg_path = out / "cfg.json";
    std::ofstream(cfg_path) << R"({"dataset": ")" << data("tae.csv")
                            << R"(", "label": "class", "mode": "HeNG", "seed": 1, "fs_rounds": 2})";
    const auto run_dir = out / "run";
    EXPECT_EQ(run_cli("transform --config " + cfg_path.string() + " --mode HoNG --out " + run_dir.string()), 0);
    const auto written = nlohmann::json::parse(slurp(run_dir / "run_config.json"));
    EXPECT_EQ(written["mode"], "HoNG");
    EXPECT_EQ(written["seed"], 1);
    EXPECT_EQ(run_cli("inspect " + run_dir.string() + " course"), 0);
    EXPECT_EQ(run_cli("inspect " + run_dir.string() + " nonsense"), 1);
    EXPECT_EQ(run_cli("report " + run_dir.string()), 0);
    EXPECT_TRUE(fs::exists(run_dir / "report_pairs.csv"));
}

TEST(Cli, EnvironmentSetsDefaultOutputRoot)
{
    const auto root = scratch("env_root");
    EXPECT_EQ(run_cli("transform --dataset " + data("tae.csv") + " --label class --fs-rounds 1",
                      "LMIGTD_OUTPUT_ROOT=" + root.string()),
              0);
    EXPECT_TRUE(fs::exists(root / "tae" / "manifest.csv"));
}
