#include <lmigtd/pipeline.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <iomanip>
#include <iostream>

namespace {

std::filesystem::path default_output_root()
{
    if (const char* env = std::getenv("LMIGTD_OUTPUT_ROOT"); env && *env)
        return env;
    return "lmigtd_out";
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Turn a tabular dataset into per-sample grayscale images"};
    app.require_subcommand(1);

    // transform
    auto* transform = app.add_subcommand("transform", "Run the full tabular-to-image pipeline");
    std::string config_path;
    lmigtd::RunConfig flags;
    std::string mode_flag;
    std::size_t side_flag = 0;
    transform->add_option("--config", config_path, "RunConfig JSON; flags override its fields")->check(CLI::ExistingFile);
    auto* o_dataset = transform->add_option("--dataset", flags.dataset, "Input CSV");
    auto* o_label = transform->add_option("--label", flags.label, "Label column name");
    std::string schema_flag;
    auto* o_schema = transform->add_option("--schema", schema_flag, "Schema JSON declaring feature kinds");
    auto* o_name = transform->add_option("--name", flags.name, "Dataset name used in image file names");
    auto* o_mode = transform->add_option("--mode", mode_flag, "Noise allocation: HoNG or HeNG");
    auto* o_side = transform->add_option("--target-side", side_flag, "Grid side length");
    auto* o_assoc = transform->add_option("--target-min-assoc", flags.target_min_assoc, "Association floor for noisy copies");
    auto* o_seed = transform->add_option("--seed", flags.seed, "Master seed");
    auto* o_under = transform->add_flag("--undersample", flags.undersample, "Undersample to the minority class size");
    auto* o_frac = transform->add_option("--train-fraction", flags.train_fraction, "Train share of each split");
    auto* o_repeats = transform->add_option("--repeats", flags.repeats, "Number of stratified splits (0 = none)");
    auto* o_out = transform->add_option("--out", flags.output, "Output directory");
    auto* o_steps = transform->add_option("--max-steps", flags.max_steps, "Layout optimizer iteration cap");
    auto* o_patience = transform->add_option("--patience", flags.patience, "Idle iterations before the optimizer stops");
    auto* o_rounds = transform->add_option("--fs-rounds", flags.fs_rounds, "Feature-selection resampling rounds");
    std::string ties_flag;
    auto* o_ties = transform->add_option("--rank-ties", ties_flag, "Tie rule for distance ranks: lexicographic or average");

    // inspect
    auto* inspect = app.add_subcommand("inspect", "Locate a feature and its noisy copies in a run's images");
    std::string inspect_dir, inspect_feature;
    inspect->add_option("out_dir", inspect_dir, "Run output directory")->required();
    inspect->add_option("feature", inspect_feature, "Feature name, or PAD for padding cells")->required();

    // report
    auto* report = app.add_subcommand("report", "Write the original-vs-noisy association matrix of a run");
    std::string report_dir;
    report->add_option("out_dir", report_dir, "Run output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    if (*transform) {
        lmigtd::RunConfig cfg;
        try {
            if (!config_path.empty())
                cfg = lmigtd::load_run_config(config_path);
            if (o_dataset->count()) cfg.dataset = flags.dataset;
            if (o_label->count()) cfg.label = flags.label;
            if (o_schema->count()) cfg.schema = schema_flag;
            if (o_name->count()) cfg.name = flags.name;
            if (o_mode->count()) cfg.mode = lmigtd::parse_noise_mode(mode_flag);
            if (o_side->count()) cfg.target_side = side_flag;
            if (o_assoc->count()) cfg.target_min_assoc = flags.target_min_assoc;
            if (o_seed->count()) cfg.seed = flags.seed;
            if (o_under->count()) cfg.undersample = flags.undersample;
            if (o_frac->count()) cfg.train_fraction = flags.train_fraction;
            if (o_repeats->count()) cfg.repeats = flags.repeats;
            if (o_out->count()) cfg.output = flags.output;
            if (o_steps->count()) cfg.max_steps = flags.max_steps;
            if (o_patience->count()) cfg.patience = flags.patience;
            if (o_rounds->count()) cfg.fs_rounds = flags.fs_rounds;
            if (o_ties->count()) cfg.rank_ties = lmigtd::parse_rank_ties(ties_flag);
            if (cfg.output.empty() && !cfg.dataset.empty())
                cfg.output = (default_output_root() / cfg.dataset_name()).string();
        } catch (const std::exception& e) {
            std::cerr << "config: " << e.what() << "\n";
            return 1;
        }
        try {
            const auto result = lmigtd::run_transform(cfg);
            for (const auto& run : result.runs) {
                std::cout << run.dir.string() << ": " << run.bundle.images.size() << " images, "
                          << run.layout.grid.rows << "x" << run.layout.grid.cols << " grid, "
                          << run.augmented.noisy.size() << " noisy features, rank error " << std::setprecision(15) << run.layout.initial_error
                          << " -> " << run.layout.final_error << "\n";
            }
            return 0;
        } catch (const lmigtd::StageError& e) {
            std::cerr << e.what() << "\n";
            return e.exit_code();
        }
    }

    try {
        if (*inspect) {
            lmigtd::inspect(inspect_dir, inspect_feature, std::cout);
        } else if (*report) {
            const auto paths = lmigtd::report(report_dir);
            std::cout << paths.matrix.string() << "\n" << paths.pairs.string() << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
    return 0;
}
