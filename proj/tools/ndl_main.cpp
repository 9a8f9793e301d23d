// ndl: continual-learning experiment runner for growing stacked denoising
// autoencoders with intrinsic replay.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ndl/checkpoint.hpp"
#include "ndl/dataio.hpp"
#include "ndl/digits.hpp"
#include "ndl/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct CommonOpts {
    std::string config_path;
    std::string output_dir;  // CLI override
    std::string condition;
    std::string growth_report;
    int64_t seed = -1;
};

// Precedence: CLI flag > NDL_OUTPUT_DIR > config file > built-in default.
ndl::ExperimentConfig load_config(const CommonOpts& opts) {
    ndl::ExperimentConfig cfg = ndl::ExperimentConfig::from_json_file(opts.config_path);
    if (const char* env = std::getenv("NDL_OUTPUT_DIR"); env && *env) cfg.output_dir = env;
    if (!opts.output_dir.empty()) cfg.output_dir = opts.output_dir;
    if (!opts.condition.empty()) cfg.condition = ndl::parse_condition(opts.condition);
    if (!opts.growth_report.empty()) cfg.growth_report_path = opts.growth_report;
    if (opts.seed >= 0) cfg.seed = uint64_t(opts.seed);
    return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "experiment config (JSON)")->required();
    cmd->add_option("--out", opts.output_dir, "output directory (overrides NDL_OUTPUT_DIR)");
    cmd->add_option("--condition", opts.condition, "CL, NDL, CL+IR or NDL+IR");
    cmd->add_option("--growth-report", opts.growth_report,
                    "growth.jsonl whose final widths size a fixed architecture");
    cmd->add_option("--seed", opts.seed, "random seed");
}

void print_result(const ndl::ExperimentResult& res) {
    std::cout << "wrote " << res.metrics_json.string() << "\n";
    const auto& last = res.records.back();
    std::cout << "round " << last.round << " widths:";
    for (size_t w : last.widths) std::cout << " " << w;
    std::cout << "\n";
}

int run_inspect(const std::string& path) {
    const ndl::Checkpoint ckpt = ndl::load_checkpoint(path);
    std::cout << "model: input " << ckpt.model.input_dim() << ", levels " << ckpt.model.depth()
              << "\n";
    for (size_t l = 1; l <= ckpt.model.depth(); ++l) {
        std::cout << "  level " << l << ": width " << ckpt.model.width(l) << " (encoder "
                  << ckpt.model.encoder(l).out_dim() << "x" << ckpt.model.encoder(l).in_dim()
                  << ")\n";
    }
    if (ckpt.store.empty()) {
        std::cout << "replay store: empty\n";
    } else {
        std::cout << "replay store: code width " << ckpt.store.model_code_width() << "\n";
        for (const auto& [label, stats] : ckpt.store.all()) {
            std::cout << "  class " << label << ": " << stats.sample_count << " samples\n";
        }
    }
    return kExitOk;
}

int run_gen_digits(const std::string& out_dir, std::vector<int> classes, size_t per_class,
                   uint64_t seed) {
    if (classes.empty()) classes = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    std::filesystem::create_directories(out_dir);
    ndl::RngState rng(seed);
    const ndl::LabeledDataset ds = ndl::make_digit_dataset(classes, per_class, rng);
    const auto images = std::filesystem::path(out_dir) / "digits-images-idx3-ubyte";
    const auto labels = std::filesystem::path(out_dir) / "digits-labels-idx1-ubyte";
    ndl::save_idx_dataset(ds, images.string(), labels.string());
    std::cout << "wrote " << ds.size() << " images to " << images.string() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"growing stacked denoising autoencoder with intrinsic replay"};
    app.require_subcommand(1);

    CommonOpts pretrain_opts, learn_opts, run_opts;
    std::optional<int> learn_class;
    std::vector<std::string> compare_files;
    std::string compare_out;
    std::string inspect_path;
    std::string gen_out = "data";
    std::vector<int> gen_classes;
    size_t gen_per_class = 500;
    uint64_t gen_seed = 42;

    CLI::App* pretrain = app.add_subcommand("pretrain", "pretrain on the initial classes");
    add_common(pretrain, pretrain_opts);

    CLI::App* learn = app.add_subcommand("learn", "learn one more class (resumes from --out)");
    add_common(learn, learn_opts);
    learn->add_option("--class", learn_class, "class label (default: next in order)");

    CLI::App* runcmd = app.add_subcommand("run", "run the full protocol");
    add_common(runcmd, run_opts);

    CLI::App* compare = app.add_subcommand("compare", "compare metrics files across runs");
    compare->add_option("files", compare_files, "metrics.json files")->expected(-2);
    compare->add_option("--out", compare_out, "write the table here instead of stdout");

    CLI::App* inspect = app.add_subcommand("inspect", "print checkpoint shapes and store");
    inspect->add_option("checkpoint", inspect_path, "checkpoint file")->required();

    CLI::App* gen = app.add_subcommand("gen-digits", "write a stroke-rendered digit dataset");
    gen->add_option("--out", gen_out, "output directory");
    gen->add_option("--classes", gen_classes, "digits to render (default 0..9)");
    gen->add_option("--per-class", gen_per_class, "samples per class");
    gen->add_option("--seed", gen_seed, "random seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;  // bad usage is a config error
    }

    try {
        if (pretrain->parsed()) {
            print_result(ndl::run_pretrain(load_config(pretrain_opts)));
            return kExitOk;
        }
        if (learn->parsed()) {
            print_result(ndl::run_learn_round(load_config(learn_opts), learn_class));
            return kExitOk;
        }
        if (runcmd->parsed()) {
            print_result(ndl::run_experiment(load_config(run_opts)));
            return kExitOk;
        }
        if (compare->parsed()) {
            const std::string table = ndl::format_compare_table(ndl::compare_runs(compare_files));
            if (compare_out.empty()) {
                std::cout << table;
            } else {
                std::ofstream out(compare_out, std::ios::trunc);
                if (!out) throw ndl::DataError("cannot write " + compare_out);
                out << table;
                std::cout << "wrote " << compare_out << "\n";
            }
            return kExitOk;
        }
        if (inspect->parsed()) return run_inspect(inspect_path);
        if (gen->parsed()) return run_gen_digits(gen_out, gen_classes, gen_per_class, gen_seed);
    } catch (const ndl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ndl::ParseError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const ndl::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const ndl::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitOk;
}
