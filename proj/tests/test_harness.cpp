#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "ndl/dataio.hpp"
#include "ndl/experiment.hpp"

using namespace ndl;

namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "ndl_harness" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// tiny three-class synthetic dataset on disk, IDX-encoded
struct DiskDataset {
    fs::path images;
    fs::path labels;
};

DiskDataset write_dataset(const fs::path& dir, uint64_t seed = 77) {
    RngState rng(seed);
    const LabeledDataset ds = make_synthetic(3, 80, 16, rng);
    DiskDataset out{dir / "imgs-idx3-ubyte", dir / "lbls-idx1-ubyte"};
    save_idx_dataset(ds, out.images.string(), out.labels.string());
    return out;
}

ExperimentConfig base_config(const DiskDataset& data, const fs::path& out_dir) {
    ExperimentConfig cfg;
    cfg.dataset.images_path = data.images.string();
    cfg.dataset.labels_path = data.labels.string();
    cfg.initial_classes = {0};
    cfg.presentation_order = {1, 2};
    cfg.condition = Condition::ndl_ir;
    cfg.architecture = {16, 8, 4};
    cfg.train.epochs = 6;
    cfg.train.minibatch_size = 10;
    cfg.train.noise_fraction = 0.05;
    cfg.ndl.max_nodes = {4, 4};
    cfg.ndl.max_outliers = 6;
    cfg.ndl.nodes_per_step = 2;
    cfg.ndl.plasticity_epochs = 4;
    cfg.ndl.stability_epochs = 2;
    cfg.ndl.replay_per_class = 40;
    cfg.seed = 99;
    cfg.output_dir = out_dir.string();
    return cfg;
}

}  // namespace

TEST_CASE("config parses from JSON with overrides and defaults") {
    const std::string text = R"({
      "dataset": {"images": "a", "labels": "b", "heldout_fraction": 0.2},
      "initial_classes": [1, 7],
      "presentation_order": [0, 2],
      "condition": "CL+IR",
      "architecture": [784, 64, 32, 16, 8],
      "train": {"learning_rate": 0.2, "epochs": 9},
      "neurogenesis": {"max_nodes": 10, "max_outliers": 30},
      "replay": {"per_class": 123},
      "seed": 5,
      "output_dir": "somewhere"
    })";
    const ExperimentConfig cfg = ExperimentConfig::from_json_text(text);
    CHECK(cfg.dataset.heldout_fraction == 0.2);
    CHECK(cfg.initial_classes == std::vector<int>{1, 7});
    CHECK(cfg.condition == Condition::cl_ir);
    CHECK(cfg.architecture.size() == 5);
    CHECK(cfg.train.learning_rate == 0.2);
    CHECK(cfg.train.epochs == 9);
    CHECK(cfg.train.minibatch_size == 20);  // default
    // scalar max_nodes broadcast to one entry per level
    CHECK(cfg.ndl.max_nodes == std::vector<size_t>{10, 10, 10, 10});
    CHECK(cfg.ndl.replay_per_class == 123);
    CHECK(cfg.seed == 5);
    cfg.validate();

    // round trip through the emitter
    const ExperimentConfig again = ExperimentConfig::from_json_text(cfg.to_json_text());
    CHECK(again.condition == cfg.condition);
    CHECK(again.ndl.max_nodes == cfg.ndl.max_nodes);
}

TEST_CASE("config rejects malformed input") {
    CHECK_THROWS_AS(ExperimentConfig::from_json_text("not json"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_json_text(R"({"condition": "XXL"})"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_json_text(R"({"train": {"epochs": "many"}})"),
                    ConfigError);

    ExperimentConfig cfg;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);  // no architecture

    cfg.architecture = {16, 8};
    cfg.initial_classes = {0, 0};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);  // duplicate class

    cfg.initial_classes = {0};
    cfg.presentation_order = {0};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);  // class presented twice

    cfg.presentation_order = {1};
    cfg.condition = Condition::ndl;
    cfg.ndl.max_nodes = {};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);  // NDL needs budgets
}

TEST_CASE("CL run with no presented classes yields only the pretraining round") {
    const fs::path dir = fresh_dir("cl_zero_rounds");
    const DiskDataset data = write_dataset(dir);
    ExperimentConfig cfg = base_config(data, dir / "out");
    cfg.condition = Condition::cl;
    cfg.presentation_order = {};
    const ExperimentResult res = run_experiment(cfg);
    CHECK(res.records.size() == 1);
    CHECK(res.records[0].round == 0);
    CHECK(res.records[0].class_learned == -1);
    CHECK(res.records[0].mean_re.size() == 1);  // only class 0 in the protocol
    CHECK(fs::exists(res.metrics_json));
    CHECK(fs::exists(res.metrics_csv));
}

TEST_CASE("runs are deterministic per seed and config") {
    const fs::path dir = fresh_dir("determinism");
    const DiskDataset data = write_dataset(dir);

    ExperimentConfig a = base_config(data, dir / "a");
    ExperimentConfig b = base_config(data, dir / "b");
    a.presentation_order = {1};
    b.presentation_order = {1};
    const ExperimentResult ra = run_experiment(a);
    const ExperimentResult rb = run_experiment(b);
    CHECK(slurp(ra.metrics_json) == slurp(rb.metrics_json));
    CHECK(slurp(ra.metrics_csv) == slurp(rb.metrics_csv));
    CHECK(slurp(ra.growth_jsonl) == slurp(rb.growth_jsonl));
    CHECK(slurp(ra.checkpoint_path) == slurp(rb.checkpoint_path));

    ExperimentConfig c = base_config(data, dir / "c");
    c.presentation_order = {1};
    c.seed = 100;  // different seed, different file
    const ExperimentResult rc = run_experiment(c);
    CHECK(slurp(ra.metrics_json) != slurp(rc.metrics_json));
}

TEST_CASE("interrupted pretrain+learn equals an uninterrupted run") {
    const fs::path dir = fresh_dir("resume");
    const DiskDataset data = write_dataset(dir);

    ExperimentConfig whole = base_config(data, dir / "whole");
    const ExperimentResult res_whole = run_experiment(whole);

    ExperimentConfig stepped = base_config(data, dir / "stepped");
    run_pretrain(stepped);
    run_learn_round(stepped, std::nullopt);
    const ExperimentResult res_stepped = run_learn_round(stepped, std::nullopt);

    CHECK(slurp(res_whole.metrics_json) == slurp(res_stepped.metrics_json));
    CHECK(slurp(res_whole.metrics_csv) == slurp(res_stepped.metrics_csv));
    CHECK(slurp(res_whole.growth_jsonl) == slurp(res_stepped.growth_jsonl));
    CHECK(slurp(res_whole.checkpoint_path) == slurp(res_stepped.checkpoint_path));
}

TEST_CASE("NDL growth reports land in growth.jsonl and size fixed architectures") {
    const fs::path dir = fresh_dir("growth_report");
    const DiskDataset data = write_dataset(dir);

    ExperimentConfig ndl_cfg = base_config(data, dir / "ndl");
    ndl_cfg.presentation_order = {1};
    const ExperimentResult ndl_res = run_experiment(ndl_cfg);
    REQUIRE(fs::exists(ndl_res.growth_jsonl));
    CHECK_FALSE(ndl_res.growth.empty());

    const auto widths = final_widths_from_growth(ndl_res.growth_jsonl.string(), 2);
    CHECK(widths == ndl_res.final_widths);

    // CL at matched size starts from the grown NDL architecture
    ExperimentConfig cl_cfg = base_config(data, dir / "cl");
    cl_cfg.condition = Condition::cl;
    cl_cfg.presentation_order = {1};
    cl_cfg.growth_report_path = ndl_res.growth_jsonl.string();
    const ExperimentResult cl_res = run_experiment(cl_cfg);
    CHECK(cl_res.records.front().widths == ndl_res.final_widths);
    CHECK(cl_res.records.back().widths == ndl_res.final_widths);  // fixed size
}

TEST_CASE("compare_runs validates schema and class sets") {
    const fs::path dir = fresh_dir("compare");
    const DiskDataset data = write_dataset(dir);

    ExperimentConfig a = base_config(data, dir / "a");
    a.presentation_order = {1};
    const ExperimentResult ra = run_experiment(a);

    // self-comparison: cross-run deltas are zero
    const CompareResult self =
        compare_runs({ra.metrics_json.string(), ra.metrics_json.string()});
    CHECK(self.runs.size() == 2);
    const std::string table = format_compare_table(self);
    CHECK(table.find("NDL+IR_delta") != std::string::npos);
    for (int klass : self.runs[0].classes) {
        const double va = self.runs[0].final_re.at(klass).back();
        const double vb = self.runs[1].final_re.at(klass).back();
        CHECK(va == vb);
    }
    // row count of the per-level block: classes x levels + header
    size_t rows = 0;
    std::istringstream lines(table.substr(0, table.find("\n\n")));
    std::string line;
    while (std::getline(lines, line)) ++rows;
    CHECK(rows == 1 + self.runs[0].classes.size() * self.runs[0].levels);

    // mismatched class sets are rejected
    ExperimentConfig b = base_config(data, dir / "b");
    b.initial_classes = {0};
    b.presentation_order = {2};  // protocol covers 0,2 instead of 0,1
    const ExperimentResult rb = run_experiment(b);
    CHECK_THROWS_AS(compare_runs({ra.metrics_json.string(), rb.metrics_json.string()}),
                    Error);

    // schema violations are rejected
    const fs::path bogus = dir / "bogus.json";
    std::ofstream(bogus) << R"({"records": [{"round": 0}]})";
    CHECK_THROWS_AS(compare_runs({ra.metrics_json.string(), bogus.string()}), ConfigError);

    CHECK_THROWS_AS(compare_runs({ra.metrics_json.string()}), ConfigError);
}

TEST_CASE("learn rejects a class outside the protocol") {
    const fs::path dir = fresh_dir("learn_bad_class");
    const DiskDataset data = write_dataset(dir);
    ExperimentConfig cfg = base_config(data, dir / "out");
    run_pretrain(cfg);
    CHECK_THROWS_AS(run_learn_round(cfg, 9), ConfigError);
}

TEST_CASE("derive_round_seed is stable and collision-averse") {
    CHECK(derive_round_seed(1, 0) == derive_round_seed(1, 0));
    CHECK(derive_round_seed(1, 0) != derive_round_seed(1, 1));
    CHECK(derive_round_seed(1, 0) != derive_round_seed(2, 0));
}
