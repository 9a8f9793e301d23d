#ifndef NDL_EXPERIMENT_HPP
#define NDL_EXPERIMENT_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ndl/autoencoder.hpp"
#include "ndl/checkpoint.hpp"
#include "ndl/dataio.hpp"
#include "ndl/neurogenesis.hpp"
#include "ndl/replay.hpp"

namespace ndl {

enum class Condition { cl, ndl, cl_ir, ndl_ir };

Condition parse_condition(const std::string& name);  // "CL", "NDL", "CL+IR", "NDL+IR"
std::string condition_name(Condition c);

struct DatasetConfig {
    std::string images_path;
    std::string labels_path;
    size_t max_train_per_class = 0;  // 0 = use everything
    double heldout_fraction = 0.1;   // last slice of each class, never trained
};

/// Full description of one experiment run. Loadable from JSON; CLI flags
/// override file keys.
struct ExperimentConfig {
    DatasetConfig dataset;
    std::vector<int> initial_classes;
    std::vector<int> presentation_order;
    Condition condition = Condition::ndl_ir;
    std::vector<size_t> architecture;  // {input_dim, w1, ..., wN}
    TrainConfig train;
    NeurogenesisConfig ndl;           // thresholds may be empty: calibrated after pretraining
    double threshold_percentile = 95.0;
    std::string growth_report_path;   // fixed-size conditions can match grown NDL widths
    uint64_t seed = 1234;
    std::string output_dir = "out";

    void validate() const;
    static ExperimentConfig from_json_text(const std::string& text);
    static ExperimentConfig from_json_file(const std::string& path);
    std::string to_json_text() const;
};

/// Per-round evaluation snapshot: held-out mean RE for every protocol class
/// at every level, plus the architecture at that point.
struct MetricsRecord {
    size_t round = 0;        // 0 = pretraining
    int class_learned = -1;  // -1 for the pretraining round
    std::string condition;
    std::vector<size_t> widths;     // hidden widths, levels 1..N
    std::map<int, Vec> mean_re;     // class -> per-level mean held-out RE
};

struct GrowthRound {
    size_t round = 0;
    GrowthReport report;
};

struct ExperimentResult {
    std::vector<MetricsRecord> records;
    std::vector<GrowthRound> growth;
    std::vector<size_t> final_widths;  // hidden widths after the last round
    std::filesystem::path output_dir;
    std::filesystem::path metrics_json;
    std::filesystem::path metrics_csv;
    std::filesystem::path growth_jsonl;
    std::filesystem::path checkpoint_path;
};

/// Runs the full protocol for cfg.condition: pretrain on the initial classes,
/// then one round per presented class, evaluating all protocol classes on
/// held-out data after every round. Writes metrics.json / metrics.csv /
/// growth.jsonl (all deterministic per seed), timings.csv (wall clock, not
/// deterministic), checkpoint.ndl and state.json into cfg.output_dir.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Pretraining only (round 0). Leaves a resumable checkpoint + state behind.
ExperimentResult run_pretrain(const ExperimentConfig& cfg);

/// One continual-learning round on top of an existing output directory,
/// resuming from its checkpoint and state. `klass` defaults to the next entry
/// of cfg.presentation_order. Produces files identical to an uninterrupted
/// run_experiment over the same rounds.
ExperimentResult run_learn_round(const ExperimentConfig& cfg, std::optional<int> klass);

/// Parsed summary of one metrics file, schema-validated.
struct RunSummary {
    std::string path;
    std::string condition;
    size_t levels = 0;
    std::set<int> classes;
    std::map<int, Vec> initial_re;  // per class, per level (round 0)
    std::map<int, Vec> final_re;    // per class, per level (last round)
};

struct CompareResult {
    std::vector<RunSummary> runs;
};

/// Loads and cross-checks >= 2 metrics files (schema, matching class sets and
/// level counts). Throws Error on mismatch, ConfigError on schema violations.
CompareResult compare_runs(const std::vector<std::string>& metrics_files);

/// Per-(class, level) initial/final/delta table plus a cross-run comparison of
/// final full-depth RE against the first run.
std::string format_compare_table(const CompareResult& result);

/// Reads a growth.jsonl and returns the hidden widths after the last round.
std::vector<size_t> final_widths_from_growth(const std::string& growth_jsonl_path,
                                             size_t levels);

/// Deterministic per-round seed derivation (splitmix64 over seed and round).
uint64_t derive_round_seed(uint64_t seed, uint64_t round);

}  // namespace ndl

#endif
