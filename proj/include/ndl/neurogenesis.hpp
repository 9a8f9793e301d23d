#ifndef NDL_NEUROGENESIS_HPP
#define NDL_NEUROGENESIS_HPP

#include <map>
#include <vector>

#include "ndl/autoencoder.hpp"
#include "ndl/replay.hpp"

namespace ndl {

struct NeurogenesisConfig {
    Vec thresholds;                 // per-level reconstruction-error thresholds
    std::vector<size_t> max_nodes;  // per-level growth budgets
    size_t max_outliers = 0;        // absolute count ...
    double max_outlier_fraction = -1.0;  // ... or share of the new class (>= 0 wins)
    size_t nodes_per_step = 5;
    size_t plasticity_epochs = 10;
    size_t stability_epochs = 5;
    double decoder_lr_divisor = 100.0;
    double learning_rate = 0.1;
    size_t minibatch_size = 20;
    double noise_fraction = 0.1;
    size_t replay_per_class = 1000;  // snapshot rows per previously seen class
    double replay_ridge = 0.0;       // <= 0 selects the default ridge

    size_t effective_max_outliers(size_t new_class_rows) const;
    void validate(size_t depth) const;
};

struct LevelReport {
    size_t level = 0;
    size_t nodes_added = 0;
    size_t iterations = 0;
    size_t outliers_before = 0;
    size_t outliers_after = 0;
    size_t width_before = 0;
    size_t width_after = 0;
    std::map<int, double> mean_re_before;  // per class, at this level
    std::map<int, double> mean_re_after;
};

struct GrowthReport {
    int new_class = 0;
    std::vector<LevelReport> levels;
    size_t total_nodes_added() const;
};

struct NdlResult {
    ReplayStore store;
    GrowthReport report;
};

/// Row indices whose level-L global reconstruction error strictly exceeds
/// `threshold`.
std::vector<size_t> detect_outliers(const StackedAutoencoder& ae, const Matrix& data,
                                    size_t level, double threshold);

/// Helper for choosing thresholds: the given percentile (nearest-rank) of
/// per-row reconstruction error at each level over `data`.
Vec calibrate_thresholds(const StackedAutoencoder& ae, const Matrix& data, double percentile);

/// Grow-and-train loop for one level. Repeats grow / plasticity (outliers
/// only: new nodes at full rate, old encoder rows frozen, old decoder columns
/// damped) / stability (full-rate training on the stabilization set, old
/// encoder rows still frozen) / re-detect until the outlier count is
/// acceptable or the node budget is spent. `forced_nodes` > 0 runs one
/// unconditional growth pass first (used when the previous level grew).
LevelReport neurogenesis_level(StackedAutoencoder& ae, const Matrix& new_data,
                               const Matrix& stable_train, size_t level,
                               const NeurogenesisConfig& cfg, RngState& rng,
                               size_t forced_nodes = 0);

/// After level L grew: train the level-(L+1) pair on encoded new data at full
/// rate, then on the encoded stabilization set at the damped rate.
void propagate_to_next_level(StackedAutoencoder& ae, size_t level, const Matrix& new_data,
                             const Matrix& stable_train, const NeurogenesisConfig& cfg,
                             RngState& rng);

/// One full neurogenesis round for one new class: build the stabilization set
/// once up front from replay snapshots, sweep levels 1..N (growing the next
/// level by nodes_per_step whenever the previous one grew), then refit the
/// replay store — snapshots plus the new class — against the grown model.
NdlResult run_ndl(StackedAutoencoder& ae, const Matrix& new_class_data, int new_label,
                  const ReplayStore& store, const NeurogenesisConfig& cfg, RngState& rng);

}  // namespace ndl

#endif
