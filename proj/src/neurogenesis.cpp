#include "ndl/neurogenesis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ndl {

namespace {

Matrix select_rows(const Matrix& data, const std::vector<size_t>& rows) {
    Matrix out(rows.size(), data.cols);
    for (size_t i = 0; i < rows.size(); ++i) out.set_row(i, data.row(rows[i]));
    return out;
}

TrainConfig phase_config(const NeurogenesisConfig& cfg, size_t epochs) {
    TrainConfig tc;
    tc.learning_rate = cfg.learning_rate;
    tc.epochs = epochs;
    tc.minibatch_size = cfg.minibatch_size;
    tc.noise_fraction = cfg.noise_fraction;
    return tc;
}

std::map<int, double> per_class_mean_re(const StackedAutoencoder& ae,
                                        const std::map<int, Matrix>& class_data, size_t level) {
    std::map<int, double> out;
    for (const auto& [label, data] : class_data) {
        if (data.rows > 0) out[label] = ae.mean_reconstruction_error(data, level);
    }
    return out;
}

}  // namespace

size_t NeurogenesisConfig::effective_max_outliers(size_t new_class_rows) const {
    if (max_outlier_fraction >= 0.0) {
        return static_cast<size_t>(std::floor(max_outlier_fraction *
                                              static_cast<double>(new_class_rows)));
    }
    return max_outliers;
}

void NeurogenesisConfig::validate(size_t depth) const {
    if (thresholds.size() != depth) {
        throw ConfigError("neurogenesis: " + std::to_string(thresholds.size()) +
                          " thresholds for " + std::to_string(depth) + " levels");
    }
    if (max_nodes.size() != depth) {
        throw ConfigError("neurogenesis: " + std::to_string(max_nodes.size()) +
                          " node budgets for " + std::to_string(depth) + " levels");
    }
    for (double t : thresholds) {
        if (!(t > 0.0)) throw ConfigError("neurogenesis: thresholds must be positive");
    }
    if (nodes_per_step < 1) throw ConfigError("neurogenesis: nodes_per_step must be >= 1");
    if (decoder_lr_divisor < 1.0) {
        throw ConfigError("neurogenesis: decoder_lr_divisor must be >= 1");
    }
}

std::vector<size_t> detect_outliers(const StackedAutoencoder& ae, const Matrix& data,
                                    size_t level, double threshold) {
    std::vector<size_t> out;
    for (size_t r = 0; r < data.rows; ++r) {
        if (ae.reconstruction_error(data.row(r), level) > threshold) out.push_back(r);
    }
    return out;
}

Vec calibrate_thresholds(const StackedAutoencoder& ae, const Matrix& data, double percentile) {
    if (data.rows == 0) throw EmptyInputError("calibrate_thresholds: no rows");
    if (!(percentile > 0.0 && percentile <= 100.0)) {
        throw ConfigError("calibrate_thresholds: percentile outside (0, 100]");
    }
    Vec thresholds(ae.depth());
    Vec errors(data.rows);
    for (size_t level = 1; level <= ae.depth(); ++level) {
        for (size_t r = 0; r < data.rows; ++r) {
            errors[r] = ae.reconstruction_error(data.row(r), level);
        }
        std::sort(errors.begin(), errors.end());
        const size_t rank = static_cast<size_t>(
            std::ceil(percentile / 100.0 * static_cast<double>(errors.size())));
        thresholds[level - 1] = errors[std::min(errors.size() - 1, rank == 0 ? 0 : rank - 1)];
    }
    return thresholds;
}

LevelReport neurogenesis_level(StackedAutoencoder& ae, const Matrix& new_data,
                               const Matrix& stable_train, size_t level,
                               const NeurogenesisConfig& cfg, RngState& rng,
                               size_t forced_nodes) {
    cfg.validate(ae.depth());
    LevelReport report;
    report.level = level;
    report.width_before = ae.width(level);
    report.width_after = report.width_before;
    if (new_data.rows == 0) return report;

    const double threshold = cfg.thresholds[level - 1];
    const size_t budget = cfg.max_nodes[level - 1];
    const size_t allowed = cfg.effective_max_outliers(new_data.rows);

    std::vector<size_t> outliers = detect_outliers(ae, new_data, level, threshold);
    report.outliers_before = outliers.size();
    report.outliers_after = outliers.size();

    // The SHL pair for this level reconstructs the representation one level
    // down; levels below are final for the round, so encode once.
    const Matrix base = level == 1 ? new_data : ae.encode_rows(new_data, level - 1);
    const Matrix stable = level == 1 ? stable_train : ae.encode_rows(stable_train, level - 1);

    const size_t boundary = report.width_before;  // everything below stays frozen
    const LrMask plasticity = LrMask::plasticity(cfg.decoder_lr_divisor);
    const LrMask stability = LrMask::stability();

    size_t pending_forced = std::min(forced_nodes, budget);
    while (pending_forced > 0 ||
           (outliers.size() > allowed && report.nodes_added < budget)) {
        const size_t step = pending_forced > 0
                                ? pending_forced
                                : std::min(cfg.nodes_per_step, budget - report.nodes_added);
        pending_forced = 0;
        ae.grow_level(level, step, rng);
        report.nodes_added += step;
        ++report.iterations;

        if (!outliers.empty()) {
            const Matrix outlier_rows = select_rows(base, outliers);
            train_shl(ae.encoder(level), ae.decoder(level), outlier_rows,
                      phase_config(cfg, cfg.plasticity_epochs), plasticity, boundary, rng);
        }
        train_shl(ae.encoder(level), ae.decoder(level), stable,
                  phase_config(cfg, cfg.stability_epochs), stability, boundary, rng);

        outliers = detect_outliers(ae, new_data, level, threshold);
        report.outliers_after = outliers.size();
    }

    report.width_after = ae.width(level);
    return report;
}

void propagate_to_next_level(StackedAutoencoder& ae, size_t level, const Matrix& new_data,
                             const Matrix& stable_train, const NeurogenesisConfig& cfg,
                             RngState& rng) {
    if (level >= ae.depth()) {
        throw LevelError("propagate_to_next_level: level " + std::to_string(level) +
                         " has no next level");
    }
    const Matrix enc_new = ae.encode_rows(new_data, level);
    const Matrix enc_stable = ae.encode_rows(stable_train, level);
    train_shl(ae.encoder(level + 1), ae.decoder(level + 1), enc_new,
              phase_config(cfg, cfg.plasticity_epochs), LrMask::uniform(1.0), 0, rng);
    train_shl(ae.encoder(level + 1), ae.decoder(level + 1), enc_stable,
              phase_config(cfg, cfg.stability_epochs), LrMask::uniform(1.0), 0, rng);
}

size_t GrowthReport::total_nodes_added() const {
    size_t total = 0;
    for (const auto& l : levels) total += l.nodes_added;
    return total;
}

NdlResult run_ndl(StackedAutoencoder& ae, const Matrix& new_class_data, int new_label,
                  const ReplayStore& store, const NeurogenesisConfig& cfg, RngState& rng) {
    cfg.validate(ae.depth());

    // Snapshots are drawn before any growth; they feed the stabilization set
    // for the whole round and the store refit afterwards.
    std::map<int, Matrix> snapshots =
        make_replay_snapshots(store, ae, cfg.replay_per_class, rng);
    const Matrix stable_train = build_stable_train(new_class_data, snapshots, rng);

    std::map<int, Matrix> eval_sets = snapshots;
    eval_sets[new_label] = new_class_data;

    GrowthReport report;
    report.new_class = new_label;
    report.levels.resize(ae.depth());
    for (size_t level = 1; level <= ae.depth(); ++level) {
        report.levels[level - 1].mean_re_before = per_class_mean_re(ae, eval_sets, level);
    }

    bool previous_grew = false;
    for (size_t level = 1; level <= ae.depth(); ++level) {
        const size_t forced = previous_grew ? cfg.nodes_per_step : 0;
        LevelReport lr = neurogenesis_level(ae, new_class_data, stable_train, level, cfg, rng,
                                            forced);
        const bool grew = lr.nodes_added > 0;
        lr.mean_re_before = std::move(report.levels[level - 1].mean_re_before);
        report.levels[level - 1] = std::move(lr);
        if (grew && level < ae.depth()) {
            propagate_to_next_level(ae, level, new_class_data, stable_train, cfg, rng);
        }
        previous_grew = grew;
    }

    for (size_t level = 1; level <= ae.depth(); ++level) {
        report.levels[level - 1].mean_re_after = per_class_mean_re(ae, eval_sets, level);
    }

    snapshots[new_label] = new_class_data;
    ReplayStore refreshed = refresh_store(ae, snapshots, cfg.replay_ridge);
    return NdlResult{std::move(refreshed), std::move(report)};
}

}  // namespace ndl
