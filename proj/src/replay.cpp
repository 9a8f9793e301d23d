#include "ndl/replay.hpp"

#include <algorithm>
#include <string>

namespace ndl {

void ReplayStore::insert(ClassStats stats) {
    if (model_code_width_ == 0 && stats_.empty()) {
        model_code_width_ = stats.code_width;
    }
    if (stats.code_width != model_code_width_) {
        throw StaleStatsError("class " + std::to_string(stats.label) + " has code width " +
                              std::to_string(stats.code_width) + ", store expects " +
                              std::to_string(model_code_width_));
    }
    stats_[stats.label] = std::move(stats);
}

const ClassStats& ReplayStore::stats_for(int label) const {
    auto it = stats_.find(label);
    if (it == stats_.end()) {
        throw StatsError("no statistics stored for class " + std::to_string(label));
    }
    return it->second;
}

double default_ridge(const Matrix& covariance) {
    double trace = 0.0;
    for (size_t i = 0; i < covariance.rows; ++i) trace += covariance(i, i);
    const double scaled = 1e-6 * trace / std::max<size_t>(1, covariance.rows);
    return std::max(scaled, 1e-12);
}

ClassStats fit_class_stats(const StackedAutoencoder& ae, const Matrix& class_data, int label,
                           double ridge) {
    if (class_data.rows == 0) {
        throw EmptyInputError("fit_class_stats: class " + std::to_string(label) +
                              " has no samples");
    }
    const Matrix codes = ae.encode_rows(class_data, ae.depth());
    auto [mean, cov] = mean_and_covariance(codes);
    double r = ridge > 0.0 ? ridge : default_ridge(cov);

    for (int attempt = 0;; ++attempt) {
        try {
            Matrix chol = cholesky(cov, r);
            return ClassStats{label, std::move(mean), std::move(chol), class_data.rows,
                              ae.top_width()};
        } catch (const FactorizationError&) {
            if (attempt >= 3) {
                throw StatsError("fit_class_stats: class " + std::to_string(label) +
                                 " covariance not factorizable up to ridge " + std::to_string(r));
            }
            r = std::max(r, 1e-12) * 10.0;
        }
    }
}

Matrix generate_replay(const StackedAutoencoder& ae, const ClassStats& stats, size_t count,
                       RngState& rng) {
    if (stats.code_width != ae.top_width()) {
        throw StaleStatsError("stats for class " + std::to_string(stats.label) +
                              " were fit at code width " + std::to_string(stats.code_width) +
                              ", model top width is " + std::to_string(ae.top_width()));
    }
    Matrix out(count, ae.input_dim());
    for (size_t r = 0; r < count; ++r) {
        const Vec latent = sample_gaussian(rng, stats.mean, stats.chol);
        Vec pixels = ae.decode_from_level(latent, ae.depth());
        for (double& p : pixels) p = std::clamp(p, 0.0, 1.0);
        out.set_row(r, pixels);
    }
    return out;
}

std::map<int, Matrix> make_replay_snapshots(const ReplayStore& store,
                                            const StackedAutoencoder& ae, size_t per_class_cap,
                                            RngState& rng) {
    if (!store.empty() && !store.valid_for(ae)) {
        throw StaleStatsError("replay store code width " +
                              std::to_string(store.model_code_width()) +
                              " does not match model top width " +
                              std::to_string(ae.top_width()));
    }
    std::map<int, Matrix> snapshots;
    for (const auto& [label, stats] : store.all()) {
        const size_t count = std::min(per_class_cap, stats.sample_count);
        snapshots[label] = generate_replay(ae, stats, count, rng);
    }
    return snapshots;
}

Matrix build_stable_train(const Matrix& new_class_data, const std::map<int, Matrix>& snapshots,
                          RngState& rng) {
    size_t rows = new_class_data.rows;
    for (const auto& [label, snap] : snapshots) {
        (void)label;
        if (snap.rows > 0 && snap.cols != new_class_data.cols) {
            throw ShapeError("stable train: snapshot width " + std::to_string(snap.cols) +
                             " != new data width " + std::to_string(new_class_data.cols));
        }
        rows += snap.rows;
    }
    Matrix out(rows, new_class_data.cols);
    size_t r = 0;
    for (size_t i = 0; i < new_class_data.rows; ++i, ++r) {
        out.set_row(r, new_class_data.row(i));
    }
    for (const auto& [label, snap] : snapshots) {
        (void)label;
        for (size_t i = 0; i < snap.rows; ++i, ++r) out.set_row(r, snap.row(i));
    }

    std::vector<size_t> order(rows);
    for (size_t i = 0; i < rows; ++i) order[i] = i;
    rng.shuffle(order);
    Matrix shuffled(rows, out.cols);
    for (size_t i = 0; i < rows; ++i) shuffled.set_row(i, out.row(order[i]));
    return shuffled;
}

Matrix build_stable_train(const Matrix& new_class_data, const ReplayStore& store,
                          const StackedAutoencoder& ae, size_t per_class_cap, RngState& rng) {
    const auto snapshots = make_replay_snapshots(store, ae, per_class_cap, rng);
    return build_stable_train(new_class_data, snapshots, rng);
}

ReplayStore refresh_store(const StackedAutoencoder& ae, const std::map<int, Matrix>& snapshots,
                          double ridge, std::vector<int>* dropped) {
    ReplayStore store(ae.top_width());
    for (const auto& [label, pixels] : snapshots) {
        if (pixels.rows == 0) {
            if (dropped) dropped->push_back(label);
            continue;
        }
        store.insert(fit_class_stats(ae, pixels, label, ridge));
    }
    return store;
}

}  // namespace ndl
