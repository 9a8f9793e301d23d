#ifndef NDL_REPLAY_HPP
#define NDL_REPLAY_HPP

#include <map>

#include "ndl/autoencoder.hpp"
#include "ndl/numkernel.hpp"

namespace ndl {

/// Gaussian statistics of one class's top-level codes.
struct ClassStats {
    int label = 0;
    Vec mean;
    Matrix chol;  // lower-triangular, side == code_width
    size_t sample_count = 0;
    size_t code_width = 0;
};

/// Per-class latent statistics, valid only while the model's top width equals
/// model_code_width. Immutable once built; refresh_store returns a new one.
class ReplayStore {
public:
    ReplayStore() = default;
    explicit ReplayStore(size_t model_code_width) : model_code_width_(model_code_width) {}

    void insert(ClassStats stats);

    bool empty() const { return stats_.empty(); }
    size_t size() const { return stats_.size(); }
    size_t model_code_width() const { return model_code_width_; }
    bool valid_for(const StackedAutoencoder& ae) const {
        return model_code_width_ == ae.top_width();
    }
    bool has_class(int label) const { return stats_.count(label) > 0; }
    const ClassStats& stats_for(int label) const;
    const std::map<int, ClassStats>& all() const { return stats_; }

private:
    std::map<int, ClassStats> stats_;
    size_t model_code_width_ = 0;
};

/// Ridge used when `ridge <= 0` is requested: scales with the covariance's
/// mean diagonal so near-singular top-code covariances stay factorizable.
double default_ridge(const Matrix& covariance);

/// Encode each row to the top level, fit mean and (N-1)-denominator
/// covariance, factorize with the ridge (<= 0 selects default_ridge). On
/// FactorizationError the ridge escalates x10 up to 3 retries before a
/// StatsError is thrown.
ClassStats fit_class_stats(const StackedAutoencoder& ae, const Matrix& class_data, int label,
                           double ridge);

/// `count` latent draws decoded through the full decoder, clamped to [0,1].
/// Throws StaleStatsError when stats were fit at a different top width.
Matrix generate_replay(const StackedAutoencoder& ae, const ClassStats& stats, size_t count,
                       RngState& rng);

/// Pixel-space replay images per stored class: min(per_class_cap,
/// sample_count) rows each. These snapshots both feed the stabilization set
/// and serve as refit material after the top layer grows.
std::map<int, Matrix> make_replay_snapshots(const ReplayStore& store,
                                            const StackedAutoencoder& ae, size_t per_class_cap,
                                            RngState& rng);

/// New-class rows plus the given replayed rows, deterministically shuffled.
Matrix build_stable_train(const Matrix& new_class_data, const std::map<int, Matrix>& snapshots,
                          RngState& rng);

/// Convenience: snapshots generated from the store, then concatenated.
Matrix build_stable_train(const Matrix& new_class_data, const ReplayStore& store,
                          const StackedAutoencoder& ae, size_t per_class_cap, RngState& rng);

/// Re-encode each snapshot with the current (possibly grown) model and refit.
/// Classes with empty snapshots are dropped (labels reported via `dropped`
/// when given, so callers can warn). Valid for ae's current top width.
ReplayStore refresh_store(const StackedAutoencoder& ae, const std::map<int, Matrix>& snapshots,
                          double ridge, std::vector<int>* dropped = nullptr);

}  // namespace ndl

#endif
