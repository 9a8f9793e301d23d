#ifndef NDL_AUTOENCODER_HPP
#define NDL_AUTOENCODER_HPP

#include <cstddef>
#include <vector>

#include "ndl/numkernel.hpp"

namespace ndl {

enum class Activation { logistic };

/// One affine layer followed by the logistic sigmoid.
struct DenseLayer {
    Matrix weights;  // out_dim x in_dim
    Vec bias;        // out_dim
    Activation activation = Activation::logistic;

    DenseLayer() = default;
    DenseLayer(size_t out_dim, size_t in_dim) : weights(out_dim, in_dim), bias(out_dim, 0.0) {}

    size_t in_dim() const { return weights.cols; }
    size_t out_dim() const { return weights.rows; }

    /// s(Wx + b)
    Vec forward(const Vec& x) const;
};

/// SGD hyperparameters for one single-hidden-layer training phase.
struct TrainConfig {
    double learning_rate = 0.1;
    size_t epochs = 15;
    size_t minibatch_size = 20;
    double noise_fraction = 0.1;  // per-pixel masking probability per presentation
};

/// Per-parameter-group learning-rate multipliers. "Old" and "new" split at the
/// new-node boundary handed to train_shl: encoder rows / decoder columns below
/// the boundary are old, at or above it are new. The decoder bias is indexed
/// by the output dimension, so it forms a single group.
struct LrMask {
    double encoder_old = 1.0;
    double encoder_new = 1.0;
    double decoder_old = 1.0;
    double decoder_new = 1.0;
    double enc_bias_old = 1.0;
    double enc_bias_new = 1.0;
    double dec_bias = 1.0;

    static LrMask uniform(double m) { return {m, m, m, m, m, m, m}; }
    static LrMask zero() { return uniform(0.0); }
    /// New-node weights at full rate on both sides, old encoder frozen, old
    /// decoder damped. Damping the new decoder columns too would leave new
    /// nodes backpropagating through their near-zero initialization and they
    /// would never become useful feature detectors.
    static LrMask plasticity(double decoder_lr_divisor) {
        const double d = 1.0 / decoder_lr_divisor;
        return {/*encoder_old=*/0.0, /*encoder_new=*/1.0,
                /*decoder_old=*/d,   /*decoder_new=*/1.0,
                /*enc_bias_old=*/0.0, /*enc_bias_new=*/1.0, /*dec_bias=*/d};
    }
    /// Full-rate training on the stabilization set with one exception: old
    /// encoder rows stay frozen, so the feature detectors trained on previous
    /// classes survive bit for bit while the decoder re-balances around the
    /// grown level.
    static LrMask stability() {
        return {/*encoder_old=*/0.0, /*encoder_new=*/1.0,
                /*decoder_old=*/1.0, /*decoder_new=*/1.0,
                /*enc_bias_old=*/0.0, /*enc_bias_new=*/1.0, /*dec_bias=*/1.0};
    }
};

/// Gradient of 0.5 * ||clean - g(f(noisy))||^2 for one sample.
struct ShlGradients {
    Matrix enc_w;
    Vec enc_b;
    Matrix dec_w;
    Vec dec_b;
};

enum class TrainStatus { ok, skipped_empty };

struct GrowthBoundary {
    size_t level = 0;
    size_t old_width = 0;  // also the first new-node index
    size_t new_width = 0;
};

/// Stack of N encode layers mirrored by N decode layers. decoder(L) maps
/// level-L codes back to the level-(L-1) representation, so decoding from
/// level L applies decoders L, L-1, ..., 1. Widths only ever grow.
class StackedAutoencoder {
public:
    StackedAutoencoder() = default;

    /// widths = {input_dim, w1, ..., wN}. Parameters start Glorot-uniform.
    StackedAutoencoder(const std::vector<size_t>& widths, RngState& rng);

    static StackedAutoencoder from_layers(std::vector<DenseLayer> encoders,
                                          std::vector<DenseLayer> decoders);

    size_t depth() const { return encoders_.size(); }
    size_t input_dim() const { return encoders_.empty() ? 0 : encoders_[0].in_dim(); }
    /// Hidden width at level L in 1..N.
    size_t width(size_t level) const;
    size_t top_width() const { return width(depth()); }
    std::vector<size_t> widths() const;  // {input_dim, w1, ..., wN}

    DenseLayer& encoder(size_t level);
    const DenseLayer& encoder(size_t level) const;
    DenseLayer& decoder(size_t level);
    const DenseLayer& decoder(size_t level) const;

    Vec encode_to_level(const Vec& x, size_t level) const;
    Vec decode_from_level(const Vec& y, size_t level) const;

    /// Sum over pixels of squared reconstruction difference through `level`.
    double reconstruction_error(const Vec& x, size_t level) const;

    /// Encode every row; returns rows x width(level).
    Matrix encode_rows(const Matrix& data, size_t level) const;

    /// Mean of per-row reconstruction_error at `level` over all rows.
    double mean_reconstruction_error(const Matrix& data, size_t level) const;

    /// Widen level L by k nodes. New encoder rows / decoder columns start
    /// uniform in +-0.01 with zero bias; when L < N the next level gains
    /// matching fan-in columns and fan-out rows. Existing parameters are not
    /// touched.
    GrowthBoundary grow_level(size_t level, size_t k, RngState& rng);

private:
    void check_level(size_t level) const;
    std::vector<DenseLayer> encoders_;
    std::vector<DenseLayer> decoders_;
};

ShlGradients shl_gradients(const DenseLayer& enc, const DenseLayer& dec, const Vec& x_clean,
                           const Vec& x_noisy);

/// Minibatch SGD on the single-hidden-layer pair (enc, dec): masking noise is
/// re-drawn for every presentation, the update uses the mean gradient over the
/// batch, and each parameter group steps at learning_rate times its mask
/// multiplier. Rows at index >= new_node_boundary count as new.
/// Returns skipped_empty (leaving parameters untouched) when data has no rows.
TrainStatus train_shl(DenseLayer& enc, DenseLayer& dec, const Matrix& data_clean,
                      const TrainConfig& config, const LrMask& mask, size_t new_node_boundary,
                      RngState& rng);

/// Greedy layerwise pretraining: level 1 trains on raw rows, each deeper level
/// on the clean encodings of the level below.
void pretrain_stack(StackedAutoencoder& ae, const Matrix& data, const TrainConfig& config,
                    RngState& rng);

/// One more layerwise pass over an already-built stack (no growth, no
/// re-initialization). Used by the fixed-architecture training conditions.
void continue_layerwise(StackedAutoencoder& ae, const Matrix& data, const TrainConfig& config,
                        RngState& rng);

}  // namespace ndl

#endif
