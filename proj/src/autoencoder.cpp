#include "ndl/autoencoder.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace ndl {

namespace {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void affine_sigmoid(const Matrix& w, const Vec& b, const double* x, double* out) {
    for (size_t i = 0; i < w.rows; ++i) {
        const double* row = w.row_ptr(i);
        double z = b[i];
        for (size_t k = 0; k < w.cols; ++k) z += row[k] * x[k];
        out[i] = sigmoid(z);
    }
}

double glorot_limit(size_t fan_in, size_t fan_out) {
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

void fill_uniform(Matrix& m, RngState& rng, double limit) {
    for (double& v : m.data) v = rng.uniform(-limit, limit);
}

// Gradient accumulation shared by shl_gradients and train_shl so the
// single-step oracle checks the exact production path.
struct ShlScratch {
    Vec hidden;
    Vec output;
    Vec delta_out;
    Vec delta_hidden;
    void resize(size_t hidden_dim, size_t out_dim) {
        hidden.assign(hidden_dim, 0.0);
        output.assign(out_dim, 0.0);
        delta_out.assign(out_dim, 0.0);
        delta_hidden.assign(hidden_dim, 0.0);
    }
};

void accumulate_shl_gradients(const DenseLayer& enc, const DenseLayer& dec, const double* x_clean,
                              const double* x_noisy, ShlScratch& s, ShlGradients& g) {
    const size_t hidden_dim = enc.out_dim();
    const size_t in_dim = enc.in_dim();
    const size_t out_dim = dec.out_dim();

    affine_sigmoid(enc.weights, enc.bias, x_noisy, s.hidden.data());
    affine_sigmoid(dec.weights, dec.bias, s.hidden.data(), s.output.data());

    for (size_t j = 0; j < out_dim; ++j) {
        const double y = s.output[j];
        s.delta_out[j] = (y - x_clean[j]) * y * (1.0 - y);
    }

    std::fill(s.delta_hidden.begin(), s.delta_hidden.end(), 0.0);
    for (size_t j = 0; j < out_dim; ++j) {
        const double dj = s.delta_out[j];
        const double* wrow = dec.weights.row_ptr(j);
        double* grow = g.dec_w.row_ptr(j);
        for (size_t i = 0; i < hidden_dim; ++i) {
            grow[i] += dj * s.hidden[i];
            s.delta_hidden[i] += wrow[i] * dj;
        }
        g.dec_b[j] += dj;
    }

    for (size_t i = 0; i < hidden_dim; ++i) {
        const double h = s.hidden[i];
        const double di = s.delta_hidden[i] * h * (1.0 - h);
        double* grow = g.enc_w.row_ptr(i);
        for (size_t k = 0; k < in_dim; ++k) grow[k] += di * x_noisy[k];
        g.enc_b[i] += di;
    }
}

void check_shl_shapes(const DenseLayer& enc, const DenseLayer& dec, size_t sample_dim) {
    if (dec.in_dim() != enc.out_dim() || dec.out_dim() != enc.in_dim()) {
        throw ShapeError("shl: encoder " + std::to_string(enc.out_dim()) + "x" +
                         std::to_string(enc.in_dim()) + " does not mirror decoder " +
                         std::to_string(dec.out_dim()) + "x" + std::to_string(dec.in_dim()));
    }
    if (sample_dim != enc.in_dim()) {
        throw ShapeError("shl: sample length " + std::to_string(sample_dim) +
                         " != encoder input " + std::to_string(enc.in_dim()));
    }
}

}  // namespace

Vec DenseLayer::forward(const Vec& x) const {
    if (x.size() != in_dim()) {
        throw ShapeError("forward: input length " + std::to_string(x.size()) + " != " +
                         std::to_string(in_dim()));
    }
    Vec out(out_dim());
    affine_sigmoid(weights, bias, x.data(), out.data());
    return out;
}

StackedAutoencoder::StackedAutoencoder(const std::vector<size_t>& widths, RngState& rng) {
    if (widths.size() < 2) {
        throw ShapeError("StackedAutoencoder: need input width plus at least one level");
    }
    const size_t n = widths.size() - 1;
    encoders_.reserve(n);
    decoders_.reserve(n);
    for (size_t l = 0; l < n; ++l) {
        DenseLayer enc(widths[l + 1], widths[l]);
        DenseLayer dec(widths[l], widths[l + 1]);
        const double limit = glorot_limit(widths[l], widths[l + 1]);
        fill_uniform(enc.weights, rng, limit);
        fill_uniform(dec.weights, rng, limit);
        encoders_.push_back(std::move(enc));
        decoders_.push_back(std::move(dec));
    }
}

StackedAutoencoder StackedAutoencoder::from_layers(std::vector<DenseLayer> encoders,
                                                   std::vector<DenseLayer> decoders) {
    if (encoders.size() != decoders.size() || encoders.empty()) {
        throw ShapeError("from_layers: need equally many encode and decode layers");
    }
    for (size_t l = 0; l < encoders.size(); ++l) {
        if (decoders[l].in_dim() != encoders[l].out_dim() ||
            decoders[l].out_dim() != encoders[l].in_dim()) {
            throw ShapeError("from_layers: level " + std::to_string(l + 1) +
                             " decode layer does not mirror its encode layer");
        }
        if (l > 0 && encoders[l].in_dim() != encoders[l - 1].out_dim()) {
            throw ShapeError("from_layers: level " + std::to_string(l + 1) +
                             " input width does not chain");
        }
    }
    StackedAutoencoder ae;
    ae.encoders_ = std::move(encoders);
    ae.decoders_ = std::move(decoders);
    return ae;
}

void StackedAutoencoder::check_level(size_t level) const {
    if (level < 1 || level > depth()) {
        throw LevelError("level " + std::to_string(level) + " outside 1.." +
                         std::to_string(depth()));
    }
}

size_t StackedAutoencoder::width(size_t level) const {
    check_level(level);
    return encoders_[level - 1].out_dim();
}

std::vector<size_t> StackedAutoencoder::widths() const {
    std::vector<size_t> w;
    w.reserve(depth() + 1);
    w.push_back(input_dim());
    for (const auto& e : encoders_) w.push_back(e.out_dim());
    return w;
}

DenseLayer& StackedAutoencoder::encoder(size_t level) {
    check_level(level);
    return encoders_[level - 1];
}
const DenseLayer& StackedAutoencoder::encoder(size_t level) const {
    check_level(level);
    return encoders_[level - 1];
}
DenseLayer& StackedAutoencoder::decoder(size_t level) {
    check_level(level);
    return decoders_[level - 1];
}
const DenseLayer& StackedAutoencoder::decoder(size_t level) const {
    check_level(level);
    return decoders_[level - 1];
}

Vec StackedAutoencoder::encode_to_level(const Vec& x, size_t level) const {
    check_level(level);
    Vec cur = x;
    for (size_t l = 0; l < level; ++l) cur = encoders_[l].forward(cur);
    return cur;
}

Vec StackedAutoencoder::decode_from_level(const Vec& y, size_t level) const {
    check_level(level);
    if (y.size() != width(level)) {
        throw ShapeError("decode_from_level: code length " + std::to_string(y.size()) +
                         " != level width " + std::to_string(width(level)));
    }
    Vec cur = y;
    for (size_t l = level; l >= 1; --l) cur = decoders_[l - 1].forward(cur);
    return cur;
}

double StackedAutoencoder::reconstruction_error(const Vec& x, size_t level) const {
    const Vec xhat = decode_from_level(encode_to_level(x, level), level);
    double sum = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - xhat[i];
        sum += d * d;
    }
    return sum;
}

Matrix StackedAutoencoder::encode_rows(const Matrix& data, size_t level) const {
    check_level(level);
    Matrix out(data.rows, width(level));
    for (size_t r = 0; r < data.rows; ++r) {
        const Vec code = encode_to_level(data.row(r), level);
        out.set_row(r, code);
    }
    return out;
}

double StackedAutoencoder::mean_reconstruction_error(const Matrix& data, size_t level) const {
    if (data.rows == 0) throw EmptyInputError("mean_reconstruction_error: no rows");
    double sum = 0.0;
    for (size_t r = 0; r < data.rows; ++r) sum += reconstruction_error(data.row(r), level);
    return sum / static_cast<double>(data.rows);
}

GrowthBoundary StackedAutoencoder::grow_level(size_t level, size_t k, RngState& rng) {
    check_level(level);
    DenseLayer& enc = encoders_[level - 1];
    DenseLayer& dec = decoders_[level - 1];
    const size_t old_width = enc.out_dim();
    const size_t new_width = old_width + k;
    const double limit = 0.01;

    // encoder gains k rows
    Matrix ew(new_width, enc.in_dim());
    std::copy(enc.weights.data.begin(), enc.weights.data.end(), ew.data.begin());
    for (size_t i = old_width; i < new_width; ++i) {
        double* row = ew.row_ptr(i);
        for (size_t c = 0; c < ew.cols; ++c) row[c] = rng.uniform(-limit, limit);
    }
    enc.weights = std::move(ew);
    enc.bias.resize(new_width, 0.0);

    // decode counterpart gains k columns
    Matrix dw(dec.out_dim(), new_width);
    for (size_t r = 0; r < dec.out_dim(); ++r) {
        const double* src = dec.weights.row_ptr(r);
        double* dst = dw.row_ptr(r);
        std::copy(src, src + old_width, dst);
        for (size_t c = old_width; c < new_width; ++c) dst[c] = rng.uniform(-limit, limit);
    }
    dec.weights = std::move(dw);

    if (level < depth()) {
        // next encoder gains k fan-in columns
        DenseLayer& up = encoders_[level];
        Matrix uw(up.out_dim(), new_width);
        for (size_t r = 0; r < up.out_dim(); ++r) {
            const double* src = up.weights.row_ptr(r);
            double* dst = uw.row_ptr(r);
            std::copy(src, src + old_width, dst);
            for (size_t c = old_width; c < new_width; ++c) dst[c] = rng.uniform(-limit, limit);
        }
        up.weights = std::move(uw);

        // next level's decode counterpart gains k output rows
        DenseLayer& updec = decoders_[level];
        Matrix vw(new_width, updec.in_dim());
        std::copy(updec.weights.data.begin(), updec.weights.data.end(), vw.data.begin());
        for (size_t r = old_width; r < new_width; ++r) {
            double* row = vw.row_ptr(r);
            for (size_t c = 0; c < vw.cols; ++c) row[c] = rng.uniform(-limit, limit);
        }
        updec.weights = std::move(vw);
        updec.bias.resize(new_width, 0.0);
    }

    return GrowthBoundary{level, old_width, new_width};
}

ShlGradients shl_gradients(const DenseLayer& enc, const DenseLayer& dec, const Vec& x_clean,
                           const Vec& x_noisy) {
    check_shl_shapes(enc, dec, x_noisy.size());
    if (x_clean.size() != dec.out_dim()) {
        throw ShapeError("shl_gradients: clean target length " + std::to_string(x_clean.size()) +
                         " != decoder output " + std::to_string(dec.out_dim()));
    }
    ShlGradients g{Matrix(enc.out_dim(), enc.in_dim()), Vec(enc.out_dim(), 0.0),
                   Matrix(dec.out_dim(), dec.in_dim()), Vec(dec.out_dim(), 0.0)};
    ShlScratch s;
    s.resize(enc.out_dim(), dec.out_dim());
    accumulate_shl_gradients(enc, dec, x_clean.data(), x_noisy.data(), s, g);
    return g;
}

TrainStatus train_shl(DenseLayer& enc, DenseLayer& dec, const Matrix& data_clean,
                      const TrainConfig& config, const LrMask& mask, size_t new_node_boundary,
                      RngState& rng) {
    if (data_clean.rows == 0) return TrainStatus::skipped_empty;
    check_shl_shapes(enc, dec, data_clean.cols);
    const size_t hidden_dim = enc.out_dim();
    const size_t in_dim = enc.in_dim();
    const size_t boundary = std::min(new_node_boundary, hidden_dim);
    const size_t batch = std::max<size_t>(1, config.minibatch_size);

    ShlGradients g{Matrix(hidden_dim, in_dim), Vec(hidden_dim, 0.0), Matrix(in_dim, hidden_dim),
                   Vec(in_dim, 0.0)};
    ShlScratch scratch;
    scratch.resize(hidden_dim, in_dim);
    Vec noisy(in_dim);

    std::vector<size_t> order(data_clean.rows);
    std::iota(order.begin(), order.end(), 0);

    for (size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        for (size_t start = 0; start < order.size(); start += batch) {
            const size_t stop = std::min(order.size(), start + batch);
            std::fill(g.enc_w.data.begin(), g.enc_w.data.end(), 0.0);
            std::fill(g.enc_b.begin(), g.enc_b.end(), 0.0);
            std::fill(g.dec_w.data.begin(), g.dec_w.data.end(), 0.0);
            std::fill(g.dec_b.begin(), g.dec_b.end(), 0.0);

            for (size_t s = start; s < stop; ++s) {
                const double* clean = data_clean.row_ptr(order[s]);
                for (size_t c = 0; c < in_dim; ++c) {
                    noisy[c] = (config.noise_fraction > 0.0 &&
                                rng.uniform01() < config.noise_fraction)
                                   ? 0.0
                                   : clean[c];
                }
                accumulate_shl_gradients(enc, dec, clean, noisy.data(), scratch, g);
            }

            const double scale = config.learning_rate / static_cast<double>(stop - start);
            const double step_enc_old = scale * mask.encoder_old;
            const double step_enc_new = scale * mask.encoder_new;
            const double step_encb_old = scale * mask.enc_bias_old;
            const double step_encb_new = scale * mask.enc_bias_new;
            const double step_dec_old = scale * mask.decoder_old;
            const double step_dec_new = scale * mask.decoder_new;
            const double step_decb = scale * mask.dec_bias;

            for (size_t i = 0; i < hidden_dim; ++i) {
                const double step_w = (i < boundary) ? step_enc_old : step_enc_new;
                const double step_b = (i < boundary) ? step_encb_old : step_encb_new;
                if (step_w != 0.0) {
                    double* wrow = enc.weights.row_ptr(i);
                    const double* grow = g.enc_w.row_ptr(i);
                    for (size_t c = 0; c < in_dim; ++c) wrow[c] -= step_w * grow[c];
                }
                if (step_b != 0.0) enc.bias[i] -= step_b * g.enc_b[i];
            }
            for (size_t r = 0; r < in_dim; ++r) {
                double* wrow = dec.weights.row_ptr(r);
                const double* grow = g.dec_w.row_ptr(r);
                for (size_t i = 0; i < hidden_dim; ++i) {
                    const double step = (i < boundary) ? step_dec_old : step_dec_new;
                    wrow[i] -= step * grow[i];
                }
                dec.bias[r] -= step_decb * g.dec_b[r];
            }
        }
    }
    return TrainStatus::ok;
}

void pretrain_stack(StackedAutoencoder& ae, const Matrix& data, const TrainConfig& config,
                    RngState& rng) {
    continue_layerwise(ae, data, config, rng);
}

void continue_layerwise(StackedAutoencoder& ae, const Matrix& data, const TrainConfig& config,
                        RngState& rng) {
    if (data.cols != ae.input_dim()) {
        throw ShapeError("layerwise training: data width " + std::to_string(data.cols) +
                         " != input dim " + std::to_string(ae.input_dim()));
    }
    Matrix cur = data;
    for (size_t level = 1; level <= ae.depth(); ++level) {
        train_shl(ae.encoder(level), ae.decoder(level), cur, config, LrMask::uniform(1.0), 0, rng);
        if (level < ae.depth()) {
            Matrix next(cur.rows, ae.width(level));
            for (size_t r = 0; r < cur.rows; ++r) {
                next.set_row(r, ae.encoder(level).forward(cur.row(r)));
            }
            cur = std::move(next);
        }
    }
}

}  // namespace ndl
