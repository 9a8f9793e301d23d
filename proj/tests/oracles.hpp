// Test-only reference implementations, independent of the library's
// production code paths.
#ifndef NDL_TESTS_ORACLES_HPP
#define NDL_TESTS_ORACLES_HPP

#include <cmath>
#include <functional>

#include "ndl/autoencoder.hpp"
#include "ndl/numkernel.hpp"

namespace oracles {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// Plain scalar-loop forward pass through one layer.
inline ndl::Vec layer_forward(const ndl::DenseLayer& layer, const ndl::Vec& x) {
    ndl::Vec out(layer.out_dim());
    for (size_t i = 0; i < layer.out_dim(); ++i) {
        double z = layer.bias[i];
        for (size_t k = 0; k < layer.in_dim(); ++k) z += layer.weights(i, k) * x[k];
        out[i] = sigmoid(z);
    }
    return out;
}

/// 0.5 * sum of squared differences between clean input and its SHL
/// reconstruction; the objective whose gradient shl_gradients claims to be.
inline double shl_loss(const ndl::DenseLayer& enc, const ndl::DenseLayer& dec,
                       const ndl::Vec& clean, const ndl::Vec& noisy) {
    const ndl::Vec out = layer_forward(dec, layer_forward(enc, noisy));
    double loss = 0.0;
    for (size_t i = 0; i < out.size(); ++i) {
        const double d = clean[i] - out[i];
        loss += 0.5 * d * d;
    }
    return loss;
}

/// Central finite difference of `f` along one coordinate of `param`.
inline double central_difference(double& param, double h, const std::function<double()>& f) {
    const double saved = param;
    param = saved + h;
    const double up = f();
    param = saved - h;
    const double down = f();
    param = saved;
    return (up - down) / (2.0 * h);
}

/// max relative disagreement between analytic and finite-difference gradients
/// over every parameter of the SHL pair. Coordinates where both are ~0 count
/// as exact.
inline double max_gradient_mismatch(ndl::DenseLayer enc, ndl::DenseLayer dec,
                                    const ndl::Vec& clean, const ndl::Vec& noisy,
                                    double h = 1e-5) {
    const ndl::ShlGradients g = ndl::shl_gradients(enc, dec, clean, noisy);
    const auto loss = [&] { return shl_loss(enc, dec, clean, noisy); };
    double worst = 0.0;
    const auto consider = [&](double analytic, double& param) {
        const double fd = central_difference(param, h, loss);
        const double scale = std::max(std::fabs(analytic), std::fabs(fd));
        if (scale < 1e-7) return;
        worst = std::max(worst, std::fabs(analytic - fd) / scale);
    };
    for (size_t i = 0; i < enc.weights.data.size(); ++i) {
        consider(g.enc_w.data[i], enc.weights.data[i]);
    }
    for (size_t i = 0; i < enc.bias.size(); ++i) consider(g.enc_b[i], enc.bias[i]);
    for (size_t i = 0; i < dec.weights.data.size(); ++i) {
        consider(g.dec_w.data[i], dec.weights.data[i]);
    }
    for (size_t i = 0; i < dec.bias.size(); ++i) consider(g.dec_b[i], dec.bias[i]);
    return worst;
}

inline ndl::DenseLayer random_layer(size_t out_dim, size_t in_dim, ndl::RngState& rng,
                                    double limit = 0.8) {
    ndl::DenseLayer layer(out_dim, in_dim);
    for (double& v : layer.weights.data) v = rng.uniform(-limit, limit);
    for (double& v : layer.bias) v = rng.uniform(-limit, limit);
    return layer;
}

inline ndl::Vec random_vec(size_t n, ndl::RngState& rng, double lo = 0.0, double hi = 1.0) {
    ndl::Vec v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

}  // namespace oracles

#endif
