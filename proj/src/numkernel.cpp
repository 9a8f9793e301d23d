#include "ndl/numkernel.hpp"

#include <cmath>
#include <string>

namespace ndl {

void Matrix::set_row(size_t r, const Vec& v) {
    if (v.size() != cols) {
        throw ShapeError("set_row: vector length " + std::to_string(v.size()) +
                         " != cols " + std::to_string(cols));
    }
    std::copy(v.begin(), v.end(), row_ptr(r));
}

double RngState::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform01() - 1.0;
        v = 2.0 * uniform01() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
}

size_t RngState::index(size_t bound) {
    // multiply-shift map of a 64-bit draw onto [0, bound)
    const unsigned __int128 wide = static_cast<unsigned __int128>(engine_()) * bound;
    return static_cast<size_t>(wide >> 64);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) {
        throw ShapeError("matmul: " + std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                         " times " + std::to_string(b.rows) + "x" + std::to_string(b.cols));
    }
    Matrix out(a.rows, b.cols);
    for (size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row_ptr(i);
        double* orow = out.row_ptr(i);
        for (size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = b.row_ptr(k);
            for (size_t j = 0; j < b.cols; ++j) {
                orow[j] += aik * brow[j];
            }
        }
    }
    return out;
}

std::pair<Vec, Matrix> mean_and_covariance(const Matrix& samples) {
    const size_t n = samples.rows;
    const size_t d = samples.cols;
    if (n == 0) {
        throw EmptyInputError("mean_and_covariance: no samples");
    }
    Vec mean(d, 0.0);
    for (size_t r = 0; r < n; ++r) {
        const double* row = samples.row_ptr(r);
        for (size_t c = 0; c < d; ++c) mean[c] += row[c];
    }
    for (size_t c = 0; c < d; ++c) mean[c] /= static_cast<double>(n);

    Matrix cov(d, d);
    if (n == 1) return {mean, cov};  // degenerate case: zero covariance

    Vec dev(d);
    for (size_t r = 0; r < n; ++r) {
        const double* row = samples.row_ptr(r);
        for (size_t c = 0; c < d; ++c) dev[c] = row[c] - mean[c];
        for (size_t i = 0; i < d; ++i) {
            const double di = dev[i];
            double* crow = cov.row_ptr(i);
            for (size_t j = i; j < d; ++j) crow[j] += di * dev[j];
        }
    }
    const double denom = static_cast<double>(n - 1);
    for (size_t i = 0; i < d; ++i) {
        for (size_t j = i; j < d; ++j) {
            const double v = cov(i, j) / denom;
            cov(i, j) = v;
            cov(j, i) = v;  // mirrored, so symmetry is exact
        }
    }
    return {mean, cov};
}

Matrix cholesky(const Matrix& a, double ridge) {
    const size_t n = a.rows;
    if (a.rows != a.cols) {
        throw ShapeError("cholesky: matrix is " + std::to_string(a.rows) + "x" +
                         std::to_string(a.cols));
    }
    double maxabs = 0.0;
    for (double v : a.data) maxabs = std::max(maxabs, std::fabs(v));
    const double sym_tol = 1e-9 * std::max(1.0, maxabs);
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i + 1; j < n; ++j) {
            if (std::fabs(a(i, j) - a(j, i)) > sym_tol) {
                throw SymmetryError("cholesky: input not symmetric at (" + std::to_string(i) +
                                    "," + std::to_string(j) + ")");
            }
        }
    }

    Matrix l(n, n);
    for (size_t j = 0; j < n; ++j) {
        double diag = a(j, j) + ridge;
        const double* lj = l.row_ptr(j);
        for (size_t k = 0; k < j; ++k) diag -= lj[k] * lj[k];
        if (!(diag > 0.0)) {
            throw FactorizationError("cholesky: non-positive pivot " + std::to_string(diag) +
                                     " at column " + std::to_string(j) +
                                     " (ridge " + std::to_string(ridge) + ")");
        }
        const double ljj = std::sqrt(diag);
        l(j, j) = ljj;
        for (size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            const double* li = l.row_ptr(i);
            for (size_t k = 0; k < j; ++k) s -= li[k] * lj[k];
            l(i, j) = s / ljj;
        }
    }
    return l;
}

Vec sample_gaussian(RngState& rng, const Vec& mean, const Matrix& chol) {
    const size_t n = mean.size();
    if (chol.rows != chol.cols || chol.rows != n) {
        throw ShapeError("sample_gaussian: chol is " + std::to_string(chol.rows) + "x" +
                         std::to_string(chol.cols) + ", mean length " + std::to_string(n));
    }
    Vec z(n);
    for (size_t i = 0; i < n; ++i) z[i] = rng.normal();
    Vec out(mean);
    for (size_t i = 0; i < n; ++i) {
        const double* row = chol.row_ptr(i);
        double acc = 0.0;
        for (size_t k = 0; k <= i; ++k) acc += row[k] * z[k];  // lower triangle only
        out[i] += acc;
    }
    return out;
}

}  // namespace ndl
