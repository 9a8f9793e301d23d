#ifndef NDL_NUMKERNEL_HPP
#define NDL_NUMKERNEL_HPP

#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "ndl/errors.hpp"

namespace ndl {

using Vec = std::vector<double>;

/// Dense row-major matrix of doubles.
struct Matrix {
    size_t rows = 0;
    size_t cols = 0;
    Vec data;  // rows * cols, row-major

    Matrix() = default;
    Matrix(size_t r, size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(size_t r, size_t c) { return data[r * cols + c]; }
    double operator()(size_t r, size_t c) const { return data[r * cols + c]; }

    double* row_ptr(size_t r) { return data.data() + r * cols; }
    const double* row_ptr(size_t r) const { return data.data() + r * cols; }

    Vec row(size_t r) const { return Vec(row_ptr(r), row_ptr(r) + cols); }
    void set_row(size_t r, const Vec& v);

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

/// Seeded random stream. Identical seed gives an identical sample sequence,
/// bit for bit, for a given build: uniforms come straight off mt19937_64 and
/// normals use the Marsaglia polar transform, so nothing is left to the
/// standard library's unspecified distribution algorithms.
class RngState {
public:
    explicit RngState(uint64_t seed) : seed_(seed), engine_(seed) {}

    uint64_t seed() const { return seed_; }

    /// Uniform in [0, 1).
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via the polar method (pairs generated, one cached).
    double normal();

    /// Uniform index in [0, bound). bound must be >= 1.
    size_t index(size_t bound);

    /// Deterministic Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[index(i)]);
        }
    }

private:
    uint64_t seed_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Standard matrix product. Throws ShapeError when a.cols != b.rows.
Matrix matmul(const Matrix& a, const Matrix& b);

/// Column-wise mean and sample covariance (denominator N-1, computed
/// symmetrically). A single row yields a zero covariance matrix.
/// Throws EmptyInputError when samples has no rows.
std::pair<Vec, Matrix> mean_and_covariance(const Matrix& samples);

/// Lower-triangular L with L*L^T = a + ridge*I and strictly positive diagonal.
/// Throws SymmetryError if a is not symmetric within tolerance, ShapeError if
/// not square, FactorizationError when a pivot goes non-positive (caller may
/// raise the ridge and retry).
Matrix cholesky(const Matrix& a, double ridge);

/// mean + chol * z with z fresh i.i.d. standard normals. chol must be square
/// with side == mean.size(); only the lower triangle is read.
Vec sample_gaussian(RngState& rng, const Vec& mean, const Matrix& chol);

}  // namespace ndl

#endif
