/**
 * @file linalg.hpp
 * @brief Dense complex linear algebra for small Hermitian positive-definite systems.
 *
 * Everything reduces to one primitive, the lower Cholesky factor L with
 * L L^H = M. Solves, quadratic forms, whitening, colouring and log-determinants
 * are triangular operations on L; no explicit inverse is ever formed.
 */
#pragma once

#include "embml/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace embml {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;

/// a^H b
inline Complex dot(std::span<const Complex> a, std::span<const Complex> b) {
    Complex acc{0.0, 0.0};
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
    return acc;
}

/// ||a||^2
inline double squaredNorm(std::span<const Complex> a) {
    double acc = 0.0;
    for (const auto& x : a) acc += std::norm(x);
    return acc;
}

/// e_k of length n (0-based k).
inline ComplexVector unitVector(std::size_t n, std::size_t k) {
    ComplexVector e(n, Complex{0.0, 0.0});
    e.at(k) = 1.0;
    return e;
}

inline bool allFinite(std::span<const Complex> a) {
    return std::all_of(a.begin(), a.end(),
                       [](const Complex& x) { return std::isfinite(x.real()) && std::isfinite(x.imag()); });
}

/**
 * N x N complex Hermitian matrix, dense row-major.
 *
 * Construction from arbitrary entries replaces M by (M + M^H)/2 so the stored
 * value is exactly conjugate-symmetric with a real diagonal.
 */
class HermitianMatrix {
public:
    HermitianMatrix() = default;

    /// Zero matrix of dimension n.
    explicit HermitianMatrix(std::size_t n) : n_(n), a_(n * n, Complex{0.0, 0.0}) {}

    /// From row-major entries; symmetrised on construction.
    HermitianMatrix(std::size_t n, std::vector<Complex> entries) : n_(n), a_(std::move(entries)) {
        if (a_.size() != n_ * n_) throw ValidationError("HermitianMatrix: entry count is not n*n");
        symmetrize();
    }

    static HermitianMatrix identity(std::size_t n) {
        HermitianMatrix m(n);
        for (std::size_t i = 0; i < n; ++i) m.a_[i * n + i] = 1.0;
        return m;
    }

    static HermitianMatrix diagonal(std::span<const double> d) {
        HermitianMatrix m(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m.a_[i * d.size() + i] = d[i];
        return m;
    }

    std::size_t dim() const noexcept { return n_; }
    Complex operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
    std::span<const Complex> entries() const noexcept { return a_; }

    /// M x
    ComplexVector apply(std::span<const Complex> x) const {
        ComplexVector y(n_, Complex{0.0, 0.0});
        for (std::size_t i = 0; i < n_; ++i) {
            Complex acc{0.0, 0.0};
            for (std::size_t j = 0; j < n_; ++j) acc += a_[i * n_ + j] * x[j];
            y[i] = acc;
        }
        return y;
    }

    friend HermitianMatrix operator+(HermitianMatrix a, const HermitianMatrix& b) {
        for (std::size_t i = 0; i < a.a_.size(); ++i) a.a_[i] += b.a_[i];
        return a;
    }

    friend HermitianMatrix operator*(double s, HermitianMatrix m) {
        for (auto& x : m.a_) x *= s;
        return m;
    }

    /// Largest |m_ij - m_ji*|, relative to the largest entry magnitude.
    double hermitianDefect() const {
        double worst = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j) {
                worst = std::max(worst, std::abs(a_[i * n_ + j] - std::conj(a_[j * n_ + i])));
                scale = std::max(scale, std::abs(a_[i * n_ + j]));
            }
        return scale > 0.0 ? worst / scale : worst;
    }

    friend HermitianMatrix rankOneUpdate(HermitianMatrix m, double w, std::span<const Complex> x);

private:
    void symmetrize() {
        for (std::size_t i = 0; i < n_; ++i) {
            a_[i * n_ + i] = a_[i * n_ + i].real();
            for (std::size_t j = i + 1; j < n_; ++j) {
                const Complex avg = 0.5 * (a_[i * n_ + j] + std::conj(a_[j * n_ + i]));
                a_[i * n_ + j] = avg;
                a_[j * n_ + i] = std::conj(avg);
            }
        }
    }

    std::size_t n_ = 0;
    std::vector<Complex> a_;
};

/// m + w x x^H. Both triangles are written from the same product, so the
/// result stays exactly Hermitian.
inline HermitianMatrix rankOneUpdate(HermitianMatrix m, double w, std::span<const Complex> x) {
    const std::size_t n = m.n_;
    if (x.size() != n) throw ValidationError("rankOneUpdate: dimension mismatch");
    if (w == 0.0) return m;
    for (std::size_t i = 0; i < n; ++i) {
        m.a_[i * n + i] += w * std::norm(x[i]);
        for (std::size_t j = i + 1; j < n; ++j) {
            const Complex v = w * x[i] * std::conj(x[j]);
            m.a_[i * n + j] += v;
            m.a_[j * n + i] += std::conj(v);
        }
    }
    return m;
}

/**
 * Lower Cholesky factor L of a Hermitian positive-definite matrix.
 *
 * Holds the factor only; all operations are const and the object can be shared
 * read-only between threads.
 */
class CholeskyFactor {
public:
    explicit CholeskyFactor(const HermitianMatrix& m) : n_(m.dim()), l_(n_ * n_, Complex{0.0, 0.0}) {
        double maxDiag = 0.0;
        for (std::size_t i = 0; i < n_; ++i) maxDiag = std::max(maxDiag, m(i, i).real());
        const double tol = 8.0 * static_cast<double>(n_) * std::numeric_limits<double>::epsilon() * maxDiag;
        for (std::size_t j = 0; j < n_; ++j) {
            double d = m(j, j).real();
            for (std::size_t k = 0; k < j; ++k) d -= std::norm(l_[j * n_ + k]);
            if (!(d > tol) || !std::isfinite(d))
                throw NotPositiveDefinite("cholesky: non-positive pivot " + std::to_string(d) + " at column " +
                                          std::to_string(j));
            const double ljj = std::sqrt(d);
            l_[j * n_ + j] = ljj;
            for (std::size_t i = j + 1; i < n_; ++i) {
                Complex s = m(i, j);
                for (std::size_t k = 0; k < j; ++k) s -= l_[i * n_ + k] * std::conj(l_[j * n_ + k]);
                l_[i * n_ + j] = s / ljj;
            }
        }
    }

    std::size_t dim() const noexcept { return n_; }
    Complex operator()(std::size_t i, std::size_t j) const { return l_[i * n_ + j]; }

    /// L^{-1} b (forward substitution).
    ComplexVector whiten(std::span<const Complex> b) const {
        checkDim(b.size());
        ComplexVector y(b.begin(), b.end());
        for (std::size_t i = 0; i < n_; ++i) {
            Complex s = y[i];
            for (std::size_t k = 0; k < i; ++k) s -= l_[i * n_ + k] * y[k];
            y[i] = s / l_[i * n_ + i].real();
        }
        return y;
    }

    /// L x
    ComplexVector color(std::span<const Complex> x) const {
        checkDim(x.size());
        ComplexVector y(n_, Complex{0.0, 0.0});
        for (std::size_t i = 0; i < n_; ++i) {
            Complex s{0.0, 0.0};
            for (std::size_t k = 0; k <= i; ++k) s += l_[i * n_ + k] * x[k];
            y[i] = s;
        }
        return y;
    }

    /// M^{-1} b
    ComplexVector solve(std::span<const Complex> b) const {
        ComplexVector y = whiten(b);
        for (std::size_t ii = n_; ii-- > 0;) {
            Complex s = y[ii];
            for (std::size_t k = ii + 1; k < n_; ++k) s -= std::conj(l_[k * n_ + ii]) * y[k];
            y[ii] = s / l_[ii * n_ + ii].real();
        }
        return y;
    }

    /// a^H M^{-1} b
    Complex quadForm(std::span<const Complex> a, std::span<const Complex> b) const {
        const ComplexVector wa = whiten(a);
        const ComplexVector wb = whiten(b);
        return dot(wa, wb);
    }

    /// a^H M^{-1} a, real and nonnegative by construction.
    double quadForm(std::span<const Complex> a) const { return squaredNorm(whiten(a)); }

    double logDet() const {
        double acc = 0.0;
        for (std::size_t i = 0; i < n_; ++i) acc += std::log(l_[i * n_ + i].real());
        return 2.0 * acc;
    }

    /// L L^H
    HermitianMatrix reconstruct() const {
        std::vector<Complex> e(n_ * n_, Complex{0.0, 0.0});
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j) {
                Complex s{0.0, 0.0};
                for (std::size_t k = 0; k <= std::min(i, j); ++k) s += l_[i * n_ + k] * std::conj(l_[j * n_ + k]);
                e[i * n_ + j] = s;
            }
        return HermitianMatrix(n_, std::move(e));
    }

private:
    void checkDim(std::size_t n) const {
        if (n != n_) throw ValidationError("CholeskyFactor: dimension mismatch");
    }

    std::size_t n_;
    std::vector<Complex> l_;
};

inline CholeskyFactor cholesky(const HermitianMatrix& m) { return CholeskyFactor(m); }

inline ComplexVector solveHermitian(const HermitianMatrix& m, std::span<const Complex> b) {
    return CholeskyFactor(m).solve(b);
}

/// a^H m^{-1} b
inline Complex quadForm(std::span<const Complex> a, const HermitianMatrix& m, std::span<const Complex> b) {
    return CholeskyFactor(m).quadForm(a, b);
}

/// a^H m^{-1} a
inline double quadForm(std::span<const Complex> a, const HermitianMatrix& m) { return CholeskyFactor(m).quadForm(a); }

inline double logDet(const HermitianMatrix& m) { return CholeskyFactor(m).logDet(); }

} // namespace embml
