#pragma once

// Dense real linear-algebra kernel. Everything the control modules need and
// nothing more: eigenvalues of nonsymmetric matrices, symmetric eigen
// decomposition, singular values, LU solves and polynomial roots.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "firctl/errors.hpp"

namespace firctl {

// ----------------------------------------------------------------------------
// Complex numbers
// ----------------------------------------------------------------------------

struct Complex {
    double re = 0.0;
    double im = 0.0;

    constexpr Complex() = default;
    constexpr Complex(double r, double i = 0.0) : re(r), im(i) {}

    double abs() const noexcept { return std::hypot(re, im); }
    constexpr Complex conj() const noexcept { return {re, -im}; }

    friend constexpr Complex operator+(Complex a, Complex b) noexcept { return {a.re + b.re, a.im + b.im}; }
    friend constexpr Complex operator-(Complex a, Complex b) noexcept { return {a.re - b.re, a.im - b.im}; }
    friend constexpr Complex operator*(Complex a, Complex b) noexcept {
        return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
    }
    friend Complex operator/(Complex a, Complex b) noexcept {
        // Smith's scaling avoids overflow in |b|^2.
        if (std::abs(b.re) >= std::abs(b.im)) {
            const double r = b.im / b.re;
            const double d = b.re + b.im * r;
            return {(a.re + a.im * r) / d, (a.im - a.re * r) / d};
        }
        const double r = b.re / b.im;
        const double d = b.re * r + b.im;
        return {(a.re * r + a.im) / d, (a.im * r - a.re) / d};
    }
    friend constexpr bool operator==(Complex a, Complex b) noexcept { return a.re == b.re && a.im == b.im; }
};

inline double abs(Complex z) noexcept { return z.abs(); }

// ----------------------------------------------------------------------------
// Matrix
// ----------------------------------------------------------------------------

using Vector = std::vector<double>;

/// Row-major dense matrix of doubles. Empty (0-row or 0-column) matrices are
/// legal so that order-zero FIR constructions need no special casing.
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    /// Takes ownership of row-major entries; rejects non-finite values.
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
        : rows_(rows), cols_(cols), data_(std::move(entries)) {
        if (data_.size() != rows_ * cols_) {
            throw DimensionError("matrix entry count " + std::to_string(data_.size()) + " != " +
                                 std::to_string(rows_) + "x" + std::to_string(cols_));
        }
        require_finite();
    }

    /// Nested-list construction, e.g. `Matrix{{1, 2}, {3, 4}}`. Rejects ragged rows.
    Matrix(std::initializer_list<std::initializer_list<double>> rows) {
        rows_ = rows.size();
        cols_ = rows_ == 0 ? 0 : rows.begin()->size();
        data_.reserve(rows_ * cols_);
        for (const auto& r : rows) {
            if (r.size() != cols_) throw DimensionError("ragged matrix literal");
            data_.insert(data_.end(), r.begin(), r.end());
        }
        require_finite();
    }

    static Matrix zeros(std::size_t rows, std::size_t cols) { return Matrix(rows, cols); }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix diagonal(std::span<const double> d) {
        Matrix m(d.size(), d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
        return m;
    }

    static Matrix column(std::span<const double> v) { return Matrix(v.size(), 1, Vector(v.begin(), v.end())); }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }
    bool is_square() const noexcept { return rows_ == cols_; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    void require_finite() const {
        if (!all_finite()) throw DomainError("matrix contains NaN or Inf");
    }

    Matrix transpose() const {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    /// Copy of the `r x c` block starting at (i0, j0).
    Matrix block(std::size_t i0, std::size_t j0, std::size_t r, std::size_t c) const {
        if (i0 + r > rows_ || j0 + c > cols_) throw DimensionError("block out of range");
        Matrix b(r, c);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) b(i, j) = (*this)(i0 + i, j0 + j);
        return b;
    }

    void set_block(std::size_t i0, std::size_t j0, const Matrix& b) {
        if (i0 + b.rows() > rows_ || j0 + b.cols() > cols_) throw DimensionError("set_block out of range");
        for (std::size_t i = 0; i < b.rows(); ++i)
            for (std::size_t j = 0; j < b.cols(); ++j) (*this)(i0 + i, j0 + j) = b(i, j);
    }

    double trace() const {
        if (!is_square()) throw DimensionError("trace of non-square matrix");
        double s = 0.0;
        for (std::size_t i = 0; i < rows_; ++i) s += (*this)(i, i);
        return s;
    }

    double frobenius_norm() const noexcept {
        double s = 0.0;
        for (double v : data_) s += v * v;
        return std::sqrt(s);
    }

    double max_abs() const noexcept {
        double s = 0.0;
        for (double v : data_) s = std::max(s, std::abs(v));
        return s;
    }

    Matrix& operator+=(const Matrix& o) {
        check_same(o, "+=");
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
        return *this;
    }
    Matrix& operator-=(const Matrix& o) {
        check_same(o, "-=");
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
        return *this;
    }
    Matrix& operator*=(double s) noexcept {
        for (double& v : data_) v *= s;
        return *this;
    }

    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator*(Matrix a, double s) { return a *= s; }
    friend Matrix operator*(double s, Matrix a) { return a *= s; }
    friend Matrix operator-(Matrix a) { return a *= -1.0; }

    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        if (a.cols_ != b.rows_) {
            throw DimensionError("product of " + a.shape() + " and " + b.shape());
        }
        Matrix c(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const double aik = a(i, k);
                if (aik == 0.0) continue;
                for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
            }
        return c;
    }

    friend Vector operator*(const Matrix& a, std::span<const double> x) {
        if (a.cols_ != x.size()) throw DimensionError("matrix-vector product of " + a.shape());
        Vector y(a.rows_, 0.0);
        for (std::size_t i = 0; i < a.rows_; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < a.cols_; ++j) s += a(i, j) * x[j];
            y[i] = s;
        }
        return y;
    }

    friend bool operator==(const Matrix& a, const Matrix& b) noexcept {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

    std::string shape() const { return std::to_string(rows_) + "x" + std::to_string(cols_); }

private:
    void check_same(const Matrix& o, const char* op) const {
        if (rows_ != o.rows_ || cols_ != o.cols_) {
            throw DimensionError(std::string("operator") + op + " on " + shape() + " and " + o.shape());
        }
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline Matrix hcat(const std::vector<Matrix>& parts) {
    if (parts.empty()) return {};
    const std::size_t r = parts.front().rows();
    std::size_t c = 0;
    for (const auto& p : parts) {
        if (p.rows() != r) throw DimensionError("hcat row mismatch");
        c += p.cols();
    }
    Matrix out(r, c);
    std::size_t j = 0;
    for (const auto& p : parts) {
        out.set_block(0, j, p);
        j += p.cols();
    }
    return out;
}

inline Matrix vcat(const std::vector<Matrix>& parts) {
    if (parts.empty()) return {};
    const std::size_t c = parts.front().cols();
    std::size_t r = 0;
    for (const auto& p : parts) {
        if (p.cols() != c) throw DimensionError("vcat column mismatch");
        r += p.rows();
    }
    Matrix out(r, c);
    std::size_t i = 0;
    for (const auto& p : parts) {
        out.set_block(i, 0, p);
        i += p.rows();
    }
    return out;
}

inline Matrix symmetric_part(const Matrix& m) {
    Matrix s = m + m.transpose();
    s *= 0.5;
    return s;
}

inline Matrix matrix_power(const Matrix& m, std::size_t k) {
    if (!m.is_square()) throw DimensionError("power of non-square matrix");
    Matrix result = Matrix::identity(m.rows());
    Matrix base = m;
    while (k > 0) {
        if (k & 1U) result = result * base;
        k >>= 1U;
        if (k > 0) base = base * base;
    }
    return result;
}

/// Kronecker product a ⊗ b.
inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix k(a.rows() * b.rows(), a.cols() * b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            for (std::size_t p = 0; p < b.rows(); ++p)
                for (std::size_t q = 0; q < b.cols(); ++q) k(i * b.rows() + p, j * b.cols() + q) = a(i, j) * b(p, q);
    return k;
}

inline double norm2(std::span<const double> v) noexcept {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

// ----------------------------------------------------------------------------
// Tolerances
// ----------------------------------------------------------------------------

namespace tol {
inline constexpr double eig = 1e-8;           // absolute, on root residuals
inline constexpr double sym_rel = 1e-10;      // relative to ||m||
inline constexpr double sing_rel = 1e-12;     // relative to ||a||
inline constexpr double rank_default = 1e-9;  // relative to largest singular value
}  // namespace tol

// ----------------------------------------------------------------------------
// Nonsymmetric eigenvalues: balance, Householder-Hessenberg, Francis QR
// ----------------------------------------------------------------------------

namespace detail {

// Diagonal similarity by powers of two so that row and column norms match.
inline void balance(Matrix& a) {
    constexpr double radix = 2.0;
    constexpr double sqrdx = radix * radix;
    const std::size_t n = a.rows();
    bool done = false;
    while (!done) {
        done = true;
        for (std::size_t i = 0; i < n; ++i) {
            double r = 0.0;
            double c = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                c += std::abs(a(j, i));
                r += std::abs(a(i, j));
            }
            if (c == 0.0 || r == 0.0) continue;
            double g = r / radix;
            double f = 1.0;
            const double s = c + r;
            while (c < g) {
                f *= radix;
                c *= sqrdx;
            }
            g = r * radix;
            while (c > g) {
                f /= radix;
                c /= sqrdx;
            }
            if ((c + r) / f < 0.95 * s) {
                done = false;
                const double ginv = 1.0 / f;
                for (std::size_t j = 0; j < n; ++j) a(i, j) *= ginv;
                for (std::size_t j = 0; j < n; ++j) a(j, i) *= f;
            }
        }
    }
}

inline void reduce_to_hessenberg(Matrix& h) {
    const std::size_t n = h.rows();
    if (n < 3) return;
    Vector v(n);
    for (std::size_t k = 0; k + 2 < n; ++k) {
        double alpha = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) alpha += h(i, k) * h(i, k);
        alpha = std::sqrt(alpha);
        if (alpha == 0.0) continue;
        if (h(k + 1, k) > 0.0) alpha = -alpha;
        for (std::size_t i = 0; i < n; ++i) v[i] = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) v[i] = h(i, k);
        v[k + 1] -= alpha;
        double vnorm = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) vnorm += v[i] * v[i];
        if (vnorm == 0.0) continue;
        const double beta = 2.0 / vnorm;
        // H <- (I - beta v v^T) H
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = k + 1; i < n; ++i) s += v[i] * h(i, j);
            s *= beta;
            for (std::size_t i = k + 1; i < n; ++i) h(i, j) -= s * v[i];
        }
        // H <- H (I - beta v v^T)
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = k + 1; j < n; ++j) s += h(i, j) * v[j];
            s *= beta;
            for (std::size_t j = k + 1; j < n; ++j) h(i, j) -= s * v[j];
        }
        for (std::size_t i = k + 2; i < n; ++i) h(i, k) = 0.0;
    }
}

inline double sign_of(double a, double b) noexcept { return b >= 0.0 ? std::abs(a) : -std::abs(a); }

// Francis double-shift QR on an upper Hessenberg matrix (destroyed).
inline std::vector<Complex> hessenberg_qr(Matrix& hm) {
    const int n = static_cast<int>(hm.rows());
    std::vector<Complex> out(static_cast<std::size_t>(n));
    // 1-based accessor keeps the index arithmetic of the classic algorithm readable.
    auto a = [&hm](int i, int j) -> double& { return hm(static_cast<std::size_t>(i - 1), static_cast<std::size_t>(j - 1)); };

    double anorm = 0.0;
    for (int i = 1; i <= n; ++i)
        for (int j = std::max(i - 1, 1); j <= n; ++j) anorm += std::abs(a(i, j));

    // Clusters of (nearly) defective eigenvalues converge only linearly, so the
    // per-eigenvalue cap is generous; exceptional shifts every 10 steps.
    const int its_cap = 30 * std::max(n, 10);
    const int total_budget = its_cap * std::max(n, 1);
    int total_its = 0;
    int nn = n;
    double t = 0.0;
    while (nn >= 1) {
        int its = 0;
        int l = 0;
        do {
            for (l = nn; l >= 2; --l) {
                double s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
                if (s == 0.0) s = anorm;
                if (std::abs(a(l, l - 1)) + s == s) {
                    a(l, l - 1) = 0.0;
                    break;
                }
            }
            double x = a(nn, nn);
            if (l == nn) {
                out[static_cast<std::size_t>(nn - 1)] = {x + t, 0.0};
                --nn;
            } else {
                double y = a(nn - 1, nn - 1);
                double w = a(nn, nn - 1) * a(nn - 1, nn);
                if (l == nn - 1) {
                    const double p = 0.5 * (y - x);
                    const double q = p * p + w;
                    double z = std::sqrt(std::abs(q));
                    x += t;
                    if (q >= 0.0) {
                        z = p + sign_of(z, p);
                        out[static_cast<std::size_t>(nn - 2)] = {x + z, 0.0};
                        out[static_cast<std::size_t>(nn - 1)] = {z != 0.0 ? x - w / z : x + z, 0.0};
                    } else {
                        out[static_cast<std::size_t>(nn - 2)] = {x + p, -z};
                        out[static_cast<std::size_t>(nn - 1)] = {x + p, z};
                    }
                    nn -= 2;
                } else {
                    if (its == its_cap || total_its >= total_budget) {
                        throw ConvergenceError("QR iteration did not converge", std::abs(a(nn, nn - 1)));
                    }
                    if (its > 0 && its % 10 == 0) {
                        // exceptional shift
                        t += x;
                        for (int i = 1; i <= nn; ++i) a(i, i) -= x;
                        const double s = std::abs(a(nn, nn - 1)) + std::abs(a(nn - 1, nn - 2));
                        y = x = 0.75 * s;
                        w = -0.4375 * s * s;
                    }
                    ++its;
                    ++total_its;
                    int m = nn - 2;
                    double p = 0.0, q = 0.0, r = 0.0, z = 0.0;
                    for (; m >= l; --m) {
                        z = a(m, m);
                        r = x - z;
                        double s = y - z;
                        p = (r * s - w) / a(m + 1, m) + a(m, m + 1);
                        q = a(m + 1, m + 1) - z - r - s;
                        r = a(m + 2, m + 1);
                        s = std::abs(p) + std::abs(q) + std::abs(r);
                        p /= s;
                        q /= s;
                        r /= s;
                        if (m == l) break;
                        const double u = std::abs(a(m, m - 1)) * (std::abs(q) + std::abs(r));
                        const double v = std::abs(p) * (std::abs(a(m - 1, m - 1)) + std::abs(z) + std::abs(a(m + 1, m + 1)));
                        if (u + v == v) break;
                    }
                    for (int i = m + 2; i <= nn; ++i) {
                        a(i, i - 2) = 0.0;
                        if (i != m + 2) a(i, i - 3) = 0.0;
                    }
                    for (int k = m; k <= nn - 1; ++k) {
                        if (k != m) {
                            p = a(k, k - 1);
                            q = a(k + 1, k - 1);
                            r = 0.0;
                            if (k != nn - 1) r = a(k + 2, k - 1);
                            x = std::abs(p) + std::abs(q) + std::abs(r);
                            if (x != 0.0) {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        const double s = sign_of(std::sqrt(p * p + q * q + r * r), p);
                        if (s == 0.0) continue;
                        if (k == m) {
                            if (l != m) a(k, k - 1) = -a(k, k - 1);
                        } else {
                            a(k, k - 1) = -s * x;
                        }
                        p += s;
                        x = p / s;
                        y = q / s;
                        z = r / s;
                        q /= p;
                        r /= p;
                        for (int j = k; j <= nn; ++j) {
                            p = a(k, j) + q * a(k + 1, j);
                            if (k != nn - 1) {
                                p += r * a(k + 2, j);
                                a(k + 2, j) -= p * z;
                            }
                            a(k + 1, j) -= p * y;
                            a(k, j) -= p * x;
                        }
                        const int mmin = nn < k + 3 ? nn : k + 3;
                        for (int i = l; i <= mmin; ++i) {
                            p = x * a(i, k) + y * a(i, k + 1);
                            if (k != nn - 1) {
                                p += z * a(i, k + 2);
                                a(i, k + 2) -= p * r;
                            }
                            a(i, k + 1) -= p * q;
                            a(i, k) -= p;
                        }
                    }
                }
            }
        } while (l < nn - 1);
    }
    return out;
}

}  // namespace detail

/// All eigenvalues of a square matrix, with multiplicity, in no particular order.
inline std::vector<Complex> eigenvalues(const Matrix& m) {
    if (!m.is_square()) throw DimensionError("eigenvalues of non-square " + m.shape());
    m.require_finite();
    if (m.rows() == 0) return {};
    Matrix h = m;
    detail::balance(h);
    detail::reduce_to_hessenberg(h);
    return detail::hessenberg_qr(h);
}

inline double spectral_radius(const Matrix& m) {
    if (m.rows() == 0) throw DimensionError("spectral radius of an empty matrix");
    double r = 0.0;
    for (const Complex& z : eigenvalues(m)) r = std::max(r, z.abs());
    return r;
}

// ----------------------------------------------------------------------------
// Symmetric eigenproblem (cyclic Jacobi)
// ----------------------------------------------------------------------------

struct SymmetricEigen {
    Vector values;  // ascending
    Matrix vectors; // columns are the matching orthonormal eigenvectors
};

namespace detail {

inline void require_symmetric(const Matrix& m, double rel_tol) {
    if (!m.is_square()) throw DimensionError("symmetric eigenproblem on non-square " + m.shape());
    const double scale = m.frobenius_norm();
    double asym = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = i + 1; j < m.cols(); ++j) asym = std::max(asym, std::abs(m(i, j) - m(j, i)));
    if (asym > rel_tol * scale) {
        throw ContractError("matrix not symmetric: max asymmetry " + std::to_string(asym));
    }
}

}  // namespace detail

/// Eigen decomposition of the symmetrized input `(m + m^T)/2`.
inline SymmetricEigen sym_eig(const Matrix& m, double rel_tol = tol::sym_rel) {
    detail::require_symmetric(m, rel_tol);
    m.require_finite();
    const std::size_t n = m.rows();
    Matrix a = symmetric_part(m);
    Matrix v = Matrix::identity(n);
    const double scale = std::max(a.frobenius_norm(), 1e-300);

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (std::sqrt(off) <= 1e-15 * scale) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });
    SymmetricEigen out{Vector(n), Matrix(n, n)};
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]);
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
    }
    return out;
}

/// (smallest, largest) eigenvalue of the symmetrized matrix.
inline std::pair<double, double> sym_eig_extremes(const Matrix& m, double rel_tol = tol::sym_rel) {
    if (m.rows() == 0) throw DimensionError("extremal eigenvalues of an empty matrix");
    const auto e = sym_eig(m, rel_tol);
    return {e.values.front(), e.values.back()};
}

// ----------------------------------------------------------------------------
// Singular values (one-sided Jacobi) and rank
// ----------------------------------------------------------------------------

/// Singular values in descending order.
inline Vector singular_values(const Matrix& m) {
    m.require_finite();
    // Work on the orientation with at least as many rows as columns.
    Matrix a = m.rows() >= m.cols() ? m : m.transpose();
    const std::size_t rows = a.rows();
    const std::size_t cols = a.cols();
    for (int sweep = 0; sweep < 80; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p < cols; ++p) {
            for (std::size_t q = p + 1; q < cols; ++q) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (std::size_t i = 0; i < rows; ++i) {
                    alpha += a(i, p) * a(i, p);
                    beta += a(i, q) * a(i, q);
                    gamma += a(i, p) * a(i, q);
                }
                if (gamma == 0.0 || std::abs(gamma) <= 1e-15 * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < rows; ++i) {
                    const double aip = a(i, p);
                    const double aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(i, q) = s * aip + c * aiq;
                }
            }
        }
        if (!rotated) break;
    }
    Vector sv(cols);
    for (std::size_t j = 0; j < cols; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < rows; ++i) s += a(i, j) * a(i, j);
        sv[j] = std::sqrt(s);
    }
    std::sort(sv.begin(), sv.end(), std::greater<>());
    return sv;
}

/// Number of singular values strictly above `tol` times the largest one.
inline std::size_t rank(const Matrix& m, double tol = tol::rank_default) {
    if (tol < 0.0) throw ContractError("rank tolerance must be nonnegative");
    if (m.empty()) return 0;
    const Vector sv = singular_values(m);
    if (sv.empty() || sv.front() == 0.0) return 0;
    const double cutoff = tol * sv.front();
    return static_cast<std::size_t>(std::count_if(sv.begin(), sv.end(), [&](double s) { return s > cutoff; }));
}

// ----------------------------------------------------------------------------
// Linear systems
// ----------------------------------------------------------------------------

/// LU factorization with partial pivoting, PA = LU packed in one matrix.
class LuDecomposition {
public:
    explicit LuDecomposition(const Matrix& a, double sing_rel = tol::sing_rel) : lu_(a), perm_(a.rows()) {
        if (!a.is_square()) throw DimensionError("LU of non-square " + a.shape());
        a.require_finite();
        const std::size_t n = a.rows();
        std::iota(perm_.begin(), perm_.end(), std::size_t{0});
        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < n; ++j) row += std::abs(a(i, j));
            norm = std::max(norm, row);
        }
        const double threshold = sing_rel * norm;
        for (std::size_t k = 0; k < n; ++k) {
            std::size_t piv = k;
            for (std::size_t i = k + 1; i < n; ++i)
                if (std::abs(lu_(i, k)) > std::abs(lu_(piv, k))) piv = i;
            if (std::abs(lu_(piv, k)) <= threshold) {
                throw SingularityError("matrix is singular to working precision (pivot " +
                                       std::to_string(std::abs(lu_(piv, k))) + ")");
            }
            if (piv != k) {
                for (std::size_t j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(piv, j));
                std::swap(perm_[k], perm_[piv]);
                sign_ = -sign_;
            }
            for (std::size_t i = k + 1; i < n; ++i) {
                const double f = lu_(i, k) / lu_(k, k);
                lu_(i, k) = f;
                if (f == 0.0) continue;
                for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= f * lu_(k, j);
            }
        }
    }

    Matrix solve(const Matrix& b) const {
        const std::size_t n = lu_.rows();
        if (b.rows() != n) throw DimensionError("rhs " + b.shape() + " incompatible with " + lu_.shape());
        Matrix x(n, b.cols());
        for (std::size_t c = 0; c < b.cols(); ++c) {
            for (std::size_t i = 0; i < n; ++i) {
                double s = b(perm_[i], c);
                for (std::size_t j = 0; j < i; ++j) s -= lu_(i, j) * x(j, c);
                x(i, c) = s;
            }
            for (std::size_t i = n; i-- > 0;) {
                double s = x(i, c);
                for (std::size_t j = i + 1; j < n; ++j) s -= lu_(i, j) * x(j, c);
                x(i, c) = s / lu_(i, i);
            }
        }
        return x;
    }

    double determinant() const noexcept {
        double d = sign_;
        for (std::size_t i = 0; i < lu_.rows(); ++i) d *= lu_(i, i);
        return d;
    }

private:
    Matrix lu_;
    std::vector<std::size_t> perm_;
    double sign_ = 1.0;
};

inline Matrix solve_linear(const Matrix& a, const Matrix& b, double sing_rel = tol::sing_rel) {
    return LuDecomposition(a, sing_rel).solve(b);
}

inline Matrix inverse(const Matrix& a, double sing_rel = tol::sing_rel) {
    return solve_linear(a, Matrix::identity(a.rows()), sing_rel);
}

/// Lower Cholesky factor of a symmetric positive-definite matrix, or nullopt.
inline std::optional<Matrix> cholesky(const Matrix& a) {
    if (!a.is_square()) throw DimensionError("cholesky of non-square " + a.shape());
    const std::size_t n = a.rows();
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 0.0)) return std::nullopt;
        l(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

/// Inverse of an SPD matrix from its lower Cholesky factor.
inline Matrix cholesky_inverse(const Matrix& l) {
    const std::size_t n = l.rows();
    Matrix linv(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        linv(j, j) = 1.0 / l(j, j);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = 0.0;
            for (std::size_t k = j; k < i; ++k) s -= l(i, k) * linv(k, j);
            linv(i, j) = s / l(i, i);
        }
    }
    return linv.transpose() * linv;
}

/// Minimum-norm least-squares solution of `x * a = b` (row-space fit), via
/// the symmetric eigen decomposition of a a^T.
inline Matrix solve_right_least_squares(const Matrix& b, const Matrix& a, double rel_cutoff = 1e-12) {
    if (b.cols() != a.cols()) throw DimensionError("least squares: " + b.shape() + " vs " + a.shape());
    const Matrix gram = a * a.transpose();
    const auto eig = sym_eig(gram);
    const double top = eig.values.empty() ? 0.0 : std::max(std::abs(eig.values.back()), 0.0);
    Matrix pinv_gram(gram.rows(), gram.cols());
    for (std::size_t k = 0; k < eig.values.size(); ++k) {
        if (eig.values[k] <= rel_cutoff * top || eig.values[k] <= 0.0) continue;
        const double inv = 1.0 / eig.values[k];
        for (std::size_t i = 0; i < gram.rows(); ++i)
            for (std::size_t j = 0; j < gram.cols(); ++j)
                pinv_gram(i, j) += inv * eig.vectors(i, k) * eig.vectors(j, k);
    }
    return b * a.transpose() * pinv_gram;
}

// ----------------------------------------------------------------------------
// Polynomials
// ----------------------------------------------------------------------------

/// Real polynomial, coefficients ordered highest degree first.
class Polynomial {
public:
    Polynomial() : coeffs_{0.0} {}

    explicit Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
        for (double c : coeffs_)
            if (!std::isfinite(c)) throw DomainError("polynomial coefficient is not finite");
        auto first = std::find_if(coeffs_.begin(), coeffs_.end(), [](double c) { return c != 0.0; });
        coeffs_.erase(coeffs_.begin(), first);
        if (coeffs_.empty()) coeffs_.push_back(0.0);
    }

    Polynomial(std::initializer_list<double> coeffs) : Polynomial(std::vector<double>(coeffs)) {}

    /// Monic polynomial with the given real roots.
    static Polynomial from_roots(std::span<const double> roots) {
        std::vector<double> c{1.0};
        for (double r : roots) {
            std::vector<double> next(c.size() + 1, 0.0);
            for (std::size_t i = 0; i < c.size(); ++i) {
                next[i] += c[i];
                next[i + 1] -= r * c[i];
            }
            c = std::move(next);
        }
        return Polynomial(std::move(c));
    }

    std::size_t degree() const noexcept { return coeffs_.size() - 1; }
    bool is_zero() const noexcept { return coeffs_.size() == 1 && coeffs_[0] == 0.0; }
    double leading() const noexcept { return coeffs_.front(); }
    const std::vector<double>& coeffs() const noexcept { return coeffs_; }

    double operator()(double z) const noexcept {
        double acc = 0.0;
        for (double c : coeffs_) acc = acc * z + c;
        return acc;
    }

    Complex operator()(Complex z) const noexcept {
        Complex acc{0.0, 0.0};
        for (double c : coeffs_) acc = acc * z + Complex{c, 0.0};
        return acc;
    }

    Polynomial scaled(double s) const {
        std::vector<double> c = coeffs_;
        for (double& v : c) v *= s;
        return Polynomial(std::move(c));
    }

    Polynomial monic() const {
        if (is_zero()) throw DomainError("zero polynomial has no monic form");
        return scaled(1.0 / leading());
    }

    friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
        std::vector<double> c(a.coeffs_.size() + b.coeffs_.size() - 1, 0.0);
        for (std::size_t i = 0; i < a.coeffs_.size(); ++i)
            for (std::size_t j = 0; j < b.coeffs_.size(); ++j) c[i + j] += a.coeffs_[i] * b.coeffs_[j];
        return Polynomial(std::move(c));
    }

    friend Polynomial operator+(const Polynomial& a, const Polynomial& b) {
        const std::size_t n = std::max(a.coeffs_.size(), b.coeffs_.size());
        std::vector<double> c(n, 0.0);
        for (std::size_t i = 0; i < a.coeffs_.size(); ++i) c[n - a.coeffs_.size() + i] += a.coeffs_[i];
        for (std::size_t i = 0; i < b.coeffs_.size(); ++i) c[n - b.coeffs_.size() + i] += b.coeffs_[i];
        return Polynomial(std::move(c));
    }

    friend bool operator==(const Polynomial&, const Polynomial&) = default;

private:
    std::vector<double> coeffs_;
};

/// Companion matrix of the monic normalization of p (first row holds -a_i).
inline Matrix companion(const Polynomial& p) {
    if (p.degree() < 1) throw DomainError("companion matrix needs degree >= 1");
    const Polynomial q = p.monic();
    const std::size_t n = q.degree();
    Matrix c(n, n);
    for (std::size_t j = 0; j < n; ++j) c(0, j) = -q.coeffs()[j + 1];
    for (std::size_t i = 1; i < n; ++i) c(i, i - 1) = 1.0;
    return c;
}

inline std::vector<Complex> poly_roots(const Polynomial& p) {
    if (p.degree() < 1) throw DomainError("roots of a degree-0 polynomial");
    return eigenvalues(companion(p));
}

}  // namespace firctl
