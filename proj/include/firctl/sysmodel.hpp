#pragma once

// Plants, FIR controllers and their equivalent representations: the augmented
// static-output-feedback plant, the stacked gain, the structured dynamic
// controller and the closed-loop matrix they all share.

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "firctl/errors.hpp"
#include "firctl/matlib.hpp"

namespace firctl {

/// Discrete-time plant x(k+1) = A x(k) + B u(k), y(k) = C x(k).
class StateSpaceSystem {
public:
    StateSpaceSystem() = default;

    StateSpaceSystem(Matrix a, Matrix b, Matrix c) : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)) {
        if (!a_.is_square()) throw DimensionError("A must be square, got " + a_.shape());
        if (a_.rows() == 0) throw DimensionError("plant needs at least one state");
        if (b_.rows() != a_.rows()) throw DimensionError("B must have n rows, got " + b_.shape());
        if (c_.cols() != a_.rows()) throw DimensionError("C must have n columns, got " + c_.shape());
        if (b_.cols() == 0 || c_.rows() == 0) throw DimensionError("plant needs at least one input and one output");
        a_.require_finite();
        b_.require_finite();
        c_.require_finite();
    }

    const Matrix& A() const noexcept { return a_; }
    const Matrix& B() const noexcept { return b_; }
    const Matrix& C() const noexcept { return c_; }

    std::size_t n() const noexcept { return a_.rows(); }
    std::size_t m() const noexcept { return b_.cols(); }
    std::size_t p() const noexcept { return c_.rows(); }
    bool is_siso() const noexcept { return m() == 1 && p() == 1; }

private:
    Matrix a_;
    Matrix b_;
    Matrix c_;
};

/// SISO transfer function num(z)/den(z); proper, nonzero denominator.
class TransferFunctionSiso {
public:
    TransferFunctionSiso(Polynomial num, Polynomial den) : num_(std::move(num)), den_(std::move(den)) {
        if (den_.is_zero()) throw DomainError("transfer function denominator is zero");
        if (!num_.is_zero() && num_.degree() > den_.degree()) throw DomainError("transfer function is improper");
    }

    const Polynomial& num() const noexcept { return num_; }
    const Polynomial& den() const noexcept { return den_; }
    bool strictly_proper() const noexcept { return num_.is_zero() || num_.degree() < den_.degree(); }

    Complex operator()(Complex z) const { return num_(z) / den_(z); }

private:
    Polynomial num_;
    Polynomial den_;
};

/// FIR gains F_0 ... F_l, each m x p.
class FirGains {
public:
    FirGains() = default;

    explicit FirGains(std::vector<Matrix> gains) : gains_(std::move(gains)) {
        if (gains_.empty()) throw DimensionError("FIR controller needs at least F_0");
        for (const auto& g : gains_) {
            if (g.rows() != gains_.front().rows() || g.cols() != gains_.front().cols()) {
                throw DimensionError("FIR gains must share one shape");
            }
            g.require_finite();
        }
    }

    static FirGains zeros(std::size_t order, std::size_t m, std::size_t p) {
        return FirGains(std::vector<Matrix>(order + 1, Matrix(m, p)));
    }

    /// Inverse of `flatten`: F_0 first, each gain row-major.
    static FirGains unflatten(std::span<const double> values, std::size_t order, std::size_t m, std::size_t p) {
        if (values.size() != (order + 1) * m * p) {
            throw DimensionError("gain vector length " + std::to_string(values.size()) + " != " +
                                 std::to_string((order + 1) * m * p));
        }
        std::vector<Matrix> gains;
        gains.reserve(order + 1);
        for (std::size_t i = 0; i <= order; ++i) {
            const auto first = values.begin() + static_cast<std::ptrdiff_t>(i * m * p);
            gains.emplace_back(m, p, Vector(first, first + static_cast<std::ptrdiff_t>(m * p)));
        }
        return FirGains(std::move(gains));
    }

    Vector flatten() const {
        Vector v;
        v.reserve(gains_.size() * m() * p());
        for (const auto& g : gains_) v.insert(v.end(), g.data().begin(), g.data().end());
        return v;
    }

    std::size_t order() const noexcept { return gains_.size() - 1; }
    std::size_t m() const noexcept { return gains_.front().rows(); }
    std::size_t p() const noexcept { return gains_.front().cols(); }
    const Matrix& operator[](std::size_t i) const { return gains_.at(i); }
    const std::vector<Matrix>& gains() const noexcept { return gains_; }

    /// The order-(l+1) controller (F_0 ... F_l 0) with identical closed-loop
    /// eigenvalues plus p extra zeros.
    FirGains padded() const {
        std::vector<Matrix> g = gains_;
        g.emplace_back(m(), p());
        return FirGains(std::move(g));
    }

    friend bool operator==(const FirGains&, const FirGains&) = default;

private:
    std::vector<Matrix> gains_;
};

/// Plant augmented with the last l outputs as extra state.
struct AugmentedPlant {
    std::size_t order = 0;
    Matrix A;  // (n + l p) square
    Matrix B;  // (n + l p) x m
    Matrix C;  // (l + 1) p x (n + l p)
    std::size_t n = 0, m = 0, p = 0;
};

/// x̂(k+1) = H x̂(k) + G y(k), u(k) = E x̂(k) + D y(k).
class DynamicController {
public:
    DynamicController() = default;

    DynamicController(Matrix h, Matrix g, Matrix e, Matrix d)
        : h_(std::move(h)), g_(std::move(g)), e_(std::move(e)), d_(std::move(d)) {
        const std::size_t k = h_.rows();
        if (!h_.is_square()) throw DimensionError("H must be square, got " + h_.shape());
        if (g_.rows() != k || e_.cols() != k) throw DimensionError("G rows and E columns must match H");
        if (d_.rows() != e_.rows() || d_.cols() != g_.cols()) throw DimensionError("D must be m x p");
        for (const Matrix* x : {&h_, &g_, &e_, &d_}) x->require_finite();
    }

    const Matrix& H() const noexcept { return h_; }
    const Matrix& G() const noexcept { return g_; }
    const Matrix& E() const noexcept { return e_; }
    const Matrix& D() const noexcept { return d_; }

    std::size_t states() const noexcept { return h_.rows(); }
    std::size_t m() const noexcept { return d_.rows(); }
    std::size_t p() const noexcept { return d_.cols(); }

private:
    Matrix h_, g_, e_, d_;
};

inline AugmentedPlant augment(const StateSpaceSystem& sys, std::size_t order) {
    const std::size_t n = sys.n(), m = sys.m(), p = sys.p();
    const std::size_t dim = n + order * p;
    AugmentedPlant aug{order, Matrix(dim, dim), Matrix(dim, m), Matrix((order + 1) * p, dim), n, m, p};
    aug.A.set_block(0, 0, sys.A());
    if (order >= 1) aug.A.set_block(n, 0, sys.C());
    for (std::size_t i = 1; i < order; ++i) aug.A.set_block(n + i * p, n + (i - 1) * p, Matrix::identity(p));
    aug.B.set_block(0, 0, sys.B());
    aug.C.set_block(0, 0, sys.C());
    aug.C.set_block(p, n, Matrix::identity(order * p));
    return aug;
}

/// (F_0 F_1 ... F_l) as one m x (l+1)p matrix.
inline Matrix stack_gains(const FirGains& f) { return hcat(f.gains()); }

inline FirGains unstack_gains(const Matrix& stacked, std::size_t p) {
    if (p == 0 || stacked.cols() % p != 0 || stacked.cols() == 0) {
        throw DimensionError("stacked gain " + stacked.shape() + " is not a multiple of p=" + std::to_string(p));
    }
    std::vector<Matrix> gains;
    for (std::size_t j = 0; j < stacked.cols(); j += p) gains.push_back(stacked.block(0, j, stacked.rows(), p));
    return FirGains(std::move(gains));
}

inline DynamicController to_dynamic(const FirGains& f) {
    const std::size_t l = f.order(), m = f.m(), p = f.p();
    const std::size_t k = l * p;
    Matrix h(k, k);
    for (std::size_t i = 1; i < l; ++i) h.set_block(i * p, (i - 1) * p, Matrix::identity(p));
    Matrix g(k, p);
    if (l >= 1) g.set_block(0, 0, Matrix::identity(p));
    Matrix e(m, k);
    for (std::size_t i = 1; i <= l; ++i) e.set_block(0, (i - 1) * p, f[i]);
    return DynamicController(std::move(h), std::move(g), std::move(e), f[0]);
}

namespace detail {
inline void require_matching(const StateSpaceSystem& sys, std::size_t m, std::size_t p) {
    if (m != sys.m() || p != sys.p()) {
        throw DimensionError("controller is " + std::to_string(m) + "x" + std::to_string(p) + " but plant has m=" +
                             std::to_string(sys.m()) + ", p=" + std::to_string(sys.p()));
    }
}
}  // namespace detail

/// Closed-loop matrix Φ_l of the plant under FIR feedback, assembled block by block.
inline Matrix closed_loop(const StateSpaceSystem& sys, const FirGains& f) {
    detail::require_matching(sys, f.m(), f.p());
    const std::size_t n = sys.n(), p = sys.p(), l = f.order();
    const std::size_t dim = n + l * p;
    Matrix phi(dim, dim);
    phi.set_block(0, 0, sys.A() + (sys.B() * f[0]) * sys.C());
    for (std::size_t i = 1; i <= l; ++i) phi.set_block(0, n + (i - 1) * p, sys.B() * f[i]);
    if (l >= 1) phi.set_block(n, 0, sys.C());
    for (std::size_t i = 1; i < l; ++i) phi.set_block(n + i * p, n + (i - 1) * p, Matrix::identity(p));
    return phi;
}

/// A_l + B_l F_l C_l on the augmented plant.
inline Matrix closed_loop_augmented(const AugmentedPlant& aug, const FirGains& f) {
    if (f.m() != aug.m || f.p() != aug.p || f.order() != aug.order) {
        throw DimensionError("gains do not match augmented plant");
    }
    return aug.A + (aug.B * stack_gains(f)) * aug.C;
}

/// [[A + B D C, B E], [G C, H]].
inline Matrix closed_loop_dynamic(const StateSpaceSystem& sys, const DynamicController& ctl) {
    detail::require_matching(sys, ctl.m(), ctl.p());
    const std::size_t n = sys.n(), k = ctl.states();
    Matrix phi(n + k, n + k);
    phi.set_block(0, 0, sys.A() + (sys.B() * ctl.D()) * sys.C());
    phi.set_block(0, n, sys.B() * ctl.E());
    phi.set_block(n, 0, ctl.G() * sys.C());
    phi.set_block(n, n, ctl.H());
    return phi;
}

/// Controllable canonical realization plus the direct feedthrough term.
struct SisoRealization {
    Matrix A, B, C;
    double feedthrough = 0.0;
};

inline SisoRealization realize(const TransferFunctionSiso& tf) {
    const Polynomial den = tf.den().monic();
    const Polynomial num = tf.num().scaled(1.0 / tf.den().leading());
    const std::size_t n = den.degree();
    if (n == 0) throw DomainError("static gain has no state-space realization with n >= 1");
    double direct = 0.0;
    Polynomial strict = num;
    if (!num.is_zero() && num.degree() == n) {
        direct = num.leading();
        strict = num + den.scaled(-direct);
    }
    SisoRealization r{companion(den), Matrix(n, 1), Matrix(1, n), direct};
    r.B(0, 0) = 1.0;
    const auto& c = strict.coeffs();
    if (!strict.is_zero()) {
        // c holds b_{deg}..b_0; place them right-aligned in C.
        for (std::size_t i = 0; i < c.size(); ++i) r.C(0, n - c.size() + i) = c[i];
    }
    return r;
}

/// Controllable canonical realization of a strictly proper transfer function.
inline StateSpaceSystem tf_to_ss(const TransferFunctionSiso& tf) {
    SisoRealization r = realize(tf);
    if (r.feedthrough != 0.0) {
        throw DomainError("plant transfer function has direct feedthrough; plants must be strictly proper");
    }
    return StateSpaceSystem(std::move(r.A), std::move(r.B), std::move(r.C));
}

/// Loop convention for a controller given as a transfer function.
enum class LoopSign { Negative, Positive };

/// Gains of an FIR controller c(z) = (c_0 z^l + ... + c_l) / z^l. With
/// LoopSign::Negative the law is u = -c(z) y, otherwise u = c(z) y.
inline FirGains fir_from_transfer(const TransferFunctionSiso& ctl, LoopSign sign = LoopSign::Negative) {
    const auto& den = ctl.den().coeffs();
    for (std::size_t i = 1; i < den.size(); ++i) {
        if (den[i] != 0.0) throw DomainError("controller denominator is not a pure power of z (not FIR)");
    }
    const std::size_t l = ctl.den().degree();
    const double s = (sign == LoopSign::Negative ? -1.0 : 1.0) / ctl.den().leading();
    const auto& num = ctl.num().coeffs();
    std::vector<Matrix> gains(l + 1, Matrix(1, 1));
    // num right-aligned against z^l .. z^0
    for (std::size_t i = 0; i < num.size(); ++i) gains[l + 1 - num.size() + i](0, 0) = s * num[i];
    return FirGains(std::move(gains));
}

}  // namespace firctl
