#pragma once

// Stability and existence analysis: Schur test, PBH stabilizability and
// detectability, poles and zeros, and the SISO parity interlacing property
// that decides whether any stable (in particular FIR) controller can exist.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "firctl/matlib.hpp"
#include "firctl/sysmodel.hpp"

namespace firctl {

inline bool is_schur(const Matrix& m, double margin = 0.0) {
    if (margin < 0.0) throw ContractError("stability margin must be nonnegative");
    return spectral_radius(m) < 1.0 - margin;
}

namespace detail {

// Rank of the complex matrix (re + i im), via its real 2x2-block embedding.
inline std::size_t complex_rank(const Matrix& re, const Matrix& im, double tol) {
    const std::size_t r = re.rows(), c = re.cols();
    Matrix big(2 * r, 2 * c);
    big.set_block(0, 0, re);
    big.set_block(0, c, -im);
    big.set_block(r, 0, im);
    big.set_block(r, c, re);
    return rank(big, tol) / 2;
}

// |λ| >= 1 counts as unstable; the boundary is included.
inline bool unstable_mode(Complex z) noexcept { return z.abs() >= 1.0 - 1e-12; }

}  // namespace detail

/// Hautus test: rank(λI - A | B) = n at every eigenvalue with |λ| >= 1.
inline bool pbh_stabilizable(const Matrix& a, const Matrix& b, double tol = tol::rank_default) {
    const std::size_t n = a.rows();
    if (!a.is_square() || b.rows() != n) throw DimensionError("PBH test needs square A and B with n rows");
    for (const Complex& lambda : eigenvalues(a)) {
        if (!detail::unstable_mode(lambda)) continue;
        Matrix re(n, n + b.cols());
        Matrix im(n, n + b.cols());
        re.set_block(0, 0, -a);
        re.set_block(0, n, b);
        for (std::size_t i = 0; i < n; ++i) {
            re(i, i) += lambda.re;
            im(i, i) = lambda.im;
        }
        if (detail::complex_rank(re, im, tol) < n) return false;
    }
    return true;
}

inline bool pbh_stabilizable(const StateSpaceSystem& sys, double tol = tol::rank_default) {
    return pbh_stabilizable(sys.A(), sys.B(), tol);
}

inline bool pbh_detectable(const StateSpaceSystem& sys, double tol = tol::rank_default) {
    return pbh_stabilizable(sys.A().transpose(), sys.C().transpose(), tol);
}

/// PBH on the augmented pair; agrees with pbh_stabilizable(sys) for every order.
inline bool augmented_stabilizable_check(const StateSpaceSystem& sys, std::size_t order,
                                         double tol = tol::rank_default) {
    const AugmentedPlant aug = augment(sys, order);
    return pbh_stabilizable(aug.A, aug.B, tol);
}

// ----------------------------------------------------------------------------
// Poles, zeros, parity interlacing
// ----------------------------------------------------------------------------

struct PolesZeros {
    std::vector<Complex> poles;
    std::vector<Complex> zeros;
    bool zero_at_infinity = false;
};

inline PolesZeros poles_zeros(const TransferFunctionSiso& tf) {
    PolesZeros pz;
    if (tf.den().degree() >= 1) pz.poles = poly_roots(tf.den());
    if (!tf.num().is_zero() && tf.num().degree() >= 1) pz.zeros = poly_roots(tf.num());
    pz.zero_at_infinity = tf.strictly_proper();
    return pz;
}

/// Transfer function C (zI - A)^{-1} B of a SISO plant.
inline TransferFunctionSiso ss_to_tf(const StateSpaceSystem& sys) {
    if (!sys.is_siso()) throw DimensionError("ss_to_tf needs a SISO plant");
    auto charpoly = [](const Matrix& m) {
        // real part of prod (z - λ_i)
        std::vector<Complex> c{Complex{1.0}};
        for (const Complex& lambda : eigenvalues(m)) {
            std::vector<Complex> next(c.size() + 1);
            for (std::size_t i = 0; i < c.size(); ++i) {
                next[i] = next[i] + c[i];
                next[i + 1] = next[i + 1] - lambda * c[i];
            }
            c = std::move(next);
        }
        std::vector<double> out(c.size());
        for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i].re;
        return out;
    };
    // det(zI - A + BC) = det(zI - A) (1 + C (zI - A)^{-1} B)
    const auto den = charpoly(sys.A());
    const auto closed = charpoly(sys.A() - sys.B() * sys.C());
    std::vector<double> num(den.size());
    const double scale = std::max(1.0, *std::max_element(den.begin(), den.end(), [](double x, double y) {
        return std::abs(x) < std::abs(y);
    }));
    for (std::size_t i = 0; i < den.size(); ++i) {
        num[i] = closed[i] - den[i];
        if (std::abs(num[i]) <= 1e-12 * scale) num[i] = 0.0;
    }
    return TransferFunctionSiso(Polynomial(num), Polynomial(den));
}

inline constexpr double kPipTolerance = 1e-9;
inline constexpr double kRealnessTolerance = 1e-8;
inline constexpr double kCancellationTolerance = 1e-8;

struct IntervalPoleCount {
    double lower = 0.0;
    double upper = 0.0;  // may be +infinity
    std::size_t count = 0;
};

struct PipReport {
    bool holds = true;
    std::vector<double> unstable_real_zeros;  // ascending; +inf last when strictly proper
    std::vector<IntervalPoleCount> interval_pole_counts;
    std::vector<double> unstable_real_poles;  // ascending, with multiplicity
    std::vector<Complex> cancelled;           // pole/zero pairs removed before the test
    std::vector<std::string> borderline;      // values too close to call, never dropped silently
};

namespace detail {

inline bool is_real(Complex z) noexcept { return std::abs(z.im) <= kRealnessTolerance * (1.0 + std::abs(z.re)); }

// Sorts values on or near the positive real axis into unstable / borderline.
inline void classify_real_axis(const std::vector<Complex>& roots, const char* what, double tol,
                               std::vector<double>& unstable, std::vector<std::string>& borderline) {
    for (const Complex& z : roots) {
        const bool real = is_real(z);
        if (real && z.re > 1.0 + tol) {
            unstable.push_back(z.re);
        } else if (real && std::abs(z.re - 1.0) <= tol) {
            borderline.push_back(std::string(what) + " on the unit circle at z=" + std::to_string(z.re));
        } else if (!real && z.re > 1.0 - tol && std::abs(z.im) <= 1e-5 * (1.0 + std::abs(z.re))) {
            borderline.push_back(std::string(what) + " nearly real at z=" + std::to_string(z.re) + (z.im < 0 ? "" : "+") +
                                 std::to_string(z.im) + "i");
        }
    }
}

}  // namespace detail

/// Parity interlacing test on the positive real axis beyond z = 1.
inline PipReport pip_check(const TransferFunctionSiso& tf, double tol = kPipTolerance) {
    PolesZeros pz = poles_zeros(tf);
    PipReport report;

    // Cancel common pole/zero pairs so the test runs on the irreducible form.
    std::vector<bool> pole_used(pz.poles.size(), false);
    std::vector<Complex> zeros;
    for (const Complex& z : pz.zeros) {
        bool matched = false;
        for (std::size_t k = 0; k < pz.poles.size(); ++k) {
            if (!pole_used[k] && (z - pz.poles[k]).abs() <= kCancellationTolerance * (1.0 + z.abs())) {
                pole_used[k] = true;
                matched = true;
                report.cancelled.push_back(z);
                break;
            }
        }
        if (!matched) zeros.push_back(z);
    }
    std::vector<Complex> poles;
    for (std::size_t k = 0; k < pz.poles.size(); ++k)
        if (!pole_used[k]) poles.push_back(pz.poles[k]);

    detail::classify_real_axis(zeros, "zero", tol, report.unstable_real_zeros, report.borderline);
    detail::classify_real_axis(poles, "pole", tol, report.unstable_real_poles, report.borderline);
    std::sort(report.unstable_real_zeros.begin(), report.unstable_real_zeros.end());
    std::sort(report.unstable_real_poles.begin(), report.unstable_real_poles.end());
    if (pz.zero_at_infinity) report.unstable_real_zeros.push_back(std::numeric_limits<double>::infinity());

    const auto& rz = report.unstable_real_zeros;
    for (std::size_t i = 0; i + 1 < rz.size(); ++i) {
        IntervalPoleCount c{rz[i], rz[i + 1], 0};
        for (double p : report.unstable_real_poles)
            if (p > c.lower && p < c.upper) ++c.count;
        report.interval_pole_counts.push_back(c);
    }
    report.holds = std::all_of(report.interval_pole_counts.begin(), report.interval_pole_counts.end(),
                               [](const IntervalPoleCount& c) { return c.count % 2 == 0; });
    return report;
}

enum class StrongStabilizability { NecessaryConditionHolds, Fails, NotApplicableMimo };

inline const char* to_string(StrongStabilizability s) noexcept {
    switch (s) {
        case StrongStabilizability::NecessaryConditionHolds: return "necessary-condition-holds";
        case StrongStabilizability::Fails: return "fails";
        case StrongStabilizability::NotApplicableMimo: return "not-applicable-mimo";
    }
    return "?";
}

inline StrongStabilizability strong_stabilizability_gate(const TransferFunctionSiso& tf) {
    return pip_check(tf).holds ? StrongStabilizability::NecessaryConditionHolds : StrongStabilizability::Fails;
}

inline StrongStabilizability strong_stabilizability_gate(const StateSpaceSystem& sys) {
    if (!sys.is_siso()) return StrongStabilizability::NotApplicableMimo;
    return strong_stabilizability_gate(ss_to_tf(sys));
}

}  // namespace firctl
