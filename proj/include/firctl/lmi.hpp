#pragma once

// Affine matrix inequality feasibility and the convex design paths built on
// it: Lyapunov certificates, state-feedback synthesis on the augmented plant,
// the decomposition K = F C, and the convexified static-output-feedback LMI
// with the substitution constraint M C = C W.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "firctl/analysis.hpp"
#include "firctl/errors.hpp"
#include "firctl/matlib.hpp"
#include "firctl/sysmodel.hpp"

namespace firctl {

/// x -> constant + sum_i x_i coefficients[i], subject to equality_lhs x = equality_rhs.
struct FeasibilityProblem {
    std::size_t decision_dim = 0;
    Matrix constant;
    std::vector<Matrix> coefficients;
    Matrix equality_lhs;  // rows x decision_dim; may have zero rows
    Vector equality_rhs;
    std::vector<std::string> variable_labels;

    std::size_t matrix_dim() const noexcept { return constant.rows(); }

    Matrix evaluate(std::span<const double> x) const {
        if (x.size() != decision_dim) throw DimensionError("decision vector has wrong length");
        Matrix m = constant;
        for (std::size_t i = 0; i < decision_dim; ++i) {
            if (x[i] == 0.0) continue;
            const auto src = coefficients[i].data();
            auto dst = m.data();
            for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += x[i] * src[k];
        }
        return m;
    }

    double equality_residual(std::span<const double> x) const {
        if (equality_lhs.rows() == 0) return 0.0;
        Vector r = equality_lhs * x;
        for (std::size_t i = 0; i < r.size(); ++i) r[i] -= equality_rhs[i];
        return norm2(r);
    }

    void validate() const {
        const std::size_t d = constant.rows();
        if (!constant.is_square()) throw ContractError("constant block must be square");
        if (coefficients.size() != decision_dim) throw ContractError("one coefficient block per decision variable required");
        if (!variable_labels.empty() && variable_labels.size() != decision_dim) {
            throw ContractError("variable_labels must name every decision variable");
        }
        auto symmetric = [](const Matrix& m) {
            const double scale = std::max(m.max_abs(), 1.0);
            for (std::size_t i = 0; i < m.rows(); ++i)
                for (std::size_t j = i + 1; j < m.cols(); ++j)
                    if (std::abs(m(i, j) - m(j, i)) > 1e-12 * scale) return false;
            return true;
        };
        if (!symmetric(constant)) throw ContractError("constant block is not symmetric");
        for (std::size_t i = 0; i < decision_dim; ++i) {
            const Matrix& c = coefficients[i];
            if (c.rows() != d || c.cols() != d) throw ContractError("coefficient block " + std::to_string(i) + " has wrong shape");
            if (!symmetric(c)) throw ContractError("coefficient block " + std::to_string(i) + " is not symmetric");
        }
        if (equality_lhs.rows() != equality_rhs.size()) throw ContractError("equality rows and right-hand sides differ");
        if (equality_lhs.rows() > 0 && equality_lhs.cols() != decision_dim) {
            throw ContractError("equality constraints have wrong column count");
        }
    }
};

enum class FeasibilityStatus { Feasible, NumericallyInfeasible };

inline const char* to_string(FeasibilityStatus s) noexcept {
    return s == FeasibilityStatus::Feasible ? "feasible" : "numerically-infeasible";
}

struct FeasibilityResult {
    FeasibilityStatus status = FeasibilityStatus::NumericallyInfeasible;
    Vector variables;                 // meaningful when feasible; best point otherwise
    double achieved_margin = -std::numeric_limits<double>::infinity();  // λ_min of the map at `variables`
    double margin_upper_bound = std::numeric_limits<double>::infinity();  // barrier duality-gap estimate
    double equality_residual = 0.0;
    std::size_t iterations = 0;
    std::size_t restarts = 0;
};

struct FeasibilityOptions {
    /// Required strictness; a negative value selects 1e-6 (1 + ||constant||).
    double eps_feas = -1.0;
    /// Total Newton steps across restarts.
    std::size_t budget = 5000;
    std::size_t restarts = 5;
    std::uint64_t seed = 0;
    double eq_tol = 1e-8;
};

namespace detail {

struct ReducedProblem {
    Vector x0;        // particular solution of the equalities
    Matrix basis;     // decision_dim x q null-space basis
    Matrix g0;        // map at x0
    std::vector<Matrix> g;  // map directions along the basis
    bool consistent = true;
};

inline ReducedProblem eliminate_equalities(const FeasibilityProblem& p, double eq_tol) {
    ReducedProblem r;
    const std::size_t k = p.decision_dim;
    if (p.equality_lhs.rows() == 0) {
        r.x0.assign(k, 0.0);
        r.basis = Matrix::identity(k);
    } else {
        const Matrix& e = p.equality_lhs;
        const Matrix rhs_row(1, e.rows(), p.equality_rhs);
        // x0^T = rhs^T (E E^T)^+ E is the minimum-norm solution.
        const Matrix x0_row = solve_right_least_squares(rhs_row, e.transpose());
        r.x0.assign(x0_row.data().begin(), x0_row.data().end());
        const double scale = 1.0 + norm2(p.equality_rhs);
        if (p.equality_residual(r.x0) > eq_tol * scale) r.consistent = false;

        const auto eig = sym_eig(e.transpose() * e);
        const double top = std::max(eig.values.back(), 0.0);
        std::vector<std::size_t> null_cols;
        for (std::size_t i = 0; i < k; ++i)
            if (eig.values[i] <= 1e-12 * top) null_cols.push_back(i);
        r.basis = Matrix(k, null_cols.size());
        for (std::size_t j = 0; j < null_cols.size(); ++j)
            for (std::size_t i = 0; i < k; ++i) r.basis(i, j) = eig.vectors(i, null_cols[j]);
    }
    r.g0 = p.evaluate(r.x0);
    const std::size_t d = p.matrix_dim();
    r.g.assign(r.basis.cols(), Matrix(d, d));
    for (std::size_t j = 0; j < r.basis.cols(); ++j) {
        auto dst = r.g[j].data();
        for (std::size_t i = 0; i < k; ++i) {
            const double w = r.basis(i, j);
            if (w == 0.0) continue;
            const auto src = p.coefficients[i].data();
            for (std::size_t e = 0; e < dst.size(); ++e) dst[e] += w * src[e];
        }
    }
    return r;
}

// Barrier path-following for max t s.t. G(y) - t I > 0.
class MarginMaximizer {
public:
    MarginMaximizer(const ReducedProblem& rp, double eps_feas) : rp_(rp), eps_(eps_feas), d_(rp.g0.rows()) {}

    struct Outcome {
        Vector y;
        double t = -std::numeric_limits<double>::infinity();
        double upper = std::numeric_limits<double>::infinity();
        std::size_t steps = 0;
        bool decided = false;
    };

    Outcome run(Vector y, std::size_t budget) const {
        Outcome out;
        const std::size_t q = y.size();
        double t = sym_eig_extremes(map(y)).first - 1.0;
        double s = 1.0;
        const double unbounded_level = 1e6 * (1.0 + rp_.g0.frobenius_norm());

        while (out.steps < budget) {
            // centering at barrier weight s
            for (int inner = 0; inner < 200 && out.steps < budget; ++inner) {
                const auto eval = evaluate(y, t, s);
                if (!eval) break;
                ++out.steps;
                Vector step = newton_direction(*eval);
                double slope = 0.0;
                for (std::size_t j = 0; j <= q; ++j) slope += eval->grad[j] * step[j];
                if (-slope / 2.0 <= 1e-10) break;
                double alpha = 1.0;
                bool moved = false;
                while (alpha > 1e-14) {
                    Vector y2 = y;
                    for (std::size_t j = 0; j < q; ++j) y2[j] += alpha * step[j];
                    const double t2 = t + alpha * step[q];
                    const auto phi2 = barrier_value(y2, t2, s);
                    if (phi2 && *phi2 <= eval->phi + 0.25 * alpha * slope) {
                        y = std::move(y2);
                        t = t2;
                        moved = true;
                        break;
                    }
                    alpha *= 0.5;
                }
                if (!moved) break;
                if (t > unbounded_level) {
                    out.y = y;
                    out.t = t;
                    out.decided = true;
                    return out;
                }
            }
            const double gap = static_cast<double>(d_) / s;
            out.y = y;
            out.t = t;
            out.upper = t + 1.1 * gap;
            if (out.upper < eps_) {
                out.decided = true;
                return out;
            }
            if (t >= eps_ && gap <= 1e-3 * t) {
                out.decided = true;
                return out;
            }
            if (s > 1e13) {
                out.decided = t >= eps_;
                return out;
            }
            s *= 10.0;
        }
        return out;
    }

private:
    struct Eval {
        double phi;
        Vector grad;  // q + 1, t last
        Matrix hess;
    };

    Matrix map(const Vector& y) const {
        Matrix m = rp_.g0;
        auto dst = m.data();
        for (std::size_t j = 0; j < y.size(); ++j) {
            if (y[j] == 0.0) continue;
            const auto src = rp_.g[j].data();
            for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += y[j] * src[k];
        }
        return m;
    }

    Matrix slack(const Vector& y, double t) const {
        Matrix m = map(y);
        for (std::size_t i = 0; i < d_; ++i) m(i, i) -= t;
        return symmetric_part(m);
    }

    std::optional<double> barrier_value(const Vector& y, double t, double s) const {
        const auto l = cholesky(slack(y, t));
        if (!l) return std::nullopt;
        double logdet = 0.0;
        for (std::size_t i = 0; i < d_; ++i) logdet += 2.0 * std::log((*l)(i, i));
        return -s * t - logdet;
    }

    std::optional<Eval> evaluate(const Vector& y, double t, double s) const {
        const std::size_t q = y.size();
        const auto l = cholesky(slack(y, t));
        if (!l) return std::nullopt;
        const Matrix sinv = cholesky_inverse(*l);
        double logdet = 0.0;
        for (std::size_t i = 0; i < d_; ++i) logdet += 2.0 * std::log((*l)(i, i));

        std::vector<Matrix> u(q);
        for (std::size_t j = 0; j < q; ++j) u[j] = sinv * rp_.g[j];

        Eval e{-s * t - logdet, Vector(q + 1, 0.0), Matrix(q + 1, q + 1)};
        auto trace_product = [this](const Matrix& a, const Matrix& b) {
            double acc = 0.0;
            for (std::size_t i = 0; i < d_; ++i)
                for (std::size_t k = 0; k < d_; ++k) acc += a(i, k) * b(k, i);
            return acc;
        };
        for (std::size_t j = 0; j < q; ++j) {
            e.grad[j] = -u[j].trace();
            for (std::size_t k = 0; k <= j; ++k) {
                const double h = trace_product(u[j], u[k]);
                e.hess(j, k) = h;
                e.hess(k, j) = h;
            }
            const double ht = -trace_product(u[j], sinv);
            e.hess(j, q) = ht;
            e.hess(q, j) = ht;
        }
        e.grad[q] = -s + sinv.trace();
        e.hess(q, q) = trace_product(sinv, sinv);
        return e;
    }

    static Vector newton_direction(const Eval& e) {
        const std::size_t n = e.grad.size();
        double diag = 0.0;
        for (std::size_t i = 0; i < n; ++i) diag = std::max(diag, e.hess(i, i));
        double ridge = 1e-12 * std::max(diag, 1e-300);
        Matrix rhs(n, 1);
        for (std::size_t i = 0; i < n; ++i) rhs(i, 0) = -e.grad[i];
        for (int attempt = 0; attempt < 12; ++attempt) {
            Matrix h = e.hess;
            for (std::size_t i = 0; i < n; ++i) h(i, i) += ridge;
            if (const auto l = cholesky(h)) {
                const Matrix step = cholesky_inverse(*l) * rhs;
                return Vector(step.data().begin(), step.data().end());
            }
            ridge *= 100.0;
        }
        // fall back to steepest descent
        Vector g(n);
        for (std::size_t i = 0; i < n; ++i) g[i] = -e.grad[i];
        return g;
    }

    const ReducedProblem& rp_;
    double eps_;
    std::size_t d_;
};

}  // namespace detail

inline double default_eps_feas(const FeasibilityProblem& p) { return 1e-6 * (1.0 + p.constant.frobenius_norm()); }

/// Searches for x with λ_min(map(x)) >= eps_feas and the equalities met. A
/// Feasible verdict is always re-checked on the original map; an infeasible
/// verdict is a numerical judgement, not a proof.
inline FeasibilityResult solve_feasibility(const FeasibilityProblem& p, const FeasibilityOptions& opt = {}) {
    p.validate();
    const double eps = opt.eps_feas >= 0.0 ? opt.eps_feas : default_eps_feas(p);
    const double eq_scale = 1.0 + norm2(p.equality_rhs);
    FeasibilityResult best;
    best.variables.assign(p.decision_dim, 0.0);

    const detail::ReducedProblem rp = detail::eliminate_equalities(p, opt.eq_tol);
    if (!rp.consistent) {
        best.equality_residual = p.equality_residual(rp.x0);
        return best;
    }
    if (p.matrix_dim() == 0) throw ContractError("empty matrix map");

    const detail::MarginMaximizer engine(rp, eps);
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::size_t used = 0;

    const std::size_t restarts = std::max<std::size_t>(opt.restarts, 1);
    for (std::size_t r = 0; r < restarts && used < opt.budget; ++r) {
        Vector y0(rp.basis.cols(), 0.0);
        if (r > 0)
            for (double& v : y0) v = gauss(rng);
        const auto out = engine.run(std::move(y0), opt.budget - used);
        used += out.steps;

        Vector x = rp.x0;
        for (std::size_t j = 0; j < rp.basis.cols(); ++j)
            for (std::size_t i = 0; i < p.decision_dim; ++i) x[i] += rp.basis(i, j) * out.y[j];
        const double margin = sym_eig_extremes(p.evaluate(x), 1e-8).first;
        const double residual = p.equality_residual(x);
        best.restarts = r + 1;
        if (margin > best.achieved_margin) {
            best.variables = std::move(x);
            best.achieved_margin = margin;
            best.equality_residual = residual;
        }
        best.margin_upper_bound = std::min(best.margin_upper_bound, out.upper);
        if (best.achieved_margin >= eps && best.equality_residual <= opt.eq_tol * eq_scale) {
            best.status = FeasibilityStatus::Feasible;
        }
        if (out.decided) break;
    }
    best.iterations = used;
    return best;
}

// ----------------------------------------------------------------------------
// Lyapunov certificate
// ----------------------------------------------------------------------------

/// Solves Φ^T P Φ - P = -I. Returns P when it is positive definite, which
/// certifies that Φ is Schur stable.
inline std::optional<Matrix> lyapunov_verify(const Matrix& phi) {
    if (!phi.is_square()) throw DimensionError("Lyapunov test needs a square matrix");
    const std::size_t n = phi.rows();
    const Matrix pt = phi.transpose();
    // Row-major vec: vec(Φ^T P Φ) = (Φ^T ⊗ Φ^T) vec(P).
    Matrix op = kron(pt, pt) - Matrix::identity(n * n);
    Matrix rhs(n * n, 1);
    for (std::size_t i = 0; i < n; ++i) rhs(i * n + i, 0) = -1.0;
    const Matrix vec_p = solve_linear(op, rhs);
    Matrix p = symmetric_part(Matrix(n, n, Vector(vec_p.data().begin(), vec_p.data().end())));
    if (!cholesky(p)) return std::nullopt;
    if (sym_eig_extremes(p).first <= 0.0) return std::nullopt;
    return p;
}

/// Largest eigenvalue of Φ^T P Φ - P; negative means P certifies Φ.
inline double lyapunov_decrease(const Matrix& phi, const Matrix& p) {
    return sym_eig_extremes(symmetric_part(phi.transpose() * p * phi - p), 1e-6).second;
}

// ----------------------------------------------------------------------------
// Structured LMI assembly
// ----------------------------------------------------------------------------

namespace detail {

// Decision-vector layout for a list of matrix variables.
class VariableLayout {
public:
    enum class Kind { Symmetric, General };

    std::size_t add(std::string name, std::size_t rows, std::size_t cols, Kind kind) {
        blocks_.push_back({std::move(name), rows, cols, kind, size_});
        size_ += kind == Kind::Symmetric ? rows * (rows + 1) / 2 : rows * cols;
        return blocks_.size() - 1;
    }

    std::size_t size() const noexcept { return size_; }

    Matrix extract(std::size_t block, std::span<const double> x) const {
        const auto& b = blocks_[block];
        Matrix m(b.rows, b.cols);
        std::size_t k = b.offset;
        if (b.kind == Kind::Symmetric) {
            for (std::size_t i = 0; i < b.rows; ++i)
                for (std::size_t j = i; j < b.rows; ++j) {
                    m(i, j) = x[k];
                    m(j, i) = x[k];
                    ++k;
                }
        } else {
            for (std::size_t i = 0; i < b.rows; ++i)
                for (std::size_t j = 0; j < b.cols; ++j) m(i, j) = x[k++];
        }
        return m;
    }

    std::vector<std::string> labels() const {
        std::vector<std::string> out;
        out.reserve(size_);
        for (const auto& b : blocks_) {
            for (std::size_t i = 0; i < b.rows; ++i)
                for (std::size_t j = b.kind == Kind::Symmetric ? i : 0; j < b.cols; ++j)
                    out.push_back(b.name + "[" + std::to_string(i) + "," + std::to_string(j) + "]");
        }
        return out;
    }

private:
    struct Block {
        std::string name;
        std::size_t rows, cols;
        Kind kind;
        std::size_t offset;
    };
    std::vector<Block> blocks_;
    std::size_t size_ = 0;
};

// Builds a problem from linear (homogeneous) assembly functions by probing
// them with unit vectors.
inline FeasibilityProblem linearize(const VariableLayout& layout,
                                    const std::function<Matrix(std::span<const double>)>& lmi,
                                    const std::function<Vector(std::span<const double>)>& equalities,
                                    const Vector& equality_rhs) {
    FeasibilityProblem p;
    p.decision_dim = layout.size();
    Vector x(p.decision_dim, 0.0);
    p.constant = lmi(x);
    const Vector eq0 = equalities(x);
    p.equality_lhs = Matrix(eq0.size(), p.decision_dim);
    p.coefficients.reserve(p.decision_dim);
    for (std::size_t i = 0; i < p.decision_dim; ++i) {
        x[i] = 1.0;
        p.coefficients.push_back(lmi(x) - p.constant);
        const Vector e = equalities(x);
        for (std::size_t r = 0; r < e.size(); ++r) p.equality_lhs(r, i) = e[r] - eq0[r];
        x[i] = 0.0;
    }
    p.equality_rhs = equality_rhs;
    for (std::size_t r = 0; r < eq0.size(); ++r) p.equality_rhs[r] -= eq0[r];
    p.variable_labels = layout.labels();
    return p;
}

inline Matrix lyapunov_block(const Matrix& w, const Matrix& off) {
    const std::size_t n = w.rows();
    Matrix m(2 * n, 2 * n);
    m.set_block(0, 0, w);
    m.set_block(0, n, off);
    m.set_block(n, 0, off.transpose());
    m.set_block(n, n, w);
    return m;
}

}  // namespace detail

/// [[W, A W + B L], [*, W]] > 0 with trace(W) fixed to its dimension.
struct StateFeedbackLmi {
    FeasibilityProblem problem;
    detail::VariableLayout layout;
    std::size_t w_block = 0, l_block = 0;
};

inline StateFeedbackLmi build_state_feedback_lmi(const AugmentedPlant& aug) {
    StateFeedbackLmi s;
    const std::size_t dim = aug.A.rows();
    s.w_block = s.layout.add("W", dim, dim, detail::VariableLayout::Kind::Symmetric);
    s.l_block = s.layout.add("L", aug.m, dim, detail::VariableLayout::Kind::General);
    const auto& layout = s.layout;
    const std::size_t wb = s.w_block, lb = s.l_block;
    auto lmi = [&](std::span<const double> x) {
        const Matrix w = layout.extract(wb, x);
        const Matrix l = layout.extract(lb, x);
        return detail::lyapunov_block(w, aug.A * w + aug.B * l);
    };
    auto eq = [&](std::span<const double> x) { return Vector{layout.extract(wb, x).trace()}; };
    s.problem = detail::linearize(layout, lmi, eq, Vector{static_cast<double>(dim)});
    return s;
}

/// [[W, A W + B N C], [*, W]] > 0, M C = C W, trace(W) fixed.
struct SofLmi {
    FeasibilityProblem problem;
    detail::VariableLayout layout;
    std::size_t w_block = 0, n_block = 0, m_block = 0;
};

inline SofLmi build_sof_lmi(const AugmentedPlant& aug) {
    SofLmi s;
    const std::size_t dim = aug.A.rows();
    const std::size_t q = aug.C.rows();
    s.w_block = s.layout.add("W", dim, dim, detail::VariableLayout::Kind::Symmetric);
    s.n_block = s.layout.add("N", aug.m, q, detail::VariableLayout::Kind::General);
    s.m_block = s.layout.add("M", q, q, detail::VariableLayout::Kind::General);
    const auto& layout = s.layout;
    const std::size_t wb = s.w_block, nb = s.n_block, mb = s.m_block;
    auto lmi = [&](std::span<const double> x) {
        const Matrix w = layout.extract(wb, x);
        const Matrix nv = layout.extract(nb, x);
        return detail::lyapunov_block(w, aug.A * w + aug.B * nv * aug.C);
    };
    auto eq = [&](std::span<const double> x) {
        const Matrix w = layout.extract(wb, x);
        const Matrix mv = layout.extract(mb, x);
        const Matrix diff = mv * aug.C - aug.C * w;
        Vector out(diff.data().begin(), diff.data().end());
        out.push_back(w.trace());
        return out;
    };
    Vector rhs(q * dim, 0.0);
    rhs.push_back(static_cast<double>(dim));
    s.problem = detail::linearize(layout, lmi, eq, rhs);
    return s;
}

struct StateFeedbackDesign {
    Matrix K;  // u = K x̃
    Matrix P;  // Lyapunov matrix W^{-1}
    double rho = 0.0;
    FeasibilityResult solve;
};

/// State feedback for the augmented plant via K = L W^{-1}. Throws
/// ConvergenceError when the solver cannot certify a point.
inline StateFeedbackDesign state_feedback_design(const AugmentedPlant& aug, const FeasibilityOptions& opt = {}) {
    const StateFeedbackLmi lmi = build_state_feedback_lmi(aug);
    FeasibilityResult res = solve_feasibility(lmi.problem, opt);
    if (res.status != FeasibilityStatus::Feasible) {
        throw ConvergenceError("state-feedback LMI not certified feasible", res.achieved_margin);
    }
    const Matrix w = lmi.layout.extract(lmi.w_block, res.variables);
    const Matrix l = lmi.layout.extract(lmi.l_block, res.variables);
    const Matrix p = inverse(w);
    const Matrix k = l * p;
    const Matrix closed = aug.A + aug.B * k;
    StateFeedbackDesign out{k, p, spectral_radius(closed), std::move(res)};
    if (!(out.rho < 1.0) || !(lyapunov_decrease(closed, p) < 0.0)) {
        throw ConvergenceError("state-feedback reconstruction failed verification", out.rho);
    }
    return out;
}

/// F with F C = K when K lies (to tol) in the row space of C.
inline std::optional<Matrix> try_decompose(const Matrix& k, const Matrix& c, double tol = 1e-9) {
    if (k.cols() != c.cols()) throw DimensionError("K and C must have equally many columns");
    const Matrix f = solve_right_least_squares(k, c);
    const double residual = (f * c - k).frobenius_norm();
    if (residual > tol * std::max(k.frobenius_norm(), 1e-300)) return std::nullopt;
    return f;
}

struct SofDesign {
    FirGains gains;
    Matrix P;  // W^{-1}
    double rho = 0.0;
    FeasibilityResult solve;
};

/// Convexified static-output-feedback design on the augmented plant. Empty
/// when the LMI is judged infeasible.
inline std::optional<SofDesign> sof_convex_design(const StateSpaceSystem& sys, std::size_t order,
                                                  const FeasibilityOptions& opt = {}) {
    const AugmentedPlant aug = augment(sys, order);
    const SofLmi lmi = build_sof_lmi(aug);
    FeasibilityResult res = solve_feasibility(lmi.problem, opt);
    if (res.status != FeasibilityStatus::Feasible) return std::nullopt;

    const Matrix w = lmi.layout.extract(lmi.w_block, res.variables);
    const Matrix nv = lmi.layout.extract(lmi.n_block, res.variables);
    const Matrix mv = lmi.layout.extract(lmi.m_block, res.variables);
    const Vector sv = singular_values(mv);
    if (sv.empty() || sv.back() < 1e-8 * sv.front()) {
        throw DegenerateSolutionError("feasible LMI point has singular M (sigma_min " +
                                      std::to_string(sv.empty() ? 0.0 : sv.back()) + ")");
    }
    const Matrix f = nv * inverse(mv);
    FirGains gains = unstack_gains(f, sys.p());
    const Matrix phi = closed_loop(sys, gains);
    const Matrix p = inverse(w);
    SofDesign out{std::move(gains), p, spectral_radius(phi), std::move(res)};
    if (!(out.rho < 1.0) || !(lyapunov_decrease(phi, p) < 0.0)) {
        throw DegenerateSolutionError("reconstructed output feedback failed closed-loop verification");
    }
    return out;
}

}  // namespace firctl
