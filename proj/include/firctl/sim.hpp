#pragma once

// Closed-loop rollouts of the plant under the FIR law and under the
// equivalent dynamic controller.

#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "firctl/matlib.hpp"
#include "firctl/sysmodel.hpp"

namespace firctl {

struct Trajectory {
    std::vector<Vector> states;   // x(0) ... x(K)
    std::vector<Vector> inputs;   // u(0) ... u(K-1)
    std::vector<Vector> outputs;  // y(0) ... y(K-1)
    /// Step at which the state norm blew past the guard; the trajectory stops there.
    std::optional<std::size_t> diverged_at;

    bool diverged() const noexcept { return diverged_at.has_value(); }
};

inline constexpr double kDivergenceGuard = 1e12;

namespace detail {

inline void add_into(Vector& acc, const Vector& v) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
}

inline void check_initial(const StateSpaceSystem& sys, std::span<const double> x0, std::size_t steps) {
    if (x0.size() != sys.n()) throw DimensionError("initial state has wrong length");
    if (steps < 1) throw ContractError("simulation needs at least one step");
}

}  // namespace detail

/// x(k+1) = A x + B u, u(k) = sum_i F_i y(k-i), with y(-1..-l) = 0.
inline Trajectory simulate_fir(const StateSpaceSystem& sys, const FirGains& f, std::span<const double> x0,
                               std::size_t steps) {
    detail::check_initial(sys, x0, steps);
    if (f.m() != sys.m() || f.p() != sys.p()) throw DimensionError("gains do not match the plant");
    const double guard = kDivergenceGuard * norm2(x0);

    Trajectory t;
    t.states.emplace_back(x0.begin(), x0.end());
    std::deque<Vector> history(f.order(), Vector(sys.p(), 0.0));  // y(k-1), y(k-2), ...
    for (std::size_t k = 0; k < steps; ++k) {
        const Vector& x = t.states.back();
        Vector y = sys.C() * std::span<const double>(x);
        Vector u = f[0] * std::span<const double>(y);
        for (std::size_t i = 1; i <= f.order(); ++i) detail::add_into(u, f[i] * std::span<const double>(history[i - 1]));
        Vector next = sys.A() * std::span<const double>(x);
        detail::add_into(next, sys.B() * std::span<const double>(u));
        if (f.order() > 0) {
            history.pop_back();
            history.push_front(y);
        }
        t.outputs.push_back(std::move(y));
        t.inputs.push_back(std::move(u));
        const double nn = norm2(next);
        t.states.push_back(std::move(next));
        if (!(nn <= guard) && nn > 0.0) {
            t.diverged_at = k + 1;
            break;
        }
    }
    return t;
}

/// Plant in closed loop with x̂(k+1) = H x̂ + G y, u = E x̂ + D y.
inline Trajectory simulate_dynamic(const StateSpaceSystem& sys, const DynamicController& ctl,
                                   std::span<const double> x0, std::span<const double> xhat0, std::size_t steps) {
    detail::check_initial(sys, x0, steps);
    if (ctl.m() != sys.m() || ctl.p() != sys.p()) throw DimensionError("controller does not match the plant");
    if (xhat0.size() != ctl.states()) throw DimensionError("controller state has wrong length");
    const double guard = kDivergenceGuard * norm2(x0);

    Trajectory t;
    t.states.emplace_back(x0.begin(), x0.end());
    Vector xhat(xhat0.begin(), xhat0.end());
    for (std::size_t k = 0; k < steps; ++k) {
        const Vector& x = t.states.back();
        Vector y = sys.C() * std::span<const double>(x);
        Vector u = ctl.E() * std::span<const double>(xhat);
        detail::add_into(u, ctl.D() * std::span<const double>(y));
        Vector xhat_next = ctl.H() * std::span<const double>(xhat);
        detail::add_into(xhat_next, ctl.G() * std::span<const double>(y));
        Vector next = sys.A() * std::span<const double>(x);
        detail::add_into(next, sys.B() * std::span<const double>(u));
        xhat = std::move(xhat_next);
        t.outputs.push_back(std::move(y));
        t.inputs.push_back(std::move(u));
        const double nn = norm2(next);
        t.states.push_back(std::move(next));
        if (!(nn <= guard) && nn > 0.0) {
            t.diverged_at = k + 1;
            break;
        }
    }
    return t;
}

/// ||x(K)|| <= ratio ||x(0)||; a diverged trajectory never passes.
inline bool decay_check(const Trajectory& t, double ratio_threshold) {
    if (t.diverged() || t.states.empty()) return false;
    const double start = norm2(t.states.front());
    if (start == 0.0) return true;
    return norm2(t.states.back()) <= ratio_threshold * start;
}

}  // namespace firctl
