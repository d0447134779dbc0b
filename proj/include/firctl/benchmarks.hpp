#pragma once

// The four benchmark plants and the outcomes they are expected to show.
// Matrices are stored exactly as printed (two decimals for the batch reactor).

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "firctl/analysis.hpp"
#include "firctl/sysmodel.hpp"

namespace firctl {

struct BenchmarkExpectation {
    StrongStabilizability strong_stabilizability;
    bool convex_feasible_at_zero;
    /// Smallest order with a stabilizing FIR controller; nullopt when none exists.
    std::optional<std::size_t> min_stabilizing_order;
};

struct BenchmarkEntry {
    std::string id;
    std::string description;
    std::variant<StateSpaceSystem, TransferFunctionSiso> model;
    BenchmarkExpectation expected;

    StateSpaceSystem plant() const {
        if (const auto* tf = std::get_if<TransferFunctionSiso>(&model)) return tf_to_ss(*tf);
        return std::get<StateSpaceSystem>(model);
    }
};

/// (z - 2) / ((z - 3)(z - 4)): has the parity interlacing property.
inline TransferFunctionSiso benchmark_g1() { return {Polynomial{1.0, -2.0}, Polynomial{1.0, -7.0, 12.0}}; }

/// (z - 2) / (z (z - 3)): violates it, so no stable controller exists.
inline TransferFunctionSiso benchmark_g2() { return {Polynomial{1.0, -2.0}, Polynomial{1.0, -3.0, 0.0}}; }

/// Linearized batch reactor sampled at 0.1.
inline StateSpaceSystem benchmark_batch_reactor() {
    return {Matrix{{1.18, 0.00, 0.51, -0.40},
                   {-0.05, 0.66, -0.01, 0.06},
                   {0.08, 0.34, 0.56, 0.38},
                   {0.00, 0.34, 0.09, 0.85}},
            Matrix{{0.00}, {0.47}, {0.21}, {0.21}},
            Matrix{{0, 1, 0, 0}, {1, 0, 1, -1}}};
}

inline StateSpaceSystem benchmark_two_input() {
    return {Matrix{{1, -0.3, 0.6}, {0, 0, 1}, {0.29, -0.8, 1}}, Matrix{{1, 0}, {0, 1}, {1, 0}}, Matrix{{1, 1, 0}}};
}

inline std::array<BenchmarkEntry, 4> benchmark_registry() {
    using S = StrongStabilizability;
    return {{
        {"system1", "G1(z) = (z-2)/((z-3)(z-4))", benchmark_g1(), {S::NecessaryConditionHolds, false, 0}},
        {"system2", "G2(z) = (z-2)/(z(z-3))", benchmark_g2(), {S::Fails, false, std::nullopt}},
        {"system3", "linearized batch reactor, sampling period 0.1", benchmark_batch_reactor(),
         {S::NotApplicableMimo, false, 1}},
        {"system4", "two-input FIR design example", benchmark_two_input(), {S::NotApplicableMimo, true, 0}},
    }};
}

inline std::optional<BenchmarkEntry> find_benchmark(std::string_view id) {
    for (auto& e : benchmark_registry())
        if (e.id == id) return e;
    return std::nullopt;
}

}  // namespace firctl
