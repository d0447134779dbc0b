#pragma once

// Non-convex FIR synthesis: minimize the closed-loop spectral radius over the
// stacked gains with multi-start local search, warm-started from the padded
// optimum of the previous order. Also the rectangular-window FIR
// approximation of a stable dynamic controller.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "firctl/analysis.hpp"
#include "firctl/lmi.hpp"
#include "firctl/matlib.hpp"
#include "firctl/sim.hpp"
#include "firctl/sysmodel.hpp"

namespace firctl {

enum class SearchMethod { DirectSearch, Evolutionary };

inline const char* to_string(SearchMethod m) noexcept {
    return m == SearchMethod::DirectSearch ? "direct" : "evolutionary";
}

struct OptimizerConfig {
    std::size_t runs_per_order = 10;
    /// 0 selects 20000 times the number of free gain entries.
    std::size_t max_evals_per_run = 0;
    double init_scale = 1.0;
    std::uint64_t seed = 1;
    double stability_margin = 0.0;
    SearchMethod method = SearchMethod::DirectSearch;
    /// 0 selects default_worker_count().
    std::size_t workers = 0;
};

struct DesignOutcome {
    std::size_t order = 0;
    FirGains best_gains;
    double best_rho = std::numeric_limits<double>::infinity();
    std::vector<double> per_run_rhos;
    double median_rho = 0.0;
    double worst_rho = 0.0;
    std::size_t evals_used = 0;

    bool stabilizing(double margin = 0.0) const noexcept { return best_rho < 1.0 - margin; }
};

inline constexpr double kMonotonicityTolerance = 1e-9;
inline constexpr const char* kWorkerEnvVar = "FIRCTL_WORKERS";

/// Worker count from FIRCTL_WORKERS, else the number of hardware threads.
inline std::size_t default_worker_count() {
    if (const char* env = std::getenv(kWorkerEnvVar)) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    }
    return std::max(1U, std::thread::hardware_concurrency());
}

/// ρ(Φ_l) for gains flattened F_0 first, each gain row-major.
inline double objective(const StateSpaceSystem& sys, std::size_t order, std::span<const double> gains) {
    return spectral_radius(closed_loop(sys, FirGains::unflatten(gains, order, sys.m(), sys.p())));
}

inline double median(std::vector<double> v) {
    if (v.empty()) throw ContractError("median of an empty list");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

namespace detail {

using Objective = std::function<double(std::span<const double>)>;

struct LocalResult {
    Vector x;
    double value = std::numeric_limits<double>::infinity();
    std::size_t evals = 0;
};

inline Matrix random_orthonormal(std::size_t k, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix q(k, k);
    for (std::size_t j = 0; j < k; ++j) {
        for (;;) {
            Vector v(k);
            for (double& e : v) e = gauss(rng);
            for (std::size_t c = 0; c < j; ++c) {
                double dot = 0.0;
                for (std::size_t i = 0; i < k; ++i) dot += v[i] * q(i, c);
                for (std::size_t i = 0; i < k; ++i) v[i] -= dot * q(i, c);
            }
            const double nv = norm2(v);
            if (nv < 1e-8) continue;
            for (std::size_t i = 0; i < k; ++i) q(i, j) = v[i] / nv;
            break;
        }
    }
    return q;
}

// Compass search with expansion on success and contraction on failure. After
// every failed poll the frame is rotated at random, which keeps the search
// from parking on a kink of the nonsmooth objective.
inline LocalResult pattern_search(const Objective& f, Vector x, double step, std::size_t max_evals,
                                  std::mt19937_64& rng) {
    constexpr double step_tol = 1e-10;
    const std::size_t k = x.size();
    LocalResult r{x, f(x), 1};
    Matrix frame = Matrix::identity(k);
    std::size_t lead = 0;  // direction index that last succeeded, polled first
    const double max_step = std::max(step, 1.0) * 1e3;

    while (r.evals < max_evals && step > step_tol) {
        bool improved = false;
        for (std::size_t probe = 0; probe < 2 * k && r.evals < max_evals; ++probe) {
            const std::size_t dir = (lead + probe) % (2 * k);
            const std::size_t col = dir / 2;
            const double sign = dir % 2 == 0 ? 1.0 : -1.0;
            Vector trial = r.x;
            for (std::size_t i = 0; i < k; ++i) trial[i] += sign * step * frame(i, col);
            const double v = f(trial);
            ++r.evals;
            if (v < r.value) {
                r.x = std::move(trial);
                r.value = v;
                lead = dir;
                improved = true;
                break;
            }
        }
        if (improved) {
            step = std::min(2.0 * step, max_step);
        } else {
            step *= 0.5;
            frame = random_orthonormal(k, rng);
            lead = 0;
        }
    }
    return r;
}

// (mu + lambda) evolution strategy with one self-adaptive step size per individual.
inline LocalResult evolution_strategy(const Objective& f, const Vector& x0, double sigma0, std::size_t max_evals,
                                      std::mt19937_64& rng) {
    constexpr std::size_t mu = 5;
    constexpr std::size_t lambda = 10;
    const std::size_t k = x0.size();
    const double tau = 1.0 / std::sqrt(2.0 * static_cast<double>(k));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, mu - 1);

    struct Individual {
        Vector x;
        double sigma;
        double value;
    };
    std::vector<Individual> parents;
    std::size_t evals = 0;
    parents.push_back({x0, sigma0, f(x0)});
    ++evals;
    while (parents.size() < mu && evals < max_evals) {
        Vector x = x0;
        for (double& e : x) e += sigma0 * gauss(rng);
        parents.push_back({x, sigma0, f(x)});
        ++evals;
    }
    auto by_value = [](const Individual& a, const Individual& b) { return a.value < b.value; };

    while (evals < max_evals) {
        std::vector<Individual> pool = parents;
        for (std::size_t o = 0; o < lambda && evals < max_evals; ++o) {
            const Individual& parent = parents[pick(rng) % parents.size()];
            const double sigma = parent.sigma * std::exp(tau * gauss(rng));
            Vector x = parent.x;
            for (double& e : x) e += sigma * gauss(rng);
            pool.push_back({std::move(x), sigma, 0.0});
            pool.back().value = f(pool.back().x);
            ++evals;
        }
        std::stable_sort(pool.begin(), pool.end(), by_value);
        pool.resize(std::min(mu, pool.size()));
        parents = std::move(pool);
        double largest_sigma = 0.0;
        for (const auto& p : parents) largest_sigma = std::max(largest_sigma, p.sigma);
        if (largest_sigma < 1e-10) break;
    }
    const auto best = std::min_element(parents.begin(), parents.end(), by_value);
    return {best->x, best->value, evals};
}

inline std::mt19937_64 run_stream(std::uint64_t seed, std::size_t order, std::size_t run) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32U),
                      static_cast<std::uint32_t>(order), static_cast<std::uint32_t>(run)};
    return std::mt19937_64(seq);
}

template <typename Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) fn(i);
        });
    }
}

}  // namespace detail

/// Multi-start spectral-radius minimization at one FIR order. With a warm
/// start of order l-1, run 0 starts exactly at the padded warm start, so the
/// result is never worse than it.
inline DesignOutcome optimize_order(const StateSpaceSystem& sys, std::size_t order, const OptimizerConfig& cfg,
                                    const std::optional<FirGains>& warm = std::nullopt,
                                    std::size_t perturbed_runs = std::numeric_limits<std::size_t>::max()) {
    if (cfg.runs_per_order < 1) throw ContractError("runs_per_order must be >= 1");
    if (warm && (warm->order() + 1 != order || warm->m() != sys.m() || warm->p() != sys.p())) {
        throw DimensionError("warm start must have order l-1 and the plant's m x p shape");
    }
    const std::size_t k = sys.m() * sys.p() * (order + 1);
    const std::size_t budget = cfg.max_evals_per_run > 0 ? cfg.max_evals_per_run : 20000 * k;
    const Vector warm_x = warm ? warm->padded().flatten() : Vector{};
    if (warm && perturbed_runs == std::numeric_limits<std::size_t>::max()) perturbed_runs = (cfg.runs_per_order - 1) / 2;

    const detail::Objective f = [&sys, order](std::span<const double> x) {
        try {
            return objective(sys, order, x);
        } catch (const Error&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    std::vector<detail::LocalResult> results(cfg.runs_per_order);
    detail::parallel_for(cfg.runs_per_order, cfg.workers > 0 ? cfg.workers : default_worker_count(), [&](std::size_t run) {
        auto rng = detail::run_stream(cfg.seed, order, run);
        std::normal_distribution<double> gauss(0.0, 1.0);
        Vector x0(k);
        if (warm && run == 0) {
            x0 = warm_x;
        } else if (warm && run <= perturbed_runs) {
            for (std::size_t i = 0; i < k; ++i) x0[i] = warm_x[i] + 0.1 * cfg.init_scale * gauss(rng);
        } else {
            for (double& v : x0) v = cfg.init_scale * gauss(rng);
        }
        results[run] = cfg.method == SearchMethod::DirectSearch
                           ? detail::pattern_search(f, std::move(x0), 0.5 * cfg.init_scale, budget, rng)
                           : detail::evolution_strategy(f, x0, 0.5 * cfg.init_scale, budget, rng);
    });

    DesignOutcome out;
    out.order = order;
    std::size_t best_run = 0;
    for (std::size_t run = 0; run < results.size(); ++run) {
        out.per_run_rhos.push_back(results[run].value);
        out.evals_used += results[run].evals;
        if (results[run].value < results[best_run].value) best_run = run;
    }
    out.best_gains = FirGains::unflatten(results[best_run].x, order, sys.m(), sys.p());
    out.best_rho = objective(sys, order, results[best_run].x);
    out.median_rho = median(out.per_run_rhos);
    out.worst_rho = *std::max_element(out.per_run_rhos.begin(), out.per_run_rhos.end());
    return out;
}

/// Orders 0..max_order in sequence. A stabilizing optimum seeds the next
/// order (padded start plus perturbations); otherwise only the padded
/// optimum is carried over as run 0 so that best_rho never increases.
inline std::vector<DesignOutcome> order_sweep(const StateSpaceSystem& sys, std::size_t max_order,
                                              const OptimizerConfig& cfg) {
    std::vector<DesignOutcome> out;
    for (std::size_t l = 0; l <= max_order; ++l) {
        if (out.empty()) {
            out.push_back(optimize_order(sys, l, cfg));
            continue;
        }
        const DesignOutcome& prev = out.back();
        const std::size_t perturbed = prev.stabilizing() ? std::numeric_limits<std::size_t>::max() : 0;
        out.push_back(optimize_order(sys, l, cfg, prev.best_gains, perturbed));
        if (out.back().best_rho > prev.best_rho + kMonotonicityTolerance) {
            throw ContractError("order sweep lost ground at order " + std::to_string(l));
        }
    }
    return out;
}

// ----------------------------------------------------------------------------
// Certification of a claimed stabilizing design
// ----------------------------------------------------------------------------

struct StabilityCertificate {
    double rho = 0.0;
    bool lyapunov = false;
    bool decay = false;
    double worst_decay_ratio = 0.0;

    bool ok() const noexcept { return rho < 1.0 && lyapunov && decay; }
};

/// Lyapunov certificate on Φ_l plus simulated decay below `ratio` after
/// `steps` steps from `trials` random initial states.
inline StabilityCertificate certify(const StateSpaceSystem& sys, const FirGains& gains, std::uint64_t seed = 7,
                                    std::size_t trials = 10, std::size_t steps = 500, double ratio = 1e-6) {
    StabilityCertificate c;
    const Matrix phi = closed_loop(sys, gains);
    c.rho = spectral_radius(phi);
    try {
        c.lyapunov = lyapunov_verify(phi).has_value();
    } catch (const SingularityError&) {
        c.lyapunov = false;
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    c.decay = true;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        Vector x0(sys.n());
        for (double& v : x0) v = gauss(rng);
        const Trajectory t = simulate_fir(sys, gains, x0, steps);
        const double r = t.diverged() ? std::numeric_limits<double>::infinity()
                                      : norm2(t.states.back()) / norm2(t.states.front());
        c.worst_decay_ratio = std::max(c.worst_decay_ratio, r);
        if (!decay_check(t, ratio)) c.decay = false;
    }
    return c;
}

// ----------------------------------------------------------------------------
// Rectangular-window FIR approximation
// ----------------------------------------------------------------------------

namespace detail {
inline void require_schur_controller(const DynamicController& ctl) {
    if (ctl.states() > 0 && !is_schur(ctl.H())) {
        throw ContractError("controller matrix H is not Schur stable; its impulse response does not decay");
    }
}
}  // namespace detail

/// F_0 = D, F_i = E H^{i-1} G for i = 1..l.
inline FirGains fir_approximate(const DynamicController& ctl, std::size_t order) {
    detail::require_schur_controller(ctl);
    std::vector<Matrix> gains{ctl.D()};
    Matrix hg = ctl.G();  // H^{i-1} G
    for (std::size_t i = 1; i <= order; ++i) {
        gains.push_back(ctl.E() * hg);
        hg = ctl.H() * hg;
    }
    return FirGains(std::move(gains));
}

/// Upper bound on sum_{i >= l} ||E H^i G||_F, the impulse-response mass the
/// order-l truncation drops. Terms are summed exactly up to a horizon N fixed
/// by the controller alone; beyond it a Lyapunov contraction bound takes over,
/// so the result is non-increasing in l by construction and tends to zero.
inline double approximation_tail(const DynamicController& ctl, std::size_t order) {
    detail::require_schur_controller(ctl);
    if (ctl.states() == 0) return 0.0;
    // H' P H - P = -I gives ||H x||_P <= q ||x||_P with q = sqrt(1 - 1/lambda_max(P)),
    // hence sum_{i >= N} ||E H^i G||_F <= ||E||_F ||G||_F kappa(P) ||H^N||_F / (1 - q).
    const auto p = lyapunov_verify(ctl.H());
    if (!p) throw ConvergenceError("no Lyapunov certificate for a Schur controller matrix", 0.0);
    const auto [lo, hi] = sym_eig_extremes(*p);
    const double q = std::sqrt(std::max(0.0, 1.0 - 1.0 / hi));
    const double scale = ctl.E().frobenius_norm() * ctl.G().frobenius_norm() * (hi / lo) / (1.0 - q);

    std::vector<double> terms;
    Matrix power = Matrix::identity(ctl.states());  // H^N
    double total = 0.0, remainder = 0.0;
    constexpr std::size_t cap = 10'000'000;
    for (;;) {
        if (terms.size() >= cap) throw ConvergenceError("impulse response tail did not decay", power.frobenius_norm());
        remainder = scale * power.frobenius_norm();
        if (remainder == 0.0 || remainder <= 1e-14 * total) break;
        const double term = (ctl.E() * power * ctl.G()).frobenius_norm();
        terms.push_back(term);
        total += term;
        power = ctl.H() * power;
    }
    const std::size_t horizon = terms.size();
    if (order >= horizon) {
        double tail = remainder;
        for (std::size_t i = horizon; i < order && tail > 0.0; ++i) tail *= q;
        return tail;
    }
    double tail = remainder;
    for (std::size_t i = horizon; i-- > order;) tail += terms[i];
    return tail;
}

}  // namespace firctl
