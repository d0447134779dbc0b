// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "firctl/analysis.hpp"
#include "firctl/benchmarks.hpp"
#include "firctl/firdesign.hpp"
#include "firctl/lmi.hpp"
#include "firctl/sim.hpp"
#include "support.hpp"

using namespace firctl;
using namespace firctl::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void fail(const std::string& why) {
        if (pass) detail.str("");
        pass = false;
        detail << why << "; ";
    }
};

int failures = 0;

void report(int id, const char* title, const std::function<void(Verdict&)>& body) {
    Verdict v;
    try {
        body(v);
    } catch (const std::exception& e) {
        v.fail(std::string("exception: ") + e.what());
    }
    failures += !v.pass;
    std::printf("criterion %d: %s — %s: %s\n", id, v.pass ? "PASS" : "FAIL", title, v.detail.str().c_str());
    std::fflush(stdout);
}

constexpr std::size_t kMaxOrder = 5;

// Sweeps shared by criteria 3 and 9.
std::vector<std::pair<std::string, std::vector<DesignOutcome>>> g_sweeps;

}  // namespace

int main() {
    report(1, "parity interlacing verdicts", [](Verdict& v) {
        const auto t0 = Clock::now();
        const PipReport r1 = pip_check(benchmark_g1());
        const PipReport r2 = pip_check(benchmark_g2());
        const double dt = seconds_since(t0);
        if (!r1.holds) v.fail("G1 should satisfy the property");
        if (r2.holds) v.fail("G2 should violate it");
        if (strong_stabilizability_gate(benchmark_batch_reactor()) != StrongStabilizability::NotApplicableMimo)
            v.fail("MIMO plant should be marked not applicable");
        if (dt >= 0.1) v.fail("took " + std::to_string(dt) + " s");
        if (v.pass) v.detail << "G1 holds, G2 fails, both in " << dt * 1e3 << " ms";
    });

    report(2, "convex design pattern", [](Verdict& v) {
        double slowest = 0.0;
        for (const auto& e : benchmark_registry()) {
            const std::size_t top = e.expected.convex_feasible_at_zero ? 0 : 2;
            for (std::size_t l = 0; l <= top; ++l) {
                const auto t0 = Clock::now();
                bool feasible = false;
                try {
                    feasible = sof_convex_design(e.plant(), l).has_value();
                } catch (const DegenerateSolutionError&) {
                }
                const double dt = seconds_since(t0);
                slowest = std::max(slowest, dt);
                if (feasible != e.expected.convex_feasible_at_zero)
                    v.fail(e.id + " l=" + std::to_string(l) + (feasible ? " feasible" : " infeasible"));
                if (dt >= 10.0) v.fail(e.id + " l=" + std::to_string(l) + " took " + std::to_string(dt) + " s");
            }
        }
        if (v.pass) v.detail << "system4 feasible at l=0, systems 1-3 infeasible at l=0..2, slowest " << slowest << " s";
    });

    report(3, "non-convex design pattern (10 runs, seed 1)", [](Verdict& v) {
        OptimizerConfig cfg;
        cfg.runs_per_order = 10;
        cfg.seed = 1;
        const auto t0 = Clock::now();
        for (const auto& e : benchmark_registry()) {
            auto sweep = order_sweep(e.plant(), kMaxOrder, cfg);
            std::optional<std::size_t> first;
            for (const auto& o : sweep)
                if (o.best_rho < 1.0) {
                    first = o.order;
                    break;
                }
            if (first != e.expected.min_stabilizing_order) {
                v.fail(e.id + " first stabilizing order " + (first ? std::to_string(*first) : std::string("none")));
            }
            for (const auto& o : sweep) {
                const bool should = e.expected.min_stabilizing_order && o.order >= *e.expected.min_stabilizing_order;
                if ((o.best_rho < 1.0) != should)
                    v.fail(e.id + " l=" + std::to_string(o.order) + " best rho " + std::to_string(o.best_rho));
            }
            v.detail << e.id << " rho(l=0.." << kMaxOrder << ")=";
            for (const auto& o : sweep) v.detail << (o.order ? "/" : "") << o.best_rho;
            v.detail << "; ";
            g_sweeps.emplace_back(e.id, std::move(sweep));
        }
        const double dt = seconds_since(t0);
        if (dt >= 600.0) v.fail("took " + std::to_string(dt) + " s");
        if (v.pass) v.detail << "total " << dt << " s";
    });

    report(4, "G1 example closed loop", [](Verdict& v) {
        const double rho = spectral_radius(closed_loop(tf_to_ss(benchmark_g1()), FirGains({Matrix{{-5.6}}, Matrix{{-0.1}}})));
        const double err = std::abs(rho - std::sqrt(0.5));
        if (err > 1e-9) v.fail("rho " + std::to_string(rho));
        v.detail << "rho = " << rho << ", |rho - sqrt(0.5)| = " << err;
    });

    report(5, "augmented and dynamic closed loops agree", [](Verdict& v) {
        std::mt19937_64 rng(2024);
        double worst = 0.0, worst_input = 0.0;
        int exact = 0;
        for (int trial = 0; trial < 100; ++trial) {
            const std::size_t n = pick(rng, 1, 4), m = pick(rng, 1, 4), p = pick(rng, 1, 4), l = pick(rng, 0, 3);
            const auto sys = random_system(rng, n, m, p);
            const FirGains f = random_gains(rng, l, m, p);
            const Matrix a = closed_loop_augmented(augment(sys, l), f);
            const Matrix b = closed_loop_dynamic(sys, to_dynamic(f));
            const double d = (a - b).max_abs();
            worst = std::max(worst, d);
            exact += a == b;
            if (!(a == b)) v.fail("instance " + std::to_string(trial) + " differs by " + std::to_string(d));

            std::normal_distribution<double> g(0.0, 1.0);
            Vector x0(n);
            for (double& x : x0) x = g(rng);
            const DynamicController ctl = to_dynamic(f);
            const Trajectory tf = simulate_fir(sys, f, x0, 50);
            const Trajectory td = simulate_dynamic(sys, ctl, x0, Vector(ctl.states(), 0.0), 50);
            if (tf.inputs.size() != td.inputs.size()) v.fail("instance " + std::to_string(trial) + " trajectory lengths differ");
            for (std::size_t k = 0; k < std::min(tf.inputs.size(), td.inputs.size()); ++k) {
                double du = 0.0;
                for (std::size_t i = 0; i < m; ++i) du = std::max(du, std::abs(tf.inputs[k][i] - td.inputs[k][i]));
                const double rel = du / (1.0 + norm2(tf.inputs[k]));
                worst_input = std::max(worst_input, rel);
                if (rel > 1e-12) v.fail("instance " + std::to_string(trial) + " inputs differ at k=" + std::to_string(k));
            }
        }
        v.detail << exact << "/100 bit-identical closed loops, max difference " << worst
                 << "; max relative input mismatch over 50 steps " << worst_input;
    });

    report(6, "zero padding adds p zero eigenvalues", [](Verdict& v) {
        std::mt19937_64 rng(2025);
        double worst = 0.0;
        int checked = 0;
        while (checked < 100) {
            const std::size_t n = pick(rng, 1, 4), m = pick(rng, 1, 3), p = pick(rng, 1, 3), l = pick(rng, 0, 3);
            // structurally singular loops put a Jordan chain at zero; see README
            if (l >= 1 && std::min(n, m) < p) continue;
            ++checked;
            const auto sys = random_system(rng, n, m, p);
            const FirGains f = random_gains(rng, l, m, p);
            auto expected = eigenvalues(closed_loop(sys, f));
            expected.insert(expected.end(), p, Complex{0.0});
            const double d = multiset_distance(eigenvalues(closed_loop(sys, f.padded())), expected);
            worst = std::max(worst, d);
            if (d > 1e-8) v.fail("instance " + std::to_string(checked) + " off by " + std::to_string(d));
        }
        v.detail << "100 instances, max eigenvalue mismatch " << worst;
    });

    report(7, "augmentation preserves stabilizability", [](Verdict& v) {
        std::mt19937_64 rng(2026);
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        int negatives = 0;
        for (int trial = 0; trial < 200; ++trial) {
            const std::size_t n = pick(rng, 1, 4), m = pick(rng, 1, 2), p = pick(rng, 1, 2);
            Matrix a(n, n), b(n, m), c(p, n);
            for (Matrix* x : {&a, &b, &c})
                for (double& e : x->data()) e = u(rng);
            if (trial % 2) {
                // unreachable unstable last state
                for (std::size_t j = 0; j + 1 < n; ++j) a(n - 1, j) = 0.0;
                for (std::size_t j = 0; j < m; ++j) b(n - 1, j) = 0.0;
                a(n - 1, n - 1) = 1.5;
            }
            const StateSpaceSystem sys(a, b, c);
            const bool base = pbh_stabilizable(sys);
            negatives += !base;
            for (std::size_t l = 1; l <= 3; ++l)
                if (augmented_stabilizable_check(sys, l) != base) v.fail("instance " + std::to_string(trial) + " l=" + std::to_string(l));
        }
        v.detail << "200 instances x l=1..3, " << negatives << " unstabilizable";
    });

    report(8, "state-feedback LMI on augmented benchmarks", [](Verdict& v) {
        double worst = 0.0;
        for (const auto& e : benchmark_registry()) {
            for (std::size_t l = 0; l <= 3; ++l) {
                const AugmentedPlant aug = augment(e.plant(), l);
                const auto d = state_feedback_design(aug);
                const double rho = spectral_radius(aug.A + aug.B * d.K);
                worst = std::max(worst, rho);
                if (!(rho < 1.0)) v.fail(e.id + " l=" + std::to_string(l) + " rho " + std::to_string(rho));
            }
        }
        v.detail << "4 systems x l=0..3, worst closed-loop rho " << worst;
    });

    report(9, "every stabilizing design is certified by simulation", [](Verdict& v) {
        int certified = 0;
        auto check = [&](const std::string& what, const StateSpaceSystem& sys, const FirGains& g) {
            const StabilityCertificate c = certify(sys, g);
            if (c.ok()) {
                ++certified;
                return;
            }
            std::ostringstream why;
            why << what << " rho=" << c.rho << " lyapunov=" << (c.lyapunov ? "ok" : "fail")
                << " worst 500-step decay ratio " << c.worst_decay_ratio;
            v.fail(why.str());
        };
        if (g_sweeps.empty()) v.fail("sweeps from criterion 3 unavailable");
        for (const auto& [id, sweep] : g_sweeps) {
            const auto sys = find_benchmark(id)->plant();
            for (const auto& o : sweep)
                if (o.best_rho < 1.0) check(id + " sweep l=" + std::to_string(o.order), sys, o.best_gains);
        }
        for (const auto& e : benchmark_registry()) {
            if (const auto d = sof_convex_design(e.plant(), 0)) check(e.id + " convex l=0", e.plant(), d->gains);
        }
        v.detail << certified << " designs certified";
        if (!v.pass) v.detail << " (convex designs sit close to rho = 1, so 500 steps are too few to reach 1e-6)";
    });

    report(10, "FIR truncation of stable controllers", [](Verdict& v) {
        std::mt19937_64 rng(2027);
        std::uniform_real_distribution<double> radius(0.1, 0.95);
        double worst_coeff = 0.0, worst_tail = 0.0;
        for (int trial = 0; trial < 50; ++trial) {
            const std::size_t k = pick(rng, 1, 4), m = pick(rng, 1, 2), p = pick(rng, 1, 2);
            Matrix h = random_matrix(rng, k, k);
            h *= radius(rng) / spectral_radius(h);
            const DynamicController ctl(h, random_matrix(rng, k, p), random_matrix(rng, m, k), random_matrix(rng, m, p));
            const std::size_t l = 10;
            const FirGains f = fir_approximate(ctl, l);
            if (!(f[0] == ctl.D())) v.fail("F_0 != D at instance " + std::to_string(trial));
            Matrix power = Matrix::identity(k);
            for (std::size_t i = 1; i <= l; ++i) {
                const Matrix direct = ctl.E() * power * ctl.G();
                worst_coeff = std::max(worst_coeff, (f[i] - direct).max_abs() / (1.0 + direct.max_abs()));
                power = power * h;
            }
            // order at which rho(H)^l drops below 1e-16, plus room for transients
            const std::size_t horizon =
                static_cast<std::size_t>(std::ceil(std::log(1e-16) / std::log(spectral_radius(h)))) + 50;
            double prev = approximation_tail(ctl, 0);
            for (std::size_t order = 1; order <= horizon; ++order) {
                const double t = approximation_tail(ctl, order);
                if (t > prev) v.fail("tail increases at instance " + std::to_string(trial));
                prev = t;
            }
            worst_tail = std::max(worst_tail, prev);
            if (prev >= 1e-10) v.fail("tail " + std::to_string(prev) + " at instance " + std::to_string(trial));
        }
        if (worst_coeff > 1e-13) v.fail("coefficient mismatch " + std::to_string(worst_coeff));
        v.detail << "50 controllers, max coefficient error " << worst_coeff << ", max tail at the horizon " << worst_tail;
    });

    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
