// firctl: analysis and FIR output-feedback design from the command line.
//
// Exit codes: 0 success / designed, 1 error, 2 not designed, 3 bench mismatch.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "firctl/analysis.hpp"
#include "firctl/benchmarks.hpp"
#include "firctl/firdesign.hpp"
#include "firctl/io.hpp"
#include "firctl/lmi.hpp"
#include "firctl/sim.hpp"

namespace fs = std::filesystem;
using namespace firctl;
using io::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNotDesigned = 2;
constexpr int kExitBenchMismatch = 3;

struct Plant {
    std::string name;
    std::optional<TransferFunctionSiso> tf;
    StateSpaceSystem ss;
};

// A path to a system document, or the id of a built-in benchmark.
Plant load_plant(const std::string& input) {
    if (!fs::exists(input)) {
        if (auto entry = find_benchmark(input)) {
            Plant p{entry->id, std::nullopt, entry->plant()};
            if (const auto* tf = std::get_if<TransferFunctionSiso>(&entry->model)) p.tf = *tf;
            return p;
        }
        throw Error("no such file or benchmark id: " + input);
    }
    io::SystemDocument doc = io::load_document(input);
    const std::string name = doc.name.empty() ? fs::path(input).stem().string() : doc.name;
    if (auto* tf = std::get_if<TransferFunctionSiso>(&doc.model)) {
        const SisoRealization r = realize(*tf);
        if (r.feedthrough != 0.0) {
            throw DomainError(input + ": plant has direct feedthrough; the FIR design needs a strictly proper plant");
        }
        return {name, *tf, StateSpaceSystem(r.A, r.B, r.C)};
    }
    if (auto* ss = std::get_if<StateSpaceSystem>(&doc.model)) return {name, std::nullopt, *ss};
    throw io::ParseError(input + ": field 'kind': expected state_space or transfer_function");
}

std::string fmt(double x) { return io::format_double(x); }

std::string zeros_text(const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + (std::isinf(v[i]) ? std::string("inf") : fmt(v[i]));
    return s + "]";
}

json gains_json(const FirGains& g, const std::string& name) { return io::to_json(io::SystemDocument{name, g}); }

// ---------------------------------------------------------------------------

int cmd_analyze(const std::string& input, bool as_json) {
    const Plant plant = load_plant(input);
    const StateSpaceSystem& sys = plant.ss;
    json report;
    report["system"] = plant.name;
    report["states"] = sys.n();
    report["inputs"] = sys.m();
    report["outputs"] = sys.p();
    report["stabilizable"] = pbh_stabilizable(sys);
    report["detectable"] = pbh_detectable(sys);
    report["open_loop_rho"] = spectral_radius(sys.A());

    std::optional<PipReport> pip;
    if (plant.tf) {
        pip = pip_check(*plant.tf);
    } else if (sys.is_siso()) {
        pip = pip_check(ss_to_tf(sys));
    }
    const StrongStabilizability verdict = pip ? (pip->holds ? StrongStabilizability::NecessaryConditionHolds
                                                            : StrongStabilizability::Fails)
                                              : StrongStabilizability::NotApplicableMimo;
    report["strong_stabilizability"] = to_string(verdict);
    if (pip) {
        json counts = json::array();
        for (const auto& c : pip->interval_pole_counts) {
            counts.push_back({{"lower", c.lower},
                              {"upper", std::isinf(c.upper) ? json("inf") : json(c.upper)},
                              {"poles", c.count}});
        }
        json zeros = json::array();
        for (double z : pip->unstable_real_zeros) zeros.push_back(std::isinf(z) ? json("inf") : json(z));
        report["pip"] = {{"holds", pip->holds},
                         {"unstable_real_zeros", zeros},
                         {"unstable_real_poles", pip->unstable_real_poles},
                         {"interval_pole_counts", counts},
                         {"borderline", pip->borderline}};
    }

    if (as_json) {
        std::cout << report.dump(2) << "\n";
        return kExitOk;
    }
    std::cout << "system:                 " << plant.name << " (n=" << sys.n() << ", m=" << sys.m()
              << ", p=" << sys.p() << ")\n"
              << "stabilizable (PBH):     " << (report["stabilizable"].get<bool>() ? "yes" : "no") << "\n"
              << "detectable (PBH):       " << (report["detectable"].get<bool>() ? "yes" : "no") << "\n"
              << "open-loop rho(A):       " << fmt(report["open_loop_rho"].get<double>()) << "\n"
              << "strong stabilizability: " << to_string(verdict) << "\n";
    if (pip) {
        std::cout << "  unstable real zeros:  " << zeros_text(pip->unstable_real_zeros) << "\n"
                  << "  unstable real poles:  " << zeros_text(pip->unstable_real_poles) << "\n";
        for (const auto& c : pip->interval_pole_counts) {
            std::cout << "  poles in (" << fmt(c.lower) << ", " << (std::isinf(c.upper) ? "inf" : fmt(c.upper))
                      << "): " << c.count << "\n";
        }
        for (const auto& b : pip->borderline) std::cout << "  borderline: " << b << "\n";
        if (!pip->holds) {
            std::cout << "parity interlacing fails: no stable controller exists, so FIR design is impossible\n";
        }
    } else {
        std::cout << "  (parity interlacing test applies to SISO plants only)\n";
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct DesignArgs {
    std::string input;
    std::size_t order = 0;
    std::string method = "direct";
    std::size_t runs = 10;
    std::uint64_t seed = 1;
    double margin = 0.0;
    std::string gains_out;
};

void print_certificate(const StabilityCertificate& c) {
    std::cout << "closed-loop rho:        " << fmt(c.rho) << "\n"
              << "Lyapunov certificate:   " << (c.lyapunov ? "verified" : "not verified") << "\n"
              << "decay check (500 steps, 1e-6, 10 states): " << (c.decay ? "pass" : "fail")
              << " (worst ratio " << fmt(c.worst_decay_ratio) << ")\n";
}

int cmd_design(const DesignArgs& a) {
    const Plant plant = load_plant(a.input);
    const StateSpaceSystem& sys = plant.ss;
    std::cout << "system:                 " << plant.name << "\n"
              << "method:                 " << a.method << ", order " << a.order << "\n";

    std::optional<FirGains> gains;
    if (a.method == "convex") {
        try {
            const auto design = sof_convex_design(sys, a.order);
            if (!design) {
                std::cout << "LMI numerically infeasible at order " << a.order << ": not designed\n";
                return kExitNotDesigned;
            }
            gains = design->gains;
        } catch (const DegenerateSolutionError& e) {
            std::cout << "LMI point unusable (" << e.what() << "): not designed\n";
            return kExitNotDesigned;
        }
    } else {
        OptimizerConfig cfg;
        cfg.runs_per_order = a.runs;
        cfg.seed = a.seed;
        cfg.stability_margin = a.margin;
        cfg.method = a.method == "direct" ? SearchMethod::DirectSearch : SearchMethod::Evolutionary;
        const auto sweep = order_sweep(sys, a.order, cfg);
        const DesignOutcome& last = sweep.back();
        std::cout << "runs:                   " << last.per_run_rhos.size() << " (median rho " << fmt(last.median_rho)
                  << ", evals " << last.evals_used << ")\n";
        gains = last.best_gains;
    }

    const StabilityCertificate cert = certify(sys, *gains);
    print_certificate(cert);
    const bool designed = cert.rho < 1.0 - a.margin && cert.lyapunov;

    const std::string doc = gains_json(*gains, plant.name + "_fir" + std::to_string(a.order)).dump(2) + "\n";
    if (!a.gains_out.empty()) {
        io::write_text(a.gains_out, doc);
        std::cout << "gains written to " << a.gains_out << "\n";
    } else {
        std::cout << doc;
    }
    std::cout << (designed ? "designed\n" : "not designed: closed loop is not stable with the requested margin\n");
    return designed ? kExitOk : kExitNotDesigned;
}

// ---------------------------------------------------------------------------

struct SweepArgs {
    std::string input;
    std::size_t max_order = 5;
    std::size_t runs = 10;
    std::uint64_t seed = 1;
    std::string method = "direct";
    std::string csv, svg;
};

int cmd_sweep(const SweepArgs& a) {
    const Plant plant = load_plant(a.input);
    OptimizerConfig cfg;
    cfg.runs_per_order = a.runs;
    cfg.seed = a.seed;
    cfg.method = a.method == "direct" ? SearchMethod::DirectSearch : SearchMethod::Evolutionary;
    const auto rows = order_sweep(plant.ss, a.max_order, cfg);
    const std::string csv = io::sweep_csv(rows);
    if (a.csv.empty()) {
        std::cout << csv;
    } else {
        io::write_text(a.csv, csv);
    }
    if (!a.svg.empty()) io::write_text(a.svg, io::sweep_svg(rows, plant.name + ": spectral radius vs FIR order"));
    return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_approximate(const std::string& input, std::size_t order) {
    io::SystemDocument doc = io::load_document(input);
    const auto* ctl = std::get_if<DynamicController>(&doc.model);
    if (!ctl) throw io::ParseError(input + ": field 'kind': expected dynamic_controller");
    const FirGains gains = fir_approximate(*ctl, order);
    json out = gains_json(gains, (doc.name.empty() ? "controller" : doc.name) + "_fir" + std::to_string(order));
    out["tail_bound"] = approximation_tail(*ctl, order);
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct BenchRow {
    std::string system, check, expected, observed;
    bool scored = true;
    bool match() const { return !scored || expected == observed; }
};

std::string order_text(const std::optional<std::size_t>& l) { return l ? std::to_string(*l) : "none"; }

// Replaces registry expectations with the ones found in `path`.
void apply_expectation_overrides(std::vector<BenchmarkEntry>& entries, const std::string& path) {
    const json doc = json::parse(io::read_text(path));
    for (auto& e : entries) {
        if (!doc.contains(e.id)) continue;
        const json& o = doc.at(e.id);
        if (o.contains("strong_stabilizability")) {
            const std::string s = o.at("strong_stabilizability").get<std::string>();
            for (auto v : {StrongStabilizability::NecessaryConditionHolds, StrongStabilizability::Fails,
                           StrongStabilizability::NotApplicableMimo})
                if (s == to_string(v)) e.expected.strong_stabilizability = v;
        }
        if (o.contains("convex_feasible_at_zero")) e.expected.convex_feasible_at_zero = o.at("convex_feasible_at_zero").get<bool>();
        if (o.contains("min_stabilizing_order")) {
            const json& v = o.at("min_stabilizing_order");
            e.expected.min_stabilizing_order = v.is_null() ? std::nullopt : std::optional<std::size_t>(v.get<std::size_t>());
        }
    }
}

int cmd_bench(const std::string& out_dir, std::uint64_t seed, const std::string& overrides) {
    fs::create_directories(out_dir);
    auto registry = benchmark_registry();
    std::vector<BenchmarkEntry> entries(registry.begin(), registry.end());
    if (!overrides.empty()) apply_expectation_overrides(entries, overrides);

    std::vector<BenchRow> rows;
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto& e : entries) {
        const StateSpaceSystem sys = e.plant();
        std::cerr << "[bench] " << e.id << "\n";

        const StrongStabilizability gate = std::holds_alternative<TransferFunctionSiso>(e.model)
                                               ? strong_stabilizability_gate(std::get<TransferFunctionSiso>(e.model))
                                               : strong_stabilizability_gate(sys);
        rows.push_back({e.id, "strong_stabilizability", to_string(e.expected.strong_stabilizability), to_string(gate)});

        for (std::size_t l = 0; l <= 2; ++l) {
            if (l > 0 && e.expected.convex_feasible_at_zero) break;
            std::string verdict;
            std::optional<SofDesign> convex;
            try {
                convex = sof_convex_design(sys, l);
                verdict = convex ? "feasible" : "infeasible";
            } catch (const DegenerateSolutionError&) {
                verdict = "degenerate";
            }
            const bool expect = l == 0 && e.expected.convex_feasible_at_zero;
            const std::string check = "convex_order_" + std::to_string(l);
            rows.push_back({e.id, check, expect ? "feasible" : "infeasible", verdict});
            if (convex) {
                const StabilityCertificate c = certify(sys, convex->gains);
                rows.push_back({e.id, check + "_certificate", "-",
                                "rho " + fmt(c.rho) + "; lyapunov " + (c.lyapunov ? "verified" : "not verified") +
                                    "; 500-step decay " + (c.decay ? "pass" : "fail") + " (worst ratio " +
                                    fmt(c.worst_decay_ratio) + ")",
                                false});
            }
        }

        OptimizerConfig cfg;
        cfg.runs_per_order = 10;
        cfg.seed = seed;
        const auto sweep = order_sweep(sys, 5, cfg);
        io::write_text(fs::path(out_dir) / ("sweep_" + e.id + ".csv"), io::sweep_csv(sweep));
        io::write_text(fs::path(out_dir) / ("sweep_" + e.id + ".svg"),
                       io::sweep_svg(sweep, e.id + ": spectral radius vs FIR order"));
        std::optional<std::size_t> first;
        bool all_certified = true;
        for (const auto& o : sweep) {
            if (!o.stabilizing()) continue;
            if (!first) first = o.order;
            if (!certify(sys, o.best_gains).ok()) all_certified = false;
        }
        rows.push_back({e.id, "min_stabilizing_order", order_text(e.expected.min_stabilizing_order), order_text(first)});
        rows.push_back({e.id, "sweep_designs_certified", "yes", all_certified ? "yes" : "no"});
        std::string rho_trace;
        for (const auto& o : sweep) rho_trace += (o.order ? " " : "") + fmt(o.best_rho);
        rows.push_back({e.id, "best_rho_by_order", "-", rho_trace, false});
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::string csv = "system,check,expected,observed,status\r\n";
    int mismatches = 0;
    for (const auto& r : rows) {
        const std::string status = !r.scored ? "info" : (r.match() ? "ok" : "MISMATCH");
        csv += r.system + "," + r.check + "," + r.expected + "," + r.observed + "," + status + "\r\n";
        if (!r.match()) {
            ++mismatches;
            std::cout << "mismatch: " << r.system << " " << r.check << ": expected " << r.expected << ", observed "
                      << r.observed << "\n";
        }
    }
    io::write_text(fs::path(out_dir) / "summary.csv", csv);
    std::cout << "bench: " << rows.size() << " rows, " << mismatches << " mismatches, " << fmt(std::round(seconds * 10) / 10)
              << " s; summary in " << (fs::path(out_dir) / "summary.csv").string() << "\n";
    return mismatches == 0 ? kExitOk : kExitBenchMismatch;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"FIR output-feedback analysis and design"};
    app.require_subcommand(1);

    std::string analyze_input;
    bool analyze_json = false;
    auto* analyze = app.add_subcommand("analyze", "stabilizability, detectability and parity interlacing report");
    analyze->add_option("input", analyze_input, "system file or benchmark id (system1..system4)")->required();
    analyze->add_flag("--json", analyze_json, "machine-readable report");

    DesignArgs design_args;
    auto* design = app.add_subcommand("design", "design an FIR controller of a given order");
    design->add_option("input", design_args.input, "system file or benchmark id")->required();
    design->add_option("--order", design_args.order, "FIR order l")->required();
    design->add_option("--method", design_args.method, "convex, direct or evolutionary")
        ->check(CLI::IsMember({"convex", "direct", "evolutionary"}));
    design->add_option("--runs", design_args.runs, "local searches per order")->check(CLI::PositiveNumber);
    design->add_option("--seed", design_args.seed, "random seed");
    design->add_option("--margin", design_args.margin, "required stability margin: rho < 1 - margin")
        ->check(CLI::Range(0.0, 1.0));
    design->add_option("--gains-out", design_args.gains_out, "write the gains document here instead of stdout");

    SweepArgs sweep_args;
    auto* sweep = app.add_subcommand("sweep", "spectral radius statistics over FIR orders 0..max");
    sweep->add_option("input", sweep_args.input, "system file or benchmark id")->required();
    sweep->add_option("--max-order", sweep_args.max_order, "largest FIR order");
    sweep->add_option("--runs", sweep_args.runs, "local searches per order")->check(CLI::PositiveNumber);
    sweep->add_option("--seed", sweep_args.seed, "random seed");
    sweep->add_option("--method", sweep_args.method, "direct or evolutionary")
        ->check(CLI::IsMember({"direct", "evolutionary"}));
    sweep->add_option("--csv", sweep_args.csv, "CSV output path (stdout when omitted)");
    sweep->add_option("--svg", sweep_args.svg, "SVG plot output path");

    std::string approx_input;
    std::size_t approx_order = 0;
    auto* approximate = app.add_subcommand("approximate", "truncate a stable dynamic controller to FIR gains");
    approximate->add_option("input", approx_input, "dynamic_controller document")->required();
    approximate->add_option("--order", approx_order, "FIR order l")->required();

    std::string bench_out = "bench_out";
    std::uint64_t bench_seed = 1;
    std::string bench_overrides;
    auto* bench = app.add_subcommand("bench", "reproduce the benchmark outcomes and compare with expectations");
    bench->add_option("--out", bench_out, "output directory");
    bench->add_option("--seed", bench_seed, "random seed");
    bench->add_option("--expectations", bench_overrides, "JSON file overriding registry expectations")
        ->group("")
        ->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitError;
    }

    try {
        if (*analyze) return cmd_analyze(analyze_input, analyze_json);
        if (*design) return cmd_design(design_args);
        if (*sweep) return cmd_sweep(sweep_args);
        if (*approximate) return cmd_approximate(approx_input, approx_order);
        if (*bench) return cmd_bench(bench_out, bench_seed, bench_overrides);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
