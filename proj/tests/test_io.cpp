#include <gtest/gtest.h>

#include <cstring>
#include <random>
#include <regex>

#include "firctl/io.hpp"
#include "support.hpp"

using namespace firctl;
using namespace firctl::testing;

namespace {

std::string error_of(const std::string& text) {
    try {
        io::parse_document(text);
    } catch (const io::ParseError& e) {
        return e.what();
    }
    return "";
}

std::size_t count(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
    return n;
}

DesignOutcome outcome(std::size_t order, std::vector<double> rhos) {
    DesignOutcome o;
    o.order = order;
    o.per_run_rhos = std::move(rhos);
    o.best_rho = *std::min_element(o.per_run_rhos.begin(), o.per_run_rhos.end());
    o.worst_rho = *std::max_element(o.per_run_rhos.begin(), o.per_run_rhos.end());
    o.median_rho = median(o.per_run_rhos);
    o.evals_used = 1000 * (order + 1);
    return o;
}

}  // namespace

TEST(Io, FormatDoubleRoundTrips) {
    std::mt19937_64 rng(103);
    std::uniform_int_distribution<std::uint64_t> bits;
    for (int i = 0; i < 5000; ++i) {
        double x;
        const std::uint64_t b = bits(rng);
        std::memcpy(&x, &b, sizeof x);
        if (!std::isfinite(x)) continue;
        EXPECT_EQ(std::strtod(io::format_double(x).c_str(), nullptr), x);
    }
    EXPECT_EQ(io::format_double(0.1), "0.1");
    EXPECT_EQ(io::format_double(2.0), "2");
}

TEST(Io, DocumentsRoundTripBitExactly) {
    std::mt19937_64 rng(107);
    for (int trial = 0; trial < 50; ++trial) {
        const auto sys = random_system(rng, pick(rng, 1, 4), pick(rng, 1, 3), pick(rng, 1, 3));
        const io::SystemDocument doc{"plant" + std::to_string(trial), sys};
        const auto back = io::parse_document(io::serialize(doc));
        EXPECT_EQ(back.name, doc.name);
        const auto& s = std::get<StateSpaceSystem>(back.model);
        EXPECT_EQ(s.A(), sys.A());
        EXPECT_EQ(s.B(), sys.B());
        EXPECT_EQ(s.C(), sys.C());
        EXPECT_EQ(io::serialize(back), io::serialize(doc));

        const FirGains f = random_gains(rng, pick(rng, 0, 3), 2, 1);
        EXPECT_EQ(std::get<FirGains>(io::parse_document(io::serialize({"f", f})).model), f);
    }
    const TransferFunctionSiso tf(Polynomial({1.0, -0.3}), Polynomial({1.0, 0.1, -2.0}));
    const auto t = std::get<TransferFunctionSiso>(io::parse_document(io::serialize({"g", tf})).model);
    EXPECT_EQ(t.num(), tf.num());
    EXPECT_EQ(t.den(), tf.den());
}

TEST(Io, StaticControllerHasEmptyState) {
    const DynamicController ctl = to_dynamic(FirGains({Matrix{{1.5, -2}}}));
    ASSERT_EQ(ctl.states(), 0u);
    const auto back = std::get<DynamicController>(io::parse_document(io::serialize({"k", ctl})).model);
    EXPECT_EQ(back.states(), 0u);
    EXPECT_EQ(back.D(), ctl.D());
    EXPECT_EQ(back.m(), 1u);
    EXPECT_EQ(back.p(), 2u);
}

TEST(Io, ErrorsNameTheLocation) {
    const std::string ragged = error_of(R"({"kind":"state_space","A":[[1,0],[0]],"B":[[1],[0]],"C":[[1,0]]})");
    EXPECT_NE(ragged.find("'A[1]'"), std::string::npos) << ragged;

    const std::string malformed = error_of("{\n  \"kind\": \"state_space\",\n  \"A\": [[1,]]\n}");
    EXPECT_NE(malformed.find("line 3"), std::string::npos) << malformed;

    const std::string kind = error_of(R"({"kind":"zpk"})");
    EXPECT_NE(kind.find("unknown kind"), std::string::npos) << kind;

    const std::string missing = error_of(R"({"kind":"state_space","A":[[1]],"B":[[1]]})");
    EXPECT_NE(missing.find("'C'"), std::string::npos) << missing;

    const std::string nonnum = error_of(R"({"kind":"transfer_function","num":[1,"x"],"den":[1,2]})");
    EXPECT_NE(nonnum.find("num"), std::string::npos) << nonnum;

    const std::string shape = error_of(R"({"kind":"state_space","A":[[1,0],[0,1]],"B":[[1]],"C":[[1,0]]})");
    EXPECT_FALSE(shape.empty());
}

TEST(Io, SweepCsvIsStable) {
    const std::vector<DesignOutcome> rows{outcome(0, {1.5, 1.2, 1.1}), outcome(1, {0.9, 0.3, 0.7})};
    const std::string csv = io::sweep_csv(rows);
    EXPECT_EQ(csv.substr(0, csv.find("\r\n")), "order,median_rho,best_rho,worst_rho,runs,evals");
    EXPECT_EQ(csv, "order,median_rho,best_rho,worst_rho,runs,evals\r\n"
                   "0,1.2,1.1,1.5,3,1000\r\n"
                   "1,0.7,0.3,0.9,3,2000\r\n");
    EXPECT_EQ(io::sweep_csv(rows), csv);
}

TEST(Io, SweepSvgStructure) {
    const std::vector<DesignOutcome> rows{outcome(0, {1.5, 1.2, 1.1}), outcome(1, {0.9, 0.3, 0.7}),
                                          outcome(2, {0.8, 0.2, 0.25})};
    const std::string svg = io::sweep_svg(rows, "a < b & c");
    EXPECT_EQ(svg.rfind("<?xml", 0), 0u);
    EXPECT_EQ(count(svg, "<polyline"), 3u);
    EXPECT_EQ(count(svg, "class=\"band\""), 1u);
    EXPECT_NE(svg.find("a &lt; b &amp; c"), std::string::npos);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
}
