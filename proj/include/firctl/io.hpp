#pragma once

// System documents (JSON), sweep CSV and SVG plots.
//
// A document holds one object with a "kind" field:
//   state_space         A, B, C as nested arrays
//   transfer_function   num, den coefficient arrays, highest power first
//   dynamic_controller  H, G, E, D
//   fir_gains           gains: [F_0, F_1, ...], each m x p
// plus an optional "name". Unknown fields are ignored.

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "firctl/errors.hpp"
#include "firctl/firdesign.hpp"
#include "firctl/matlib.hpp"
#include "firctl/sysmodel.hpp"

namespace firctl::io {

using json = nlohmann::json;

class ParseError : public Error {
public:
    using Error::Error;
};

using Model = std::variant<StateSpaceSystem, TransferFunctionSiso, DynamicController, FirGains>;

struct SystemDocument {
    std::string name;
    Model model;
};

namespace detail {

inline std::string line_col(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

inline const json& field(const json& obj, const char* key) {
    if (!obj.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
    return obj.at(key);
}

inline double number(const json& v, const std::string& where) {
    if (!v.is_number()) throw ParseError("field '" + where + "': expected a number, got " + v.type_name());
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ParseError("field '" + where + "': non-finite value");
    return x;
}

/// Nested array -> matrix. An empty outer array gives 0 x `cols_if_empty`.
inline Matrix matrix(const json& v, const std::string& where, std::size_t cols_if_empty = 0) {
    if (!v.is_array()) throw ParseError("field '" + where + "': expected an array of rows");
    if (v.empty()) return Matrix(0, cols_if_empty);
    const std::size_t rows = v.size();
    std::size_t cols = 0;
    Vector data;
    for (std::size_t i = 0; i < rows; ++i) {
        const std::string row_where = where + "[" + std::to_string(i) + "]";
        const json& row = v[i];
        if (!row.is_array()) throw ParseError("field '" + row_where + "': expected a row array");
        if (i == 0) cols = row.size();
        if (row.size() != cols) {
            throw ParseError("field '" + row_where + "': ragged row of length " + std::to_string(row.size()) +
                             ", expected " + std::to_string(cols));
        }
        for (std::size_t j = 0; j < cols; ++j) data.push_back(number(row[j], row_where + "[" + std::to_string(j) + "]"));
    }
    return Matrix(rows, cols, std::move(data));
}

inline Polynomial polynomial(const json& v, const std::string& where) {
    if (!v.is_array() || v.empty()) throw ParseError("field '" + where + "': expected a nonempty coefficient array");
    std::vector<double> c;
    for (std::size_t i = 0; i < v.size(); ++i) c.push_back(number(v[i], where + "[" + std::to_string(i) + "]"));
    return Polynomial(std::move(c));
}

inline json to_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline json to_json(const Polynomial& p) { return json(p.coeffs()); }

template <typename Fn>
auto wrap(const std::string& kind, Fn&& fn) {
    try {
        return fn();
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        throw ParseError("invalid " + kind + ": " + e.what());
    }
}

}  // namespace detail

inline SystemDocument from_json(const json& doc) {
    using namespace detail;
    if (!doc.is_object()) throw ParseError("document must be a JSON object");
    SystemDocument out;
    if (doc.contains("name")) {
        if (!doc["name"].is_string()) throw ParseError("field 'name': expected a string");
        out.name = doc["name"].get<std::string>();
    }
    const json& kind_field = field(doc, "kind");
    if (!kind_field.is_string()) throw ParseError("field 'kind': expected a string");
    const std::string kind = kind_field.get<std::string>();

    if (kind == "state_space") {
        Matrix a = matrix(field(doc, "A"), "A");
        Matrix b = matrix(field(doc, "B"), "B");
        Matrix c = matrix(field(doc, "C"), "C");
        out.model = wrap(kind, [&] { return StateSpaceSystem(a, b, c); });
    } else if (kind == "transfer_function") {
        Polynomial num = polynomial(field(doc, "num"), "num");
        Polynomial den = polynomial(field(doc, "den"), "den");
        out.model = wrap(kind, [&] { return TransferFunctionSiso(num, den); });
    } else if (kind == "dynamic_controller") {
        Matrix d = matrix(field(doc, "D"), "D");
        Matrix h = matrix(field(doc, "H"), "H");
        Matrix g = matrix(field(doc, "G"), "G", d.cols());
        Matrix e = matrix(field(doc, "E"), "E", h.rows());
        if (e.rows() == 0 && d.rows() > 0 && h.rows() == 0) e = Matrix(d.rows(), 0);
        out.model = wrap(kind, [&] { return DynamicController(h, g, e, d); });
    } else if (kind == "fir_gains") {
        const json& list = field(doc, "gains");
        if (!list.is_array() || list.empty()) throw ParseError("field 'gains': expected a nonempty array of matrices");
        std::vector<Matrix> gains;
        for (std::size_t i = 0; i < list.size(); ++i) gains.push_back(matrix(list[i], "gains[" + std::to_string(i) + "]"));
        out.model = wrap(kind, [&] { return FirGains(std::move(gains)); });
    } else {
        throw ParseError("field 'kind': unknown kind '" + kind +
                         "' (expected state_space, transfer_function, dynamic_controller or fir_gains)");
    }
    return out;
}

inline SystemDocument parse_document(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError("malformed JSON at " + detail::line_col(text, e.byte == 0 ? 0 : e.byte - 1) + ": " + e.what());
    }
    return from_json(doc);
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline SystemDocument load_document(const std::filesystem::path& path) {
    try {
        return parse_document(read_text(path));
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

inline json to_json(const SystemDocument& d) {
    using detail::to_json;
    json doc = json::object();
    if (!d.name.empty()) doc["name"] = d.name;
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, StateSpaceSystem>) {
                doc["kind"] = "state_space";
                doc["A"] = to_json(m.A());
                doc["B"] = to_json(m.B());
                doc["C"] = to_json(m.C());
            } else if constexpr (std::is_same_v<T, TransferFunctionSiso>) {
                doc["kind"] = "transfer_function";
                doc["num"] = to_json(m.num());
                doc["den"] = to_json(m.den());
            } else if constexpr (std::is_same_v<T, DynamicController>) {
                doc["kind"] = "dynamic_controller";
                doc["H"] = to_json(m.H());
                doc["G"] = to_json(m.G());
                doc["E"] = to_json(m.E());
                doc["D"] = to_json(m.D());
            } else {
                doc["kind"] = "fir_gains";
                json list = json::array();
                for (const Matrix& g : m.gains()) list.push_back(to_json(g));
                doc["gains"] = std::move(list);
            }
        },
        d.model);
    return doc;
}

inline std::string serialize(const SystemDocument& d) { return to_json(d).dump(2) + "\n"; }

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out.flush()) throw Error("write failed for " + path.string());
}

// ----------------------------------------------------------------------------
// Sweep CSV and SVG
// ----------------------------------------------------------------------------

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (std::isnan(x)) return "nan";
    char buf[32];
    for (int precision = 1; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, x);
        if (std::strtod(buf, nullptr) == x) break;
    }
    return buf;
}

inline constexpr const char* kSweepCsvHeader = "order,median_rho,best_rho,worst_rho,runs,evals";

inline std::string sweep_csv(const std::vector<DesignOutcome>& rows) {
    std::string out = std::string(kSweepCsvHeader) + "\r\n";
    for (const auto& r : rows) {
        out += std::to_string(r.order) + "," + format_double(r.median_rho) + "," + format_double(r.best_rho) + "," +
               format_double(r.worst_rho) + "," + std::to_string(r.per_run_rhos.size()) + "," +
               std::to_string(r.evals_used) + "\r\n";
    }
    return out;
}

namespace detail {
inline std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}
}  // namespace detail

/// Median, best and worst spectral radius against order, with the min-max
/// band over runs shaded and the stability boundary rho = 1 marked.
inline std::string sweep_svg(const std::vector<DesignOutcome>& rows, const std::string& title) {
    constexpr double width = 640, height = 420, left = 60, right = 170, top = 40, bottom = 50;
    const double plot_w = width - left - right, plot_h = height - top - bottom;

    auto finite_or = [](double v, double fallback) { return std::isfinite(v) ? v : fallback; };
    double y_max = 1.2;
    for (const auto& r : rows) y_max = std::max(y_max, finite_or(r.worst_rho, 0.0) * 1.05);
    const double x_max = rows.size() > 1 ? static_cast<double>(rows.back().order) : 1.0;
    auto sx = [&](double order) { return left + plot_w * order / x_max; };
    auto sy = [&](double rho) { return top + plot_h * (1.0 - std::clamp(finite_or(rho, y_max), 0.0, y_max) / y_max); };
    auto pt = [&](double order, double rho) { return format_double(sx(order)) + "," + format_double(sy(rho)); };

    std::string s;
    s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" viewBox=\"0 0 640 420\">\n";
    s += "  <title>" + detail::xml_escape(title) + "</title>\n";
    s += "  <rect x=\"0\" y=\"0\" width=\"640\" height=\"420\" fill=\"white\"/>\n";

    // axes and ticks
    s += "  <g stroke=\"black\" stroke-width=\"1\">\n";
    s += "    <line x1=\"" + format_double(left) + "\" y1=\"" + format_double(top + plot_h) + "\" x2=\"" +
         format_double(left + plot_w) + "\" y2=\"" + format_double(top + plot_h) + "\"/>\n";
    s += "    <line x1=\"" + format_double(left) + "\" y1=\"" + format_double(top) + "\" x2=\"" + format_double(left) +
         "\" y2=\"" + format_double(top + plot_h) + "\"/>\n";
    s += "  </g>\n";
    s += "  <g font-family=\"sans-serif\" font-size=\"11\">\n";
    for (const auto& r : rows) {
        s += "    <text x=\"" + format_double(sx(static_cast<double>(r.order))) + "\" y=\"" +
             format_double(top + plot_h + 16) + "\" text-anchor=\"middle\">" + std::to_string(r.order) + "</text>\n";
    }
    const int y_ticks = 5;
    for (int i = 0; i <= y_ticks; ++i) {
        const double v = y_max * i / y_ticks;
        char label[16];
        std::snprintf(label, sizeof label, "%.2f", v);
        s += "    <text x=\"" + format_double(left - 6) + "\" y=\"" + format_double(sy(v) + 4) +
             "\" text-anchor=\"end\">" + label + "</text>\n";
    }
    s += "    <text x=\"" + format_double(left + plot_w / 2) + "\" y=\"" + format_double(height - 12) +
         "\" text-anchor=\"middle\">FIR order</text>\n";
    s += "    <text x=\"16\" y=\"" + format_double(top + plot_h / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         format_double(top + plot_h / 2) + ")\">closed-loop spectral radius</text>\n";
    s += "    <text x=\"" + format_double(left) + "\" y=\"24\" font-size=\"13\">" + detail::xml_escape(title) + "</text>\n";
    s += "  </g>\n";

    // stability boundary
    s += "  <line x1=\"" + format_double(left) + "\" y1=\"" + format_double(sy(1.0)) + "\" x2=\"" +
         format_double(left + plot_w) + "\" y2=\"" + format_double(sy(1.0)) +
         "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";

    if (!rows.empty()) {
        std::string band;
        for (const auto& r : rows) band += pt(static_cast<double>(r.order), r.best_rho) + " ";
        for (auto it = rows.rbegin(); it != rows.rend(); ++it) band += pt(static_cast<double>(it->order), it->worst_rho) + " ";
        band.pop_back();
        s += "  <polygon class=\"band\" points=\"" + band + "\" fill=\"steelblue\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";

        auto series = [&](const char* cls, auto get, const char* style) {
            std::string pts;
            for (const auto& r : rows) pts += pt(static_cast<double>(r.order), get(r)) + " ";
            pts.pop_back();
            s += std::string("  <polyline class=\"") + cls + "\" points=\"" + pts + "\" fill=\"none\" " + style + "/>\n";
        };
        series("median", [](const DesignOutcome& r) { return r.median_rho; }, "stroke=\"steelblue\" stroke-width=\"2\"");
        series("best", [](const DesignOutcome& r) { return r.best_rho; }, "stroke=\"seagreen\" stroke-width=\"1\"");
        series("worst", [](const DesignOutcome& r) { return r.worst_rho; }, "stroke=\"firebrick\" stroke-width=\"1\"");
    }

    // legend
    const double lx = left + plot_w + 15;
    s += "  <g font-family=\"sans-serif\" font-size=\"11\">\n";
    s += "    <rect x=\"" + format_double(lx) + "\" y=\"50\" width=\"18\" height=\"10\" fill=\"steelblue\" fill-opacity=\"0.2\"/>\n";
    s += "    <text x=\"" + format_double(lx + 24) + "\" y=\"59\">min-max over runs</text>\n";
    const char* names[] = {"median", "best (min)", "worst (max)"};
    const char* colors[] = {"steelblue", "seagreen", "firebrick"};
    for (int i = 0; i < 3; ++i) {
        const double y = 78 + 18 * i;
        s += "    <line x1=\"" + format_double(lx) + "\" y1=\"" + format_double(y) + "\" x2=\"" + format_double(lx + 18) +
             "\" y2=\"" + format_double(y) + "\" stroke=\"" + colors[i] + "\" stroke-width=\"2\"/>\n";
        s += "    <text x=\"" + format_double(lx + 24) + "\" y=\"" + format_double(y + 4) + "\">" + names[i] + "</text>\n";
    }
    s += "  </g>\n";
    s += "</svg>\n";
    return s;
}

}  // namespace firctl::io
