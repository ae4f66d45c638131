#pragma once

// JSON and CSV emission for paths, trajectories, laws, chaos series and CI reports.

#include "pbvp/chaos.hpp"
#include "pbvp/errors.hpp"
#include "pbvp/jump_path.hpp"
#include "pbvp/law.hpp"
#include "pbvp/reciprocal.hpp"
#include "pbvp/sensitivity.hpp"
#include "pbvp/trajectory.hpp"

#include "json.hpp"

#include <charconv>
#include <cstddef>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace pbvp {

/// Object keys come out sorted (std::map storage).
using Json = nlohmann::json;

/// Two-space indented JSON with a trailing newline.
inline std::string pretty(const Json& j) { return j.dump(2) + "\n"; }

inline Json path_to_json(const JumpPath& path) { return Json(std::vector<double>(path.begin(), path.end())); }

inline JumpPath path_from_json(const Json& j) {
    if (!j.is_array()) throw ArgumentError("jump path must be a JSON array of times");
    std::vector<double> times;
    for (const auto& v : j) {
        if (!v.is_number()) throw ArgumentError("jump time must be a number");
        times.push_back(v.get<double>());
    }
    return JumpPath(std::move(times));
}

inline Json record_to_json(const TrajectoryRecord& r) {
    Json samples = Json::array();
    for (const auto& [t, x] : r.samples) samples.push_back({t, x});
    Json jumps = Json::array();
    for (const auto& jmp : r.jumps) jumps.push_back({{"t", jmp.t}, {"left", jmp.left}, {"right", jmp.right}});
    return {{"x0", r.x0},
            {"jump_times", r.jump_times},
            {"samples", samples},
            {"jumps", jumps},
            {"backward", r.backward}};
}

inline TrajectoryRecord record_from_json(const Json& j) {
    try {
        TrajectoryRecord r;
        r.x0 = j.at("x0").get<double>();
        r.jump_times = j.at("jump_times").get<std::vector<double>>();
        for (const auto& s : j.at("samples")) {
            if (s.size() != 2) throw ArgumentError("trajectory sample must be a [t, x] pair");
            r.samples.emplace_back(s[0].get<double>(), s[1].get<double>());
        }
        for (const auto& jmp : j.at("jumps")) {
            r.jumps.push_back({jmp.at("t").get<double>(), jmp.at("left").get<double>(), jmp.at("right").get<double>()});
        }
        r.backward = j.value("backward", false);
        return r;
    } catch (const Json::exception& e) {
        throw ArgumentError(std::string("malformed trajectory JSON: ") + e.what());
    }
}

inline Json kernel_to_json(const ChaosKernel& k) {
    switch (k.kind) {
    case ChaosKernel::Kind::constant_one: return "const";
    case ChaosKernel::Kind::indicator: return {{"indicator", k.t}};
    case ChaosKernel::Kind::function: break;
    }
    throw CapabilityError("function kernels have no JSON form");
}

inline ChaosKernel kernel_from_json(const Json& j) {
    if (j.is_string() && j.get<std::string>() == "const") return ChaosKernel::constant_one();
    if (j.is_object() && j.contains("indicator") && j["indicator"].is_number()) {
        return ChaosKernel::indicator(j["indicator"].get<double>());
    }
    throw ArgumentError("chaos kernel must be \"const\" or {\"indicator\": t}");
}

inline Json chaos_to_json(const ChaosSeries& series) {
    Json out = Json::array();
    for (const auto& term : series.terms) {
        out.push_back({{"n", term.n}, {"c_n", term.c}, {"kernel", kernel_to_json(term.kernel)}});
    }
    return out;
}

inline ChaosSeries chaos_from_json(const Json& j) {
    if (!j.is_array()) throw ArgumentError("chaos series must be a JSON array");
    ChaosSeries series;
    for (const auto& term : j) {
        try {
            series.terms.push_back(
                {term.at("n").get<std::size_t>(), term.at("c_n").get<double>(), kernel_from_json(term.at("kernel"))});
        } catch (const Json::exception& e) {
            throw ArgumentError(std::string("malformed chaos term: ") + e.what());
        }
        series.truncation_order = std::max(series.truncation_order, series.terms.back().n);
    }
    return series;
}

inline Json ci_report_to_json(const CiReport& r) {
    Json cells = Json::array();
    for (const auto& c : r.cells) {
        cells.push_back({{"key_a", c.key_a},
                         {"key_b", c.key_b},
                         {"count", c.count},
                         {"dcor", c.dcor},
                         {"p_value", c.p_value},
                         {"rejected", c.rejected}});
    }
    return {{"times", {{"a", r.times.a}, {"u", r.times.u}, {"b", r.times.b}, {"v", r.times.v}}},
            {"bins", r.bins},
            {"alpha", r.alpha},
            {"samples", r.samples},
            {"tested_cells", r.cells.size()},
            {"skipped_cells", r.skipped_cells},
            {"skipped_samples", r.skipped_samples},
            {"cells", cells},
            {"reject", r.reject}};
}

inline Json law_summary_to_json(const LawEstimate& est) {
    Json strata = Json::array();
    const double n = static_cast<double>(std::max<std::size_t>(est.n_paths, 1));
    for (const auto& [key, st] : est.strata) {
        strata.push_back({{"n_t", key.before},
                          {"n_after", key.after},
                          {"count", st.values.size()},
                          {"weight", static_cast<double>(st.values.size()) / n},
                          {"atom", st.atom},
                          {"bandwidth", st.kde.bandwidth}});
    }
    return {{"t", est.t},
            {"n_paths", est.n_paths},
            {"atom_location", est.atom_location},
            {"atom_mass_hat", est.atom_mass_hat},
            {"continuous_fraction", est.continuous_fraction},
            {"flow_law", est.flow_law},
            {"strata", strata}};
}

/// Shortest decimal that reads back to the same double.
inline std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

/// Quotes a field when it holds a comma, quote, CR or LF; inner quotes are doubled.
inline std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

/// RFC 4180 writer: header first, CRLF line ends.
class CsvWriter {
public:
    CsvWriter(std::ostream& out, const std::vector<std::string>& header) : out_(out), width_(header.size()) {
        write(header);
    }

    void row(const std::vector<std::string>& fields) {
        if (fields.size() != width_) throw ArgumentError("CSV row width differs from header");
        write(fields);
    }

private:
    void write(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out_ << ',';
            out_ << csv_escape(fields[i]);
        }
        out_ << "\r\n";
    }

    std::ostream& out_;
    std::size_t width_;
};

/// Records of an RFC 4180 document; accepts LF or CRLF line ends.
inline std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, touched = false;
    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        touched = false;
    };
    auto end_row = [&] {
        end_field();
        rows.push_back(std::move(row));
        row.clear();
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c != '"') {
                field += c;
            } else if (i + 1 < text.size() && text[i + 1] == '"') {
                field += '"';
                ++i;
            } else {
                quoted = false;
            }
            continue;
        }
        switch (c) {
        case '"':
            if (!field.empty()) throw ArgumentError("CSV quote inside an unquoted field");
            quoted = touched = true;
            break;
        case ',': end_field(); break;
        case '\r':
            if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
            end_row();
            break;
        case '\n': end_row(); break;
        default: field += c; touched = true;
        }
    }
    if (quoted) throw ArgumentError("CSV ends inside a quoted field");
    if (touched || !field.empty() || !row.empty()) end_row();
    return rows;
}

inline void write_law_samples_csv(std::ostream& out, const LawEstimate& est) {
    CsvWriter csv(out, {"path_id", "N_t", "N1", "X_t", "is_atom"});
    for (const auto& s : est.samples) {
        csv.row({std::to_string(s.path_id), std::to_string(s.n_t), std::to_string(s.n_1), format_number(s.value),
                 s.is_atom ? "1" : "0"});
    }
}

inline void write_sensitivity_csv(std::ostream& out, const std::vector<SensitivityRow>& rows) {
    CsvWriter csv(out, {"path_id", "j", "t", "analytic", "fd", "rel_err"});
    for (const auto& r : rows) {
        csv.row({std::to_string(r.path_id), std::to_string(r.j), format_number(r.t), format_number(r.analytic),
                 format_number(r.fd), format_number(r.rel_err)});
    }
}

} // namespace pbvp
