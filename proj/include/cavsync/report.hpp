// Copyright 2026 The cavsync Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// report.hpp: sweep output (sweep.csv, meta.json, cells.jsonl, one SVG per
// observable) and the static `validate` report.

#pragma once

#include "cavsync/config.hpp"
#include "cavsync/semiclassical.hpp"
#include "cavsync/sweep.hpp"

#include <json.hpp>  // vendored nlohmann::json

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace cavsync {

namespace fs = std::filesystem;
using json = nlohmann::json;

class IoError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// CSV

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

/// Columns: omega, then per method its observables, residual, iterations and status.
inline void write_sweep_csv(const SweepResult& r, std::ostream& os) {
    const auto obs = r.spec.requested_observables();
    std::vector<std::string> head{"omega"};
    for (Method m : r.spec.methods) {
        for (const auto& o : obs) head.push_back(to_string(m) + "." + o);
        head.push_back(to_string(m) + ".residual");
        head.push_back(to_string(m) + ".iterations");
        head.push_back(to_string(m) + ".status");
    }
    for (std::size_t k = 0; k < head.size(); ++k) os << (k ? "," : "") << csv_field(head[k]);
    os << "\r\n";
    for (std::size_t i = 0; i < r.points(); ++i) {
        os << format_double(r.omegas[i]);
        for (std::size_t k = 0; k < r.spec.methods.size(); ++k) {
            const auto& c = r.cell(k, i);
            for (const auto& o : obs) os << ',' << format_double(c.value(o));
            os << ',' << format_double(c.residual) << ',' << c.iterations << ',' << csv_field(c.status);
        }
        os << "\r\n";
    }
}

// ---------------------------------------------------------------------------
// JSON

inline json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline double number_from(const json& j) { return j.is_number() ? j.get<double>() : nan_value; }

inline json cell_to_json(const CellResult& c) {
    json v = json::object();
    for (const auto& [k, x] : c.values) v[k] = number_or_null(x);
    return {{"point", c.point},   {"method", to_string(c.method)},  {"omega", c.omega},
            {"values", v},        {"status", c.status},             {"residual", number_or_null(c.residual)},
            {"iterations", c.iterations}, {"tail_warning", c.tail_warning}};
}

inline CellResult cell_from_json(const json& j) {
    CellResult c;
    c.point = j.at("point").get<std::size_t>();
    c.method = method_from_string(j.at("method").get<std::string>());
    c.omega = j.at("omega").get<double>();
    for (const auto& [k, x] : j.at("values").items()) c.values[k] = number_from(x);
    c.status = j.at("status").get<std::string>();
    c.residual = number_from(j.at("residual"));
    c.iterations = j.at("iterations").get<long long>();
    c.tail_warning = j.at("tail_warning").get<bool>();
    c.done = true;
    return c;
}

inline json meta_json(const RunSpec& spec, bool complete, double seconds = 0.0) {
    json cfg = json::object();
    for (const auto& [k, v] : spec.to_key_values()) cfg[k] = v;
    return {{"code_version", version}, {"seed", spec.seed},   {"threads", spec.threads},
            {"complete", complete},    {"wall_seconds", seconds}, {"config", cfg}};
}

/// Reconstructs the RunSpec recorded in a meta.json.
inline RunSpec run_spec_from_meta(const json& meta) {
    KeyValues kv;
    for (const auto& [k, v] : meta.at("config").items()) kv[k] = v.get<std::string>();
    RunSpec r = run_spec_from(kv);
    if (meta.contains("threads")) r.threads = meta.at("threads").get<int>();
    return r;
}

inline json read_json_file(const fs::path& p) {
    std::ifstream f(p);
    if (!f) throw IoError("cannot read " + p.string());
    return json::parse(f);
}

// ---------------------------------------------------------------------------
// SVG

struct PlotStyle {
    std::string color;
    std::string dash;  ///< stroke-dasharray; empty = solid
};

/// solid = exact, dashed = semiclassical, dotted = rate series
inline PlotStyle style_for(Method m) {
    switch (m) {
        case Method::steady_exact: return {"#000000", ""};
        case Method::time_rwa: return {"#1f77b4", ""};
        case Method::time_full: return {"#2ca02c", ""};
        case Method::semiclassical: return {"#d62728", "8,5"};
        case Method::rate_R: return {"#ff7f0e", "2,4"};
        case Method::rate_Rstar: return {"#9467bd", "2,4"};
    }
    return {"#000000", ""};
}

namespace detail {

inline std::vector<double> nice_ticks(double lo, double hi, int target = 6) {
    if (!(hi > lo)) return {lo};
    const double raw = (hi - lo) / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double f : {1.0, 2.0, 2.5, 5.0, 10.0}) {
        step = f * mag;
        if (step >= raw) break;
    }
    std::vector<double> t;
    for (double x = std::ceil(lo / step) * step; x <= hi + 1e-9 * step; x += step) t.push_back(std::abs(x) < 1e-12 * step ? 0.0 : x);
    return t;
}

inline std::string fmt_tick(double x) {
    std::ostringstream s;
    s << std::setprecision(4) << x;
    return s.str();
}

inline std::string xml_escape(const std::string& s) {
    std::string o;
    for (char c : s) {
        switch (c) {
            case '<': o += "&lt;"; break;
            case '>': o += "&gt;"; break;
            case '&': o += "&amp;"; break;
            default: o += c;
        }
    }
    return o;
}

}  // namespace detail

/// One observable versus (omega - omega0)/lambda, methods overlaid.
inline void write_svg(const SweepResult& r, const std::string& obs, std::ostream& os) {
    const double W = 720, H = 440, ml = 70, mr = 150, mt = 30, mb = 55;
    const double unit = r.spec.axis_unit();
    std::vector<double> xs;
    for (double w : r.omegas) xs.push_back((w - r.spec.model.omega0) / unit);
    double xlo = *std::min_element(xs.begin(), xs.end()), xhi = *std::max_element(xs.begin(), xs.end());
    if (xhi == xlo) {
        xlo -= 1;
        xhi += 1;
    }
    double ylo = std::numeric_limits<double>::infinity(), yhi = -ylo;
    for (Method m : r.spec.methods)
        for (double y : r.series(m, obs))
            if (std::isfinite(y)) {
                ylo = std::min(ylo, y);
                yhi = std::max(yhi, y);
            }
    if (!std::isfinite(ylo)) {
        ylo = 0;
        yhi = 1;
    }
    if (yhi - ylo < 1e-12 * std::max(1.0, std::abs(yhi))) {
        ylo -= 0.5;
        yhi += 0.5;
    }
    const double pad = 0.05 * (yhi - ylo);
    ylo -= pad;
    yhi += pad;
    auto X = [&](double x) { return ml + (x - xlo) / (xhi - xlo) * (W - ml - mr); };
    auto Y = [&](double y) { return H - mb - (y - ylo) / (yhi - ylo) * (H - mt - mb); };

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
       << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << W - ml - mr << "\" height=\"" << H - mt - mb
       << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (double t : detail::nice_ticks(xlo, xhi)) {
        os << "<line x1=\"" << X(t) << "\" y1=\"" << H - mb << "\" x2=\"" << X(t) << "\" y2=\"" << H - mb + 5
           << "\" stroke=\"#444\"/><text x=\"" << X(t) << "\" y=\"" << H - mb + 18 << "\" text-anchor=\"middle\">"
           << detail::fmt_tick(t) << "</text>\n";
    }
    for (double t : detail::nice_ticks(ylo, yhi)) {
        os << "<line x1=\"" << ml - 5 << "\" y1=\"" << Y(t) << "\" x2=\"" << ml << "\" y2=\"" << Y(t)
           << "\" stroke=\"#444\"/><text x=\"" << ml - 8 << "\" y=\"" << Y(t) + 4 << "\" text-anchor=\"end\">"
           << detail::fmt_tick(t) << "</text>\n";
    }
    os << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 12
       << "\" text-anchor=\"middle\">(&#969; &#8722; &#969;&#8320;) / &#955;</text>\n";
    os << "<text x=\"16\" y=\"" << (mt + H - mb) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
       << (mt + H - mb) / 2 << ")\">" << detail::xml_escape(obs) << "</text>\n";

    double ly = mt + 10;
    for (Method m : r.spec.methods) {
        const auto st = style_for(m);
        const auto ys = r.series(m, obs);
        std::string dash = st.dash.empty() ? "" : " stroke-dasharray=\"" + st.dash + "\"";
        std::ostringstream path;
        bool pen = false;
        for (std::size_t i = 0; i < ys.size(); ++i) {
            if (!std::isfinite(ys[i])) {
                pen = false;
                continue;
            }
            path << (pen ? " L" : " M") << X(xs[i]) << ' ' << Y(ys[i]);
            pen = true;
        }
        if (!path.str().empty()) {
            os << "<path d=\"" << path.str() << "\" fill=\"none\" stroke=\"" << st.color << "\" stroke-width=\"1.6\""
               << dash << "/>\n";
        }
        if (ys.size() == 1 && std::isfinite(ys[0]))
            os << "<circle cx=\"" << X(xs[0]) << "\" cy=\"" << Y(ys[0]) << "\" r=\"3\" fill=\"" << st.color << "\"/>\n";
        os << "<line x1=\"" << W - mr + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - mr + 40 << "\" y2=\"" << ly
           << "\" stroke=\"" << st.color << "\" stroke-width=\"1.6\"" << dash << "/><text x=\"" << W - mr + 45
           << "\" y=\"" << ly + 4 << "\">" << to_string(m) << "</text>\n";
        ly += 18;
    }
    os << "</svg>\n";
}

// ---------------------------------------------------------------------------
// validate

struct ValidationReport {
    Index dim = 0;
    double bytes_per_matrix = 0.0;
    double working_set_bytes = 0.0;  ///< rough peak for one steady solve
    double solve_flops = 0.0;        ///< ~D^3 per Schur/Sylvester setup
    std::vector<std::string> warnings;
    std::vector<std::string> errors;

    bool ok() const { return errors.empty(); }

    std::string text() const {
        std::ostringstream s;
        s << "dimension D = " << dim << "\n";
        s << "dense matrix: " << bytes_per_matrix / 1048576.0 << " MiB; steady-solve working set ~ "
          << working_set_bytes / 1048576.0 << " MiB; dense solve ~ " << std::scientific << std::setprecision(2)
          << solve_flops << " flops\n";
        for (const auto& w : warnings) s << "warning: " << w << "\n";
        for (const auto& e : errors) s << "error: " << e << "\n";
        s << (ok() ? "ok\n" : "invalid\n");
        return s.str();
    }
};

inline ValidationReport validate_run(const RunSpec& spec) {
    ValidationReport rep;
    try {
        spec.validate();
    } catch (const std::exception& e) {
        rep.errors.push_back(e.what());
        return rep;
    }
    const auto& m = spec.model;
    const Index D = m.space.dim();
    rep.dim = D;
    rep.bytes_per_matrix = 16.0 * double(D) * double(D);
    rep.working_set_bytes = 12.0 * rep.bytes_per_matrix;
    rep.solve_flops = 4.0 * double(D) * double(D) * double(D);
    auto uses = [&](Method x) { return std::find(spec.methods.begin(), spec.methods.end(), x) != spec.methods.end(); };

    if (rep.solve_flops > 1e9)
        rep.warnings.push_back("dense D^3 solves are expensive here (~" + format_double(std::round(rep.solve_flops / 1e8) / 10) +
                               "e9 flops each)");
    if (!m.has_dissipation()) {
        for (Method x : {Method::steady_exact, Method::rate_R, Method::rate_Rstar})
            if (uses(x)) rep.errors.push_back(to_string(x) + ": no damping, so there is no unique steady state");
    }
    double max_rate = m.gamma, min_coupling = std::numeric_limits<double>::infinity();
    for (double g : m.gamma_s) max_rate = std::max(max_rate, g);
    for (double l : m.lambda)
        if (l != 0.0) min_coupling = std::min(min_coupling, std::abs(l));
    if ((uses(Method::rate_R) || uses(Method::rate_Rstar)) && std::isfinite(min_coupling) &&
        max_rate > 0.5 * min_coupling) {
        rep.warnings.push_back("rate series assume damping small compared with the level splittings (damping " +
                               format_double(max_rate) + " vs coupling " + format_double(min_coupling) +
                               "); expect divergence");
    }
    // cavity truncation against the bare driven-cavity amplitude across the sweep
    double amax = 0.0;
    for (double w : spec.omegas()) amax = std::max(amax, std::abs(classical_amplitude(spec.at(w))));
    const double need = amax * amax + 6.0 * amax + 10.0;
    if (m.space.n_cav() < need)
        rep.warnings.push_back("n_cav = " + std::to_string(m.space.n_cav()) + " may truncate the cavity (bare response |alpha| up to " +
                               format_double(std::round(amax * 100) / 100) + "); check the tail column");
    if ((uses(Method::time_full) || uses(Method::time_rwa))) {
        for (double w : spec.omegas())
            if (!(w > 0.0)) {
                rep.errors.push_back("time methods need a positive drive frequency (periods are 2 pi / omega)");
                break;
            }
    }
    if (uses(Method::time_full) && m.omega0 < 5.0 * std::max(1.0, min_coupling))
        rep.warnings.push_back("time_full with small omega0: counter-rotating terms are strong");
    if (uses(Method::semiclassical) && m.n_qubits() > SpaceSpec::max_qubits)
        rep.errors.push_back("semiclassical: at most 4 qubits");
    return rep;
}

// ---------------------------------------------------------------------------
// run into a directory

struct RunOutcome {
    SweepResult result;
    std::vector<fs::path> files;
    std::size_t restored = 0;
};

/// Runs the sweep into spec.output. Completed cells from an earlier run with an
/// identical configuration (cells.jsonl) are reused; the rest are computed.
inline RunOutcome run_to_directory(const RunSpec& spec, bool verbose = false) {
    const fs::path dir(spec.output);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    const fs::path cells_path = dir / "cells.jsonl", meta_path = dir / "meta.json";

    SweepHooks hooks;
    if (fs::exists(meta_path) && fs::exists(cells_path)) {
        try {
            const auto old = read_json_file(meta_path);
            if (run_spec_from_meta(old).to_key_values() == spec.to_key_values()) {
                std::ifstream f(cells_path);
                std::string line;
                while (std::getline(f, line)) {
                    if (line.empty()) continue;
                    try {
                        hooks.restored.push_back(cell_from_json(json::parse(line)));
                    } catch (const std::exception&) {
                        break;  // torn last line of an interrupted run
                    }
                }
            }
        } catch (const std::exception&) {
            hooks.restored.clear();
        }
    }
    {
        std::ofstream m(meta_path);
        if (!m) throw IoError("cannot write " + meta_path.string());
        m << meta_json(spec, false).dump(2) << "\n";
    }
    // rewrite the restored cells so the log only holds cells of this configuration
    std::ofstream log(cells_path, std::ios::trunc);
    if (!log) throw IoError("cannot write " + cells_path.string());
    for (const auto& c : hooks.restored) log << cell_to_json(c).dump() << "\n";
    log.flush();

    const std::size_t total = std::size_t(spec.sweep.points) * spec.methods.size();
    std::size_t seen = hooks.restored.size();
    hooks.on_cell = [&](const CellResult& c) {
        log << cell_to_json(c).dump() << "\n";
        log.flush();
        ++seen;
        if (verbose) {
            std::fprintf(stderr, "[%zu/%zu] %-13s omega=%-12.6g %s\n", seen, total, to_string(c.method).c_str(),
                         c.omega, c.status.c_str());
        }
    };

    const auto t0 = std::chrono::steady_clock::now();
    RunOutcome out;
    out.restored = hooks.restored.size();
    out.result = run_sweep(spec, hooks);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    auto write = [&](const fs::path& p, auto&& fn) {
        std::ofstream f(p, std::ios::binary);
        if (!f) throw IoError("cannot write " + p.string());
        fn(f);
        if (!f) throw IoError("write failed: " + p.string());
        out.files.push_back(p);
    };
    write(dir / "sweep.csv", [&](std::ostream& os) { write_sweep_csv(out.result, os); });
    for (const auto& o : spec.requested_observables())
        write(dir / (o + ".svg"), [&](std::ostream& os) { write_svg(out.result, o, os); });
    write(meta_path, [&](std::ostream& os) { os << meta_json(spec, true, secs).dump(2) << "\n"; });
    return out;
}

}  // namespace cavsync
