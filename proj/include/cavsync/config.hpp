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

// config.hpp: run configuration files.
//
// Grammar (one assignment per line):
//   line    := blank | '#' comment | key '=' value
//   key     := section '.' name          e.g. model.gamma, sweep.points
//   value   := scalar | scalar (',' scalar)*
// Whitespace around keys, values and commas is ignored; a '#' starts a comment
// anywhere on a line. Unknown keys are errors. Later assignments win.

#pragma once

#include "cavsync/core.hpp"
#include "cavsync/model.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#ifndef CAVSYNC_VERSION
#define CAVSYNC_VERSION "0.1.0"
#endif

namespace cavsync {

inline constexpr const char* version = CAVSYNC_VERSION;

enum class Method { time_full, time_rwa, steady_exact, rate_R, rate_Rstar, semiclassical };

inline const std::vector<Method>& all_methods() {
    static const std::vector<Method> m{Method::time_full, Method::time_rwa,  Method::steady_exact,
                                       Method::rate_R,    Method::rate_Rstar, Method::semiclassical};
    return m;
}

inline std::string to_string(Method m) {
    switch (m) {
        case Method::time_full: return "time_full";
        case Method::time_rwa: return "time_rwa";
        case Method::steady_exact: return "steady_exact";
        case Method::rate_R: return "rate_R";
        case Method::rate_Rstar: return "rate_Rstar";
        case Method::semiclassical: return "semiclassical";
    }
    return "?";
}

inline Method method_from_string(const std::string& s) {
    for (Method m : all_methods())
        if (to_string(m) == s) return m;
    throw ConfigError("unknown method '" + s + "'");
}

/// Observable columns a sweep can report.
inline std::vector<std::string> known_observables(int q) {
    std::vector<std::string> n{"n", "re_alpha", "im_alpha", "abs_alpha", "Sx", "Sy", "Sz"};
    for (int l = 1; l <= q; ++l)
        for (const char* a : {"Sx", "Sy", "Sz"}) n.push_back(a + std::to_string(l));
    n.push_back("S2");
    if (q == 2) {
        for (const char* a : {"singlet", "negativity", "chsh"}) n.push_back(a);
    }
    n.push_back("tail");
    return n;
}

/// Exact textual form of a double (round-trips through from_chars).
inline std::string format_double(double x) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return ec == std::errc{} ? std::string(buf, p) : std::string("nan");
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline double parse_double(const std::string& key, const std::string& s) {
    double x = 0.0;
    const auto t = trim(s);
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
    if (ec != std::errc{} || p != t.data() + t.size()) throw ConfigError(key + ": not a number: '" + s + "'");
    return x;
}

inline long long parse_int(const std::string& key, const std::string& s) {
    long long x = 0;
    const auto t = trim(s);
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
    if (ec != std::errc{} || p != t.data() + t.size()) throw ConfigError(key + ": not an integer: '" + s + "'");
    return x;
}

inline bool parse_bool(const std::string& key, const std::string& s) {
    const auto t = trim(s);
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    throw ConfigError(key + ": not a boolean: '" + s + "'");
}

inline std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
    return s;
}

inline std::string join(const std::vector<double>& v) {
    std::vector<std::string> s;
    for (double x : v) s.push_back(format_double(x));
    return join(s);
}

}  // namespace detail

using KeyValues = std::map<std::string, std::string>;

/// Reads `key = value` lines. Throws ConfigError with the line number on syntax errors.
inline KeyValues parse_key_values(std::istream& is, const std::string& origin = "<config>") {
    KeyValues kv;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        }
        const auto key = detail::trim(line.substr(0, eq));
        if (key.empty() || key.find('.') == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": key must look like section.name");
        }
        kv[key] = detail::trim(line.substr(eq + 1));
    }
    return kv;
}

inline KeyValues load_key_values(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file " + path);
    return parse_key_values(f, path);
}

/// Frequency sweep. With axis = detuning the endpoints are (omega - omega0) / lambda_1.
struct SweepSpec {
    std::string axis = "detuning";  ///< "detuning" or "omega"
    double start = 0.0;
    double stop = 0.0;
    int points = 1;

    std::vector<double> values() const {
        std::vector<double> v(static_cast<std::size_t>(points));
        for (int i = 0; i < points; ++i)
            v[std::size_t(i)] = points == 1 ? start : start + (stop - start) * double(i) / double(points - 1);
        return v;
    }
    bool operator==(const SweepSpec&) const = default;
};

/// Per-method numerical settings.
struct MethodSettings {
    double steady_tol = 1e-10;
    int steady_max_iter = 4000;
    bool continuation = true;  ///< previous point of the chunk seeds the next solve
    int chunk = 16;            ///< sweep points per work unit (fixed, so results do not depend on threads)
    int rate_max_terms = 60;
    double time_periods = 2000.0;
    double time_rel_tol = 1e-8;
    double time_abs_tol = 1e-10;
    std::string time_stepper = "dopri5";
    int time_samples = 200;
    double time_late_fraction = 0.2;
    double time_relax_tol = 1e-3;
    int semiclassical_starts = 32;
    bool operator==(const MethodSettings&) const = default;
};

struct RunSpec {
    ModelConfig model;
    SweepSpec sweep;
    std::vector<Method> methods;
    std::vector<std::string> observables;  ///< empty: every known observable
    std::string output = "out";
    std::uint64_t seed = 12345;
    int threads = 1;
    MethodSettings settings;

    /// The drive frequencies of the sweep.
    std::vector<double> omegas() const {
        auto v = sweep.values();
        if (sweep.axis == "detuning") {
            const double lam = model.lambda.empty() ? 1.0 : model.lambda.front();
            for (auto& x : v) x = model.omega0 + x * lam;
        }
        return v;
    }

    /// Unit of the detuning axis in plots.
    double axis_unit() const { return model.lambda.empty() || model.lambda.front() == 0.0 ? 1.0 : model.lambda.front(); }

    std::vector<std::string> requested_observables() const {
        return observables.empty() ? known_observables(model.n_qubits()) : observables;
    }

    /// Configuration at drive frequency `omega`.
    ModelConfig at(double omega) const {
        ModelConfig c = model;
        c.omega = omega;
        return c;
    }

    void validate() const {
        model.validate();
        if (sweep.points < 1) throw ConfigError("sweep.points must be >= 1");
        if (sweep.axis != "detuning" && sweep.axis != "omega") throw ConfigError("sweep.axis must be detuning or omega");
        if (methods.empty()) throw ConfigError("run.methods must name at least one method");
        if (threads < 1) throw ConfigError("run.threads must be >= 1");
        if (settings.chunk < 1) throw ConfigError("steady.chunk must be >= 1");
        const auto known = known_observables(model.n_qubits());
        for (const auto& o : observables)
            if (std::find(known.begin(), known.end(), o) == known.end())
                throw ConfigError("unknown observable '" + o + "' for " + std::to_string(model.n_qubits()) + " qubits");
        if (settings.time_stepper != "dopri5" && settings.time_stepper != "rkf78")
            throw ConfigError("time.stepper must be dopri5 or rkf78");
    }

    bool operator==(const RunSpec& o) const {
        const auto a = to_key_values(), b = o.to_key_values();
        return a == b;
    }

    /// Canonical flat form; parse(to_key_values()) reproduces the RunSpec exactly.
    KeyValues to_key_values() const {
        KeyValues kv;
        const int q = model.n_qubits();
        kv["model.n_cav"] = std::to_string(model.space.n_cav());
        kv["model.n_qubits"] = std::to_string(q);
        kv["model.omega0"] = format_double(model.omega0);
        kv["model.F"] = format_double(model.F);
        kv["model.gamma"] = format_double(model.gamma);
        if (q > 0) {
            kv["model.lambda"] = detail::join(model.lambda);
            kv["model.Omega"] = detail::join(model.Omega);
            kv["model.gamma_s"] = detail::join(model.gamma_s);
        }
        kv["sweep.axis"] = sweep.axis;
        kv["sweep.start"] = format_double(sweep.start);
        kv["sweep.stop"] = format_double(sweep.stop);
        kv["sweep.points"] = std::to_string(sweep.points);
        std::vector<std::string> m;
        for (Method x : methods) m.push_back(to_string(x));
        kv["run.methods"] = detail::join(m);
        if (!observables.empty()) kv["run.observables"] = detail::join(observables);
        kv["run.output"] = output;
        kv["run.seed"] = std::to_string(seed);
        const auto& s = settings;
        kv["steady.tol"] = format_double(s.steady_tol);
        kv["steady.max_iter"] = std::to_string(s.steady_max_iter);
        kv["steady.continuation"] = s.continuation ? "true" : "false";
        kv["steady.chunk"] = std::to_string(s.chunk);
        kv["rate.max_terms"] = std::to_string(s.rate_max_terms);
        kv["time.periods"] = format_double(s.time_periods);
        kv["time.rel_tol"] = format_double(s.time_rel_tol);
        kv["time.abs_tol"] = format_double(s.time_abs_tol);
        kv["time.stepper"] = s.time_stepper;
        kv["time.samples"] = std::to_string(s.time_samples);
        kv["time.late_fraction"] = format_double(s.time_late_fraction);
        kv["time.relax_tol"] = format_double(s.time_relax_tol);
        kv["semiclassical.starts"] = std::to_string(s.semiclassical_starts);
        return kv;
    }
};

/// Builds a RunSpec from flat keys. Per-qubit keys accept one value (broadcast)
/// or one per qubit; model.Delta gives qubit splittings relative to model.omega0
/// and is an alternative to model.Omega.
inline RunSpec run_spec_from(const KeyValues& kv) {
    static const std::set<std::string> allowed{
        "model.n_cav",      "model.n_qubits",   "model.omega0",         "model.F",           "model.gamma",
        "model.lambda",     "model.Omega",      "model.Delta",          "model.gamma_s",     "sweep.axis",
        "sweep.start",      "sweep.stop",       "sweep.points",         "run.methods",       "run.observables",
        "run.output",       "run.seed",         "run.threads",          "steady.tol",        "steady.max_iter",
        "steady.continuation", "steady.chunk",  "rate.max_terms",       "time.periods",      "time.rel_tol",
        "time.abs_tol",     "time.stepper",     "time.samples",         "time.late_fraction", "time.relax_tol",
        "semiclassical.starts"};
    for (const auto& [k, v] : kv)
        if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "'");
    if (kv.count("model.Omega") && kv.count("model.Delta"))
        throw ConfigError("give either model.Omega or model.Delta, not both");

    auto get = [&](const std::string& k) -> const std::string* {
        auto it = kv.find(k);
        return it == kv.end() ? nullptr : &it->second;
    };
    auto num = [&](const std::string& k, double def) { return get(k) ? detail::parse_double(k, *get(k)) : def; };
    auto integer = [&](const std::string& k, long long def) { return get(k) ? detail::parse_int(k, *get(k)) : def; };

    RunSpec r;
    const int n_cav = int(integer("model.n_cav", 2));
    const int q = int(integer("model.n_qubits", 0));
    r.model.space = SpaceSpec(n_cav, q);
    r.model.omega0 = num("model.omega0", 0.0);
    r.model.F = num("model.F", 0.0);
    r.model.gamma = num("model.gamma", 0.0);
    auto per_qubit = [&](const std::string& k, double def) {
        std::vector<double> out(std::size_t(q), def);
        if (const auto* v = get(k)) {
            const auto items = detail::split_list(*v);
            if (items.size() == 1) {
                std::fill(out.begin(), out.end(), detail::parse_double(k, items[0]));
            } else if (int(items.size()) == q) {
                for (int l = 0; l < q; ++l) out[std::size_t(l)] = detail::parse_double(k, items[std::size_t(l)]);
            } else {
                throw ConfigError(k + ": expected 1 or " + std::to_string(q) + " values");
            }
        }
        return out;
    };
    r.model.lambda = per_qubit("model.lambda", 0.0);
    r.model.gamma_s = per_qubit("model.gamma_s", 0.0);
    if (get("model.Delta")) {
        r.model.Omega = per_qubit("model.Delta", 0.0);
        for (auto& x : r.model.Omega) x += r.model.omega0;
    } else {
        r.model.Omega = per_qubit("model.Omega", r.model.omega0);
    }
    r.model.omega = r.model.omega0;

    if (const auto* v = get("sweep.axis")) r.sweep.axis = *v;
    r.sweep.start = num("sweep.start", 0.0);
    r.sweep.stop = num("sweep.stop", r.sweep.start);
    r.sweep.points = int(integer("sweep.points", 1));

    if (const auto* v = get("run.methods"))
        for (const auto& m : detail::split_list(*v)) r.methods.push_back(method_from_string(m));
    if (const auto* v = get("run.observables")) r.observables = detail::split_list(*v);
    if (const auto* v = get("run.output")) r.output = *v;
    r.seed = std::uint64_t(integer("run.seed", 12345));
    r.threads = int(integer("run.threads", 1));

    auto& s = r.settings;
    s.steady_tol = num("steady.tol", s.steady_tol);
    s.steady_max_iter = int(integer("steady.max_iter", s.steady_max_iter));
    if (const auto* v = get("steady.continuation")) s.continuation = detail::parse_bool("steady.continuation", *v);
    s.chunk = int(integer("steady.chunk", s.chunk));
    s.rate_max_terms = int(integer("rate.max_terms", s.rate_max_terms));
    s.time_periods = num("time.periods", s.time_periods);
    s.time_rel_tol = num("time.rel_tol", s.time_rel_tol);
    s.time_abs_tol = num("time.abs_tol", s.time_abs_tol);
    if (const auto* v = get("time.stepper")) s.time_stepper = *v;
    s.time_samples = int(integer("time.samples", s.time_samples));
    s.time_late_fraction = num("time.late_fraction", s.time_late_fraction);
    s.time_relax_tol = num("time.relax_tol", s.time_relax_tol);
    s.semiclassical_starts = int(integer("semiclassical.starts", s.semiclassical_starts));
    return r;
}

inline RunSpec load_run_spec(const std::string& path) { return run_spec_from(load_key_values(path)); }

}  // namespace cavsync
