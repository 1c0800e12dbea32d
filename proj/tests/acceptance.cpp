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

// Acceptance suite. `cavsync_acceptance --criterion N` runs one criterion and
// prints its sub-checks followed by a single line
//
//     criterion N: PASS|FAIL  <summary>  (<seconds> s)
//
// Exit status is 0 on PASS. Without --criterion every criterion runs in turn.

#include "support.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace cavsync;
using namespace cavsync::testing;

namespace {

class Verdict {
public:
    void check(bool ok, const std::string& name, const std::string& detail) {
        ok_ = ok_ && ok;
        std::printf("  [%s] %s: %s\n", ok ? " ok " : "FAIL", name.c_str(), detail.c_str());
        std::fflush(stdout);
    }
    void note(const std::string& s) {
        std::printf("  note: %s\n", s.c_str());
        std::fflush(stdout);
    }
    bool ok() const { return ok_; }
    std::string summary;

private:
    bool ok_ = true;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// sweeps over an explicit (possibly nonuniform) list of detunings x = omega - omega0

struct Curve {
    std::vector<double> x;
    std::vector<CellResult> cells;

    std::vector<double> get(const std::string& k) const {
        std::vector<double> v;
        for (const auto& c : cells) v.push_back(c.value(k));
        return v;
    }
    std::size_t index_of(double xv) const {
        std::size_t best = 0;
        for (std::size_t i = 1; i < x.size(); ++i)
            if (std::abs(x[i] - xv) < std::abs(x[best] - xv)) best = i;
        return best;
    }
};

RunSpec spec_for(const ModelConfig& m) {
    RunSpec r;
    r.model = m;
    r.settings.steady_tol = 1e-10;
    r.settings.steady_max_iter = 4000;
    r.settings.semiclassical_starts = 32;
    return r;
}

std::map<Method, Curve> sweep(const RunSpec& spec, const std::vector<double>& xs, const std::vector<Method>& methods,
                              const std::string& label) {
    std::map<Method, Curve> out;
    for (Method m : methods) {
        const auto t0 = std::chrono::steady_clock::now();
        Curve c;
        CellCarry carry;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            c.x.push_back(xs[i]);
            c.cells.push_back(compute_cell(spec, i, spec.model.omega0 + xs[i], m, carry));
        }
        std::size_t bad = 0;
        for (const auto& cell : c.cells)
            if (!(cell.status.rfind("converged", 0) == 0 || cell.status.rfind("ok", 0) == 0 || cell.status == "relaxed"))
                ++bad;
        std::printf("  .. %s %s: %zu points, %zu not converged, %.1f s\n", label.c_str(), to_string(m).c_str(),
                    xs.size(), bad, seconds_since(t0));
        std::fflush(stdout);
        out[m] = std::move(c);
    }
    return out;
}

std::vector<double> grid(double a, double b, double step) {
    std::vector<double> v;
    const int n = int(std::lround((b - a) / step));
    for (int i = 0; i <= n; ++i) v.push_back(a + i * step);
    return v;
}

std::vector<double> merged(std::vector<std::vector<double>> parts) {
    std::vector<double> v;
    for (auto& p : parts) v.insert(v.end(), p.begin(), p.end());
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end(), [](double a, double b) { return std::abs(a - b) < 1e-9; }), v.end());
    return v;
}

double dynamic_range(const std::vector<double>& y) {
    const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    return *hi - *lo;
}

double max_tail(const Curve& c) {
    double t = 0.0;
    for (const auto& cell : c.cells)
        if (std::isfinite(cell.value("tail"))) t = std::max(t, cell.value("tail"));
    return t;
}

/// Interior strict local extrema: +1 maximum, -1 minimum.
std::vector<std::pair<std::size_t, int>> extrema(const std::vector<double>& y, std::size_t lo, std::size_t hi) {
    std::vector<std::pair<std::size_t, int>> e;
    for (std::size_t i = std::max<std::size_t>(lo, 1); i + 1 <= hi && i + 1 < y.size(); ++i) {
        const double l = y[i] - y[i - 1], r = y[i + 1] - y[i];
        if (l > 0 && r < 0) e.emplace_back(i, +1);
        if (l < 0 && r > 0) e.emplace_back(i, -1);
    }
    return e;
}

/// Local maxima with topographic prominence >= min_prom.
std::vector<std::size_t> prominent_peaks(const std::vector<double>& y, double min_prom) {
    std::vector<std::size_t> peaks;
    const std::size_t n = y.size();
    for (std::size_t i = 0; i < n; ++i) {
        const bool left_ok = i == 0 || y[i] > y[i - 1];
        const bool right_ok = i + 1 == n || y[i] >= y[i + 1];
        if (!left_ok || !right_ok || i == 0 || i + 1 == n) continue;
        double lmin = y[i], rmin = y[i];
        for (std::size_t j = i; j-- > 0;) {
            if (y[j] > y[i]) break;
            lmin = std::min(lmin, y[j]);
        }
        for (std::size_t j = i + 1; j < n; ++j) {
            if (y[j] > y[i]) break;
            rmin = std::min(rmin, y[j]);
        }
        if (y[i] - std::max(lmin, rmin) >= min_prom) peaks.push_back(i);
    }
    return peaks;
}

std::string join_x(const Curve& c, const std::vector<std::size_t>& idx) {
    std::ostringstream os;
    os << '{';
    for (std::size_t k = 0; k < idx.size(); ++k) os << (k ? ", " : "") << c.x[idx[k]];
    os << '}';
    return os.str();
}

bool converged(const CellResult& c) { return c.status.rfind("converged", 0) == 0; }

// ---------------------------------------------------------------------------

void criterion_1(Verdict& v) {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> uF(0.05, 1.5), uw(-2.0, 2.0), ug(0.1, 2.0);
    double worst_res = 0.0, worst_alpha = 0.0;
    for (int k = 0; k < 20; ++k) {
        auto cfg = cavity_config(2, uF(rng), uw(rng), ug(rng));
        const cplx alpha = classical_amplitude(cfg);
        cfg.space = SpaceSpec(coherent_truncation(alpha), 0);
        SteadyOptions opt;
        opt.tol = 1e-13;
        opt.max_iter = 500;
        const auto rep = steady_state_rwa(cfg, opt);
        const double res = apply_lindblad(build_lindblad_rwa(cfg), rep.rho).norm();
        const auto o = expectations(rep.rho, cfg.space);
        worst_res = std::max(worst_res, res);
        worst_alpha = std::max(worst_alpha, std::abs(o.alpha - alpha));
    }
    v.check(worst_res < 1e-9, "||L(rho)||_F", fmt("max %.2e over 20 cavities (< 1e-9)", worst_res));
    v.check(worst_alpha < 1e-8, "|<a> - alpha|", fmt("max %.2e (< 1e-8)", worst_alpha));
    v.summary = fmt("residual %.1e, amplitude error %.1e", worst_res, worst_alpha);
}

void criterion_2(Verdict& v) {
    std::mt19937_64 rng(202);
    double worst = 0.0;
    int dmax = 0;
    for (int k = 0; k < 30; ++k) {
        const int q = int(rng() % 3);
        const int n_cav = 2 + int(rng() % 7);  // 2..8
        const auto cfg = random_config(n_cav, q, rng);
        dmax = std::max(dmax, int(cfg.space.dim()));
        SteadyOptions opt;
        opt.tol = 1e-13;
        opt.max_iter = 4000;
        const auto rep = steady_state_rwa(cfg, opt);
        const auto oracle = steady_state_dense_oracle(cfg);
        worst = std::max(worst, max_abs(rep.rho.matrix() - oracle.matrix()));
    }
    v.check(worst < 1e-8, "Sylvester vs dense oracle", fmt("max |diff| %.2e over 30 configs, D <= %d (< 1e-8)", worst, dmax));
    v.summary = fmt("max deviation %.1e", worst);
}

void criterion_3(Verdict& v) {
    std::mt19937_64 rng(303);
    double worst_general = 0.0, worst_explicit = 0.0;
    for (int q = 1; q <= 4; ++q) {
        double wq = 0.0;
        for (int k = 0; k < 10; ++k) {
            const auto cfg = random_config(4, q, rng);
            const auto s = random_state(q, rng);
            const double num = numerical_S(s, cfg);
            auto rel = [&](double x) { return std::abs(x - num) / std::max(std::abs(num), 1e-300); };
            wq = std::max({wq, rel(eval_S(s, cfg).S), rel(eval_S_n_qubit(s, cfg).S)});
            if (q == 1) worst_explicit = std::max(worst_explicit, rel(eval_S_one_qubit(s, cfg).S));
            if (q == 2) worst_explicit = std::max(worst_explicit, rel(eval_S_two_qubit(s, cfg).S));
        }
        v.check(wq < 1e-7, fmt("q = %d general form", q), fmt("max relative error %.2e (< 1e-7)", wq));
        worst_general = std::max(worst_general, wq);
    }
    v.check(worst_explicit < 1e-7, "one- and two-qubit explicit forms", fmt("max relative error %.2e (< 1e-7)", worst_explicit));
    v.summary = fmt("max relative error %.1e", std::max(worst_general, worst_explicit));
}

// single qubit, F = lambda, Delta = 2 lambda, gamma = gamma_s = 0.3 lambda
void criterion_4(Verdict& v) {
    auto m = ModelConfig::from_detunings(SpaceSpec(100, 1), 10.0, 0.0, 1.0, 1.0, {2.0}, 0.3, 0.3);
    const double Delta = 2.0, step = 0.025;
    const auto fine = grid(step, Delta - step, step);
    const auto xs = merged({{-4, -3.5, -3, -2.5, -2.25, -2, -1.5, -1, -0.5, -0.25, 0}, fine, {2, 2.25, 2.5, 3, 3.5, 4}});
    const auto res = sweep(spec_for(m), xs, {Method::steady_exact, Method::rate_R, Method::rate_Rstar}, "n_cav 100");
    const Curve& ex = res.at(Method::steady_exact);
    const Curve& rs = res.at(Method::rate_Rstar);
    const Curve& r = res.at(Method::rate_R);
    const auto sx = ex.get("Sx"), sxs = rs.get("Sx");
    v.note(fmt("largest cavity tail occupation %.1e", max_tail(ex)));

    // (a) agreement away from resonance
    double worst = 0.0;
    int far = 0;
    bool exact_ok = true;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (std::abs(xs[i]) <= 2.0 + 1e-9) continue;
        ++far;
        exact_ok = exact_ok && converged(ex.cells[i]);
        const double d = std::abs(sxs[i] - sx[i]);
        worst = std::isfinite(d) ? std::max(worst, d) : INFINITY;
    }
    v.check(worst < 1e-4 && exact_ok, "R* = exact for |x| > 2",
            fmt("max |dSx| %.2e at %d points (< 1e-4)", worst, far));

    // (b) oscillations in (0, Delta): exact extrema where R* is reliable are reproduced by R*
    const std::size_t lo = ex.index_of(0.0), hi = ex.index_of(Delta);
    const auto ext = extrema(sx, lo + 1, hi - 1);
    const auto exr = extrema(sxs, lo + 1, hi - 1);
    auto reliable = [&](std::size_t i) {
        for (std::size_t j = i - 1; j <= i + 1; ++j)
            if (!(rs.cells[j].residual <= 1e-6) || !std::isfinite(sxs[j])) return false;
        return true;
    };
    int n_rel = 0, n_rep = 0;
    std::vector<std::size_t> ext_idx;
    for (auto [i, kind] : ext) {
        ext_idx.push_back(i);
        if (!reliable(i)) continue;
        ++n_rel;
        for (auto [j, k2] : exr)
            if (k2 == kind && (j + 1 >= i && j <= i + 1)) {
                ++n_rep;
                break;
            }
    }
    double dev_rel = 0.0;
    for (std::size_t i = lo + 1; i < hi; ++i)
        if (reliable(i)) dev_rel = std::max(dev_rel, std::abs(sxs[i] - sx[i]));
    v.check(ext.size() >= 2 && n_rel >= 2 && n_rep == n_rel, "multiphoton oscillations in (0, Delta)",
            fmt("exact Sx extrema at %s; %d where R* residual <= 1e-6, %d reproduced within one step; max |dSx| there %.1e",
                join_x(ex, ext_idx).c_str(), n_rel, n_rep, dev_rel));

    // (c) divergence flags
    const std::size_t i0 = ex.index_of(0.0);
    int bad_rs = 0, bad_r = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        bad_rs += !converged(rs.cells[i]);
        bad_r += !converged(r.cells[i]);
    }
    v.check(!converged(rs.cells[i0]), "R* flags divergence at omega = omega0", "status " + rs.cells[i0].status);
    v.check(bad_r > bad_rs, "R fails over a wider band than R*",
            fmt("unconverged points: R %d, R* %d of %zu", bad_r, bad_rs, xs.size()));

    // (d) feature positions against omega - omega0 = Delta / k
    std::vector<double> predicted;
    for (int k = 2; Delta / k > 0.3; ++k) predicted.push_back(Delta / k);
    int hit = 0;
    std::ostringstream miss;
    for (double p : predicted) {
        bool found = false;
        for (auto [i, kind] : ext) found = found || std::abs(xs[i] - p) <= step + 1e-9;
        if (found)
            ++hit;
        else
            miss << ' ' << p;
    }
    v.check(hit == int(predicted.size()), "resonance positions within one grid step of Delta/k",
            fmt("%d of %zu matched; unmatched:%s", hit, predicted.size(), miss.str().c_str()));
    v.summary = fmt("far-field |dSx| %.1e, %d/%d reliable extrema reproduced, %d/%zu positions", worst, n_rep, n_rel, hit,
                    predicted.size());
}

// weak damping: gamma = gamma_s = 0.005 lambda, F = 0.1 lambda
void criterion_5(Verdict& v) {
    auto m = ModelConfig::from_detunings(SpaceSpec(30, 1), 10.0, 0.0, 0.1, 1.0, {2.0}, 0.005, 0.005);
    const double step = 0.25;
    const auto xs = grid(-4.0, 4.0, step);
    const auto res = sweep(spec_for(m), xs, {Method::steady_exact, Method::rate_R}, "weak damping");
    const Curve& ex = res.at(Method::steady_exact);
    const Curve& r = res.at(Method::rate_R);
    v.note(fmt("largest cavity tail occupation %.1e", max_tail(ex)));
    int n_bad = 0, longest = 0, run = 0;
    std::vector<std::size_t> bad;
    double worst = 0.0;
    bool exact_ok = true;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!converged(r.cells[i])) {
            ++n_bad;
            bad.push_back(i);
            longest = std::max(longest, ++run);
            continue;
        }
        run = 0;
        exact_ok = exact_ok && converged(ex.cells[i]);
        for (const char* k : {"Sx", "Sy", "Sz", "n"})
            worst = std::max(worst, std::abs(r.cells[i].value(k) - ex.cells[i].value(k)));
    }
    const double frac = double(xs.size() - std::size_t(n_bad)) / double(xs.size());
    v.check(frac >= 0.8 && longest <= 1, "R converges except at narrow resonances",
            fmt("converged at %zu of %zu points; unconverged at %s (longest run %d point, grid step %.2f)",
                xs.size() - std::size_t(n_bad), xs.size(), join_x(r, bad).c_str(), longest, step));
    v.check(worst < 1e-6 && exact_ok, "converged R = exact", fmt("max |d<Sx,Sy,Sz,n>| %.2e (< 1e-6)", worst));
    v.summary = fmt("R converged at %.0f%% of points, max deviation %.1e", 100 * frac, worst);
}

// strong damping, two qubits: semiclassical vs exact within 2% of each curve's range
void criterion_6(Verdict& v) {
    double worst_all = 0.0;
    for (double F : {1.0, 5.0}) {
        const int n_cav = F < 2 ? 30 : 60;
        auto m = ModelConfig::from_detunings(SpaceSpec(n_cav, 2), 10.0, 0.0, F, 1.0, {2.0, -1.0}, 2.0, 2.0);
        const auto xs = grid(-4.0, 4.0, 0.5);  // contains the qubit resonances x = 2 and x = -1
        const auto res = sweep(spec_for(m), xs, {Method::steady_exact, Method::semiclassical}, fmt("F = %g", F));
        const Curve& ex = res.at(Method::steady_exact);
        const Curve& sc = res.at(Method::semiclassical);
        v.note(fmt("F = %g: n_cav %d, largest cavity tail occupation %.1e", F, n_cav, max_tail(ex)));
        std::ostringstream os;
        double worst = 0.0;
        for (const char* k : {"Sx1", "Sy1", "Sz1", "Sx2", "Sy2", "Sz2", "re_alpha", "im_alpha"}) {
            const auto a = ex.get(k), b = sc.get(k);
            double d = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
            const double rel = d / dynamic_range(a);
            worst = std::max(worst, rel);
            os << ' ' << k << ' ' << fmt("%.1f%%", 100 * rel);
        }
        v.check(worst <= 0.02, fmt("F = %g semiclassical vs exact", F), "max deviation / range:" + os.str());
        worst_all = std::max(worst_all, worst);
    }
    v.summary = fmt("worst deviation %.1f%% of range (limit 2%%)", 100 * worst_all);
}

ModelConfig singlet_model(double gamma_s) {
    return ModelConfig::from_detunings(SpaceSpec(30, 2), 10.0, 0.0, 0.25, 1.0, {1.0, -1.0}, 0.3, gamma_s);
}

void criterion_7(Verdict& v) {
    const auto m = singlet_model(3e-3);
    const auto xs = grid(-2.0, 2.0, 0.1);
    const auto res = sweep(spec_for(m), xs, {Method::steady_exact}, "singlet");
    const Curve& ex = res.at(Method::steady_exact);
    v.note(fmt("largest cavity tail occupation %.1e", max_tail(ex)));
    const auto s2 = ex.get("S2");
    const std::size_t imin = std::size_t(std::min_element(s2.begin(), s2.end()) - s2.begin());
    const double singlet = ex.cells[imin].value("singlet");
    const std::size_t i0 = ex.index_of(0.0);
    const double n0 = ex.cells[i0].value("n"), n_est = 4 * m.F * m.F / (m.gamma * m.gamma);
    v.check(s2[imin] >= 0.4 && s2[imin] <= 0.6, "min <S^2>", fmt("%.4f at x = %.2f (in [0.4, 0.6])", s2[imin], xs[imin]));
    v.check(singlet >= 0.7 && singlet <= 0.8, "singlet probability at the minimum", fmt("%.4f (in [0.70, 0.80])", singlet));
    v.check(std::abs(n0 - n_est) <= 0.3 * n_est, "<n> at resonance", fmt("%.3f vs 4F^2/gamma^2 = %.3f (within 30%%)", n0, n_est));
    // the same point with the smaller qubit damping gamma_s = 1e-3 gamma, for reference
    auto mc = singlet_model(3e-4);
    mc.omega = mc.omega0;
    SteadyOptions opt;
    opt.max_iter = 4000;
    const auto o = expectations(steady_state_rwa(mc, opt).rho, mc.space);
    v.note(fmt("gamma_s = 3e-4: <S^2> %.3f, singlet %.3f, negativity %.3f, <n> %.3f at resonance", o.S2, o.singlet_prob,
               o.negativity, o.n_mean));
    v.summary = fmt("min <S^2> %.3f, singlet %.3f, <n> %.2f", s2[imin], singlet, n0);
}

void criterion_8(Verdict& v) {
    auto m = singlet_model(3e-3);
    m.omega = m.omega0;
    SteadyOptions opt;
    opt.max_iter = 4000;
    const auto rep = steady_state_rwa(m, opt);
    const CMatrix red = partial_trace_cavity(rep.rho.matrix(), m.space);
    const double neg = negativity(red);
    BellSetting search;
    search.sample_count = 20000;
    const auto chsh = chsh_violation(red, search);
    v.check(std::abs(neg - 0.36) <= 0.02, "negativity at resonance", fmt("%.4f (0.36 +- 0.02)", neg));
    v.check(chsh.value > 2.0, "CHSH search", fmt("|CHSH| %.4f (> 2); optimum 2 sqrt(t1^2 + t2^2) = %.4f", chsh.value,
                                                  chsh_optimum(red)));
    v.check(chsh.rotation_deg >= 20.0 && chsh.rotation_deg <= 25.0, "optimal setting rotation",
            fmt("%.1f deg (in [20, 25]; 45 for a pure singlet); angle of the found a-b pair %.1f deg", chsh.rotation_deg,
                chsh.setting_angle_deg));
    const CVector s = singlet_vector();
    const CMatrix singlet = s * s.adjoint();
    const double sv = chsh_violation(singlet, search).value, sn = negativity(singlet);
    v.check(std::abs(sv - 2 * std::numbers::sqrt2) <= 1e-9, "pure singlet CHSH", fmt("%.12f (2 sqrt 2 +- 1e-9)", sv));
    v.check(std::abs(sn - 0.5) <= 1e-10, "pure singlet negativity", fmt("%.12f (0.5 +- 1e-10)", sn));
    v.summary = fmt("negativity %.3f, CHSH %.3f, rotation %.1f deg", neg, chsh.value, chsh.rotation_deg);
}

// full time-dependent model against the RWA steady state at omega0 = 10 and 30
void criterion_9(Verdict& v) {
    const std::vector<double> xs{-3, -2.5, -2, -1.5, -1, 1, 1.5, 2, 2.5, 3};
    v.note("sweep skips |x| < 1, where <n> reaches ~30 and the gamma_s = 0 steady solve does not converge");
    std::map<double, std::vector<std::array<double, 3>>> full;
    std::vector<std::array<double, 3>> rwa;
    for (double x : xs) {
        // smallest truncation whose RWA tail is negligible
        int n_cav = 12;
        ModelConfig m;
        ObservableSet o;
        for (;; n_cav += 4) {
            if (n_cav > 48) throw Error(fmt("no truncation up to 48 levels resolves x = %g", x));
            m = ModelConfig::from_detunings(SpaceSpec(n_cav, 1), 10.0, x, 1.0, 1.0, {2.0}, 0.3, 0.0);
            SteadyOptions opt;
            opt.max_iter = 4000;
            const auto rep = steady_state_rwa(m, opt);
            if (!rep.converged) throw Error(fmt("RWA steady state did not converge at x = %g", x));
            o = expectations(rep.rho, m.space);
            if (o.tail < 1e-9) break;
        }
        rwa.push_back({o.Sx_total, o.Sz_total, o.n_mean});
        for (double w0 : {10.0, 30.0}) {
            const auto t0 = std::chrono::steady_clock::now();
            auto mf = ModelConfig::from_detunings(SpaceSpec(n_cav, 1), w0, x, 1.0, 1.0, {2.0}, 0.3, 0.0);
            auto plan = IntegrationPlan::periods(mf, 5000.0, 200);
            plan.rel_tol = 1e-6;
            plan.abs_tol = 1e-8;
            const auto tr = integrate_full(mf, plan);
            full[w0].push_back({tr.late_average("Sx"), tr.late_average("Sz"), tr.late_average("n")});
            std::printf("  .. x = %g, omega0 = %g, n_cav %d: Sx %.4f (RWA %.4f), drift %.1e, %.0f s\n", x, w0, n_cav,
                        full[w0].back()[0], o.Sx_total, tr.relaxation_drift[3], seconds_since(t0));
            std::fflush(stdout);
        }
    }
    const char* names[] = {"Sx", "Sz", "n"};
    bool all = true;
    std::ostringstream os;
    for (int k = 0; k < 3; ++k) {
        double d[2] = {0, 0};
        int j = 0;
        for (double w0 : {10.0, 30.0}) {
            for (std::size_t i = 0; i < xs.size(); ++i) {
                const double h = i + 1 < xs.size() ? xs[i + 1] - xs[i] : xs[i] - xs[i - 1];
                d[j] += h * std::pow(full[w0][i][std::size_t(k)] - rwa[i][std::size_t(k)], 2);
            }
            d[j] = std::sqrt(d[j]);
            ++j;
        }
        v.check(d[1] < d[0], fmt("L2 distance to RWA, <%s>", names[k]), fmt("omega0 = 10: %.3e, omega0 = 30: %.3e", d[0], d[1]));
        all = all && d[1] < d[0];
        os << names[k] << fmt(" %.2e -> %.2e ", d[0], d[1]);
    }
    v.summary = os.str();
}

// several detuned qubits: synchronization peaks
void criterion_10(Verdict& v) {
    const std::vector<double> Deltas{1.0, 1.5, 2.0, 2.5};
    const auto xs = grid(-2.5, 4.0, 0.25);
    std::vector<double> height, second, sc_height, band;
    bool sc_same = true, rs_match = true;
    double feature_tail = 0.0;
    for (int q = 1; q <= 4; ++q) {
        auto m = ModelConfig::from_detunings(SpaceSpec(40, q), 10.0, 0.0, 0.77, 1.0,
                                             std::vector<double>(Deltas.begin(), Deltas.begin() + q), 0.2, 0.2);
        const auto res = sweep(spec_for(m), xs, {Method::steady_exact, Method::rate_Rstar, Method::semiclassical},
                               fmt("q = %d", q));
        const Curve& ex = res.at(Method::steady_exact);
        const Curve& rs = res.at(Method::rate_Rstar);
        const Curve& sc = res.at(Method::semiclassical);
        v.note(fmt("q = %d: largest cavity tail occupation %.1e", q, max_tail(ex)));
        const auto sx = ex.get("Sx"), sxs = sc.get("Sx"), sxr = rs.get("Sx");

        auto window_peak = [&](const std::vector<double>& y, const std::vector<std::size_t>& peaks, double a, double b,
                               double& where) {
            double best = -INFINITY;
            where = NAN;
            for (std::size_t i : peaks)
                if (xs[i] >= a - 1e-9 && xs[i] <= b + 1e-9 && y[i] > best) best = y[i], where = xs[i];
            return best;
        };
        const auto pk = prominent_peaks(sx, 0.1), pks = prominent_peaks(sxs, 0.1);
        // the cavity is nearly resonant around x = 0 and <n> exceeds what 40 levels hold there;
        // the peaks must lie where the truncation is harmless
        for (std::size_t i : pk)
            for (std::size_t j = i - 1; j <= i + 1; ++j) feature_tail = std::max(feature_tail, ex.cells[j].value("tail"));
        double w1, w2, s1, s2;
        height.push_back(window_peak(sx, pk, -2.5, 0.5, w1));
        const double h2 = window_peak(sx, pk, 1.5, 3.5, w2);
        second.push_back(w2);
        sc_height.push_back(window_peak(sxs, pks, -2.5, 0.5, s1));
        window_peak(sxs, pks, 1.5, 3.5, s2);
        const bool same = pk.size() == pks.size() && std::isfinite(w1) == std::isfinite(s1) &&
                          std::isfinite(w2) == std::isfinite(s2);
        sc_same = sc_same && same;

        // R*: unconverged band around resonance, agreement elsewhere
        const std::size_t i0 = ex.index_of(0.0);
        std::size_t a = i0, b = i0;
        if (!converged(rs.cells[i0])) {
            while (a > 0 && !converged(rs.cells[a - 1])) --a;
            while (b + 1 < xs.size() && !converged(rs.cells[b + 1])) ++b;
            band.push_back(xs[b] - xs[a] + 0.25);
        } else {
            band.push_back(0.0);
        }
        double dev = 0.0;
        int outside_bad = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (i >= a && i <= b && !converged(rs.cells[i0])) continue;
            if (!converged(rs.cells[i])) {
                ++outside_bad;
                continue;
            }
            dev = std::max(dev, std::abs(sxr[i] - sx[i]));
        }
        rs_match = rs_match && dev < 1e-4;
        std::printf("  .. q = %d: exact peaks at %s (resonance %.3f at %g, second %.3f at %g); semiclassical peaks at %s; "
                    "R* band [%g, %g], %d unconverged points outside it, max |dSx| on converged points %.1e\n",
                    q, join_x(ex, pk).c_str(), height.back(), w1, h2, w2, join_x(sc, pks).c_str(), xs[a], xs[b],
                    outside_bad, dev);
        std::fflush(stdout);
    }
    bool grow = true, shift = true, in_range = true, sc_grow = true, widen = true;
    for (std::size_t k = 0; k < 4; ++k) {
        in_range = in_range && second[k] >= 2.0 - 1e-9 && second[k] <= 3.0 + 1e-9;
        if (k == 0) continue;
        grow = grow && height[k] > height[k - 1];
        shift = shift && second[k] >= second[k - 1];
        sc_grow = sc_grow && sc_height[k] > sc_height[k - 1];
        widen = widen && band[k] >= band[k - 1];
    }
    shift = shift && second[3] > second[0];
    widen = widen && band[3] > band[0];
    v.check(feature_tail < 1e-6, "truncation at the peaks", fmt("largest cavity tail at a peak or its neighbours %.1e (< 1e-6)", feature_tail));
    v.check(grow, "resonance peak height grows with q",
            fmt("%.3f, %.3f, %.3f, %.3f", height[0], height[1], height[2], height[3]));
    v.check(in_range && shift, "second peak in [2, 3], moving up with q",
            fmt("at %g, %g, %g, %g", second[0], second[1], second[2], second[3]));
    v.check(sc_same && sc_grow, "semiclassical: same peaks, same ordering",
            fmt("peak sets match: %s; resonance heights %.3f, %.3f, %.3f, %.3f", sc_same ? "yes" : "no", sc_height[0],
                sc_height[1], sc_height[2], sc_height[3]));
    v.check(rs_match, "R* = exact where converged", "see per-q lines (< 1e-4)");
    v.check(widen, "R* divergence band widens with q",
            fmt("widths %.2f, %.2f, %.2f, %.2f", band[0], band[1], band[2], band[3]));
    v.summary = fmt("peaks %.2f..%.2f, second peak %g..%g, R* band %.2f..%.2f", height[0], height[3], second[0], second[3],
                    band[0], band[3]);
}

// weak coupling: lambda = gamma / 2, gamma_s = gamma, F = 2.2 gamma (gamma = 1)
void criterion_11(Verdict& v) {
    const std::vector<double> Deltas{10.0, 15.0, 12.5, 17.5};
    const auto xs = grid(-20.0, 40.0, 2.0);
    double worst = 0.0;
    for (int q : {2, 4}) {
        // <n> reaches ~20 at resonance; 56 levels keep the tail below 1e-6
        auto m = ModelConfig::from_detunings(SpaceSpec(56, q), 50.0, 0.0, 2.2, 0.5,
                                             std::vector<double>(Deltas.begin(), Deltas.begin() + q), 1.0, 1.0);
        const auto res = sweep(spec_for(m), xs, {Method::steady_exact, Method::semiclassical}, fmt("q = %d", q));
        const Curve& ex = res.at(Method::steady_exact);
        v.note(fmt("q = %d: largest cavity tail occupation %.1e", q, max_tail(ex)));
        const auto a = ex.get("Sx"), b = res.at(Method::semiclassical).get("Sx");
        double d = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
        const double rel = d / dynamic_range(a);
        v.check(rel <= 0.01, fmt("q = %d total Sx", q), fmt("max deviation %.2e = %.2f%% of range %.3f (limit 1%%)", d,
                                                            100 * rel, dynamic_range(a)));
        worst = std::max(worst, rel);
    }
    v.summary = fmt("worst deviation %.2f%% of range", 100 * worst);
}

// Bell violation against drive strength, <n> = 4F^2/gamma^2 at resonance
void criterion_12(Verdict& v) {
    const double gamma = 0.025;
    const std::vector<double> ns{1, 2, 3, 4, 6, 10};
    const auto xs = grid(-0.1, 0.1, 0.01);
    std::vector<double> best;
    for (double n : ns) {
        const double F = 0.5 * gamma * std::sqrt(n);
        auto m = ModelConfig::from_detunings(SpaceSpec(30, 2), 10.0, 0.0, F, 1.0, {0.5, -0.5}, gamma, 0.02 * gamma);
        const auto res = sweep(spec_for(m), xs, {Method::steady_exact}, fmt("<n> = %g", n));
        const Curve& ex = res.at(Method::steady_exact);
        const auto chsh = ex.get("chsh");
        const std::size_t i = std::size_t(std::max_element(chsh.begin(), chsh.end()) - chsh.begin());
        best.push_back(chsh[i]);
        std::printf("  .. <n> = %g (F = %.5f): max CHSH %.4f at x = %.2f, tail %.1e\n", n, F, chsh[i], xs[i], max_tail(ex));
        std::fflush(stdout);
    }
    const std::size_t k = std::size_t(std::max_element(best.begin(), best.end()) - best.begin());
    bool decreasing = true;
    for (std::size_t j = k + 1; j < ns.size(); ++j) decreasing = decreasing && best[j] < best[j - 1];
    v.check(ns[k] >= 2 && ns[k] <= 4, "CHSH maximum near <n> = 3", fmt("largest at <n> = %g", ns[k]));
    v.check(decreasing && k + 1 < ns.size(), "violation decreases for stronger drive",
            fmt("max CHSH by <n>: %.4f %.4f %.4f %.4f %.4f %.4f", best[0], best[1], best[2], best[3], best[4], best[5]));
    v.summary = fmt("peak at <n> = %g", ns[k]);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cavsync acceptance suite"};
    int only = 0;
    app.add_option("--criterion", only, "run a single criterion (1-12)")->check(CLI::Range(1, 12));
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<std::string, std::function<void(Verdict&)>>> criteria{
        {"driven cavity exactness", criterion_1},     {"dense oracle equivalence", criterion_2},
        {"semiclassical functional identity", criterion_3}, {"rate series, multiphoton regime", criterion_4},
        {"rate series, weak damping", criterion_5},   {"semiclassical, strong damping", criterion_6},
        {"singlet formation", criterion_7},           {"entanglement metrics", criterion_8},
        {"RWA validity trend", criterion_9},          {"multi-qubit synchronization", criterion_10},
        {"weak-coupling semiclassical limit", criterion_11}, {"Bell violation vs drive", criterion_12}};
    const std::map<int, double> time_limit{{1, 10.0}, {2, 60.0}, {3, 120.0}};

    bool all = true;
    for (int n = 1; n <= 12; ++n) {
        if (only != 0 && n != only) continue;
        std::printf("criterion %d (%s)\n", n, criteria[std::size_t(n - 1)].first.c_str());
        std::fflush(stdout);
        Verdict v;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            criteria[std::size_t(n - 1)].second(v);
        } catch (const std::exception& e) {
            v.check(false, "exception", e.what());
        }
        const double dt = seconds_since(t0);
        if (auto it = time_limit.find(n); it != time_limit.end())
            v.check(dt < it->second, "runtime", fmt("%.1f s (< %.0f s)", dt, it->second));
        std::printf("criterion %d: %s  %s  (%.1f s)\n", n, v.ok() ? "PASS" : "FAIL", v.summary.c_str(), dt);
        std::fflush(stdout);
        all = all && v.ok();
    }
    return all ? 0 : 1;
}
