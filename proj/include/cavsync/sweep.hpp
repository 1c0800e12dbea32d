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

// sweep.hpp: frequency sweeps over (drive frequency, method) cells.
//
// Work is cut into fixed chunks of consecutive points per method; a chunk runs
// sequentially (so a steady solve can start from its neighbour's state) and
// chunks are handed to a small worker pool. Chunk boundaries do not depend on
// the thread count, which keeps results bit-identical for any --threads.

#pragma once

#include "cavsync/config.hpp"
#include "cavsync/evolve.hpp"
#include "cavsync/observables.hpp"
#include "cavsync/rate.hpp"
#include "cavsync/semiclassical.hpp"
#include "cavsync/steady.hpp"

#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace cavsync {

inline constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

/// One (drive frequency, method) cell.
struct CellResult {
    std::size_t point = 0;
    Method method = Method::steady_exact;
    double omega = 0.0;
    std::map<std::string, double> values;  ///< every known observable; NaN when not available
    std::string status;                     ///< never empty once computed
    double residual = nan_value;            ///< method-specific, see README
    long long iterations = 0;
    bool tail_warning = false;
    bool done = false;

    double value(const std::string& name) const {
        auto it = values.find(name);
        return it == values.end() ? nan_value : it->second;
    }
};

/// Carried from one point of a chunk to the next.
struct CellCarry {
    std::optional<CMatrix> rho;
    std::optional<SemiclassicalState> semiclassical;
};

namespace detail {

inline void fill_from(const ObservableSet& o, int q, std::map<std::string, double>& v) {
    v["n"] = o.n_mean;
    v["re_alpha"] = o.alpha.real();
    v["im_alpha"] = o.alpha.imag();
    v["abs_alpha"] = std::abs(o.alpha);
    v["Sx"] = o.Sx_total;
    v["Sy"] = o.Sy_total;
    v["Sz"] = o.Sz_total;
    for (int l = 1; l <= q; ++l) {
        v["Sx" + std::to_string(l)] = o.Sx[std::size_t(l - 1)];
        v["Sy" + std::to_string(l)] = o.Sy[std::size_t(l - 1)];
        v["Sz" + std::to_string(l)] = o.Sz[std::size_t(l - 1)];
    }
    v["S2"] = o.S2;
    if (q == 2) {
        v["singlet"] = o.singlet_prob;
        v["negativity"] = o.negativity;
        v["chsh"] = o.chsh_max;
    }
    v["tail"] = o.tail;
}

inline void fill_nan(int q, std::map<std::string, double>& v) {
    for (const auto& k : known_observables(q)) v[k] = nan_value;
}

inline std::uint64_t cell_seed(std::uint64_t seed, std::size_t point) {
    // splitmix64 step
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (point + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline void run_steady(const RunSpec& spec, const ModelConfig& cfg, CellResult& c, CellCarry& carry) {
    SteadyOptions opt;
    opt.tol = spec.settings.steady_tol;
    opt.max_iter = spec.settings.steady_max_iter;
    if (spec.settings.continuation && carry.rho) opt.initial_guess = carry.rho;
    auto rep = steady_state_rwa(cfg, opt);
    c.residual = rep.residual;
    c.iterations = rep.iterations;
    const auto o = expectations(rep.rho, cfg.space);
    fill_from(o, cfg.n_qubits(), c.values);
    c.tail_warning = o.tail > tail_warning_threshold;
    c.status = rep.converged ? "converged" : "not_converged";
    if (rep.converged) carry.rho = rep.rho.matrix();
}

inline void run_rate(const RunSpec& spec, const ModelConfig& cfg, SeriesVariant variant, CellResult& c) {
    try {
        auto rep = sum_series(cfg, variant, spec.settings.rate_max_terms);
        c.residual = rep.best_residual();
        c.iterations = rep.terms_used;
        c.status = to_string(rep.status);
        if (rep.status == SeriesStatus::diverged_immediately) {
            fill_nan(cfg.n_qubits(), c.values);
            return;
        }
        const auto o = expectations(rep.rho, cfg.space);
        fill_from(o, cfg.n_qubits(), c.values);
        c.tail_warning = o.tail > tail_warning_threshold;
    } catch (const SmallDenominatorError& e) {
        fill_nan(cfg.n_qubits(), c.values);
        c.status = "small_denominator";
    }
}

inline void run_semiclassical(const RunSpec& spec, const ModelConfig& cfg, CellResult& c, CellCarry& carry) {
    MinimizeOptions opt;
    opt.starts = spec.settings.semiclassical_starts;
    opt.seed = cell_seed(spec.seed, c.point);
    if (spec.settings.continuation && carry.semiclassical) opt.extra_starts.push_back(*carry.semiclassical);
    const auto res = minimize_S(cfg, opt);
    const int q = cfg.n_qubits();
    if (!res.ok) {
        fill_nan(q, c.values);
        c.status = "optimization_failed";
        return;
    }
    carry.semiclassical = res.best;
    const auto o = semiclassical_observables(res.best);
    auto& v = c.values;
    v["n"] = o.n_mean;
    v["re_alpha"] = o.alpha.real();
    v["im_alpha"] = o.alpha.imag();
    v["abs_alpha"] = std::abs(o.alpha);
    v["Sx"] = o.Sx_total;
    v["Sy"] = o.Sy_total;
    v["Sz"] = o.Sz_total;
    for (int l = 1; l <= q; ++l) {
        v["Sx" + std::to_string(l)] = o.Sx[std::size_t(l - 1)];
        v["Sy" + std::to_string(l)] = o.Sy[std::size_t(l - 1)];
        v["Sz" + std::to_string(l)] = o.Sz[std::size_t(l - 1)];
    }
    v["S2"] = o.S2;
    if (q == 2) {
        const CMatrix red = spin_product_state(res.best);
        const CVector sv = singlet_vector();
        v["singlet"] = sv.dot(red * sv).real();
        v["negativity"] = negativity(red);
        v["chsh"] = chsh_optimum(red);
    }
    v["tail"] = nan_value;
    c.residual = res.value.S;
    c.iterations = (long long)res.minima.size();
    c.status = res.minima.size() > 1 ? "ok:multiple_minima" : "ok";
}

inline void run_time(const RunSpec& spec, const ModelConfig& cfg, bool full, CellResult& c) {
    const auto& s = spec.settings;
    auto plan = IntegrationPlan::periods(cfg, s.time_periods, s.time_samples);
    plan.rel_tol = s.time_rel_tol;
    plan.abs_tol = s.time_abs_tol;
    plan.stepper = s.time_stepper == "rkf78" ? Stepper::rkf78 : Stepper::dopri5;
    plan.late_fraction = s.time_late_fraction;
    const int q = cfg.n_qubits();
    try {
        const auto tr = full ? integrate_full(cfg, plan) : integrate_rwa(cfg, plan);
        // entanglement and tail from the final state, linear observables as late-time averages
        const auto o = expectations(tr.final_rho, cfg.space);
        fill_from(o, q, c.values);
        for (const auto& name : tr.names) c.values[name] = tr.late_average(name, s.time_late_fraction);
        c.values["abs_alpha"] = std::hypot(c.values["re_alpha"], c.values["im_alpha"]);
        double drift = 0.0;
        for (double d : tr.relaxation_drift)
            if (std::isfinite(d)) drift = std::max(drift, d);
        c.residual = drift;
        c.iterations = (long long)tr.rhs_evaluations;
        c.tail_warning = o.tail > tail_warning_threshold;
        c.status = drift <= s.time_relax_tol ? "relaxed" : "not_relaxed";
    } catch (const StiffnessError& e) {
        fill_nan(q, c.values);
        c.status = "stiff";
    } catch (const PhysicalityError& e) {
        fill_nan(q, c.values);
        c.status = "unphysical";
    }
}

}  // namespace detail

/// Computes one cell. Failures are recorded in the status, never thrown.
inline CellResult compute_cell(const RunSpec& spec, std::size_t point, double omega, Method m, CellCarry& carry) {
    CellResult c;
    c.point = point;
    c.method = m;
    c.omega = omega;
    const ModelConfig cfg = spec.at(omega);
    try {
        switch (m) {
            case Method::steady_exact: detail::run_steady(spec, cfg, c, carry); break;
            case Method::rate_R: detail::run_rate(spec, cfg, SeriesVariant::r, c); break;
            case Method::rate_Rstar: detail::run_rate(spec, cfg, SeriesVariant::r_star, c); break;
            case Method::semiclassical: detail::run_semiclassical(spec, cfg, c, carry); break;
            case Method::time_rwa: detail::run_time(spec, cfg, false, c); break;
            case Method::time_full: detail::run_time(spec, cfg, true, c); break;
        }
    } catch (const std::exception& e) {
        detail::fill_nan(cfg.n_qubits(), c.values);
        c.status = std::string("error: ") + e.what();
    }
    if (c.tail_warning) c.status += ";tail_warning";
    c.done = true;
    return c;
}

struct SweepResult {
    RunSpec spec;
    std::vector<double> omegas;
    std::vector<CellResult> cells;  ///< method-major: cells[m * points + i]
    std::size_t computed = 0;       ///< cells evaluated in this invocation (the rest were restored)

    std::size_t points() const { return omegas.size(); }
    const CellResult& cell(std::size_t method_index, std::size_t point) const {
        return cells[method_index * points() + point];
    }
    const CellResult& cell(Method m, std::size_t point) const {
        for (std::size_t k = 0; k < spec.methods.size(); ++k)
            if (spec.methods[k] == m) return cell(k, point);
        throw std::out_of_range("SweepResult: method not in sweep");
    }
    std::vector<double> series(Method m, const std::string& obs) const {
        std::vector<double> v;
        for (std::size_t i = 0; i < points(); ++i) v.push_back(cell(m, i).value(obs));
        return v;
    }
};

struct SweepHooks {
    /// Cells already known (restart); indexed like SweepResult::cells.
    std::vector<CellResult> restored;
    /// Called under a lock after every computed cell.
    std::function<void(const CellResult&)> on_cell;
};

/// Evaluates every missing cell of the sweep.
inline SweepResult run_sweep(const RunSpec& spec, const SweepHooks& hooks = {}) {
    spec.validate();
    SweepResult res;
    res.spec = spec;
    res.omegas = spec.omegas();
    const std::size_t np = res.omegas.size(), nm = spec.methods.size();
    res.cells.resize(np * nm);
    for (const auto& c : hooks.restored) {
        for (std::size_t k = 0; k < nm; ++k) {
            if (spec.methods[k] == c.method && c.point < np && c.done) res.cells[k * np + c.point] = c;
        }
    }

    struct Unit {
        std::size_t method_index, begin, end;
    };
    std::vector<Unit> units;
    const auto chunk = std::size_t(spec.settings.chunk);
    for (std::size_t k = 0; k < nm; ++k)
        for (std::size_t b = 0; b < np; b += chunk) units.push_back({k, b, std::min(np, b + chunk)});

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> computed{0};
    std::mutex mu;
    auto worker = [&] {
        for (std::size_t u = next++; u < units.size(); u = next++) {
            const auto& unit = units[u];
            CellCarry carry;
            for (std::size_t i = unit.begin; i < unit.end; ++i) {
                auto& slot = res.cells[unit.method_index * np + i];
                if (slot.done) {
                    carry = {};  // restored cells carry no state
                    continue;
                }
                CellResult c = compute_cell(spec, i, res.omegas[i], spec.methods[unit.method_index], carry);
                ++computed;
                std::lock_guard<std::mutex> lock(mu);
                slot = std::move(c);
                if (hooks.on_cell) hooks.on_cell(slot);
            }
        }
    };
    const int nt = std::max(1, std::min<int>(spec.threads, int(units.size())));
    if (nt == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    res.computed = computed;
    return res;
}

}  // namespace cavsync
