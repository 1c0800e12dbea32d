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

// evolve.hpp: adaptive time integration of the Lindblad equation, both for the
// full drive (counter-rotating terms kept) and for the stationary RWA model.
//
// The full model is integrated in the frame rotating at the drive frequency.
// This is an exact change of frame, U = exp(i w t (a+a + sum_l sz_l/2)), under
// which the full Hamiltonian becomes
//   H(t) = H_R + e^{2iwt} K + e^{-2iwt} K^+,   K = sum_l lambda_l a+ s+_l + F a+,
// and the zero-temperature dissipator is unchanged. Observables are therefore
// directly comparable with the RWA steady state; setting K = 0 gives the RWA.

#pragma once

#include "cavsync/core.hpp"
#include "cavsync/hilbert.hpp"
#include "cavsync/model.hpp"
#include "cavsync/observables.hpp"

#include <boost/numeric/odeint.hpp>

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace cavsync {

enum class Stepper { dopri5, rkf78 };

struct IntegrationPlan {
    double t_end = 0.0;
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    double sample_stride = 0.0;  ///< 0: t_end / 200
    std::optional<CMatrix> initial_state;  ///< default: ground state of the undriven system
    Stepper stepper = Stepper::dopri5;
    /// Trailing fraction of the run used for the relaxation diagnostic and late-time averages.
    double late_fraction = 0.2;

    /// t_end expressed as a number of drive periods 2 pi / omega.
    static IntegrationPlan periods(const ModelConfig& cfg, double n_periods, int samples = 200) {
        IntegrationPlan p;
        p.t_end = n_periods * 2.0 * std::numbers::pi / cfg.omega;
        p.sample_stride = p.t_end / samples;
        return p;
    }

    void validate() const {
        if (!(t_end > 0.0)) throw ConfigError("IntegrationPlan: t_end must be positive");
        if (!(rel_tol > 0.0 && rel_tol < 1.0) || !(abs_tol > 0.0 && abs_tol < 1.0)) {
            throw ConfigError("IntegrationPlan: tolerances must lie in (0, 1)");
        }
        if (sample_stride < 0.0) throw ConfigError("IntegrationPlan: negative sample stride");
    }
};

struct Trajectory {
    std::vector<double> times;
    std::vector<double> drive_phase;  ///< omega t wrapped to (-pi, pi]
    std::vector<std::string> names;   ///< observable names, one column each
    std::vector<std::vector<double>> columns;
    DensityMatrix final_rho;
    double max_trace_drift = 0.0;
    double max_hermiticity_drift = 0.0;
    double min_eigenvalue = 0.0;  ///< over all samples
    /// Per observable: |mean over the last half of the late window - mean over the first half|.
    std::vector<double> relaxation_drift;
    std::size_t rhs_evaluations = 0;

    const std::vector<double>& column(const std::string& name) const {
        for (std::size_t k = 0; k < names.size(); ++k)
            if (names[k] == name) return columns[k];
        throw std::out_of_range("Trajectory: no observable named " + name);
    }

    /// Mean of an observable over the trailing `fraction` of the samples.
    double late_average(const std::string& name, double fraction = 0.2) const {
        const auto& c = column(name);
        const std::size_t n = c.size();
        const std::size_t k0 = n - std::max<std::size_t>(1, std::size_t(fraction * double(n)));
        double s = 0.0;
        for (std::size_t k = k0; k < n; ++k) s += c[k];
        return s / double(n - k0);
    }

    /// CSV: t, drive_phase, each observable.
    void write_csv(std::ostream& os) const {
        os << "t,drive_phase";
        for (const auto& n : names) os << ',' << n;
        os << '\n';
        os.precision(12);
        for (std::size_t i = 0; i < times.size(); ++i) {
            os << times[i] << ',' << drive_phase[i];
            for (const auto& c : columns) os << ',' << c[i];
            os << '\n';
        }
    }
};

namespace detail {

inline double wrap_phase(double x) {
    double r = std::remainder(x, 2.0 * std::numbers::pi);  // [-pi, pi]
    if (r <= -std::numbers::pi) r += 2.0 * std::numbers::pi;
    return r;
}

/// Lindblad right-hand side with optional counter-rotating terms.
class LindbladRhs {
public:
    LindbladRhs(const ModelConfig& cfg, bool counter_rotating)
        : spec_(build_lindblad_rwa(cfg)), d_(cfg.space.dim()), omega_(cfg.omega) {
        if (counter_rotating) {
            const SparseOp ad = build_creation(cfg.space).sparse();
            SparseOp K = cfg.F * ad;
            for (int l = 1; l <= cfg.n_qubits(); ++l) {
                K += SparseOp(cfg.lambda[std::size_t(l - 1)] *
                              (ad * build_qubit_op(cfg.space, l, QubitOp::splus).sparse()));
            }
            K.prune(cplx(0.0));
            if (K.nonZeros() > 0) {
                K_ = K;
                Kd_ = SparseOp(K.adjoint());
            }
        }
        scratch_.resize(d_, d_);
        out_.resize(d_, d_);
        herm_.resize(d_, d_);
    }

    Index dim() const noexcept { return d_; }
    const LindbladSpec& spec() const noexcept { return spec_; }

    void operator()(const std::vector<double>& x, std::vector<double>& dxdt, double t) {
        ++evaluations;
        last_time = t;
        Eigen::Map<const CMatrix> raw(reinterpret_cast<const cplx*>(x.data()), d_, d_);
        Eigen::Map<CMatrix> out(reinterpret_cast<cplx*>(dxdt.data()), d_, d_);
        // The forms below hold only for hermitian input; without this projection the rounding-level
        // antihermitian part is fed back with the wrong sign and grows exponentially.
        herm_ = 0.5 * (raw + raw.adjoint());
        const CMatrix& rho = herm_;
        // G rho with G = -iH(t) - decay/2; the result is X + X^+ + sum r L rho L^+
        out_.noalias() = spec_.effective() * rho;
        if (K_) {
            const cplx ph = std::exp(cplx(0.0, 2.0 * omega_ * t));
            out_.noalias() += (-I_unit * ph) * (*K_ * rho);
            out_.noalias() += (-I_unit * std::conj(ph)) * (*Kd_ * rho);
        }
        out = out_ + out_.adjoint();
        for (const auto& j : spec_.jumps()) {
            scratch_.noalias() = j.op.sparse() * rho;
            out.noalias() += j.rate * (j.op.sparse() * scratch_.adjoint());
        }
    }

    std::size_t evaluations = 0;
    double last_time = 0.0;

private:
    LindbladSpec spec_;
    Index d_;
    double omega_;
    std::optional<SparseOp> K_, Kd_;
    CMatrix scratch_, out_, herm_;
};

inline std::vector<std::string> observable_names(int q) {
    std::vector<std::string> n{"n", "re_alpha", "im_alpha", "Sx", "Sy", "Sz"};
    for (int l = 1; l <= q; ++l) {
        n.push_back("Sx" + std::to_string(l));
        n.push_back("Sy" + std::to_string(l));
        n.push_back("Sz" + std::to_string(l));
    }
    if (q >= 2) n.push_back("S2");
    return n;
}

inline std::vector<double> observable_row(const ObservableSet& o, int q) {
    std::vector<double> r{o.n_mean, o.alpha.real(), o.alpha.imag(), o.Sx_total, o.Sy_total, o.Sz_total};
    for (int l = 0; l < q; ++l) {
        r.push_back(o.Sx[std::size_t(l)]);
        r.push_back(o.Sy[std::size_t(l)]);
        r.push_back(o.Sz[std::size_t(l)]);
    }
    if (q >= 2) r.push_back(o.S2);
    return r;
}

inline Trajectory integrate(const ModelConfig& cfg, const IntegrationPlan& plan, bool counter_rotating) {
    namespace odeint = boost::numeric::odeint;
    cfg.validate();
    plan.validate();
    LindbladRhs rhs(cfg, counter_rotating);
    const Index d = rhs.dim();
    const int q = cfg.n_qubits();

    CMatrix rho0 = plan.initial_state ? *plan.initial_state : CMatrix(CMatrix::Zero(d, d));
    if (!plan.initial_state) rho0(0, 0) = 1.0;  // |0> (x) |down...down>
    if (rho0.rows() != d || rho0.cols() != d) throw DimensionError("integrate: initial state dimension");
    std::vector<double> x(std::size_t(2 * d * d));
    Eigen::Map<CMatrix>(reinterpret_cast<cplx*>(x.data()), d, d) = rho0;

    const double stride = plan.sample_stride > 0.0 ? plan.sample_stride : plan.t_end / 200.0;
    std::vector<double> times;
    for (double t = 0.0; t < plan.t_end - 1e-12 * plan.t_end; t += stride) times.push_back(t);
    times.push_back(plan.t_end);

    Trajectory tr;
    tr.names = observable_names(q);
    tr.columns.assign(tr.names.size(), {});
    tr.min_eigenvalue = std::numeric_limits<double>::infinity();
    auto observer = [&](const std::vector<double>& s, double t) {
        Eigen::Map<const CMatrix> rho(reinterpret_cast<const cplx*>(s.data()), d, d);
        const double trace_drift = std::abs(rho.trace() - cplx(1.0));
        const double herm = hermiticity_defect(rho);
        Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(rho), Eigen::EigenvaluesOnly);
        const double mn = es.eigenvalues().minCoeff();
        tr.max_trace_drift = std::max(tr.max_trace_drift, trace_drift);
        tr.max_hermiticity_drift = std::max(tr.max_hermiticity_drift, herm);
        tr.min_eigenvalue = std::min(tr.min_eigenvalue, mn);
        if (trace_drift > 1e-6 || herm > 1e-6 || mn < -1e-6) {
            throw PhysicalityError("integrate: state left the density-matrix set at t = " + std::to_string(t) +
                                   " (trace drift " + std::to_string(trace_drift) + ", min eigenvalue " +
                                   std::to_string(mn) + ")");
        }
        const auto row = observable_row(expectations(CMatrix(rho), cfg.space), q);
        for (std::size_t k = 0; k < row.size(); ++k) tr.columns[k].push_back(row[k]);
        tr.times.push_back(t);
        tr.drive_phase.push_back(wrap_phase(cfg.omega * t));
    };

    auto sys = std::ref(rhs);
    const double dt0 = std::min(stride, 1e-3 * plan.t_end) * 1e-2;
    try {
        if (plan.stepper == Stepper::dopri5) {
            auto stepper = odeint::make_dense_output(plan.abs_tol, plan.rel_tol,
                                                     odeint::runge_kutta_dopri5<std::vector<double>>());
            odeint::integrate_times(stepper, sys, x, times.begin(), times.end(), dt0, observer);
        } else {
            auto stepper = odeint::make_controlled(plan.abs_tol, plan.rel_tol,
                                                   odeint::runge_kutta_fehlberg78<std::vector<double>>());
            odeint::integrate_times(stepper, sys, x, times.begin(), times.end(), dt0, observer);
        }
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw StiffnessError(std::string("integrate: step size control failed (") + e.what() + ")", rhs.last_time);
    }

    tr.rhs_evaluations = rhs.evaluations;
    CMatrix fin = Eigen::Map<const CMatrix>(reinterpret_cast<const cplx*>(x.data()), d, d);
    tr.final_rho = DensityMatrix(std::move(fin), DensityMatrix::Validate::yes, DensityTolerance{1e-7, 1e-7, -1e-7});

    // relaxation diagnostic: drift between the two halves of the late window
    const std::size_t n = tr.times.size();
    const std::size_t w = std::max<std::size_t>(2, std::size_t(plan.late_fraction * double(n)));
    for (const auto& c : tr.columns) {
        if (n < 4 || w > n) {
            tr.relaxation_drift.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        const std::size_t k0 = n - w, k1 = n - w / 2;
        double a = 0.0, b = 0.0;
        for (std::size_t k = k0; k < k1; ++k) a += c[k];
        for (std::size_t k = k1; k < n; ++k) b += c[k];
        tr.relaxation_drift.push_back(std::abs(b / double(n - k1) - a / double(k1 - k0)));
    }
    return tr;
}

}  // namespace detail

/// Full drive, counter-rotating terms included (rotating-frame representation).
inline Trajectory integrate_full(const ModelConfig& cfg, const IntegrationPlan& plan) {
    return detail::integrate(cfg, plan, true);
}

/// Stationary RWA Lindblad equation.
inline Trajectory integrate_rwa(const ModelConfig& cfg, const IntegrationPlan& plan) {
    return detail::integrate(cfg, plan, false);
}

struct PhaseSample {
    double t = 0.0;
    double theta = 0.0;        ///< arg <S_x + i S_y> in the lab frame, NaN when undefined
    double theta_rot = 0.0;    ///< same in the frame rotating with the drive
    double drive_phase = 0.0;  ///< omega t wrapped to (-pi, pi]
};

/// Phase of the in-plane spin of qubit `qubit` (0 = total) against the drive phase.
/// The rotating-frame phase is the phase relative to the drive; adding omega t
/// gives the lab-frame angle.
inline std::vector<PhaseSample> sync_phase_trace(const Trajectory& tr, double omega, int qubit = 0) {
    const std::string sx = qubit == 0 ? "Sx" : "Sx" + std::to_string(qubit);
    const std::string sy = qubit == 0 ? "Sy" : "Sy" + std::to_string(qubit);
    const auto& x = tr.column(sx);
    const auto& y = tr.column(sy);
    std::vector<PhaseSample> out;
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        PhaseSample p;
        p.t = tr.times[i];
        p.drive_phase = detail::wrap_phase(omega * p.t);
        if (std::hypot(x[i], y[i]) < 1e-12) {
            p.theta = p.theta_rot = std::numeric_limits<double>::quiet_NaN();
        } else {
            p.theta_rot = std::atan2(y[i], x[i]);
            if (p.theta_rot <= -std::numbers::pi) p.theta_rot += 2.0 * std::numbers::pi;
            p.theta = detail::wrap_phase(p.theta_rot + omega * p.t);
        }
        out.push_back(p);
    }
    return out;
}

/// Phase of a single (S_x, S_y) pair; NaN below 1e-12.
inline double spin_phase(double sx, double sy) {
    if (std::hypot(sx, sy) < 1e-12) return std::numeric_limits<double>::quiet_NaN();
    double t = std::atan2(sy, sx);
    if (t <= -std::numbers::pi) t += 2.0 * std::numbers::pi;
    return t;
}

}  // namespace cavsync
