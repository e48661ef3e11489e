#ifndef PHASECORR_SDE_HPP
#define PHASECORR_SDE_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <phasecorr/phase_space.hpp>
#include <phasecorr/rng.hpp>

namespace phasecorr {

// One full-step noise block, scaled to the white-noise convention:
// xi, xi_tilde real with variance 1/dt; eta complex with <eta eta*> = 1/dt,
// <eta eta> = 0. Drawn once per dt step and reused by every midpoint
// evaluation inside that step (the weak corrections assume exactly this).
struct NoiseBlock {
    Eigen::VectorXd xi;       // M, multiplicative channel of alpha
    Eigen::VectorXd xi_tilde; // M, multiplicative channel of beta
    Eigen::VectorXcd eta;     // M, additive thermal channel

    void resize(int modes) {
        xi.resize(modes);
        xi_tilde.resize(modes);
        eta.resize(modes);
    }
    void set_zero() {
        xi.setZero();
        xi_tilde.setZero();
        eta.setZero();
    }
};

struct NoiseKind {
    enum class Family { gaussian, binomial } family = Family::gaussian;
    int n_b = 4; // uniforms per binomial draw
};

// Standard-normal layout per (trajectory, step): [0..M) xi, [M..2M) xi_tilde,
// [2M..4M) eta real/imag pairs. 'scale' converts a standard normal into the
// variance-1/dt convention.
void draw_noise(const TrajectoryStream& stream, int modes, double dt, std::uint64_t step,
                const NoiseKind& kind, NoiseBlock& out);

// Term split of one variable's derivative: D = e*v + r + l, with e treated
// exponentially, r as the non-exponential rest and l strictly linearly.
enum class Propagator { exponential, euler };

struct StepConfig {
    double dt = 0.01;
    int midpoint_iterations = 1;
    Propagator propagator = Propagator::exponential;
    double escape_cap = 1e10;
    NoiseKind noise;
};

// Analytic one-substep solution for frozen coefficients:
//   v' = v0 e^{tau e} + (e^{tau e} - 1) r / e + l tau,
// with a series branch below |tau e| < 1e-6 to avoid cancellation, which also
// covers the Euler limit e -> 0: v' = v0 + (r + l) tau.
// The euler propagator reproduces the plain midpoint container:
//   v' = v0 + tau (e * v_eval + r + l), v_eval the evaluation-point value.
inline Complex propagate_substep(Complex v0, Complex v_eval, Complex e, Complex r,
                                 Complex l, double tau, Propagator kind) {
    if (kind == Propagator::euler) return v0 + tau * (e * v_eval + r + l);
    const Complex x = tau * e;
    if (std::norm(x) < 1e-12) { // |x| < 1e-6
        // e^x - 1 = x (1 + x/2 + x^2/6); (e^x - 1)/e = tau (1 + x/2 + x^2/6)
        const Complex series = 1.0 + x * (0.5 + x / 6.0);
        return v0 * (1.0 + x * series) + tau * series * r + tau * l;
    }
    const Complex em1 = std::exp(x) - 1.0;
    return v0 * (em1 + 1.0) + em1 * r / e + tau * l;
}

// Scratch space reused across steps of one trajectory.
struct StepWorkspace {
    Eigen::VectorXcd a_mid, b_mid, ea, ra, eb, rb, a0, b0;
    void resize(int modes) {
        a_mid.resize(modes);
        b_mid.resize(modes);
        ea.resize(modes);
        ra.resize(modes);
        eb.resize(modes);
        rb.resize(modes);
        a0.resize(modes);
        b0.resize(modes);
    }
};

// Model concept: provides
//   int modes() const
//   static constexpr bool doubled   (false => beta is implicit conj(alpha))
//   void coeffs(a, b, t, noise, ea, ra, eb, rb) const    [doubled]
//   void coeffs(a, t, noise, ea, ra) const               [single]
// where ea/eb are the exponential coefficients and ra/rb the rest terms
// (strictly-linear parts are zero for every model in this code base).

// Semi-implicit midpoint container: n iterations toward the midpoint from v0
// with coefficients at the previous iterate over dt/2, then one application
// from v0 over the full dt with coefficients at the final iterate and
// midpoint time t + dt/2. Noise is fixed for the whole step.
template <class Model>
void midpoint_step(const Model& m, Eigen::Ref<Eigen::VectorXcd> a,
                   Eigen::Ref<Eigen::VectorXcd> b, double t, const NoiseBlock& nb,
                   const StepConfig& cfg, StepWorkspace& ws) {
    const int n = m.modes();
    const double dt = cfg.dt;
    const double tmid = t + 0.5 * dt;
    ws.a0 = a;
    ws.a_mid = a;
    if constexpr (Model::doubled) {
        ws.b0 = b;
        ws.b_mid = b;
    }
    for (int k = 0; k < cfg.midpoint_iterations; ++k) {
        if constexpr (Model::doubled)
            m.coeffs(ws.a_mid, ws.b_mid, tmid, nb, ws.ea, ws.ra, ws.eb, ws.rb);
        else
            m.coeffs(ws.a_mid, tmid, nb, ws.ea, ws.ra);
        for (int j = 0; j < n; ++j) {
            ws.a_mid[j] = propagate_substep(ws.a0[j], ws.a_mid[j], ws.ea[j], ws.ra[j],
                                            0.0, 0.5 * dt, cfg.propagator);
            if constexpr (Model::doubled)
                ws.b_mid[j] = propagate_substep(ws.b0[j], ws.b_mid[j], ws.eb[j], ws.rb[j],
                                                0.0, 0.5 * dt, cfg.propagator);
        }
    }
    if constexpr (Model::doubled)
        m.coeffs(ws.a_mid, ws.b_mid, tmid, nb, ws.ea, ws.ra, ws.eb, ws.rb);
    else
        m.coeffs(ws.a_mid, tmid, nb, ws.ea, ws.ra);
    for (int j = 0; j < n; ++j) {
        a[j] = propagate_substep(ws.a0[j], ws.a_mid[j], ws.ea[j], ws.ra[j], 0.0, dt,
                                 cfg.propagator);
        if constexpr (Model::doubled)
            b[j] = propagate_substep(ws.b0[j], ws.b_mid[j], ws.eb[j], ws.rb[j], 0.0, dt,
                                     cfg.propagator);
    }
}

inline bool point_within_cap(const Eigen::Ref<const Eigen::VectorXcd>& a,
                             const Eigen::Ref<const Eigen::VectorXcd>& b, double cap,
                             bool doubled) {
    for (int j = 0; j < a.size(); ++j) {
        const Complex va = a[j];
        if (!std::isfinite(va.real()) || !std::isfinite(va.imag()) || std::abs(va) > cap)
            return false;
        if (doubled) {
            const Complex vb = b[j];
            if (!std::isfinite(vb.real()) || !std::isfinite(vb.imag()) || std::abs(vb) > cap)
                return false;
        }
    }
    return true;
}

// Advances one trajectory over [step_begin, step_end) x dt, drawing fresh
// noise each step from the trajectory's dynamics stream. On a cap violation
// the state reverts to the last accepted step and the escape step is
// reported; the caller freezes the trajectory from there on.
template <class Model, class RecordFn>
std::uint64_t integrate_trajectory(const Model& m, const TrajectoryStream& stream,
                                   Eigen::Ref<Eigen::VectorXcd> a,
                                   Eigen::Ref<Eigen::VectorXcd> b, double t0,
                                   std::uint64_t step_begin, std::uint64_t step_end,
                                   const StepConfig& cfg, StepWorkspace& ws,
                                   NoiseBlock& nb, RecordFn&& record) {
    for (std::uint64_t step = step_begin; step < step_end; ++step) {
        const double t = t0 + double(step - step_begin) * cfg.dt;
        draw_noise(stream, m.modes(), cfg.dt, step, cfg.noise, nb);
        midpoint_step(m, a, b, t, nb, cfg, ws);
        if (!point_within_cap(a, b, cfg.escape_cap, Model::doubled)) {
            a = ws.a0; // revert to the last accepted state and freeze
            if constexpr (Model::doubled) b = ws.b0;
            return step;
        }
        record(step + 1, a, b);
    }
    return UINT64_MAX;
}

// ---- diagnostics -----------------------------------------------------------

struct TimestepReport {
    struct Entry {
        std::string term;
        double ratio;
    };
    std::vector<Entry> entries;
    double max_ratio = 0.0;
    bool pass = true; // all ratios <= 0.1
};

// |D^(term) dt| / scale rule of thumb, evaluated with ensemble-mean magnitudes
// and analytic RMS noise sizes (never per-trajectory noise draws).
// amplitude_scale guards the vacuum case where |v| ~ 0.
template <class Model>
TimestepReport timestep_check(const Model& m, const Eigen::MatrixXcd& alpha,
                              const Eigen::MatrixXcd& beta, double t, double dt) {
    TimestepReport rep;
    const int M = m.modes();
    const int S = int(alpha.cols());
    Eigen::VectorXcd a(M), b(M), ea(M), ra(M), eb(M), rb(M);
    NoiseBlock zero;
    zero.resize(M);
    zero.set_zero();
    // Ensemble-RMS variable magnitude per mode, with a floor so the rule
    // stays meaningful for vacuum starts (one-step additive noise scale).
    Eigen::VectorXd vscale = Eigen::VectorXd::Zero(M);
    for (int j = 0; j < M; ++j) {
        double acc = 0.0;
        for (int tr = 0; tr < S; ++tr)
            acc += std::norm(alpha(j, tr)) + (Model::doubled ? std::norm(beta(j, tr)) : 0.0);
        vscale[j] = std::sqrt(acc / (Model::doubled ? 2.0 * S : 1.0 * S));
    }
    const double floor = m.additive_noise_rms(dt) * dt + 1e-30;
    double drift_e = 0.0, drift_r = 0.0, noise_e = 0.0, noise_r = 0.0;
    for (int j = 0; j < M; ++j) {
        // drift parts from a zero-noise evaluation at the ensemble mean point
        for (int q = 0; q < M; ++q) {
            a[q] = alpha.row(q).mean();
            if (Model::doubled) b[q] = beta.row(q).mean();
        }
        if constexpr (Model::doubled)
            m.coeffs(a, b, t, zero, ea, ra, eb, rb);
        else
            m.coeffs(a, t, zero, ea, ra);
        const double scale = std::max(vscale[j], floor);
        drift_e = std::max(drift_e, std::abs(ea[j]) * dt);
        drift_r = std::max(drift_r, std::abs(ra[j]) * dt / scale);
        if (Model::doubled) {
            drift_e = std::max(drift_e, std::abs(eb[j]) * dt);
            drift_r = std::max(drift_r, std::abs(rb[j]) * dt / scale);
        }
        noise_e = std::max(noise_e, m.multiplicative_noise_rms(dt) * dt);
        noise_r = std::max(noise_r, m.additive_noise_rms(dt) * dt / scale);
    }
    rep.entries = {{"exponential drift", drift_e},
                   {"rest drift", drift_r},
                   {"multiplicative noise (rms)", noise_e},
                   {"additive noise (rms)", noise_r}};
    for (const auto& e : rep.entries) rep.max_ratio = std::max(rep.max_ratio, e.ratio);
    rep.pass = rep.max_ratio <= 0.1;
    return rep;
}

// ---- timestep-doubling convergence check ------------------------------------

struct DoublingResult {
    double max_abs_alpha = 0.0;
    double max_abs_beta = 0.0;
    double max_abs() const { return std::max(max_abs_alpha, max_abs_beta); }
};

// Runs one trajectory twice over the same Brownian path: 2n steps at dt and
// n steps at 2dt, the coarse run consuming pairwise-summed Wiener increments
// (xi'_k = (xi_{2k} + xi_{2k+1})/2 in the variance-1/dt convention). Returns
// the per-variable maximum discrepancy at T = 2n dt.
template <class Model>
DoublingResult doubling_check(const Model& m, std::uint64_t master_seed,
                              std::uint32_t trajectory, const Eigen::VectorXcd& a_init,
                              const Eigen::VectorXcd& b_init, double t0, double dt,
                              std::uint64_t fine_steps, StepConfig cfg) {
    const int M = m.modes();
    TrajectoryStream stream(master_seed, trajectory, NoisePurpose::dynamics);
    StepWorkspace ws;
    ws.resize(M);
    NoiseBlock nb, nb2;
    nb.resize(M);
    nb2.resize(M);

    Eigen::VectorXcd a_f = a_init, b_f = b_init;
    cfg.dt = dt;
    for (std::uint64_t s = 0; s < fine_steps; ++s) {
        draw_noise(stream, M, dt, s, cfg.noise, nb);
        midpoint_step(m, a_f, b_f, t0 + double(s) * dt, nb, cfg, ws);
    }

    Eigen::VectorXcd a_c = a_init, b_c = b_init;
    StepConfig coarse = cfg;
    coarse.dt = 2.0 * dt;
    for (std::uint64_t s = 0; 2 * s + 1 < fine_steps; ++s) {
        draw_noise(stream, M, dt, 2 * s, cfg.noise, nb);
        draw_noise(stream, M, dt, 2 * s + 1, cfg.noise, nb2);
        NoiseBlock paired;
        paired.xi = 0.5 * (nb.xi + nb2.xi);
        paired.xi_tilde = 0.5 * (nb.xi_tilde + nb2.xi_tilde);
        paired.eta = 0.5 * (nb.eta + nb2.eta);
        midpoint_step(m, a_c, b_c, t0 + double(2 * s) * dt, paired, coarse, ws);
    }

    DoublingResult res;
    for (int j = 0; j < M; ++j) {
        res.max_abs_alpha = std::max(res.max_abs_alpha, std::abs(a_f[j] - a_c[j]));
        if (Model::doubled)
            res.max_abs_beta = std::max(res.max_abs_beta, std::abs(b_f[j] - b_c[j]));
    }
    return res;
}

} // namespace phasecorr

#endif
