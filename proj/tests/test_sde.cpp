#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include <phasecorr/bose_hubbard.hpp>
#include <phasecorr/sde.hpp>
#include <phasecorr/stats.hpp>

using namespace phasecorr;

TEST_CASE("propagate_substep: euler is the plain increment form") {
    const Complex v0(1.0, -2.0), v_eval(0.5, 0.25), e(-0.3, 0.8), r(0.1, 0.0), l(0.0, 0.2);
    const double tau = 0.05;
    const Complex got = propagate_substep(v0, v_eval, e, r, l, tau, Propagator::euler);
    CHECK(got == v0 + tau * (e * v_eval + r + l));
}

TEST_CASE("propagate_substep: exponential matches the frozen-coefficient solution") {
    const Complex v0(0.7, 0.1), e(-0.4, 1.1), r(0.2, -0.3), l(0.05, 0.0);
    const double tau = 0.3;
    const Complex x = tau * e;
    const Complex ref = v0 * std::exp(x) + (std::exp(x) - 1.0) * r / e + l * tau;
    const Complex got = propagate_substep(v0, v0, e, r, l, tau, Propagator::exponential);
    CHECK(std::abs(got - ref) < 1e-14);
}

TEST_CASE("propagate_substep: series branch is continuous across the threshold") {
    const Complex v0(1.0, 0.5), r(0.3, -0.2), l(0.0, 0.0);
    const double tau = 1.0;
    // reference via expm1, accurate at any |x|
    const auto reference = [&](Complex e) {
        const Complex x = tau * e;
        const Complex em1 = std::exp(x) - 1.0; // fine for |x| ~ 1e-5
        return v0 * (em1 + 1.0) + em1 * r / e + l * tau;
    };
    const auto reference_small = [&](Complex e) {
        const double x = (tau * e).real();
        const double em1 = std::expm1(x);
        return v0 * (em1 + 1.0) + em1 * r / e.real() + l * tau;
    };
    // just below the |tau e| = 1e-6 switch: series branch
    const Complex e_small(4e-7, 0.0);
    CHECK(std::abs(propagate_substep(v0, v0, e_small, r, l, tau, Propagator::exponential) -
                   reference_small(e_small)) < 1e-12);
    // just above: exp branch
    const Complex e_big(4e-6, 0.0);
    CHECK(std::abs(propagate_substep(v0, v0, e_big, r, l, tau, Propagator::exponential) -
                   reference(e_big)) < 1e-12);
    // e -> 0 limit equals the linear step
    CHECK(std::abs(propagate_substep(v0, v0, Complex(0, 0), r, l, tau,
                                     Propagator::exponential) -
                   (v0 + (r + l) * tau)) < 1e-15);
}

TEST_CASE("exponential propagator integrates the linear driven mode exactly") {
    // U = 0, no thermal noise: the trajectory ODE has constant coefficients,
    // so every substep solution is exact and errors never accumulate.
    const double delta = 0.7, gamma = 0.8;
    const Complex F(0.3, 0.0);
    const ModelParams p = ModelParams::chain(1, 0.0, 0.0, delta, gamma, 0.0, F);
    const BoseHubbardSde model(p, 1.0);

    StepConfig cfg;
    cfg.dt = 0.05;
    cfg.propagator = Propagator::exponential;
    StepWorkspace ws;
    ws.resize(1);
    NoiseBlock nb;
    nb.resize(1);

    Eigen::VectorXcd a = Eigen::VectorXcd::Zero(1), b = Eigen::VectorXcd::Zero(1);
    TrajectoryStream stream(1, 0, NoisePurpose::dynamics);
    const std::uint64_t steps = 200;
    const std::uint64_t esc = integrate_trajectory(model, stream, a, b, 0.0, 0, steps, cfg,
                                                   ws, nb, [](auto, auto&, auto&) {});
    REQUIRE(esc == UINT64_MAX);

    const Complex lambda(-0.5 * gamma, delta); // -gamma/2 + i delta
    const Complex a_st = Complex(0.0, 1.0) * F / lambda;
    const double T = double(steps) * cfg.dt;
    const Complex exact = a_st * (1.0 - std::exp(lambda * T));
    CHECK(std::abs(a[0] - exact) < 1e-12);
    CHECK(std::abs(b[0] - std::conj(exact)) < 1e-12);
}

TEST_CASE("midpoint container shows second-order convergence on the Kerr oscillator") {
    // gamma = 0, zero noise, corrections off: d alpha/dt = -iU alpha^2 beta with
    // alpha beta conserved, so alpha(t) = alpha0 e^{-iU n0 t} exactly.
    const double U = 1.0;
    const ModelParams p = ModelParams::chain(1, U, 0.0, 0.0, 0.0, 0.0, Complex(0.0, 0.0));
    const BoseHubbardSde model(p, 1.0, /*corrections=*/false);

    const Complex c(1.2, 0.0);
    const double T = 1.0;
    const Complex exact = c * std::exp(Complex(0.0, -U * std::norm(c) * T));

    NoiseBlock zero;
    zero.resize(1);
    zero.set_zero();
    StepWorkspace ws;
    ws.resize(1);

    std::vector<double> dts = {0.04, 0.02, 0.01, 0.005};
    std::vector<double> errs;
    for (double dt : dts) {
        StepConfig cfg;
        cfg.dt = dt;
        cfg.propagator = Propagator::euler;
        cfg.midpoint_iterations = 3;
        Eigen::VectorXcd a(1), b(1);
        a[0] = c;
        b[0] = std::conj(c);
        const auto n = std::uint64_t(std::llround(T / dt));
        for (std::uint64_t s = 0; s < n; ++s)
            midpoint_step(model, a, b, double(s) * dt, zero, cfg, ws);
        errs.push_back(std::abs(a[0] - exact));
    }
    // least-squares slope of log(err) vs log(dt)
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < dts.size(); ++i) {
        const double x = std::log(dts[i]), y = std::log(errs[i]);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    const double n = double(dts.size());
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(slope == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("Kerr ensemble mean follows the interaction-collapse law") {
    // gamma = 0, U != 0: <a(t)> = c exp[|c|^2 (e^{-iUt} - 1)]. This exercises
    // the multiplicative noise pair and its compensation drift end to end.
    const double U = 0.5, T = 1.0, dt = 0.002;
    const Complex c(1.0, 0.0);
    const ModelParams p = ModelParams::chain(1, U, 0.0, 0.0, 0.0, 0.0, Complex(0.0, 0.0));
    const BoseHubbardSde model(p, 1.0, /*corrections=*/true);

    const int S = 8192;
    StepConfig cfg;
    cfg.dt = dt;
    cfg.propagator = Propagator::exponential;
    cfg.midpoint_iterations = 2;

    Eigen::VectorXcd values(S);
    std::vector<unsigned char> alive(std::size_t(S), 1);
    StepWorkspace ws;
    ws.resize(1);
    NoiseBlock nb;
    nb.resize(1);
    const auto steps = std::uint64_t(std::llround(T / dt));
    for (int tr = 0; tr < S; ++tr) {
        Eigen::VectorXcd a(1), b(1);
        a[0] = c;
        b[0] = std::conj(c);
        TrajectoryStream stream(2718, std::uint32_t(tr), NoisePurpose::dynamics);
        const std::uint64_t esc = integrate_trajectory(model, stream, a, b, 0.0, 0, steps,
                                                       cfg, ws, nb, [](auto, auto&, auto&) {});
        if (esc != UINT64_MAX) alive[std::size_t(tr)] = 0;
        values[tr] = a[0];
    }
    const EstimateRI est = estimate_subensembles(values, alive, 32);
    REQUIRE(est.defined);
    CHECK(double(est.n_effective) > 0.99 * S);
    const Complex exact = c * std::exp(std::norm(c) * (std::exp(Complex(0.0, -U * T)) - 1.0));
    CHECK(std::abs(est.value.real() - exact.real()) < 4.0 * est.re_err + 1e-4);
    CHECK(std::abs(est.value.imag() - exact.imag()) < 4.0 * est.im_err + 1e-4);
}

TEST_CASE("timestep report flags steps that outrun the fastest rate") {
    const ModelParams p = ModelParams::chain(1, 0.0, 0.0, 0.0, 2.0, 0.5, Complex(1.0, 0.0));
    const BoseHubbardSde model(p, 1.0);
    Eigen::MatrixXcd alpha = Eigen::MatrixXcd::Constant(1, 16, Complex(1.0, 0.0));
    Eigen::MatrixXcd beta = alpha.conjugate();

    const TimestepReport bad = timestep_check(model, alpha, beta, 0.0, 1.0);
    CHECK_FALSE(bad.pass);
    const TimestepReport good = timestep_check(model, alpha, beta, 0.0, 1e-4);
    CHECK(good.pass);
    CHECK(good.entries.size() == 4);
    CHECK(good.max_ratio <= 0.1);
    for (const auto& e : good.entries) CHECK(e.ratio <= good.max_ratio);
}

TEST_CASE("halving dt shrinks the doubling discrepancy on a shared Brownian path") {
    const ModelParams p = ModelParams::chain(1, 0.5, 0.0, 0.3, 0.4, 0.2, Complex(0.5, 0.0));
    const BoseHubbardSde model(p, 1.0);
    Eigen::VectorXcd a0(1), b0(1);
    a0[0] = Complex(1.0, 0.0);
    b0[0] = std::conj(a0[0]);

    StepConfig cfg;
    cfg.propagator = Propagator::exponential;
    cfg.midpoint_iterations = 2;

    const double T = 0.64;
    double prev = 1e300;
    for (int level = 0; level < 3; ++level) {
        const double dt = 0.04 / double(1 << level);
        const auto fine = std::uint64_t(std::llround(T / dt));
        // average the discrepancy over a few trajectories to damp flukes
        double acc = 0.0;
        for (std::uint32_t tr = 0; tr < 8; ++tr)
            acc += doubling_check(model, 555, tr, a0, b0, 0.0, dt, fine, cfg).max_abs();
        acc /= 8.0;
        CHECK(acc < prev);
        prev = acc;
    }
}

TEST_CASE("cap violations revert to the last accepted state and freeze") {
    // undriven Kerr with a huge amplitude: positive-P multiplicative noise
    // produces excursions that cross a tight cap almost immediately
    const ModelParams p = ModelParams::chain(1, 2.0, 0.0, 0.0, 0.0, 0.0, Complex(0.0, 0.0));
    const BoseHubbardSde model(p, 1.0);
    StepConfig cfg;
    cfg.dt = 0.05;
    cfg.escape_cap = 2.5;
    cfg.propagator = Propagator::exponential;
    StepWorkspace ws;
    ws.resize(1);
    NoiseBlock nb;
    nb.resize(1);

    int escaped = 0;
    for (std::uint32_t tr = 0; tr < 64 && escaped < 3; ++tr) {
        Eigen::VectorXcd a(1), b(1);
        a[0] = Complex(2.0, 0.0);
        b[0] = Complex(2.0, 0.0);
        TrajectoryStream stream(31415, tr, NoisePurpose::dynamics);
        Eigen::VectorXcd last_ok = a;
        std::uint64_t recorded = 0;
        const std::uint64_t esc = integrate_trajectory(
            model, stream, a, b, 0.0, 0, 200, cfg, ws, nb,
            [&](std::uint64_t step, const auto& av, const auto&) {
                CHECK(step == recorded + 1); // consecutive accepted steps
                recorded = step;
                last_ok = av;
            });
        if (esc == UINT64_MAX) continue;
        ++escaped;
        CHECK(esc == recorded); // escaped on the step after the last accepted one
        CHECK(a == last_ok);    // state reverted, not left at the blown-up point
        CHECK(std::abs(a[0]) <= cfg.escape_cap);
    }
    CHECK(escaped >= 3); // the scenario actually exercises the cap
}

TEST_CASE("binomial noise family feeds the same scaled layout") {
    TrajectoryStream s(88, 1, NoisePurpose::dynamics);
    NoiseKind kind;
    kind.family = NoiseKind::Family::binomial;
    kind.n_b = 4;
    NoiseBlock nb;
    const double dt = 0.05;
    double acc = 0.0;
    const int steps = 20000;
    for (int st = 0; st < steps; ++st) {
        draw_noise(s, 1, dt, std::uint64_t(st), kind, nb);
        acc += nb.xi[0] * nb.xi[0];
    }
    CHECK(acc / steps == doctest::Approx(1.0 / dt).epsilon(0.05));
}
