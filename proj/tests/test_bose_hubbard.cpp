#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include <phasecorr/bose_hubbard.hpp>
#include <phasecorr/stats.hpp>

using namespace phasecorr;

TEST_CASE("chain builder lays out the single-particle matrix and drive") {
    const ModelParams p = ModelParams::chain(3, 0.1, 2.0, 0.5, 1.0, 0.01, Complex(3.0, 0.0));
    CHECK(p.modes == 3);
    CHECK(p.Hsp(0, 0) == Complex(-0.5, 0.0));
    CHECK(p.Hsp(1, 1) == Complex(-0.5, 0.0));
    CHECK(p.Hsp(0, 1) == Complex(-2.0, 0.0));
    CHECK(p.Hsp(1, 0) == Complex(-2.0, 0.0));
    CHECK(p.Hsp(0, 2) == Complex(0.0, 0.0)); // nearest neighbour only
    CHECK(p.F[0] == Complex(3.0, 0.0));
    CHECK(p.F[1] == Complex(0.0, 0.0));
    CHECK_NOTHROW(p.validate());
}

TEST_CASE("parameter validation rejects malformed models") {
    ModelParams p = ModelParams::chain(2, 0.0, 1.0, 0.0, 1.0, 0.0, Complex(1.0, 0.0));
    p.gamma = -1.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = ModelParams::chain(2, 0.0, 1.0, 0.0, 1.0, 0.0, Complex(1.0, 0.0));
    p.nbar = -0.1;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = ModelParams::chain(2, 0.0, 1.0, 0.0, 1.0, 0.0, Complex(1.0, 0.0));
    p.Hsp(0, 1) = Complex(1.0, 0.5); // breaks Hermiticity
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = ModelParams::chain(2, 0.0, 1.0, 0.0, 1.0, 0.0, Complex(1.0, 0.0));
    p.F.resize(1);
    CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("alpha and beta equations are conjugate partners") {
    // with beta = conj(alpha) and xi_tilde = xi the two coefficient sets must
    // be exact complex conjugates, so conjugate-paired ensembles stay paired
    const ModelParams p = ModelParams::chain(2, 0.3, 1.5, -0.2, 0.7, 0.4, Complex(1.0, 0.5));
    const BoseHubbardSde m(p, 1.0);
    Eigen::VectorXcd a(2), b(2), ea(2), ra(2), eb(2), rb(2);
    a << Complex(0.8, -0.3), Complex(-0.1, 0.6);
    b = a.conjugate();
    NoiseBlock nb;
    nb.resize(2);
    nb.xi << 0.7, -1.2;
    nb.xi_tilde = nb.xi;
    nb.eta[0] = Complex(0.2, -0.5);
    nb.eta[1] = Complex(-1.0, 0.1);
    m.coeffs(a, b, 0.0, nb, ea, ra, eb, rb);
    for (int j = 0; j < 2; ++j) {
        CHECK(std::abs(eb[j] - std::conj(ea[j])) < 1e-14);
        CHECK(std::abs(rb[j] - std::conj(ra[j])) < 1e-14);
    }
}

TEST_CASE("s-ordering shifts the interaction and the thermal noise amplitude") {
    const ModelParams p = ModelParams::chain(1, 0.4, 0.0, 0.0, 1.0, 0.25, Complex(0.0, 0.0));
    Eigen::VectorXcd a(1), b(1), ea(1), ra(1), eb(1), rb(1);
    a[0] = Complex(1.0, 0.0);
    b[0] = Complex(1.0, 0.0);
    NoiseBlock zero;
    zero.resize(1);
    zero.set_zero();

    // s = 1: interaction sees alpha beta + 0; s = -1: alpha beta - 2
    // (corrections off so only the ordering shift enters)
    const BoseHubbardSde mp(p, 1.0, false), mq(p, -1.0, false);
    mp.coeffs(a, b, 0.0, zero, ea, ra, eb, rb);
    const Complex ep = ea[0];
    mq.coeffs(a, b, 0.0, zero, ea, ra, eb, rb);
    const Complex eq = ea[0];
    // difference: -iU[(n + s - 1)_{s=-1} - (...)_{s=1}] = -iU(-2) = +2iU
    CHECK(std::abs((eq - ep) - Complex(0.0, 2.0 * p.U)) < 1e-14);

    // the compensation drift shifts the exponential coefficient by +isU/2
    const BoseHubbardSde mc(p, 1.0, true);
    mc.coeffs(a, b, 0.0, zero, ea, ra, eb, rb);
    CHECK(std::abs((ea[0] - ep) - Complex(0.0, 0.5 * p.U)) < 1e-14);

    // additive amplitude: sqrt(gamma (nbar + (1-s)/2))
    CHECK(mp.additive_noise_rms(1.0) == doctest::Approx(std::sqrt(1.0 * 0.25)));
    CHECK(mq.additive_noise_rms(1.0) == doctest::Approx(std::sqrt(1.0 * 1.25)));
}

TEST_CASE("undriven thermal mode relaxes to the bath occupation") {
    // U = 0: the positive-P equations are an exact OU process whose
    // stationary <alpha beta> is Nbar
    const double gamma = 1.0, nbar = 0.5;
    const ModelParams p = ModelParams::chain(1, 0.0, 0.0, 0.0, gamma, nbar, Complex(0.0, 0.0));
    const BoseHubbardSde model(p, 1.0);

    StepConfig cfg;
    cfg.dt = 0.01;
    cfg.propagator = Propagator::exponential;
    StepWorkspace ws;
    ws.resize(1);
    NoiseBlock nb;
    nb.resize(1);

    const int S = 4096;
    const auto steps = std::uint64_t(std::llround(12.0 / cfg.dt)); // 12 decay times
    Eigen::VectorXcd w(S);
    std::vector<unsigned char> alive(std::size_t(S), 1);
    for (int tr = 0; tr < S; ++tr) {
        Eigen::VectorXcd a = Eigen::VectorXcd::Zero(1), b = Eigen::VectorXcd::Zero(1);
        TrajectoryStream stream(909, std::uint32_t(tr), NoisePurpose::dynamics);
        const auto esc = integrate_trajectory(model, stream, a, b, 0.0, 0, steps, cfg, ws,
                                              nb, [](auto, auto&, auto&) {});
        if (esc != UINT64_MAX) alive[std::size_t(tr)] = 0;
        w[tr] = a[0] * b[0];
    }
    const EstimateRI est = estimate_subensembles(w, alive, 32);
    REQUIRE(est.defined);
    CHECK(std::abs(est.value.real() - nbar) < 3.0 * est.re_err);
    CHECK(std::abs(est.value.imag()) < 4.0 * est.im_err + 1e-12);
}

TEST_CASE("classical-P diffusion eigenvalues split symmetrically about the thermal floor") {
    ModelParams p = ModelParams::chain(1, 0.2, 0.0, 0.0, 1.0, 0.1, Complex(0.0, 0.0));
    const auto [lp, lm] = gsp_diffusion_eigenvalues(Complex(2.0, -1.0), p);
    const double base = 0.5 * p.gamma * p.nbar;
    const double swing = 0.5 * p.U * 5.0; // |alpha|^2 = 5
    CHECK(lp == doctest::Approx(base + swing));
    CHECK(lm == doctest::Approx(base - swing));
    CHECK(lm < 0.0); // interaction term overwhelms the thermal floor here
}

TEST_CASE("classical-P clamps negative diffusion and counts every event") {
    // gamma Nbar/2 < U |alpha|^2 / 2 for any appreciable amplitude: each
    // coefficient evaluation at such a point must clamp and count
    const ModelParams p = ModelParams::chain(1, 1.0, 0.0, 0.0, 1.0, 1e-6, Complex(0.0, 0.0));
    const GlauberPSde model(p);
    CHECK(model.clamp_count() == 0);

    Eigen::VectorXcd a(1), ea(1), ra(1);
    a[0] = Complex(1.0, 0.0);
    NoiseBlock nb;
    nb.resize(1);
    nb.set_zero();
    model.coeffs(a, 0.0, nb, ea, ra);
    CHECK(model.clamp_count() == 1);
    model.coeffs(a, 0.0, nb, ea, ra);
    CHECK(model.clamp_count() == 2);

    // at vacuum amplitude the thermal floor wins and nothing is clamped
    a[0] = Complex(0.0, 0.0);
    model.coeffs(a, 0.0, nb, ea, ra);
    CHECK(model.clamp_count() == 2);

    const_cast<GlauberPSde&>(model).reset_clamp_count();
    CHECK(model.clamp_count() == 0);
}

TEST_CASE("classical-P thermal half relaxes like the doubled equations") {
    // U = 0, Nbar > 0: classical P is exact too; stationary |alpha|^2 = Nbar
    const double gamma = 1.0, nbar = 0.3;
    const ModelParams p = ModelParams::chain(1, 0.0, 0.0, 0.0, gamma, nbar, Complex(0.0, 0.0));
    const GlauberPSde model(p);

    StepConfig cfg;
    cfg.dt = 0.01;
    cfg.propagator = Propagator::exponential;
    StepWorkspace ws;
    ws.resize(1);
    NoiseBlock nb;
    nb.resize(1);

    const int S = 4096;
    const auto steps = std::uint64_t(std::llround(12.0 / cfg.dt));
    Eigen::VectorXcd w(S);
    std::vector<unsigned char> alive(std::size_t(S), 1);
    for (int tr = 0; tr < S; ++tr) {
        Eigen::VectorXcd a = Eigen::VectorXcd::Zero(1), b; // single phase space
        TrajectoryStream stream(910, std::uint32_t(tr), NoisePurpose::dynamics);
        const auto esc = integrate_trajectory(model, stream, a, b, 0.0, 0, steps, cfg, ws,
                                              nb, [](auto, auto&, auto&) {});
        if (esc != UINT64_MAX) alive[std::size_t(tr)] = 0;
        w[tr] = std::norm(a[0]);
    }
    const EstimateRI est = estimate_subensembles(w, alive, 32);
    REQUIRE(est.defined);
    CHECK(std::abs(est.value.real() - nbar) < 3.0 * est.re_err);
}
