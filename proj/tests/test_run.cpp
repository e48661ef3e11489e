#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <vector>

#include <phasecorr/config.hpp>
#include <phasecorr/errors.hpp>
#include <phasecorr/run.hpp>

using namespace phasecorr;

namespace {

RunConfig switched_config() {
    RunConfig cfg;
    cfg.rep = Representation::positive_p;
    cfg.trajectories = 256;
    cfg.subensembles = 8;
    cfg.dt = 0.01;
    cfg.t_end = 1.5;
    cfg.seed = 42;
    cfg.model = ModelParams::chain(2, 0.08, 1.0, -0.2, 1.0, 0.1, 0.3);
    cfg.record.t0 = 1.0;
    cfg.record.taus = {0.0, 0.25, 0.5};
    cfg.switch_plan = SwitchPlan{1.0, Representation::doubled_q};
    return cfg;
}

bool same_matrix(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

} // namespace

TEST_CASE("results are bit-identical for any worker count and on repeat") {
    RunConfig cfg = switched_config();
    cfg.workers = 1;
    const SimulationResult one = simulate(cfg);
    cfg.workers = 3;
    const SimulationResult three = simulate(cfg);
    const SimulationResult again = simulate(cfg);

    for (const SimulationResult* other : {&three, &again}) {
        REQUIRE(other->store.size() == one.store.size());
        for (std::size_t i = 0; i < one.store.size(); ++i) {
            const Snapshot& a = one.store.all()[i];
            const Snapshot& b = other->store.all()[i];
            CHECK(a.time == b.time);
            CHECK(a.rep == b.rep);
            CHECK(a.step == b.step);
            CHECK(same_matrix(a.alpha, b.alpha));
            CHECK(same_matrix(a.beta, b.beta));
        }
        CHECK(one.escape_step == other->escape_step);
        CHECK(same_matrix(one.final_state.alpha, other->final_state.alpha));
        CHECK(same_matrix(one.final_state.beta, other->final_state.beta));
        CHECK(one.escaped == other->escaped);
    }
}

TEST_CASE("a switch records both representations at the switch instant") {
    RunConfig cfg = switched_config();
    cfg.workers = 2;
    const SimulationResult sim = simulate(cfg);

    CHECK(sim.store.find(1.0, Representation::positive_p) != nullptr);
    CHECK(sim.store.find(1.0, Representation::doubled_q) != nullptr);
    CHECK(sim.store.find(1.25, Representation::doubled_q) != nullptr);
    CHECK(sim.store.find(1.25, Representation::positive_p) == nullptr);
    CHECK(sim.store.find(1.5, Representation::doubled_q) != nullptr);
    CHECK(sim.final_state.rep == Representation::doubled_q);

    // The two switch-time snapshots describe the same physical state: the
    // anti-normal pair mean sits one unit above the normal one, per mode.
    const Snapshot* p = sim.store.find(1.0, Representation::positive_p);
    const Snapshot* q = sim.store.find(1.0, Representation::doubled_q);
    for (int m = 0; m < 2; ++m) {
        const Complex np =
            (p->alpha.row(m).array() * p->beta.row(m).array()).mean();
        const Complex nq =
            (q->alpha.row(m).array() * q->beta.row(m).array()).mean();
        CHECK(std::abs(nq - np - 1.0) < 0.15); // 256 trajectories, loose gate
    }
}

TEST_CASE("product requests resolve symbolic times against the schedule") {
    CorrelationRequest req;
    req.name = "probe";
    req.type = CorrelationRequest::Type::product;
    RawFactor f1;
    f1.op = OpKind::creation;
    f1.mode = 0;
    f1.tag = RawFactor::TimeTag::t0;
    RawFactor f2;
    f2.op = OpKind::annihilation;
    f2.mode = 1;
    f2.tag = RawFactor::TimeTag::t0_plus_tau;
    RawFactor f3;
    f3.op = OpKind::annihilation;
    f3.mode = 0;
    f3.tag = RawFactor::TimeTag::literal;
    f3.literal_time = 2.0;
    req.factors = {f1, f2, f3};

    const CorrelationSpec spec = resolve_product(req, 1.0, 0.5);
    CHECK(spec.name == "probe");
    CHECK(spec.times == std::vector<double>{1.0, 1.5, 2.0});
    REQUIRE(spec.factors.size() == 3);
    CHECK(spec.factors[0].time_label == 0);
    CHECK(spec.factors[1].time_label == 1);
    CHECK(spec.factors[2].time_label == 2);
    CHECK(spec.factors[0].kind == OpKind::creation);
    CHECK(spec.factors[1].mode == 1);

    // Zero delay merges t0 and t0+tau into one label.
    const CorrelationSpec zero = resolve_product(req, 1.0, 0.0);
    CHECK(zero.times == std::vector<double>{1.0, 2.0});
    CHECK(zero.factors[0].time_label == 0);
    CHECK(zero.factors[1].time_label == 0);
    CHECK(zero.factors[2].time_label == 1);

    // A literal that coincides with t0 shares its label.
    const CorrelationSpec merged = resolve_product(req, 2.0, 0.5);
    CHECK(merged.times == std::vector<double>{2.0, 2.5});
    CHECK(merged.factors[0].time_label == 0);
    CHECK(merged.factors[2].time_label == 0);
}

TEST_CASE("deterministic coherent decay reproduces the closed form exactly") {
    RunConfig cfg;
    cfg.rep = Representation::positive_p;
    cfg.trajectories = 64;
    cfg.subensembles = 4;
    cfg.dt = 0.01;
    cfg.t_end = 1.0;
    cfg.seed = 5;
    cfg.workers = 2;
    cfg.model = ModelParams::chain(1, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0);
    const Complex c(1.2, -0.3);
    cfg.initial.kind = InitialState::Kind::coherent;
    cfg.initial.amplitudes.resize(1);
    cfg.initial.amplitudes(0) = c;
    cfg.record.t0 = 0.0;
    cfg.record.taus = {0.0, 0.5, 1.0};

    CorrelationRequest req;
    req.name = "pair11";
    req.type = CorrelationRequest::Type::g2_delay;
    req.mode = 0;
    cfg.correlations = {req};

    const SimulationResult sim = simulate(cfg);
    CHECK(sim.escaped == 0);

    const auto occ = occupation_series(cfg, sim);
    REQUIRE(occ.size() == 1);
    REQUIRE(occ[0].times.size() == 3);
    for (std::size_t i = 0; i < occ[0].times.size(); ++i) {
        const double want = std::norm(c) * std::exp(-occ[0].times[i]);
        CHECK(std::abs(occ[0].points[i].value.real() - want) < 1e-12);
        CHECK(std::abs(occ[0].points[i].value.imag()) < 1e-12);
    }

    // A coherent state is its own conditional state: flat unit correlation.
    const auto curves = correlation_curves(cfg, sim);
    REQUIRE(curves.size() == 1);
    CHECK(curves[0].name == "pair11");
    REQUIRE(curves[0].points.size() == 3);
    for (const auto& pt : curves[0].points) {
        REQUIRE(pt.defined);
        CHECK(std::abs(pt.value.real() - 1.0) < 1e-12);
    }
}

TEST_CASE("occupations stay on the decay law across a switch") {
    RunConfig cfg;
    cfg.rep = Representation::positive_p;
    cfg.trajectories = 4096;
    cfg.subensembles = 16;
    cfg.dt = 0.0125;
    cfg.t_end = 1.0;
    cfg.seed = 7;
    cfg.workers = 2;
    cfg.model = ModelParams::chain(1, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0);
    const Complex c(0.9, 0.4);
    cfg.initial.kind = InitialState::Kind::coherent;
    cfg.initial.amplitudes.resize(1);
    cfg.initial.amplitudes(0) = c;
    cfg.record.t0 = 0.25;
    cfg.record.taus = {0.0, 0.25, 0.5, 0.75};
    cfg.switch_plan = SwitchPlan{0.5, Representation::doubled_q};

    const SimulationResult sim = simulate(cfg);
    const auto occ = occupation_series(cfg, sim);
    REQUIRE(occ.size() == 1);
    REQUIRE(occ[0].times.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        const double t = occ[0].times[i];
        const double want = std::norm(c) * std::exp(-t);
        const auto& pt = occ[0].points[i];
        REQUIRE(pt.defined);
        if (t <= 0.5) {
            CHECK(std::abs(pt.value.real() - want) < 1e-12); // deterministic side
        } else {
            CHECK(pt.re_err > 0.0); // conversion noise contributes spread
            CHECK(std::abs(pt.value.real() - want) < 4.0 * pt.re_err);
        }
    }
}

TEST_CASE("a run where every trajectory escapes raises a numerical failure") {
    RunConfig cfg;
    cfg.rep = Representation::positive_p;
    cfg.trajectories = 32;
    cfg.subensembles = 4;
    cfg.dt = 0.01;
    cfg.t_end = 0.5;
    cfg.seed = 3;
    cfg.workers = 1;
    cfg.escape_cap = 0.5;
    cfg.model = ModelParams::chain(1, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0);
    cfg.initial.kind = InitialState::Kind::coherent;
    cfg.initial.amplitudes.resize(1);
    cfg.initial.amplitudes(0) = Complex(1.2, 0.0);
    cfg.record.t0 = 0.25;
    cfg.record.taus = {0.0};

    CHECK_THROWS_AS(simulate(cfg), NumericalFailure);
}

TEST_CASE("subcommand bodies write their advertised files") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "phasecorr_run_smoke";
    fs::remove_all(dir);

    RunConfig cfg;
    cfg.rep = Representation::positive_p;
    cfg.trajectories = 128;
    cfg.subensembles = 4;
    cfg.dt = 0.01;
    cfg.t_end = 1.0;
    cfg.seed = 11;
    cfg.workers = 2;
    cfg.model = ModelParams::chain(1, 0.0, 0.0, 0.2, 1.0, 0.0, 0.3);
    cfg.record.t0 = 0.5;
    cfg.record.taus = {0.0, 0.25, 0.5};
    cfg.oracle.cutoff = 6;
    cfg.out_dir = (dir / "sim").string();

    CorrelationRequest req;
    req.name = "pair11";
    req.type = CorrelationRequest::Type::g2_delay;
    req.mode = 0;
    cfg.correlations = {req};

    CHECK(run_simulate(cfg) == 0);
    CHECK(fs::exists(fs::path(cfg.out_dir) / "occupations.csv"));
    CHECK(fs::exists(fs::path(cfg.out_dir) / "final_state.ckpt"));

    cfg.out_dir = (dir / "corr").string();
    CHECK(run_correlate(cfg) == 0);
    CHECK(fs::exists(fs::path(cfg.out_dir) / "occupations.csv"));
    CHECK(fs::exists(fs::path(cfg.out_dir) / "pair11.csv"));

    cfg.out_dir = (dir / "oracle").string();
    CHECK(run_oracle(cfg) == 0);
    CHECK(fs::exists(fs::path(cfg.out_dir) / "occupations_oracle.csv"));
    CHECK(fs::exists(fs::path(cfg.out_dir) / "pair11_oracle.csv"));

    fs::remove_all(dir);
}
