#include <phasecorr/run.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <thread>
#include <utility>

#include <json.hpp>

#include <phasecorr/bose_hubbard.hpp>
#include <phasecorr/errors.hpp>
#include <phasecorr/fock.hpp>

namespace phasecorr {

namespace {

std::uint64_t step_of(double t, double dt) { return std::uint64_t(std::llround(t / dt)); }

// Record times deduplicated on the step grid (tau = 0 duplicates t0).
std::vector<double> unique_times(const RecordSchedule& rec) {
    std::vector<double> times = rec.absolute_times();
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end(),
                            [](double a, double b) { return std::abs(a - b) <= 1e-9; }),
                times.end());
    return times;
}

// One integration phase over [k_begin, k_end) with a fixed model. Workers
// claim whole sub-ensemble blocks, so the thread assignment never affects the
// result: every trajectory reads only its own counter-based stream and writes
// only its own snapshot columns.
template <class Model>
void run_phase(const Model& model, Ensemble& e, std::uint64_t k_begin, std::uint64_t k_end,
               const StepConfig& scfg, const std::vector<Snapshot*>& slots, int subensembles,
               int workers) {
    const int M = e.modes();
    const int S = e.size();
    const int u = subensembles;
    const int block = S / u;
    std::atomic<int> next{0};

    auto work = [&]() {
        StepWorkspace ws;
        ws.resize(M);
        NoiseBlock nb;
        nb.resize(M);
        Eigen::VectorXcd a(M), b(M);
        for (;;) {
            const int bi = next.fetch_add(1, std::memory_order_relaxed);
            if (bi >= u) break;
            for (int t = bi * block; t < (bi + 1) * block; ++t) {
                a = e.alpha.col(t);
                b = e.beta.col(t);
                std::size_t cur = 0;
                auto write_upto = [&](std::uint64_t s) {
                    while (cur < slots.size() && slots[cur]->step <= s) {
                        slots[cur]->alpha.col(t) = a;
                        if constexpr (Model::doubled)
                            slots[cur]->beta.col(t) = b;
                        else
                            slots[cur]->beta.col(t) = a.conjugate();
                        ++cur;
                    }
                };
                write_upto(k_begin);
                if (e.escape_step[t] == UINT64_MAX) {
                    TrajectoryStream stream(e.master_seed, std::uint32_t(t),
                                            NoisePurpose::dynamics);
                    auto rec = [&](std::uint64_t s, const auto&, const auto&) { write_upto(s); };
                    const std::uint64_t esc =
                        integrate_trajectory(model, stream, a, b, double(k_begin) * scfg.dt,
                                             k_begin, k_end, scfg, ws, nb, rec);
                    if (esc != UINT64_MAX) e.escape_step[t] = esc;
                }
                // Frozen trajectories carry their last accepted state into any
                // remaining record slots (masked out of averages by step).
                while (cur < slots.size()) {
                    slots[cur]->alpha.col(t) = a;
                    if constexpr (Model::doubled)
                        slots[cur]->beta.col(t) = b;
                    else
                        slots[cur]->beta.col(t) = a.conjugate();
                    ++cur;
                }
                e.alpha.col(t) = a;
                if constexpr (Model::doubled)
                    e.beta.col(t) = b;
                else
                    e.beta.col(t) = a.conjugate();
            }
        }
    };

    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(std::size_t(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    e.time = double(k_end) * scfg.dt;
}

std::string sanitize_filename(const std::string& name) {
    std::string out = name;
    for (char& c : out)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
    return out.empty() ? std::string("curve") : out;
}

// The delayed intensity product behind g_{1,j}: a^dag_1(t0) a^dag_j(t0+tau)
// a_j(t0+tau) a_1(t0). Shared between the plan display and the reference
// integrator so both always evaluate the same operator product.
CorrelationSpec g2_product_spec(int mode_j, double t0, double tau) {
    CorrelationSpec spec;
    spec.name = "g2_numerator";
    if (tau > 0.0) {
        spec.times = {t0, t0 + tau};
        spec.factors = {{OpKind::creation, 0, 0},
                        {OpKind::creation, mode_j, 1},
                        {OpKind::annihilation, mode_j, 1},
                        {OpKind::annihilation, 0, 0}};
    } else {
        spec.times = {t0};
        spec.factors = {{OpKind::creation, 0, 0},
                        {OpKind::creation, mode_j, 0},
                        {OpKind::annihilation, mode_j, 0},
                        {OpKind::annihilation, 0, 0}};
    }
    return spec;
}

int oracle_cutoff(const RunConfig& cfg) {
    if (cfg.oracle.cutoff > 0) return cfg.oracle.cutoff;
    const double fmax = cfg.model.F.size() ? cfg.model.F.cwiseAbs().maxCoeff() : 0.0;
    return fmax > 0.5 ? 12 : 6;
}

double oracle_dt(const RunConfig& cfg) {
    return cfg.oracle.dt_ode > 0.0 ? cfg.oracle.dt_ode : cfg.dt / 10.0;
}

// |c> <c| per mode, truncated at the cutoff and renormalized.
Eigen::MatrixXcd coherent_density(int modes, int cutoff, const Eigen::VectorXcd& amps) {
    const int nlev = cutoff + 1;
    Eigen::Index dim = 1;
    for (int j = 0; j < modes; ++j) dim *= nlev;
    Eigen::VectorXcd psi = Eigen::VectorXcd::Ones(dim);
    for (Eigen::Index idx = 0; idx < dim; ++idx) {
        Eigen::Index rest = idx;
        for (int j = 0; j < modes; ++j) {
            const int n = int(rest % nlev);
            rest /= nlev;
            Complex c = 1.0;
            for (int k = 1; k <= n; ++k) c *= amps[j] / std::sqrt(double(k));
            psi[idx] *= c * std::exp(-0.5 * std::norm(amps[j]));
        }
    }
    Eigen::MatrixXcd rho = psi * psi.adjoint();
    rho /= rho.trace().real();
    return rho;
}

EstimateRI oracle_point(Complex value) {
    EstimateRI e;
    e.value = value;
    e.re_err = 0.0;
    e.im_err = 0.0;
    e.n_effective = 1;
    e.defined = true;
    return e;
}

std::string timestep_text(const TimestepReport& rep) {
    std::ostringstream os;
    os << "timestep rule-of-thumb (target: every ratio <= 0.1)\n";
    for (const auto& e : rep.entries) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%10.4g", e.ratio);
        os << "  " << e.term << ": " << buf << "\n";
    }
    os << "max ratio: " << rep.max_ratio << "  => " << (rep.pass ? "ok" : "too coarse") << "\n";
    return os.str();
}

void write_manifest(const RunConfig& cfg, const std::string& command,
                    const std::vector<std::string>& files, const nlohmann::json& extra) {
    nlohmann::json man;
    man["command"] = command;
    man["out_dir"] = cfg.out_dir;
    man["files"] = files;
    for (auto it = extra.begin(); it != extra.end(); ++it) man[it.key()] = it.value();
    write_text_file(cfg.out_dir + "/manifest.json", man.dump(2) + "\n");
}

const char* category_name(PlanCategory c) {
    switch (c) {
        case PlanCategory::single_time: return "single-time";
        case PlanCategory::pure_p: return "normal (unswitched)";
        case PlanCategory::pure_q: return "anti-normal (switched)";
        case PlanCategory::mixed: return "mixed (switch mid-product)";
    }
    return "?";
}

} // namespace

CorrelationSpec resolve_product(const CorrelationRequest& req, double t0, double tau) {
    struct Timed {
        OpKind kind;
        int mode;
        double time;
    };
    std::vector<Timed> tf;
    tf.reserve(req.factors.size());
    for (const auto& rf : req.factors) {
        double tm = rf.literal_time;
        if (rf.tag == RawFactor::TimeTag::t0) tm = t0;
        else if (rf.tag == RawFactor::TimeTag::t0_plus_tau) tm = t0 + tau;
        tf.push_back({rf.op, rf.mode, tm});
    }
    std::vector<double> times;
    for (const auto& f : tf) times.push_back(f.time);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end(),
                            [](double a, double b) { return std::abs(a - b) <= 1e-9; }),
                times.end());
    CorrelationSpec spec;
    spec.name = req.name;
    spec.times = times;
    for (const auto& f : tf) {
        int lbl = -1;
        for (std::size_t i = 0; i < times.size(); ++i)
            if (std::abs(times[i] - f.time) <= 1e-9) {
                lbl = int(i);
                break;
            }
        spec.factors.push_back({f.kind, f.mode, lbl});
    }
    return spec;
}

SimulationResult simulate(const RunConfig& cfg) {
    cfg.validate();
    const auto clock_start = std::chrono::steady_clock::now();
    const double dt = cfg.dt;
    const std::uint64_t steps_total = step_of(cfg.t_end, dt);
    const int M = cfg.model.modes;
    const int S = cfg.trajectories;

    Ensemble e = cfg.initial.kind == InitialState::Kind::vacuum
                     ? init_vacuum(M, S, cfg.rep, cfg.seed)
                     : init_coherent(cfg.initial.amplitudes, S, cfg.rep, cfg.seed);

    const bool has_switch = cfg.switch_plan.has_value();
    const std::uint64_t k_sw = has_switch ? step_of(cfg.switch_plan->time, dt) : steps_total;
    const std::uint64_t k1 = std::min(k_sw, steps_total);

    // Snapshot plan: pre-switch record times carry the run representation,
    // post-switch ones the target; the switch time itself gets both.
    struct Pending {
        std::uint64_t step;
        Representation rep;
        bool post_switch;
    };
    std::vector<Pending> pend;
    for (double rt : unique_times(cfg.record)) {
        const std::uint64_t k = step_of(rt, dt);
        if (!has_switch || k < k_sw) {
            pend.push_back({k, cfg.rep, false});
        } else if (k == k_sw) {
            pend.push_back({k, cfg.rep, false});
            pend.push_back({k, cfg.switch_plan->target, true});
        } else {
            pend.push_back({k, cfg.switch_plan->target, true});
        }
    }
    std::vector<Snapshot> snaps(pend.size());
    for (std::size_t i = 0; i < pend.size(); ++i) {
        snaps[i].time = double(pend[i].step) * dt;
        snaps[i].rep = pend[i].rep;
        snaps[i].step = pend[i].step;
        snaps[i].alpha.resize(M, S);
        snaps[i].beta.resize(M, S);
    }
    std::vector<Snapshot*> slots1, slots2;
    Snapshot* post_sw = nullptr;
    for (std::size_t i = 0; i < pend.size(); ++i) {
        if (!pend[i].post_switch)
            slots1.push_back(&snaps[i]);
        else if (pend[i].step == k_sw)
            post_sw = &snaps[i];
        else
            slots2.push_back(&snaps[i]);
    }

    const StepConfig scfg = cfg.step_config();
    int workers = cfg.workers > 0 ? cfg.workers : int(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;

    SimulationResult out;
    if (cfg.rep == Representation::classical_p) {
        GlauberPSde model(cfg.model);
        run_phase(model, e, 0, k1, scfg, slots1, cfg.subensembles, workers);
        out.clamp_count = model.clamp_count();
        out.timestep = timestep_check(model, e.alpha, e.beta, e.time, dt);
    } else {
        BoseHubbardSde model(cfg.model, s_of(cfg.rep), cfg.corrections);
        run_phase(model, e, 0, k1, scfg, slots1, cfg.subensembles, workers);
        out.timestep = timestep_check(model, e.alpha, e.beta, e.time, dt);
    }

    if (has_switch) {
        e = convert_samples(e, cfg.switch_plan->target, /*conversion_index=*/0);
        if (post_sw) {
            post_sw->alpha = e.alpha;
            post_sw->beta = e.beta;
        }
        BoseHubbardSde model(cfg.model, s_of(cfg.switch_plan->target), cfg.corrections);
        run_phase(model, e, k_sw, steps_total, scfg, slots2, cfg.subensembles, workers);
    }

    for (auto& s : snaps) out.store.add(std::move(s));
    out.escape_step = e.escape_step;
    out.escaped = e.escaped_count();
    out.final_state = std::move(e);
    out.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
    if (out.escaped == std::size_t(S))
        throw NumericalFailure("every trajectory escaped before t_end");
    return out;
}

std::vector<NamedCurve> correlation_curves(const RunConfig& cfg, const SimulationResult& sim) {
    std::vector<NamedCurve> out;
    const double t0 = cfg.record.t0;
    const std::vector<double>& taus = cfg.record.taus;
    for (const auto& req : cfg.correlations) {
        NamedCurve c;
        c.name = req.name;
        c.taus = taus;
        if (req.type == CorrelationRequest::Type::g2_delay) {
            c.self_adjoint = true;
            for (const auto& p :
                 g2_delay(sim.store, req.mode, t0, taus, sim.escape_step, cfg.subensembles))
                c.points.push_back(p.est);
        } else {
            for (double tau : taus) {
                CorrelationSpec spec = req.type == CorrelationRequest::Type::special
                                           ? special_spec(req.which, t0, tau)
                                           : resolve_product(req, t0, tau);
                Plan p = plan(spec);
                if (!p.feasible)
                    throw ConfigError("correlation '" + req.name +
                                      "' cannot be sampled: " + p.detail);
                c.points.push_back(estimate(p, spec, sim.store, sim.escape_step,
                                            cfg.subensembles));
            }
            if (req.type == CorrelationRequest::Type::special)
                c.self_adjoint = req.which == 'a';
            else if (!taus.empty())
                c.self_adjoint = resolve_product(req, t0, taus.back()).self_adjoint();
        }
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<OccupationSeries> occupation_series(const RunConfig& cfg,
                                                const SimulationResult& sim) {
    const std::vector<double> times = unique_times(cfg.record);
    std::vector<OccupationSeries> out;
    const int S = int(sim.escape_step.size());
    for (int j = 0; j < cfg.model.modes; ++j) {
        OccupationSeries series;
        series.mode = j;
        series.times = times;
        for (double tm : times) {
            // Prefer the normal-ordered snapshot where two coexist (switch
            // time); the offset correction handles the wider orderings.
            const Snapshot* snap = nullptr;
            for (const auto& s : sim.store.all()) {
                if (std::abs(s.time - tm) > 1e-9) continue;
                if (ordering_offset(s_of(s.rep)) == 0.0) {
                    snap = &s;
                    break;
                }
                if (!snap) snap = &s;
            }
            if (!snap) throw MissingSnapshot("no snapshot at requested record time");
            const double offset = ordering_offset(s_of(snap->rep));
            Eigen::VectorXcd prod(S);
            std::vector<unsigned char> mask(static_cast<std::size_t>(S), 0);
            for (int t = 0; t < S; ++t) {
                prod[t] = snap->alpha(j, t) * snap->beta(j, t) - offset;
                mask[std::size_t(t)] = sim.escape_step[std::size_t(t)] > snap->step ? 1 : 0;
            }
            series.points.push_back(estimate_subensembles(prod, mask, cfg.subensembles));
        }
        out.push_back(std::move(series));
    }
    return out;
}

std::vector<NamedCurve> oracle_curves(const RunConfig& cfg) {
    cfg.validate();
    LindbladOracle L(cfg.model, oracle_cutoff(cfg));
    const double dt_ode = oracle_dt(cfg);
    const double t0 = cfg.record.t0;
    const std::vector<double>& taus = cfg.record.taus;
    const int M = cfg.model.modes;

    Eigen::MatrixXcd rho_t0 = cfg.initial.kind == InitialState::Kind::vacuum
                                  ? L.vacuum()
                                  : coherent_density(M, oracle_cutoff(cfg),
                                                     cfg.initial.amplitudes);
    L.evolve(rho_t0, t0, dt_ode, /*check_cutoff=*/true);

    // Occupations along t0 + tau for the g2 normalization.
    std::vector<std::vector<double>> occ(taus.size(), std::vector<double>(std::size_t(M)));
    {
        Eigen::MatrixXcd r = rho_t0;
        double cur = t0;
        for (std::size_t i = 0; i < taus.size(); ++i) {
            L.evolve(r, t0 + taus[i] - cur, dt_ode, true);
            cur = t0 + taus[i];
            for (int j = 0; j < M; ++j) occ[i][std::size_t(j)] = L.mode_occupation(r, j);
        }
    }

    std::vector<NamedCurve> out;
    for (const auto& req : cfg.correlations) {
        NamedCurve c;
        c.name = req.name;
        c.taus = taus;
        if (req.type == CorrelationRequest::Type::g2_delay) {
            c.self_adjoint = true;
            const CorrelationSpec spec = g2_product_spec(req.mode, t0, 1.0);
            const auto num = oracle_multitime_curve(L, rho_t0, spec.factors, taus, dt_ode);
            const double n1 = L.mode_occupation(rho_t0, 0);
            for (std::size_t i = 0; i < taus.size(); ++i) {
                const double den = n1 * occ[i][std::size_t(req.mode)];
                c.points.push_back(oracle_point(num[i].real() / den));
            }
        } else {
            CorrelationSpec spec;
            if (req.type == CorrelationRequest::Type::special) {
                spec = special_spec(req.which, t0, taus.empty() ? 1.0 : std::max(taus.back(), 1.0));
                c.self_adjoint = req.which == 'a';
            } else {
                for (const auto& rf : req.factors)
                    if (rf.tag == RawFactor::TimeTag::literal)
                        throw ConfigError("reference curves need symbolic times (t0 / t0+tau)");
                spec = resolve_product(req, t0, 1.0);
                c.self_adjoint = spec.self_adjoint();
            }
            const auto vals = oracle_multitime_curve(L, rho_t0, spec.factors, taus, dt_ode);
            for (Complex v : vals) c.points.push_back(oracle_point(v));
        }
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<OccupationSeries> oracle_occupations(const RunConfig& cfg) {
    cfg.validate();
    LindbladOracle L(cfg.model, oracle_cutoff(cfg));
    const double dt_ode = oracle_dt(cfg);
    const int M = cfg.model.modes;
    Eigen::MatrixXcd rho = cfg.initial.kind == InitialState::Kind::vacuum
                               ? L.vacuum()
                               : coherent_density(M, oracle_cutoff(cfg), cfg.initial.amplitudes);
    const std::vector<double> times = unique_times(cfg.record);
    std::vector<OccupationSeries> out(static_cast<std::size_t>(M));
    for (int j = 0; j < M; ++j) {
        out[std::size_t(j)].mode = j;
        out[std::size_t(j)].times = times;
    }
    double cur = 0.0;
    for (double tm : times) {
        L.evolve(rho, tm - cur, dt_ode, true);
        cur = tm;
        for (int j = 0; j < M; ++j)
            out[std::size_t(j)].points.push_back(oracle_point(L.mode_occupation(rho, j)));
    }
    return out;
}

int run_simulate(const RunConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    SimulationResult sim = simulate(cfg);
    std::vector<std::string> files;

    const auto occ = occupation_series(cfg, sim);
    write_occupations_csv(cfg.out_dir + "/occupations.csv", occ);
    files.push_back("occupations.csv");

    save_checkpoint(sim.final_state, cfg.out_dir + "/final_state.ckpt");
    files.push_back("final_state.ckpt");

    write_text_file(cfg.out_dir + "/timestep_report.txt", timestep_text(sim.timestep));
    files.push_back("timestep_report.txt");

    nlohmann::json extra;
    extra["trajectories"] = cfg.trajectories;
    extra["escaped"] = sim.escaped;
    extra["clamp_events"] = sim.clamp_count;
    extra["timestep_pass"] = sim.timestep.pass;
    extra["wall_seconds"] = sim.wall_seconds;
    write_manifest(cfg, "simulate", files, extra);

    std::printf("simulate: %d trajectories to t=%g (%.1f s), %zu escaped", cfg.trajectories,
                cfg.t_end, sim.wall_seconds, sim.escaped);
    if (cfg.rep == Representation::classical_p)
        std::printf(", %llu diffusion clamps", static_cast<unsigned long long>(sim.clamp_count));
    std::printf("\n%s", timestep_text(sim.timestep).c_str());
    std::printf("outputs in %s\n", cfg.out_dir.c_str());
    return 0;
}

int run_correlate(const RunConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    SimulationResult sim = simulate(cfg);
    std::vector<std::string> files;

    const auto occ = occupation_series(cfg, sim);
    write_occupations_csv(cfg.out_dir + "/occupations.csv", occ);
    files.push_back("occupations.csv");

    const auto curves = correlation_curves(cfg, sim);
    for (const auto& c : curves) {
        const std::string base = sanitize_filename(c.name);
        write_curve_csv(cfg.out_dir + "/" + base + ".csv", c);
        files.push_back(base + ".csv");
        if (cfg.emit_gnuplot) {
            write_text_file(cfg.out_dir + "/" + base + ".gnuplot",
                            gnuplot_script(base + ".csv", c));
            files.push_back(base + ".gnuplot");
        }
    }

    write_text_file(cfg.out_dir + "/timestep_report.txt", timestep_text(sim.timestep));
    files.push_back("timestep_report.txt");

    nlohmann::json extra;
    extra["source"] = "trajectories";
    extra["trajectories"] = cfg.trajectories;
    extra["escaped"] = sim.escaped;
    extra["clamp_events"] = sim.clamp_count;
    extra["timestep_pass"] = sim.timestep.pass;
    extra["wall_seconds"] = sim.wall_seconds;
    write_manifest(cfg, "correlate", files, extra);

    std::printf("correlate: %zu curve(s) from %d trajectories (%.1f s), %zu escaped",
                curves.size(), cfg.trajectories, sim.wall_seconds, sim.escaped);
    if (cfg.rep == Representation::classical_p)
        std::printf(", %llu diffusion clamps", static_cast<unsigned long long>(sim.clamp_count));
    std::printf("\noutputs in %s\n", cfg.out_dir.c_str());
    return 0;
}

int run_oracle(const RunConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    const auto t_begin = std::chrono::steady_clock::now();
    std::vector<std::string> files;

    const auto curves = oracle_curves(cfg);
    for (const auto& c : curves) {
        const std::string base = sanitize_filename(c.name) + "_oracle";
        write_curve_csv(cfg.out_dir + "/" + base + ".csv", c);
        files.push_back(base + ".csv");
    }
    const auto occ = oracle_occupations(cfg);
    write_occupations_csv(cfg.out_dir + "/occupations_oracle.csv", occ);
    files.push_back("occupations_oracle.csv");

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
    nlohmann::json extra;
    extra["source"] = "oracle";
    extra["cutoff"] = oracle_cutoff(cfg);
    extra["dt_ode"] = oracle_dt(cfg);
    extra["wall_seconds"] = wall;
    write_manifest(cfg, "oracle", files, extra);

    std::printf("oracle: %zu curve(s), cutoff %d, dt_ode %g (%.1f s)\noutputs in %s\n",
                curves.size(), oracle_cutoff(cfg), oracle_dt(cfg), wall, cfg.out_dir.c_str());
    return 0;
}

int run_plan(const RunConfig& cfg) {
    cfg.validate();
    const double t0 = cfg.record.t0;
    double tau = 1.0;
    for (double x : cfg.record.taus)
        if (x > 0.0) {
            tau = x;
            break;
        }
    for (const auto& req : cfg.correlations) {
        CorrelationSpec spec;
        if (req.type == CorrelationRequest::Type::g2_delay)
            spec = g2_product_spec(req.mode, t0, tau);
        else if (req.type == CorrelationRequest::Type::special)
            spec = special_spec(req.which, t0, tau);
        else
            spec = resolve_product(req, t0, tau);
        Plan p = plan(spec);
        std::printf("%s: %s\n", req.name.c_str(), format_product(spec).c_str());
        if (!p.feasible) {
            std::printf("  not samplable: %s\n", p.detail.c_str());
            continue;
        }
        std::printf("  route: %s", category_name(p.category));
        if (p.switch_label >= 0)
            std::printf(", switch before t%d (t = %g)", p.switch_label,
                        spec.times[std::size_t(p.switch_label)]);
        std::printf(", %zu branch(es)\n", p.branches.size());
        std::istringstream lines(p.detail);
        for (std::string line; std::getline(lines, line);)
            std::printf("  %s\n", line.c_str());
    }
    return 0;
}

int run_tally(int num_factors, int max_times, const std::string& out_path) {
    const auto t_begin = std::chrono::steady_clock::now();
    const TallyCounts c = tally(num_factors, max_times);
    const auto bad = tally_infeasible_products(num_factors, max_times);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();

    std::ostringstream os;
    os << "operator products: " << num_factors << " factors, up to " << max_times
       << " distinct times, one mode\n";
    os << "  total:                  " << c.total << "\n";
    os << "  single-time:            " << c.single_time << "\n";
    os << "  normal route:           " << c.pure_p << "\n";
    os << "  anti-normal route:      " << c.pure_q << "\n";
    os << "  mixed route:            " << c.mixed << "\n";
    os << "  samplable:              " << c.doable << "\n";
    os << "  ordered, not samplable: " << c.ordered_not_doable << "\n";
    os << "  not time-ordered:       " << c.not_time_ordered << "\n";
    os << "ordered but not samplable products (" << bad.size() << "):\n";
    for (const auto& s : bad) os << "  " << s << "\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "elapsed: %.3f s\n", wall);
    os << buf;

    std::fputs(os.str().c_str(), stdout);
    if (!out_path.empty()) write_text_file(out_path, os.str());
    return 0;
}

int run_convergence(const RunConfig& cfg, int levels, int trajectories) {
    cfg.validate();
    if (levels < 2) throw ConfigError("convergence check needs at least 2 levels");
    if (trajectories < 1) throw ConfigError("convergence check needs at least 1 trajectory");
    const std::uint64_t steps_total = step_of(cfg.t_end, cfg.dt);
    if (steps_total % (std::uint64_t(1) << std::uint64_t(levels)) != 0)
        throw ConfigError("t_end/dt must be divisible by 2^levels for the doubling ladder");

    const int M = cfg.model.modes;
    Eigen::VectorXcd a0 = Eigen::VectorXcd::Zero(M);
    if (cfg.initial.kind == InitialState::Kind::coherent) a0 = cfg.initial.amplitudes;
    Eigen::VectorXcd b0 = a0.conjugate();

    const StepConfig scfg = cfg.step_config();
    std::vector<double> disc(std::size_t(levels), 0.0);
    auto ladder = [&](const auto& model) {
        for (int l = 0; l < levels; ++l) {
            const double dtl = cfg.dt * double(1 << l);
            const std::uint64_t fine = steps_total >> l;
            double acc = 0.0;
            for (int tr = 0; tr < trajectories; ++tr)
                acc += doubling_check(model, cfg.seed, std::uint32_t(tr), a0, b0, 0.0, dtl,
                                      fine, scfg)
                           .max_abs();
            disc[std::size_t(l)] = acc / double(trajectories);
        }
    };
    if (cfg.rep == Representation::classical_p) {
        GlauberPSde model(cfg.model);
        ladder(model);
    } else {
        BoseHubbardSde model(cfg.model, s_of(cfg.rep), cfg.corrections);
        ladder(model);
    }

    std::printf("doubling ladder (dt vs 2dt discrepancy at t=%g, %d trajectories)\n", cfg.t_end,
                trajectories);
    std::printf("%12s  %14s  %8s\n", "dt", "discrepancy", "order");
    double slope_sum = 0.0;
    int slope_n = 0;
    for (int l = 0; l < levels; ++l) {
        const double dtl = cfg.dt * double(1 << l);
        if (l + 1 < levels && disc[std::size_t(l)] > 0.0 && disc[std::size_t(l + 1)] > 0.0) {
            const double order = std::log2(disc[std::size_t(l + 1)] / disc[std::size_t(l)]);
            std::printf("%12g  %14.6e  %8.3f\n", dtl, disc[std::size_t(l)], order);
            slope_sum += order;
            ++slope_n;
        } else {
            std::printf("%12g  %14.6e  %8s\n", dtl, disc[std::size_t(l)], "-");
        }
    }
    bool monotone = true;
    for (int l = 0; l + 1 < levels; ++l)
        if (!(disc[std::size_t(l)] < disc[std::size_t(l + 1)])) monotone = false;
    if (slope_n > 0) std::printf("mean order: %.3f\n", slope_sum / double(slope_n));
    std::printf("monotone shrink toward small dt: %s\n", monotone ? "yes" : "no");
    return 0;
}

} // namespace phasecorr
