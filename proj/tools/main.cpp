#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include <phasecorr/errors.hpp>
#include <phasecorr/run.hpp>

namespace {

// Shared --config/--seed/--workers/--out overrides for the run-style
// subcommands.
struct CommonOpts {
    std::string config;
    std::int64_t seed = -1;
    int workers = -1;
    std::string out;
    bool gnuplot = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_gnuplot) {
    cmd->add_option("-c,--config", opts.config, "run configuration (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", opts.seed, "override the configured master seed");
    cmd->add_option("--workers", opts.workers, "override the worker-thread count");
    cmd->add_option("--out", opts.out, "override the output directory");
    if (with_gnuplot)
        cmd->add_flag("--emit-gnuplot", opts.gnuplot, "also write gnuplot scripts per curve");
}

phasecorr::RunConfig load(const CommonOpts& opts) {
    phasecorr::RunConfig cfg = phasecorr::parse_config_file(opts.config);
    if (opts.seed >= 0) cfg.seed = std::uint64_t(opts.seed);
    if (opts.workers >= 0) cfg.workers = opts.workers;
    if (!opts.out.empty()) cfg.out_dir = opts.out;
    if (opts.gnuplot) cfg.emit_gnuplot = true;
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic phase-space correlation engine for driven-dissipative "
                 "bosonic lattices"};
    app.require_subcommand(1);

    CommonOpts sim_opts, cor_opts, orc_opts, plan_opts, conv_opts;

    CLI::App* sim = app.add_subcommand("simulate", "integrate the ensemble and record "
                                                   "occupations and a final checkpoint");
    add_common(sim, sim_opts, false);

    CLI::App* cor = app.add_subcommand("correlate", "integrate the ensemble and emit the "
                                                    "configured correlation curves");
    add_common(cor, cor_opts, true);

    CLI::App* orc = app.add_subcommand("oracle", "emit the same curves from the truncated "
                                                 "number-basis master equation");
    add_common(orc, orc_opts, false);

    CLI::App* pln = app.add_subcommand("plan", "show how each configured correlation would "
                                               "be sampled");
    add_common(pln, plan_opts, false);

    int tally_factors = 3;
    int tally_times = 3;
    std::string tally_out;
    CLI::App* tly = app.add_subcommand("tally", "classify every operator product of a given "
                                                "size by sampling route");
    tly->add_option("--factors", tally_factors, "number of operator factors")
        ->check(CLI::PositiveNumber);
    tly->add_option("--max-times", tally_times, "maximum number of distinct times")
        ->check(CLI::PositiveNumber);
    tly->add_option("--out", tally_out, "also write the table to this file");

    int conv_levels = 4;
    int conv_traj = 16;
    CLI::App* cnv = app.add_subcommand("convergence-check", "timestep-doubling ladder on the "
                                                            "configured model");
    add_common(cnv, conv_opts, false);
    cnv->add_option("--levels", conv_levels, "number of dt doublings")->check(CLI::PositiveNumber);
    cnv->add_option("--trajectories", conv_traj, "trajectories per level")
        ->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return phasecorr::run_simulate(load(sim_opts));
        if (cor->parsed()) return phasecorr::run_correlate(load(cor_opts));
        if (orc->parsed()) return phasecorr::run_oracle(load(orc_opts));
        if (pln->parsed()) return phasecorr::run_plan(load(plan_opts));
        if (tly->parsed()) return phasecorr::run_tally(tally_factors, tally_times, tally_out);
        if (cnv->parsed()) return phasecorr::run_convergence(load(conv_opts), conv_levels,
                                                             conv_traj);
    } catch (const phasecorr::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const phasecorr::NumericalFailure& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
