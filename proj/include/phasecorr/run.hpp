#ifndef PHASECORR_RUN_HPP
#define PHASECORR_RUN_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <phasecorr/config.hpp>
#include <phasecorr/multitime.hpp>
#include <phasecorr/output.hpp>
#include <phasecorr/phase_space.hpp>
#include <phasecorr/sde.hpp>

namespace phasecorr {

struct SimulationResult {
    SnapshotStore store;                  // one snapshot per record time (two at a switch)
    Ensemble final_state;                 // ensemble at t_end (checkpointable)
    std::vector<std::uint64_t> escape_step;
    std::size_t escaped = 0;
    std::uint64_t clamp_count = 0;        // diffusion-clamp events (classical P only)
    TimestepReport timestep;
    double wall_seconds = 0.0;
};

// Integrates the full ensemble, recording snapshots at every record time.
// Work is split over whole sub-ensemble blocks so results are bit-identical
// for any worker count.
SimulationResult simulate(const RunConfig& cfg);

std::vector<NamedCurve> correlation_curves(const RunConfig& cfg, const SimulationResult& sim);
std::vector<OccupationSeries> occupation_series(const RunConfig& cfg, const SimulationResult& sim);

// Master-equation counterparts of the same requests (error columns zero).
std::vector<NamedCurve> oracle_curves(const RunConfig& cfg);
std::vector<OccupationSeries> oracle_occupations(const RunConfig& cfg);

// Subcommand bodies; each returns a process exit code.
int run_simulate(const RunConfig& cfg);
int run_correlate(const RunConfig& cfg);
int run_oracle(const RunConfig& cfg);
int run_plan(const RunConfig& cfg);
int run_tally(int num_factors, int max_times, const std::string& out_path);
int run_convergence(const RunConfig& cfg, int levels, int trajectories);

// Builds the operator-product request a correlation entry stands for, with
// symbolic times resolved to (t0, t0 + tau). Used by both estimator and
// oracle paths so the two always evaluate the same product.
CorrelationSpec resolve_product(const CorrelationRequest& req, double t0, double tau);

} // namespace phasecorr

#endif
