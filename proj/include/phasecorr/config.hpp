#ifndef PHASECORR_CONFIG_HPP
#define PHASECORR_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <phasecorr/bose_hubbard.hpp>
#include <phasecorr/multitime_spec.hpp>
#include <phasecorr/phase_space.hpp>
#include <phasecorr/sde.hpp>

namespace phasecorr {

// Correlation-request factor as written in the config: the time is either a
// symbolic token resolved against the record schedule or a literal number.
struct RawFactor {
    OpKind op = OpKind::annihilation;
    int mode = 0; // 0-based internally (1-based in the config file)
    enum class TimeTag { t0, t0_plus_tau, literal } tag = TimeTag::t0;
    double literal_time = 0.0;
};

struct CorrelationRequest {
    enum class Type { g2_delay, special, product };
    std::string name;
    Type type = Type::g2_delay;
    int mode = 0;     // g2_delay: the delayed mode j (0-based)
    char which = 'a'; // special: a|b|c|d
    std::vector<RawFactor> factors; // product
};

struct RecordSchedule {
    double t0 = 0.0;
    std::vector<double> taus; // sorted, starting at 0 unless configured otherwise
    std::vector<double> absolute_times() const;
};

struct SwitchPlan {
    double time = 0.0;
    Representation target = Representation::doubled_q;
};

struct InitialState {
    enum class Kind { vacuum, coherent } kind = Kind::vacuum;
    Eigen::VectorXcd amplitudes; // coherent only
};

struct OracleConfig {
    int cutoff = 0;     // 0 = pick by drive strength (6 weak / 12 strong)
    double dt_ode = 0.0; // 0 = dt/10
};

struct RunConfig {
    int version = 1;
    Representation rep = Representation::positive_p;
    int trajectories = 1 << 16;
    int subensembles = 32;
    double dt = 0.005;
    double t_end = 30.0;
    std::uint64_t seed = 1;
    int workers = 0; // 0 = hardware concurrency
    int midpoint_iterations = 1;
    Propagator propagator = Propagator::exponential;
    bool corrections = true;
    double escape_cap = 1e10;
    NoiseKind noise;

    ModelParams model;
    InitialState initial;
    RecordSchedule record;
    std::optional<SwitchPlan> switch_plan;
    std::vector<CorrelationRequest> correlations;
    OracleConfig oracle;

    std::string out_dir = "out";
    bool emit_gnuplot = false;

    StepConfig step_config() const;
    void validate() const; // cross-field invariants (grid commensurability etc.)
};

RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_text(const std::string& text);

} // namespace phasecorr

#endif
