#ifndef PHASECORR_MULTITIME_HPP
#define PHASECORR_MULTITIME_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <phasecorr/multitime_spec.hpp>
#include <phasecorr/phase_space.hpp>
#include <phasecorr/stats.hpp>

namespace phasecorr {

// Sample variable a factor maps to: unprimed values come from positive-P
// snapshots, primed values from doubled-Q snapshots after the switch.
enum class PlanVariable { alpha, beta, alpha_prime, beta_prime };

struct PlanFactor {
    PlanVariable var;
    int mode;
    int time_label;
};

// One term of the (possibly commutator-expanded) estimator: an integer weight
// times a product of sample variables. An empty factor list is the constant 1.
struct PlanBranch {
    long long weight = 1;
    std::vector<PlanFactor> factors;
};

enum class PlanCategory { single_time, pure_p, pure_q, mixed };
enum class Infeasibility { none, requires_q_to_p, not_time_ordered };

struct Plan {
    bool feasible = false;
    Infeasibility reason = Infeasibility::none;
    PlanCategory category = PlanCategory::pure_p;
    // Time label at which samples must be converted P -> doubled-Q; -1 when no
    // conversion is needed (pure-P plans). For fully anti-normal plans this is
    // the earliest label used (convert before the first record time).
    int switch_label = -1;
    std::vector<PlanBranch> branches;
    std::string detail; // human-readable factor map or infeasibility note
};

// Decides how (and whether) a written product can be averaged from trajectory
// samples. The classifier prefers, in order: a pure normal-ordered assignment
// (creation -> beta left of the split, annihilation -> alpha right of it),
// the same after rewriting adjacent equal-time factors into normal order via
// [a, a^dag] = 1, a pure anti-normal assignment (annihilation -> alpha',
// creation -> beta'), and finally a mixed assignment with a single switch
// time separating every normal-route factor from every anti-normal one.
Plan plan(const CorrelationSpec& spec);

// Row layout of the feasibility tally over all kind assignments and
// time-orderings (each time-topology counted once, single shared mode).
struct TallyCounts {
    long long total = 0;
    long long single_time = 0;
    long long pure_p = 0;
    long long pure_q = 0;
    long long mixed = 0;
    long long doable = 0;
    long long ordered_not_doable = 0;
    long long not_time_ordered = 0;
};

TallyCounts tally(int num_factors, int max_times);

// The ordered-but-not-doable products of the (num_factors, max_times) sector,
// formatted for display, in enumeration order.
std::vector<std::string> tally_infeasible_products(int num_factors, int max_times);

// Averages the per-trajectory branch products over snapshots. Every factor of
// one product is read from the same trajectory column; trajectories escaped
// at or before the latest involved snapshot are excluded.
EstimateRI estimate(const Plan& p, const CorrelationSpec& spec, const SnapshotStore& store,
                    const std::vector<std::uint64_t>& escape_step, int subensembles);

// Normalized two-time intensity cross-correlation
//   g_{1,j}(tau) = Re<alpha_1 beta_1 (t0) alpha_j beta_j (t0+tau)>
//                  / (n_1(t0) n_j(t0+tau))
// from positive-P (or classical-P) snapshots. The ratio is formed per
// sub-ensemble and its spread gives the error; a point whose occupation
// estimate is consistent with zero is reported undefined.
struct CorrelationPoint {
    double tau = 0.0;
    EstimateRI est;
};

std::vector<CorrelationPoint> g2_delay(const SnapshotStore& store, int mode_j, double t0,
                                       const std::vector<double>& taus,
                                       const std::vector<std::uint64_t>& escape_step,
                                       int subensembles);

// The four switch-demonstration correlators of the two-mode setup, read on
// mode 2 (index 1):
//   G_a = Re<alpha'_2(t0) alpha'_2(t0+tau) beta'_2(t0+tau) beta'_2(t0)>
//   G_b =    <alpha'_2(t0+tau)^2 beta'_2(t0)^2>
//   G_c = Re<alpha'_2(t0+tau) beta'_2(t0+tau) beta'_2(t0) alpha_2(t0)>
//   G_d =    <alpha'_2(t0) beta'_2(t0+tau)^2 alpha_2(t0)>
// G_c and G_d read both the unprimed and the primed samples at the switch
// time t0. Implemented through plan()+estimate() on the operator products.
struct SpecialCorrelators {
    std::vector<CorrelationPoint> Ga, Gb, Gc, Gd;
};

SpecialCorrelators special_correlators(const SnapshotStore& store, double t0,
                                       const std::vector<double>& taus,
                                       const std::vector<std::uint64_t>& escape_step,
                                       int subensembles);

// Operator products behind the four special correlators (mode index 1),
// parameterized by the concrete times {t0, t0+tau}.
CorrelationSpec special_spec(char which, double t0, double tau);

} // namespace phasecorr

#endif
