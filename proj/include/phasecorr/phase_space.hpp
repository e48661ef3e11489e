#ifndef PHASECORR_PHASE_SPACE_HPP
#define PHASECORR_PHASE_SPACE_HPP

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <phasecorr/errors.hpp>
#include <phasecorr/stats.hpp>

namespace phasecorr {

using Complex = std::complex<double>;

// One-parameter family of operator orderings: s = 1 normal (positive-P),
// s = 0 symmetric (doubled-Wigner), s = -1 anti-normal (doubled-Q).
// classical_p is the single-phase-space Glauber-Sudarshan mode: s = 1 with
// beta pinned to conj(alpha) at all times.
enum class Representation { positive_p, doubled_wigner, doubled_q, classical_p };

double s_of(Representation rep);
std::string to_string(Representation rep);
Representation representation_from_string(const std::string& name);

inline bool is_doubled(Representation rep) { return rep != Representation::classical_p; }

// Ordering offset of the number-like estimator: <alpha_j beta_j> estimates
// <a^dag a> + (1-s)/2 in the s-ordered representation.
inline double ordering_offset(double s) { return 0.5 * (1.0 - s); }

// S trajectories of the doubled phase-space configuration {alpha_j, beta_j}.
// Column t of each matrix is one trajectory; a trajectory keeps the same
// column index (and thus the same RNG stream) for its whole life.
struct Ensemble {
    Eigen::MatrixXcd alpha; // M x S
    Eigen::MatrixXcd beta;  // M x S
    Representation rep = Representation::positive_p;
    double time = 0.0;
    std::uint64_t master_seed = 0;
    // Step index at which a trajectory escaped; UINT64_MAX = alive. A frozen
    // trajectory keeps its last accepted state and is excluded from every
    // average over later times.
    std::vector<std::uint64_t> escape_step;

    int modes() const { return int(alpha.rows()); }
    int size() const { return int(alpha.cols()); }
    std::size_t escaped_count() const;
};

// All trajectories start in the exact vacuum of the requested ordering:
// positive-P vacuum is the zero point; the wider-ordering vacua are sampled
// by converting the zero ensemble (conversion-noise moments give
// <alpha' beta'> -> 1 for doubled-Q and 1/2 for doubled-Wigner).
Ensemble init_vacuum(int modes, int size, Representation rep, std::uint64_t master_seed);

// Coherent-state initialization |c_j> per mode, same sampling rule.
Ensemble init_coherent(const Eigen::VectorXcd& amplitudes, int size, Representation rep,
                       std::uint64_t master_seed);

// Moves samples toward less normal ordering (target s <= current s) by adding
// one fresh complex Gaussian zeta per mode per trajectory:
//   alpha' = alpha + sqrt((s0-s)/2) zeta,  beta' = beta + sqrt((s0-s)/2) conj(zeta).
// conversion_index keys the RNG so repeated conversions stay independent.
Ensemble convert_samples(const Ensemble& e, Representation target,
                         std::uint32_t conversion_index = 0);

// Re <alpha_j beta_j> with sub-ensemble error. Rejects doubled-Q/Wigner input
// unless correct_ordering is set, in which case the (1-s)/2 offset is removed.
EstimateRI occupation(const Ensemble& e, int mode, int subensembles,
                      bool correct_ordering = false);

// Trajectories still included in averages at (or after) the given step.
std::vector<unsigned char> inclusion_mask(const Ensemble& e, std::uint64_t step);

// A stored copy of the ensemble amplitudes at one record time, tagged with
// the representation in force. At a switch time both tags are stored.
struct Snapshot {
    double time = 0.0;
    Representation rep = Representation::positive_p;
    std::uint64_t step = 0;
    Eigen::MatrixXcd alpha;
    Eigen::MatrixXcd beta;
};

class SnapshotStore {
public:
    void add(Snapshot snap) { snaps_.push_back(std::move(snap)); }
    const Snapshot& at(double time, Representation rep) const;
    const Snapshot* find(double time, Representation rep) const;
    bool has(double time, Representation rep) const { return find(time, rep) != nullptr; }
    const std::vector<Snapshot>& all() const { return snaps_; }
    std::size_t size() const { return snaps_.size(); }

private:
    std::vector<Snapshot> snaps_;
};

// Binary little-endian checkpoint: header {u32 magic, u32 version, u64 M,
// u64 S, f64 s, f64 time}, then S x 2M complex doubles (alpha then beta rows
// per trajectory). classical_p is flagged in the s slot by storing s = 2.
void save_checkpoint(const Ensemble& e, const std::string& path);
Ensemble load_checkpoint(const std::string& path);

} // namespace phasecorr

#endif
