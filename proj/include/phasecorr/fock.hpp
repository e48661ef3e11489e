#ifndef PHASECORR_FOCK_HPP
#define PHASECORR_FOCK_HPP

#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <phasecorr/bose_hubbard.hpp>
#include <phasecorr/multitime_spec.hpp>

namespace phasecorr {

using SparseC = Eigen::SparseMatrix<Complex>;

// Truncated Fock space of M <= 3 modes with per-mode cutoff n_c. Basis index
// packs occupation numbers little-endian: idx = sum_j n_j (n_c+1)^j.
class FockSpace {
public:
    FockSpace(int modes, int cutoff);

    int modes() const { return modes_; }
    int cutoff() const { return cutoff_; }
    int dim() const { return dim_; }

    const SparseC& a(int mode) const { return a_[mode]; }
    const SparseC& adag(int mode) const { return adag_[mode]; }
    const SparseC& number(int mode) const { return n_[mode]; }

    // Total population of basis states with n_j = cutoff, maximized over j.
    double top_level_population(const Eigen::MatrixXcd& rho) const;

private:
    int modes_, cutoff_, dim_;
    std::vector<SparseC> a_, adag_, n_;
};

// Master-equation evolution engine:
//   drho/dt = K rho + rho K^dag + gamma(Nbar+1) sum_j a_j rho a_j^dag
//                               + gamma Nbar    sum_j a_j^dag rho a_j
// with K = -iH - gamma(Nbar+1)/2 sum a^dag a - gamma Nbar/2 sum a a^dag and
//   H = sum_j adag_j (-Delta + (U/2) adag_j a_j) a_j + (F adag_1 + h.c.)
//       - J sum_<jk> (adag_j a_k + h.c.)   [general Hsp accepted]
// Fixed-step RK4; the cutoff is validated by monitoring the top Fock level.
class LindbladOracle {
public:
    LindbladOracle(const ModelParams& p, int cutoff);

    const FockSpace& space() const { return space_; }
    const ModelParams& params() const { return p_; }

    Eigen::MatrixXcd vacuum() const;

    // Right-hand side applied to a (generally non-Hermitian) matrix.
    void rhs(const Eigen::MatrixXcd& rho, Eigen::MatrixXcd& out) const;

    // Evolves rho in place by T = steps * dt_ode. check_cutoff enables the
    // top-level population monitor (only meaningful for density matrices).
    void evolve(Eigen::MatrixXcd& rho, double T, double dt_ode,
                bool check_cutoff = true) const;

    std::complex<double> expectation(const SparseC& op, const Eigen::MatrixXcd& rho) const;
    double mode_occupation(const Eigen::MatrixXcd& rho, int mode) const;

    // Applies one operator factor as a left or right multiplication.
    enum class Side { left, right };
    void apply_factor(Eigen::MatrixXcd& rho, const OperatorFactor& f, Side side) const;

    static constexpr double kTopLevelTol = 1e-8;

private:
    ModelParams p_;
    FockSpace space_;
    SparseC K_;                  // -iH - (loss rates)/2
    SparseC Kdag_;
    std::vector<SparseC> jump_down_, jump_up_; // a_j, adag_j
    double rate_down_, rate_up_; // gamma(Nbar+1), gamma Nbar
    mutable Eigen::MatrixXcd k1_, k2_, k3_, k4_, tmp_; // RK4 scratch
};

// Multi-time expectation of a time-ordered factor product via interleaved
// operator applications and Lindblad propagation. The factor list is the
// written product; it must admit a split into a left block with
// non-decreasing times (applied as right multiplications, chronologically)
// and a right block with non-increasing times (left multiplications,
// chronologically). rho0 is the state at the earliest factor time.
Complex oracle_multitime(const LindbladOracle& L, const Eigen::MatrixXcd& rho0,
                         double rho0_time, const std::vector<OperatorFactor>& factors,
                         const std::vector<double>& times, double dt_ode);

// Curve variant for two-group specs (everything at t0, rest at t0 + tau):
// applies the t0 group once, then sweeps the conditioned matrix over the tau
// grid, applying the tau group to a copy at each grid point. Factors with
// time_label 0 are the t0 group; label 1 the swept group. Returns one complex
// value per tau.
std::vector<Complex> oracle_multitime_curve(const LindbladOracle& L,
                                            const Eigen::MatrixXcd& rho_t0,
                                            const std::vector<OperatorFactor>& factors,
                                            const std::vector<double>& taus,
                                            double dt_ode);

} // namespace phasecorr

#endif
