#ifndef PHASECORR_BOSE_HUBBARD_HPP
#define PHASECORR_BOSE_HUBBARD_HPP

#include <atomic>
#include <complex>
#include <cstdint>

#include <Eigen/Dense>

#include <phasecorr/phase_space.hpp>
#include <phasecorr/sde.hpp>

namespace phasecorr {

// Driven-dissipative Bose-Hubbard chain: on-site interaction U, single-particle
// matrix Hsp (diagonal -Delta, nearest-neighbour -J by default, arbitrary
// Hermitian matrix accepted), decay gamma into a bath of mean occupation Nbar,
// coherent drive vector F (F_1 = F real, rest zero in the standard setup).
struct ModelParams {
    int modes = 1;
    double U = 0.0;
    double gamma = 0.0;
    double nbar = 0.0;
    Eigen::MatrixXcd Hsp;  // modes x modes, Hermitian
    Eigen::VectorXcd F;    // modes

    static ModelParams chain(int modes, double U, double J, double delta, double gamma,
                             double nbar, Complex drive);
    void validate() const; // Hermiticity, gamma >= 0, nbar >= 0, sizes
};

// Ito SDE coefficients in the doubled s-ordered representation, split into
// exponential and rest classes:
//   e_alpha_j = -iU(alpha_j beta_j + s - 1) - gamma/2 + sqrt(-isU) xi_j
//               - i Hsp_jj [+ isU/2 when corrections are on]
//   r_alpha_j = -iF_j - i sum_{k != j} Hsp_jk alpha_k
//               + sqrt(gamma (Nbar + (1-s)/2)) eta_j
// and the conjugate-symmetric beta forms (+iU, sqrt(isU) xi~_j, -isU/2, +iF_j,
// +i Hsp^T off-diagonal, conj(eta_j)). The +-isU/2 terms cancel the spurious
// Stratonovich-type drift from reusing one noise draw across the step.
class BoseHubbardSde {
public:
    static constexpr bool doubled = true;

    BoseHubbardSde(const ModelParams& p, double s, bool corrections = true);

    int modes() const { return p_.modes; }
    double s() const { return s_; }
    bool corrections() const { return corrections_; }

    void coeffs(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b, double t,
                const NoiseBlock& nb, Eigen::VectorXcd& ea, Eigen::VectorXcd& ra,
                Eigen::VectorXcd& eb, Eigen::VectorXcd& rb) const;

    // Analytic RMS sizes of the noise terms for the timestep rule of thumb.
    double multiplicative_noise_rms(double dt) const { return std::abs(lam_a_) / std::sqrt(dt); }
    double additive_noise_rms(double dt) const { return add_amp_ / std::sqrt(dt); }

    const ModelParams& params() const { return p_; }

private:
    ModelParams p_;
    double s_;
    bool corrections_;
    Complex lam_a_;   // sqrt(-isU), principal branch
    Complex lam_b_;   // sqrt(+isU)
    Complex corr_a_;  // +isU/2 or 0
    Complex corr_b_;  // -isU/2 or 0
    double add_amp_;  // sqrt(gamma (Nbar + (1-s)/2))
};

// Glauber-Sudarshan (classical-P) variant: single phase space, beta = conj(alpha)
// implicitly. Drift is the s = 1 equation with beta replaced by conj(alpha);
// the diffusion matrix in the (Re alpha_j, Im alpha_j) quadratures is
//   D_rr = (U/2) Im(alpha^2) + gamma Nbar / 2
//   D_ii = -(U/2) Im(alpha^2) + gamma Nbar / 2
//   D_ri = -(U/2) Re(alpha^2)
// with eigenvalues gamma Nbar / 2 +- (U/2)|alpha|^2. Negative eigenvalues are
// clamped to zero (counted): the distribution then has no exact stochastic
// realization, which is the breakdown this mode exists to demonstrate.
class GlauberPSde {
public:
    static constexpr bool doubled = false;

    GlauberPSde(const ModelParams& p);

    int modes() const { return p_.modes; }

    void coeffs(const Eigen::VectorXcd& a, double t, const NoiseBlock& nb,
                Eigen::VectorXcd& ea, Eigen::VectorXcd& ra) const;

    double multiplicative_noise_rms(double) const { return 0.0; }
    double additive_noise_rms(double dt) const {
        // typical diffusion scale (thermal part only; the U part is reported
        // through the eigenvalue diagnostic instead)
        return std::sqrt(p_.gamma * p_.nbar) / std::sqrt(dt);
    }

    // Number of coefficient evaluations in which a negative eigenvalue was
    // clamped (with n midpoint iterations there are n+1 evaluations per step).
    std::uint64_t clamp_count() const { return clamp_count_.load(); }
    void reset_clamp_count() { clamp_count_ = 0; }

    const ModelParams& params() const { return p_; }

private:
    ModelParams p_;
    mutable std::atomic<std::uint64_t> clamp_count_{0};
};

// Diffusion eigenvalues lambda_+- = gamma Nbar / 2 +- (U/2) |alpha_j|^2 of the
// classical-P quadrature diffusion matrix at one phase-space point.
std::pair<double, double> gsp_diffusion_eigenvalues(Complex alpha_j, const ModelParams& p);

} // namespace phasecorr

#endif
