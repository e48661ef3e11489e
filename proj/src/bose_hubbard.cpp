#include <phasecorr/bose_hubbard.hpp>

#include <cmath>

#include <phasecorr/errors.hpp>

namespace phasecorr {

ModelParams ModelParams::chain(int modes, double U, double J, double delta, double gamma,
                               double nbar, Complex drive) {
    ModelParams p;
    p.modes = modes;
    p.U = U;
    p.gamma = gamma;
    p.nbar = nbar;
    p.Hsp = Eigen::MatrixXcd::Zero(modes, modes);
    for (int j = 0; j < modes; ++j) {
        p.Hsp(j, j) = -delta;
        if (j + 1 < modes) {
            p.Hsp(j, j + 1) = -J;
            p.Hsp(j + 1, j) = -J;
        }
    }
    p.F = Eigen::VectorXcd::Zero(modes);
    if (modes > 0) p.F[0] = drive;
    return p;
}

void ModelParams::validate() const {
    if (modes < 1) throw ConfigError("model needs at least one mode");
    if (gamma < 0.0) throw ConfigError("gamma must be non-negative");
    if (nbar < 0.0) throw ConfigError("nbar must be non-negative");
    if (Hsp.rows() != modes || Hsp.cols() != modes)
        throw ConfigError("single-particle matrix has wrong shape");
    if (F.size() != modes) throw ConfigError("drive vector has wrong length");
    if ((Hsp - Hsp.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
        throw ConfigError("single-particle matrix must be Hermitian");
}

// ---- doubled s-ordered SDE -----------------------------------------------------

BoseHubbardSde::BoseHubbardSde(const ModelParams& p, double s, bool corrections)
    : p_(p), s_(s), corrections_(corrections) {
    p_.validate();
    const Complex i(0.0, 1.0);
    lam_a_ = std::sqrt(-i * s * p_.U);
    lam_b_ = std::sqrt(i * s * p_.U);
    corr_a_ = corrections ? i * s * p_.U * 0.5 : Complex(0.0, 0.0);
    corr_b_ = -corr_a_;
    add_amp_ = std::sqrt(p_.gamma * (p_.nbar + ordering_offset(s)));
}

void BoseHubbardSde::coeffs(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b, double,
                            const NoiseBlock& nb, Eigen::VectorXcd& ea, Eigen::VectorXcd& ra,
                            Eigen::VectorXcd& eb, Eigen::VectorXcd& rb) const {
    const int M = p_.modes;
    const Complex i(0.0, 1.0);
    const double half_gamma = 0.5 * p_.gamma;
    for (int j = 0; j < M; ++j) {
        const Complex nj = a[j] * b[j] + (s_ - 1.0);
        ea[j] = -i * p_.U * nj - half_gamma - i * p_.Hsp(j, j) + lam_a_ * nb.xi[j] + corr_a_;
        eb[j] = i * p_.U * nj - half_gamma + i * std::conj(p_.Hsp(j, j)) +
                lam_b_ * nb.xi_tilde[j] + corr_b_;
        Complex couple_a = 0.0, couple_b = 0.0;
        for (int k = 0; k < M; ++k) {
            if (k == j) continue;
            couple_a += p_.Hsp(j, k) * a[k];
            couple_b += std::conj(p_.Hsp(j, k)) * b[k];
        }
        ra[j] = -i * p_.F[j] - i * couple_a + add_amp_ * nb.eta[j];
        rb[j] = i * std::conj(p_.F[j]) + i * couple_b + add_amp_ * std::conj(nb.eta[j]);
    }
}

// ---- classical (Glauber-Sudarshan) P -------------------------------------------

GlauberPSde::GlauberPSde(const ModelParams& p) : p_(p) { p_.validate(); }

std::pair<double, double> gsp_diffusion_eigenvalues(Complex alpha_j, const ModelParams& p) {
    const double base = 0.5 * p.gamma * p.nbar;
    const double swing = 0.5 * p.U * std::norm(alpha_j);
    return {base + swing, base - swing};
}

void GlauberPSde::coeffs(const Eigen::VectorXcd& a, double, const NoiseBlock& nb,
                         Eigen::VectorXcd& ea, Eigen::VectorXcd& ra) const {
    const int M = p_.modes;
    const Complex i(0.0, 1.0);
    const double half_gamma = 0.5 * p_.gamma;
    for (int j = 0; j < M; ++j) {
        // Normal-ordered drift with beta pinned to conj(alpha).
        ea[j] = -i * p_.U * std::norm(a[j]) - half_gamma - i * p_.Hsp(j, j);
        Complex couple = 0.0;
        for (int k = 0; k < M; ++k)
            if (k != j) couple += p_.Hsp(j, k) * a[k];

        // Quadrature diffusion D = [[Drr, Dri], [Dri, Dii]]:
        //   Drr = (U/2) Im(alpha^2) + g Nbar/2, Dii = -(U/2) Im(alpha^2) + g Nbar/2,
        //   Dri = -(U/2) Re(alpha^2)
        // Eigen-factorized noise: e^{i phi} (sqrt(l+) xi + i sqrt(l-) xi~),
        // phi = atan2(2 Dri, Drr - Dii)/2. A negative l- has no stochastic
        // realization; it is clamped to zero and the event counted.
        const Complex a2 = a[j] * a[j];
        const double d_rr = 0.5 * p_.U * a2.imag() + 0.5 * p_.gamma * p_.nbar;
        const double d_ii = -0.5 * p_.U * a2.imag() + 0.5 * p_.gamma * p_.nbar;
        const double d_ri = -0.5 * p_.U * a2.real();
        const double mean = 0.5 * (d_rr + d_ii);
        const double dev = std::hypot(0.5 * (d_rr - d_ii), d_ri);
        double lam_plus = mean + dev;
        double lam_minus = mean - dev;
        if (lam_minus < 0.0) {
            lam_minus = 0.0;
            clamp_count_.fetch_add(1, std::memory_order_relaxed);
        }
        if (lam_plus < 0.0) lam_plus = 0.0; // only when gamma Nbar < 0 (rejected earlier)
        const double phi = 0.5 * std::atan2(2.0 * d_ri, d_rr - d_ii);
        const Complex rot = std::polar(1.0, phi);
        const Complex noise =
            rot * (std::sqrt(lam_plus) * nb.xi[j] + i * std::sqrt(lam_minus) * nb.xi_tilde[j]);

        ra[j] = -i * p_.F[j] - i * couple + noise;
    }
}

} // namespace phasecorr
