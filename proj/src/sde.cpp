#include <phasecorr/sde.hpp>

#include <vector>

namespace phasecorr {

void draw_noise(const TrajectoryStream& stream, int modes, double dt, std::uint64_t step,
                const NoiseKind& kind, NoiseBlock& out) {
    if (out.xi.size() != modes) out.resize(modes);
    const std::uint32_t n = std::uint32_t(4 * modes);
    // Fixed index layout per step: [0..M) xi, [M..2M) xi_tilde, [2M..4M)
    // eta real/imag pairs. The layout never depends on which channels a
    // model actually uses, so noise tapes are comparable across models.
    double buf[4 * 8];
    thread_local std::vector<double> heap;
    double* z = buf;
    if (n > 32) {
        heap.resize(n);
        z = heap.data();
    }
    if (kind.family == NoiseKind::Family::gaussian) {
        stream.fill_normals(step, z, n);
    } else {
        for (std::uint32_t k = 0; k < n; ++k) z[k] = stream.binomial_normal(step, k, kind.n_b);
    }
    const double inv_sqrt_dt = 1.0 / std::sqrt(dt);
    const double eta_scale = 1.0 / std::sqrt(2.0 * dt);
    for (int j = 0; j < modes; ++j) {
        out.xi[j] = z[j] * inv_sqrt_dt;
        out.xi_tilde[j] = z[modes + j] * inv_sqrt_dt;
        out.eta[j] = Complex(z[2 * modes + 2 * j], z[2 * modes + 2 * j + 1]) * eta_scale;
    }
}

} // namespace phasecorr
