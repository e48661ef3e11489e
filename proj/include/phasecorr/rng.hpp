#ifndef PHASECORR_RNG_HPP
#define PHASECORR_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace phasecorr {

// Counter-based RNG (Philox-4x32-10). Every random number is a pure function
// of (master_seed, trajectory, purpose, step, index), so trajectories are
// reproducible bit-for-bit regardless of how they are scheduled onto workers,
// and the timestep-doubling check can replay the identical noise tape.
struct Philox4x32 {
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;

    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 2> key,
                                              std::array<std::uint32_t, 4> ctr) {
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = std::uint64_t(kMul0) * ctr[0];
            const std::uint64_t p1 = std::uint64_t(kMul1) * ctr[2];
            const std::array<std::uint32_t, 4> next{
                std::uint32_t(p1 >> 32) ^ ctr[1] ^ key[0],
                std::uint32_t(p1),
                std::uint32_t(p0 >> 32) ^ ctr[3] ^ key[1],
                std::uint32_t(p0)};
            ctr = next;
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        return ctr;
    }
};

// Independent sub-streams of one master seed. Keeping the purposes apart
// guarantees that e.g. conversion noise never aliases dynamics noise.
enum class NoisePurpose : std::uint32_t {
    dynamics = 0,   // per-step SDE noises
    conversion = 1, // one-off zeta draws at a representation switch
    initial = 2,    // initial-state sampling
};

// One trajectory's view of the counter space: a stateless stream indexed by
// (step, k). Uniforms and normals share the index space two-per-block.
class TrajectoryStream {
public:
    TrajectoryStream(std::uint64_t master_seed, std::uint32_t trajectory,
                     NoisePurpose purpose)
        : key_{std::uint32_t(master_seed), std::uint32_t(master_seed >> 32)},
          trajectory_(trajectory), purpose_(std::uint32_t(purpose)) {}

    // k-th uniform in (0,1) for the given step; two uniforms per Philox block.
    double uniform(std::uint64_t step, std::uint32_t k) const {
        const auto b = raw_block(step, k / 2);
        const std::uint64_t bits = (k % 2 == 0)
            ? (std::uint64_t(b[0]) << 32) | b[1]
            : (std::uint64_t(b[2]) << 32) | b[3];
        return to_unit_interval(bits);
    }

    // Fills out[0..n) with standard normals (Box-Muller, pairs per block).
    void fill_normals(std::uint64_t step, double* out, std::uint32_t n) const {
        for (std::uint32_t i = 0; i < n; i += 2) {
            const auto b = raw_block(step, i / 2);
            const double u1 = to_unit_interval((std::uint64_t(b[0]) << 32) | b[1]);
            const double u2 = to_unit_interval((std::uint64_t(b[2]) << 32) | b[3]);
            const double r = std::sqrt(-2.0 * std::log(u1));
            const double phi = 2.0 * std::numbers::pi * u2;
            out[i] = r * std::cos(phi);
            if (i + 1 < n) out[i + 1] = r * std::sin(phi);
        }
    }

    double normal(std::uint64_t step, std::uint32_t k) const {
        const auto b = raw_block(step, k / 2);
        const double u1 = to_unit_interval((std::uint64_t(b[0]) << 32) | b[1]);
        const double u2 = to_unit_interval((std::uint64_t(b[2]) << 32) | b[3]);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phi = 2.0 * std::numbers::pi * u2;
        return (k % 2 == 0) ? r * std::cos(phi) : r * std::sin(phi);
    }

    // Standard-normal-equivalent noise built from n_b uniforms:
    // sqrt(12/n_b) * sum(u - 1/2). Matches Gaussian variance and vanishing
    // odd moments; fourth moment 3 - 1.2/n_b.
    double binomial_normal(std::uint64_t step, std::uint32_t k, int n_b) const {
        double acc = 0.0;
        for (int m = 0; m < n_b; ++m)
            acc += uniform(step, k * std::uint32_t(n_b) + std::uint32_t(m)) - 0.5;
        return std::sqrt(12.0 / n_b) * acc;
    }

private:
    std::array<std::uint32_t, 4> raw_block(std::uint64_t step, std::uint32_t blk) const {
        // Counter layout: (trajectory, purpose | step-high bits, step-low, block).
        return Philox4x32::block(key_, {trajectory_,
                                        purpose_ | (std::uint32_t(step >> 32) << 8),
                                        std::uint32_t(step), blk});
    }

    static double to_unit_interval(std::uint64_t bits) {
        // 53-bit mantissa, offset by half an ulp so the result is never 0
        // (Box-Muller takes a log) and never 1.
        return (double(bits >> 11) + 0.5) * 0x1.0p-53;
    }

    std::array<std::uint32_t, 2> key_;
    std::uint32_t trajectory_;
    std::uint32_t purpose_;
};

} // namespace phasecorr

#endif
