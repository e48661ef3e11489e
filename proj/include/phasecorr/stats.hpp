#ifndef PHASECORR_STATS_HPP
#define PHASECORR_STATS_HPP

#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace phasecorr {

// Mean with separate 1-sigma errors on real and imaginary part, plus the
// number of trajectories that actually entered the average.
struct EstimateRI {
    std::complex<double> value{0.0, 0.0};
    double re_err = 0.0;
    double im_err = 0.0;
    std::size_t n_effective = 0;
    bool defined = true; // false marks e.g. a zero-occupation normalization
};

// Deterministic pairwise tree sum over a fixed index order. The reduction
// shape depends only on the length, never on worker count or scheduling.
template <class Scalar>
Scalar pairwise_sum(const Scalar* x, std::size_t n) {
    if (n == 0) return Scalar(0);
    if (n <= 8) {
        Scalar acc = x[0];
        for (std::size_t i = 1; i < n; ++i) acc += x[i];
        return acc;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

template <class Scalar>
Scalar pairwise_sum(const std::vector<Scalar>& x) {
    return pairwise_sum(x.data(), x.size());
}

// Per-sub-ensemble means of per-trajectory values. Trajectories are split
// into u contiguous blocks; excluded trajectories (mask false) are dropped.
// A block with no valid trajectory is dropped entirely (its mean is
// undefined); this only happens under catastrophic escape rates.
struct SubEnsembleMeans {
    std::vector<std::complex<double>> block_means;
    std::vector<std::size_t> block_counts; // valid trajectories per kept block
    std::size_t n_effective = 0;
};

SubEnsembleMeans subensemble_means(const Eigen::VectorXcd& per_trajectory,
                                   const std::vector<unsigned char>& included,
                                   int u);

// Spread-of-means uncertainty: err = sqrt(var_pop(block means) / (u - 1)),
// applied separately to real and imaginary parts. The central value is the
// included-trajectory grand mean.
EstimateRI estimate_from_blocks(const SubEnsembleMeans& blocks);

EstimateRI estimate_subensembles(const Eigen::VectorXcd& per_trajectory,
                                 const std::vector<unsigned char>& included,
                                 int u);

// Ratio statistics for normalized correlations: the functional f is applied
// to each sub-ensemble's mean tuple and the spread of the per-block results
// provides the error (first-order delta method equivalent for smooth f).
// Blocks where f is undefined (flagged via the returned 'ok') are dropped.
struct RatioSample {
    std::complex<double> value;
    bool ok;
};

EstimateRI estimate_ratio(const std::vector<SubEnsembleMeans>& inputs,
                          const std::function<RatioSample(
                              const std::vector<std::complex<double>>&)>& f);

} // namespace phasecorr

#endif
