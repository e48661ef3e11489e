#include <phasecorr/stats.hpp>

#include <cmath>
#include <stdexcept>

namespace phasecorr {

SubEnsembleMeans subensemble_means(const Eigen::VectorXcd& per_trajectory,
                                   const std::vector<unsigned char>& included,
                                   int u) {
    const std::size_t S = std::size_t(per_trajectory.size());
    if (included.size() != S) throw std::invalid_argument("mask/value size mismatch");
    if (u <= 1 || S % std::size_t(u) != 0)
        throw std::invalid_argument("trajectory count must be a multiple of u > 1");
    const std::size_t block = S / std::size_t(u);

    SubEnsembleMeans out;
    out.block_means.reserve(std::size_t(u));
    out.block_counts.reserve(std::size_t(u));
    std::vector<std::complex<double>> scratch;
    scratch.reserve(block);
    for (int b = 0; b < u; ++b) {
        scratch.clear();
        for (std::size_t t = std::size_t(b) * block; t < std::size_t(b + 1) * block; ++t)
            if (included[t]) scratch.push_back(per_trajectory[Eigen::Index(t)]);
        if (scratch.empty()) continue; // block lost to escapes
        out.block_means.push_back(pairwise_sum(scratch) / double(scratch.size()));
        out.block_counts.push_back(scratch.size());
        out.n_effective += scratch.size();
    }
    return out;
}

EstimateRI estimate_from_blocks(const SubEnsembleMeans& blocks) {
    EstimateRI est;
    est.n_effective = blocks.n_effective;
    const std::size_t u = blocks.block_means.size();
    if (u == 0 || blocks.n_effective == 0) {
        est.defined = false;
        return est;
    }
    // Grand mean over included trajectories (count-weighted block means).
    std::vector<std::complex<double>> weighted(u);
    for (std::size_t b = 0; b < u; ++b)
        weighted[b] = blocks.block_means[b] * double(blocks.block_counts[b]);
    est.value = pairwise_sum(weighted) / double(blocks.n_effective);
    if (u < 2) {
        // one block cannot support a spread-of-means error bar
        est.re_err = est.im_err = 0.0;
        est.defined = false;
        return est;
    }
    // Spread of the block means around their own average, separately for the
    // real and imaginary parts.
    std::complex<double> bar = pairwise_sum(blocks.block_means) / double(u);
    double sr = 0.0, si = 0.0;
    for (const auto& m : blocks.block_means) {
        const double dr = m.real() - bar.real();
        const double di = m.imag() - bar.imag();
        sr += dr * dr;
        si += di * di;
    }
    est.re_err = std::sqrt(sr / double(u) / double(u - 1));
    est.im_err = std::sqrt(si / double(u) / double(u - 1));
    return est;
}

EstimateRI estimate_subensembles(const Eigen::VectorXcd& per_trajectory,
                                 const std::vector<unsigned char>& included,
                                 int u) {
    return estimate_from_blocks(subensemble_means(per_trajectory, included, u));
}

EstimateRI estimate_ratio(const std::vector<SubEnsembleMeans>& inputs,
                          const std::function<RatioSample(
                              const std::vector<std::complex<double>>&)>& f) {
    EstimateRI est;
    if (inputs.empty()) {
        est.defined = false;
        return est;
    }
    const std::size_t u = inputs[0].block_means.size();
    for (const auto& in : inputs)
        if (in.block_means.size() != u)
            throw std::invalid_argument("ratio inputs need identical block structure");

    std::vector<std::complex<double>> block_values;
    block_values.reserve(u);
    std::vector<std::complex<double>> args(inputs.size());
    std::size_t n_eff = inputs[0].n_effective;
    for (const auto& in : inputs) n_eff = std::min(n_eff, in.n_effective);
    for (std::size_t b = 0; b < u; ++b) {
        for (std::size_t i = 0; i < inputs.size(); ++i) args[i] = inputs[i].block_means[b];
        const RatioSample r = f(args);
        if (r.ok) block_values.push_back(r.value);
    }
    // Central value from the full-ensemble means; per-block ratios only set
    // the spread. That keeps the O(1/block) ratio bias out of the value.
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        std::vector<std::complex<double>> weighted(u);
        for (std::size_t b = 0; b < u; ++b)
            weighted[b] = inputs[i].block_means[b] * double(inputs[i].block_counts[b]);
        args[i] = pairwise_sum(weighted) / double(inputs[i].n_effective);
    }
    const RatioSample central = f(args);
    if (!central.ok || block_values.size() < 2) {
        est.defined = false;
        est.n_effective = n_eff;
        return est;
    }
    est.value = central.value;
    est.n_effective = n_eff;
    std::complex<double> bar = pairwise_sum(block_values) / double(block_values.size());
    double sr = 0.0, si = 0.0;
    for (const auto& v : block_values) {
        const double dr = v.real() - bar.real();
        const double di = v.imag() - bar.imag();
        sr += dr * dr;
        si += di * di;
    }
    const double m = double(block_values.size());
    est.re_err = std::sqrt(sr / m / (m - 1.0));
    est.im_err = std::sqrt(si / m / (m - 1.0));
    return est;
}

} // namespace phasecorr
