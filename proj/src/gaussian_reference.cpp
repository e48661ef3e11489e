#include <phasecorr/gaussian_reference.hpp>

#include <cmath>
#include <stdexcept>

namespace phasecorr {

GaussianReference::GaussianReference(double omega, double gamma, std::complex<double> F,
                                     double nbar)
    : lambda_(-std::complex<double>(0.0, 1.0) * omega - 0.5 * gamma),
      mean_(-std::complex<double>(0.0, 1.0) * F /
            (std::complex<double>(0.0, 1.0) * omega + 0.5 * gamma)),
      nbar_(nbar) {
    if (gamma <= 0.0)
        throw std::invalid_argument("the stationary reference needs gamma > 0");
}

double GaussianReference::stationary_occupation() const {
    return nbar_ + std::norm(mean_);
}

std::complex<double> GaussianReference::pair(const OperatorFactor& x, double tx,
                                             const OperatorFactor& y, double ty) const {
    if (x.kind == y.kind) return 0.0; // <da da> = <da^dag da^dag> = 0
    const double delta = std::abs(ty - tx);
    if (x.kind == OpKind::annihilation) {
        // written a(tx) ... a^dag(ty): evolve whichever operator is later
        const std::complex<double> rate = ty >= tx ? std::conj(lambda_) : lambda_;
        return (nbar_ + 1.0) * std::exp(rate * delta);
    }
    // written a^dag(tx) ... a(ty)
    const std::complex<double> rate = ty >= tx ? lambda_ : std::conj(lambda_);
    return nbar_ * std::exp(rate * delta);
}

// Sum over all partial pairings: each factor is either contracted with a
// later one or replaced by its mean.
std::complex<double> GaussianReference::wick(const CorrelationSpec& spec,
                                             const std::vector<int>& idx) const {
    if (idx.empty()) return 1.0;
    const int i = idx.front();
    const OperatorFactor& fi = spec.factors[std::size_t(i)];
    const double ti = spec.times[std::size_t(fi.time_label)];
    std::vector<int> rest(idx.begin() + 1, idx.end());

    const std::complex<double> mi =
        fi.kind == OpKind::annihilation ? mean_ : std::conj(mean_);
    std::complex<double> acc = mi * wick(spec, rest);

    for (std::size_t r = 0; r < rest.size(); ++r) {
        const int j = rest[r];
        const OperatorFactor& fj = spec.factors[std::size_t(j)];
        const double tj = spec.times[std::size_t(fj.time_label)];
        const std::complex<double> p = pair(fi, ti, fj, tj);
        if (p == std::complex<double>(0.0, 0.0)) continue;
        std::vector<int> rem;
        rem.reserve(rest.size() - 1);
        for (std::size_t q = 0; q < rest.size(); ++q)
            if (q != r) rem.push_back(rest[q]);
        acc += p * wick(spec, rem);
    }
    return acc;
}

std::complex<double> GaussianReference::expectation(const CorrelationSpec& spec) const {
    for (const auto& f : spec.factors)
        if (f.mode != 0)
            throw std::invalid_argument("the Gaussian reference is single-mode (mode 0)");
    std::vector<int> idx(spec.factors.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = int(i);
    return wick(spec, idx);
}

} // namespace phasecorr
