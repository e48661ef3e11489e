#ifndef PHASECORR_GAUSSIAN_REFERENCE_HPP
#define PHASECORR_GAUSSIAN_REFERENCE_HPP

#include <complex>
#include <vector>

#include <phasecorr/multitime_spec.hpp>

namespace phasecorr {

// Closed-form multi-time correlations of the U = 0 driven damped single mode
// in its stationary Gaussian state. With omega the diagonal of Hsp (= -Delta)
// and lambda = -i omega - gamma/2:
//   <a>_st      = -iF / (i omega + gamma/2)
//   <da^dag(t) da(t+tau)> = Nbar e^{lambda tau}
//   <da(t) da^dag(t+tau)> = (Nbar+1) e^{lambda* tau}
//   <da da> = 0
// Any ordered product follows by Wick pairing with the written operator
// order deciding which of the two-point functions applies. This provides an
// exact reference for every planner assignment on linear dynamics.
class GaussianReference {
public:
    GaussianReference(double omega, double gamma, std::complex<double> F, double nbar);

    std::complex<double> mean_a() const { return mean_; }
    double stationary_occupation() const;

    // Expectation of the written product at the spec's concrete times
    // (single mode; all factors must have mode 0).
    std::complex<double> expectation(const CorrelationSpec& spec) const;

private:
    std::complex<double> pair(const OperatorFactor& x, double tx, const OperatorFactor& y,
                              double ty) const;
    std::complex<double> wick(const CorrelationSpec& spec, const std::vector<int>& idx) const;

    std::complex<double> lambda_;
    std::complex<double> mean_;
    double nbar_;
};

} // namespace phasecorr

#endif
