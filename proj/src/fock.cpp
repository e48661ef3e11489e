#include <phasecorr/fock.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include <phasecorr/errors.hpp>

namespace phasecorr {

namespace {
using Triplet = Eigen::Triplet<Complex>;
}

FockSpace::FockSpace(int modes, int cutoff) : modes_(modes), cutoff_(cutoff) {
    if (modes < 1 || modes > 3)
        throw ConfigError("Fock-space reference supports 1..3 modes");
    if (cutoff < 1) throw ConfigError("Fock cutoff must be at least 1");
    const int levels = cutoff + 1;
    dim_ = 1;
    for (int j = 0; j < modes; ++j) dim_ *= levels;

    a_.resize(std::size_t(modes));
    adag_.resize(std::size_t(modes));
    n_.resize(std::size_t(modes));
    int stride = 1;
    for (int j = 0; j < modes; ++j) {
        std::vector<Triplet> ta, tn;
        ta.reserve(std::size_t(dim_));
        tn.reserve(std::size_t(dim_));
        for (int idx = 0; idx < dim_; ++idx) {
            const int nj = (idx / stride) % levels;
            if (nj > 0) ta.emplace_back(idx - stride, idx, std::sqrt(double(nj)));
            if (nj > 0) tn.emplace_back(idx, idx, double(nj));
        }
        a_[std::size_t(j)].resize(dim_, dim_);
        a_[std::size_t(j)].setFromTriplets(ta.begin(), ta.end());
        adag_[std::size_t(j)] = SparseC(a_[std::size_t(j)].adjoint());
        n_[std::size_t(j)].resize(dim_, dim_);
        n_[std::size_t(j)].setFromTriplets(tn.begin(), tn.end());
        stride *= levels;
    }
}

double FockSpace::top_level_population(const Eigen::MatrixXcd& rho) const {
    const int levels = cutoff_ + 1;
    double worst = 0.0;
    int stride = 1;
    for (int j = 0; j < modes_; ++j) {
        double pop = 0.0;
        for (int idx = 0; idx < dim_; ++idx)
            if ((idx / stride) % levels == cutoff_) pop += rho(idx, idx).real();
        worst = std::max(worst, pop);
        stride *= levels;
    }
    return worst;
}

LindbladOracle::LindbladOracle(const ModelParams& p, int cutoff)
    : p_(p), space_(p.modes, cutoff) {
    p_.validate();
    const int dim = space_.dim();
    const Complex i(0.0, 1.0);

    SparseC H(dim, dim);
    for (int j = 0; j < p_.modes; ++j) {
        H += p_.Hsp(j, j) * space_.number(j);
        H += SparseC(0.5 * p_.U * (space_.adag(j) * space_.adag(j) * space_.a(j) * space_.a(j)));
        for (int k = 0; k < p_.modes; ++k)
            if (k != j) H += SparseC(p_.Hsp(j, k) * (space_.adag(j) * space_.a(k)));
        H += SparseC(p_.F[j] * space_.adag(j) + std::conj(p_.F[j]) * space_.a(j));
    }

    rate_down_ = p_.gamma * (p_.nbar + 1.0);
    rate_up_ = p_.gamma * p_.nbar;
    K_ = SparseC(-i * H);
    for (int j = 0; j < p_.modes; ++j) {
        K_ -= SparseC(0.5 * rate_down_ * (space_.adag(j) * space_.a(j)));
        if (rate_up_ != 0.0) K_ -= SparseC(0.5 * rate_up_ * (space_.a(j) * space_.adag(j)));
        jump_down_.push_back(space_.a(j));
        jump_up_.push_back(space_.adag(j));
    }
    Kdag_ = SparseC(K_.adjoint());

    k1_.resize(dim, dim);
    k2_.resize(dim, dim);
    k3_.resize(dim, dim);
    k4_.resize(dim, dim);
    tmp_.resize(dim, dim);
}

Eigen::MatrixXcd LindbladOracle::vacuum() const {
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(space_.dim(), space_.dim());
    rho(0, 0) = 1.0;
    return rho;
}

void LindbladOracle::rhs(const Eigen::MatrixXcd& rho, Eigen::MatrixXcd& out) const {
    out.noalias() = K_ * rho;
    out.noalias() += rho * Kdag_;
    for (int j = 0; j < p_.modes; ++j) {
        if (rate_down_ != 0.0)
            out.noalias() += rate_down_ * (jump_down_[std::size_t(j)] * rho *
                                           jump_up_[std::size_t(j)]);
        if (rate_up_ != 0.0)
            out.noalias() += rate_up_ * (jump_up_[std::size_t(j)] * rho *
                                         jump_down_[std::size_t(j)]);
    }
}

void LindbladOracle::evolve(Eigen::MatrixXcd& rho, double T, double dt_ode,
                            bool check_cutoff) const {
    if (T <= 0.0) return;
    if (dt_ode <= 0.0) throw ConfigError("reference integrator needs dt > 0");
    const std::uint64_t steps = std::uint64_t(std::ceil(T / dt_ode - 1e-12));
    const double dt = T / double(steps);
    for (std::uint64_t s = 0; s < steps; ++s) {
        rhs(rho, k1_);
        tmp_ = rho + 0.5 * dt * k1_;
        rhs(tmp_, k2_);
        tmp_ = rho + 0.5 * dt * k2_;
        rhs(tmp_, k3_);
        tmp_ = rho + dt * k3_;
        rhs(tmp_, k4_);
        rho += (dt / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
        if (check_cutoff && space_.top_level_population(rho) > kTopLevelTol)
            throw CutoffExceeded("top Fock level population exceeds tolerance; raise cutoff");
    }
}

std::complex<double> LindbladOracle::expectation(const SparseC& op,
                                                 const Eigen::MatrixXcd& rho) const {
    // tr(op rho) via the sparse pattern of op
    Complex acc = 0.0;
    for (int k = 0; k < op.outerSize(); ++k)
        for (SparseC::InnerIterator it(op, k); it; ++it)
            acc += it.value() * rho(it.col(), it.row());
    return acc;
}

double LindbladOracle::mode_occupation(const Eigen::MatrixXcd& rho, int mode) const {
    return expectation(space_.number(mode), rho).real();
}

void LindbladOracle::apply_factor(Eigen::MatrixXcd& rho, const OperatorFactor& f,
                                  Side side) const {
    const SparseC& op = f.kind == OpKind::creation ? space_.adag(f.mode) : space_.a(f.mode);
    if (side == Side::left)
        rho = op * rho;
    else
        rho = rho * op;
}

// ---- multi-time products -------------------------------------------------------

namespace {

struct FactorSplit {
    // written positions [0, peak_begin) right-multiply, [peak_end, N) left-
    // multiply; [peak_begin, peak_end) are evaluated inside the final trace.
    std::size_t peak_begin = 0;
    std::size_t peak_end = 0;
    int peak_label = 0;
};

FactorSplit split_factors(const std::vector<OperatorFactor>& factors) {
    if (factors.empty()) throw ConfigError("empty factor product");
    int peak = 0;
    for (const auto& f : factors) peak = std::max(peak, f.time_label);
    FactorSplit sp;
    sp.peak_label = peak;
    std::size_t first = factors.size(), last = 0;
    for (std::size_t i = 0; i < factors.size(); ++i)
        if (factors[i].time_label == peak) {
            first = std::min(first, i);
            last = i;
        }
    sp.peak_begin = first;
    sp.peak_end = last + 1;
    // unimodality: labels rise (weakly) before the peak run and fall after it,
    // and the peak run itself is contiguous
    for (std::size_t i = sp.peak_begin; i < sp.peak_end; ++i)
        if (factors[i].time_label != peak)
            throw ConfigError("factor product is not time-ordered (peak not contiguous)");
    for (std::size_t i = 1; i < sp.peak_begin; ++i)
        if (factors[i].time_label < factors[i - 1].time_label)
            throw ConfigError("factor product is not time-ordered (rising side)");
    for (std::size_t i = sp.peak_end + 1; i < factors.size(); ++i)
        if (factors[i].time_label > factors[i - 1].time_label)
            throw ConfigError("factor product is not time-ordered (falling side)");
    return sp;
}

// Applies every non-peak factor carrying the given label: written-prefix ones
// as right multiplications in written order, written-suffix ones as left
// multiplications in reverse written order (innermost first either way).
void apply_label_group(const LindbladOracle& L, Eigen::MatrixXcd& sigma,
                       const std::vector<OperatorFactor>& factors, const FactorSplit& sp,
                       int label) {
    for (std::size_t i = 0; i < sp.peak_begin; ++i)
        if (factors[i].time_label == label)
            L.apply_factor(sigma, factors[i], LindbladOracle::Side::right);
    for (std::size_t i = factors.size(); i > sp.peak_end; --i)
        if (factors[i - 1].time_label == label)
            L.apply_factor(sigma, factors[i - 1], LindbladOracle::Side::left);
}

Complex peak_trace(const LindbladOracle& L, Eigen::MatrixXcd sigma,
                   const std::vector<OperatorFactor>& factors, const FactorSplit& sp) {
    // tr(F_pb ... F_pe-1 sigma), built by left-applying in reverse order
    for (std::size_t i = sp.peak_end; i > sp.peak_begin; --i)
        L.apply_factor(sigma, factors[i - 1], LindbladOracle::Side::left);
    return sigma.trace();
}

} // namespace

Complex oracle_multitime(const LindbladOracle& L, const Eigen::MatrixXcd& rho0,
                         double rho0_time, const std::vector<OperatorFactor>& factors,
                         const std::vector<double>& times, double dt_ode) {
    const FactorSplit sp = split_factors(factors);
    // distinct labels in ascending time order
    std::vector<int> labels;
    for (const auto& f : factors)
        if (std::find(labels.begin(), labels.end(), f.time_label) == labels.end())
            labels.push_back(f.time_label);
    std::sort(labels.begin(), labels.end());

    Eigen::MatrixXcd sigma = rho0;
    double now = rho0_time;
    for (int lab : labels) {
        const double t = times[std::size_t(lab)];
        if (t < now - 1e-12)
            throw ConfigError("factor product reaches before the supplied state time");
        L.evolve(sigma, t - now, dt_ode, /*check_cutoff=*/false);
        now = t;
        if (lab == sp.peak_label) return peak_trace(L, sigma, factors, sp);
        apply_label_group(L, sigma, factors, sp, lab);
    }
    throw ConfigError("factor product had no peak label"); // unreachable
}

std::vector<Complex> oracle_multitime_curve(const LindbladOracle& L,
                                            const Eigen::MatrixXcd& rho_t0,
                                            const std::vector<OperatorFactor>& factors,
                                            const std::vector<double>& taus,
                                            double dt_ode) {
    for (const auto& f : factors)
        if (f.time_label != 0 && f.time_label != 1)
            throw ConfigError("curve products use labels 0 (t0) and 1 (t0 + tau) only");
    const bool has_swept = [&] {
        for (const auto& f : factors)
            if (f.time_label == 1) return true;
        return false;
    }();

    std::vector<Complex> out;
    out.reserve(taus.size());
    if (!has_swept) {
        const Complex v =
            oracle_multitime(L, rho_t0, 0.0, factors, {0.0}, dt_ode);
        out.assign(taus.size(), v);
        return out;
    }

    const FactorSplit sp = split_factors(factors);
    Eigen::MatrixXcd sigma = rho_t0;
    apply_label_group(L, sigma, factors, sp, 0);
    double now = 0.0;
    for (double tau : taus) {
        if (tau < now - 1e-12) throw ConfigError("delay grid must be non-decreasing");
        L.evolve(sigma, tau - now, dt_ode, /*check_cutoff=*/false);
        now = tau;
        out.push_back(peak_trace(L, sigma, factors, sp));
    }
    return out;
}

} // namespace phasecorr
