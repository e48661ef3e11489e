#ifndef PHASECORR_MULTITIME_SPEC_HPP
#define PHASECORR_MULTITIME_SPEC_HPP

#include <string>
#include <vector>

namespace phasecorr {

enum class OpKind { annihilation, creation };

// One Heisenberg-picture ladder operator in a written product, referring to
// one of the spec's distinct times by index.
struct OperatorFactor {
    OpKind kind = OpKind::annihilation;
    int mode = 0;       // 0-based
    int time_label = 0; // index into CorrelationSpec::times (sorted ascending)

    bool operator==(const OperatorFactor&) const = default;
};

// An ordered operator product <F_1 F_2 ... F_N> with factors written
// left-to-right and a sorted list of the distinct physical times they use.
struct CorrelationSpec {
    std::string name;
    std::vector<OperatorFactor> factors;
    std::vector<double> times; // strictly increasing

    int distinct_labels() const;
    bool self_adjoint() const; // equal to its reversed-and-daggered mirror
};

// Hermitian mirror: reverse the factor order and flip every dagger. The
// expectation of the mirror is the complex conjugate of the original.
CorrelationSpec mirror(const CorrelationSpec& spec);

std::string format_product(const CorrelationSpec& spec);

} // namespace phasecorr

#endif
