#ifndef PHASECORR_OUTPUT_HPP
#define PHASECORR_OUTPUT_HPP

#include <string>
#include <vector>

#include <phasecorr/stats.hpp>

namespace phasecorr {

// One named curve on the delay grid. Undefined points keep their slot with
// n_effective = 0 so rows always line up across curves.
struct NamedCurve {
    std::string name;
    bool self_adjoint = false; // Im columns are a residual diagnostic only
    std::vector<double> taus;
    std::vector<EstimateRI> points;
};

// Six columns: tau, re_value, re_err, im_value, im_err, n_effective.
void write_curve_csv(const std::string& path, const NamedCurve& curve);

// Same layout with time in the first column; one file for all modes, one
// block of rows per mode separated by a blank line (gnuplot index-friendly).
struct OccupationSeries {
    int mode = 0;
    std::vector<double> times;
    std::vector<EstimateRI> points;
};
void write_occupations_csv(const std::string& path, const std::vector<OccupationSeries>& series);

void write_text_file(const std::string& path, const std::string& text);

std::string gnuplot_script(const std::string& csv_file, const NamedCurve& curve);

} // namespace phasecorr

#endif
