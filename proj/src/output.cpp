#include <phasecorr/output.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include <phasecorr/errors.hpp>

namespace phasecorr {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ConfigError("cannot open output file: " + path);
    return f;
}

void write_row(std::ofstream& f, double x, const EstimateRI& p) {
    char buf[192];
    if (p.defined)
        std::snprintf(buf, sizeof buf, "%.10g,%.12g,%.6g,%.12g,%.6g,%zu\n", x,
                      p.value.real(), p.re_err, p.value.imag(), p.im_err, p.n_effective);
    else
        std::snprintf(buf, sizeof buf, "%.10g,nan,nan,nan,nan,0\n", x);
    f << buf;
}

} // namespace

void write_curve_csv(const std::string& path, const NamedCurve& curve) {
    std::ofstream f = open_out(path);
    f << "# " << curve.name << (curve.self_adjoint ? " (self-adjoint)" : "") << "\n";
    f << "tau,re_value,re_err,im_value,im_err,n_effective\n";
    for (std::size_t i = 0; i < curve.taus.size(); ++i)
        write_row(f, curve.taus[i], curve.points[i]);
    if (!f) throw ConfigError("short write on " + path);
}

void write_occupations_csv(const std::string& path,
                           const std::vector<OccupationSeries>& series) {
    std::ofstream f = open_out(path);
    f << "time,re_value,re_err,im_value,im_err,n_effective\n";
    bool first = true;
    for (const auto& s : series) {
        if (!first) f << "\n"; // blank line between mode blocks
        first = false;
        f << "# mode " << (s.mode + 1) << "\n";
        for (std::size_t i = 0; i < s.times.size(); ++i)
            write_row(f, s.times[i], s.points[i]);
    }
    if (!f) throw ConfigError("short write on " + path);
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f = open_out(path);
    f << text;
    if (!f) throw ConfigError("short write on " + path);
}

std::string gnuplot_script(const std::string& csv_file, const NamedCurve& curve) {
    std::ostringstream os;
    os << "set datafile separator ','\n"
       << "set key left top\n"
       << "set xlabel 'tau'\n"
       << "set ylabel '" << curve.name << "'\n"
       << "plot '" << csv_file << "' using 1:2:3 with yerrorlines title '" << curve.name
       << " (re)'";
    if (!curve.self_adjoint)
        os << ", \\\n     '" << csv_file << "' using 1:4:5 with yerrorlines title '"
           << curve.name << " (im)'";
    os << "\n";
    return os.str();
}

} // namespace phasecorr
