#include <phasecorr/phase_space.hpp>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include <phasecorr/rng.hpp>

namespace phasecorr {

double s_of(Representation rep) {
    switch (rep) {
        case Representation::positive_p: return 1.0;
        case Representation::doubled_wigner: return 0.0;
        case Representation::doubled_q: return -1.0;
        case Representation::classical_p: return 1.0;
    }
    return 1.0;
}

std::string to_string(Representation rep) {
    switch (rep) {
        case Representation::positive_p: return "positive_p";
        case Representation::doubled_wigner: return "doubled_wigner";
        case Representation::doubled_q: return "doubled_q";
        case Representation::classical_p: return "classical_p";
    }
    return "?";
}

Representation representation_from_string(const std::string& name) {
    if (name == "positive_p") return Representation::positive_p;
    if (name == "doubled_wigner") return Representation::doubled_wigner;
    if (name == "doubled_q") return Representation::doubled_q;
    if (name == "classical_p") return Representation::classical_p;
    throw ConfigError("unknown representation '" + name + "'");
}

std::size_t Ensemble::escaped_count() const {
    std::size_t n = 0;
    for (auto e : escape_step)
        if (e != UINT64_MAX) ++n;
    return n;
}

namespace {

Ensemble exact_normal_ensemble(const Eigen::VectorXcd& amplitudes, int size,
                               std::uint64_t master_seed) {
    Ensemble e;
    const int M = int(amplitudes.size());
    e.alpha.resize(M, size);
    e.beta.resize(M, size);
    for (int j = 0; j < M; ++j) {
        e.alpha.row(j).setConstant(amplitudes[j]);
        e.beta.row(j).setConstant(std::conj(amplitudes[j]));
    }
    e.rep = Representation::positive_p;
    e.master_seed = master_seed;
    e.escape_step.assign(std::size_t(size), UINT64_MAX);
    return e;
}

} // namespace

Ensemble init_vacuum(int modes, int size, Representation rep, std::uint64_t master_seed) {
    return init_coherent(Eigen::VectorXcd::Zero(modes), size, rep, master_seed);
}

Ensemble init_coherent(const Eigen::VectorXcd& amplitudes, int size, Representation rep,
                       std::uint64_t master_seed) {
    // A coherent state is a point in the normal-ordered representation; wider
    // orderings are reached by the usual convolution, realized per sample.
    Ensemble e = exact_normal_ensemble(amplitudes, size, master_seed);
    if (rep == Representation::positive_p) return e;
    if (rep == Representation::classical_p) {
        e.rep = Representation::classical_p;
        return e; // same delta distribution, beta pinned to conj(alpha)
    }
    Ensemble widened = convert_samples(e, rep, /*conversion_index=*/0xFFFFFFFFu);
    return widened;
}

Ensemble convert_samples(const Ensemble& e, Representation target,
                         std::uint32_t conversion_index) {
    const double s0 = s_of(e.rep);
    const double s1 = s_of(target);
    if (!is_doubled(target))
        throw OrderingDirection("conversion target must be a doubled representation");
    if (s1 > s0 + 1e-12)
        throw OrderingDirection("sample conversion only runs toward wider ordering (s down)");

    Ensemble out;
    out.alpha = e.alpha;
    out.beta = e.rep == Representation::classical_p ? e.alpha.conjugate() : e.beta;
    out.rep = target;
    out.time = e.time;
    out.master_seed = e.master_seed;
    out.escape_step = e.escape_step;

    const double c = std::sqrt(0.5 * (s0 - s1));
    if (c == 0.0) return out;

    const int M = out.modes();
    const int S = out.size();
    std::vector<double> normals(std::size_t(2 * M));
    for (int t = 0; t < S; ++t) {
        TrajectoryStream stream(e.master_seed, std::uint32_t(t), NoisePurpose::conversion);
        stream.fill_normals(conversion_index, normals.data(), std::uint32_t(2 * M));
        for (int j = 0; j < M; ++j) {
            // zeta = (N1 + i N2)/sqrt(2): <zeta conj(zeta)> = 1, <zeta zeta> = 0
            const Complex zeta(normals[std::size_t(2 * j)] * (1.0 / std::numbers::sqrt2),
                               normals[std::size_t(2 * j + 1)] * (1.0 / std::numbers::sqrt2));
            out.alpha(j, t) += c * zeta;
            out.beta(j, t) += c * std::conj(zeta);
        }
    }
    return out;
}

std::vector<unsigned char> inclusion_mask(const Ensemble& e, std::uint64_t step) {
    std::vector<unsigned char> mask(std::size_t(e.size()), 1);
    for (int t = 0; t < e.size(); ++t) {
        const std::uint64_t esc = e.escape_step[std::size_t(t)];
        if (esc != UINT64_MAX && step > esc) mask[std::size_t(t)] = 0;
    }
    return mask;
}

EstimateRI occupation(const Ensemble& e, int mode, int subensembles, bool correct_ordering) {
    const double s = s_of(e.rep);
    const double offset = ordering_offset(s);
    if (offset != 0.0 && !correct_ordering)
        throw RepresentationMismatch(
            "occupation read from a wider-ordered ensemble without ordering correction");

    Eigen::VectorXcd w(e.size());
    for (int t = 0; t < e.size(); ++t) {
        const Complex a = e.alpha(mode, t);
        const Complex b = e.rep == Representation::classical_p ? std::conj(a) : e.beta(mode, t);
        w[t] = a * b - offset;
    }
    std::vector<unsigned char> alive(std::size_t(e.size()), 1);
    for (int t = 0; t < e.size(); ++t)
        if (e.escape_step[std::size_t(t)] != UINT64_MAX) alive[std::size_t(t)] = 0;
    EstimateRI est = estimate_subensembles(w, alive, subensembles);
    est.value = Complex(est.value.real(), est.value.imag()); // Re is the physical part
    return est;
}

// ---- snapshots ---------------------------------------------------------------

const Snapshot* SnapshotStore::find(double time, Representation rep) const {
    for (const auto& s : snaps_)
        if (s.rep == rep && std::abs(s.time - time) < 1e-9) return &s;
    return nullptr;
}

const Snapshot& SnapshotStore::at(double time, Representation rep) const {
    const Snapshot* s = find(time, rep);
    if (!s)
        throw MissingSnapshot("no snapshot at t=" + std::to_string(time) + " in " +
                              to_string(rep));
    return *s;
}

// ---- checkpoints ---------------------------------------------------------------

namespace {
constexpr std::uint32_t kMagic = 0x50434B31u; // "PCK1"
constexpr std::uint32_t kVersion = 1u;

double s_slot(Representation rep) {
    return rep == Representation::classical_p ? 2.0 : s_of(rep);
}

Representation rep_from_slot(double s) {
    if (std::abs(s - 2.0) < 1e-9) return Representation::classical_p;
    if (std::abs(s - 1.0) < 1e-9) return Representation::positive_p;
    if (std::abs(s) < 1e-9) return Representation::doubled_wigner;
    if (std::abs(s + 1.0) < 1e-9) return Representation::doubled_q;
    throw ConfigError("checkpoint carries unknown ordering parameter");
}

template <class T>
void put(std::ofstream& f, const T& v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
void get(std::ifstream& f, T& v) {
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
}
} // namespace

void save_checkpoint(const Ensemble& e, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot open checkpoint file for writing: " + path);
    put(f, kMagic);
    put(f, kVersion);
    put(f, std::uint64_t(e.modes()));
    put(f, std::uint64_t(e.size()));
    put(f, s_slot(e.rep));
    put(f, e.time);
    // per trajectory: alpha_0..alpha_{M-1}, beta_0..beta_{M-1}
    for (int t = 0; t < e.size(); ++t) {
        for (int j = 0; j < e.modes(); ++j) {
            const Complex a = e.alpha(j, t);
            put(f, a.real());
            put(f, a.imag());
        }
        for (int j = 0; j < e.modes(); ++j) {
            const Complex b =
                e.rep == Representation::classical_p ? std::conj(e.alpha(j, t)) : e.beta(j, t);
            put(f, b.real());
            put(f, b.imag());
        }
    }
    if (!f) throw ConfigError("short write on checkpoint file: " + path);
}

Ensemble load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open checkpoint file: " + path);
    std::uint32_t magic = 0, version = 0;
    std::uint64_t M = 0, S = 0;
    double s = 1.0, time = 0.0;
    get(f, magic);
    get(f, version);
    if (magic != kMagic) throw ConfigError("not a checkpoint file: " + path);
    if (version != kVersion) throw ConfigError("unsupported checkpoint version");
    get(f, M);
    get(f, S);
    get(f, s);
    get(f, time);
    Ensemble e;
    e.rep = rep_from_slot(s);
    e.time = time;
    e.alpha.resize(Eigen::Index(M), Eigen::Index(S));
    e.beta.resize(Eigen::Index(M), Eigen::Index(S));
    e.escape_step.assign(std::size_t(S), UINT64_MAX);
    for (std::uint64_t t = 0; t < S; ++t) {
        for (std::uint64_t j = 0; j < M; ++j) {
            double re = 0, im = 0;
            get(f, re);
            get(f, im);
            e.alpha(Eigen::Index(j), Eigen::Index(t)) = Complex(re, im);
        }
        for (std::uint64_t j = 0; j < M; ++j) {
            double re = 0, im = 0;
            get(f, re);
            get(f, im);
            e.beta(Eigen::Index(j), Eigen::Index(t)) = Complex(re, im);
        }
    }
    if (!f) throw ConfigError("checkpoint file truncated: " + path);
    return e;
}

} // namespace phasecorr
