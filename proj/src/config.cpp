#include <phasecorr/config.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include <phasecorr/errors.hpp>

namespace phasecorr {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError("config: " + path + ": " + what);
}

void check_keys(const json& obj, const std::string& path,
                const std::set<std::string>& allowed) {
    if (!obj.is_object()) fail(path, "expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key())) fail(path + "." + it.key(), "unknown key");
}

const json& require(const json& obj, const std::string& path, const std::string& key) {
    auto it = obj.find(key);
    if (it == obj.end()) fail(path + "." + key, "missing required key");
    return *it;
}

double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    return v.get<double>();
}

long long as_integer(const json& v, const std::string& path) {
    if (!v.is_number_integer() && !v.is_number_unsigned()) fail(path, "expected an integer");
    return v.get<long long>();
}

bool as_bool(const json& v, const std::string& path) {
    if (!v.is_boolean()) fail(path, "expected true/false");
    return v.get<bool>();
}

std::string as_string(const json& v, const std::string& path) {
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
}

Complex as_complex(const json& v, const std::string& path) {
    if (v.is_number()) return Complex(v.get<double>(), 0.0);
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
        return Complex(v[0].get<double>(), v[1].get<double>());
    fail(path, "expected a number or [re, im]");
}

NoiseKind parse_noise(const json& v, const std::string& path) {
    NoiseKind k;
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s == "gaussian") return k;
        if (s == "binomial") {
            k.family = NoiseKind::Family::binomial;
            return k;
        }
        fail(path, "expected 'gaussian', 'binomial' or an object");
    }
    check_keys(v, path, {"family", "n_b"});
    const std::string fam = as_string(require(v, path, "family"), path + ".family");
    if (fam == "gaussian")
        k.family = NoiseKind::Family::gaussian;
    else if (fam == "binomial")
        k.family = NoiseKind::Family::binomial;
    else
        fail(path + ".family", "expected 'gaussian' or 'binomial'");
    if (v.contains("n_b")) {
        k.n_b = int(as_integer(v["n_b"], path + ".n_b"));
        if (k.n_b < 1) fail(path + ".n_b", "must be >= 1");
    }
    return k;
}

RawFactor parse_factor(const json& v, const std::string& path) {
    check_keys(v, path, {"op", "mode", "time"});
    RawFactor f;
    const std::string op = as_string(require(v, path, "op"), path + ".op");
    if (op == "a")
        f.op = OpKind::annihilation;
    else if (op == "ad" || op == "adag" || op == "a^dag")
        f.op = OpKind::creation;
    else
        fail(path + ".op", "expected 'a' or 'ad'");
    const long long mode = as_integer(require(v, path, "mode"), path + ".mode");
    if (mode < 1) fail(path + ".mode", "modes are numbered from 1");
    f.mode = int(mode - 1);
    const json& t = require(v, path, "time");
    if (t.is_string()) {
        const std::string s = t.get<std::string>();
        if (s == "t0")
            f.tag = RawFactor::TimeTag::t0;
        else if (s == "t0+tau")
            f.tag = RawFactor::TimeTag::t0_plus_tau;
        else
            fail(path + ".time", "expected 't0', 't0+tau' or a number");
    } else {
        f.tag = RawFactor::TimeTag::literal;
        f.literal_time = as_number(t, path + ".time");
    }
    return f;
}

CorrelationRequest parse_correlation(const json& v, const std::string& path) {
    check_keys(v, path, {"name", "type", "mode", "which", "factors"});
    CorrelationRequest req;
    req.name = as_string(require(v, path, "name"), path + ".name");
    const std::string type = as_string(require(v, path, "type"), path + ".type");
    if (type == "g2_delay") {
        req.type = CorrelationRequest::Type::g2_delay;
        const long long mode = as_integer(require(v, path, "mode"), path + ".mode");
        if (mode < 1) fail(path + ".mode", "modes are numbered from 1");
        req.mode = int(mode - 1);
    } else if (type == "special") {
        req.type = CorrelationRequest::Type::special;
        const std::string w = as_string(require(v, path, "which"), path + ".which");
        if (w.size() != 1 || w[0] < 'a' || w[0] > 'd')
            fail(path + ".which", "expected one of 'a', 'b', 'c', 'd'");
        req.which = w[0];
    } else if (type == "product") {
        req.type = CorrelationRequest::Type::product;
        const json& fs = require(v, path, "factors");
        if (!fs.is_array() || fs.empty()) fail(path + ".factors", "expected a non-empty array");
        for (std::size_t i = 0; i < fs.size(); ++i)
            req.factors.push_back(
                parse_factor(fs[i], path + ".factors[" + std::to_string(i) + "]"));
    } else {
        fail(path + ".type", "expected 'g2_delay', 'special' or 'product'");
    }
    return req;
}

} // namespace

std::vector<double> RecordSchedule::absolute_times() const {
    std::vector<double> out;
    out.reserve(taus.size());
    for (double tau : taus) out.push_back(t0 + tau);
    return out;
}

StepConfig RunConfig::step_config() const {
    StepConfig s;
    s.dt = dt;
    s.midpoint_iterations = midpoint_iterations;
    s.propagator = propagator;
    s.escape_cap = escape_cap;
    s.noise = noise;
    return s;
}

void RunConfig::validate() const {
    model.validate();
    if (version != 1) throw ConfigError("config: unsupported config_version");
    if (dt <= 0.0) throw ConfigError("config: run.dt must be positive");
    if (t_end < 0.0) throw ConfigError("config: run.t_end must be non-negative");
    if (trajectories < 1) throw ConfigError("config: run.trajectories must be positive");
    if (subensembles < 2) throw ConfigError("config: run.subensembles must be at least 2");
    if (trajectories % subensembles != 0)
        throw ConfigError("config: run.trajectories must be a multiple of run.subensembles");
    if (midpoint_iterations < 1)
        throw ConfigError("config: run.midpoint_iterations must be at least 1");
    if (escape_cap <= 0.0) throw ConfigError("config: run.escape_cap must be positive");
    if (workers < 0) throw ConfigError("config: run.workers must be non-negative");

    const auto on_grid = [&](double t, const char* what) {
        const double steps = t / dt;
        if (std::abs(steps - std::round(steps)) > 1e-6)
            throw ConfigError(std::string("config: ") + what +
                              " does not sit on the dt step grid");
        if (t < -1e-12 || t > t_end + 1e-9)
            throw ConfigError(std::string("config: ") + what + " lies outside [0, t_end]");
    };
    if (!record.taus.empty()) {
        on_grid(record.t0, "record.t0");
        for (std::size_t i = 0; i < record.taus.size(); ++i) {
            if (record.taus[i] < -1e-12)
                throw ConfigError("config: record delays must be non-negative");
            if (i > 0 && record.taus[i] <= record.taus[i - 1])
                throw ConfigError("config: record delays must be strictly increasing");
            on_grid(record.t0 + record.taus[i], "record time");
        }
    }
    if (switch_plan) {
        on_grid(switch_plan->time, "switch.time");
        if (!is_doubled(switch_plan->target))
            throw ConfigError("config: switch.target must be a doubled representation");
        if (s_of(switch_plan->target) > s_of(rep))
            throw ConfigError("config: switch may only widen the operator ordering");
    }
    if (initial.kind == InitialState::Kind::coherent &&
        initial.amplitudes.size() != model.modes)
        throw ConfigError("config: initial.amplitudes must list one value per mode");
    if (oracle.cutoff < 0 || oracle.dt_ode < 0.0)
        throw ConfigError("config: oracle settings must be non-negative");
    for (const auto& c : correlations) {
        if (c.type == CorrelationRequest::Type::g2_delay && c.mode >= model.modes)
            throw ConfigError("config: correlation '" + c.name + "' addresses a missing mode");
        if (c.type == CorrelationRequest::Type::special && model.modes < 2)
            throw ConfigError("config: special correlators need at least two modes");
        for (const auto& f : c.factors)
            if (f.mode >= model.modes)
                throw ConfigError("config: correlation '" + c.name +
                                  "' addresses a missing mode");
    }
}

RunConfig parse_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    check_keys(j, "$",
               {"config_version", "run", "model", "initial", "record", "switch",
                "correlations", "oracle", "output"});

    RunConfig cfg;
    cfg.version = int(as_integer(require(j, "$", "config_version"), "$.config_version"));

    {
        const json& r = require(j, "$", "run");
        check_keys(r, "run",
                   {"representation", "trajectories", "subensembles", "dt", "t_end", "seed",
                    "workers", "midpoint_iterations", "propagator", "corrections",
                    "escape_cap", "noise"});
        cfg.rep = representation_from_string(
            as_string(require(r, "run", "representation"), "run.representation"));
        cfg.trajectories = int(as_integer(require(r, "run", "trajectories"), "run.trajectories"));
        if (r.contains("subensembles"))
            cfg.subensembles = int(as_integer(r["subensembles"], "run.subensembles"));
        cfg.dt = as_number(require(r, "run", "dt"), "run.dt");
        cfg.t_end = as_number(require(r, "run", "t_end"), "run.t_end");
        cfg.seed = std::uint64_t(as_integer(require(r, "run", "seed"), "run.seed"));
        if (r.contains("workers")) cfg.workers = int(as_integer(r["workers"], "run.workers"));
        if (r.contains("midpoint_iterations"))
            cfg.midpoint_iterations =
                int(as_integer(r["midpoint_iterations"], "run.midpoint_iterations"));
        if (r.contains("propagator")) {
            const std::string p = as_string(r["propagator"], "run.propagator");
            if (p == "exponential")
                cfg.propagator = Propagator::exponential;
            else if (p == "euler")
                cfg.propagator = Propagator::euler;
            else
                fail("run.propagator", "expected 'exponential' or 'euler'");
        }
        if (r.contains("corrections"))
            cfg.corrections = as_bool(r["corrections"], "run.corrections");
        if (r.contains("escape_cap"))
            cfg.escape_cap = as_number(r["escape_cap"], "run.escape_cap");
        if (r.contains("noise")) cfg.noise = parse_noise(r["noise"], "run.noise");
    }

    {
        const json& m = require(j, "$", "model");
        check_keys(m, "model",
                   {"modes", "U", "J", "delta", "gamma", "nbar", "drive", "hsp",
                    "drive_vector"});
        const int modes = int(as_integer(require(m, "model", "modes"), "model.modes"));
        if (modes < 1) fail("model.modes", "must be at least 1");
        const double U = as_number(require(m, "model", "U"), "model.U");
        const double gamma = as_number(require(m, "model", "gamma"), "model.gamma");
        const double nbar = as_number(require(m, "model", "nbar"), "model.nbar");
        const double J = m.contains("J") ? as_number(m["J"], "model.J") : 0.0;
        const double delta = m.contains("delta") ? as_number(m["delta"], "model.delta") : 0.0;
        const Complex drive =
            m.contains("drive") ? as_complex(m["drive"], "model.drive") : Complex(0.0, 0.0);
        cfg.model = ModelParams::chain(modes, U, J, delta, gamma, nbar, drive);
        if (m.contains("hsp")) {
            const json& h = m["hsp"];
            if (!h.is_array() || int(h.size()) != modes)
                fail("model.hsp", "expected a modes x modes matrix");
            for (int r = 0; r < modes; ++r) {
                const json& row = h[std::size_t(r)];
                if (!row.is_array() || int(row.size()) != modes)
                    fail("model.hsp", "expected a modes x modes matrix");
                for (int c = 0; c < modes; ++c)
                    cfg.model.Hsp(r, c) = as_complex(
                        row[std::size_t(c)],
                        "model.hsp[" + std::to_string(r) + "][" + std::to_string(c) + "]");
            }
        }
        if (m.contains("drive_vector")) {
            const json& dv = m["drive_vector"];
            if (!dv.is_array() || int(dv.size()) != modes)
                fail("model.drive_vector", "expected one entry per mode");
            for (int k = 0; k < modes; ++k)
                cfg.model.F[k] = as_complex(dv[std::size_t(k)],
                                            "model.drive_vector[" + std::to_string(k) + "]");
        }
    }

    if (j.contains("initial")) {
        const json& ini = j["initial"];
        check_keys(ini, "initial", {"state", "amplitudes"});
        const std::string state = as_string(require(ini, "initial", "state"), "initial.state");
        if (state == "vacuum") {
            cfg.initial.kind = InitialState::Kind::vacuum;
        } else if (state == "coherent") {
            cfg.initial.kind = InitialState::Kind::coherent;
            const json& amp = require(ini, "initial", "amplitudes");
            if (!amp.is_array()) fail("initial.amplitudes", "expected an array");
            cfg.initial.amplitudes.resize(Eigen::Index(amp.size()));
            for (std::size_t k = 0; k < amp.size(); ++k)
                cfg.initial.amplitudes[Eigen::Index(k)] = as_complex(
                    amp[k], "initial.amplitudes[" + std::to_string(k) + "]");
        } else {
            fail("initial.state", "expected 'vacuum' or 'coherent'");
        }
    }

    {
        const json& rec = require(j, "$", "record");
        check_keys(rec, "record", {"t0", "tau_max", "tau_step", "taus"});
        cfg.record.t0 = as_number(require(rec, "record", "t0"), "record.t0");
        if (rec.contains("taus")) {
            if (rec.contains("tau_max") || rec.contains("tau_step"))
                fail("record", "give either taus or tau_max/tau_step, not both");
            const json& ts = rec["taus"];
            if (!ts.is_array() || ts.empty()) fail("record.taus", "expected a non-empty array");
            for (std::size_t k = 0; k < ts.size(); ++k)
                cfg.record.taus.push_back(
                    as_number(ts[k], "record.taus[" + std::to_string(k) + "]"));
        } else {
            const double tau_max =
                as_number(require(rec, "record", "tau_max"), "record.tau_max");
            const double tau_step =
                as_number(require(rec, "record", "tau_step"), "record.tau_step");
            if (tau_step <= 0.0) fail("record.tau_step", "must be positive");
            if (tau_max < 0.0) fail("record.tau_max", "must be non-negative");
            const double n_real = tau_max / tau_step;
            const long long n = std::llround(n_real);
            if (std::abs(n_real - double(n)) > 1e-6)
                fail("record.tau_step", "must divide tau_max evenly");
            for (long long k = 0; k <= n; ++k)
                cfg.record.taus.push_back(double(k) * tau_step);
        }
    }

    if (j.contains("switch")) {
        const json& sw = j["switch"];
        check_keys(sw, "switch", {"time", "target"});
        SwitchPlan plan;
        plan.time = as_number(require(sw, "switch", "time"), "switch.time");
        plan.target = representation_from_string(
            as_string(require(sw, "switch", "target"), "switch.target"));
        cfg.switch_plan = plan;
    }

    if (j.contains("correlations")) {
        const json& cs = j["correlations"];
        if (!cs.is_array()) fail("correlations", "expected an array");
        for (std::size_t k = 0; k < cs.size(); ++k)
            cfg.correlations.push_back(
                parse_correlation(cs[k], "correlations[" + std::to_string(k) + "]"));
    }

    if (j.contains("oracle")) {
        const json& o = j["oracle"];
        check_keys(o, "oracle", {"cutoff", "dt_ode"});
        if (o.contains("cutoff")) cfg.oracle.cutoff = int(as_integer(o["cutoff"], "oracle.cutoff"));
        if (o.contains("dt_ode")) cfg.oracle.dt_ode = as_number(o["dt_ode"], "oracle.dt_ode");
    }

    if (j.contains("output")) {
        const json& o = j["output"];
        check_keys(o, "output", {"directory", "emit_gnuplot"});
        if (o.contains("directory")) cfg.out_dir = as_string(o["directory"], "output.directory");
        if (o.contains("emit_gnuplot"))
            cfg.emit_gnuplot = as_bool(o["emit_gnuplot"], "output.emit_gnuplot");
    }

    cfg.validate();
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

} // namespace phasecorr
