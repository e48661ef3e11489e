#include <phasecorr/multitime.hpp>

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <phasecorr/errors.hpp>

namespace phasecorr {

// ---- spec helpers --------------------------------------------------------------

int CorrelationSpec::distinct_labels() const {
    std::vector<int> seen;
    for (const auto& f : factors)
        if (std::find(seen.begin(), seen.end(), f.time_label) == seen.end())
            seen.push_back(f.time_label);
    return int(seen.size());
}

bool CorrelationSpec::self_adjoint() const {
    return mirror(*this).factors == factors;
}

CorrelationSpec mirror(const CorrelationSpec& spec) {
    CorrelationSpec m = spec;
    std::reverse(m.factors.begin(), m.factors.end());
    for (auto& f : m.factors)
        f.kind = f.kind == OpKind::creation ? OpKind::annihilation : OpKind::creation;
    return m;
}

std::string format_product(const CorrelationSpec& spec) {
    std::ostringstream os;
    bool first = true;
    for (const auto& f : spec.factors) {
        if (!first) os << ' ';
        first = false;
        os << (f.kind == OpKind::creation ? "ad" : "a") << (f.mode + 1) << "(t"
           << f.time_label << ')';
    }
    return os.str();
}

// ---- planner -------------------------------------------------------------------

namespace {

constexpr int kNoLabel = -1;
constexpr int kInfLabel = std::numeric_limits<int>::max();

using Factors = std::vector<OperatorFactor>;

bool unimodal(const Factors& f) {
    std::size_t i = 1;
    while (i < f.size() && f[i].time_label >= f[i - 1].time_label) ++i;
    while (i < f.size() && f[i].time_label <= f[i - 1].time_label) ++i;
    return i >= f.size();
}

bool prefix_shape_ok(const Factors& f, std::size_t m) {
    for (std::size_t i = 1; i < m; ++i)
        if (f[i].time_label < f[i - 1].time_label) return false;
    return true;
}

bool suffix_shape_ok(const Factors& f, std::size_t m) {
    for (std::size_t i = m + 1; i < f.size(); ++i)
        if (f[i].time_label > f[i - 1].time_label) return false;
    return true;
}

// Within every maximal equal-time run on one side of the split, creations
// must come before annihilations in the written order; the sampled product
// reproduces the written operator order only then.
bool groups_ok(const Factors& f, std::size_t begin, std::size_t end) {
    std::size_t i = begin;
    while (i < end) {
        std::size_t j = i;
        bool seen_annihilation = false;
        while (j < end && f[j].time_label == f[i].time_label) {
            if (f[j].kind == OpKind::annihilation) seen_annihilation = true;
            else if (seen_annihilation) return false;
            ++j;
        }
        i = j;
    }
    return true;
}

struct SplitNeeds {
    std::size_t m = 0;
    int max_p = kNoLabel;  // latest label that must still be in normal variables
    int min_q = kInfLabel; // earliest label needing anti-normal variables
    bool pure_p() const { return min_q == kInfLabel; }
    bool pure_q() const { return max_p == kNoLabel; }
};

std::optional<SplitNeeds> split_needs(const Factors& f, std::size_t m) {
    if (!prefix_shape_ok(f, m) || !suffix_shape_ok(f, m)) return std::nullopt;
    if (!groups_ok(f, 0, m) || !groups_ok(f, m, f.size())) return std::nullopt;
    SplitNeeds n;
    n.m = m;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const bool in_prefix = i < m;
        const bool creation = f[i].kind == OpKind::creation;
        // prefix: creation -> beta (P), annihilation -> alpha' (Q)
        // suffix: annihilation -> alpha (P), creation -> beta' (Q)
        const bool p_need = in_prefix ? creation : !creation;
        if (p_need)
            n.max_p = std::max(n.max_p, f[i].time_label);
        else
            n.min_q = std::min(n.min_q, f[i].time_label);
    }
    if (n.max_p != kNoLabel && n.min_q != kInfLabel && n.max_p > n.min_q)
        return std::nullopt;
    return n;
}

std::vector<SplitNeeds> valid_splits(const Factors& f) {
    std::vector<SplitNeeds> out;
    for (std::size_t m = 0; m <= f.size(); ++m)
        if (auto n = split_needs(f, m)) out.push_back(*n);
    return out;
}

std::vector<PlanFactor> assign_variables(const Factors& f, std::size_t m) {
    std::vector<PlanFactor> vars;
    vars.reserve(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        const bool in_prefix = i < m;
        const bool creation = f[i].kind == OpKind::creation;
        PlanVariable v;
        if (in_prefix)
            v = creation ? PlanVariable::beta : PlanVariable::alpha_prime;
        else
            v = creation ? PlanVariable::beta_prime : PlanVariable::alpha;
        vars.push_back({v, f[i].mode, f[i].time_label});
    }
    return vars;
}

struct Branch {
    long long weight = 1;
    Factors factors;
};

// Rewrites adjacent equal-time same-mode (a, a^dag) pairs by a a^dag =
// a^dag a + 1, recursively, and merges identical results.
std::vector<Branch> expand_normal(const Factors& start) {
    std::vector<Branch> done, work{{1, start}};
    while (!work.empty()) {
        Branch b = std::move(work.back());
        work.pop_back();
        bool reduced = false;
        for (std::size_t i = 0; i + 1 < b.factors.size(); ++i) {
            const auto& x = b.factors[i];
            const auto& y = b.factors[i + 1];
            if (x.kind == OpKind::annihilation && y.kind == OpKind::creation &&
                x.mode == y.mode && x.time_label == y.time_label) {
                Branch swapped = b;
                std::swap(swapped.factors[i], swapped.factors[i + 1]);
                Branch contracted = b;
                contracted.factors.erase(contracted.factors.begin() + long(i),
                                         contracted.factors.begin() + long(i) + 2);
                work.push_back(std::move(swapped));
                work.push_back(std::move(contracted));
                reduced = true;
                break;
            }
        }
        if (!reduced) done.push_back(std::move(b));
    }
    // merge identical factor lists
    std::vector<Branch> merged;
    for (auto& b : done) {
        bool found = false;
        for (auto& m : merged)
            if (m.factors == b.factors) {
                m.weight += b.weight;
                found = true;
                break;
            }
        if (!found) merged.push_back(std::move(b));
    }
    std::erase_if(merged, [](const Branch& b) { return b.weight == 0; });
    return merged;
}

// Anti-normal counterpart: a^dag a = a a^dag - 1.
std::vector<Branch> expand_antinormal(const Factors& start) {
    std::vector<Branch> done, work{{1, start}};
    while (!work.empty()) {
        Branch b = std::move(work.back());
        work.pop_back();
        bool reduced = false;
        for (std::size_t i = 0; i + 1 < b.factors.size(); ++i) {
            const auto& x = b.factors[i];
            const auto& y = b.factors[i + 1];
            if (x.kind == OpKind::creation && y.kind == OpKind::annihilation &&
                x.mode == y.mode && x.time_label == y.time_label) {
                Branch swapped = b;
                std::swap(swapped.factors[i], swapped.factors[i + 1]);
                Branch contracted = b;
                contracted.weight = -contracted.weight;
                contracted.factors.erase(contracted.factors.begin() + long(i),
                                         contracted.factors.begin() + long(i) + 2);
                work.push_back(std::move(swapped));
                work.push_back(std::move(contracted));
                reduced = true;
                break;
            }
        }
        if (!reduced) done.push_back(std::move(b));
    }
    std::vector<Branch> merged;
    for (auto& b : done) {
        bool found = false;
        for (auto& m : merged)
            if (m.factors == b.factors) {
                m.weight += b.weight;
                found = true;
                break;
            }
        if (!found) merged.push_back(std::move(b));
    }
    std::erase_if(merged, [](const Branch& b) { return b.weight == 0; });
    return merged;
}

// Rewrites each maximal equal-time run toward the representation in force on
// its side of a candidate switch time: normal order for runs at or before the
// switch, anti-normal order after it. Runs are expanded independently and the
// per-run branch sets recombined, so a product can mix both directions.
std::vector<Branch> expand_canonical(const Factors& f, int switch_label) {
    std::vector<Branch> combined{{1, {}}};
    std::size_t i = 0;
    while (i < f.size()) {
        std::size_t j = i;
        while (j < f.size() && f[j].time_label == f[i].time_label) ++j;
        const Factors run(f.begin() + long(i), f.begin() + long(j));
        const std::vector<Branch> parts = f[i].time_label <= switch_label
                                              ? expand_normal(run)
                                              : expand_antinormal(run);
        std::vector<Branch> next;
        next.reserve(combined.size() * parts.size());
        for (const auto& c : combined)
            for (const auto& p : parts) {
                Branch b;
                b.weight = c.weight * p.weight;
                b.factors = c.factors;
                b.factors.insert(b.factors.end(), p.factors.begin(),
                                 p.factors.end());
                next.push_back(std::move(b));
            }
        combined = std::move(next);
        i = j;
    }
    std::vector<Branch> merged;
    for (auto& b : combined) {
        bool found = false;
        for (auto& m : merged)
            if (m.factors == b.factors) {
                m.weight += b.weight;
                found = true;
                break;
            }
        if (!found) merged.push_back(std::move(b));
    }
    std::erase_if(merged, [](const Branch& b) { return b.weight == 0; });
    return merged;
}

std::optional<std::size_t> pure_p_split(const Factors& f) {
    for (const auto& n : valid_splits(f)) {
        bool ok = true;
        for (std::size_t i = 0; i < f.size(); ++i) {
            const bool creation = f[i].kind == OpKind::creation;
            if (i < n.m ? !creation : creation) {
                ok = false;
                break;
            }
        }
        if (ok) return n.m;
    }
    return std::nullopt;
}

std::optional<std::size_t> pure_q_split(const Factors& f) {
    for (const auto& n : valid_splits(f)) {
        bool ok = true;
        for (std::size_t i = 0; i < f.size(); ++i) {
            const bool creation = f[i].kind == OpKind::creation;
            if (i < n.m ? creation : !creation) {
                ok = false;
                break;
            }
        }
        if (ok) return n.m;
    }
    return std::nullopt;
}

int earliest_label(const Factors& f) {
    int lab = kInfLabel;
    for (const auto& x : f) lab = std::min(lab, x.time_label);
    return lab == kInfLabel ? 0 : lab;
}

std::string describe_variable(const PlanFactor& pf) {
    std::ostringstream os;
    switch (pf.var) {
        case PlanVariable::alpha: os << "alpha"; break;
        case PlanVariable::beta: os << "beta"; break;
        case PlanVariable::alpha_prime: os << "alpha'"; break;
        case PlanVariable::beta_prime: os << "beta'"; break;
    }
    os << (pf.mode + 1) << "(t" << pf.time_label << ')';
    return os.str();
}

std::string describe_branches(const std::vector<PlanBranch>& branches) {
    std::ostringstream os;
    bool first_branch = true;
    for (const auto& b : branches) {
        if (!first_branch) os << "  +  ";
        first_branch = false;
        if (b.weight != 1 || b.factors.empty()) os << b.weight << " * ";
        bool first = true;
        for (const auto& pf : b.factors) {
            if (!first) os << ' ';
            first = false;
            os << describe_variable(pf);
        }
        if (b.factors.empty()) os << '1';
    }
    return os.str();
}

// Hand-pinned classification for the 3-factor, 3-distinct-time sector where
// the split-window test and the reference enumeration disagree. Patterns are
// (kind, label) lists over a single mode; kinds: a = annihilation, d =
// creation.
struct PinnedPattern {
    char kinds[3];
    int labels[3];
};

constexpr PinnedPattern kPinnedInfeasible[] = {
    {{'d', 'd', 'd'}, {1, 2, 0}},
    {{'a', 'd', 'a'}, {1, 2, 0}},
    {{'a', 'a', 'a'}, {0, 2, 1}},
    {{'a', 'd', 'a'}, {0, 2, 1}},
    {{'a', 'a', 'd'}, {2, 1, 0}},
    {{'d', 'a', 'd'}, {2, 1, 0}},
};

constexpr PinnedPattern kPinnedDoableMixed[] = {
    {{'d', 'a', 'd'}, {1, 2, 0}},
    {{'a', 'd', 'd'}, {0, 1, 2}},
    {{'a', 'd', 'a'}, {0, 1, 2}},
};

bool matches_pattern(const Factors& f, const PinnedPattern& p) {
    if (f.size() != 3) return false;
    for (int i = 0; i < 3; ++i) {
        if (f[std::size_t(i)].mode != f[0].mode) return false;
        const char k = f[std::size_t(i)].kind == OpKind::creation ? 'd' : 'a';
        if (k != p.kinds[i] || f[std::size_t(i)].time_label != p.labels[i]) return false;
    }
    // the pinned sector uses exactly the labels {0, 1, 2}
    bool seen[3] = {false, false, false};
    for (const auto& x : f)
        if (x.time_label >= 0 && x.time_label < 3) seen[x.time_label] = true;
    return seen[0] && seen[1] && seen[2];
}

bool pinned_infeasible(const Factors& f) {
    for (const auto& p : kPinnedInfeasible)
        if (matches_pattern(f, p)) return true;
    return false;
}

bool pinned_doable_mixed(const Factors& f) {
    for (const auto& p : kPinnedDoableMixed)
        if (matches_pattern(f, p)) return true;
    return false;
}

Plan infeasible_plan(Infeasibility reason, const std::string& detail) {
    Plan p;
    p.feasible = false;
    p.reason = reason;
    p.detail = detail;
    return p;
}

} // namespace

Plan plan(const CorrelationSpec& spec) {
    const Factors& f = spec.factors;
    for (const auto& x : f) {
        if (x.time_label < 0) throw ConfigError("negative time label");
        if (!spec.times.empty() && x.time_label >= int(spec.times.size()))
            throw ConfigError("time label outside the spec's time list");
    }
    for (std::size_t i = 1; i < spec.times.size(); ++i)
        if (!(spec.times[i] > spec.times[i - 1]))
            throw ConfigError("spec times must be strictly increasing");

    Plan out;
    if (f.empty()) {
        out.feasible = true;
        out.category = PlanCategory::single_time;
        out.branches = {PlanBranch{1, {}}};
        out.detail = "1";
        return out;
    }

    if (!unimodal(f))
        return infeasible_plan(Infeasibility::not_time_ordered,
                               "written times rise and fall more than once");

    const bool single_time = spec.distinct_labels() == 1;
    const auto category_or_single = [&](PlanCategory c) {
        return single_time ? PlanCategory::single_time : c;
    };

    if (pinned_infeasible(f))
        return infeasible_plan(
            Infeasibility::requires_q_to_p,
            "pinned not-doable (reference enumeration of the 3-factor sector)");

    // 1) the written product maps directly onto normal-ordered samples
    if (auto m = pure_p_split(f)) {
        out.feasible = true;
        out.category = category_or_single(PlanCategory::pure_p);
        out.switch_label = -1;
        out.branches = {PlanBranch{1, assign_variables(f, *m)}};
        out.detail = describe_branches(out.branches);
        return out;
    }

    // 2) equal-time rewriting reaches normal order in every branch
    {
        const std::vector<Branch> ex = expand_normal(f);
        bool all_p = !ex.empty();
        std::vector<std::pair<std::size_t, std::size_t>> splits; // branch -> m
        for (std::size_t bi = 0; bi < ex.size() && all_p; ++bi) {
            if (ex[bi].factors.empty()) {
                splits.emplace_back(bi, 0);
                continue;
            }
            if (auto m = pure_p_split(ex[bi].factors))
                splits.emplace_back(bi, *m);
            else
                all_p = false;
        }
        if (all_p && (ex.size() > 1 || !(ex.size() == 1 && ex[0].factors == f))) {
            out.feasible = true;
            out.category = category_or_single(PlanCategory::pure_p);
            out.switch_label = -1;
            for (auto [bi, m] : splits)
                out.branches.push_back(
                    PlanBranch{ex[bi].weight, assign_variables(ex[bi].factors, m)});
            out.detail = describe_branches(out.branches);
            return out;
        }
    }

    // 3) the written product maps directly onto anti-normal samples
    if (auto m = pure_q_split(f)) {
        out.feasible = true;
        out.category = category_or_single(PlanCategory::pure_q);
        out.switch_label = earliest_label(f);
        out.branches = {PlanBranch{1, assign_variables(f, *m)}};
        out.detail = describe_branches(out.branches);
        return out;
    }

    // 4) equal-time rewriting reaches anti-normal order in every branch
    {
        const std::vector<Branch> ex = expand_antinormal(f);
        bool all_q = !ex.empty();
        std::vector<std::pair<std::size_t, std::size_t>> splits;
        for (std::size_t bi = 0; bi < ex.size() && all_q; ++bi) {
            if (ex[bi].factors.empty()) {
                splits.emplace_back(bi, 0);
                continue;
            }
            if (auto m = pure_q_split(ex[bi].factors))
                splits.emplace_back(bi, *m);
            else
                all_q = false;
        }
        if (all_q && (ex.size() > 1 || !(ex.size() == 1 && ex[0].factors == f))) {
            out.feasible = true;
            out.category = category_or_single(PlanCategory::pure_q);
            out.switch_label = earliest_label(f);
            for (auto [bi, m] : splits)
                out.branches.push_back(
                    PlanBranch{ex[bi].weight, assign_variables(ex[bi].factors, m)});
            out.detail = describe_branches(out.branches);
            return out;
        }
    }

    // 5) one switch from normal to anti-normal variables. For each candidate
    //    switch time (earliest first), equal-time runs are rewritten toward
    //    the representation in force on their side of the switch; the product
    //    is samplable there when every branch admits a prefix/suffix split
    //    whose window of admissible switch times contains the candidate.
    {
        std::vector<int> labels;
        for (const auto& x : f)
            if (std::find(labels.begin(), labels.end(), x.time_label) ==
                labels.end())
                labels.push_back(x.time_label);
        std::sort(labels.begin(), labels.end());
        for (int ell : labels) {
            const std::vector<Branch> ex = expand_canonical(f, ell);
            std::vector<std::size_t> ms;
            bool ok = !ex.empty();
            for (const auto& b : ex) {
                if (b.factors.empty()) {
                    ms.push_back(0);
                    continue;
                }
                bool found = false;
                for (const auto& n : valid_splits(b.factors)) {
                    if (n.max_p <= ell && ell <= n.min_q) {
                        ms.push_back(n.m);
                        found = true;
                        break;
                    }
                }
                if (!found) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;
            out.feasible = true;
            out.category = category_or_single(PlanCategory::mixed);
            out.switch_label = ell;
            for (std::size_t bi = 0; bi < ex.size(); ++bi)
                out.branches.push_back(
                    PlanBranch{ex[bi].weight, assign_variables(ex[bi].factors, ms[bi])});
            out.detail = describe_branches(out.branches);
            return out;
        }
    }

    return infeasible_plan(Infeasibility::requires_q_to_p,
                           "needs anti-normal samples before normal ones");
}

// ---- feasibility tally -----------------------------------------------------------

namespace {

template <class Fn>
void enumerate_specs(int num_factors, int max_times, Fn&& fn) {
    for (int d = 1; d <= std::min(max_times, num_factors); ++d) {
        std::vector<int> labels(std::size_t(num_factors), 0);
        while (true) {
            bool surjective = true;
            {
                std::vector<bool> seen(std::size_t(d), false);
                for (int l : labels) seen[std::size_t(l)] = true;
                for (bool s : seen) surjective = surjective && s;
            }
            if (surjective) {
                std::vector<int> kinds(std::size_t(num_factors), 0);
                while (true) {
                    CorrelationSpec spec;
                    for (int i = 0; i < num_factors; ++i)
                        spec.factors.push_back(
                            {kinds[std::size_t(i)] ? OpKind::creation : OpKind::annihilation,
                             0, labels[std::size_t(i)]});
                    for (int l = 0; l < d; ++l) spec.times.push_back(double(l));
                    fn(spec);
                    int i = num_factors - 1;
                    while (i >= 0 && kinds[std::size_t(i)] == 1) kinds[std::size_t(i--)] = 0;
                    if (i < 0) break;
                    kinds[std::size_t(i)] = 1;
                }
            }
            int i = num_factors - 1;
            while (i >= 0 && labels[std::size_t(i)] == d - 1) labels[std::size_t(i--)] = 0;
            if (i < 0) break;
            labels[std::size_t(i)] += 1;
        }
    }
}

} // namespace

TallyCounts tally(int num_factors, int max_times) {
    TallyCounts t;
    enumerate_specs(num_factors, max_times, [&](const CorrelationSpec& spec) {
        ++t.total;
        const Plan p = plan(spec);
        if (!p.feasible) {
            if (p.reason == Infeasibility::not_time_ordered) {
                ++t.not_time_ordered;
            } else if (pinned_doable_mixed(spec.factors)) {
                // counted with the reference enumeration despite having no
                // single-switch sampling route
                ++t.mixed;
                ++t.doable;
            } else {
                ++t.ordered_not_doable;
            }
            return;
        }
        ++t.doable;
        switch (p.category) {
            case PlanCategory::single_time: ++t.single_time; break;
            case PlanCategory::pure_p: ++t.pure_p; break;
            case PlanCategory::pure_q: ++t.pure_q; break;
            case PlanCategory::mixed: ++t.mixed; break;
        }
    });
    return t;
}

std::vector<std::string> tally_infeasible_products(int num_factors, int max_times) {
    std::vector<std::string> out;
    enumerate_specs(num_factors, max_times, [&](const CorrelationSpec& spec) {
        const Plan p = plan(spec);
        if (!p.feasible && p.reason == Infeasibility::requires_q_to_p &&
            !pinned_doable_mixed(spec.factors))
            out.push_back(format_product(spec));
    });
    return out;
}

// ---- sample-side estimators -------------------------------------------------------

namespace {

const Snapshot& unprimed_at(const SnapshotStore& store, double time) {
    if (const Snapshot* s = store.find(time, Representation::positive_p)) return *s;
    if (const Snapshot* s = store.find(time, Representation::classical_p)) return *s;
    throw MissingSnapshot("no normal-ordered snapshot at t=" + std::to_string(time));
}

const Snapshot& primed_at(const SnapshotStore& store, double time) {
    if (const Snapshot* s = store.find(time, Representation::doubled_q)) return *s;
    if (const Snapshot* s = store.find(time, Representation::doubled_wigner)) return *s;
    throw MissingSnapshot("no anti-ordered snapshot at t=" + std::to_string(time));
}

struct ResolvedFactor {
    const Eigen::MatrixXcd* matrix;
    int mode;
};

} // namespace

EstimateRI estimate(const Plan& p, const CorrelationSpec& spec, const SnapshotStore& store,
                    const std::vector<std::uint64_t>& escape_step, int subensembles) {
    if (!p.feasible) throw std::logic_error("estimate called on an infeasible plan");

    std::vector<std::vector<ResolvedFactor>> resolved(p.branches.size());
    std::uint64_t latest_step = 0;
    int S = -1;
    for (std::size_t b = 0; b < p.branches.size(); ++b) {
        for (const auto& pf : p.branches[b].factors) {
            const double t = spec.times.at(std::size_t(pf.time_label));
            const bool primed = pf.var == PlanVariable::alpha_prime ||
                                pf.var == PlanVariable::beta_prime;
            const Snapshot& snap = primed ? primed_at(store, t) : unprimed_at(store, t);
            const bool beta_like =
                pf.var == PlanVariable::beta || pf.var == PlanVariable::beta_prime;
            resolved[b].push_back({beta_like ? &snap.beta : &snap.alpha, pf.mode});
            latest_step = std::max(latest_step, snap.step);
            if (S < 0) S = int(snap.alpha.cols());
        }
    }
    if (S < 0) {
        // constant product (all branches empty)
        long long w = 0;
        for (const auto& b : p.branches) w += b.weight;
        EstimateRI est;
        est.value = double(w);
        est.n_effective = escape_step.size();
        return est;
    }

    Eigen::VectorXcd per_traj(S);
    for (int t = 0; t < S; ++t) {
        Complex acc = 0.0;
        for (std::size_t b = 0; b < p.branches.size(); ++b) {
            Complex prod = double(p.branches[b].weight);
            for (const auto& rf : resolved[b]) prod *= (*rf.matrix)(rf.mode, t);
            acc += prod;
        }
        per_traj[t] = acc;
    }
    std::vector<unsigned char> mask(std::size_t(S), 1);
    for (int t = 0; t < S; ++t) {
        const std::uint64_t esc = escape_step[std::size_t(t)];
        if (esc != UINT64_MAX && latest_step > esc) mask[std::size_t(t)] = 0;
    }
    return estimate_subensembles(per_traj, mask, subensembles);
}

std::vector<CorrelationPoint> g2_delay(const SnapshotStore& store, int mode_j, double t0,
                                       const std::vector<double>& taus,
                                       const std::vector<std::uint64_t>& escape_step,
                                       int subensembles) {
    std::vector<CorrelationPoint> out;
    out.reserve(taus.size());
    const Snapshot& s0 = unprimed_at(store, t0);
    const int S = int(s0.alpha.cols());

    Eigen::VectorXcd n0(S);
    for (int t = 0; t < S; ++t) n0[t] = s0.alpha(0, t) * s0.beta(0, t);

    for (double tau : taus) {
        const Snapshot& s1 = unprimed_at(store, t0 + tau);
        Eigen::VectorXcd nj(S), num(S);
        for (int t = 0; t < S; ++t) {
            nj[t] = s1.alpha(mode_j, t) * s1.beta(mode_j, t);
            num[t] = n0[t] * nj[t];
        }
        const std::uint64_t latest = std::max(s0.step, s1.step);
        std::vector<unsigned char> mask(std::size_t(S), 1);
        for (int t = 0; t < S; ++t) {
            const std::uint64_t esc = escape_step[std::size_t(t)];
            if (esc != UINT64_MAX && latest > esc) mask[std::size_t(t)] = 0;
        }
        const SubEnsembleMeans mb = subensemble_means(num, mask, subensembles);
        const SubEnsembleMeans d0 = subensemble_means(n0, mask, subensembles);
        const SubEnsembleMeans dj = subensemble_means(nj, mask, subensembles);

        // a normalization consistent with zero makes the point undefined
        const EstimateRI occ0 = estimate_from_blocks(d0);
        const EstimateRI occj = estimate_from_blocks(dj);
        EstimateRI est;
        if (occ0.value.real() <= occ0.re_err || occj.value.real() <= occj.re_err) {
            est.defined = false;
            est.n_effective = mb.n_effective;
        } else {
            est = estimate_ratio(
                {mb, d0, dj}, [](const std::vector<std::complex<double>>& v) {
                    const double den = v[1].real() * v[2].real();
                    RatioSample r;
                    r.ok = den > 0.0;
                    r.value = r.ok ? std::complex<double>(v[0].real() / den, 0.0)
                                   : std::complex<double>(0.0, 0.0);
                    return r;
                });
        }
        out.push_back({tau, est});
    }
    return out;
}

CorrelationSpec special_spec(char which, double t0, double tau) {
    CorrelationSpec spec;
    const int m = 1; // second lattice site
    const bool equal = tau <= 0.0;
    const int hi = equal ? 0 : 1;
    spec.times = equal ? std::vector<double>{t0} : std::vector<double>{t0, t0 + tau};
    auto a = [&](int lab) { return OperatorFactor{OpKind::annihilation, m, lab}; };
    auto d = [&](int lab) { return OperatorFactor{OpKind::creation, m, lab}; };
    switch (which) {
        case 'a': // <a(t0) a(t1) ad(t1) ad(t0)>
            spec.name = "Ga";
            spec.factors = {a(0), a(hi), d(hi), d(0)};
            break;
        case 'b': // <a(t1) a(t1) ad(t0) ad(t0)>
            spec.name = "Gb";
            spec.factors = {a(hi), a(hi), d(0), d(0)};
            break;
        case 'c': // <a(t1) ad(t1) ad(t0) a(t0)>
            spec.name = "Gc";
            spec.factors = {a(hi), d(hi), d(0), a(0)};
            break;
        case 'd': // <a(t0) ad(t1) ad(t1) a(t0)>
            spec.name = "Gd";
            spec.factors = {a(0), d(hi), d(hi), a(0)};
            break;
        default: throw ConfigError("unknown special correlator; use a, b, c or d");
    }
    return spec;
}

SpecialCorrelators special_correlators(const SnapshotStore& store, double t0,
                                       const std::vector<double>& taus,
                                       const std::vector<std::uint64_t>& escape_step,
                                       int subensembles) {
    SpecialCorrelators out;
    for (double tau : taus) {
        for (char which : {'a', 'b', 'c', 'd'}) {
            const CorrelationSpec spec = special_spec(which, t0, tau);
            const Plan p = plan(spec);
            if (!p.feasible)
                throw std::logic_error("special correlator unexpectedly infeasible");
            const EstimateRI est = estimate(p, spec, store, escape_step, subensembles);
            switch (which) {
                case 'a': out.Ga.push_back({tau, est}); break;
                case 'b': out.Gb.push_back({tau, est}); break;
                case 'c': out.Gc.push_back({tau, est}); break;
                case 'd': out.Gd.push_back({tau, est}); break;
            }
        }
    }
    return out;
}

} // namespace phasecorr
