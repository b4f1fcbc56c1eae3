#include "partlab/particles.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "partlab/error.hpp"
#include "partlab/parallel.hpp"

namespace partlab {

Configuration project(const ParticleSystem& ps, const Configuration& c) { return step(ps.morphism, c); }

PhiField::PhiField(const ParticleSystem& ps, const Configuration& x, std::span<const std::uint8_t> rules,
                   long rules_lo, long rules_hi)
    : pi_(project(ps, x)) {
    if (ps.uses_rules && rules.size() != static_cast<std::size_t>(x.size()))
        throw PreconditionError("rule field must be aligned with the configuration");
    lo_ = x.exact_lo() - ps.view_lo();
    hi_ = x.exact_hi() - ps.view_hi();
    if (ps.uses_rules) {
        lo_ = std::max(lo_, rules_lo - ps.view_lo());
        hi_ = std::min(hi_, rules_hi - ps.view_hi());
    }
    if (hi_ < lo_) {
        hi_ = lo_ - 1;
        return;
    }
    img_.resize(static_cast<std::size_t>(hi_ - lo_ + 1));
    const Symbol* xc = x.cells().data() - x.origin();
    const Symbol* pc = pi_.cells().data() - pi_.origin();
    const std::uint8_t* rc = ps.uses_rules ? rules.data() - x.origin() : nullptr;
    for (long k = lo_; k <= hi_; ++k) {
        if (pc[k] == 0) continue;
        img_[static_cast<std::size_t>(k - lo_)] = ps.update(PhiView(xc + k, pc + k, rc ? rc + k : nullptr, ps.window));
    }
}

namespace {

bool same_image(const Image& a, long ka, const Image& b, long kb) {
    if (a.size() != b.size()) return false;
    for (int i = 0; i < a.size(); ++i)
        if (ka + a[i] != kb + b[i]) return false;
    return true;
}

struct Coalescence {
    bool determined = false;
    Tag tag = Tag::none;
    int image = 0, preimage = 0;
    bool type_kept = true;
};

// Classification of the particle at k; needs phi on the r-neighbourhood of its images.
Coalescence coalescence_at(const ParticleSystem& ps, const PhiField& phi, const Configuration& next_pi, long k) {
    Coalescence c;
    const Image& img = phi.at(k);
    c.image = img.size();
    if (img.empty()) {
        // an empty image is a destruction on its own
        c.determined = true;
        c.tag = Tag::interacting;
        c.preimage = 1;
        return c;
    }
    const int r = ps.radius;
    long a = k + img.front() - r, b = k + img.back() + r;
    if (!phi.determined(a) || !phi.determined(b)) return c;
    for (long j = a; j <= b; ++j)
        if (phi.pi(j) != 0 && same_image(phi.at(j), j, img, k)) ++c.preimage;
    if (c.image == 1 && c.preimage == 1) {
        long t = k + img.front();
        if (t < next_pi.exact_lo() || t > next_pi.exact_hi()) return c;
        c.type_kept = next_pi.at(t) == phi.pi(k);
        c.tag = c.type_kept ? Tag::progressing : Tag::invalid;
    } else {
        c.tag = c.image < c.preimage ? Tag::interacting : Tag::invalid;
    }
    c.determined = true;
    return c;
}

}  // namespace

StepClassification classify_step(const ParticleSystem& ps, const PhiField& phi, const Configuration& next_pi) {
    StepClassification s;
    const int r = ps.radius;
    s.lo = std::max(phi.lo() + 2L * r, next_pi.exact_lo() + r);
    s.hi = std::min(phi.hi() - 2L * r, next_pi.exact_hi() - r);
    if (s.hi < s.lo) {
        s.hi = s.lo - 1;
        return s;
    }
    s.tags.assign(static_cast<std::size_t>(s.hi - s.lo + 1), Tag::none);
    for (long k = s.lo; k <= s.hi; ++k) {
        if (phi.pi(k) == 0) continue;
        Coalescence c = coalescence_at(ps, phi, next_pi, k);
        s.tags[static_cast<std::size_t>(k - s.lo)] = c.determined ? c.tag : Tag::invalid;
    }
    return s;
}

namespace {

// Rule field of a PCA step re-indexed onto the cells of x.
struct AlignedRules {
    std::vector<std::uint8_t> rules;
    long lo = 0, hi = -1;
};

AlignedRules align_rules(const Dynamics& dyn, const Configuration& x, const RuleField& field) {
    AlignedRules a;
    if (!dyn.probabilistic()) return a;
    a.rules.assign(static_cast<std::size_t>(x.size()), 0);
    const long out_first = x.first() - dyn.pca()->min_offset();
    for (std::size_t j = 0; j < field.size(); ++j)
        a.rules[static_cast<std::size_t>(out_first - x.first()) + j] = field[j];
    a.lo = out_first;
    a.hi = out_first + static_cast<long>(field.size()) - 1;
    return a;
}

std::pair<Configuration, RuleField> advance_with_field(const Dynamics& dyn, const Configuration& c, Rng& rng) {
    if (const auto* r = dyn.rule()) return {step(*r, c), {}};
    return step_pca(*dyn.pca(), c, rng);
}

}  // namespace

StepClassification classify_step(const Dynamics& dyn, const ParticleSystem& ps, const Configuration& c, Rng& rng) {
    auto [next, field] = advance_with_field(dyn, c, rng);
    AlignedRules a = align_rules(dyn, c, field);
    PhiField phi(ps, c, a.rules, a.lo, a.hi);
    return classify_step(ps, phi, project(ps, next));
}

// ---------------------------------------------------------------------------

std::string condition_name(Condition c) {
    switch (c) {
        case Condition::locality: return "locality";
        case Condition::surjectivity: return "surjectivity";
        case Condition::particle_control: return "particle-control";
        case Condition::disjunction: return "disjunction";
        case Condition::coalescence: return "coalescence";
        case Condition::count_bound: return "count-bound";
    }
    return "?";
}

bool CheckReport::pass() const {
    return std::all_of(results.begin(), results.end(), [](const ConditionResult& r) { return r.pass(); });
}

std::string CheckReport::summary() const {
    std::ostringstream os;
    os << system << " [" << mode << ", len " << enum_len << ", " << words << " words]";
    for (int i = 0; i < condition_count; ++i) {
        const auto& r = results[static_cast<std::size_t>(i)];
        os << ' ' << condition_name(static_cast<Condition>(i)) << '=' << (r.pass() ? "ok" : "FAIL") << '(' << r.checked;
        if (!r.pass()) os << ", " << r.violations << " bad";
        os << ')';
    }
    return os.str();
}

int sound_enum_len(const Dynamics& dyn, const ParticleSystem& ps) {
    return 2 * (ps.window + ps.radius + dyn.radius()) + 1;
}

namespace {

class Checker {
public:
    Checker(const Dynamics& dyn, const ParticleSystem& ps, CheckReport& rep) : dyn_(dyn), ps_(ps), rep_(rep) {}

    void run(const Word& w, std::span<const std::uint8_t> rules) {
        ++rep_.words;
        word_ = &w;
        rules_ = rules;
        const int n = static_cast<int>(w.size());
        Configuration x(Alphabet::of(dyn_.alphabet_size()), w, 0);
        Configuration fx = dyn_.rule() ? step(*dyn_.rule(), x) : apply_pca(x);
        PhiField phi(ps_, x, rules, 0, n - 1);
        Configuration npi = project(ps_, fx);
        const int r = ps_.radius;

        for (long k = phi.lo(); k <= phi.hi(); ++k) {
            if (phi.pi(k) == 0) continue;
            const Image& img = phi.at(k);
            bool local = true;
            for (int i = 0; i < img.size(); ++i) {
                if (img[i] < -r || img[i] > r) local = false;
                if (i > 0 && img[i] <= img[i - 1]) local = false;
            }
            note(Condition::locality, local, k);
            bool inside = true, ok = true;
            for (int i = 0; i < img.size(); ++i) {
                long t = k + img[i];
                if (t < npi.exact_lo() || t > npi.exact_hi())
                    inside = false;
                else if (npi.at(t) == 0)
                    ok = false;
            }
            if (inside || !ok) note(Condition::particle_control, ok, k);

            for (long j = k + 1; j <= std::min(phi.hi(), k + 2L * r); ++j) {
                if (phi.pi(j) == 0) continue;
                const Image& o = phi.at(j);
                if (img.empty() || o.empty()) continue;
                bool disjoint = same_image(img, k, o, j) || k + img.back() < j + o.front();
                note(Condition::disjunction, disjoint, k);
            }

            Coalescence c = coalescence_at(ps_, phi, npi, k);
            if (c.determined) {
                note(Condition::coalescence, c.tag != Tag::invalid, k);
                if (c.image > 0) note(Condition::count_bound, c.image + c.preimage <= 2 * r + 2, k);
            }
        }

        for (long t = std::max(npi.exact_lo(), phi.lo() + r); t <= std::min(npi.exact_hi(), phi.hi() - r); ++t) {
            if (npi.at(t) == 0) continue;
            bool found = false;
            for (long k = t - r; k <= t + r && !found; ++k) {
                if (phi.pi(k) == 0) continue;
                const Image& img = phi.at(k);
                for (int i = 0; i < img.size(); ++i) found = found || k + img[i] == t;
            }
            note(Condition::surjectivity, found, t);
        }
    }

private:
    const Dynamics& dyn_;
    const ParticleSystem& ps_;
    CheckReport& rep_;
    const Word* word_ = nullptr;
    std::span<const std::uint8_t> rules_;

    Configuration apply_pca(const Configuration& x) {
        const PCASpec& pca = *dyn_.pca();
        const long first = -pca.min_offset();
        std::size_t width = output_width(pca, x);
        return apply_field(pca, x, rules_.subspan(static_cast<std::size_t>(first), width));
    }

    void note(Condition c, bool ok, long k) {
        auto& r = rep_.results[static_cast<std::size_t>(c)];
        ++r.checked;
        if (ok) return;
        if (r.violations++ == 0) {
            std::ostringstream os;
            os << "word=" << format_word(*word_);
            if (!rules_.empty()) os << " rules=" << format_word(Word(rules_.begin(), rules_.end()));
            os << " at=" << k;
            r.witness = os.str();
        }
    }
};

bool next_word(Word& w, int n) {
    for (std::size_t i = w.size(); i-- > 0;) {
        if (++w[i] < n) return true;
        w[i] = 0;
    }
    return false;
}

bool next_field(std::vector<std::uint8_t>& f, const PCASpec& pca) {
    const int k = static_cast<int>(pca.rules.size());
    for (;;) {
        std::size_t i = f.size();
        bool carried = true;
        while (carried && i-- > 0) {
            if (++f[i] < k)
                carried = false;
            else
                f[i] = 0;
        }
        if (carried) return false;
        bool ok = true;
        for (std::size_t j = 1; j < f.size() && ok; ++j) ok = pca.allowed_pair(f[j - 1], f[j]);
        if (ok) return true;
    }
}

}  // namespace

CheckReport check_particle_system(const Dynamics& dyn, const ParticleSystem& ps, int enum_len, CheckMode mode) {
    if (enum_len < sound_enum_len(dyn, ps))
        throw PreconditionError("enumeration length " + std::to_string(enum_len) + " is below the sound bound " +
                                std::to_string(sound_enum_len(dyn, ps)));
    if (ps.morphism.input_size() != dyn.alphabet_size()) throw PreconditionError("system and automaton alphabets differ");
    if (ps.uses_rules != dyn.probabilistic()) throw PreconditionError("rule-field usage does not match the automaton");
    CheckReport rep;
    rep.system = ps.name;
    rep.enum_len = enum_len;
    Checker checker(dyn, ps, rep);
    const int n = dyn.alphabet_size();
    const std::size_t len = static_cast<std::size_t>(enum_len);
    const double space = std::pow(static_cast<double>(n), enum_len);

    if (mode.kind == CheckMode::sampled) {
        if (mode.samples <= 0) throw PreconditionError("sampled check needs a positive sample count");
        rep.mode = "sampled";
        Rng rng(mode.seed);
        Word w(len);
        std::vector<std::uint8_t> f(dyn.probabilistic() ? len : 0);
        for (long s = 0; s < mode.samples; ++s) {
            for (auto& v : w) v = static_cast<Symbol>(rng.below(static_cast<std::uint64_t>(n)));
            if (dyn.probabilistic()) {
                const PCASpec& pca = *dyn.pca();
                const int k = static_cast<int>(pca.rules.size());
                for (std::size_t i = 0; i < len; ++i) {
                    if (!mode.sample_rules) {
                        f[i] = static_cast<std::uint8_t>(mode.rule);
                        continue;
                    }
                    do f[i] = static_cast<std::uint8_t>(rng.below(static_cast<std::uint64_t>(k)));
                    while (i > 0 && !pca.allowed_pair(f[i - 1], f[i]));
                }
            }
            checker.run(w, f);
        }
        return rep;
    }

    if (space > 5e7) throw FeasibilityError("enumeration too large; use sampled mode");
    Word w(len, 0);
    if (!dyn.probabilistic()) {
        if (mode.kind != CheckMode::exhaustive) throw PreconditionError("rule modes need a probabilistic automaton");
        rep.mode = "exhaustive";
        do checker.run(w, {});
        while (next_word(w, n));
        return rep;
    }
    const PCASpec& pca = *dyn.pca();
    if (mode.kind == CheckMode::constant_rules || mode.kind == CheckMode::exhaustive) {
        if (mode.rule < 0 || mode.rule >= static_cast<int>(pca.rules.size())) throw PreconditionError("no such rule");
        rep.mode = "rule " + std::to_string(mode.rule);
        std::vector<std::uint8_t> f(len, static_cast<std::uint8_t>(mode.rule));
        do checker.run(w, f);
        while (next_word(w, n));
        return rep;
    }
    rep.mode = "all rule fields";
    std::vector<std::uint8_t> f(len, 0);
    bool have = true;
    for (std::size_t i = 1; i < len; ++i)
        if (!pca.allowed_pair(f[i - 1], f[i])) have = false;
    if (!have) have = next_field(f, pca);
    while (have) {
        std::fill(w.begin(), w.end(), 0);
        do checker.run(w, f);
        while (next_word(w, n));
        have = next_field(f, pca);
    }
    return rep;
}

// ---------------------------------------------------------------------------

DensityTrace trace_densities(const Dynamics& dyn, const ParticleSystem& ps, const MeasureSpec& m, int t_max,
                             const SamplingPlan& plan) {
    if (t_max < 1) throw PreconditionError("need at least one step");
    const int np = ps.particle_count(), r = ps.radius;
    const std::size_t extra = static_cast<std::size_t>(ps.view_hi() - ps.view_lo() + 4 * r + 2 + dyn.max_offset() -
                                                       dyn.min_offset());
    struct Acc {
        std::vector<DensityRow> rows;
        long checks = 0, violations = 0;
        double min_slack = 1e9;
    };
    std::vector<Acc> acc(plan.trajectories);
    const Rng master(plan.seed);
    parallel_for(plan.trajectories, plan.threads, [&](std::size_t j) {
        Rng rng = master.split(j);
        Configuration x = sample_for_steps(m, dyn, plan.cells, t_max, rng, extra);
        Acc& a = acc[j];
        for (int t = 0; t < t_max; ++t) {
            auto [next, field] = advance_with_field(dyn, x, rng);
            AlignedRules al = align_rules(dyn, x, field);
            PhiField phi(ps, x, al.rules, al.lo, al.hi);
            Configuration npi = project(ps, next);
            StepClassification cls = classify_step(ps, phi, npi);
            long lo = cls.lo, hi = cls.hi;
            if (hi - lo + 1 < 1) throw FeasibilityError("measurement region exhausted");
            const double len = static_cast<double>(hi - lo + 1);
            DensityRow row;
            row.t = t;
            row.D_p.assign(static_cast<std::size_t>(np), 0.0);
            std::vector<double> next_p(static_cast<std::size_t>(np), 0.0);
            double next_D = 0;
            for (long k = lo; k <= hi; ++k) {
                Symbol p = phi.pi(k);
                if (p) {
                    row.D += 1;
                    row.D_p[p - 1u] += 1;
                    Tag tag = cls.at(k);
                    if (tag == Tag::progressing)
                        row.D_prog += 1;
                    else if (tag == Tag::interacting) {
                        row.D_inter += 1;
                    }
                }
                Symbol q = npi.at(k);
                if (q) {
                    next_D += 1;
                    next_p[q - 1u] += 1;
                }
            }
            const double corr = (2.0 * r + 2.0);
            row.slack_total = (corr + row.D - row.D_inter / (r + 1.0) - next_D) / len;
            row.slack_species = 1e9;
            for (int p = 0; p < np; ++p)
                row.slack_species = std::min(row.slack_species,
                                             (corr + row.D_p[static_cast<std::size_t>(p)] + row.D_inter -
                                              next_p[static_cast<std::size_t>(p)]) /
                                                 len);
            a.checks += 1 + np;
            row.violations = (row.slack_total < 0 ? 1 : 0);
            for (int p = 0; p < np; ++p)
                if ((corr + row.D_p[static_cast<std::size_t>(p)] + row.D_inter - next_p[static_cast<std::size_t>(p)]) < 0)
                    ++row.violations;
            a.violations += row.violations;
            a.min_slack = std::min({a.min_slack, row.slack_total, row.slack_species});
            row.D /= len;
            row.D_prog /= len;
            row.D_inter /= len;
            for (auto& v : row.D_p) v /= len;
            a.rows.push_back(std::move(row));
            x = std::move(next);
        }
        // final densities without a successor
        Configuration pi = project(ps, x);
        DensityRow last;
        last.t = t_max;
        last.D_p.assign(static_cast<std::size_t>(np), 0.0);
        auto cells = pi.exact_cells();
        for (Symbol p : cells)
            if (p) {
                last.D += 1;
                last.D_p[p - 1u] += 1;
            }
        last.D /= static_cast<double>(cells.size());
        for (auto& v : last.D_p) v /= static_cast<double>(cells.size());
        a.rows.push_back(std::move(last));
    });

    DensityTrace tr;
    tr.particles = ps.particles;
    tr.min_slack = 1e9;
    const double n = static_cast<double>(plan.trajectories);
    for (int t = 0; t <= t_max; ++t) {
        DensityRow row;
        row.t = t;
        row.D_p.assign(static_cast<std::size_t>(np), 0.0);
        row.slack_total = row.slack_species = 1e9;
        for (const auto& a : acc) {
            const auto& s = a.rows[static_cast<std::size_t>(t)];
            row.D += s.D / n;
            row.D_prog += s.D_prog / n;
            row.D_inter += s.D_inter / n;
            for (int p = 0; p < np; ++p) row.D_p[static_cast<std::size_t>(p)] += s.D_p[static_cast<std::size_t>(p)] / n;
            if (t < t_max) {
                row.slack_total = std::min(row.slack_total, s.slack_total);
                row.slack_species = std::min(row.slack_species, s.slack_species);
                row.violations += s.violations;
            }
        }
        if (t == t_max) row.slack_total = row.slack_species = 0;
        tr.rows.push_back(std::move(row));
    }
    for (const auto& a : acc) {
        tr.inequality_checks += a.checks;
        tr.inequality_violations += a.violations;
        tr.min_slack = std::min(tr.min_slack, a.min_slack);
    }
    return tr;
}

std::string DensityTrace::csv() const {
    std::ostringstream os;
    os.precision(10);
    os << "t,D,D_inter,D_prog";
    for (const auto& p : particles) os << ",D_" << p;
    os << ",slack_total,slack_species,violations\n";
    for (const auto& r : rows) {
        os << r.t << ',' << r.D << ',' << r.D_inter << ',' << r.D_prog;
        for (double v : r.D_p) os << ',' << v;
        os << ',' << r.slack_total << ',' << r.slack_species << ',' << r.violations << '\n';
    }
    return os.str();
}

}  // namespace partlab
