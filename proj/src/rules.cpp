#include "partlab/rules.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "partlab/error.hpp"

namespace partlab {

LocalRule::LocalRule(int input_size, int output_size, std::vector<int> offsets, std::vector<Symbol> table)
    : in_(input_size), out_(output_size), offsets_(std::move(offsets)), table_(std::move(table)) {
    if (in_ < 1 || out_ < 1 || in_ > 256 || out_ > 256) throw PreconditionError("alphabet sizes must be in [1,256]");
    if (offsets_.empty()) throw PreconditionError("empty neighbourhood");
    if (!std::is_sorted(offsets_.begin(), offsets_.end()) ||
        std::adjacent_find(offsets_.begin(), offsets_.end()) != offsets_.end())
        throw PreconditionError("neighbourhood offsets must be strictly increasing");
    double total = std::pow(static_cast<double>(in_), static_cast<double>(offsets_.size()));
    if (total > 1e8) throw PreconditionError("rule table too large");
    if (table_.size() != static_cast<std::size_t>(total)) throw PreconditionError("rule table is not total");
    for (Symbol s : table_)
        if (s >= out_) throw PreconditionError("rule table entry outside output alphabet");
    contiguous_ = offsets_.back() - offsets_.front() + 1 == static_cast<int>(offsets_.size());
}

int LocalRule::radius() const { return std::max(-min_offset(), max_offset()); }

Symbol LocalRule::apply_values(std::span<const Symbol> values) const {
    if (values.size() != offsets_.size()) throw PreconditionError("neighbourhood size mismatch");
    std::size_t idx = 0;
    for (Symbol v : values) idx = idx * static_cast<std::size_t>(in_) + v;
    return table_[idx];
}

std::string LocalRule::serialize() const {
    std::ostringstream os;
    os << "rule " << in_ << ' ' << out_ << "\noffsets";
    for (int o : offsets_) os << ' ' << o;
    os << "\ntable";
    for (Symbol s : table_) os << ' ' << static_cast<int>(s);
    os << '\n';
    return os.str();
}

LocalRule LocalRule::parse(const std::string& text) {
    std::istringstream is(text);
    std::string tok;
    int in = 0, out = 0;
    std::vector<int> offsets;
    std::vector<Symbol> table;
    std::string section;
    while (is >> tok) {
        if (tok == "rule") {
            if (!(is >> in >> out)) throw PreconditionError("rule: expected input and output sizes");
            section.clear();
        } else if (tok == "offsets" || tok == "table") {
            section = tok;
        } else {
            long v = 0;
            try {
                std::size_t used = 0;
                v = std::stol(tok, &used);
                if (used != tok.size()) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw PreconditionError("rule: unexpected token '" + tok + "'");
            }
            if (section == "offsets")
                offsets.push_back(static_cast<int>(v));
            else if (section == "table") {
                if (v < 0 || v > 255) throw PreconditionError("rule: table entry out of range");
                table.push_back(static_cast<Symbol>(v));
            } else
                throw PreconditionError("rule: value outside a section");
        }
    }
    return LocalRule(in, out, std::move(offsets), std::move(table));
}

Configuration step(const LocalRule& rule, const Configuration& c) {
    if (c.alphabet().size != rule.input_size()) throw PreconditionError("alphabet does not match rule");
    const int lo = rule.min_offset(), hi = rule.max_offset();
    const long first = c.first() - lo, last = c.last() - hi;
    const long elo = std::max(c.exact_lo() - lo, first), ehi = std::min(c.exact_hi() - hi, last);
    if (last < first || elo > ehi) throw FeasibilityError("exact region exhausted");
    Word out(static_cast<std::size_t>(last - first + 1));
    const Symbol* center = c.cells().data() + (first - c.origin());
    if (rule.contiguous_) {
        const std::size_t n = static_cast<std::size_t>(rule.in_);
        std::size_t top = 1;
        for (std::size_t k = 1; k < rule.offsets_.size(); ++k) top *= n;
        std::size_t idx = rule.index(center);
        const Symbol* table = rule.table_.data();
        out[0] = table[idx];
        for (std::size_t j = 1; j < out.size(); ++j) {
            idx = (idx % top) * n + center[static_cast<long>(j) + hi];
            out[j] = table[idx];
        }
    } else {
        for (std::size_t j = 0; j < out.size(); ++j) out[j] = rule.apply(center + j);
    }
    return Configuration(Alphabet::of(rule.output_size()), std::move(out), first, elo, ehi);
}

// ---------------------------------------------------------------------------

namespace {

void check_distribution(std::span<const double> p, const char* what) {
    double s = 0;
    for (double v : p) {
        if (!(v >= 0)) throw PreconditionError(std::string(what) + ": negative probability");
        s += v;
    }
    if (std::abs(s - 1.0) > 1e-12) throw PreconditionError(std::string(what) + ": probabilities do not sum to 1");
}

}  // namespace

void PCASpec::validate() const {
    if (rules.empty()) throw PreconditionError("PCA needs at least one rule");
    for (const auto& r : rules)
        if (r.input_size() != rules.front().input_size() || r.output_size() != r.input_size())
            throw PreconditionError("PCA rules must share one alphabet");
    const std::size_t k = rules.size();
    if (const auto* ind = std::get_if<IndependentLaw>(&law)) {
        if (ind->probabilities.size() != k) throw PreconditionError("one probability per rule expected");
        check_distribution(ind->probabilities, "rule law");
    } else {
        const auto& m = std::get<MarkovLaw>(law);
        if (m.matrix.size() != k * k || m.stationary.size() != k) throw PreconditionError("Markov law has wrong shape");
        for (std::size_t i = 0; i < k; ++i)
            check_distribution(std::span<const double>(m.matrix).subspan(i * k, k), "Markov row");
        check_distribution(m.stationary, "stationary vector");
        for (std::size_t j = 0; j < k; ++j) {
            double v = 0;
            for (std::size_t i = 0; i < k; ++i) v += m.stationary[i] * m.matrix[i * k + j];
            if (std::abs(v - m.stationary[j]) > 1e-12) throw PreconditionError("stationary vector is not stationary");
        }
        for (auto [a, b] : m.forbidden) {
            if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= k || static_cast<std::size_t>(b) >= k)
                throw PreconditionError("forbidden pair out of range");
            if (m.matrix[static_cast<std::size_t>(a) * k + static_cast<std::size_t>(b)] != 0.0)
                throw PreconditionError("forbidden pair has positive transition probability");
        }
    }
}

int PCASpec::min_offset() const {
    int m = 0;
    for (const auto& r : rules) m = std::min(m, r.min_offset());
    return m;
}

int PCASpec::max_offset() const {
    int m = 0;
    for (const auto& r : rules) m = std::max(m, r.max_offset());
    return m;
}

bool PCASpec::allowed_pair(int left, int right) const {
    if (const auto* m = std::get_if<MarkovLaw>(&law))
        return std::find(m->forbidden.begin(), m->forbidden.end(), std::pair{left, right}) == m->forbidden.end();
    return true;
}

RuleField sample_rule_field(const PCASpec& pca, std::size_t n, Rng& rng) {
    RuleField f(n);
    if (const auto* ind = std::get_if<IndependentLaw>(&pca.law)) {
        if (ind->probabilities.size() == 2) {
            const double p0 = ind->probabilities[0];
            for (auto& v : f) v = rng.uniform() < p0 ? 0 : 1;
        } else {
            for (auto& v : f) v = static_cast<std::uint8_t>(rng.pick(ind->probabilities));
        }
    } else {
        const auto& m = std::get<MarkovLaw>(pca.law);
        const std::size_t k = pca.rules.size();
        if (n == 0) return f;
        f[0] = static_cast<std::uint8_t>(rng.pick(m.stationary));
        for (std::size_t j = 1; j < n; ++j)
            f[j] = static_cast<std::uint8_t>(rng.pick(std::span<const double>(m.matrix).subspan(f[j - 1] * k, k)));
    }
    return f;
}

std::size_t output_width(const PCASpec& pca, const Configuration& c) {
    long w = c.size() - (pca.max_offset() - pca.min_offset());
    if (w <= 0) throw FeasibilityError("exact region exhausted");
    return static_cast<std::size_t>(w);
}

Configuration apply_field(const PCASpec& pca, const Configuration& c, std::span<const std::uint8_t> field) {
    const int lo = pca.min_offset(), hi = pca.max_offset();
    const long first = c.first() - lo, last = c.last() - hi;
    const long elo = std::max(c.exact_lo() - lo, first), ehi = std::min(c.exact_hi() - hi, last);
    if (last < first || elo > ehi) throw FeasibilityError("exact region exhausted");
    if (field.size() != static_cast<std::size_t>(last - first + 1)) throw PreconditionError("rule field has wrong length");
    Word out(field.size());
    const Symbol* center = c.cells().data() + (first - c.origin());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = pca.rules[field[j]].apply(center + j);
    return Configuration(c.alphabet(), std::move(out), first, elo, ehi);
}

std::pair<Configuration, RuleField> step_pca(const PCASpec& pca, const Configuration& c, Rng& rng) {
    if (c.alphabet().size != pca.alphabet_size()) throw PreconditionError("alphabet does not match PCA");
    RuleField field = sample_rule_field(pca, output_width(pca, c), rng);
    Configuration next = apply_field(pca, c, field);
    return {std::move(next), std::move(field)};
}

int Dynamics::min_offset() const { return rule() ? rule()->min_offset() : std::min(0, pca()->min_offset()); }
int Dynamics::max_offset() const { return rule() ? rule()->max_offset() : std::max(0, pca()->max_offset()); }
int Dynamics::alphabet_size() const { return rule() ? rule()->input_size() : pca()->alphabet_size(); }

Configuration Dynamics::advance(const Configuration& c, Rng& rng) const {
    if (const auto* r = rule()) return step(*r, c);
    return step_pca(*pca(), c, rng).first;
}

Configuration iterate(const Dynamics& dyn, Configuration c, int t, Rng& rng, const Observer& observer) {
    if (t < 0) throw PreconditionError("negative step count");
    if (observer) observer(0, c);
    for (int s = 1; s <= t; ++s) {
        c = dyn.advance(c, rng);
        if (observer) observer(s, c);
    }
    return c;
}

// ---------------------------------------------------------------------------

LocalRule make_identity(int alphabet_size) {
    return LocalRule::tabulate(alphabet_size, alphabet_size, {0}, [](auto v) { return v[0]; });
}

LocalRule make_elementary(int number) {
    if (number < 0 || number > 255) throw PreconditionError("elementary rule number must be in [0,255]");
    return LocalRule::tabulate(2, 2, {-1, 0, 1},
                               [number](auto v) { return (number >> (4 * v[0] + 2 * v[1] + v[2])) & 1; });
}

LocalRule make_cyclic(int states) {
    if (states < 2) throw PreconditionError("cyclic automaton needs at least 2 states");
    return LocalRule::tabulate(states, states, {-1, 0, 1}, [states](auto v) {
        int up = (v[1] + 1) % states;
        return (v[0] == up || v[2] == up) ? up : v[1];
    });
}

LocalRule make_gliders(int v_minus, int v_plus) {
    if (v_minus >= v_plus) throw PreconditionError("gliders automaton needs v_minus < v_plus");
    std::vector<int> offsets;
    for (int o = -v_plus; o <= -v_minus; ++o) offsets.push_back(o);
    const int m = static_cast<int>(offsets.size());
    return LocalRule::tabulate(3, 3, offsets, [m](std::span<const Symbol> v) {
        // v[0] is x_{-v+}, v[m-1] is x_{-v-}.
        if (glider_value(v[0]) == 1) {
            int s = 0;
            bool ok = true;
            for (int i = 1; i < m && ok; ++i) ok = (s += glider_value(v[static_cast<std::size_t>(i)])) >= 0;
            if (ok) return 1;
        }
        if (glider_value(v[static_cast<std::size_t>(m - 1)]) == -1) {
            int s = 0;
            bool ok = true;
            for (int i = m - 2; i >= 0 && ok; --i) ok = (s += glider_value(v[static_cast<std::size_t>(i)])) <= 0;
            if (ok) return 2;
        }
        return 0;
    });
}

LocalRule make_one_sided_captive(int n, std::vector<Symbol> f) {
    if (f.size() != static_cast<std::size_t>(n * n)) throw PreconditionError("captive table must have n^2 entries");
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            Symbol v = f[static_cast<std::size_t>(a * n + b)];
            if (v != a && v != b) throw PreconditionError("captivity violated: f(a,b) must be a or b");
        }
    return LocalRule(n, n, {0, 1}, std::move(f));
}

std::vector<Symbol> random_captive_table(int n, Rng& rng) {
    std::vector<Symbol> f(static_cast<std::size_t>(n * n));
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            f[static_cast<std::size_t>(a * n + b)] = static_cast<Symbol>(a == b || rng.below(2) == 0 ? a : b);
    return f;
}

LocalRule make_random_walk_ca() {
    return LocalRule::tabulate(4, 4, {-2, -1, 0, 1, 2}, [](auto v) {
        auto a = [&](int i) { return v[static_cast<std::size_t>(i + 2)] & 1; };
        auto b = [&](int i) { return v[static_cast<std::size_t>(i + 2)] >> 1; };
        int top = (a(-2) + a(2)) & 1;
        int c = ((a(-1) == 0 && b(-1) == 1) || (a(0) == 1 && b(0) == 1)) ? 1 : 0;
        return top + 2 * c;
    });
}

PCASpec make_fates_pca(double p) {
    if (!(p >= 0 && p <= 1)) throw PreconditionError("probability must be in [0,1]");
    PCASpec pca{{make_elementary(184), make_elementary(232)}, IndependentLaw{{p, 1 - p}}};
    pca.validate();
    return pca;
}

MarkovLaw parry_law(const std::vector<std::vector<int>>& adj) {
    const std::size_t k = adj.size();
    auto power = [&](bool left) {
        std::vector<double> v(k, 1.0), w(k);
        double lambda = 0;
        for (int it = 0; it < 100000; ++it) {
            std::fill(w.begin(), w.end(), 0.0);
            for (std::size_t i = 0; i < k; ++i)
                for (std::size_t j = 0; j < k; ++j) {
                    if (left)
                        w[j] += v[i] * adj[i][j];
                    else
                        w[i] += adj[i][j] * v[j];
                }
            double norm = std::accumulate(w.begin(), w.end(), 0.0);
            double diff = 0;
            for (std::size_t i = 0; i < k; ++i) {
                w[i] /= norm;
                diff = std::max(diff, std::abs(w[i] - v[i]));
            }
            v.swap(w);
            lambda = norm;
            if (diff < 1e-15) break;
        }
        return std::pair{v, lambda};
    };
    auto [r, lambda] = power(false);
    auto [l, lambda2] = power(true);
    (void)lambda2;
    MarkovLaw law;
    law.matrix.assign(k * k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        double row = 0;
        for (std::size_t j = 0; j < k; ++j) row += law.matrix[i * k + j] = adj[i][j] * r[j] / (lambda * r[i]);
        for (std::size_t j = 0; j < k; ++j) law.matrix[i * k + j] /= row;
    }
    law.stationary.resize(k);
    double s = 0;
    for (std::size_t i = 0; i < k; ++i) s += law.stationary[i] = l[i] * r[i];
    for (auto& v : law.stationary) v /= s;
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
            if (!adj[i][j]) law.forbidden.emplace_back(static_cast<int>(i), static_cast<int>(j));
    return law;
}

PCASpec make_line_pca() {
    auto alternating = [](std::span<const Symbol> v) {
        return (v[0] == 0 && v[1] == 1 && v[2] == 0 && v[3] == 1) || (v[0] == 1 && v[1] == 0 && v[2] == 1 && v[3] == 0);
    };
    // both rules keep x_0 on alternating windows
    LocalRule f1 = LocalRule::tabulate(2, 2, {-1, 0, 1, 2}, [&](auto v) { return alternating(v) ? v[1] : v[2]; });
    LocalRule fm1 = LocalRule::tabulate(2, 2, {-2, -1, 0, 1}, [&](auto v) { return alternating(v) ? v[2] : v[1]; });
    // Rule indices: 0 = f0, 1 = f1, 2 = f-1. Allowed pairs: f0f0, f0f1, f1f-1, f-1f0.
    MarkovLaw law = parry_law({{1, 1, 0}, {0, 0, 1}, {1, 0, 0}});
    PCASpec pca{{make_identity(2), std::move(f1), std::move(fm1)}, std::move(law)};
    pca.validate();
    return pca;
}

}  // namespace partlab
