#include "partlab/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "partlab/error.hpp"
#include "partlab/parallel.hpp"

namespace partlab {

namespace {

void check_vector(std::span<const double> p, const char* what) {
    double s = 0;
    for (double v : p) {
        if (!(v >= 0)) throw PreconditionError(std::string(what) + ": negative probability");
        s += v;
    }
    if (std::abs(s - 1.0) > 1e-12) throw PreconditionError(std::string(what) + ": probabilities do not sum to 1");
}

std::size_t ipow(std::size_t b, int e) {
    std::size_t r = 1;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
}

}  // namespace

MeasureSpec::MeasureSpec(Bernoulli b) : v_(std::move(b)) { validate(); }
MeasureSpec::MeasureSpec(Markov m) : v_(std::move(m)) { validate(); }
MeasureSpec::MeasureSpec(PeriodicDirac d) : v_(std::move(d)) { validate(); }
MeasureSpec::MeasureSpec(Product p) : v_(std::move(p)) { validate(); }

void MeasureSpec::validate() {
    if (auto* b = std::get_if<Bernoulli>(&v_)) {
        if (b->p.empty()) throw PreconditionError("Bernoulli measure needs probabilities");
        check_vector(b->p, "Bernoulli");
        alphabet_ = static_cast<int>(b->p.size());
    } else if (auto* m = std::get_if<Markov>(&v_)) {
        if (m->order < 1 || m->alphabet < 1) throw PreconditionError("Markov order and alphabet must be positive");
        const std::size_t n = static_cast<std::size_t>(m->alphabet), ctx = ipow(n, m->order);
        if (m->matrix.size() != ctx * n || m->stationary.size() != ctx)
            throw PreconditionError("Markov measure has wrong shape");
        for (std::size_t c = 0; c < ctx; ++c)
            check_vector(std::span<const double>(m->matrix).subspan(c * n, n), "Markov row");
        check_vector(m->stationary, "Markov stationary vector");
        std::vector<double> next(ctx, 0.0);
        for (std::size_t c = 0; c < ctx; ++c)
            for (std::size_t a = 0; a < n; ++a) next[(c * n + a) % ctx] += m->stationary[c] * m->matrix[c * n + a];
        for (std::size_t c = 0; c < ctx; ++c)
            if (std::abs(next[c] - m->stationary[c]) > 1e-12)
                throw PreconditionError("Markov stationary vector is not stationary");
        alphabet_ = m->alphabet;
    } else if (auto* d = std::get_if<PeriodicDirac>(&v_)) {
        if (d->word.empty()) throw PreconditionError("periodic word is empty");
        for (Symbol s : d->word)
            if (s >= d->alphabet) throw PreconditionError("periodic word outside alphabet");
        alphabet_ = d->alphabet;
    } else {
        auto& p = std::get<Product>(v_);
        if (p.layers.empty()) throw PreconditionError("product measure needs layers");
        long size = 1;
        for (const auto& l : p.layers) size *= l.alphabet_size();
        if (size > 256) throw PreconditionError("product alphabet too large");
        alphabet_ = static_cast<int>(size);
    }
}

double MeasureSpec::cylinder(std::span<const Symbol> u) const {
    for (Symbol s : u)
        if (s >= alphabet_) return 0.0;
    if (u.empty()) return 1.0;
    if (const auto* b = std::get_if<Bernoulli>(&v_)) {
        double r = 1;
        for (Symbol s : u) r *= b->p[s];
        return r;
    }
    if (const auto* m = std::get_if<Markov>(&v_)) {
        const std::size_t n = static_cast<std::size_t>(m->alphabet), k = static_cast<std::size_t>(m->order);
        const std::size_t ctx = ipow(n, m->order);
        if (u.size() < k) {
            // sum over contexts with prefix u
            std::size_t pre = word_index(u, m->alphabet), span = ipow(n, static_cast<int>(k - u.size()));
            double r = 0;
            for (std::size_t c = pre * span; c < (pre + 1) * span; ++c) r += m->stationary[c];
            return r;
        }
        std::size_t c = word_index(u.first(k), m->alphabet);
        double r = m->stationary[c];
        for (std::size_t i = k; i < u.size() && r > 0; ++i) {
            r *= m->matrix[c * n + u[i]];
            c = (c * n + u[i]) % ctx;
        }
        return r;
    }
    if (const auto* d = std::get_if<PeriodicDirac>(&v_)) {
        const std::size_t p = d->word.size();
        long hits = 0;
        for (std::size_t ph = 0; ph < p; ++ph) {
            bool ok = true;
            for (std::size_t i = 0; i < u.size() && ok; ++i) ok = d->word[(ph + i) % p] == u[i];
            hits += ok;
        }
        return static_cast<double>(hits) / static_cast<double>(p);
    }
    const auto& p = std::get<Product>(v_);
    double r = 1;
    int radix = 1;
    Word layer(u.size());
    for (const auto& l : p.layers) {
        for (std::size_t i = 0; i < u.size(); ++i) layer[i] = static_cast<Symbol>((u[i] / radix) % l.alphabet_size());
        r *= l.cylinder(layer);
        radix *= l.alphabet_size();
    }
    return r;
}

Word MeasureSpec::sample(std::size_t len, Rng& rng) const {
    Word w(len);
    if (const auto* b = std::get_if<Bernoulli>(&v_)) {
        if (b->p.size() == 2) {
            const double p0 = b->p[0];
            for (auto& s : w) s = rng.uniform() < p0 ? 0 : 1;
        } else {
            for (auto& s : w) s = static_cast<Symbol>(rng.pick(b->p));
        }
    } else if (const auto* m = std::get_if<Markov>(&v_)) {
        const std::size_t n = static_cast<std::size_t>(m->alphabet), k = static_cast<std::size_t>(m->order);
        const std::size_t ctx = ipow(n, m->order);
        std::size_t c = rng.pick(m->stationary);
        Word first = word_at(c, k, m->alphabet);
        for (std::size_t i = 0; i < len; ++i) {
            if (i < k) {
                w[i] = first[i];
                continue;
            }
            Symbol a = static_cast<Symbol>(rng.pick(std::span<const double>(m->matrix).subspan(c * n, n)));
            w[i] = a;
            c = (c * n + a) % ctx;
        }
    } else if (const auto* d = std::get_if<PeriodicDirac>(&v_)) {
        const std::size_t p = d->word.size(), ph = rng.below(p);
        for (std::size_t i = 0; i < len; ++i) w[i] = d->word[(ph + i) % p];
    } else {
        const auto& p = std::get<Product>(v_);
        int radix = 1;
        for (std::size_t li = 0; li < p.layers.size(); ++li) {
            Rng sub = rng.split(li);
            Word layer = p.layers[li].sample(len, sub);
            for (std::size_t i = 0; i < len; ++i) w[i] = static_cast<Symbol>(w[i] + radix * layer[i]);
            radix *= p.layers[li].alphabet_size();
        }
        rng.next();
    }
    return w;
}

std::string MeasureSpec::describe() const {
    std::ostringstream os;
    if (const auto* b = std::get_if<Bernoulli>(&v_)) {
        os << "bernoulli(";
        for (std::size_t i = 0; i < b->p.size(); ++i) os << (i ? "," : "") << b->p[i];
        os << ')';
    } else if (const auto* m = std::get_if<Markov>(&v_)) {
        os << "markov(order=" << m->order << ",n=" << m->alphabet << ')';
    } else if (const auto* d = std::get_if<PeriodicDirac>(&v_)) {
        os << "periodic(" << format_word(d->word) << ')';
    } else {
        os << "product(";
        const auto& p = std::get<Product>(v_);
        for (std::size_t i = 0; i < p.layers.size(); ++i) os << (i ? "," : "") << p.layers[i].describe();
        os << ')';
    }
    return os.str();
}

MeasureSpec uniform_bernoulli(int n) {
    if (n < 1) throw PreconditionError("alphabet size must be positive");
    return Bernoulli{std::vector<double>(static_cast<std::size_t>(n), 1.0 / n)};
}

MeasureSpec symmetric_markov(double p) {
    if (!(p >= 0 && p <= 1)) throw PreconditionError("probability must be in [0,1]");
    return Markov{1, 2, {p, 1 - p, 1 - p, p}, {0.5, 0.5}};
}

MixTag mix_tag(const MeasureSpec& m, bool user_asserted) {
    if (const auto* b = std::get_if<Bernoulli>(&m.variant()); b && b->p.size() == 3) {
        if (b->p[1] > 0 && b->p[1] == b->p[2]) return {true, "Bernoulli with equal +1/-1 weights"};
        return {false, "Bernoulli with unequal +1/-1 weights"};
    }
    if (user_asserted) return {true, "asserted by user"};
    return {false, "not recognised; mixing and positive variance must be asserted"};
}

Configuration window_sample(const MeasureSpec& m, std::size_t n_cells, std::size_t left, std::size_t right, Rng& rng) {
    if (n_cells < 1) throw PreconditionError("window needs at least one cell");
    Word w = m.sample(n_cells + left + right, rng);
    return Configuration(Alphabet::of(m.alphabet_size()), std::move(w), -static_cast<long>(left));
}

Configuration window_sample(const MeasureSpec& m, std::size_t n_cells, std::size_t margin, std::uint64_t seed) {
    Rng rng(seed);
    return window_sample(m, n_cells, margin, margin, rng);
}

Configuration sample_for_steps(const MeasureSpec& m, const Dynamics& dyn, std::size_t exact, int t, Rng& rng,
                               std::size_t extra) {
    if (m.alphabet_size() != dyn.alphabet_size()) throw PreconditionError("measure and rule alphabets differ");
    std::size_t left = static_cast<std::size_t>(std::max(0, -dyn.min_offset())) * static_cast<std::size_t>(t);
    std::size_t right = static_cast<std::size_t>(std::max(0, dyn.max_offset())) * static_cast<std::size_t>(t);
    return window_sample(m, exact + extra, left, right, rng);
}

// ---------------------------------------------------------------------------

std::size_t word_index(std::span<const Symbol> u, int alphabet) {
    std::size_t idx = 0;
    for (Symbol s : u) idx = idx * static_cast<std::size_t>(alphabet) + s;
    return idx;
}

Word word_at(std::size_t index, std::size_t len, int alphabet) {
    Word w(len);
    for (std::size_t j = len; j-- > 0;) {
        w[j] = static_cast<Symbol>(index % static_cast<std::size_t>(alphabet));
        index /= static_cast<std::size_t>(alphabet);
    }
    return w;
}

double Valuation::at(std::span<const Symbol> u) const {
    if (static_cast<int>(u.size()) > max_len) throw PreconditionError("word longer than valuation");
    return values[u.size()][word_index(u, alphabet)];
}

Valuation exact_cylinders(const MeasureSpec& m, int max_len) {
    if (max_len < 0) throw PreconditionError("negative length");
    Valuation v{m.alphabet_size(), max_len, {}};
    for (int n = 0; n <= max_len; ++n) {
        const std::size_t count = ipow(static_cast<std::size_t>(v.alphabet), n);
        if (count > (1u << 24)) throw FeasibilityError("too many cylinders");
        std::vector<double> row(count);
        for (std::size_t i = 0; i < count; ++i)
            row[i] = m.cylinder(word_at(i, static_cast<std::size_t>(n), v.alphabet));
        v.values.push_back(std::move(row));
    }
    return v;
}

EmpiricalCylinders::EmpiricalCylinders(int alphabet, int max_len)
    : alphabet_(alphabet), max_len_(max_len), totals_(static_cast<std::size_t>(max_len) + 1, 0) {
    if (alphabet < 1 || max_len < 0) throw PreconditionError("bad cylinder table shape");
    for (int n = 0; n <= max_len; ++n) {
        const std::size_t count = ipow(static_cast<std::size_t>(alphabet), n);
        if (count > (1u << 24)) throw FeasibilityError("too many cylinders");
        counts_.emplace_back(count, 0);
    }
}

void EmpiricalCylinders::add(const Configuration& c) {
    if (c.alphabet().size != alphabet_) throw PreconditionError("alphabet mismatch");
    auto cells = c.exact_cells();
    const std::size_t n = static_cast<std::size_t>(alphabet_);
    for (int len = 0; len <= max_len_; ++len) {
        if (cells.size() < static_cast<std::size_t>(len)) break;
        const std::size_t positions = cells.size() - static_cast<std::size_t>(len) + 1;
        auto& row = counts_[static_cast<std::size_t>(len)];
        totals_[static_cast<std::size_t>(len)] += static_cast<long>(positions);
        if (len == 0) {
            row[0] += static_cast<long>(positions);
            continue;
        }
        const std::size_t top = ipow(n, len - 1);
        std::size_t idx = word_index(cells.first(static_cast<std::size_t>(len)), alphabet_);
        ++row[idx];
        for (std::size_t i = 1; i < positions; ++i) {
            idx = (idx % top) * n + cells[i + static_cast<std::size_t>(len) - 1];
            ++row[idx];
        }
    }
    ++trajectories_;
}

void EmpiricalCylinders::merge(const EmpiricalCylinders& o) {
    if (o.alphabet_ != alphabet_ || o.max_len_ != max_len_) throw PreconditionError("cylinder tables differ in shape");
    for (std::size_t n = 0; n < counts_.size(); ++n) {
        totals_[n] += o.totals_[n];
        for (std::size_t i = 0; i < counts_[n].size(); ++i) counts_[n][i] += o.counts_[n][i];
    }
    trajectories_ += o.trajectories_;
}

long EmpiricalCylinders::count(std::span<const Symbol> u) const {
    if (static_cast<int>(u.size()) > max_len_) throw PreconditionError("word longer than table");
    return counts_[u.size()][word_index(u, alphabet_)];
}

double EmpiricalCylinders::freq(std::span<const Symbol> u) const {
    long t = totals_[u.size()];
    return t ? static_cast<double>(count(u)) / static_cast<double>(t) : 0.0;
}

double EmpiricalCylinders::half_width(std::span<const Symbol> u) const {
    long t = totals_[u.size()];
    if (!t) return 1.0;
    double p = freq(u);
    return 2.0 * std::sqrt(std::max(p * (1 - p), 1.0 / static_cast<double>(t)) / static_cast<double>(t));
}

Valuation EmpiricalCylinders::valuation() const {
    Valuation v{alphabet_, max_len_, {}};
    for (std::size_t n = 0; n < counts_.size(); ++n) {
        std::vector<double> row(counts_[n].size(), 0.0);
        if (totals_[n])
            for (std::size_t i = 0; i < row.size(); ++i)
                row[i] = static_cast<double>(counts_[n][i]) / static_cast<double>(totals_[n]);
        v.values.push_back(std::move(row));
    }
    return v;
}

std::string EmpiricalCylinders::csv() const {
    std::ostringstream os;
    os.precision(10);
    os << "word,length,count,freq,half_width\n";
    for (int n = 1; n <= max_len_; ++n)
        for (std::size_t i = 0; i < counts_[static_cast<std::size_t>(n)].size(); ++i) {
            Word w = word_at(i, static_cast<std::size_t>(n), alphabet_);
            os << format_word(w) << ',' << n << ',' << count(w) << ',' << freq(w) << ',' << half_width(w) << '\n';
        }
    return os.str();
}

EmpiricalCylinders estimate_cylinders(const Dynamics& dyn, const MeasureSpec& m, int t, int max_len,
                                      const SamplingPlan& plan) {
    if (t < 0 || max_len < 0 || plan.cells < static_cast<std::size_t>(std::max(1, max_len)))
        throw FeasibilityError("window too small for the requested cylinders");
    std::vector<EmpiricalCylinders> parts(plan.trajectories, EmpiricalCylinders(m.alphabet_size(), max_len));
    const Rng master(plan.seed);
    parallel_for(plan.trajectories, plan.threads, [&](std::size_t j) {
        Rng rng = master.split(j);
        Configuration c = sample_for_steps(m, dyn, plan.cells, t, rng);
        c = iterate(dyn, std::move(c), t, rng);
        parts[j].add(c);
    });
    EmpiricalCylinders total(m.alphabet_size(), max_len);
    for (const auto& p : parts) total.merge(p);
    return total;
}

double dm_distance(const Valuation& a, const Valuation& b, int max_len) {
    if (a.max_len < max_len || b.max_len < max_len || a.alphabet != b.alphabet)
        throw PreconditionError("valuations do not cover the requested length");
    double d = 0, w = 0.5;
    for (int n = 1; n <= max_len; ++n, w *= 0.5) {
        double worst = 0;
        const auto& x = a.values[static_cast<std::size_t>(n)];
        const auto& y = b.values[static_cast<std::size_t>(n)];
        for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(x[i] - y[i]));
        d += w * worst;
    }
    return d;
}

// ---------------------------------------------------------------------------

LazyLine::LazyLine(const MeasureSpec& m, Rng rng) : m_(&m), rng_(rng), n_(m.alphabet_size()) {
    if (const auto* b = std::get_if<Bernoulli>(&m.variant())) {
        threshold_binary_ = b->p.size() == 2;
        p0_ = b->p[0];
    } else if (const auto* mk = std::get_if<Markov>(&m.variant())) {
        const std::size_t n = static_cast<std::size_t>(mk->alphabet);
        k_pow_ = ipow(n, mk->order);
        std::size_t c = rng_.pick(mk->stationary);
        ctx_right_ = ctx_left_ = c;
        Word first = word_at(c, static_cast<std::size_t>(mk->order), mk->alphabet);
        pending_right_.assign(first.rbegin(), first.rend());  // popped from the back
        // P(b | following context c) = pi(b c') P(b c' -> last of c) / pi(c), c' = c without last symbol.
        reverse_.assign(k_pow_ * n, 0.0);
        const std::size_t top = k_pow_ / n;
        for (std::size_t ctx = 0; ctx < k_pow_; ++ctx) {
            if (mk->stationary[ctx] <= 0) continue;
            std::size_t head = ctx / n, last = ctx % n;
            for (std::size_t b = 0; b < n; ++b) {
                std::size_t prev = b * top + head;
                reverse_[ctx * n + b] = mk->stationary[prev] * mk->matrix[prev * n + last] / mk->stationary[ctx];
            }
        }
    } else if (const auto* d = std::get_if<PeriodicDirac>(&m.variant())) {
        phase_ = rng_.below(d->word.size());
    } else {
        throw PreconditionError("lazy sampling of product measures is not supported");
    }
}

Symbol LazyLine::right() {
    const auto& v = m_->variant();
    if (const auto* b = std::get_if<Bernoulli>(&v)) {
        ++r_;
        if (threshold_binary_) return rng_.uniform() < p0_ ? 0 : 1;
        return static_cast<Symbol>(rng_.pick(b->p));
    }
    if (const auto* d = std::get_if<PeriodicDirac>(&v)) {
        const long p = static_cast<long>(d->word.size());
        return d->word[static_cast<std::size_t>(((static_cast<long>(phase_) + r_++) % p + p) % p)];
    }
    const auto& mk = std::get<Markov>(v);
    ++r_;
    if (!pending_right_.empty()) {
        Symbol s = pending_right_.back();
        pending_right_.pop_back();
        return s;
    }
    const std::size_t n = static_cast<std::size_t>(mk.alphabet);
    Symbol a = static_cast<Symbol>(rng_.pick(std::span<const double>(mk.matrix).subspan(ctx_right_ * n, n)));
    ctx_right_ = (ctx_right_ * n + a) % k_pow_;
    return a;
}

Symbol LazyLine::left() {
    const auto& v = m_->variant();
    if (const auto* b = std::get_if<Bernoulli>(&v)) {
        --l_;
        if (threshold_binary_) return rng_.uniform() < p0_ ? 0 : 1;
        return static_cast<Symbol>(rng_.pick(b->p));
    }
    if (const auto* d = std::get_if<PeriodicDirac>(&v)) {
        const long p = static_cast<long>(d->word.size());
        return d->word[static_cast<std::size_t>(((static_cast<long>(phase_) + --l_) % p + p) % p)];
    }
    const std::size_t n = static_cast<std::size_t>(std::get<Markov>(v).alphabet);
    --l_;
    Symbol b = static_cast<Symbol>(rng_.pick(std::span<const double>(reverse_).subspan(ctx_left_ * n, n)));
    ctx_left_ = b * (k_pow_ / n) + ctx_left_ / n;
    return b;
}

}  // namespace partlab
