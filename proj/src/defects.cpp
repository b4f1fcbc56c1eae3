#include "partlab/defects.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <set>
#include <sstream>

#include "partlab/error.hpp"

namespace partlab {

namespace {

std::size_t code_of(std::span<const Symbol> u, int n) {
    std::size_t code = 0;
    for (Symbol s : u) code = code * static_cast<std::size_t>(n) + s;
    return code;
}

Word word_of(std::size_t code, int len, int n) {
    Word w(static_cast<std::size_t>(len));
    for (int i = len - 1; i >= 0; --i) {
        w[static_cast<std::size_t>(i)] = static_cast<Symbol>(code % static_cast<std::size_t>(n));
        code /= static_cast<std::size_t>(n);
    }
    return w;
}

std::size_t checked_power(int n, int len, std::size_t cap) {
    std::size_t total = 1;
    for (int i = 0; i < len; ++i) {
        total *= static_cast<std::size_t>(n);
        if (total > cap) throw FeasibilityError("too many words of length " + std::to_string(len));
    }
    return total;
}

// Keeps the vertices from which an infinite path leaves along `adj`.
std::vector<bool> prune(const std::vector<std::vector<std::size_t>>& adj) {
    const std::size_t n = adj.size();
    std::vector<std::vector<std::size_t>> rev(n);
    std::vector<std::size_t> outdeg(n);
    for (std::size_t v = 0; v < n; ++v) {
        outdeg[v] = adj[v].size();
        for (auto w : adj[v]) rev[w].push_back(v);
    }
    std::vector<bool> alive(n, true);
    std::vector<std::size_t> stack;
    for (std::size_t v = 0; v < n; ++v)
        if (outdeg[v] == 0) stack.push_back(v);
    while (!stack.empty()) {
        auto v = stack.back();
        stack.pop_back();
        if (!alive[v]) continue;
        alive[v] = false;
        for (auto u : rev[v])
            if (alive[u] && --outdeg[u] == 0) stack.push_back(u);
    }
    return alive;
}

}  // namespace

SFTSpec::SFTSpec(int alphabet, std::vector<Word> forbidden) : alphabet_(alphabet), forbidden_(std::move(forbidden)) {
    if (alphabet_ < 1 || alphabet_ > 255) throw PreconditionError("alphabet size out of range");
    for (const auto& f : forbidden_) {
        if (f.empty()) throw PreconditionError("empty forbidden word");
        for (Symbol s : f)
            if (s >= alphabet_) throw PreconditionError("forbidden word uses a symbol outside the alphabet");
        order_ = std::max(order_, static_cast<int>(f.size()));
    }
    const int m = order_ - 1;
    const std::size_t total = checked_power(alphabet_, m, 1u << 22);
    std::vector<std::size_t> index(total, npos);
    for (std::size_t code = 0; code < total; ++code) {
        Word w = word_of(code, m, alphabet_);
        if (avoids(w)) {
            index[code] = vertices_.size();
            vertices_.push_back(std::move(w));
        }
    }
    succ_.resize(vertices_.size());
    for (std::size_t v = 0; v < vertices_.size(); ++v) {
        Word ext = vertices_[v];
        ext.push_back(0);
        for (int s = 0; s < alphabet_; ++s) {
            ext.back() = static_cast<Symbol>(s);
            if (!avoids(ext)) continue;
            auto w = index[code_of(std::span<const Symbol>(ext).subspan(1), alphabet_)];
            if (w != npos) succ_[v].push_back(w);
        }
    }
    fwd_ = prune(succ_);
    std::vector<std::vector<std::size_t>> pred(vertices_.size());
    for (std::size_t v = 0; v < vertices_.size(); ++v)
        for (auto w : succ_[v]) pred[w].push_back(v);
    bwd_ = prune(pred);
}

bool SFTSpec::avoids(std::span<const Symbol> u) const {
    for (const auto& f : forbidden_) {
        if (f.size() > u.size()) continue;
        if (std::search(u.begin(), u.end(), f.begin(), f.end()) != u.end()) return false;
    }
    return true;
}

std::size_t SFTSpec::vertex_of(std::span<const Symbol> block) const {
    if (static_cast<int>(block.size()) != order_ - 1) return npos;
    auto it = std::lower_bound(vertices_.begin(), vertices_.end(), block,
                               [](const Word& a, std::span<const Symbol> b) {
                                   return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
                               });
    if (it == vertices_.end() || !std::equal(it->begin(), it->end(), block.begin(), block.end())) return npos;
    return static_cast<std::size_t>(it - vertices_.begin());
}

bool SFTSpec::nonempty() const {
    for (std::size_t v = 0; v < vertices_.size(); ++v)
        if (essential(v)) return true;
    return false;
}

bool SFTSpec::admissible(std::span<const Symbol> u) const {
    const std::size_t m = static_cast<std::size_t>(order_ - 1);
    if (u.size() < m) {
        for (std::size_t v = 0; v < vertices_.size(); ++v)
            if (essential(v) && std::equal(u.begin(), u.end(), vertices_[v].begin())) return true;
        return false;
    }
    if (!avoids(u)) return false;
    auto first = vertex_of(u.first(m));
    auto last = vertex_of(u.last(m));
    return first != npos && last != npos && bwd_[first] && fwd_[last];
}

std::vector<Word> SFTSpec::words(int len) const {
    const std::size_t total = checked_power(alphabet_, len, 1u << 22);
    std::vector<Word> out;
    for (std::size_t code = 0; code < total; ++code) {
        Word w = word_of(code, len, alphabet_);
        if (admissible(w)) out.push_back(std::move(w));
    }
    return out;
}

SFTSpec full_shift(int alphabet) { return SFTSpec(alphabet, {}); }

SFTSpec monochrome(int alphabet, Symbol a) {
    std::vector<Word> f;
    for (int s = 0; s < alphabet; ++s)
        if (s != a) f.push_back({static_cast<Symbol>(s)});
    return SFTSpec(alphabet, std::move(f));
}

SFTSpec orbit_sft(int alphabet, const Word& u) {
    if (u.empty()) throw PreconditionError("empty period word");
    // words of length |u|+1 that are not factors of the periodic point
    const int len = static_cast<int>(u.size()) + 1;
    std::set<Word> factors;
    for (std::size_t i = 0; i < u.size(); ++i) {
        Word w;
        for (int j = 0; j < len; ++j) w.push_back(u[(i + static_cast<std::size_t>(j)) % u.size()]);
        factors.insert(w);
    }
    std::vector<Word> f;
    const std::size_t total = checked_power(alphabet, len, 1u << 20);
    for (std::size_t code = 0; code < total; ++code) {
        Word w = word_of(code, len, alphabet);
        if (!factors.count(w)) f.push_back(std::move(w));
    }
    return SFTSpec(alphabet, std::move(f));
}

SFTSpec checkerboard() { return SFTSpec(2, {{0, 0}, {1, 1}}); }

PeriodData compute_period(const SFTSpec& sft) {
    const std::size_t n = sft.vertex_count();
    std::size_t base = SFTSpec::npos;
    for (std::size_t v = 0; v < n; ++v)
        if (sft.essential(v)) {
            base = v;
            break;
        }
    if (base == SFTSpec::npos) throw PreconditionError("empty subshift has no period");

    std::vector<long> dist(n, -1);
    std::deque<std::size_t> queue{base};
    dist[base] = 0;
    while (!queue.empty()) {
        auto v = queue.front();
        queue.pop_front();
        for (auto w : sft.successors(v))
            if (sft.essential(w) && dist[w] < 0) {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
    }
    long g = 0;
    for (std::size_t v = 0; v < n; ++v) {
        if (!sft.essential(v)) continue;
        if (dist[v] < 0) throw PreconditionError("subshift is not transitive");
        for (auto w : sft.successors(v))
            if (sft.essential(w)) g = std::gcd(g, std::abs(dist[v] + 1 - dist[w]));
    }
    // every essential vertex reached forward; check the reverse direction too
    std::vector<bool> back(n, false);
    back[base] = true;
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t v = 0; v < n; ++v) {
            if (back[v] || !sft.essential(v)) continue;
            for (auto w : sft.successors(v))
                if (back[w]) {
                    back[v] = changed = true;
                    break;
                }
        }
    }
    for (std::size_t v = 0; v < n; ++v)
        if (sft.essential(v) && !back[v]) throw PreconditionError("subshift is not transitive");

    PeriodData d;
    d.period = static_cast<int>(g == 0 ? 1 : g);
    d.phase.assign(n, -1);
    for (std::size_t v = 0; v < n; ++v)
        if (sft.essential(v)) d.phase[v] = static_cast<int>((1 + dist[v]) % d.period);
    return d;
}

PeriodData shift_phases(PeriodData d, int shift) {
    for (auto& p : d.phase)
        if (p >= 0) p = ((p + shift) % d.period + d.period) % d.period;
    return d;
}

bool partition_consistent(const SFTSpec& sft, const PeriodData& d) {
    for (std::size_t v = 0; v < sft.vertex_count(); ++v) {
        if (!sft.essential(v)) continue;
        for (auto w : sft.successors(v))
            if (sft.essential(w) && d.phase[w] != (d.phase[v] + 1) % d.period) return false;
    }
    return true;
}

Decomposition make_decomposition(std::vector<SFTSpec> domains, int max_alpha) {
    if (domains.empty()) throw PreconditionError("decomposition needs at least one domain");
    for (const auto& s : domains) {
        if (s.alphabet() != domains.front().alphabet()) throw PreconditionError("domains use different alphabets");
        if (!s.nonempty()) throw PreconditionError("empty domain");
    }
    for (int alpha = 1; alpha <= max_alpha; ++alpha) {
        std::vector<std::set<Word>> langs;
        for (const auto& s : domains) {
            auto w = s.words(alpha);
            langs.emplace_back(w.begin(), w.end());
        }
        bool disjoint = true;
        for (std::size_t i = 0; i < langs.size() && disjoint; ++i)
            for (std::size_t j = i + 1; j < langs.size() && disjoint; ++j)
                for (const auto& w : langs[i])
                    if (langs[j].count(w)) {
                        disjoint = false;
                        break;
                    }
        if (disjoint) return Decomposition{std::move(domains), alpha};
    }
    throw PreconditionError("domain languages overlap up to length " + std::to_string(max_alpha));
}

namespace {

// Membership of exact-region windows in the language of one SFT, O(1) per query.
class WindowOracle {
public:
    WindowOracle(const SFTSpec& sft, std::span<const Symbol> x) : sft_(sft), x_(x), m_(sft.order() - 1) {
        const long n = static_cast<long>(x.size());
        min_start_.assign(static_cast<std::size_t>(n), 0);
        long bound = 0;
        for (long e = 0; e < n; ++e) {
            for (const auto& f : sft.forbidden()) {
                long s = e - static_cast<long>(f.size()) + 1;
                if (s >= 0 && std::equal(f.begin(), f.end(), x.begin() + s)) bound = std::max(bound, s + 1);
            }
            min_start_[static_cast<std::size_t>(e)] = bound;
        }
        left_ok_.assign(static_cast<std::size_t>(n), false);
        right_ok_.assign(static_cast<std::size_t>(n), false);
        for (long a = 0; a + m_ <= n; ++a) {
            auto v = sft.vertex_of(x.subspan(static_cast<std::size_t>(a), static_cast<std::size_t>(m_)));
            if (v == SFTSpec::npos) continue;
            left_ok_[static_cast<std::size_t>(a)] = sft.extends_left(v);
            right_ok_[static_cast<std::size_t>(a)] = sft.extends_right(v);
        }
    }

    // window [a, b] in exact-region indices
    bool contains(long a, long b) const {
        if (b < a) return sft_.nonempty();
        if (b - a + 1 < m_)
            return sft_.admissible(x_.subspan(static_cast<std::size_t>(a), static_cast<std::size_t>(b - a + 1)));
        if (a < min_start_[static_cast<std::size_t>(b)]) return false;
        return left_ok_[static_cast<std::size_t>(a)] && right_ok_[static_cast<std::size_t>(b - m_ + 1)];
    }

private:
    const SFTSpec& sft_;
    std::span<const Symbol> x_;
    long m_;
    std::vector<long> min_start_;
    std::vector<bool> left_ok_, right_ok_;
};

struct UnionOracle {
    std::vector<WindowOracle> parts;
    UnionOracle(std::span<const SFTSpec> sfts, std::span<const Symbol> x) {
        for (const auto& s : sfts) parts.emplace_back(s, x);
    }
    bool contains(long a, long b) const {
        return std::any_of(parts.begin(), parts.end(), [&](const WindowOracle& o) { return o.contains(a, b); });
    }
};

}  // namespace

DefectField defect_field(std::span<const SFTSpec> union_of, const Configuration& c) {
    if (union_of.empty()) throw PreconditionError("defect field needs at least one subshift");
    for (const auto& s : union_of)
        if (s.alphabet() != c.alphabet().size) throw PreconditionError("alphabet mismatch");
    auto x = c.exact_cells();
    const long n = static_cast<long>(x.size());
    UnionOracle oracle(union_of, x);
    DefectField f;
    f.origin = c.exact_lo();
    f.values.resize(static_cast<std::size_t>(n));
    f.saturated.resize(static_cast<std::size_t>(n));
    auto window = [](long k, long len) { return std::pair{k - (len + 1) / 2 + 1, k + len / 2}; };
    for (long k = 0; k < n; ++k) {
        // largest window length that stays inside the exact region
        long hi = 0;
        while (true) {
            auto [a, b] = window(k, hi + 1);
            if (a < 0 || b >= n) break;
            ++hi;
        }
        long lo = 0;  // predicate holds at lo
        if (oracle.contains(window(k, hi).first, window(k, hi).second)) {
            lo = hi;
        } else {
            long bad = hi;
            while (bad - lo > 1) {
                long mid = (lo + bad) / 2;
                auto [a, b] = window(k, mid);
                (oracle.contains(a, b) ? lo : bad) = mid;
            }
        }
        f.values[static_cast<std::size_t>(k)] = static_cast<int>(lo);
        f.saturated[static_cast<std::size_t>(k)] = lo == hi;
    }
    return f;
}

DefectField defect_field(const SFTSpec& sft, const Configuration& c) {
    return defect_field(std::span<const SFTSpec>(&sft, 1), c);
}

std::vector<long> defect_positions(const DefectField& f) {
    std::vector<long> out;
    for (std::size_t i = 1; i + 1 < f.values.size(); ++i) {
        if (f.saturated[i]) continue;
        if (f.values[i] <= f.values[i - 1] && f.values[i] <= f.values[i + 1])
            out.push_back(f.origin + static_cast<long>(i));
    }
    return out;
}

std::string DefectReading::csv() const {
    std::ostringstream out;
    out << "position,left,right\n";
    for (std::size_t i = 0; i < positions.size(); ++i) out << positions[i] << ',' << left[i] << ',' << right[i] << '\n';
    return out.str();
}

namespace {

int domain_of(const Decomposition& d, std::span<const Symbol> u) {
    for (std::size_t i = 0; i < d.domains.size(); ++i)
        if (d.domains[i].admissible(u)) return static_cast<int>(i);
    return 0;
}

bool in_union(const Decomposition& d, std::span<const Symbol> u) {
    return std::any_of(d.domains.begin(), d.domains.end(), [&](const SFTSpec& s) { return s.admissible(u); });
}

}  // namespace

DefectReading classify_interfaces(const Decomposition& d, const Configuration& c) {
    auto f = defect_field(d.domains, c);
    auto x = c.exact_cells();
    const long lo = c.exact_lo(), hi = c.exact_hi();
    DefectReading r;
    for (long k : defect_positions(f)) {
        auto slice = [&](long a, long b) {
            return x.subspan(static_cast<std::size_t>(a - lo), static_cast<std::size_t>(b - a + 1));
        };
        long m1 = 0;
        for (long m = std::min<long>(d.alpha, k - lo); m > 0; --m)
            if (in_union(d, slice(k - m, k))) {
                m1 = m;
                break;
            }
        long m2 = 0;
        for (long m = std::min<long>(d.alpha, hi - k); m > 0; --m)
            if (in_union(d, slice(k + 1, k + m))) {
                m2 = m;
                break;
            }
        r.positions.push_back(k);
        r.left.push_back(domain_of(d, slice(k - m1, k)));
        r.right.push_back(m2 > 0 ? domain_of(d, slice(k + 1, k + m2)) : 0);
    }
    return r;
}

DefectReading classify_dislocations(const SFTSpec& sft, const PeriodData& period, const Configuration& c) {
    if (static_cast<std::size_t>(sft.vertex_count()) != period.phase.size())
        throw PreconditionError("period data does not match the subshift");
    auto f = defect_field(sft, c);
    const long m = sft.order() - 1;
    const int P = period.period;
    auto phase_at = [&](long a, long j) {
        // phase of the region through the block starting at a, read at j
        if (a < c.exact_lo() || a + m - 1 > c.exact_hi()) return 0;
        auto block = c.exact_cells().subspan(static_cast<std::size_t>(a - c.exact_lo()), static_cast<std::size_t>(m));
        auto v = sft.vertex_of(block);
        if (v == SFTSpec::npos || period.phase[v] < 0) return 0;
        long p = (period.phase[v] - a + j) % P;
        return static_cast<int>(p < 0 ? p + P : p);
    };
    DefectReading r;
    for (long j : defect_positions(f)) {
        r.positions.push_back(j);
        r.left.push_back(phase_at(j - m + 1, j));
        r.right.push_back(phase_at(j + 1, j));
    }
    return r;
}

}  // namespace partlab
