#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "partlab/error.hpp"
#include "partlab/particles.hpp"

namespace partlab {

namespace {

Image single(int off) {
    Image i;
    i.push(off);
    return i;
}

// Interface particles p_ab, a != b, over an n-letter alphabet.
int pair_code(int n, int a, int b) { return 1 + a * (n - 1) + (b < a ? b : b - 1); }

std::pair<int, int> pair_of(int n, int code) {
    int c = code - 1, a = c / (n - 1), b = c % (n - 1);
    return {a, b >= a ? b + 1 : b};
}

std::vector<std::string> pair_names(int n) {
    std::vector<std::string> names;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            if (a != b) names.push_back("p" + std::to_string(a) + std::to_string(b));
    return names;
}

LocalRule pair_morphism(int n) {
    return LocalRule::tabulate(n, n * (n - 1) + 1, {0, 1},
                               [n](auto v) { return v[0] == v[1] ? 0 : pair_code(n, v[0], v[1]); });
}

}  // namespace

// --- traffic (#184) -------------------------------------------------------

namespace {

ParticleSystem traffic_base(std::string name) {
    ParticleSystem ps;
    ps.name = std::move(name);
    ps.particles = {"p01", "p10"};
    ps.morphism = LocalRule::tabulate(2, 3, {0, 1}, [](auto v) { return v[0] == v[1] ? 1 + v[0] : 0; });
    ps.radius = 1;
    ps.window = 2;
    return ps;
}

}  // namespace

ParticleSystem traffic_system() {
    ParticleSystem ps = traffic_base("traffic");
    // 00 drifts right, 11 drifts left, opposite pairs within two cells cancel
    ps.update = [](const PhiView& v) {
        if (v.p(0) == 1) return (v.p(1) != 2 && v.p(2) != 2) ? single(1) : Image{};
        return (v.p(-1) != 1 && v.p(-2) != 1) ? single(-1) : Image{};
    };
    ps.speed = {1, -1};
    return ps;
}

ParticleSystem traffic_system_sabotaged() {
    ParticleSystem ps = traffic_base("traffic-sabotaged");
    ps.update = [](const PhiView& v) {
        if (v.p(0) == 2) return (v.p(1) != 1 && v.p(2) != 1) ? single(1) : Image{};
        return (v.p(-1) != 2 && v.p(-2) != 2) ? single(-1) : Image{};
    };
    ps.speed = {-1, 1};
    return ps;
}

// --- n-cyclic ---------------------------------------------------------------

namespace {

enum class Flow { none, right, left, still };

ParticleSystem cyclic_base(int n, bool flipped) {
    if (n < 3) throw PreconditionError("cyclic system needs n >= 3");
    ParticleSystem ps;
    ps.name = std::string(flipped ? "cyclic-sabotaged-" : "cyclic-") + std::to_string(n);
    ps.particles = pair_names(n);
    ps.morphism = pair_morphism(n);
    ps.radius = 1;
    ps.window = 2;
    for (int code = 1; code <= n * (n - 1); ++code) {
        auto [a, b] = pair_of(n, code);
        int d = ((b - a) % n + n) % n;
        ps.speed.push_back(d == n - 1 ? 1 : (d == 1 ? -1 : 0));
    }
    ps.update = [n, flipped](const PhiView& v) {
        // d_j = x_{j+1} - x_j; cell j climbs when a neighbour is one above it
        auto diff = [&](int i) {
            Symbol p = v.p(i);
            if (!p) return 0;
            auto [a, b] = pair_of(n, p);
            return ((b - a) % n + n) % n;
        };
        auto kind = [&](int i) {
            int d = diff(i);
            if (d == 0) return Flow::none;
            if (d == n - 1) return Flow::right;
            if (d == 1) return Flow::left;
            return Flow::still;
        };
        auto climbs = [&](int j) { return kind(j - 1) == Flow::right || kind(j) == Flow::left ? 1 : 0; };
        int target = 0;
        switch (kind(0)) {
            case Flow::right: target = kind(1) == Flow::left ? 0 : 1; break;
            case Flow::left: target = kind(-1) == Flow::right ? 0 : -1; break;
            default: target = 0;
        }
        if (flipped) target = -target;
        int nd = ((diff(target) + climbs(target + 1) - climbs(target)) % n + n) % n;
        return nd ? single(target) : Image{};
    };
    return ps;
}

}  // namespace

ParticleSystem cyclic_system(int n) { return cyclic_base(n, false); }
ParticleSystem cyclic_system_sabotaged(int n) { return cyclic_base(n, true); }

// --- one-sided captive ------------------------------------------------------

ParticleSystem captive_system(int n, std::span<const Symbol> f) {
    if (f.size() != static_cast<std::size_t>(n * n)) throw PreconditionError("captive table must have n^2 entries");
    ParticleSystem ps;
    ps.name = "captive-" + std::to_string(n);
    ps.particles = pair_names(n);
    ps.morphism = pair_morphism(n);
    ps.radius = 1;
    ps.window = 1;
    std::vector<Symbol> table(f.begin(), f.end());
    for (int code = 1; code <= n * (n - 1); ++code) {
        auto [a, b] = pair_of(n, code);
        ps.speed.push_back(table[static_cast<std::size_t>(a * n + b)] == a ? 0 : -1);
    }
    ps.update = [n, table](const PhiView& v) {
        auto F = [&](int i) { return table[static_cast<std::size_t>(v.x(i) * n + v.x(i + 1))]; };
        int target = F(0) == v.x(0) ? 0 : -1;
        return F(target) != F(target + 1) ? single(target) : Image{};
    };
    return ps;
}

// --- random-walk automaton ---------------------------------------------------

ParticleSystem random_walk_system() {
    ParticleSystem ps;
    ps.name = "random-walk";
    ps.particles = {"p"};
    ps.morphism = LocalRule::tabulate(4, 2, {0}, [](auto v) { return v[0] >> 1; });
    ps.radius = 1;
    ps.window = 0;
    ps.speed = {std::nullopt};
    ps.update = [](const PhiView& v) { return single((v.x(0) & 1) ? 0 : 1); };
    return ps;
}

// --- gliders ------------------------------------------------------------------

namespace {

ParticleSystem gliders_base(const LocalRule& ga, int v_minus, int v_plus, bool sabotaged) {
    ParticleSystem ps;
    ps.name = "gliders(" + std::to_string(v_minus) + "," + std::to_string(v_plus) + ")" + (sabotaged ? "-sabotaged" : "");
    ps.particles = {"+1", "-1"};
    ps.morphism = make_identity(3);
    ps.radius = std::max(std::abs(v_minus), std::abs(v_plus));
    ps.window = v_plus - v_minus;
    ps.speed = {v_plus, v_minus};
    ps.update = [ga, v_minus, v_plus, sabotaged](const PhiView& v) {
        Symbol type = v.p(0);
        int move = type == 1 ? v_plus : v_minus;
        if (sabotaged || ga.apply(v.x_ptr() + move) == type) return single(move);
        return Image{};
    };
    return ps;
}

}  // namespace

ParticleSystem gliders_system(const LocalRule& ga, int v_minus, int v_plus) {
    return gliders_base(ga, v_minus, v_plus, false);
}
ParticleSystem gliders_system_sabotaged(const LocalRule& ga, int v_minus, int v_plus) {
    return gliders_base(ga, v_minus, v_plus, true);
}

// --- line PCA ------------------------------------------------------------------

namespace {

ParticleSystem line_base(bool sabotaged) {
    ParticleSystem ps;
    ps.name = sabotaged ? "line-sabotaged" : "line";
    ps.particles = {"00", "11"};
    ps.morphism = LocalRule::tabulate(2, 3, {0, 1}, [](auto v) { return v[0] == v[1] ? 1 + v[0] : 0; });
    ps.radius = 2;
    ps.window = 2;
    ps.uses_rules = true;
    ps.speed = {std::nullopt, std::nullopt};
    ps.update = [sabotaged](const PhiView& v) {
        if (sabotaged) return single(0);
        // rule codes: 0 = f0, 1 = f1, 2 = f-1; an (f1, f-1) pair swaps its two cells
        if (v.rule(1) == 1 && v.rule(2) == 2 && v.x(1) != v.x(2)) return v.x(3) == v.x(2) ? Image{} : single(2);
        if (v.rule(-1) == 1 && v.rule(0) == 2 && v.x(-1) != v.x(0)) return v.x(-2) == v.x(-1) ? Image{} : single(-2);
        return single(0);
    };
    return ps;
}

}  // namespace

ParticleSystem line_system() { return line_base(false); }
ParticleSystem line_system_sabotaged() { return line_base(true); }

// --- traffic-majority PCA ------------------------------------------------------

namespace {

// Domains: 0 = all zeros, 1 = all ones, 2 = checkerboard.
struct Boundary {
    int beta;  // last cell of the left region
    int code;  // 1 p01, 2 p02, 3 p21, 4 p12, 5 p20
};

constexpr int fates_left[6] = {0, 0, 0, 2, 1, 2};
constexpr int fates_right[6] = {0, 1, 2, 1, 2, 0};

int fates_code(int a, int b, int c, int d) {
    int w = a * 8 + b * 4 + c * 2 + d;
    switch (w) {
        case 0b0011: return 1;
        case 0b0010: return 2;
        case 0b1011: return 3;
        case 0b0110:
        case 0b1110: return 4;
        case 0b0100:
        case 0b1100: return 5;
        default: return 0;
    }
}

int fates_beta(int k, int code) { return code == 4 ? k + 2 : k + 1; }

int rule184(int a, int b, int c) { return (b == 1 && c == 1) || (a == 1 && b == 0) ? 1 : 0; }
int rule232(int a, int b, int c) { return a + b + c >= 2 ? 1 : 0; }

struct Region {
    double s, e;
    int dom;
};

constexpr double open_end = 1e6;

std::vector<Region> regions_of(const std::vector<Boundary>& bs, int fallback_dom) {
    std::vector<Region> rs;
    if (bs.empty()) {
        rs.push_back({-open_end, open_end, fallback_dom});
        return rs;
    }
    rs.push_back({-open_end, static_cast<double>(bs.front().beta), fates_left[bs.front().code]});
    for (std::size_t i = 0; i + 1 < bs.size(); ++i)
        rs.push_back({bs[i].beta + 1.0, static_cast<double>(bs[i + 1].beta), fates_right[bs[i].code]});
    rs.push_back({bs.back().beta + 1.0, open_end, fates_right[bs.back().code]});
    return rs;
}

void sort_boundaries(std::vector<Boundary>& bs) {
    std::sort(bs.begin(), bs.end(), [](const Boundary& a, const Boundary& b) {
        if (a.beta != b.beta) return a.beta < b.beta;
        // at a shared cut p12 sits left of p20
        return a.code == 4 && b.code != 4;
    });
}

Image fates_update(const PhiView& v, int w, bool sabotaged) {
    // cells x_{-w} .. x_{w+3}, rules on the same range
    const int lo = -w, hi = w + 3;
    std::vector<Boundary> ob, nb;
    for (int k = lo; k + 3 <= hi; ++k) {
        int code = fates_code(v.x(k), v.x(k + 1), v.x(k + 2), v.x(k + 3));
        if (code) ob.push_back({fates_beta(k, code), code});
    }
    // y = F(x) on [lo + 1, hi - 1]
    std::vector<int> y(static_cast<std::size_t>(hi - lo + 1), 0);
    auto Y = [&](int i) -> int& { return y[static_cast<std::size_t>(i - lo)]; };
    for (int i = lo + 1; i <= hi - 1; ++i)
        Y(i) = v.rule(i) == 0 ? rule184(v.x(i - 1), v.x(i), v.x(i + 1)) : rule232(v.x(i - 1), v.x(i), v.x(i + 1));
    for (int k = lo + 1; k + 3 <= hi - 1; ++k) {
        int code = fates_code(Y(k), Y(k + 1), Y(k + 2), Y(k + 3));
        if (code) nb.push_back({fates_beta(k, code), code});
    }
    sort_boundaries(ob);
    sort_boundaries(nb);

    const int me_beta = fates_beta(0, v.p(0));
    std::size_t me = ob.size();
    for (std::size_t i = 0; i < ob.size(); ++i)
        if (ob[i].beta == me_beta && ob[i].code == v.p(0)) me = i;
    if (me == ob.size()) throw PreconditionError("particle missing from its own window");

    std::vector<int> vel(ob.size(), 0);
    for (std::size_t i = 0; i < ob.size(); ++i) {
        const int b = ob[i].beta;
        switch (ob[i].code) {
            case 1: vel[i] = 0; break;
            case 2: vel[i] = 1; break;
            case 3: vel[i] = -1; break;
            case 4: vel[i] = (v.rule(b) == 0) != sabotaged ? -1 : 1; break;
            case 5: vel[i] = v.rule(b + 1) == 0 ? 1 : -1; break;
        }
    }
    for (std::size_t i = 0; i + 1 < ob.size(); ++i) {
        const int b = ob[i].beta;
        if (ob[i].code == 4 && ob[i + 1].code == 5 && ob[i + 1].beta == b && v.rule(b) == 1 && v.rule(b + 1) == 1)
            vel[i] = vel[i + 1] = 0;
    }

    int fallback = 2;
    {
        bool all0 = true, all1 = true;
        for (int i = lo + 2; i <= hi - 4; ++i) {
            all0 = all0 && Y(i) == 0;
            all1 = all1 && Y(i) == 1;
        }
        fallback = all0 ? 0 : (all1 ? 1 : 2);
    }
    std::vector<Region> oreg = regions_of(ob, 0), nreg = regions_of(nb, fallback);

    // successor of each old region among the new ones, or -1 if it vanished
    std::vector<int> succ(oreg.size(), -1);
    for (std::size_t i = 0; i < oreg.size(); ++i) {
        const double vs = i == 0 ? 0 : vel[i - 1], ve = i + 1 == oreg.size() ? 0 : vel[i];
        const double ps = oreg[i].s + vs, pe = oreg[i].e + ve;
        if (pe < ps - 1) continue;
        const double a = ps - 0.5, b = pe + 0.5;
        double best_ov = -1, best_dc = 0;
        for (std::size_t j = 0; j < nreg.size(); ++j) {
            if (nreg[j].dom != oreg[i].dom) continue;
            const double a2 = nreg[j].s - 0.5, b2 = nreg[j].e + 0.5;
            if (b2 < a || a2 > b) continue;
            const double ov = std::min(b, b2) - std::max(a, a2);
            const double dc = std::abs((a + b) / 2 - (a2 + b2) / 2);
            if (succ[i] < 0 || ov > best_ov || (ov == best_ov && dc < best_dc)) {
                succ[i] = static_cast<int>(j);
                best_ov = ov;
                best_dc = dc;
            }
        }
    }
    long l = static_cast<long>(me), r = static_cast<long>(me) + 1;
    while (l >= 0 && succ[static_cast<std::size_t>(l)] < 0) --l;
    while (r < static_cast<long>(oreg.size()) && succ[static_cast<std::size_t>(r)] < 0) ++r;
    Image img;
    if (l < 0 || r >= static_cast<long>(oreg.size())) return img;
    const int A = succ[static_cast<std::size_t>(l)], B = succ[static_cast<std::size_t>(r)];
    std::vector<int> offs;
    for (int j = A; j < B; ++j) offs.push_back(nb[static_cast<std::size_t>(j)].code == 4 ? nb[static_cast<std::size_t>(j)].beta - 2
                                                                                            : nb[static_cast<std::size_t>(j)].beta - 1);
    std::sort(offs.begin(), offs.end());
    for (int o : offs) img.push(o);
    return img;
}

ParticleSystem fates_base(int window, bool sabotaged) {
    ParticleSystem ps;
    ps.name = sabotaged ? "traffic-majority-sabotaged" : "traffic-majority";
    ps.particles = {"p01", "p02", "p21", "p12", "p20"};
    ps.morphism = LocalRule::tabulate(2, 6, {0, 1, 2, 3}, [](auto v) { return fates_code(v[0], v[1], v[2], v[3]); });
    ps.radius = 2;
    ps.window = window;
    ps.uses_rules = true;
    ps.speed = {0, 1, -1, std::nullopt, std::nullopt};
    ps.update = [window, sabotaged](const PhiView& v) { return fates_update(v, window, sabotaged); };
    return ps;
}

}  // namespace

ParticleSystem fates_system(int window) { return fates_base(window, false); }
ParticleSystem fates_system_sabotaged(int window) { return fates_base(window, true); }

// --- glider factors ----------------------------------------------------------

GliderFactor traffic_factor() {
    return {"traffic->GA(-1,1)",
            LocalRule::tabulate(2, 3, {0, 1}, [](auto v) { return v[0] == v[1] ? (v[0] == 0 ? 1 : 2) : 0; }), -1, 1};
}

GliderFactor cyclic3_factor() {
    return {"cyclic3->GA(-1,1)", LocalRule::tabulate(3, 3, {0, 1}, [](auto v) {
                if (v[0] == (v[1] + 1) % 3) return 1;
                if (v[1] == (v[0] + 1) % 3) return 2;
                return 0;
            }),
            -1, 1};
}

GliderFactor captive_factor(int n, std::span<const Symbol> f) {
    std::vector<Symbol> t(f.begin(), f.end());
    if (t.size() != static_cast<std::size_t>(n * n)) throw PreconditionError("captive table must have n^2 entries");
    return {"captive->GA(-1,0)", LocalRule::tabulate(n, 3, {0, 1}, [n, t](auto v) {
                if (v[0] == v[1]) return 0;
                return t[static_cast<std::size_t>(v[0] * n + v[1])] == v[0] ? 1 : 2;
            }),
            -1, 0};
}

GliderFactor product128_factor() {
    return {"product128->GA(-1,1)", LocalRule::tabulate(2, 3, {0, 1}, [](auto v) {
                if (v[0] == 0 && v[1] == 1) return 1;
                if (v[0] == 1 && v[1] == 0) return 2;
                return 0;
            }),
            -1, 1};
}

ParticleSystem factor_system(const GliderFactor& g) {
    ParticleSystem ps;
    ps.name = g.name;
    ps.particles = {"+1", "-1"};
    ps.morphism = g.map;
    ps.radius = std::max(std::abs(g.v_minus), std::abs(g.v_plus));
    ps.window = g.v_plus - g.v_minus;
    ps.speed = {g.v_plus, g.v_minus};
    LocalRule ga = make_gliders(g.v_minus, g.v_plus);
    const int vm = g.v_minus, vp = g.v_plus;
    ps.update = [ga, vm, vp](const PhiView& v) {
        Symbol type = v.p(0);
        int move = type == 1 ? vp : vm;
        return ga.apply(v.p_ptr() + move) == type ? single(move) : Image{};
    };
    return ps;
}

FactorCheck verify_factor(const LocalRule& ca, const GliderFactor& g, int len) {
    if (g.map.input_size() != ca.input_size()) throw PreconditionError("factor and automaton alphabets differ");
    const int n = ca.input_size();
    if (std::pow(static_cast<double>(n), len) > 5e7) throw FeasibilityError("enumeration too large");
    const LocalRule ga = make_gliders(g.v_minus, g.v_plus);
    FactorCheck fc;
    Word w(static_cast<std::size_t>(len), 0);
    for (;;) {
        ++fc.words;
        Configuration x(Alphabet::of(n), w, 0);
        Configuration lhs = step(g.map, step(ca, x));
        Configuration rhs = step(ga, step(g.map, x));
        long lo = std::max(lhs.exact_lo(), rhs.exact_lo()), hi = std::min(lhs.exact_hi(), rhs.exact_hi());
        for (long i = lo; i <= hi; ++i)
            if (lhs.at(i) != rhs.at(i)) {
                if (fc.mismatches++ == 0) fc.witness = "word=" + format_word(w) + " at=" + std::to_string(i);
                break;
            }
        std::size_t i = w.size();
        while (i-- > 0 && ++w[i] == n) w[i] = 0;
        if (i == static_cast<std::size_t>(-1)) break;
    }
    return fc;
}

}  // namespace partlab
