#include "partlab/walk.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <sstream>

#include "partlab/error.hpp"
#include "partlab/parallel.hpp"

namespace partlab {

std::optional<long> WalkProcess::argmin(long a, long b) const {
    if (!covers(a, b) || a > b) throw FeasibilityError("walk does not cover the requested interval");
    long best = a, value = S(a);
    bool unique = true;
    for (long k = a + 1; k <= b; ++k) {
        long s = S(k);
        if (s < value) {
            value = s;
            best = k;
            unique = true;
        } else if (s == value) {
            unique = false;
        }
    }
    if (!unique) return std::nullopt;
    return best;
}

WalkProcess walk_of(const Configuration& c) {
    if (c.alphabet().size != 3) throw PreconditionError("walks need the gliders alphabet");
    WalkProcess w;
    w.lo = c.exact_lo();
    auto x = c.exact_cells();
    w.sums.resize(x.size() + 1);
    w.sums[0] = 0;
    for (std::size_t i = 0; i < x.size(); ++i) w.sums[i + 1] = w.sums[i] + glider_value(x[i]);
    // S(0) = 0 whenever 0 is in range; otherwise the sums are relative
    if (w.lo <= 0 && 0 <= w.hi()) {
        long s0 = w.S(0);
        for (auto& s : w.sums) s -= s0;
    }
    return w;
}

namespace {

// m[i] = min S over [start + i, start + i + width - 1], for i in [0, count).
std::vector<long> sliding_min(const WalkProcess& w, long start, long count, long width) {
    std::vector<long> out(static_cast<std::size_t>(std::max(0L, count)));
    std::deque<long> q;  // positions with increasing S
    long next = start;
    for (long i = 0; i < count; ++i) {
        long end = start + i + width - 1;
        for (; next <= end; ++next) {
            while (!q.empty() && w.S(q.back()) >= w.S(next)) q.pop_back();
            q.push_back(next);
        }
        while (q.front() < start + i) q.pop_front();
        out[static_cast<std::size_t>(i)] = w.S(q.front());
    }
    return out;
}

void check_speeds(int v_minus, int v_plus) {
    if (v_minus >= v_plus) throw PreconditionError("need v_minus < v_plus");
}

}  // namespace

Configuration gliders_row(const WalkProcess& w, int v_minus, int v_plus, long t) {
    check_speeds(v_minus, v_plus);
    const long width = (v_plus - v_minus) * t + 1;
    const long first = w.lo + v_plus * t;
    const long last = w.hi() - 1 + v_minus * t;
    if (last < first) throw FeasibilityError("walk too short for this time");
    const long count = last - first + 1;
    // window starts a = j - v+ t run over [w.lo, w.lo + count]
    auto m = sliding_min(w, w.lo, count + 1, width);
    Word row(static_cast<std::size_t>(count));
    for (long i = 0; i < count; ++i) {
        long a = w.lo + i;
        if (w.S(a + width) < m[static_cast<std::size_t>(i)])
            row[static_cast<std::size_t>(i)] = glider_symbol(-1);
        else if (w.S(a) < m[static_cast<std::size_t>(i + 1)])
            row[static_cast<std::size_t>(i)] = glider_symbol(1);
    }
    return Configuration(Alphabet::of(3), std::move(row), first);
}

LocalRule make_gliders_sabotaged(int v_minus, int v_plus) {
    check_speeds(v_minus, v_plus);
    std::vector<int> offsets;
    for (int o = -v_plus; o <= -v_minus; ++o) offsets.push_back(o);
    const int m = static_cast<int>(offsets.size());
    return LocalRule::tabulate(3, 3, offsets, [m](std::span<const Symbol> v) {
        if (glider_value(v[0]) == 1) {
            int s = 0;
            bool ok = true;
            for (int i = 1; i < m && ok; ++i) ok = (s += glider_value(v[static_cast<std::size_t>(i)])) > 0;
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

Configuration shift_right(const Configuration& c, long k) {
    auto cells = c.cells();
    return Configuration(c.alphabet(), Word(cells.begin(), cells.end()), c.origin() + k, c.exact_lo() + k,
                         c.exact_hi() + k);
}

OracleReport lemma_min_oracle(int v_minus, int v_plus, int max_len, int max_t, const LocalRule* rule) {
    check_speeds(v_minus, v_plus);
    if (max_len < 1 || max_t < 0) throw PreconditionError("bad oracle sizes");
    double space = std::pow(3.0, max_len) * (max_t + 1);
    if (space > 5e8) throw FeasibilityError("oracle enumeration too large");
    LocalRule own = make_gliders(v_minus, v_plus);
    const LocalRule& g = rule ? *rule : own;

    OracleReport rep;
    Word w(static_cast<std::size_t>(max_len), 0);
    auto fail = [&](const std::string& what, long t, long j) {
        if (rep.mismatches++ == 0)
            rep.witness = "word=" + format_word(w) + " t=" + std::to_string(t) + " j=" + std::to_string(j) + " " + what;
    };
    for (;;) {
        ++rep.words;
        Configuration cur(Alphabet::of(3), w, 0);
        const WalkProcess s0 = walk_of(cur);
        WalkProcess prev = s0;
        for (long t = 0; t <= max_t; ++t) {
            if (cur.exact_width() <= 0) break;
            for (long j = cur.exact_lo(); j <= cur.exact_hi(); ++j) {
                long a = j - v_plus * t, b = j - v_minus * t + 1;
                if (!s0.covers(a, b)) continue;
                auto am = s0.argmin(a, b);
                int v = glider_value(cur.at(j));
                rep.checks += 2;
                if ((v == -1) != (am == b)) fail("minus", t, j);
                if ((v == 1) != (am == a)) fail("plus", t, j);
            }
            if (t == max_t) break;
            Configuration next = step(g, cur);
            if (next.exact_width() <= 0) break;
            WalkProcess sn = walk_of(next);
            // one-step transport of strict minima
            for (long j = sn.lo; j <= sn.hi(); ++j)
                for (long n = 1; j + n <= sn.hi(); ++n) {
                    if (prev.covers(j - v_plus, j + n - v_minus)) {
                        ++rep.checks;
                        bool l = sn.argmin(j, j + n) == j;
                        bool r = prev.argmin(j - v_plus, j + n - v_minus) == j - v_plus;
                        if (l != r) fail("transport-right n=" + std::to_string(n), t, j);
                    }
                    long k = j + n;  // second form, right end k
                    if (prev.covers(k - n - v_plus, k - v_minus)) {
                        ++rep.checks;
                        bool l = sn.argmin(k - n, k) == k;
                        bool r = prev.argmin(k - n - v_plus, k - v_minus) == k - v_minus;
                        if (l != r) fail("transport-left n=" + std::to_string(n), t, k);
                    }
                }
            cur = std::move(next);
            prev = std::move(sn);
        }
        std::size_t i = 0;
        while (i < w.size() && w[i] == 2) w[i++] = 0;
        if (i == w.size()) break;
        ++w[i];
    }
    return rep;
}

namespace {

template <class SFn>
EntryTimeSample entry_scan(SFn&& S, int v_minus, int v_plus, long n, long tmax, Species s) {
    check_speeds(v_minus, v_plus);
    if (v_minus >= 0) throw PreconditionError("entry times need v_minus < 0");
    if (n < 0 || tmax < 0) throw PreconditionError("negative time");
    const int width = s == Species::minus ? -v_minus : v_plus;
    if (width <= 0) throw PreconditionError("no entry window for a speed-0 species");
    struct Win {
        long a, b, mn;
    };
    std::vector<Win> wins(static_cast<std::size_t>(width));
    for (long k = 0; k <= tmax; ++k) {
        const long t = n + k;
        for (int i = 0; i < width; ++i) {
            long a, b, target;
            if (s == Species::minus) {
                a = i - v_plus * t;
                b = i - v_minus * t;
                target = b + 1;
            } else {
                a = i - v_plus * t + 1;
                b = i - v_minus * t + 1;
                target = a - 1;
            }
            auto& w = wins[static_cast<std::size_t>(i)];
            if (k == 0) {
                w = {a, a, S(a)};
                while (w.b < b) w.mn = std::min(w.mn, S(++w.b));
            } else {
                while (w.a > a) w.mn = std::min(w.mn, S(--w.a));
                while (w.b < b) w.mn = std::min(w.mn, S(++w.b));
            }
            if (S(target) < w.mn) return {n, k, false, s};
        }
    }
    return {n, tmax, true, s};
}

// Walk drawn lazily on both sides of 0.
class LazyWalk {
public:
    LazyWalk(const MeasureSpec& m, Rng rng) : line_(m, rng) { pos_.push_back(0); }
    long operator()(long k) {
        if (k >= 0) {
            while (static_cast<long>(pos_.size()) <= k) pos_.push_back(pos_.back() + glider_value(line_.right()));
            return pos_[static_cast<std::size_t>(k)];
        }
        while (static_cast<long>(neg_.size()) < -k)
            neg_.push_back((neg_.empty() ? 0 : neg_.back()) - glider_value(line_.left()));
        return neg_[static_cast<std::size_t>(-k - 1)];
    }

private:
    LazyLine line_;
    std::vector<long> pos_, neg_;
};

}  // namespace

EntryTimeSample entry_time(const WalkProcess& w, int v_minus, int v_plus, long n, long tmax, Species s) {
    return entry_scan(
        [&](long k) {
            if (!w.covers(k, k)) throw FeasibilityError("walk does not cover the entry-time light cone");
            return w.S(k);
        },
        v_minus, v_plus, n, tmax, s);
}

EntryTimeSample entry_time_by_stepping(const Configuration& x, int v_minus, int v_plus, long n, long tmax,
                                       Species s) {
    check_speeds(v_minus, v_plus);
    const int width = s == Species::minus ? -v_minus : v_plus;
    if (width <= 0) throw PreconditionError("no entry window for a speed-0 species");
    const LocalRule g = make_gliders(v_minus, v_plus);
    const int target = s == Species::minus ? -1 : 1;
    Configuration c = x;
    for (long t = 0; t <= n + tmax; ++t) {
        if (c.exact_lo() > 0 || c.exact_hi() < width - 1)
            throw FeasibilityError("configuration does not cover the entry-time light cone");
        if (t >= n)
            for (long i = 0; i < width; ++i)
                if (glider_value(c.at(i)) == target) return {n, t - n, false, s};
        if (t < n + tmax) c = step(g, c);
    }
    return {n, tmax, true, s};
}

std::vector<EntryTimeSample> entry_times(int v_minus, int v_plus, const MeasureSpec& m, long n, const EntryPlan& plan,
                                         Species s) {
    if (m.alphabet_size() != 3) throw PreconditionError("entry times need a measure on the gliders alphabet");
    const long tmax = plan.tmax > 0 ? plan.tmax : 64 * std::max(1L, n);
    if (static_cast<double>(n + tmax) * (v_plus - v_minus) > 2e8)
        throw FeasibilityError("entry-time light cone too large");
    std::vector<EntryTimeSample> out(plan.samples);
    const Rng master(plan.seed);
    parallel_for(plan.samples, plan.threads, [&](std::size_t i) {
        LazyWalk walk(m, master.split(i));
        out[i] = entry_scan(walk, v_minus, v_plus, n, tmax, s);
    });
    return out;
}

std::string entry_csv(const std::vector<EntryTimeSample>& samples) {
    std::ostringstream out;
    out << "n,T,censored\n";
    for (const auto& e : samples) out << e.n << ',' << e.value << ',' << (e.censored ? 1 : 0) << '\n';
    return out.str();
}

double limit_cdf(const LimitLaw& law, double alpha) {
    if (!(law.v_minus < 0 && 0 <= law.v_plus)) throw PreconditionError("limit law needs v_minus < 0 <= v_plus");
    if (std::isnan(alpha) || alpha < 0) throw PreconditionError("alpha must be nonnegative");
    const double vm = law.v_minus, vp = law.v_plus;
    double ratio = std::isinf(alpha) ? (vp > 0 ? -vm / vp : std::numeric_limits<double>::infinity())
                                     : -vm * alpha / (vp - vm + vp * alpha);
    return 2.0 / std::numbers::pi * std::atan(std::sqrt(ratio));
}

EcdfReport ecdf_report(const std::vector<EntryTimeSample>& samples, const LimitLaw& law, double alpha_max,
                       int grid_points) {
    if (samples.empty()) throw PreconditionError("no samples");
    if (grid_points < 2 || !(alpha_max > 0)) throw PreconditionError("bad grid");
    std::vector<std::pair<double, bool>> v;
    for (const auto& e : samples)
        v.emplace_back(static_cast<double>(e.value) / static_cast<double>(std::max(1L, e.n)), e.censored);
    std::sort(v.begin(), v.end());
    EcdfReport r;
    std::vector<double> finite;
    for (auto& [x, c] : v) {
        r.values.push_back(x);
        r.censored.push_back(c);
        if (!c) finite.push_back(x);
    }
    const double total = static_cast<double>(samples.size());
    for (int i = 0; i < grid_points; ++i) {
        double a = alpha_max * i / (grid_points - 1);
        double e = static_cast<double>(std::upper_bound(finite.begin(), finite.end(), a) - finite.begin()) / total;
        double ref = limit_cdf(law, a);
        r.grid.push_back(a);
        r.ecdf.push_back(e);
        r.reference.push_back(ref);
        r.ks = std::max(r.ks, std::abs(e - ref));
    }
    return r;
}

double ks_between(const EcdfReport& a, const EcdfReport& b) {
    if (a.grid != b.grid) throw PreconditionError("reports use different grids");
    double ks = 0;
    for (std::size_t i = 0; i < a.grid.size(); ++i) ks = std::max(ks, std::abs(a.ecdf[i] - b.ecdf[i]));
    return ks;
}

std::string EcdfReport::csv() const {
    std::ostringstream out;
    out << "alpha,ecdf,reference\n";
    for (std::size_t i = 0; i < grid.size(); ++i) out << grid[i] << ',' << ecdf[i] << ',' << reference[i] << '\n';
    return out.str();
}

std::vector<long> dyadic_grid(int lo_exp, int hi_exp) {
    if (lo_exp < 0 || hi_exp < lo_exp || hi_exp > 40) throw PreconditionError("bad dyadic grid");
    std::vector<long> g;
    for (int e = lo_exp; e <= hi_exp; ++e) g.push_back(1L << e);
    return g;
}

namespace {

struct Fit {
    double slope = 0, se = 0;
};

// Weighted least squares of y on x.
Fit wls(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& w) {
    double sw = 0, sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
    }
    if (x.size() < 2 || sw <= 0) return {};
    double mx = sx / sw, my = sy / sw, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += w[i] * (x[i] - mx) * (x[i] - mx);
        sxy += w[i] * (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0) return {};
    return {sxy / sxx, std::sqrt(1.0 / sxx)};
}

long max_time(const std::vector<long>& grid) {
    if (grid.empty()) throw PreconditionError("empty time grid");
    for (long t : grid)
        if (t < 0) throw PreconditionError("negative time in grid");
    return *std::max_element(grid.begin(), grid.end());
}

struct MeanSd {
    double mean = 0, half_width = 0;
};

MeanSd mean_hw(const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double var = 0;
    for (double x : v) var += (x - m) * (x - m);
    var = v.size() > 1 ? var / static_cast<double>(v.size() - 1) : 0;
    return {m, 2.0 * std::sqrt(var / static_cast<double>(v.size()))};
}

}  // namespace

DecaySeries density_decay(int v_minus, int v_plus, const MeasureSpec& m, const std::vector<long>& t_grid,
                          const SamplingPlan& plan, Species s) {
    check_speeds(v_minus, v_plus);
    if (m.alphabet_size() != 3) throw PreconditionError("density decay needs a measure on the gliders alphabet");
    if (plan.trajectories < 1 || plan.cells < 1) throw PreconditionError("empty sampling plan");
    const long T = max_time(t_grid);
    const double span = static_cast<double>(plan.cells) + static_cast<double>(T) * (v_plus - v_minus);
    if (span > 5e8) throw FeasibilityError("window too large for the time grid");
    const long cells = static_cast<long>(plan.cells);
    std::vector<std::vector<double>> dens(plan.trajectories, std::vector<double>(t_grid.size()));
    const Rng master(plan.seed);
    parallel_for(plan.trajectories, plan.threads, [&](std::size_t j) {
        Rng rng = master.split(j);
        auto x = window_sample(m, plan.cells, static_cast<std::size_t>(std::max(0, v_plus) * T),
                               static_cast<std::size_t>(std::max(0, -v_minus) * T), rng);
        WalkProcess w = walk_of(x);
        for (std::size_t g = 0; g < t_grid.size(); ++g) {
            const long t = t_grid[g];
            const long width = (v_plus - v_minus) * t + 1;
            const long start = -v_plus * t;
            auto mins = sliding_min(w, start, cells + 1, width);
            long count = 0;
            for (long i = 0; i < cells; ++i) {
                long a = start + i;
                if (s == Species::minus ? w.S(a + width) < mins[static_cast<std::size_t>(i)]
                                        : w.S(a) < mins[static_cast<std::size_t>(i + 1)])
                    ++count;
            }
            dens[j][g] = static_cast<double>(count) / static_cast<double>(cells);
        }
    });
    DecaySeries out;
    std::vector<double> lx, ly, lw;
    for (std::size_t g = 0; g < t_grid.size(); ++g) {
        std::vector<double> col;
        for (const auto& d : dens) col.push_back(d[g]);
        auto [mean, hw] = mean_hw(col);
        out.points.push_back({t_grid[g], mean, hw});
    }
    const std::size_t half = t_grid.size() / 2;
    for (std::size_t g = half; g < out.points.size(); ++g) {
        const auto& p = out.points[g];
        if (p.t <= 0 || p.density <= 0) continue;
        double se = std::max(p.half_width / 2.0, 1e-12);
        lx.push_back(std::log(static_cast<double>(p.t)));
        ly.push_back(std::log(p.density));
        lw.push_back(std::pow(p.density / se, 2));
    }
    auto fit = wls(lx, ly, lw);
    out.slope = fit.slope;
    out.slope_se = fit.se;
    return out;
}

std::string DecaySeries::csv() const {
    std::ostringstream out;
    out << "t,density,half_width\n";
    for (const auto& p : points) out << p.t << ',' << p.density << ',' << p.half_width << '\n';
    return out.str();
}

std::string RateSeries::csv() const {
    std::ostringstream out;
    out << "t,dm,particles\n";
    for (const auto& p : points) out << p.t << ',' << p.dm << ',' << p.particles << '\n';
    return out.str();
}

namespace {

double nonzero_fraction(const Configuration& c) {
    auto x = c.exact_cells();
    if (x.empty()) return 0;
    return static_cast<double>(std::count_if(x.begin(), x.end(), [](Symbol s) { return s != 0; })) /
           static_cast<double>(x.size());
}

RateSeries finish_rate(const std::vector<long>& t_grid, std::vector<EmpiricalCylinders> counts,
                       const std::vector<std::vector<double>>& particles, const Valuation& target, int L) {
    RateSeries out;
    for (std::size_t g = 0; g < t_grid.size(); ++g) {
        double p = 0;
        for (const auto& row : particles) p += row[g];
        p /= static_cast<double>(particles.size());
        out.points.push_back({t_grid[g], dm_distance(counts[g].valuation(), target, L), p});
    }
    std::vector<double> lx, ly, w, tx, tl, tw;
    const std::size_t half = t_grid.size() / 2;
    for (std::size_t g = 0; g < out.points.size(); ++g) {
        const auto& p = out.points[g];
        if (g >= half && p.t > 0 && p.dm > 0) {
            lx.push_back(std::log(static_cast<double>(p.t)));
            ly.push_back(std::log(p.dm));
            w.push_back(1.0);
        }
        if (p.particles > 0) {
            tx.push_back(static_cast<double>(p.t));
            tl.push_back(std::log(p.particles));
            tw.push_back(1.0);
        }
    }
    out.slope = wls(lx, ly, w).slope;
    out.log_slope = wls(tx, tl, tw).slope;
    const auto& mid = out.points[t_grid.size() / 2];
    if (mid.t > 0 && mid.dm > 0) {
        double c1 = mid.dm * std::sqrt(static_cast<double>(mid.t));
        double c2 = mid.dm * std::pow(static_cast<double>(mid.t), 0.25);
        out.sandwiched = true;
        for (const auto& p : out.points) {
            if (p.t <= 0) continue;
            double a = c1 / std::sqrt(static_cast<double>(p.t)), b = c2 / std::pow(static_cast<double>(p.t), 0.25);
            if (p.dm < 0.95 * std::min(a, b) || p.dm > 1.05 * std::max(a, b)) out.sandwiched = false;
        }
    }
    return out;
}

}  // namespace

RateSeries convergence_rate(const Dynamics& dyn, const MeasureSpec& m, const Valuation& target,
                            const std::vector<long>& t_grid, int L, const SamplingPlan& plan, const LocalRule* factor) {
    const long T = max_time(t_grid);
    if (T > std::numeric_limits<int>::max()) throw FeasibilityError("time grid too long");
    const int out_alphabet = factor ? factor->output_size() : dyn.alphabet_size();
    if (target.alphabet != out_alphabet || target.max_len < L)
        throw PreconditionError("target valuation does not match the observed alphabet or length");
    const std::size_t extra = static_cast<std::size_t>(L) +
                              (factor ? static_cast<std::size_t>(factor->max_offset() - factor->min_offset()) : 0);
    std::vector<std::vector<EmpiricalCylinders>> per(plan.trajectories);
    std::vector<std::vector<double>> particles(plan.trajectories, std::vector<double>(t_grid.size()));
    const Rng master(plan.seed);
    parallel_for(plan.trajectories, plan.threads, [&](std::size_t j) {
        Rng rng = master.split(j);
        per[j].assign(t_grid.size(), EmpiricalCylinders(out_alphabet, L));
        auto x = sample_for_steps(m, dyn, plan.cells, static_cast<int>(T), rng, extra);
        iterate(dyn, std::move(x), static_cast<int>(T), rng, [&](int t, const Configuration& c) {
            for (std::size_t g = 0; g < t_grid.size(); ++g) {
                if (t_grid[g] != t) continue;
                Configuration obs = factor ? step(*factor, c) : c;
                per[j][g].add(obs);
                particles[j][g] = nonzero_fraction(obs);
            }
        });
    });
    std::vector<EmpiricalCylinders> merged(t_grid.size(), EmpiricalCylinders(out_alphabet, L));
    for (const auto& traj : per)
        for (std::size_t g = 0; g < t_grid.size(); ++g) merged[g].merge(traj[g]);
    return finish_rate(t_grid, std::move(merged), particles, target, L);
}

RateSeries convergence_rate_gliders(int v_minus, int v_plus, const MeasureSpec& m, const Valuation& target,
                                    const std::vector<long>& t_grid, int L, const SamplingPlan& plan) {
    check_speeds(v_minus, v_plus);
    if (m.alphabet_size() != 3 || target.alphabet != 3 || target.max_len < L)
        throw PreconditionError("gliders rate needs three-symbol measure and target");
    const long T = max_time(t_grid);
    std::vector<std::vector<EmpiricalCylinders>> per(plan.trajectories);
    std::vector<std::vector<double>> particles(plan.trajectories, std::vector<double>(t_grid.size()));
    const Rng master(plan.seed);
    parallel_for(plan.trajectories, plan.threads, [&](std::size_t j) {
        Rng rng = master.split(j);
        per[j].assign(t_grid.size(), EmpiricalCylinders(3, L));
        auto x = window_sample(m, plan.cells + static_cast<std::size_t>(L), static_cast<std::size_t>(std::max(0, v_plus) * T),
                               static_cast<std::size_t>(std::max(0, -v_minus) * T), rng);
        WalkProcess w = walk_of(x);
        for (std::size_t g = 0; g < t_grid.size(); ++g) {
            // same cells at every time, so the grid points are comparable
            Configuration row = gliders_row(w, v_minus, v_plus, t_grid[g]);
            row = shrink_exact(row, static_cast<int>(-row.exact_lo()),
                               static_cast<int>(row.exact_hi() - (static_cast<long>(plan.cells) + L - 1)));
            per[j][g].add(row);
            particles[j][g] = nonzero_fraction(row);
        }
    });
    std::vector<EmpiricalCylinders> merged(t_grid.size(), EmpiricalCylinders(3, L));
    for (const auto& traj : per)
        for (std::size_t g = 0; g < t_grid.size(); ++g) merged[g].merge(traj[g]);
    return finish_rate(t_grid, std::move(merged), particles, target, L);
}

long speed_reduction_mismatches(int v_minus, int v_plus, std::size_t cells, std::size_t samples, std::uint64_t seed) {
    check_speeds(v_minus, v_plus);
    const LocalRule g = make_gliders(v_minus, v_plus);
    const LocalRule base = make_gliders(-1, 0);
    const int k = v_plus - v_minus;
    if (cells <= static_cast<std::size_t>(k)) throw FeasibilityError("window shorter than the neighbourhood");
    const MeasureSpec m = uniform_bernoulli(3);
    long mismatches = 0;
    const Rng master(seed);
    for (std::size_t s = 0; s < samples; ++s) {
        Rng rng = master.split(s);
        Configuration x(Alphabet::of(3), m.sample(cells, rng), 0);
        Configuration a = step(g, x);
        Configuration b = x;
        for (int i = 0; i < k; ++i) b = step(base, b);
        b = shift_right(b, v_plus);
        long lo = std::max(a.exact_lo(), b.exact_lo()), hi = std::min(a.exact_hi(), b.exact_hi());
        if (lo > hi) throw FeasibilityError("no common exact cells");
        for (long i = lo; i <= hi; ++i)
            if (a.at(i) != b.at(i)) ++mismatches;
        if (a.exact_lo() != b.exact_lo() || a.exact_hi() != b.exact_hi()) ++mismatches;
    }
    return mismatches;
}

Configuration cyclic3_power(const Configuration& x, long t) {
    if (x.alphabet().size != 3) throw PreconditionError("3-cyclic power needs three symbols");
    if (t < 0) throw PreconditionError("negative step count");
    auto cells = x.exact_cells();
    const long n = static_cast<long>(cells.size());
    if (n <= 2 * t) throw FeasibilityError("exact region exhausted");
    std::vector<long> h(static_cast<std::size_t>(n));
    for (long k = 1; k < n; ++k) {
        int d = (cells[static_cast<std::size_t>(k)] - cells[static_cast<std::size_t>(k - 1)] + 3) % 3;
        h[static_cast<std::size_t>(k)] = h[static_cast<std::size_t>(k - 1)] + (d == 2 ? -1 : d);
    }
    const long width = n - 2 * t;
    Word out(static_cast<std::size_t>(width));
    std::deque<long> q;
    long next = 0;
    for (long i = 0; i < width; ++i) {
        for (; next <= i + 2 * t; ++next) {
            while (!q.empty() && h[static_cast<std::size_t>(q.back())] <= h[static_cast<std::size_t>(next)]) q.pop_back();
            q.push_back(next);
        }
        while (q.front() < i) q.pop_front();
        long v = (cells[0] + h[static_cast<std::size_t>(q.front())]) % 3;
        out[static_cast<std::size_t>(i)] = static_cast<Symbol>(v < 0 ? v + 3 : v);
    }
    return Configuration(x.alphabet(), std::move(out), x.exact_lo() + t);
}

}  // namespace partlab
