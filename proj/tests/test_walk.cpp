#include "doctest.h"

#include <cmath>
#include <numbers>
#include <tuple>

#include "partlab/error.hpp"
#include "partlab/measures.hpp"
#include "partlab/walk.hpp"

using namespace partlab;

namespace {

Configuration gliders_word(std::initializer_list<int> values, long origin = 0) {
    Word w;
    for (int v : values) w.push_back(glider_symbol(v));
    return Configuration(Alphabet::of(3), w, origin);
}

Configuration random_gliders(std::size_t n, Rng& rng, long origin = 0) {
    Word w(n);
    for (auto& s : w) s = static_cast<Symbol>(rng.below(3));
    return Configuration(Alphabet::of(3), w, origin);
}

}  // namespace

TEST_SUITE("walk") {

TEST_CASE("walk of a configuration") {
    auto w = walk_of(gliders_word({1, 1, -1, 0}));
    CHECK(w.lo == 0);
    CHECK(w.hi() == 4);
    CHECK(w.S(0) == 0);
    CHECK(w.S(2) == 2);
    CHECK(w.S(3) == 1);
    CHECK(w.S(4) == 1);
    CHECK(w.argmin(0, 2) == 0L);
    CHECK_FALSE(w.argmin(3, 4).has_value());

    auto shifted = walk_of(gliders_word({-1, -1, 1}, -3));
    CHECK(shifted.S(0) == 0);
    CHECK(shifted.S(-3) == 1);
    CHECK(shifted.S(-1) == -1);
}

TEST_CASE("rows read off the walk equal stepping") {
    Rng rng(4);
    for (auto [vm, vp] : {std::pair{-1, 0}, {-1, 1}, {-2, 1}, {-1, 2}}) {
        auto ga = make_gliders(vm, vp);
        for (int trial = 0; trial < 100; ++trial) {
            auto x = random_gliders(60, rng, -30);
            auto w = walk_of(x);
            Configuration y = x;
            for (long t = 1; t <= 6; ++t) {
                y = step(ga, y);
                auto row = gliders_row(w, vm, vp, t);
                for (long i = std::max(row.first(), y.first()); i <= std::min(row.last(), y.last()); ++i)
                    REQUIRE(row.at(i) == y.at(i));
            }
        }
    }
}

TEST_CASE("strict minimum oracle on small words") {
    for (auto [vm, vp, len, t] : {std::tuple{-1, 0, 8, 3}, {-1, 1, 8, 3}, {-2, 1, 10, 2}}) {
        auto r = lemma_min_oracle(vm, vp, len, t);
        CHECK_MESSAGE(r.pass(), r.witness);
        CHECK(r.checks > 0);
    }
    auto sab = make_gliders_sabotaged(-1, 1);
    auto bad = lemma_min_oracle(-1, 1, 7, 3, &sab);
    CHECK_FALSE(bad.pass());
    CHECK_FALSE(bad.witness.empty());
}

TEST_CASE("entry times from the walk equal stepping") {
    long mismatches = 0;
    for (int s = 0; s < 300; ++s) {
        Rng rng(static_cast<std::uint64_t>(s));
        int vm = -1 - (s % 2), vp = s % 3;
        long n = static_cast<long>(rng.below(20)), tm = static_cast<long>(rng.below(20)), T = n + tm;
        auto x = window_sample(uniform_bernoulli(3), 4, static_cast<std::size_t>(vp * T + 2),
                               static_cast<std::size_t>(-vm * T + 2), rng);
        for (auto sp : {Species::minus, Species::plus}) {
            if (sp == Species::plus && vp == 0) continue;
            auto a = entry_time(walk_of(x), vm, vp, n, tm, sp);
            auto b = entry_time_by_stepping(x, vm, vp, n, tm, sp);
            if (a.value != b.value || a.censored != b.censored) ++mismatches;
        }
    }
    CHECK(mismatches == 0);
}

TEST_CASE("limit law") {
    LimitLaw slow{-1, 0};
    CHECK(limit_cdf(slow, 0) == 0.0);
    CHECK(limit_cdf(slow, 1) == doctest::Approx(0.5));
    CHECK(limit_cdf(slow, 3) == doctest::Approx(2.0 / 3));
    CHECK(limit_cdf(slow, INFINITY) == doctest::Approx(1.0));
    LimitLaw both{-1, 1};
    CHECK(limit_cdf(both, INFINITY) == doctest::Approx(0.5));
    double prev = 0;
    for (double a = 0.1; a < 50; a += 0.1) {
        CHECK(limit_cdf(both, a) >= prev);
        prev = limit_cdf(both, a);
    }
    CHECK_THROWS_AS(limit_cdf(LimitLaw{1, 2}, 1), PreconditionError);
}

TEST_CASE("ecdf of exact draws from the limit law") {
    // inverse of (2/pi) atan(sqrt a)
    Rng rng(6);
    std::vector<EntryTimeSample> s;
    const long n = 100000;
    for (int i = 0; i < 4000; ++i) {
        double a = std::pow(std::tan(std::numbers::pi / 2 * rng.uniform()), 2);
        long v = static_cast<long>(std::llround(std::min(a, 1e6) * n));
        s.push_back({n, v, false, Species::minus});
    }
    auto r = ecdf_report(s, LimitLaw{-1, 0}, 16);
    CHECK(r.ks < 0.03);
    CHECK(ks_between(r, r) == 0.0);
    CHECK(r.csv().rfind("alpha,ecdf,reference\n", 0) == 0);
}

TEST_CASE("entry time sampling is reproducible") {
    MeasureSpec ber(Bernoulli{{0.0, 0.5, 0.5}});
    EntryPlan one{200, 0, 3, 1}, three{200, 0, 3, 3};
    auto a = entry_times(-1, 0, ber, 64, one);
    auto b = entry_times(-1, 0, ber, 64, three);
    CHECK(entry_csv(a) == entry_csv(b));
    CHECK(entry_csv(a).rfind("n,T,censored\n", 0) == 0);
    for (const auto& e : a) {
        CHECK(e.n == 64);
        CHECK(e.value >= 0);
    }
}

TEST_CASE("particle density after one step") {
    // -1 at cell 0 at time 1 iff x_1 = -1 and x_0 != +1
    MeasureSpec ber(Bernoulli{{0.0, 0.5, 0.5}});
    SamplingPlan plan{20, 50000, 7, 1};
    auto d = density_decay(-1, 0, ber, dyadic_grid(0, 4), plan);
    REQUIRE(d.points.size() == 5);
    CHECK(d.points[0].t == 1);
    CHECK(std::abs(d.points[0].density - 0.25) < 0.005);
    for (std::size_t i = 1; i < d.points.size(); ++i) CHECK(d.points[i].density < d.points[i - 1].density);
    CHECK(d.csv().rfind("t,density,half_width\n", 0) == 0);
}

TEST_CASE("dyadic grid") {
    CHECK(dyadic_grid(0, 3) == std::vector<long>{1, 2, 4, 8});
    CHECK(dyadic_grid(6, 6) == std::vector<long>{64});
}

TEST_CASE("3-cyclic power through the height function") {
    auto c3 = make_cyclic(3);
    Rng rng(2);
    for (int trial = 0; trial < 200; ++trial) {
        long t = 1 + static_cast<long>(rng.below(12));
        auto x = window_sample(uniform_bernoulli(3), 10, static_cast<std::size_t>(t), static_cast<std::size_t>(t), rng);
        auto y = x;
        for (long s = 0; s < t; ++s) y = step(c3, y);
        auto z = cyclic3_power(x, t);
        for (long i = y.exact_lo(); i <= y.exact_hi(); ++i) REQUIRE(z.at(i) == y.at(i));
    }
}

TEST_CASE("shift convention") {
    auto x = gliders_word({1, -1, 0});
    auto y = shift_right(x, 2);
    CHECK(y.at(2) == x.at(0));
    CHECK(y.at(4) == x.at(2));
}

}
