#include "doctest.h"

#include <algorithm>
#include <array>
#include <cmath>

#include "partlab/error.hpp"
#include "partlab/measures.hpp"
#include "partlab/rules.hpp"
#include "partlab/walk.hpp"

using namespace partlab;

namespace {

Configuration binary(const char* w, long origin = 0) { return Configuration(Alphabet::of(2), parse_word(w), origin); }

Configuration random_config(int alphabet, std::size_t n, Rng& rng) {
    Word w(n);
    for (auto& s : w) s = static_cast<Symbol>(rng.below(static_cast<std::uint64_t>(alphabet)));
    return Configuration(Alphabet::of(alphabet), std::move(w));
}

long count(const Configuration& c, Symbol s) { return std::count(c.cells().begin(), c.cells().end(), s); }

}  // namespace

TEST_SUITE("rules") {

TEST_CASE("elementary tables") {
    auto f184 = make_elementary(184);
    auto f128 = make_elementary(128);
    auto f204 = make_elementary(204);
    for (Symbol a = 0; a < 2; ++a)
        for (Symbol b = 0; b < 2; ++b)
            for (Symbol c = 0; c < 2; ++c) {
                Word v{a, b, c};
                CHECK(f184.apply_values(v) == ((b && c) || (a && !b) ? 1 : 0));
                CHECK(f128.apply_values(v) == a * b * c);
                CHECK(f204.apply_values(v) == b);
            }
    CHECK_THROWS_AS(make_elementary(256), PreconditionError);
}

TEST_CASE("rule 184 step") {
    auto y = step(make_elementary(184), binary("10110"));
    // 101 -> 1, 011 -> 1, 110 -> 0
    CHECK(format_word(y.exact_cells()) == "110");
    CHECK(y.exact_lo() == 1);
    CHECK(y.exact_hi() == 3);
}

TEST_CASE("identity keeps the window") {
    auto c = binary("0110100");
    auto y = step(make_identity(2), c);
    CHECK(y == c);
    Rng rng(1);
    CHECK(iterate(Dynamics(make_identity(2)), c, 0, rng) == c);
}

TEST_CASE("iterate composes steps and calls the observer") {
    auto f = make_elementary(184);
    auto c = binary("0011100");
    Rng rng(1);
    std::vector<int> seen;
    auto y = iterate(Dynamics(f), c, 2, rng, [&](int t, const Configuration&) { seen.push_back(t); });
    CHECK(y == step(f, step(f, c)));
    CHECK(seen.size() >= 2);
    CHECK_THROWS_AS(iterate(Dynamics(f), c, 4, rng), FeasibilityError);
}

TEST_CASE("cyclic tables") {
    auto c3 = make_cyclic(3);
    CHECK(c3.apply_values(Word{0, 0, 1}) == 1);
    CHECK(c3.apply_values(Word{1, 0, 2}) == 1);
    CHECK(c3.apply_values(Word{2, 2, 0}) == 0);
    CHECK(c3.apply_values(Word{2, 1, 0}) == 2);
    CHECK(c3.apply_values(Word{1, 1, 0}) == 1);
    for (int n = 3; n <= 5; ++n) {
        auto c = make_cyclic(n);
        for (std::size_t i = 0; i < c.table().size(); ++i) {
            Word v = word_at(i, 3, n);
            int up = (v[1] + 1) % n;
            CHECK(c.table()[i] == ((v[0] == up || v[2] == up) ? up : v[1]));
        }
    }
}

TEST_CASE("gliders table") {
    auto g = make_gliders(-1, 0);
    CHECK(std::vector<int>(g.offsets().begin(), g.offsets().end()) == std::vector<int>{0, 1});
    for (int a = -1; a <= 1; ++a)
        for (int b = -1; b <= 1; ++b) {
            int expect = (a == 1 && b != -1) ? 1 : ((b == -1 && a != 1) ? -1 : 0);
            CHECK(glider_value(g.apply_values(Word{glider_symbol(a), glider_symbol(b)})) == expect);
        }
    CHECK(g.apply_values(Word{1, 1}) == 1);
    CHECK(g.apply_values(Word{2, 1}) == 0);
    auto y = step(g, Configuration(Alphabet::of(3), Word{1, 2}));
    CHECK(y.at(0) == 0);
    CHECK_THROWS_AS(make_gliders(1, 1), PreconditionError);
    auto g2 = make_gliders(-3, 2);
    CHECK(g2.min_offset() == -2);
    CHECK(g2.max_offset() == 3);
}

TEST_CASE("gliders annihilate in pairs") {
    Rng rng(5);
    for (auto [vm, vp] : {std::pair{-1, 0}, {-1, 1}, {-2, 1}, {-3, 2}}) {
        auto g = make_gliders(vm, vp);
        const int t = 6, pad = t * (vp - vm + 1);
        for (int trial = 0; trial < 200; ++trial) {
            Word w(static_cast<std::size_t>(2 * pad + 20), 0);
            for (int i = 0; i < 20; ++i) w[static_cast<std::size_t>(pad + i)] = static_cast<Symbol>(rng.below(3));
            Configuration c(Alphabet::of(3), std::move(w));
            long plus = count(c, 1), minus = count(c, 2);
            for (int s = 0; s < t; ++s) {
                c = step(g, c);
                long p2 = count(c, 1), m2 = count(c, 2);
                CHECK(plus - p2 == minus - m2);
                plus = p2;
                minus = m2;
            }
        }
    }
}

TEST_CASE("speed reduction identity") {
    CHECK(speed_reduction_mismatches(-2, -1, 64, 1000, 3) == 0);
    CHECK(speed_reduction_mismatches(-1, 1, 64, 200, 3) == 0);
    CHECK(speed_reduction_mismatches(-3, 2, 64, 200, 3) == 0);
}

TEST_CASE("locality") {
    Rng rng(9);
    for (auto rule : {make_elementary(110), make_cyclic(4), make_gliders(-2, 1), make_random_walk_ca()}) {
        int n = rule.input_size();
        for (int trial = 0; trial < 200; ++trial) {
            auto a = random_config(n, 30, rng);
            Word other(a.cells().begin(), a.cells().end());
            long i = 12;
            for (long j = 0; j < 30; ++j)
                if (j < i + rule.min_offset() || j > i + rule.max_offset())
                    other[static_cast<std::size_t>(j)] = static_cast<Symbol>(rng.below(static_cast<std::uint64_t>(n)));
            auto b = Configuration(Alphabet::of(n), other);
            CHECK(step(rule, a).at(i) == step(rule, b).at(i));
        }
    }
}

TEST_CASE("malformed tables are rejected") {
    CHECK_THROWS_AS(LocalRule(2, 2, {-1, 0, 1}, std::vector<Symbol>(7, 0)), PreconditionError);
    CHECK_THROWS_AS(LocalRule(2, 2, {0}, std::vector<Symbol>{0, 2}), PreconditionError);
    CHECK_THROWS_AS(LocalRule(2, 2, {1, 0}, std::vector<Symbol>(4, 0)), PreconditionError);
}

TEST_CASE("serialization round-trips") {
    for (auto rule : {make_elementary(184), make_cyclic(3), make_gliders(-1, 1), make_random_walk_ca()})
        CHECK(LocalRule::parse(rule.serialize()) == rule);
    CHECK_THROWS_AS(LocalRule::parse("2 2\noffsets 0\ntable 0 9\n"), PreconditionError);
}

TEST_CASE("one-sided captive") {
    // f(a, b) = a is the identity, f(a, b) = b the shift
    std::vector<Symbol> first(9), second(9);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            first[static_cast<std::size_t>(a * 3 + b)] = static_cast<Symbol>(a);
            second[static_cast<std::size_t>(a * 3 + b)] = static_cast<Symbol>(b);
        }
    Rng rng(2);
    auto c = random_config(3, 40, rng);
    auto id = step(make_one_sided_captive(3, first), c);
    auto sh = step(make_one_sided_captive(3, second), c);
    for (long i = id.first(); i <= id.last(); ++i) {
        CHECK(id.at(i) == c.at(i));
        CHECK(sh.at(i) == c.at(i + 1));
    }
    auto bad = first;
    bad[1] = 2;  // f(0, 1) = 2
    CHECK_THROWS_AS(make_one_sided_captive(3, bad), PreconditionError);
    for (int k = 0; k < 20; ++k) {
        auto f = random_captive_table(3, rng);
        CHECK_NOTHROW(make_one_sided_captive(3, f));
        for (int a = 0; a < 3; ++a) CHECK(f[static_cast<std::size_t>(a * 4)] == a);
    }
}

TEST_CASE("random walk automaton") {
    auto rw = make_random_walk_ca();
    CHECK(rw.input_size() == 4);
    CHECK(rw.min_offset() == -2);
    CHECK(rw.max_offset() == 2);
    std::array<long, 2> top{};
    for (std::size_t i = 0; i < rw.table().size(); ++i) {
        Word v = word_at(i, 5, 4);
        auto a = [&](int k) { return v[static_cast<std::size_t>(k + 2)] & 1; };
        auto b = [&](int k) { return v[static_cast<std::size_t>(k + 2)] >> 1; };
        Symbol out = rw.table()[i];
        CHECK((out & 1) == ((a(-2) + a(2)) & 1));
        bool c = (a(-1) == 0 && b(-1) == 1) || (a(0) == 1 && b(0) == 1);
        CHECK((out >> 1) == (c ? 1 : 0));
        ++top[out & 1];
    }
    CHECK(top[0] == top[1]);
}

TEST_CASE("degenerate PCA laws reduce to deterministic steps") {
    Rng rng(4);
    auto c = random_config(2, 200, rng);
    PCASpec id{{make_identity(2)}, IndependentLaw{{1.0}}};
    CHECK(step_pca(id, c, rng).first == step(make_identity(2), c));
    CHECK(step_pca(make_fates_pca(1.0), c, rng).first == step(make_elementary(184), c));
    CHECK(step_pca(make_fates_pca(0.0), c, rng).first == step(make_elementary(232), c));
    CHECK_THROWS_AS(make_fates_pca(1.5), PreconditionError);
}

TEST_CASE("PCA runs are reproducible per stream") {
    Rng a(8), b(8);
    auto c = random_config(2, 300, a);
    auto c2 = random_config(2, 300, b);
    REQUIRE(c == c2);
    auto fa = make_fates_pca(0.75);
    auto [ya, ra] = step_pca(fa, c, a);
    auto [yb, rb] = step_pca(fa, c2, b);
    CHECK(ya == yb);
    CHECK(ra == rb);
    CHECK(ra.size() == output_width(fa, c));
}

TEST_CASE("line PCA swaps letters under f1 f-1") {
    auto pca = make_line_pca();
    auto c = binary("00110010");
    REQUIRE(output_width(pca, c) == 4);
    std::vector<std::uint8_t> field{0, 1, 2, 0};  // cells 2..5
    auto y = apply_field(pca, c, field);
    CHECK(y.at(3) == 0);
    CHECK(y.at(4) == 1);
    CHECK(y.at(2) == 1);
    CHECK(y.at(5) == 0);
    // an alternating window is left alone
    auto alt = binary("01010101");
    auto z = apply_field(pca, alt, field);
    for (long i = 2; i <= 5; ++i) CHECK(z.at(i) == alt.at(i));
}

TEST_CASE("line PCA rule field is a stationary Markov field") {
    auto pca = make_line_pca();
    const auto& law = std::get<MarkovLaw>(pca.law);
    CHECK(law.forbidden.size() == 5);
    Rng rng(3);
    auto field = sample_rule_field(pca, 200000, rng);
    std::array<double, 3> f{};
    for (std::size_t i = 0; i < field.size(); ++i) {
        ++f[field[i]];
        if (i + 1 < field.size()) REQUIRE(pca.allowed_pair(field[i], field[i + 1]));
    }
    for (int k = 0; k < 3; ++k) CHECK(std::abs(f[static_cast<std::size_t>(k)] / 200000.0 - law.stationary[static_cast<std::size_t>(k)]) < 0.01);
    // max entropy: the chain's entropy is log of the root of l^3 = l^2 + 1
    double lo = 1, hi = 2;
    for (int it = 0; it < 100; ++it) {
        double mid = (lo + hi) / 2;
        (mid * mid * mid - mid * mid - 1 > 0 ? hi : lo) = mid;
    }
    double h = 0;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            double p = law.matrix[i * 3 + j];
            if (p > 0) h -= law.stationary[i] * p * std::log(p);
        }
    CHECK(h == doctest::Approx(std::log(lo)).epsilon(1e-9));
}

TEST_CASE("PCA law validation") {
    PCASpec bad{{make_identity(2), make_elementary(184)}, IndependentLaw{{0.5, 0.6}}};
    CHECK_THROWS_AS(bad.validate(), PreconditionError);
    MarkovLaw ml{{0.5, 0.5, 0.5, 0.5}, {0.3, 0.7}, {}};
    PCASpec bad2{{make_identity(2), make_elementary(184)}, ml};
    CHECK_THROWS_AS(bad2.validate(), PreconditionError);
    MarkovLaw ml2{{0.5, 0.5, 1.0, 0.0}, {2.0 / 3, 1.0 / 3}, {{0, 1}}};
    PCASpec bad3{{make_identity(2), make_elementary(184)}, ml2};
    CHECK_THROWS_AS(bad3.validate(), PreconditionError);
}

}
