#include "doctest.h"

#include <cmath>

#include "partlab/error.hpp"
#include "partlab/experiments.hpp"
#include "partlab/particles.hpp"

using namespace partlab;

namespace {

Configuration word(const char* w, int alphabet) { return Configuration(Alphabet::of(alphabet), parse_word(w)); }

CheckReport check(const std::string& name, bool sabotaged = false) {
    auto e = builtin_system(name, sabotaged);
    return check_particle_system(e.sc.dynamics, e.sc.system, e.enum_len, e.mode);
}

}  // namespace

TEST_SUITE("particles") {

TEST_CASE("projections") {
    auto p = project(traffic_system(), word("0011", 2));
    CHECK(p.at(0) == 1);  // 00 -> p01
    CHECK(p.at(1) == 0);
    CHECK(p.at(2) == 2);  // 11 -> p10
    auto alt = project(traffic_system(), word("0101010101", 2));
    for (auto s : alt.cells()) CHECK(s == 0);
    auto cyc = cyclic_system(3);
    auto q = project(cyc, word("02", 3));
    REQUIRE(q.size() == 1);
    CHECK(cyc.particles[static_cast<std::size_t>(q.at(0) - 1)] == "p02");
}

TEST_CASE("every built-in system passes") {
    for (const auto& name : builtin_system_names()) {
        CAPTURE(name);
        auto r = check(name);
        CHECK_MESSAGE(r.pass(), r.summary());
        CHECK(r[Condition::count_bound].pass());
    }
}

TEST_CASE("PCA constituents are checked rule by rule") {
    auto e = builtin_system("fates");
    for (int rule = 0; rule < 2; ++rule) {
        CheckMode m;
        m.kind = CheckMode::constant_rules;
        m.rule = rule;
        auto r = check_particle_system(e.sc.dynamics, e.sc.system, sound_enum_len(e.sc.dynamics, e.sc.system), m);
        CHECK_MESSAGE(r.pass(), r.summary());
    }
    // f1 f1 and f-1 f-1 are forbidden neighbours, so only f0 can be applied everywhere
    auto line = builtin_system("line");
    CheckMode m;
    m.kind = CheckMode::constant_rules;
    CHECK(check_particle_system(line.sc.dynamics, line.sc.system, line.enum_len, m).pass());
}

TEST_CASE("fault-injected systems fail with a witness") {
    for (const char* name : {"traffic", "cyclic:3", "cyclic:4", "gliders:-1:0", "gliders:-1:1", "line", "fates"}) {
        CAPTURE(name);
        auto r = check(name, true);
        CHECK_FALSE(r.pass());
        bool witnessed = false;
        for (const auto& c : r.results)
            if (!c.pass()) witnessed = witnessed || !c.witness.empty();
        CHECK(witnessed);
    }
    auto r = check("traffic", true);
    CHECK((!r[Condition::surjectivity].pass() || !r[Condition::particle_control].pass()));
}

TEST_CASE("empty particle set passes vacuously") {
    ParticleSystem none;
    none.name = "none";
    none.morphism = LocalRule(2, 1, {0}, {0, 0});
    none.update = [](const PhiView&) { return Image{}; };
    none.radius = 0;
    none.window = 0;
    Dynamics id(make_identity(2));
    auto r = check_particle_system(id, none, sound_enum_len(id, none));
    CHECK(r.pass());
    CHECK(r.words > 0);
}

TEST_CASE("enumeration below the sound length is refused") {
    auto e = builtin_system("traffic");
    CHECK_THROWS_AS(check_particle_system(e.sc.dynamics, e.sc.system, e.enum_len - 1), PreconditionError);
}

TEST_CASE("classify_step on gliders") {
    auto ga = make_gliders(-1, 0);
    auto ps = gliders_system(ga, -1, 0);
    Dynamics dyn(ga);
    Rng rng(1);
    auto lone = classify_step(dyn, ps, word("000010000", 3), rng);
    REQUIRE(lone.lo <= 4);
    REQUIRE(lone.hi >= 4);
    CHECK(lone.at(4) == Tag::progressing);
    CHECK(lone.at(lone.lo) == Tag::none);
    auto pair = classify_step(dyn, ps, word("000012000", 3), rng);
    CHECK(pair.at(4) == Tag::interacting);
    CHECK(pair.at(5) == Tag::interacting);
    auto empty = classify_step(dyn, ps, word("000000000", 3), rng);
    for (auto t : empty.tags) CHECK(t == Tag::none);
}

TEST_CASE("gliders densities at t = 1") {
    auto ga = make_gliders(-1, 0);
    SamplingPlan plan{20, 20000, 3, 1};
    auto tr = trace_densities(ga, gliders_system(ga, -1, 0), MeasureSpec(Bernoulli{{0.0, 0.5, 0.5}}), 2, plan);
    REQUIRE(tr.rows.size() >= 2);
    CHECK(std::abs(tr.rows[0].D - 1.0) < 1e-12);
    CHECK(std::abs(tr.rows[1].D - 0.5) < 0.01);
    CHECK(std::abs(tr.rows[1].D_p[0] - 0.25) < 0.01);
    CHECK(std::abs(tr.rows[1].D_p[1] - 0.25) < 0.01);
    CHECK(tr.inequality_violations == 0);
}

TEST_CASE("density traces") {
    SamplingPlan plan{8, 4000, 5, 1};
    auto e = builtin_system("traffic");
    auto none = trace_densities(e.sc.dynamics, e.sc.system, MeasureSpec(PeriodicDirac{parse_word("01"), 2}), 10, plan);
    for (const auto& row : none.rows) CHECK(row.D == 0.0);

    auto tr = trace_densities(e.sc.dynamics, e.sc.system, MeasureSpec(Bernoulli{{0.6, 0.4}}), 40, plan);
    CHECK(tr.inequality_violations == 0);
    CHECK(tr.inequality_checks > 0);
    double gap0 = tr.rows[0].D_p[0] - tr.rows[0].D_p[1];
    for (const auto& row : tr.rows) {
        double sum = 0;
        for (double d : row.D_p) sum += d;
        CHECK(row.D == doctest::Approx(sum).epsilon(1e-12));
        CHECK(std::abs(row.D_p[0] - row.D_p[1] - gap0) < 0.02);
    }
    for (std::size_t t = 1; t < tr.rows.size(); ++t) CHECK(tr.rows[t].D <= tr.rows[t - 1].D + 1e-3);
    CHECK(tr.csv().rfind("t,D,D_inter,D_prog", 0) == 0);
}

TEST_CASE("density inequalities hold on every built-in system") {
    SamplingPlan plan{4, 1000, 9, 1};
    for (const auto& name : builtin_system_names()) {
        CAPTURE(name);
        auto e = builtin_system(name);
        auto m = uniform_bernoulli(e.sc.dynamics.alphabet_size());
        auto tr = trace_densities(e.sc.dynamics, e.sc.system, m, 16, plan);
        CHECK(tr.inequality_violations == 0);
        CHECK(tr.min_slack >= 0);
    }
}

TEST_CASE("glider factors commute with the dynamics") {
    CHECK(verify_factor(make_elementary(184), traffic_factor(), 10).pass());
    CHECK(verify_factor(make_cyclic(3), cyclic3_factor(), 8).pass());
    CHECK(verify_factor(make_elementary(128), product128_factor(), 10).pass());
    std::vector<Symbol> f{0, 1, 0, 1};  // f(a, b) = b on two letters: a shift
    CHECK(verify_factor(make_one_sided_captive(2, f), captive_factor(2, f), 10).pass());
}

}
