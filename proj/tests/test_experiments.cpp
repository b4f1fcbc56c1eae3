#include "doctest.h"

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "partlab/error.hpp"
#include "partlab/experiments.hpp"

using namespace partlab;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() / ("partlab-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

ExperimentConfig config(const std::string& text) { return ExperimentConfig::parse(text); }

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("config round-trips through its text form") {
    auto c = config("# comment\nkind = simulate\nrule=eca:184\n\nmeasure = bernoulli:0.6,0.4\nsteps=12\n");
    CHECK(c.get("rule") == "eca:184");
    CHECK(c.get_int("steps", 0) == 12);
    auto again = ExperimentConfig::parse(c.serialize());
    CHECK(again.values() == c.values());
    CHECK(again.hash() == c.hash());
    auto changed = c;
    changed.override_with("steps=13");
    CHECK(changed.hash() != c.hash());
    CHECK(c.hash().size() == 16);
}

TEST_CASE("config errors") {
    CHECK_THROWS_AS(config("no equals sign"), ConfigError);
    CHECK_THROWS_AS(config("= value"), ConfigError);
    auto c = config("steps = ten");
    CHECK_THROWS_AS(c.get_int("steps", 0), ConfigError);
    CHECK_THROWS_AS(c.get("missing"), ConfigError);
    CHECK(c.get("missing", "x") == "x");
    CHECK_THROWS_AS(c.override_with("novalue"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::load("/nonexistent/file.cfg"), ConfigError);
}

TEST_CASE("includes resolve relative to the including file and later keys win") {
    TempDir dir;
    fs::create_directories(dir.path / "sub");
    std::ofstream(dir.path / "sub" / "base.cfg") << "rule = eca:184\nsteps = 5\n";
    std::ofstream(dir.path / "main.cfg") << "include = sub/base.cfg\nsteps = 7\n";
    auto c = ExperimentConfig::load(dir.path / "main.cfg");
    CHECK(c.get("rule") == "eca:184");
    CHECK(c.get_int("steps", 0) == 7);
    std::ofstream(dir.path / "loop.cfg") << "include = loop.cfg\n";
    CHECK_THROWS_AS(ExperimentConfig::load(dir.path / "loop.cfg"), ConfigError);
}

TEST_CASE("spec parsers") {
    CHECK(parse_measure("bernoulli:0.6,0.4").alphabet_size() == 2);
    CHECK(parse_measure("uniform:3").alphabet_size() == 3);
    CHECK(parse_measure("glider-ber:0.2").cylinder(Word{1}) == doctest::Approx(0.2));
    CHECK(parse_measure("dirac:01").cylinder(parse_word("01")) == doctest::Approx(0.5));
    CHECK(parse_measure("product:uniform:2+bernoulli:0.5,0.5").alphabet_size() == 4);
    CHECK(parse_measure("markov:0.7").cylinder(parse_word("00")) == doctest::Approx(0.35));
    CHECK_THROWS_AS(parse_measure("gaussian:1"), ConfigError);
    CHECK_THROWS_AS(parse_measure("bernoulli:0.6,0.6"), Error);

    CHECK(*parse_dynamics("eca:184").rule() == make_elementary(184));
    CHECK(*parse_dynamics("gliders:-1:1").rule() == make_gliders(-1, 1));
    CHECK(parse_dynamics("fates:0.75").probabilistic());
    CHECK(parse_dynamics("line").probabilistic());
    CHECK(parse_dynamics("random-walk").alphabet_size() == 4);
    CHECK_THROWS_AS(parse_dynamics("eca:x"), ConfigError);
    CHECK_THROWS_AS(parse_dynamics("teleport"), ConfigError);

    CHECK(parse_grid("dyadic:0:3") == std::vector<long>{1, 2, 4, 8});
    CHECK(parse_grid("1, 3,9") == std::vector<long>{1, 3, 9});
    CHECK_THROWS_AS(parse_grid("1,a"), ConfigError);
    CHECK(parse_factor("traffic").v_plus == 1);
    CHECK_THROWS_AS(builtin_system("nonsense"), ConfigError);
    CHECK_THROWS_AS(builtin_system("random-walk", true), ConfigError);
}

TEST_CASE("rule files") {
    TempDir dir;
    std::ofstream(dir.path / "r.rule") << make_cyclic(4).serialize();
    CHECK(*parse_dynamics("file:" + (dir.path / "r.rule").string()).rule() == make_cyclic(4));
}

TEST_CASE("check-system run") {
    TempDir dir;
    auto ok = run_experiment(config("kind=check-system\nsystem=traffic\n"), dir.path / "ok");
    CHECK(ok.exit_code == 0);
    auto csv = slurp(dir.path / "ok" / "check.csv");
    CHECK(csv.rfind("condition,checked,violations,witness\n", 0) == 0);
    CHECK(csv.find("# config_hash=" + ok.manifest.config_hash) != std::string::npos);
    auto bad = run_experiment(config("kind=check-system\nsystem=traffic\nsabotaged=1\n"), dir.path / "bad");
    CHECK(bad.exit_code == 4);
    CHECK_THROWS_AS(run_experiment(config("kind=check-system\nsystem=traffic\nenum_len=5\n"), dir.path / "short"),
                    PreconditionError);
}

TEST_CASE("entry times need a gliders automaton") {
    TempDir dir;
    CHECK_THROWS_AS(run_experiment(config("kind=entry-time\nrule=identity:3\n"), dir.path), FeasibilityError);
    auto r = run_experiment(config("kind=entry-time\nrule=gliders:-1:0\nn=16\nsamples=50\n"), dir.path);
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(dir.path / "entry.csv"));
    CHECK(fs::exists(dir.path / "ecdf.csv"));
}

TEST_CASE("unknown kinds are config errors") {
    TempDir dir;
    CHECK_THROWS_AS(run_experiment(config("kind=dance\n"), dir.path), ConfigError);
    CHECK_THROWS_AS(run_experiment(config("rule=eca:1\n"), dir.path), ConfigError);
}

TEST_CASE("palette") {
    auto img = render_ppm({Word{0, 1, 2, 3}});
    std::string header = "P6\n4 1\n255\n";
    REQUIRE(img.size() == header.size() + 12);
    CHECK(img.substr(0, header.size()) == header);
    std::string px = img.substr(header.size());
    auto rgb = [&](int i) {
        return std::vector<int>{static_cast<unsigned char>(px[static_cast<std::size_t>(3 * i)]),
                                static_cast<unsigned char>(px[static_cast<std::size_t>(3 * i + 1)]),
                                static_cast<unsigned char>(px[static_cast<std::size_t>(3 * i + 2)])};
    };
    CHECK(rgb(0) == std::vector<int>{255, 255, 255});
    CHECK(rgb(1) == std::vector<int>{0, 0, 0});
    CHECK(rgb(2) == std::vector<int>{255, 0, 0});
    CHECK(rgb(3) == std::vector<int>{0, 0, 255});
    auto big = render_ppm({Word{0, 1}, Word{1, 0}}, 3);
    CHECK(big.rfind("P6\n6 6\n255\n", 0) == 0);
    auto grey = render_pgm({Word{0, 1, 2}}, 3);
    CHECK(grey.rfind("P5\n3 1\n255\n", 0) == 0);
    CHECK(static_cast<unsigned char>(grey[grey.size() - 3]) == 255);
    CHECK(static_cast<unsigned char>(grey.back()) == 0);
}

TEST_CASE("renders") {
    TempDir dir;
    auto cfg = config("kind=render\nrule=eca:184\nmeasure=uniform:2\nsteps=30\ncells=40\nseed=3\n");
    run_experiment(cfg, dir.path / "a");
    run_experiment(cfg, dir.path / "b");
    auto a = slurp(dir.path / "a" / "spacetime.ppm");
    CHECK(a.rfind("P6\n40 31\n255\n", 0) == 0);
    CHECK(a == slurp(dir.path / "b" / "spacetime.ppm"));

    // a rule fixing 0...0 gives a blank image
    run_experiment(config("kind=render\nrule=cyclic:3\nmeasure=dirac:0:3\nsteps=10\ncells=10\n"), dir.path / "c");
    auto c = slurp(dir.path / "c" / "spacetime.ppm");
    auto body = c.substr(std::string("P6\n10 11\n255\n").size());
    CHECK(body == std::string(body.size(), static_cast<char>(255)));

    // -1 particles of the (-1,0) gliders travel one cell left per step
    run_experiment(config("kind=render\nrule=gliders:-1:0\nmeasure=dirac:0:3\nsteps=5\ncells=12\n"), dir.path / "d");
    CHECK(fs::exists(dir.path / "d" / "spacetime.ppm"));
}

TEST_CASE("defects run") {
    TempDir dir;
    auto r = run_experiment(config("kind=defects\nword=11111111000002222200000000\norigin=-5\nalphabet=3\n"
                                   "domains=monochrome:0:3;monochrome:1:3;monochrome:2:3\n"),
                            dir.path);
    CHECK(r.exit_code == 0);
    auto csv = slurp(dir.path / "defects.csv");
    CHECK(csv.rfind("position,left,right\n2,1,0\n7,0,2\n12,2,0\n", 0) == 0);
}

TEST_CASE("reruns and thread counts give identical csv bytes") {
    TempDir dir;
    std::vector<std::string> cfgs = {
        "kind=simulate\nrule=fates:0.75\nmeasure=uniform:2\nsteps=16\nL=3\ntrajectories=4\ncells=800\nseed=9\n",
        "kind=density\nv_minus=-1\nv_plus=0\nt_grid=dyadic:0:5\ntrajectories=4\ncells=2000\n",
        "kind=density\nsystem=cyclic:3\nmeasure=uniform:3\nsteps=8\ntrajectories=3\ncells=500\n",
        "kind=convergence\nrule=eca:128\nfactor=product128\nmeasure=bernoulli:0.3,0.7\ntarget=dirac:0:3\nL=3\n"
        "t_grid=1,2,4\ntrajectories=3\ncells=1000\n",
        "kind=qualitative-monitor\nrule=eca:184\nmeasure=bernoulli:0.6,0.4\npatterns=00;11\nt_grid=dyadic:0:5\n"
        "trajectories=3\ncells=1000\n",
        "kind=entry-time\nv_minus=-1\nv_plus=1\nn=32\nsamples=100\n"};
    int i = 0;
    for (const auto& text : cfgs) {
        CAPTURE(text);
        auto c = config(text);
        auto base = dir.path / std::to_string(i++);
        auto a = run_experiment(c, base / "a", 1);
        auto b = run_experiment(c, base / "b", 3);
        auto m = run_experiment(ExperimentConfig::load(base / "a" / "manifest.txt"), base / "m", 2);
        CHECK(a.exit_code == 0);
        for (const auto& f : a.manifest.outputs) {
            auto bytes = slurp(base / "a" / f);
            CHECK(bytes == slurp(base / "b" / f));
            CHECK(bytes == slurp(base / "m" / f));
            CHECK(bytes.find("# config_hash=" + c.hash()) != std::string::npos);
        }
    }
}

TEST_CASE("monitor verdict") {
    TempDir dir;
    auto r = run_experiment(config("kind=qualitative-monitor\nrule=eca:184\nmeasure=bernoulli:0.6,0.4\npatterns=00;11\n"
                                   "t_grid=dyadic:8:10\ntrajectories=4\ncells=4000\n"),
                            dir.path);
    CHECK(r.summary == "verdict 00");
    auto v = slurp(dir.path / "verdict.csv");
    CHECK(v.rfind("pattern,freq,share\n", 0) == 0);
}

}
