#include "partlab/experiments.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "partlab/error.hpp"
#include "partlab/parallel.hpp"
#include "partlab/walk.hpp"

namespace partlab {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

long to_long(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        long v = std::stol(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::logic_error&) {
        throw ConfigError("expected an integer for " + what + ", got '" + s + "'");
    }
}

double to_double(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::logic_error&) {
        throw ConfigError("expected a number for " + what + ", got '" + s + "'");
    }
}

void parse_into(std::map<std::string, std::string>& values, const std::string& text, const fs::path& base, int depth) {
    if (depth > 16) throw ConfigError("include nesting too deep");
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        auto key = trim(t.substr(0, eq)), value = trim(t.substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        if (key == "include") {
            fs::path p = base.empty() ? fs::path(value) : base / value;
            std::ifstream f(p);
            if (!f) throw ConfigError("cannot read included file " + p.string());
            std::stringstream ss;
            ss << f.rdbuf();
            parse_into(values, ss.str(), p.parent_path(), depth + 1);
        } else {
            values[key] = value;
        }
    }
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(const std::string& text, const fs::path& base) {
    ExperimentConfig c;
    parse_into(c.values_, text, base, 0);
    return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& file) {
    std::ifstream f(file);
    if (!f) throw ConfigError("cannot read config " + file.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return parse(ss.str(), file.parent_path());
}

void ExperimentConfig::override_with(const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override must look like key=value: " + assignment);
    auto key = trim(assignment.substr(0, eq));
    if (key.empty()) throw ConfigError("override with empty key");
    values_[key] = trim(assignment.substr(eq + 1));
}

std::string ExperimentConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing config key '" + key + "'");
    return it->second;
}

std::string ExperimentConfig::get(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

long ExperimentConfig::get_int(const std::string& key, long fallback) const {
    return has(key) ? to_long(get(key), key) : fallback;
}

double ExperimentConfig::get_double(const std::string& key, double fallback) const {
    return has(key) ? to_double(get(key), key) : fallback;
}

std::string ExperimentConfig::serialize() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
    return out;
}

std::string ExperimentConfig::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : serialize()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

// --- named objects -------------------------------------------------------------

MeasureSpec parse_measure(const std::string& text) {
    auto colon = text.find(':');
    auto kind = trim(text.substr(0, colon));
    auto arg = colon == std::string::npos ? std::string() : trim(text.substr(colon + 1));
    try {
        if (kind == "bernoulli") {
            std::vector<double> p;
            for (const auto& s : split(arg, ',')) p.push_back(to_double(s, "bernoulli weight"));
            return MeasureSpec(Bernoulli{p});
        }
        if (kind == "uniform") return uniform_bernoulli(static_cast<int>(to_long(arg, "uniform alphabet")));
        if (kind == "markov") return symmetric_markov(to_double(arg, "markov parameter"));
        if (kind == "glider-ber") {
            double p = to_double(arg, "glider-ber parameter");
            return MeasureSpec(Bernoulli{{1 - 2 * p, p, p}});
        }
        if (kind == "dirac") {
            auto parts = split(arg, ':');
            Word w = parse_word(parts.at(0));
            int n = parts.size() > 1 ? static_cast<int>(to_long(parts[1], "dirac alphabet"))
                                     : *std::max_element(w.begin(), w.end()) + 1;
            return MeasureSpec(PeriodicDirac{w, std::max(n, 2)});
        }
        if (kind == "product") {
            Product p;
            for (const auto& s : split(arg, '+')) p.layers.push_back(parse_measure(s));
            return MeasureSpec(std::move(p));
        }
    } catch (const PreconditionError& e) {
        throw ConfigError("bad measure '" + text + "': " + e.what());
    } catch (const std::out_of_range&) {
        throw ConfigError("bad measure '" + text + "'");
    }
    throw ConfigError("unknown measure '" + text + "'");
}

namespace {

std::vector<Symbol> captive_table(const std::vector<std::string>& parts) {
    if (parts.size() != 3) throw ConfigError("captive needs captive:N:SEED");
    int n = static_cast<int>(to_long(parts[1], "captive alphabet"));
    Rng rng(static_cast<std::uint64_t>(to_long(parts[2], "captive seed")));
    return random_captive_table(n, rng);
}

}  // namespace

Dynamics parse_dynamics(const std::string& text) {
    auto parts = split(text, ':');
    const auto& kind = parts.at(0);
    auto need = [&](std::size_t n) {
        if (parts.size() != n) throw ConfigError("wrong number of fields in rule '" + text + "'");
    };
    try {
        if (kind == "eca") {
            need(2);
            return make_elementary(static_cast<int>(to_long(parts[1], "rule number")));
        }
        if (kind == "cyclic") {
            need(2);
            return make_cyclic(static_cast<int>(to_long(parts[1], "cyclic states")));
        }
        if (kind == "identity") {
            need(2);
            return make_identity(static_cast<int>(to_long(parts[1], "alphabet")));
        }
        if (kind == "gliders") {
            need(3);
            return make_gliders(static_cast<int>(to_long(parts[1], "v_minus")), static_cast<int>(to_long(parts[2], "v_plus")));
        }
        if (kind == "captive") {
            auto f = captive_table(parts);
            return make_one_sided_captive(static_cast<int>(to_long(parts[1], "alphabet")), f);
        }
        if (kind == "random-walk") return make_random_walk_ca();
        if (kind == "fates") {
            need(2);
            return make_fates_pca(to_double(parts[1], "fates probability"));
        }
        if (kind == "line") return make_line_pca();
        if (kind == "file") {
            need(2);
            std::ifstream f(parts[1]);
            if (!f) throw ConfigError("cannot read rule file " + parts[1]);
            std::stringstream ss;
            ss << f.rdbuf();
            return LocalRule::parse(ss.str());
        }
    } catch (const PreconditionError& e) {
        throw ConfigError("bad rule '" + text + "': " + e.what());
    }
    throw ConfigError("unknown rule '" + text + "'");
}

GliderFactor parse_factor(const std::string& text) {
    auto parts = split(text, ':');
    if (parts[0] == "traffic") return traffic_factor();
    if (parts[0] == "cyclic3") return cyclic3_factor();
    if (parts[0] == "product128") return product128_factor();
    if (parts[0] == "captive") {
        auto f = captive_table(parts);
        return captive_factor(static_cast<int>(to_long(parts[1], "alphabet")), f);
    }
    throw ConfigError("unknown factor '" + text + "'");
}

std::vector<long> parse_grid(const std::string& text) {
    if (text.rfind("dyadic:", 0) == 0) {
        auto parts = split(text.substr(7), ':');
        if (parts.size() != 2) throw ConfigError("dyadic grid needs dyadic:LO:HI");
        try {
            return dyadic_grid(static_cast<int>(to_long(parts[0], "grid")), static_cast<int>(to_long(parts[1], "grid")));
        } catch (const PreconditionError& e) {
            throw ConfigError(e.what());
        }
    }
    std::vector<long> g;
    for (const auto& s : split(text, ',')) {
        long t = to_long(s, "time grid");
        if (t < 0) throw ConfigError("negative time in grid");
        g.push_back(t);
    }
    if (g.empty()) throw ConfigError("empty time grid");
    return g;
}

CatalogEntry builtin_system(const std::string& name, bool sabotaged) {
    auto parts = split(name, ':');
    const auto& kind = parts.at(0);
    auto no_fault = [&] { throw ConfigError("no fault-injected variant of " + name); };
    auto finish = [](Dynamics d, ParticleSystem ps, int len = 0, CheckMode mode = {}) {
        if (len == 0) len = sound_enum_len(d, ps);
        return CatalogEntry{SystemCase{std::move(d), std::move(ps)}, len, mode};
    };
    if (kind == "traffic")
        return finish(make_elementary(184), sabotaged ? traffic_system_sabotaged() : traffic_system(), 9);
    if (kind == "cyclic") {
        if (parts.size() != 2) throw ConfigError("cyclic system needs cyclic:N");
        int n = static_cast<int>(to_long(parts[1], "cyclic states"));
        return finish(make_cyclic(n), sabotaged ? cyclic_system_sabotaged(n) : cyclic_system(n));
    }
    if (kind == "captive") {
        if (sabotaged) no_fault();
        auto f = captive_table(parts);
        int n = static_cast<int>(to_long(parts[1], "alphabet"));
        return finish(make_one_sided_captive(n, f), captive_system(n, f));
    }
    if (kind == "random-walk") {
        if (sabotaged) no_fault();
        return finish(make_random_walk_ca(), random_walk_system());
    }
    if (kind == "gliders") {
        if (parts.size() != 3) throw ConfigError("gliders system needs gliders:VM:VP");
        int vm = static_cast<int>(to_long(parts[1], "v_minus")), vp = static_cast<int>(to_long(parts[2], "v_plus"));
        auto ga = make_gliders(vm, vp);
        auto ps = sabotaged ? gliders_system_sabotaged(ga, vm, vp) : gliders_system(ga, vm, vp);
        return finish(ga, std::move(ps));
    }
    if (kind == "line") {
        CheckMode all;
        all.kind = CheckMode::all_rules;
        return finish(make_line_pca(), sabotaged ? line_system_sabotaged() : line_system(), 13, all);
    }
    if (kind == "fates") {
        CheckMode sampled;
        sampled.kind = CheckMode::sampled;
        sampled.samples = 20000;
        return finish(make_fates_pca(0.5), sabotaged ? fates_system_sabotaged() : fates_system(), 20, sampled);
    }
    if (kind == "factor") {
        if (sabotaged) no_fault();
        if (parts.size() < 2) throw ConfigError("factor system needs factor:NAME");
        std::string rest = name.substr(7);
        auto g = parse_factor(rest);
        Dynamics d = parts[1] == "traffic"      ? Dynamics(make_elementary(184))
                     : parts[1] == "cyclic3"    ? Dynamics(make_cyclic(3))
                     : parts[1] == "product128" ? Dynamics(make_elementary(128))
                                                : parse_dynamics(rest);
        return finish(std::move(d), factor_system(g));
    }
    throw ConfigError("unknown particle system '" + name + "'");
}

std::vector<std::string> builtin_system_names() {
    return {"traffic",  "cyclic:3", "cyclic:4",         "captive:3:7",       "random-walk",        "gliders:-1:0",
            "gliders:-1:1", "line", "fates",            "factor:traffic",    "factor:cyclic3",     "factor:product128",
            "factor:captive:2:3"};
}

// --- rendering -------------------------------------------------------------------

std::string render_ppm(const std::vector<Word>& rows, int scale) {
    if (rows.empty() || rows.front().empty()) throw PreconditionError("nothing to render");
    if (scale < 1) throw PreconditionError("scale must be positive");
    static const unsigned char palette[4][3] = {{255, 255, 255}, {0, 0, 0}, {255, 0, 0}, {0, 0, 255}};
    const std::size_t w = rows.front().size();
    std::ostringstream out;
    out << "P6\n" << w * scale << ' ' << rows.size() * scale << "\n255\n";
    for (const auto& row : rows) {
        if (row.size() != w) throw PreconditionError("ragged rows");
        std::string line;
        for (Symbol s : row) {
            unsigned char rgb[3];
            if (s < 4) {
                std::copy(palette[s], palette[s] + 3, rgb);
            } else {
                auto h = mix64(s);
                for (int k = 0; k < 3; ++k) rgb[k] = static_cast<unsigned char>(60 + (h >> (8 * k)) % 160);
            }
            for (int k = 0; k < scale; ++k) line.append(reinterpret_cast<const char*>(rgb), 3);
        }
        for (int k = 0; k < scale; ++k) out << line;
    }
    return out.str();
}

std::string render_pgm(const std::vector<Word>& rows, int alphabet, int scale) {
    if (rows.empty() || rows.front().empty()) throw PreconditionError("nothing to render");
    if (scale < 1 || alphabet < 2) throw PreconditionError("bad render parameters");
    const std::size_t w = rows.front().size();
    std::ostringstream out;
    out << "P5\n" << w * scale << ' ' << rows.size() * scale << "\n255\n";
    for (const auto& row : rows) {
        if (row.size() != w) throw PreconditionError("ragged rows");
        std::string line;
        for (Symbol s : row) line.append(static_cast<std::size_t>(scale), static_cast<char>(255 - s * 255 / (alphabet - 1)));
        for (int k = 0; k < scale; ++k) out << line;
    }
    return out.str();
}

// --- runs --------------------------------------------------------------------------

std::string RunManifest::text(const ExperimentConfig& config) const {
    std::ostringstream out;
    out << "# run manifest\n# kind=" << kind << "\n# config_hash=" << config_hash << "\n# seed=" << seed
        << "\n# version=" << version << "\n# wall_seconds=" << wall_seconds << "\n# outputs=";
    for (std::size_t i = 0; i < outputs.size(); ++i) out << (i ? "," : "") << outputs[i];
    out << '\n' << config.serialize();
    return out.str();
}

namespace {

class Run {
public:
    Run(const ExperimentConfig& c, fs::path out, int threads) : c_(c), out_(std::move(out)), threads_(threads) {
        m_.kind = c.get("kind");
        m_.config_hash = c.hash();
        m_.seed = static_cast<std::uint64_t>(c.get_int("seed", 1));
        fs::create_directories(out_);
    }

    void write(const std::string& name, const std::string& body, bool csv = true) {
        std::ofstream f(out_ / name, std::ios::binary);
        if (!f) throw Error("cannot write " + (out_ / name).string());
        f << body;
        if (csv) f << "# config_hash=" << m_.config_hash << " seed=" << m_.seed << " version=" << m_.version << '\n';
        m_.outputs.push_back(name);
    }

    SamplingPlan plan(std::size_t trajectories, std::size_t cells) const {
        SamplingPlan p;
        p.trajectories = static_cast<std::size_t>(c_.get_int("trajectories", static_cast<long>(trajectories)));
        p.cells = static_cast<std::size_t>(c_.get_int("cells", static_cast<long>(cells)));
        p.seed = m_.seed;
        p.threads = threads_;
        if (p.trajectories < 1 || p.cells < 1) throw ConfigError("trajectories and cells must be positive");
        return p;
    }

    const ExperimentConfig& c_;
    fs::path out_;
    int threads_;
    RunManifest m_;
    std::string summary;
    int exit_code = 0;
};

int positive(long v, const char* what) {
    if (v < 0 || v > 1'000'000'000) throw ConfigError(std::string(what) + " out of range");
    return static_cast<int>(v);
}

void run_simulate(Run& r) {
    Dynamics dyn = parse_dynamics(r.c_.get("rule"));
    MeasureSpec m = parse_measure(r.c_.get("measure"));
    int steps = positive(r.c_.get_int("steps", 100), "steps");
    int L = positive(r.c_.get_int("L", 3), "L");
    auto ec = estimate_cylinders(dyn, m, steps, L, r.plan(1, 1000));
    r.write("cylinders.csv", ec.csv());
    r.summary = "counted cylinders up to length " + std::to_string(L) + " at t=" + std::to_string(steps);
}

void run_render(Run& r) {
    Dynamics dyn = parse_dynamics(r.c_.get("rule"));
    MeasureSpec m = parse_measure(r.c_.get("measure"));
    int steps = positive(r.c_.get_int("steps", 200), "steps");
    long cells = r.c_.get_int("cells", 200);
    int scale = positive(r.c_.get_int("scale", 1), "scale");
    if (cells < 1 || cells > 100000) throw ConfigError("cells out of range for rendering");
    Rng rng(r.m_.seed);
    auto x = sample_for_steps(m, dyn, static_cast<std::size_t>(cells), steps, rng, 0);
    std::vector<Word> rows;
    iterate(dyn, std::move(x), steps, rng, [&](int, const Configuration& c) {
        Word row;
        for (long i = 0; i < cells; ++i) row.push_back(c.at(i));
        rows.push_back(std::move(row));
    });
    if (r.c_.get("image", "ppm") == "pgm")
        r.write("spacetime.pgm", render_pgm(rows, dyn.alphabet_size(), scale), false);
    else
        r.write("spacetime.ppm", render_ppm(rows, scale), false);
    r.summary = "rendered " + std::to_string(rows.size()) + " rows";
}

void run_check(Run& r) {
    bool sabotaged = r.c_.get_int("sabotaged", 0) != 0;
    auto entry = builtin_system(r.c_.get("system"), sabotaged);
    int len = static_cast<int>(r.c_.get_int("enum_len", entry.enum_len));
    CheckMode mode = entry.mode;
    if (r.c_.has("mode")) {
        auto s = r.c_.get("mode");
        mode = CheckMode{};
        if (s == "exhaustive") mode.kind = CheckMode::exhaustive;
        else if (s == "constant") mode.kind = CheckMode::constant_rules;
        else if (s == "all") mode.kind = CheckMode::all_rules;
        else if (s == "sampled") mode.kind = CheckMode::sampled;
        else throw ConfigError("unknown check mode " + s);
    }
    mode.rule = static_cast<int>(r.c_.get_int("rule_index", mode.rule));
    mode.samples = r.c_.get_int("samples", mode.samples ? mode.samples : 20000);
    mode.seed = r.m_.seed;
    auto rep = check_particle_system(entry.sc.dynamics, entry.sc.system, len, mode);
    std::ostringstream csv;
    csv << "condition,checked,violations,witness\n";
    for (int i = 0; i < condition_count; ++i) {
        const auto& res = rep.results[static_cast<std::size_t>(i)];
        csv << condition_name(static_cast<Condition>(i)) << ',' << res.checked << ',' << res.violations << ','
            << res.witness << '\n';
    }
    r.write("check.csv", csv.str());
    r.summary = rep.summary();
    if (!rep.pass()) r.exit_code = 4;
}

SFTSpec parse_sft(const std::string& text) {
    auto parts = split(text, ':');
    try {
        if (parts[0] == "checkerboard") return checkerboard();
        if (parts[0] == "full" && parts.size() == 2) return full_shift(static_cast<int>(to_long(parts[1], "alphabet")));
        if (parts[0] == "monochrome" && parts.size() == 3)
            return monochrome(static_cast<int>(to_long(parts[2], "alphabet")),
                              static_cast<Symbol>(to_long(parts[1], "symbol")));
        if (parts[0] == "orbit" && parts.size() == 3)
            return orbit_sft(static_cast<int>(to_long(parts[2], "alphabet")), parse_word(parts[1]));
        if (parts[0] == "forbidden" && parts.size() == 3) {
            std::vector<Word> f;
            for (const auto& w : split(parts[1], ',')) f.push_back(parse_word(w));
            return SFTSpec(static_cast<int>(to_long(parts[2], "alphabet")), std::move(f));
        }
    } catch (const PreconditionError& e) {
        throw ConfigError("bad subshift '" + text + "': " + e.what());
    }
    throw ConfigError("unknown subshift '" + text + "'");
}

void run_defects(Run& r) {
    Configuration c;
    if (r.c_.has("word")) {
        Word w = parse_word(r.c_.get("word"));
        int n = static_cast<int>(r.c_.get_int("alphabet", *std::max_element(w.begin(), w.end()) + 1));
        c = Configuration(Alphabet::of(std::max(n, 2)), std::move(w), r.c_.get_int("origin", 0));
    } else {
        Dynamics dyn = parse_dynamics(r.c_.get("rule"));
        MeasureSpec m = parse_measure(r.c_.get("measure"));
        int steps = positive(r.c_.get_int("steps", 0), "steps");
        Rng rng(r.m_.seed);
        auto x = sample_for_steps(m, dyn, static_cast<std::size_t>(r.c_.get_int("cells", 200)), steps, rng, 0);
        c = iterate(dyn, std::move(x), steps, rng);
    }
    DefectReading reading;
    DefectField field;
    if (r.c_.has("domains")) {
        std::vector<SFTSpec> doms;
        for (const auto& s : split(r.c_.get("domains"), ';')) doms.push_back(parse_sft(s));
        auto d = make_decomposition(std::move(doms));
        field = defect_field(d.domains, c);
        reading = classify_interfaces(d, c);
    } else {
        auto sft = parse_sft(r.c_.get("sft"));
        auto period = shift_phases(compute_period(sft), static_cast<int>(r.c_.get_int("phase_shift", 0)));
        field = defect_field(sft, c);
        reading = classify_dislocations(sft, period, c);
    }
    std::ostringstream f;
    f << "cell,value,saturated\n";
    for (std::size_t i = 0; i < field.values.size(); ++i)
        f << field.origin + static_cast<long>(i) << ',' << field.values[i] << ',' << (field.saturated[i] ? 1 : 0) << '\n';
    r.write("field.csv", f.str());
    r.write("defects.csv", reading.csv());
    r.summary = std::to_string(reading.positions.size()) + " defects";
}

std::pair<int, int> speeds(const Run& r) {
    if (r.c_.has("rule")) {
        // only a gliders automaton has a walk to read entry times from
        auto parts = split(r.c_.get("rule"), ':');
        if (parts.size() != 3 || parts[0] != "gliders")
            throw FeasibilityError("rule '" + r.c_.get("rule") + "' is not a gliders automaton");
        return {static_cast<int>(to_long(parts[1], "v_minus")), static_cast<int>(to_long(parts[2], "v_plus"))};
    }
    return {static_cast<int>(r.c_.get_int("v_minus", -1)), static_cast<int>(r.c_.get_int("v_plus", 0))};
}

void run_entry(Run& r) {
    auto [vm, vp] = speeds(r);
    MeasureSpec m = parse_measure(r.c_.get("measure", "glider-ber:0.5"));
    long n = r.c_.get_int("n", 256);
    EntryPlan plan;
    plan.samples = static_cast<std::size_t>(r.c_.get_int("samples", 1000));
    plan.tmax = r.c_.get_int("tmax", 0);
    plan.seed = r.m_.seed;
    plan.threads = r.threads_;
    Species s = r.c_.get("species", "minus") == "plus" ? Species::plus : Species::minus;
    auto samples = entry_times(vm, vp, m, n, plan, s);
    LimitLaw law = s == Species::minus ? LimitLaw{vm, vp} : LimitLaw{-vp, -vm};
    auto rep = ecdf_report(samples, law, r.c_.get_double("alpha_max", 16.0),
                           static_cast<int>(r.c_.get_int("grid_points", 400)));
    r.write("entry.csv", entry_csv(samples));
    r.write("ecdf.csv", rep.csv());
    std::ostringstream s2;
    s2 << "KS distance to the limit law " << rep.ks;
    r.summary = s2.str();
}

void run_density(Run& r) {
    MeasureSpec m = parse_measure(r.c_.get("measure", "glider-ber:0.5"));
    if (r.c_.has("system")) {
        auto entry = builtin_system(r.c_.get("system"));
        int tmax = positive(r.c_.get_int("steps", 32), "steps");
        auto tr = trace_densities(entry.sc.dynamics, entry.sc.system, m, tmax, r.plan(10, 2000));
        r.write("densities.csv", tr.csv());
        r.summary = std::to_string(tr.inequality_violations) + " violations in " + std::to_string(tr.inequality_checks) +
                    " inequality checks";
        if (tr.inequality_violations > 0) r.exit_code = 4;
        return;
    }
    auto [vm, vp] = speeds(r);
    Species s = r.c_.get("species", "minus") == "plus" ? Species::plus : Species::minus;
    auto d = density_decay(vm, vp, m, parse_grid(r.c_.get("t_grid", "dyadic:0:8")), r.plan(10, 10000), s);
    r.write("density.csv", d.csv());
    std::ostringstream out;
    out << "log-log slope " << d.slope << " +- " << 2 * d.slope_se;
    r.summary = out.str();
}

void run_convergence(Run& r) {
    MeasureSpec m = parse_measure(r.c_.get("measure"));
    int L = positive(r.c_.get_int("L", 4), "L");
    auto target = exact_cylinders(parse_measure(r.c_.get("target")), L);
    auto grid = parse_grid(r.c_.get("t_grid", "dyadic:0:8"));
    RateSeries rs;
    if (r.c_.has("rule")) {
        Dynamics dyn = parse_dynamics(r.c_.get("rule"));
        std::optional<GliderFactor> g;
        if (r.c_.has("factor")) g = parse_factor(r.c_.get("factor"));
        rs = convergence_rate(dyn, m, target, grid, L, r.plan(10, 5000), g ? &g->map : nullptr);
    } else {
        auto [vm, vp] = speeds(r);
        rs = convergence_rate_gliders(vm, vp, m, target, grid, L, r.plan(10, 10000));
    }
    r.write("rate.csv", rs.csv());
    std::ostringstream out;
    out << "fitted exponent " << rs.slope << (rs.sandwiched ? ", within envelopes" : ", outside envelopes");
    r.summary = out.str();
}

void run_monitor(Run& r) {
    Dynamics dyn = parse_dynamics(r.c_.get("rule"));
    MeasureSpec m = parse_measure(r.c_.get("measure"));
    auto grid = parse_grid(r.c_.get("t_grid", "dyadic:0:8"));
    std::vector<std::vector<Word>> sets;
    std::vector<std::string> names;
    for (const auto& s : split(r.c_.get("patterns"), ';')) {
        std::vector<Word> set;
        for (const auto& w : split(s, '|')) set.push_back(parse_word(w));
        sets.push_back(std::move(set));
        names.push_back(s);
    }
    auto plan = r.plan(4, 5000);
    long T = *std::max_element(grid.begin(), grid.end());
    if (T > 1'000'000) throw FeasibilityError("time grid too long");
    std::size_t extra = 0;
    for (const auto& set : sets) extra = std::max(extra, set.front().size());
    std::vector<std::vector<double>> f(plan.trajectories, std::vector<double>(grid.size() * sets.size()));
    const Rng master(plan.seed);
    parallel_for(plan.trajectories, plan.threads, [&](std::size_t j) {
        Rng rng = master.split(j);
        auto x = sample_for_steps(m, dyn, plan.cells, static_cast<int>(T), rng, extra);
        iterate(dyn, std::move(x), static_cast<int>(T), rng, [&](int t, const Configuration& c) {
            for (std::size_t g = 0; g < grid.size(); ++g)
                if (grid[g] == t)
                    for (std::size_t k = 0; k < sets.size(); ++k) f[j][g * sets.size() + k] = freq(sets[k], c).value();
        });
    });
    std::ostringstream csv;
    csv << "t,pattern,freq,half_width\n";
    for (std::size_t g = 0; g < grid.size(); ++g)
        for (std::size_t k = 0; k < sets.size(); ++k) {
            double mean = 0, var = 0;
            for (const auto& row : f) mean += row[g * sets.size() + k];
            mean /= static_cast<double>(f.size());
            for (const auto& row : f) var += std::pow(row[g * sets.size() + k] - mean, 2);
            double hw = f.size() > 1 ? 2 * std::sqrt(var / static_cast<double>(f.size() - 1) / static_cast<double>(f.size())) : 0;
            csv << grid[g] << ',' << names[k] << ',' << mean << ',' << hw << '\n';
        }
    r.write("monitor.csv", csv.str());

    double share_min = r.c_.get_double("share_threshold", 0.99), floor = r.c_.get_double("density_floor", 1e-3);
    std::vector<double> last(sets.size());
    for (const auto& row : f)
        for (std::size_t k = 0; k < sets.size(); ++k) last[k] += row[(grid.size() - 1) * sets.size() + k];
    double total = 0;
    for (auto& v : last) total += v /= static_cast<double>(f.size());
    std::string verdict = "none";
    std::ostringstream vc;
    vc << "pattern,freq,share\n";
    for (std::size_t k = 0; k < sets.size(); ++k) {
        double share = total > 0 ? last[k] / total : 0;
        vc << names[k] << ',' << last[k] << ',' << share << '\n';
        if (total >= floor && share > share_min) verdict = names[k];
    }
    if (total >= floor && verdict == "none") verdict = "mixed";
    vc << "verdict," << verdict << ",\n";
    r.write("verdict.csv", vc.str());
    r.summary = "verdict " + verdict;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& config, const fs::path& out_dir, int threads) {
    auto start = std::chrono::steady_clock::now();
    Run r(config, out_dir, threads);
    const auto& kind = r.m_.kind;
    if (kind == "simulate") run_simulate(r);
    else if (kind == "render") run_render(r);
    else if (kind == "check-system") run_check(r);
    else if (kind == "defects") run_defects(r);
    else if (kind == "entry-time") run_entry(r);
    else if (kind == "density") run_density(r);
    else if (kind == "convergence") run_convergence(r);
    else if (kind == "qualitative-monitor") run_monitor(r);
    else throw ConfigError("unknown experiment kind '" + kind + "'");
    r.m_.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ofstream mf(out_dir / "manifest.txt", std::ios::binary);
    mf << r.m_.text(config);
    return RunResult{r.exit_code, r.summary, r.m_};
}

}  // namespace partlab
