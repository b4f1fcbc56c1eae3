#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "partlab/defects.hpp"
#include "partlab/measures.hpp"
#include "partlab/particles.hpp"
#include "partlab/rules.hpp"

namespace partlab {

inline constexpr const char* tool_version = "0.1.0";

// Flat key=value configuration. `include = file` pulls in another file
// (relative to the including one); later keys win.
class ExperimentConfig {
public:
    static ExperimentConfig parse(const std::string& text, const std::filesystem::path& base = {});
    static ExperimentConfig load(const std::filesystem::path& file);

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    void override_with(const std::string& assignment);  // "key=value"
    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get(const std::string& key) const;  // throws ConfigError when missing
    std::string get(const std::string& key, const std::string& fallback) const;
    long get_int(const std::string& key, long fallback) const;
    double get_double(const std::string& key, double fallback) const;

    const std::map<std::string, std::string>& values() const { return values_; }
    std::string serialize() const;  // sorted key=value lines
    std::string hash() const;       // 64-bit FNV-1a of serialize(), hex

private:
    std::map<std::string, std::string> values_;
};

MeasureSpec parse_measure(const std::string& text);
Dynamics parse_dynamics(const std::string& text);
GliderFactor parse_factor(const std::string& text);
std::vector<long> parse_grid(const std::string& text);  // "dyadic:0:12" or "1,2,4"

struct CatalogEntry {
    SystemCase sc;
    int enum_len = 0;
    CheckMode mode;
};

// Built-in particle systems by name: traffic, cyclic:N, captive:N:SEED, random-walk,
// gliders:VM:VP, line, fates, factor:NAME.
CatalogEntry builtin_system(const std::string& name, bool sabotaged = false);
std::vector<std::string> builtin_system_names();

struct RunManifest {
    std::string kind;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string version = tool_version;
    double wall_seconds = 0;
    std::vector<std::string> outputs;
    std::string text(const ExperimentConfig& config) const;
};

struct RunResult {
    int exit_code = 0;  // 0 ok, 4 check failure
    std::string summary;
    RunManifest manifest;
};

RunResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir, int threads = 1);

// P6 image, one pixel per cell and time step, scaled by an integer factor.
std::string render_ppm(const std::vector<Word>& rows, int scale = 1);
// P5 grey levels, symbol 0 white.
std::string render_pgm(const std::vector<Word>& rows, int alphabet, int scale = 1);

}  // namespace partlab
