#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "partlab/error.hpp"
#include "partlab/lattice.hpp"
#include "partlab/measures.hpp"
#include "partlab/rules.hpp"

namespace partlab {

// Offsets of the images of one particle, relative to its coordinate, ascending.
class Image {
public:
    static constexpr int capacity = 8;

    void push(int off) {
        if (n_ == capacity) throw PreconditionError("particle image too large");
        off_[n_++] = static_cast<std::int8_t>(off);
    }
    int size() const { return n_; }
    bool empty() const { return n_ == 0; }
    int operator[](int i) const { return off_[static_cast<std::size_t>(i)]; }
    int front() const { return off_[0]; }
    int back() const { return off_[static_cast<std::size_t>(n_ - 1)]; }

private:
    std::array<std::int8_t, capacity> off_{};
    int n_ = 0;

    friend class PhiField;
};

// Read access to the neighbourhood of the particle at k: x and the rule
// field on [k - w + m_lo, k + w + m_hi], pi on [k - w, k + w].
class PhiView {
public:
    PhiView(const Symbol* x, const Symbol* pi, const std::uint8_t* rules, int w) : x_(x), p_(pi), r_(rules), w_(w) {}

    Symbol x(int i) const { return x_[i]; }
    Symbol p(int i) const { return p_[i]; }
    int rule(int i) const { return r_ ? r_[i] : 0; }
    int window() const { return w_; }
    const Symbol* x_ptr() const { return x_; }
    const Symbol* p_ptr() const { return p_; }

private:
    const Symbol* x_;
    const Symbol* p_;
    const std::uint8_t* r_;
    int w_;
};

using UpdateFn = std::function<Image(const PhiView&)>;

struct ParticleSystem {
    std::string name;
    std::vector<std::string> particles;  // particle code i + 1 is particles[i]
    LocalRule morphism;                  // A -> P u {0}
    UpdateFn update;
    int radius = 1;  // r: images lie in [k - r, k + r]
    int window = 1;  // w
    bool uses_rules = false;
    std::vector<std::optional<int>> speed;  // nominal speed per particle, empty when it varies

    int particle_count() const { return static_cast<int>(particles.size()); }
    int view_lo() const { return -window + morphism.min_offset(); }
    int view_hi() const { return window + morphism.max_offset(); }
};

Configuration project(const ParticleSystem& ps, const Configuration& c);

// phi evaluated over a window. `rules` (if any) is aligned with the cells of x;
// rules_lo/hi give the lattice range where it is meaningful.
class PhiField {
public:
    PhiField(const ParticleSystem& ps, const Configuration& x, std::span<const std::uint8_t> rules = {},
             long rules_lo = 0, long rules_hi = -1);

    long lo() const { return lo_; }  // phi determined on [lo, hi]
    long hi() const { return hi_; }
    bool determined(long k) const { return k >= lo_ && k <= hi_; }
    const Image& at(long k) const { return img_[static_cast<std::size_t>(k - lo_)]; }
    Symbol pi(long k) const { return pi_.at(k); }
    const Configuration& projection() const { return pi_; }

private:
    Configuration pi_;
    long lo_ = 0, hi_ = -1;
    std::vector<Image> img_;
};

enum class Tag : std::uint8_t { none, progressing, interacting, invalid };

// Tags on the range where phi is determined within r of the coordinate.
struct StepClassification {
    long lo = 0, hi = -1;
    std::vector<Tag> tags;
    Tag at(long k) const { return tags[static_cast<std::size_t>(k - lo)]; }
};

StepClassification classify_step(const ParticleSystem& ps, const PhiField& phi, const Configuration& next_pi);
StepClassification classify_step(const Dynamics& dyn, const ParticleSystem& ps, const Configuration& c, Rng& rng);

enum class Condition { locality, surjectivity, particle_control, disjunction, coalescence, count_bound };
inline constexpr int condition_count = 6;
std::string condition_name(Condition c);

struct ConditionResult {
    long checked = 0;
    long violations = 0;
    std::string witness;  // word, rule field and coordinate of the first violation
    bool pass() const { return violations == 0; }
};

struct CheckReport {
    std::string system;
    int enum_len = 0;
    std::string mode;
    long words = 0;
    std::array<ConditionResult, condition_count> results{};

    bool pass() const;
    const ConditionResult& operator[](Condition c) const { return results[static_cast<std::size_t>(c)]; }
    std::string summary() const;
};

struct CheckMode {
    enum Kind { exhaustive, constant_rules, all_rules, sampled } kind = exhaustive;
    int rule = 0;              // for constant_rules
    long samples = 0;          // for sampled
    std::uint64_t seed = 1;    // for sampled
    bool sample_rules = true;  // sampled: random rule field (else constant `rule`)
};

int sound_enum_len(const Dynamics& dyn, const ParticleSystem& ps);
CheckReport check_particle_system(const Dynamics& dyn, const ParticleSystem& ps, int enum_len, CheckMode mode = {});

// Densities measured on one region at consecutive times.
struct DensityRow {
    int t = 0;
    double D = 0, D_prog = 0, D_inter = 0;
    std::vector<double> D_p;
    double slack_total = 0;  // correction + D(x) - D_inter/(r+1) - D(F x), >= 0 when the bound holds
    double slack_species = 0;  // min over p of correction + D_p(x) + D_inter - D_p(F x)
    long violations = 0;
};

struct DensityTrace {
    std::vector<std::string> particles;
    std::vector<DensityRow> rows;  // averaged over trajectories
    long inequality_checks = 0;
    long inequality_violations = 0;
    double min_slack = 0;
    std::string csv() const;
};

DensityTrace trace_densities(const Dynamics& dyn, const ParticleSystem& ps, const MeasureSpec& m, int t_max,
                             const SamplingPlan& plan);

// Built-in systems. The returned dynamics is the automaton the system is for.
struct SystemCase {
    Dynamics dynamics;
    ParticleSystem system;
};

ParticleSystem traffic_system();
ParticleSystem traffic_system_sabotaged();
ParticleSystem cyclic_system(int n);
ParticleSystem cyclic_system_sabotaged(int n);
ParticleSystem captive_system(int n, std::span<const Symbol> f);
ParticleSystem random_walk_system();
ParticleSystem gliders_system(const LocalRule& ga, int v_minus, int v_plus);
ParticleSystem gliders_system_sabotaged(const LocalRule& ga, int v_minus, int v_plus);
ParticleSystem line_system();
ParticleSystem line_system_sabotaged();
ParticleSystem fates_system(int window = 4);
ParticleSystem fates_system_sabotaged(int window = 4);

// A factor onto a gliders automaton: pi(x)_i = f(x_i, x_{i+1}) in gliders
// codes, with phi read off the gliders dynamics of pi(x).
struct GliderFactor {
    std::string name;
    LocalRule map;  // A -> {0, +1, -1}
    int v_minus = -1, v_plus = 1;
};

GliderFactor traffic_factor();
GliderFactor cyclic3_factor();
GliderFactor captive_factor(int n, std::span<const Symbol> f);
GliderFactor product128_factor();
ParticleSystem factor_system(const GliderFactor& g);

struct FactorCheck {
    long words = 0;
    long mismatches = 0;
    std::string witness;
    bool pass() const { return mismatches == 0; }
};
// Exhaustive check of pi o F = G o pi on all words of length `len`.
FactorCheck verify_factor(const LocalRule& ca, const GliderFactor& g, int len);

}  // namespace partlab
