#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "partlab/lattice.hpp"
#include "partlab/rng.hpp"
#include "partlab/rules.hpp"

namespace partlab {

struct Bernoulli {
    std::vector<double> p;
};

// Order-k chain. Contexts are words of length k read as base-n numbers
// (first symbol most significant); matrix is contexts x symbols.
struct Markov {
    int order = 1;
    int alphabet = 2;
    std::vector<double> matrix;
    std::vector<double> stationary;
};

struct PeriodicDirac {
    Word word;
    int alphabet = 2;
};

class MeasureSpec;

// Layer 0 is the least significant digit of the composite symbol.
struct Product {
    std::vector<MeasureSpec> layers;
};

class MeasureSpec {
public:
    using Variant = std::variant<Bernoulli, Markov, PeriodicDirac, Product>;

    MeasureSpec(Bernoulli b);
    MeasureSpec(Markov m);
    MeasureSpec(PeriodicDirac d);
    MeasureSpec(Product p);

    const Variant& variant() const { return v_; }
    int alphabet_size() const { return alphabet_; }

    // Probability of the cylinder [u] at any position.
    double cylinder(std::span<const Symbol> u) const;
    // n consecutive cells of a sample.
    Word sample(std::size_t n, Rng& rng) const;

    std::string describe() const;

private:
    Variant v_;
    int alphabet_ = 1;
    void validate();
};

MeasureSpec uniform_bernoulli(int alphabet_size);
// Two-state chain ((p,1-p),(1-p,p)).
MeasureSpec symmetric_markov(double p);

// Membership of the class of measures for which the walk theorems hold. Only
// Bernoulli measures with equal +1/-1 weight are recognised; anything else
// needs the user's assertion.
struct MixTag {
    bool is_mix = false;
    std::string note;
};
MixTag mix_tag(const MeasureSpec& m, bool user_asserted = false);

// Window of n_cells + 2 margin cells; cells 0..n_cells-1 are the core.
Configuration window_sample(const MeasureSpec& m, std::size_t n_cells, std::size_t margin, std::uint64_t seed);
Configuration window_sample(const MeasureSpec& m, std::size_t n_cells, std::size_t left, std::size_t right, Rng& rng);

// Window large enough that `exact` cells survive t steps of `dyn` (plus the
// extra cells needed to read windows of length `extra + 1`).
Configuration sample_for_steps(const MeasureSpec& m, const Dynamics& dyn, std::size_t exact, int t, Rng& rng,
                               std::size_t extra = 0);

// Cylinder probabilities indexed by length then by word (base-n, first symbol
// most significant).
struct Valuation {
    int alphabet = 2;
    int max_len = 0;
    std::vector<std::vector<double>> values;  // values[n] has alphabet^n entries, n = 0..max_len

    double at(std::span<const Symbol> u) const;
};

std::size_t word_index(std::span<const Symbol> u, int alphabet);
Word word_at(std::size_t index, std::size_t len, int alphabet);

Valuation exact_cylinders(const MeasureSpec& m, int max_len);

class EmpiricalCylinders {
public:
    EmpiricalCylinders(int alphabet, int max_len);

    void add(const Configuration& c);  // counts windows inside the exact region
    void merge(const EmpiricalCylinders& o);

    int alphabet() const { return alphabet_; }
    int max_len() const { return max_len_; }
    long count(std::span<const Symbol> u) const;
    long total(int len) const { return totals_[static_cast<std::size_t>(len)]; }
    long trajectories() const { return trajectories_; }
    double freq(std::span<const Symbol> u) const;
    // 2 sigma binomial half-width using the pooled position count.
    double half_width(std::span<const Symbol> u) const;
    Valuation valuation() const;

    // word,length,count,freq,half_width
    std::string csv() const;

private:
    int alphabet_, max_len_;
    std::vector<std::vector<long>> counts_;
    std::vector<long> totals_;
    long trajectories_ = 0;
};

struct SamplingPlan {
    std::size_t trajectories = 10;
    std::size_t cells = 10000;
    std::uint64_t seed = 1;
    int threads = 1;
};

EmpiricalCylinders estimate_cylinders(const Dynamics& dyn, const MeasureSpec& m, int t, int max_len,
                                      const SamplingPlan& plan);

double dm_distance(const Valuation& a, const Valuation& b, int max_len);

// Symbols to the right (0, 1, 2, ...) and left (-1, -2, ...) of a start point,
// drawn on demand. Left extension uses the time-reversed chain.
class LazyLine {
public:
    LazyLine(const MeasureSpec& m, Rng rng);

    Symbol right();
    Symbol left();

private:
    const MeasureSpec* m_;
    Rng rng_;
    int n_ = 2;
    std::size_t phase_ = 0;
    long r_ = 0, l_ = 0;
    // Markov state: the last k symbols on each side as a context index.
    std::size_t ctx_right_ = 0, ctx_left_ = 0;
    std::size_t k_pow_ = 1;
    std::vector<double> reverse_;  // reversed transition, contexts x symbols
    Word pending_right_, pending_left_;
    bool threshold_binary_ = false;
    double p0_ = 0;
};

}  // namespace partlab
