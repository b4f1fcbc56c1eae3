#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "partlab/lattice.hpp"
#include "partlab/measures.hpp"
#include "partlab/rules.hpp"

namespace partlab {

// Partial sums S with S(0) = 0 and S(k+1) - S(k) = x_k, on [lo, hi].
struct WalkProcess {
    long lo = 0;
    std::vector<long> sums;

    long hi() const { return lo + static_cast<long>(sums.size()) - 1; }
    bool covers(long a, long b) const { return a >= lo && b <= hi(); }
    long S(long k) const { return sums[static_cast<std::size_t>(k - lo)]; }
    // Point realising the strict minimum on [a, b], if there is one.
    std::optional<long> argmin(long a, long b) const;
};

WalkProcess walk_of(const Configuration& c);

// G^t(x) read off the walk, on every cell where it is determined.
Configuration gliders_row(const WalkProcess& w, int v_minus, int v_plus, long t);

// Rule with the +1 survival condition made strict: a deliberately wrong annihilation.
LocalRule make_gliders_sabotaged(int v_minus, int v_plus);
// Shift by k cells to the right: result_i = x_{i-k}.
Configuration shift_right(const Configuration& c, long k);

struct OracleReport {
    long words = 0;
    long checks = 0;
    long mismatches = 0;
    std::string witness;
    bool pass() const { return mismatches == 0 && checks > 0; }
};

// Exhaustive check of the particle/strict-minimum equivalence and the one-step
// argmin transport, against stepping `rule` (the gliders rule by default).
OracleReport lemma_min_oracle(int v_minus, int v_plus, int max_len, int max_t, const LocalRule* rule = nullptr);

enum class Species { minus, plus };

struct EntryTimeSample {
    long n = 0;
    long value = 0;  // Tmax when censored
    bool censored = false;
    Species species = Species::minus;
};

EntryTimeSample entry_time(const WalkProcess& w, int v_minus, int v_plus, long n, long tmax, Species s);
// Reference implementation by iterating the automaton; x must cover the light cone.
EntryTimeSample entry_time_by_stepping(const Configuration& x, int v_minus, int v_plus, long n, long tmax, Species s);

struct EntryPlan {
    std::size_t samples = 1000;
    long tmax = 0;  // 0 means 64 n
    std::uint64_t seed = 1;
    int threads = 1;
};

std::vector<EntryTimeSample> entry_times(int v_minus, int v_plus, const MeasureSpec& m, long n, const EntryPlan& plan,
                                         Species s = Species::minus);
std::string entry_csv(const std::vector<EntryTimeSample>& samples);  // n,T,censored

struct LimitLaw {
    int v_minus = -1;
    int v_plus = 0;
};

double limit_cdf(const LimitLaw& law, double alpha);

struct EcdfReport {
    std::vector<double> values;  // T/n, sorted
    std::vector<bool> censored;
    std::vector<double> grid, ecdf, reference;
    double ks = 0;
    std::string csv() const;  // alpha,ecdf,reference
};

EcdfReport ecdf_report(const std::vector<EntryTimeSample>& samples, const LimitLaw& law, double alpha_max,
                       int grid_points = 2000);
double ks_between(const EcdfReport& a, const EcdfReport& b);

struct DecayPoint {
    long t = 0;
    double density = 0;
    double half_width = 0;
};

struct DecaySeries {
    std::vector<DecayPoint> points;
    double slope = 0;  // weighted log-log fit over the upper half of the grid
    double slope_se = 0;
    std::string csv() const;  // t,density,half_width
};

std::vector<long> dyadic_grid(int lo_exp, int hi_exp);
DecaySeries density_decay(int v_minus, int v_plus, const MeasureSpec& m, const std::vector<long>& t_grid,
                          const SamplingPlan& plan, Species s = Species::minus);

struct RatePoint {
    long t = 0;
    double dm = 0;
    double particles = 0;  // fraction of nonzero cells
};

struct RateSeries {
    std::vector<RatePoint> points;
    double slope = 0;        // log-log fit of dm over the upper half of the grid
    double log_slope = 0;    // fit of log(particles) against t
    bool sandwiched = false; // between t^-1/2 and t^-1/4 envelopes pinned at the grid midpoint
    std::string csv() const; // t,dm,particles
};

// d_M of the empirical law at each grid time against `target`; when `factor` is
// given the cylinders are counted on its image.
RateSeries convergence_rate(const Dynamics& dyn, const MeasureSpec& m, const Valuation& target,
                            const std::vector<long>& t_grid, int L, const SamplingPlan& plan,
                            const LocalRule* factor = nullptr);
// Same for a gliders automaton, computing G^t rows from the walk.
RateSeries convergence_rate_gliders(int v_minus, int v_plus, const MeasureSpec& m, const Valuation& target,
                                    const std::vector<long>& t_grid, int L, const SamplingPlan& plan);

// t steps of the 3-cyclic automaton through its height function, which evolves
// by a max filter of radius 1.
Configuration cyclic3_power(const Configuration& x, long t);

// Compares the (v-,v+) rule with k = v+ - v- steps of the (-1,0) rule shifted by v+.
long speed_reduction_mismatches(int v_minus, int v_plus, std::size_t cells, std::size_t samples, std::uint64_t seed);

}  // namespace partlab
