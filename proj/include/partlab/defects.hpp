#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "partlab/lattice.hpp"

namespace partlab {

// Subshift of finite type given by forbidden words.
class SFTSpec {
public:
    SFTSpec(int alphabet, std::vector<Word> forbidden);

    int alphabet() const { return alphabet_; }
    const std::vector<Word>& forbidden() const { return forbidden_; }
    // Length of the longest forbidden word (1 when there is none).
    int order() const { return order_; }

    // Membership in the language: no forbidden factor and extendable on both sides.
    bool admissible(std::span<const Symbol> u) const;
    bool nonempty() const;
    // All words of the language of a given length.
    std::vector<Word> words(int len) const;

    // de Bruijn graph on words of length order-1.
    std::size_t vertex_count() const { return vertices_.size(); }
    const Word& vertex(std::size_t i) const { return vertices_[i]; }
    std::size_t vertex_of(std::span<const Symbol> block) const;  // npos if not a vertex
    bool essential(std::size_t v) const { return fwd_[v] && bwd_[v]; }
    bool extends_left(std::size_t v) const { return bwd_[v]; }
    bool extends_right(std::size_t v) const { return fwd_[v]; }
    std::span<const std::size_t> successors(std::size_t v) const { return succ_[v]; }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    int alphabet_;
    std::vector<Word> forbidden_;
    int order_ = 1;
    std::vector<Word> vertices_;
    std::vector<std::vector<std::size_t>> succ_;
    std::vector<bool> fwd_, bwd_;

    bool avoids(std::span<const Symbol> u) const;
};

SFTSpec full_shift(int alphabet);
// Single configuration classes: the constant word a, or the orbit of ^oo u ^oo.
SFTSpec monochrome(int alphabet, Symbol a);
SFTSpec orbit_sft(int alphabet, const Word& u);
SFTSpec checkerboard();

struct PeriodData {
    int period = 1;
    std::vector<int> phase;  // per de Bruijn vertex, in Z/P; -1 for non-essential vertices
};

// Throws PreconditionError if the essential graph is not strongly connected.
PeriodData compute_period(const SFTSpec& sft);
// Relabels phases by adding `shift` (the labelling of the partition is a convention).
PeriodData shift_phases(PeriodData d, int shift);
// Checks the defining property of the phase partition on L_r.
bool partition_consistent(const SFTSpec& sft, const PeriodData& d);

struct Decomposition {
    std::vector<SFTSpec> domains;
    int alpha = 1;  // languages of the domains are disjoint at this length
};

// Smallest alpha <= max_alpha for which the domain languages are pairwise disjoint.
Decomposition make_decomposition(std::vector<SFTSpec> domains, int max_alpha = 12);

struct DefectField {
    long origin = 0;  // lattice coordinate of values[0]
    std::vector<int> values;
    std::vector<bool> saturated;  // the window hit the edge of the exact region
};

// Largest admissible window [k - ceil(n/2) + 1, k + floor(n/2)] for each exact cell.
DefectField defect_field(std::span<const SFTSpec> union_of, const Configuration& c);
DefectField defect_field(const SFTSpec& sft, const Configuration& c);

// Cells whose field value is a (non-strict) local minimum and not saturated.
std::vector<long> defect_positions(const DefectField& f);

struct DefectReading {
    std::vector<long> positions;
    std::vector<int> left, right;  // domain indices or local phases
    std::string label(std::size_t i) const { return std::to_string(left[i]) + "-" + std::to_string(right[i]); }
    std::string csv() const;  // position,left,right
};

DefectReading classify_interfaces(const Decomposition& d, const Configuration& c);
DefectReading classify_dislocations(const SFTSpec& sft, const PeriodData& period, const Configuration& c);

}  // namespace partlab
