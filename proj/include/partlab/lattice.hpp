#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace partlab {

using Symbol = std::uint8_t;
using Word = std::vector<Symbol>;

struct Alphabet {
    int size = 2;
    std::vector<std::string> names;  // display only, may be empty

    static Alphabet of(int n);
    std::string name(Symbol s) const;
    bool operator==(const Alphabet& o) const { return size == o.size; }
};

// Finite window onto a configuration of A^Z. Cells inside [exact_lo, exact_hi]
// (lattice coordinates) agree with the infinite-lattice evolution.
class Configuration {
public:
    Configuration() = default;
    Configuration(Alphabet alphabet, Word cells, long origin = 0);
    Configuration(Alphabet alphabet, Word cells, long origin, long exact_lo, long exact_hi);

    const Alphabet& alphabet() const { return alphabet_; }
    std::span<const Symbol> cells() const { return cells_; }
    long origin() const { return origin_; }
    long size() const { return static_cast<long>(cells_.size()); }
    long first() const { return origin_; }
    long last() const { return origin_ + size() - 1; }
    long exact_lo() const { return exact_lo_; }
    long exact_hi() const { return exact_hi_; }
    long exact_width() const { return exact_hi_ - exact_lo_ + 1; }

    Symbol at(long i) const { return cells_[static_cast<std::size_t>(i - origin_)]; }
    std::span<const Symbol> exact_cells() const {
        return std::span<const Symbol>(cells_).subspan(static_cast<std::size_t>(exact_lo_ - origin_),
                                                      static_cast<std::size_t>(exact_width()));
    }
    Word exact_word() const {
        auto s = exact_cells();
        return Word(s.begin(), s.end());
    }

    bool operator==(const Configuration&) const = default;

private:
    Alphabet alphabet_;
    Word cells_;
    long origin_ = 0;
    long exact_lo_ = 0;
    long exact_hi_ = -1;

    void validate() const;
};

Configuration shrink_exact(const Configuration& c, int r);
Configuration shrink_exact(const Configuration& c, int left, int right);

struct Frequency {
    long count = 0;
    long positions = 0;
    double value() const { return positions ? static_cast<double>(count) / static_cast<double>(positions) : 0.0; }
};

Frequency freq(std::span<const Symbol> pattern, const Configuration& c);
Frequency freq(const std::vector<Word>& patterns, const Configuration& c);

Word parse_word(const std::string& text);
std::string format_word(std::span<const Symbol> w);

}  // namespace partlab
