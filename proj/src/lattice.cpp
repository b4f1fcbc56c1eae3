#include "partlab/lattice.hpp"

#include <algorithm>

#include "partlab/error.hpp"

namespace partlab {

Alphabet Alphabet::of(int n) {
    if (n < 1 || n > 256) throw PreconditionError("alphabet size must be in [1,256]");
    return Alphabet{n, {}};
}

std::string Alphabet::name(Symbol s) const {
    if (s < names.size()) return names[s];
    return std::to_string(static_cast<int>(s));
}

Configuration::Configuration(Alphabet alphabet, Word cells, long origin)
    : alphabet_(std::move(alphabet)), cells_(std::move(cells)), origin_(origin) {
    exact_lo_ = origin_;
    exact_hi_ = origin_ + size() - 1;
    validate();
}

Configuration::Configuration(Alphabet alphabet, Word cells, long origin, long exact_lo, long exact_hi)
    : alphabet_(std::move(alphabet)), cells_(std::move(cells)), origin_(origin), exact_lo_(exact_lo),
      exact_hi_(exact_hi) {
    validate();
}

void Configuration::validate() const {
    if (cells_.empty()) throw PreconditionError("configuration window is empty");
    if (exact_lo_ > exact_hi_) throw PreconditionError("exact region is empty");
    if (exact_lo_ < first() || exact_hi_ > last()) throw PreconditionError("exact region exceeds window");
    for (Symbol s : cells_)
        if (s >= alphabet_.size) throw PreconditionError("cell value outside alphabet");
}

Configuration shrink_exact(const Configuration& c, int left, int right) {
    if (left < 0 || right < 0) throw PreconditionError("negative shrink");
    long lo = c.exact_lo() + left, hi = c.exact_hi() - right;
    if (lo > hi) throw FeasibilityError("exact region exhausted");
    auto cells = c.cells();
    return Configuration(c.alphabet(), Word(cells.begin(), cells.end()), c.origin(), lo, hi);
}

Configuration shrink_exact(const Configuration& c, int r) {
    if (r > 0 && c.exact_width() <= 2L * r) throw FeasibilityError("exact region exhausted");
    return shrink_exact(c, r, r);
}

Frequency freq(std::span<const Symbol> pattern, const Configuration& c) {
    return freq(std::vector<Word>{Word(pattern.begin(), pattern.end())}, c);
}

Frequency freq(const std::vector<Word>& patterns, const Configuration& c) {
    if (patterns.empty()) throw PreconditionError("empty pattern set");
    std::size_t len = patterns.front().size();
    if (len == 0) throw PreconditionError("empty pattern");
    for (const auto& p : patterns)
        if (p.size() != len) throw PreconditionError("patterns in a set must share a length");
    auto cells = c.exact_cells();
    if (cells.size() < len) throw PreconditionError("pattern longer than exact region");
    Frequency f;
    f.positions = static_cast<long>(cells.size() - len + 1);
    for (std::size_t i = 0; i + len <= cells.size(); ++i) {
        auto window = cells.subspan(i, len);
        for (const auto& p : patterns)
            if (std::equal(p.begin(), p.end(), window.begin())) {
                ++f.count;
                break;
            }
    }
    return f;
}

Word parse_word(const std::string& text) {
    Word w;
    for (char ch : text) {
        if (ch >= '0' && ch <= '9')
            w.push_back(static_cast<Symbol>(ch - '0'));
        else if (ch >= 'a' && ch <= 'z')
            w.push_back(static_cast<Symbol>(10 + ch - 'a'));
        else if (ch != ' ' && ch != ',')
            throw PreconditionError(std::string("bad symbol '") + ch + "' in word");
    }
    return w;
}

std::string format_word(std::span<const Symbol> w) {
    std::string s;
    for (Symbol x : w) s.push_back(x < 10 ? static_cast<char>('0' + x) : static_cast<char>('a' + x - 10));
    return s;
}

}  // namespace partlab
