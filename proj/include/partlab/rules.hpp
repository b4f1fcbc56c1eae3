#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "partlab/lattice.hpp"
#include "partlab/rng.hpp"

namespace partlab {

// Local map A^N -> B. The table is indexed by the neighbourhood values read
// in offset order, the first offset being the most significant digit.
class LocalRule {
public:
    LocalRule() = default;
    LocalRule(int input_size, int output_size, std::vector<int> offsets, std::vector<Symbol> table);

    template <class F>
    static LocalRule tabulate(int input_size, int output_size, std::vector<int> offsets, F&& f);

    int input_size() const { return in_; }
    int output_size() const { return out_; }
    std::span<const int> offsets() const { return offsets_; }
    std::span<const Symbol> table() const { return table_; }
    int min_offset() const { return offsets_.front(); }
    int max_offset() const { return offsets_.back(); }
    int radius() const;

    // `center` points at the cell being updated; neighbours are read relative to it.
    Symbol apply(const Symbol* center) const { return table_[index(center)]; }
    Symbol apply_values(std::span<const Symbol> values) const;
    std::size_t index(const Symbol* center) const {
        std::size_t idx = 0;
        for (int o : offsets_) idx = idx * static_cast<std::size_t>(in_) + center[o];
        return idx;
    }

    std::string serialize() const;
    static LocalRule parse(const std::string& text);

    bool operator==(const LocalRule&) const = default;

private:
    int in_ = 1, out_ = 1;
    std::vector<int> offsets_{0};
    std::vector<Symbol> table_{0};
    bool contiguous_ = true;

    friend Configuration step(const LocalRule& rule, const Configuration& c);
};

template <class F>
LocalRule LocalRule::tabulate(int input_size, int output_size, std::vector<int> offsets, F&& f) {
    std::size_t m = offsets.size(), total = 1;
    for (std::size_t i = 0; i < m; ++i) total *= static_cast<std::size_t>(input_size);
    std::vector<Symbol> table(total);
    Word values(m);
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t rest = idx;
        for (std::size_t j = m; j-- > 0;) {
            values[j] = static_cast<Symbol>(rest % static_cast<std::size_t>(input_size));
            rest /= static_cast<std::size_t>(input_size);
        }
        table[idx] = static_cast<Symbol>(f(std::span<const Symbol>(values)));
    }
    return LocalRule(input_size, output_size, std::move(offsets), std::move(table));
}

// Output cell i is computed wherever its whole neighbourhood lies in the window.
Configuration step(const LocalRule& rule, const Configuration& c);

struct IndependentLaw {
    std::vector<double> probabilities;
};

struct MarkovLaw {
    std::vector<double> matrix;      // row-major, rules x rules
    std::vector<double> stationary;  // left fixed point of `matrix`
    std::vector<std::pair<int, int>> forbidden;
};

struct PCASpec {
    std::vector<LocalRule> rules;
    std::variant<IndependentLaw, MarkovLaw> law;

    void validate() const;
    int min_offset() const;
    int max_offset() const;
    int alphabet_size() const { return rules.front().input_size(); }
    bool allowed_pair(int left, int right) const;
};

using RuleField = std::vector<std::uint8_t>;

RuleField sample_rule_field(const PCASpec& pca, std::size_t n, Rng& rng);
// `field[j]` is the rule applied to the j-th output cell.
Configuration apply_field(const PCASpec& pca, const Configuration& c, std::span<const std::uint8_t> field);
std::size_t output_width(const PCASpec& pca, const Configuration& c);
std::pair<Configuration, RuleField> step_pca(const PCASpec& pca, const Configuration& c, Rng& rng);

// Deterministic CA or PCA behind one interface.
class Dynamics {
public:
    Dynamics(LocalRule rule) : v_(std::move(rule)) {}
    Dynamics(PCASpec pca) : v_(std::move(pca)) {}

    bool probabilistic() const { return std::holds_alternative<PCASpec>(v_); }
    const LocalRule* rule() const { return std::get_if<LocalRule>(&v_); }
    const PCASpec* pca() const { return std::get_if<PCASpec>(&v_); }
    int min_offset() const;
    int max_offset() const;
    int radius() const { return std::max(-min_offset(), max_offset()); }
    int alphabet_size() const;

    Configuration advance(const Configuration& c, Rng& rng) const;

private:
    std::variant<LocalRule, PCASpec> v_;
};

using Observer = std::function<void(int t, const Configuration&)>;
Configuration iterate(const Dynamics& dyn, Configuration c, int t, Rng& rng, const Observer& observer = {});

// Gliders alphabet: code 0 is the empty cell, 1 is +1, 2 is -1.
inline int glider_value(Symbol s) { return s == 1 ? 1 : (s == 2 ? -1 : 0); }
inline Symbol glider_symbol(int v) { return v > 0 ? 1 : (v < 0 ? 2 : 0); }

LocalRule make_identity(int alphabet_size);
LocalRule make_elementary(int number);
LocalRule make_cyclic(int states);
LocalRule make_gliders(int v_minus, int v_plus);
// `f[a * n + b]` is f(a, b) for the neighbourhood {0, 1}.
LocalRule make_one_sided_captive(int n, std::vector<Symbol> f);
std::vector<Symbol> random_captive_table(int n, Rng& rng);
// Symbol a + 2b for layers (a, b).
LocalRule make_random_walk_ca();
PCASpec make_fates_pca(double p);
PCASpec make_line_pca();

// Max-entropy Markov law on the SFT of allowed adjacent pairs.
MarkovLaw parry_law(const std::vector<std::vector<int>>& adjacency);

}  // namespace partlab
