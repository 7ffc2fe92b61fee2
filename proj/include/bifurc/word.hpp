#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bifurc/rng.hpp"

namespace bifurc {

// A word in the free monoid over the generator alphabet. Letters are signed
// 1-based generator indices: +i means g_i, -i means g_i^{-1}. No free
// reduction ever happens; the word length is the raw letter count.
struct Word {
    std::vector<std::int32_t> letters;

    std::size_t length() const { return letters.size(); }
    bool empty() const { return letters.empty(); }

    Word concat(const Word& other) const {
        Word w = *this;
        w.letters.insert(w.letters.end(), other.letters.begin(), other.letters.end());
        return w;
    }

    // reversed-inverted word: (g h)^{-1} = h^{-1} g^{-1}
    Word inverse() const {
        Word w;
        w.letters.reserve(letters.size());
        for (auto it = letters.rbegin(); it != letters.rend(); ++it) w.letters.push_back(-*it);
        return w;
    }

    bool operator==(const Word& other) const { return letters == other.letters; }
    bool operator<(const Word& other) const { return letters < other.letters; }
};

// token string, lowercase = generator, uppercase = inverse, e.g. "a b A"
std::string format_word(const Word& w, const std::vector<std::string>& gen_names);
Word parse_word(const std::string& text, const std::vector<std::string>& gen_names);

// Finite-support step distribution on the group. Weights are validated to sum
// to 1; duplicate atoms are merged on construction.
class StepMeasure {
public:
    StepMeasure(std::vector<std::pair<Word, double>> atoms);

    const std::vector<std::pair<Word, double>>& atoms() const { return atoms_; }
    bool is_symmetric() const { return symmetric_; }

    // mu-check: same weights on inverted atoms
    StepMeasure reversed() const;

    // single draw of one atom index
    std::size_t draw_atom(SplitMix64& rng) const;

    // concatenation of n independent draws, deterministic in (seed-derived) rng
    Word sample_word(std::size_t n, SplitMix64& rng) const;

private:
    std::vector<std::pair<Word, double>> atoms_;
    std::vector<double> cumulative_;
    bool symmetric_ = false;
};

// weight 1/(2k) on each generator and each inverse
StepMeasure uniform_symmetric(std::size_t generator_count);

}  // namespace bifurc
