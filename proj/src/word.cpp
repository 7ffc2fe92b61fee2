#include "bifurc/word.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <sstream>

#include "bifurc/errors.hpp"

namespace bifurc {

std::string format_word(const Word& w, const std::vector<std::string>& gen_names) {
    std::ostringstream out;
    bool first = true;
    for (std::int32_t letter : w.letters) {
        if (!first) out << ' ';
        first = false;
        std::size_t idx = static_cast<std::size_t>(std::abs(letter)) - 1;
        if (idx >= gen_names.size())
            throw Error(ErrorKind::UnknownSymbol, "letter index out of range in word");
        std::string name = gen_names[idx];
        if (letter < 0)
            for (char& c : name) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        out << name;
    }
    return out.str();
}

Word parse_word(const std::string& text, const std::vector<std::string>& gen_names) {
    Word w;
    std::istringstream in(text);
    std::string token;
    while (in >> token) {
        bool upper = std::all_of(token.begin(), token.end(), [](unsigned char c) {
            return !std::islower(c);
        });
        std::string lowered = token;
        for (char& c : lowered) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        auto it = std::find(gen_names.begin(), gen_names.end(), lowered);
        if (it == gen_names.end())
            throw Error(ErrorKind::UnknownSymbol, "unknown generator token '" + token + "'");
        auto idx = static_cast<std::int32_t>(std::distance(gen_names.begin(), it)) + 1;
        w.letters.push_back(upper ? -idx : idx);
    }
    return w;
}

StepMeasure::StepMeasure(std::vector<std::pair<Word, double>> atoms) {
    std::map<Word, double> merged;
    for (auto& [word, weight] : atoms) {
        if (!(weight > 0.0))
            throw Error(ErrorKind::Config, "step measure weights must be positive");
        merged[word] += weight;
    }
    if (merged.empty()) throw Error(ErrorKind::Config, "step measure needs at least one atom");

    double total = 0.0;
    for (auto& [word, weight] : merged) {
        atoms_.emplace_back(word, weight);
        total += weight;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw Error(ErrorKind::Config,
                    "step measure weights sum to " + std::to_string(total) + ", expected 1");

    cumulative_.reserve(atoms_.size());
    double acc = 0.0;
    for (auto& [word, weight] : atoms_) {
        acc += weight;
        cumulative_.push_back(acc);
    }
    cumulative_.back() = 1.0;

    symmetric_ = true;
    for (auto& [word, weight] : atoms_) {
        auto it = merged.find(word.inverse());
        if (it == merged.end() || std::abs(it->second - weight) > 1e-12) {
            symmetric_ = false;
            break;
        }
    }
}

StepMeasure StepMeasure::reversed() const {
    std::vector<std::pair<Word, double>> atoms;
    atoms.reserve(atoms_.size());
    for (auto& [word, weight] : atoms_) atoms.emplace_back(word.inverse(), weight);
    return StepMeasure(std::move(atoms));
}

std::size_t StepMeasure::draw_atom(SplitMix64& rng) const {
    double u = rng.next_double();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) return atoms_.size() - 1;
    return static_cast<std::size_t>(std::distance(cumulative_.begin(), it));
}

Word StepMeasure::sample_word(std::size_t n, SplitMix64& rng) const {
    Word w;
    w.letters.reserve(n);
    for (std::size_t step = 0; step < n; ++step) {
        const Word& atom = atoms_[draw_atom(rng)].first;
        w.letters.insert(w.letters.end(), atom.letters.begin(), atom.letters.end());
    }
    return w;
}

StepMeasure uniform_symmetric(std::size_t generator_count) {
    if (generator_count < 1)
        throw Error(ErrorKind::Config, "uniform_symmetric needs at least one generator");
    std::vector<std::pair<Word, double>> atoms;
    double p = 1.0 / (2.0 * static_cast<double>(generator_count));
    for (std::size_t i = 0; i < generator_count; ++i) {
        auto idx = static_cast<std::int32_t>(i) + 1;
        atoms.push_back({Word{{idx}}, p});
        atoms.push_back({Word{{-idx}}, p});
    }
    return StepMeasure(std::move(atoms));
}

}  // namespace bifurc
