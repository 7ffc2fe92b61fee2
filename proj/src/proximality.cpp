#include "bifurc/proximality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bifurc/errors.hpp"
#include "bifurc/parallel.hpp"
#include "bifurc/rng.hpp"

namespace bifurc {

ProximalityVerdict check_proximal(const CMatrix& m, double tol_gap) {
    if (!m.all_finite()) throw Error(ErrorKind::Convergence, "check_proximal given non-finite input");
    ProximalityVerdict verdict;
    EigenResult eig = eigen_decompose(m, false);
    std::size_t d = m.dim();
    if (d < 2) {
        verdict.is_proximal = d == 1;
        return verdict;
    }
    double m1 = std::abs(eig.values[0]);
    double m2 = std::abs(eig.values[1]);
    if (!(m1 > 0.0)) {
        verdict.gap = 0.0;
        verdict.is_proximal = false;
        return verdict;
    }
    double gap = (m2 > 0.0) ? std::log(m1 / m2) : std::numeric_limits<double>::infinity();
    if (!(gap > tol_gap)) {
        // tie within solver accuracy: conservatively not proximal
        verdict.gap = 0.0;
        verdict.is_proximal = false;
        return verdict;
    }
    verdict.gap = gap;
    verdict.is_proximal = true;

    EigenResult with_vectors = eigen_decompose(m, true);
    verdict.fix_plus = ProjPoint(with_vectors.vectors[0]);
    // repelling hyperplane = kernel of the rank-1 limit, cut out by the top
    // left eigenvector
    EigenResult left = eigen_decompose(m.transpose(), true);
    verdict.fix_minus = ProjHyperplane(left.vectors[0]);
    return verdict;
}

ScanField word_gap_field(const Rep& rep, const Word& word, const ScanGrid& grid,
                         double scan_threshold) {
    if (word.empty()) throw Error(ErrorKind::Config, "word_gap_field needs a nonempty word");
    require_scan_grid(grid);
    ScanField field(grid);
    field.meta.kind = "gap";
    parallel_for(grid.size(), [&](std::size_t node) {
        cplx lambda = grid.node(node % grid.nx, node / grid.nx);
        try {
            ScaledProduct p = word_product(rep, word, lambda, ProductOrder::Right);
            ProximalityVerdict v = check_proximal(p.matrix, scan_threshold);
            // -0.0 marks "evaluated, not proximal"
            field.values[node] = v.is_proximal ? v.gap : -0.0;
        } catch (const Error&) {
            field.mask[node] = 1;
        }
    });
    return field;
}

namespace {

StabilityReport scan_words(const Rep& rep, const ScanGrid& grid, std::vector<Word> words,
                           double scan_threshold) {
    StabilityReport report{
        {}, ScanField(grid), 0, 0, scan_threshold,
        "empirical proximal stability: verdicts are grid-constancy observations"};
    report.bifurcation_cells.meta.kind = "bifurcation-cells";
    report.words.resize(words.size());

    // verdict per (word, node): 0 = not proximal, 1 = proximal, 2 = masked
    std::vector<std::vector<std::uint8_t>> verdicts(words.size(),
                                                    std::vector<std::uint8_t>(grid.size(), 2));
    parallel_for(grid.size(), [&](std::size_t node) {
        cplx lambda = grid.node(node % grid.nx, node / grid.nx);
        GeneratorImages images;
        try {
            images = images_at(rep, lambda);
        } catch (const Error&) {
            return;  // node stays masked for every word
        }
        for (std::size_t wi = 0; wi < words.size(); ++wi) {
            try {
                ScaledProduct p = word_product(images, words[wi], ProductOrder::Right);
                ProximalityVerdict v = check_proximal(p.matrix, scan_threshold);
                verdicts[wi][node] = v.is_proximal ? 1 : 0;
            } catch (const Error&) {
            }
        }
    });

    for (std::size_t wi = 0; wi < words.size(); ++wi) {
        WordStabilityRecord rec;
        rec.word = words[wi];
        rec.length = words[wi].length();
        for (std::uint8_t v : verdicts[wi]) {
            if (v == 1)
                ++rec.proximal_nodes;
            else if (v == 0)
                ++rec.nonproximal_nodes;
            else
                ++rec.masked_nodes;
        }
        rec.flagged = rec.proximal_nodes > 0 && rec.nonproximal_nodes > 0;
        report.words[wi] = std::move(rec);
    }

    for (std::size_t wi = 0; wi < words.size(); ++wi) {
        if (!report.words[wi].flagged) continue;
        ++report.flagged_word_count;
        const auto& verdict = verdicts[wi];
        for (std::size_t j = 0; j < grid.ny; ++j) {
            for (std::size_t i = 0; i < grid.nx; ++i) {
                std::size_t node = grid.index(i, j);
                if (verdict[node] == 2) continue;
                bool change = false;
                if (i + 1 < grid.nx && verdict[grid.index(i + 1, j)] != 2 &&
                    verdict[grid.index(i + 1, j)] != verdict[node])
                    change = true;
                if (j + 1 < grid.ny && verdict[grid.index(i, j + 1)] != 2 &&
                    verdict[grid.index(i, j + 1)] != verdict[node])
                    change = true;
                if (change) report.bifurcation_cells.values[node] = 1.0;
            }
        }
    }
    for (double v : report.bifurcation_cells.values)
        if (v > 0.0) ++report.flagged_cell_count;
    return report;
}

}  // namespace

StabilityReport stability_scan(const Rep& rep, const StepMeasure& mu, const ScanGrid& grid,
                               const std::vector<std::size_t>& word_lengths,
                               std::size_t words_per_length, std::uint64_t seed,
                               double scan_threshold) {
    require_scan_grid(grid);
    if (word_lengths.empty()) throw Error(ErrorKind::Config, "stability_scan needs word lengths");
    if (words_per_length < 1)
        throw Error(ErrorKind::Config, "stability_scan needs at least one word per length");
    std::vector<Word> words;
    words.reserve(word_lengths.size() * words_per_length);
    for (std::size_t li = 0; li < word_lengths.size(); ++li) {
        for (std::size_t wi = 0; wi < words_per_length; ++wi) {
            SplitMix64 rng = derive_stream(seed, {stream::kStability, li, wi});
            words.push_back(mu.sample_word(word_lengths[li], rng));
        }
    }
    return scan_words(rep, grid, std::move(words), scan_threshold);
}

StabilityReport stability_scan_exhaustive(const Rep& rep, const ScanGrid& grid,
                                          std::size_t max_length, double scan_threshold) {
    require_scan_grid(grid);
    std::size_t k = rep.family().generator_count();
    if (max_length < 1 || max_length > 6)
        throw Error(ErrorKind::Config, "exhaustive mode supports lengths 1..6");
    // freely reduced words only; an immediate cancellation re-visits a shorter word
    std::vector<Word> words;
    std::vector<Word> frontier;
    for (std::size_t g = 1; g <= k; ++g) {
        frontier.push_back(Word{{static_cast<std::int32_t>(g)}});
        frontier.push_back(Word{{-static_cast<std::int32_t>(g)}});
    }
    words = frontier;
    for (std::size_t len = 2; len <= max_length; ++len) {
        std::vector<Word> next;
        for (const Word& w : frontier) {
            for (std::size_t g = 1; g <= k; ++g) {
                for (int sign : {1, -1}) {
                    auto letter = static_cast<std::int32_t>(g) * sign;
                    if (w.letters.back() == -letter) continue;
                    Word extended = w;
                    extended.letters.push_back(letter);
                    next.push_back(std::move(extended));
                }
            }
        }
        words.insert(words.end(), next.begin(), next.end());
        frontier = std::move(next);
    }
    return scan_words(rep, grid, std::move(words), scan_threshold);
}

}  // namespace bifurc
