#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bifurc/cmatrix.hpp"
#include "bifurc/dsl.hpp"
#include "bifurc/scan.hpp"
#include "bifurc/word.hpp"

namespace bifurc {

// Proximality of a single matrix: a unique eigenvalue of maximal modulus.
struct ProximalityVerdict {
    bool is_proximal = false;
    double gap = 0.0;  // log(|mu_1| / |mu_2|), >= 0
    std::optional<ProjPoint> fix_plus;        // attracting point, when proximal
    std::optional<ProjHyperplane> fix_minus;  // repelling hyperplane, when proximal
};

// Ties within the gap tolerance are reported as not proximal with gap 0.
ProximalityVerdict check_proximal(const CMatrix& m, double tol_gap = 1e-9);

// gap(lambda) for one word across the grid; nodes where the matrix is not
// proximal carry -0.0, failed evaluations are masked.
ScanField word_gap_field(const Rep& rep, const Word& word, const ScanGrid& grid,
                         double scan_threshold = 1e-4);

struct WordStabilityRecord {
    Word word;
    std::size_t length = 0;
    bool flagged = false;           // proximality verdict varies across the grid
    std::size_t proximal_nodes = 0;
    std::size_t nonproximal_nodes = 0;
    std::size_t masked_nodes = 0;
};

struct StabilityReport {
    std::vector<WordStabilityRecord> words;
    ScanField bifurcation_cells;  // union of verdict sign-change cells, 0/1
    std::size_t flagged_word_count = 0;
    std::size_t flagged_cell_count = 0;
    double scan_threshold = 0.0;
    // stability on a finite grid is only observed up to grid resolution
    std::string note = "empirical proximal stability: verdicts are grid-constancy observations";
};

// Samples words_per_length words from mu^n for each n in word_lengths and
// flags every word whose proximality verdict is non-constant on the grid. The
// union of verdict-change cell boundaries is the empirical bifurcation set.
StabilityReport stability_scan(const Rep& rep, const StepMeasure& mu, const ScanGrid& grid,
                               const std::vector<std::size_t>& word_lengths,
                               std::size_t words_per_length, std::uint64_t seed,
                               double scan_threshold = 1e-4);

// Exhaustive variant over all freely reduced words of length 1..max_length.
StabilityReport stability_scan_exhaustive(const Rep& rep, const ScanGrid& grid,
                                          std::size_t max_length, double scan_threshold = 1e-4);

}  // namespace bifurc
