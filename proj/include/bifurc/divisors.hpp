#pragma once

#include <cstdint>
#include <vector>

#include "bifurc/dsl.hpp"
#include "bifurc/scan.hpp"
#include "bifurc/word.hpp"

namespace bifurc {

// Axis-aligned cell in the parameter plane.
struct Box {
    double re0, re1, im0, im1;
};

// Number of solutions of tr(rho_lambda(word)) = t inside the cell, counted
// with multiplicity by the argument principle on the cell boundary. Boundary
// sampling starts at `boundary_samples` points per loop and doubles (up to
// 2048) whenever the winding residual exceeds 0.1; cells whose boundary passes
// too close to a zero are subdivided, up to 4 levels.
long trace_zero_count(const Rep& rep, const Word& word, cplx t, const Box& cell,
                      std::size_t boundary_samples = 256);

struct DivisorEntry {
    cplx location;          // cell center
    long multiplicity;
    std::size_t word_id;
};

struct DivisorCloud {
    std::vector<DivisorEntry> entries;
    std::size_t n = 0;  // generating word length
    cplx t;             // trace level
};

struct TraceDivisorResult {
    DivisorCloud cloud;
    ScanField density;                  // (1/n) * mean multiplicity per cell / cell area
    std::vector<long> per_word_totals;  // zeros found inside the grid, per word
    std::vector<std::uint8_t> degenerate;  // words with tr identically equal to t
    std::size_t masked_cells = 0;       // cells that exhausted the subdivision budget
};

// Zeros of tr - t for words_count words of length n sampled from mu^n,
// binned per grid cell. The equidistribution statement assumes a symmetric mu;
// pass allow_asymmetric to override.
TraceDivisorResult trace_divisor_measure(const Rep& rep, const StepMeasure& mu, cplx t,
                                         const ScanGrid& grid, std::size_t n,
                                         std::size_t words_count, std::uint64_t seed,
                                         bool allow_asymmetric = false);

struct GraphVolumeRecord {
    std::size_t word_id = 0;
    std::size_t length = 0;
    double vol_u = 0.0;       // area of the measured interior
    double mass = 0.0;        // || ddc log|f| ||_U
    double total = 0.0;       // vol_u + mass
    double masked_fraction = 0.0;
    double eps_disc = 0.0;
};

// Volume of the graph of lambda -> rho_lambda(word) v0 over the grid
// rectangle, via the base-area-plus-potential-mass formula.
GraphVolumeRecord graph_volume(const Rep& rep, const Word& word, const std::vector<cplx>& v0,
                               const ScanGrid& grid, ProductOrder order = ProductOrder::Left);

struct GrowthRow {
    std::size_t n;
    double mean_volume;
    double stderr_;
};

struct GrowthReport {
    std::vector<GrowthRow> rows;
    double slope = 0.0;         // weighted LS fit of mean volume vs n
    double slope_stderr = 0.0;
    double vol_u = 0.0;
    bool dual = false;
    // grid-measured mass of T_1 (or of the dual-side current) over the same
    // window, when the comparison was requested
    double current_mass = 0.0;
    double slope_to_mass_ratio = 0.0;
    bool compared = false;
};

// Mean graph volume per word length, with a fitted growth slope. When
// compare_trials > 0 the same window also gets a chi-field run and the report
// carries the measured current mass next to the slope.
GrowthReport mean_graph_volume(const Rep& rep, const StepMeasure& mu, const std::vector<cplx>& v0,
                               const ScanGrid& grid, const std::vector<std::size_t>& lengths,
                               std::size_t trials, std::uint64_t seed, bool dual = false,
                               ProductOrder order = ProductOrder::Left,
                               std::size_t compare_n = 0, std::size_t compare_trials = 0);

}  // namespace bifurc
