#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bifurc/dsl.hpp"
#include "bifurc/word.hpp"

namespace bifurc {

// One Lyapunov exponent (or partial-sum) estimate with Monte-Carlo provenance.
struct LyapEstimate {
    int index_lo = 1;       // exponent index, or start of the summed range
    int index_hi = 1;       // equal to index_lo for a single exponent
    double value = 0.0;     // nats per step
    double stderr_ = 0.0;   // trial sample std / sqrt(trials)
    std::size_t n = 0;      // word length
    std::size_t trials = 0;
    std::uint64_t seed = 0;
    std::string estimator;  // "norm" | "qr" | "exterior" | "norm-trajectory"
};

// Furstenberg-Kesten estimator: mean over i.i.d. trials of
// (1/n) log ||rho_lambda(gamma_n ... gamma_1)||_F, measured relative to the
// identity's norm so a trivial family reports exactly zero.
LyapEstimate chi_top(const Rep& rep, cplx lambda, const StepMeasure& mu, std::size_t n,
                     std::size_t trials, std::uint64_t seed);

// Top-k exponents from accumulated QR increments along sampled words.
// Estimates are reported sorted; a raw-order violation beyond 3 combined
// standard errors is an error.
std::vector<LyapEstimate> chi_spectrum_qr(const Rep& rep, cplx lambda, const StepMeasure& mu,
                                          std::size_t n, std::size_t trials, std::uint64_t seed,
                                          std::size_t k);

// chi_top applied to the k-th exterior power images; estimates chi_1+...+chi_k.
// Shares the word stream with chi_top, so k=1 reproduces it exactly.
LyapEstimate chi_exterior(const Rep& rep, cplx lambda, const StepMeasure& mu, std::size_t n,
                          std::size_t trials, std::uint64_t seed, std::size_t k);

// single long trajectory, diagnostics only (no honest error bar)
LyapEstimate chi_top_trajectory(const Rep& rep, cplx lambda, const StepMeasure& mu,
                                std::size_t total_steps, std::uint64_t seed);

// chi*_i = -chi_{d+1-i} cross-check between the walk and its dual.
struct DualSpectrumReport {
    std::vector<LyapEstimate> primal;
    std::vector<LyapEstimate> dual;
    std::vector<double> defect;          // |chi*_i + chi_{d+1-i}|
    std::vector<double> combined_stderr;
    double max_defect = 0.0;
    bool within_tolerance = false;       // all defects <= 3 combined stderr
};

DualSpectrumReport dual_spectrum_check(const Rep& rep, cplx lambda, const StepMeasure& mu,
                                       std::size_t n, std::size_t trials, std::uint64_t seed);

}  // namespace bifurc
