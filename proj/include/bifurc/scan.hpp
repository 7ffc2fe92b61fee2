#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bifurc/dsl.hpp"
#include "bifurc/word.hpp"

namespace bifurc {

// Complex rectangle sampled at cell centers.
struct ScanGrid {
    double re0, re1, im0, im1;
    std::size_t nx, ny;

    ScanGrid(double re0_, double re1_, double im0_, double im1_, std::size_t nx_, std::size_t ny_);

    double hx() const { return (re1 - re0) / static_cast<double>(nx); }
    double hy() const { return (im1 - im0) / static_cast<double>(ny); }
    double cell_area() const { return hx() * hy(); }
    std::size_t size() const { return nx * ny; }
    std::size_t index(std::size_t i, std::size_t j) const { return j * nx + i; }
    cplx node(std::size_t i, std::size_t j) const {
        return {re0 + (static_cast<double>(i) + 0.5) * hx(),
                im0 + (static_cast<double>(j) + 0.5) * hy()};
    }
    bool contains(cplx z) const {
        return z.real() >= re0 && z.real() <= re1 && z.imag() >= im0 && z.imag() <= im1;
    }
    // cell index of a point, clamped into range
    std::size_t cell_of(cplx z) const;
};

struct FieldMeta {
    std::string kind;
    std::size_t n = 0;
    std::size_t trials = 0;
    std::uint64_t seed = 0;
};

// Real values on a grid with a per-node mask; masked nodes never enter
// reductions.
struct ScanField {
    ScanGrid grid;
    std::vector<double> values;
    std::vector<std::uint8_t> mask;  // 1 = masked
    FieldMeta meta;

    explicit ScanField(const ScanGrid& g, double fill = 0.0)
        : grid(g), values(g.size(), fill), mask(g.size(), 0) {}

    std::size_t unmasked_count() const;
    double sum_unmasked() const;
    double min_unmasked() const;
    double max_unmasked() const;
};

// chi_1 (and chi_d via the dual walk) over the grid, with the same sampled
// words at every node so the field is an average of smooth psh functions.
struct ChiFieldResult {
    std::optional<ScanField> chi1;
    std::optional<ScanField> chi1_stderr;
    std::optional<ScanField> chi_d;
    std::optional<ScanField> chi_d_stderr;
    // top field of the dual walk (= -chi_d); this is the psh potential whose
    // ddc gives the d-th bifurcation current
    std::optional<ScanField> dual_top;
};

enum class ChiFieldWhich { Top, Bottom, Pair };

ChiFieldResult chi_field(const Rep& rep, const StepMeasure& mu, const ScanGrid& grid,
                         std::size_t n, std::size_t trials, std::uint64_t seed,
                         ChiFieldWhich which);

// (1/2pi) * five-point Laplacian * cell area per interior node; boundary ring
// and nodes touching masked input are masked. Normalized so that the field
// log|lambda - a| carries total mass 1 around a.
ScanField ddc_density(const ScanField& field);

struct TBifResult {
    ScanField chi1;
    ScanField chi_d;
    ScanField t1;
    ScanField td;
    ScanField tbif;
    ScanField support;       // 0/1 values over tbif's unmasked nodes
    double t1_mass = 0.0;
    double td_mass = 0.0;
    double tbif_mass = 0.0;
    double clip_fraction = 0.0;   // fraction of negative-density nodes
    double most_negative = 0.0;   // noise diagnostic
    double noise_floor = 0.0;     // median + theta * robust sigma
    std::size_t support_count = 0;
};

// T1 = ddc(chi_1 field), Td = ddc of the dual top field (the plurisubharmonic
// potential of chi_d), T_bif = T1 + Td. Support mask keeps nodes whose density
// exceeds the robust noise floor.
TBifResult t_bif(const Rep& rep, const StepMeasure& mu, const ScanGrid& grid, std::size_t n,
                 std::size_t trials, std::uint64_t seed, double theta = 5.0);

struct CalibrationReport {
    double lelong_mass = 0.0;      // should be 1
    double lelong_error = 0.0;     // |mass - 1|
    double harmonic_residual = 0.0;
    double uniform_max_relerr = 0.0;
    double eps_disc = 0.0;
    bool pass = false;
};

// Lelong-mass self-test on the standard 201x201 grid over [-1,1]^2 (or a
// caller-provided grid). Must pass before any T_bif run.
CalibrationReport calibrate();
CalibrationReport calibrate(const ScanGrid& grid, cplx zero_location);

// discrete mass leakage of a harmonic log-potential at this grid's resolution
double measure_eps_disc(const ScanGrid& grid);

// scans (chi fields, stability, divisors) need at least 8x8 nodes
void require_scan_grid(const ScanGrid& grid);

}  // namespace bifurc
