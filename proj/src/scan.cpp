#include "bifurc/scan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bifurc/errors.hpp"
#include "bifurc/parallel.hpp"
#include "bifurc/rng.hpp"

namespace bifurc {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

ScanGrid::ScanGrid(double re0_, double re1_, double im0_, double im1_, std::size_t nx_,
                   std::size_t ny_)
    : re0(re0_), re1(re1_), im0(im0_), im1(im1_), nx(nx_), ny(ny_) {
    if (!(re1 > re0) || !(im1 > im0))
        throw Error(ErrorKind::InsufficientGrid, "grid rectangle must have positive extents");
    if (nx < 2 || ny < 2)
        throw Error(ErrorKind::InsufficientGrid, "grid needs at least 2x2 nodes");
}

// scan operations need room for a boundary ring plus interior structure
void require_scan_grid(const ScanGrid& grid) {
    if (grid.nx < 8 || grid.ny < 8)
        throw Error(ErrorKind::InsufficientGrid, "scans need at least 8x8 nodes");
}

std::size_t ScanGrid::cell_of(cplx z) const {
    auto clamp_idx = [](double t, std::size_t count) {
        if (t < 0.0) return std::size_t{0};
        auto idx = static_cast<std::size_t>(t);
        return std::min(idx, count - 1);
    };
    std::size_t i = clamp_idx((z.real() - re0) / hx(), nx);
    std::size_t j = clamp_idx((z.imag() - im0) / hy(), ny);
    return index(i, j);
}

std::size_t ScanField::unmasked_count() const {
    std::size_t c = 0;
    for (std::uint8_t m : mask)
        if (!m) ++c;
    return c;
}

double ScanField::sum_unmasked() const {
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!mask[i]) s += values[i];
    return s;
}

double ScanField::min_unmasked() const {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!mask[i]) best = std::min(best, values[i]);
    return best;
}

double ScanField::max_unmasked() const {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!mask[i]) best = std::max(best, values[i]);
    return best;
}

ChiFieldResult chi_field(const Rep& rep, const StepMeasure& mu, const ScanGrid& grid,
                         std::size_t n, std::size_t trials, std::uint64_t seed,
                         ChiFieldWhich which) {
    require_scan_grid(grid);
    if (n < 1) throw Error(ErrorKind::Config, "word length n must be >= 1");
    if (trials < 2) throw Error(ErrorKind::Config, "need at least 2 trials");

    // common random numbers: one word list shared by every node
    std::vector<Word> words(trials);
    for (std::size_t t = 0; t < trials; ++t) {
        SplitMix64 rng = derive_stream(seed, {stream::kScanWord, t});
        words[t] = mu.sample_word(n, rng);
    }

    bool want_top = which != ChiFieldWhich::Bottom;
    bool want_bottom = which != ChiFieldWhich::Top;

    ChiFieldResult out;
    FieldMeta meta{"", n, trials, seed};
    if (want_top) {
        meta.kind = "chi1";
        out.chi1.emplace(grid);
        out.chi1->meta = meta;
        meta.kind = "chi1-stderr";
        out.chi1_stderr.emplace(grid);
        out.chi1_stderr->meta = meta;
    }
    if (want_bottom) {
        meta.kind = "chi_d";
        out.chi_d.emplace(grid);
        out.chi_d->meta = meta;
        meta.kind = "chi_d-stderr";
        out.chi_d_stderr.emplace(grid);
        out.chi_d_stderr->meta = meta;
        meta.kind = "dual-top";
        out.dual_top.emplace(grid);
        out.dual_top->meta = meta;
    }

    double baseline = std::log(CMatrix::identity(rep.dimension()).frobenius());
    Rep dual = rep.dual();

    parallel_for(grid.size(), [&](std::size_t node) {
        std::size_t i = node % grid.nx, j = node / grid.nx;
        cplx lambda = grid.node(i, j);
        try {
            if (want_top) {
                GeneratorImages images = images_at(rep, lambda);
                double mean = 0.0, m2 = 0.0;
                for (std::size_t t = 0; t < trials; ++t) {
                    double v = (word_product(images, words[t], ProductOrder::Right).log_norm() -
                                baseline) /
                               static_cast<double>(n);
                    double delta = v - mean;
                    mean += delta / static_cast<double>(t + 1);
                    m2 += delta * (v - mean);
                }
                out.chi1->values[node] = mean;
                out.chi1_stderr->values[node] = std::sqrt(
                    m2 / static_cast<double>(trials - 1) / static_cast<double>(trials));
            }
            if (want_bottom) {
                GeneratorImages dual_images = images_at(dual, lambda);
                double mean = 0.0, m2 = 0.0;
                for (std::size_t t = 0; t < trials; ++t) {
                    double v = (word_product(dual_images, words[t], ProductOrder::Right)
                                    .log_norm() -
                                baseline) /
                               static_cast<double>(n);
                    double delta = v - mean;
                    mean += delta / static_cast<double>(t + 1);
                    m2 += delta * (v - mean);
                }
                out.dual_top->values[node] = mean;
                out.chi_d->values[node] = -mean;
                out.chi_d_stderr->values[node] = std::sqrt(
                    m2 / static_cast<double>(trials - 1) / static_cast<double>(trials));
            }
        } catch (const Error&) {
            if (out.chi1) out.chi1->mask[node] = 1;
            if (out.chi1_stderr) out.chi1_stderr->mask[node] = 1;
            if (out.chi_d) out.chi_d->mask[node] = 1;
            if (out.chi_d_stderr) out.chi_d_stderr->mask[node] = 1;
            if (out.dual_top) out.dual_top->mask[node] = 1;
        }
    });
    return out;
}

ScanField ddc_density(const ScanField& field) {
    const ScanGrid& g = field.grid;
    if (g.nx < 3 || g.ny < 3)
        throw Error(ErrorKind::InsufficientGrid, "ddc needs a 3x3 interior");

    ScanField out(g);
    out.meta = field.meta;
    out.meta.kind = "ddc(" + field.meta.kind + ")";
    double inv_hx2 = 1.0 / (g.hx() * g.hx());
    double inv_hy2 = 1.0 / (g.hy() * g.hy());
    double scale = g.cell_area() / kTwoPi;

    std::size_t interior = 0;
    for (std::size_t j = 0; j < g.ny; ++j) {
        for (std::size_t i = 0; i < g.nx; ++i) {
            std::size_t node = g.index(i, j);
            if (i == 0 || j == 0 || i + 1 == g.nx || j + 1 == g.ny) {
                out.mask[node] = 1;
                continue;
            }
            std::size_t e = g.index(i + 1, j), w = g.index(i - 1, j);
            std::size_t nn = g.index(i, j + 1), s = g.index(i, j - 1);
            if (field.mask[node] || field.mask[e] || field.mask[w] || field.mask[nn] ||
                field.mask[s]) {
                out.mask[node] = 1;
                continue;
            }
            double lap = (field.values[e] - 2.0 * field.values[node] + field.values[w]) * inv_hx2 +
                         (field.values[nn] - 2.0 * field.values[node] + field.values[s]) * inv_hy2;
            out.values[node] = lap * scale;
            ++interior;
        }
    }
    if (interior == 0)
        throw Error(ErrorKind::InsufficientGrid, "no unmasked interior nodes for ddc");
    return out;
}

namespace {

double median_of(std::vector<double> xs) {
    if (xs.empty()) return 0.0;
    std::size_t mid = xs.size() / 2;
    std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid), xs.end());
    double hi = xs[mid];
    if (xs.size() % 2 == 1) return hi;
    double lo = *std::max_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

}  // namespace

TBifResult t_bif(const Rep& rep, const StepMeasure& mu, const ScanGrid& grid, std::size_t n,
                 std::size_t trials, std::uint64_t seed, double theta) {
    ChiFieldResult fields = chi_field(rep, mu, grid, n, trials, seed, ChiFieldWhich::Pair);

    ScanField t1 = ddc_density(*fields.chi1);
    // the dual top field is the psh potential whose ddc realizes the d-th
    // current with positive sign
    ScanField td = ddc_density(*fields.dual_top);
    td.meta.kind = "td";

    TBifResult result{std::move(*fields.chi1), std::move(*fields.chi_d), std::move(t1),
                      std::move(td),           ScanField(grid),          ScanField(grid)};
    result.tbif.meta = result.t1.meta;
    result.tbif.meta.kind = "tbif";
    std::vector<double> unmasked;
    std::size_t negatives = 0;
    result.most_negative = 0.0;
    for (std::size_t node = 0; node < grid.size(); ++node) {
        if (result.t1.mask[node] || result.td.mask[node]) {
            result.tbif.mask[node] = 1;
            continue;
        }
        double v = result.t1.values[node] + result.td.values[node];
        result.tbif.values[node] = v;
        unmasked.push_back(v);
        if (v < 0.0) ++negatives;
        result.most_negative = std::min(result.most_negative, v);
    }
    if (unmasked.empty())
        throw Error(ErrorKind::InsufficientGrid, "T_bif field is fully masked");

    result.t1_mass = result.t1.sum_unmasked();
    result.td_mass = result.td.sum_unmasked();
    result.tbif_mass = result.tbif.sum_unmasked();
    result.clip_fraction = static_cast<double>(negatives) / static_cast<double>(unmasked.size());

    // robust noise floor: median + theta * 1.4826 * MAD
    double med = median_of(unmasked);
    std::vector<double> devs(unmasked.size());
    for (std::size_t i = 0; i < unmasked.size(); ++i) devs[i] = std::abs(unmasked[i] - med);
    double mad_sigma = 1.4826 * median_of(std::move(devs));
    result.noise_floor = med + theta * mad_sigma;

    result.support = ScanField(grid);
    result.support.meta = result.tbif.meta;
    result.support.meta.kind = "tbif-support";
    result.support_count = 0;
    for (std::size_t node = 0; node < grid.size(); ++node) {
        if (result.tbif.mask[node]) {
            result.support.mask[node] = 1;
            continue;
        }
        bool in = result.tbif.values[node] > result.noise_floor;
        result.support.values[node] = in ? 1.0 : 0.0;
        if (in) ++result.support_count;
    }
    return result;
}

CalibrationReport calibrate() {
    return calibrate(ScanGrid(-1.0, 1.0, -1.0, 1.0, 201, 201), cplx(0.3, 0.0));
}

CalibrationReport calibrate(const ScanGrid& grid, cplx zero_location) {
    CalibrationReport report;

    ScanField lelong(grid);
    lelong.meta.kind = "lelong-calibration";
    ScanField harmonic(grid);
    harmonic.meta.kind = "harmonic-calibration";
    ScanField quad(grid);
    quad.meta.kind = "uniform-calibration";
    for (std::size_t j = 0; j < grid.ny; ++j) {
        for (std::size_t i = 0; i < grid.nx; ++i) {
            cplx z = grid.node(i, j);
            std::size_t node = grid.index(i, j);
            lelong.values[node] = std::log(std::abs(z - zero_location));
            harmonic.values[node] = std::real(z * z);
            quad.values[node] = std::norm(z);
        }
    }

    ScanField lelong_mass = ddc_density(lelong);
    report.lelong_mass = lelong_mass.sum_unmasked();
    report.lelong_error = std::abs(report.lelong_mass - 1.0);

    ScanField harmonic_mass = ddc_density(harmonic);
    report.harmonic_residual = std::abs(harmonic_mass.sum_unmasked());

    ScanField quad_mass = ddc_density(quad);
    double expected = 4.0 * grid.cell_area() / kTwoPi;
    double worst = 0.0;
    for (std::size_t node = 0; node < grid.size(); ++node)
        if (!quad_mass.mask[node])
            worst = std::max(worst, std::abs(quad_mass.values[node] - expected) / expected);
    report.uniform_max_relerr = worst;

    report.eps_disc = std::max(report.lelong_error, 1e-12);
    report.pass = report.lelong_mass >= 0.98 && report.lelong_mass <= 1.02 &&
                  report.harmonic_residual <= 1e-3 * std::abs(report.lelong_mass) &&
                  report.uniform_max_relerr <= 1e-6;
    return report;
}

double measure_eps_disc(const ScanGrid& grid) {
    // harmonic log-potential with the singularity pushed outside the rectangle
    double half_w = 0.5 * (grid.re1 - grid.re0);
    double half_h = 0.5 * (grid.im1 - grid.im0);
    cplx center(0.5 * (grid.re0 + grid.re1), 0.5 * (grid.im0 + grid.im1));
    cplx outside = center + cplx(1.75 * half_w, 1.75 * half_h);
    ScanField field(grid);
    field.meta.kind = "eps-disc-probe";
    for (std::size_t j = 0; j < grid.ny; ++j)
        for (std::size_t i = 0; i < grid.nx; ++i)
            field.values[grid.index(i, j)] = std::log(std::abs(grid.node(i, j) - outside));
    double residual = std::abs(ddc_density(field).sum_unmasked());
    return std::max(residual, 1e-12);
}

}  // namespace bifurc
