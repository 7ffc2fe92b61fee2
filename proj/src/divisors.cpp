#include "bifurc/divisors.hpp"

#include <algorithm>
#include <cmath>

#include "bifurc/errors.hpp"
#include "bifurc/parallel.hpp"
#include "bifurc/rng.hpp"

namespace bifurc {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr std::size_t kMaxBoundarySamples = 2048;
constexpr int kMaxSubdivision = 4;

// tr(rho_lambda(word)) - t in (log magnitude, argument) form, safe for words
// whose trace overflows a double
struct LogValue {
    double log_mag;
    double arg;
};

class TraceOnBoundary {
public:
    TraceOnBoundary(const Rep& rep, const Word& word, cplx t) : rep_(rep), word_(word), t_(t) {}

    LogValue operator()(cplx lambda) const {
        ScaledProduct p = word_product(rep_, word_, lambda, ProductOrder::Right);
        cplx tr = p.matrix.trace();
        double tr_logmag = p.log_scale + std::log(std::abs(tr));
        double t_scale = std::log1p(std::abs(t_));
        if (tr_logmag > t_scale + 46.0) {
            // trace dwarfs t: the level shift cannot move the argument
            return {tr_logmag, std::arg(tr)};
        }
        cplx f = std::exp(p.log_scale) * tr - t_;
        return {std::log(std::abs(f)), std::arg(f)};
    }

private:
    const Rep& rep_;
    const Word& word_;
    cplx t_;
};

std::vector<cplx> boundary_loop(const Box& box, std::size_t samples) {
    // counterclockwise, each edge gets samples/4 points, corners once
    std::size_t per_edge = samples / 4;
    std::vector<cplx> pts;
    pts.reserve(per_edge * 4);
    for (std::size_t k = 0; k < per_edge; ++k) {
        double s = static_cast<double>(k) / static_cast<double>(per_edge);
        pts.emplace_back(box.re0 + s * (box.re1 - box.re0), box.im0);
    }
    for (std::size_t k = 0; k < per_edge; ++k) {
        double s = static_cast<double>(k) / static_cast<double>(per_edge);
        pts.emplace_back(box.re1, box.im0 + s * (box.im1 - box.im0));
    }
    for (std::size_t k = 0; k < per_edge; ++k) {
        double s = static_cast<double>(k) / static_cast<double>(per_edge);
        pts.emplace_back(box.re1 - s * (box.re1 - box.re0), box.im1);
    }
    for (std::size_t k = 0; k < per_edge; ++k) {
        double s = static_cast<double>(k) / static_cast<double>(per_edge);
        pts.emplace_back(box.re0, box.im1 - s * (box.im1 - box.im0));
    }
    return pts;
}

enum class WindingStatus { Ok, BoundaryZero, Undersampled };

struct WindingOutcome {
    WindingStatus status;
    long winding;
};

WindingOutcome try_winding(const TraceOnBoundary& f, const Box& box, std::size_t samples,
                           double t_mag) {
    std::vector<cplx> pts = boundary_loop(box, samples);
    std::vector<LogValue> vals(pts.size());
    for (std::size_t k = 0; k < pts.size(); ++k) vals[k] = f(pts[k]);

    double zero_floor = std::log(1e-9 * (1.0 + t_mag));
    for (const LogValue& v : vals)
        if (v.log_mag < zero_floor || !std::isfinite(v.log_mag))
            return {WindingStatus::BoundaryZero, 0};

    double total = 0.0;
    double worst_step = 0.0;
    for (std::size_t k = 0; k < vals.size(); ++k) {
        double d = vals[(k + 1) % vals.size()].arg - vals[k].arg;
        while (d > 3.14159265358979323846) d -= kTwoPi;
        while (d <= -3.14159265358979323846) d += kTwoPi;
        worst_step = std::max(worst_step, std::abs(d));
        total += d;
    }
    double w = total / kTwoPi;
    double rounded = std::round(w);
    if (std::abs(w - rounded) > 0.1 || worst_step > 2.5)
        return {WindingStatus::Undersampled, 0};
    return {WindingStatus::Ok, static_cast<long>(rounded)};
}

long winding_with_budget(const TraceOnBoundary& f, const Box& box, std::size_t start_samples,
                         double t_mag, int depth) {
    std::size_t samples = std::max<std::size_t>(4, start_samples);
    while (true) {
        WindingOutcome outcome = try_winding(f, box, samples, t_mag);
        if (outcome.status == WindingStatus::Ok) return outcome.winding;
        if (outcome.status == WindingStatus::BoundaryZero) {
            if (depth >= kMaxSubdivision)
                throw Error(ErrorKind::BoundaryZero,
                            "trace level too close to the cell boundary after 4 subdivisions");
            double rm = 0.5 * (box.re0 + box.re1), im = 0.5 * (box.im0 + box.im1);
            Box q[4] = {{box.re0, rm, box.im0, im},
                        {rm, box.re1, box.im0, im},
                        {box.re0, rm, im, box.im1},
                        {rm, box.re1, im, box.im1}};
            long sum = 0;
            for (const Box& child : q)
                sum += winding_with_budget(f, child, start_samples, t_mag, depth + 1);
            return sum;
        }
        if (samples >= kMaxBoundarySamples)
            throw Error(ErrorKind::NonIntegerWinding,
                        "winding residual above 0.1 at the 2048-sample budget");
        samples *= 2;
    }
}

}  // namespace

long trace_zero_count(const Rep& rep, const Word& word, cplx t, const Box& cell,
                      std::size_t boundary_samples) {
    if (word.empty()) throw Error(ErrorKind::Config, "trace_zero_count needs a nonempty word");
    if (!(cell.re1 > cell.re0) || !(cell.im1 > cell.im0))
        throw Error(ErrorKind::Config, "trace_zero_count cell must have positive extents");
    TraceOnBoundary f(rep, word, t);
    return winding_with_budget(f, cell, boundary_samples, std::abs(t), 0);
}

namespace {

// Quadtree descent over whole-cell index ranges. The boundary winding counts
// zeros minus poles, so a box holding a declared family pole is never pruned
// on zero winding; single cells that contain a pole (or report a negative
// count) are masked rather than binned.
void count_zeros_recursive(const TraceOnBoundary& f, const ScanGrid& grid,
                           const std::vector<cplx>& poles, double t_mag, std::size_t i0,
                           std::size_t i1, std::size_t j0, std::size_t j1,
                           std::vector<long>& counts, std::vector<std::uint8_t>& cell_mask) {
    Box box{grid.re0 + static_cast<double>(i0) * grid.hx(),
            grid.re0 + static_cast<double>(i1) * grid.hx(),
            grid.im0 + static_cast<double>(j0) * grid.hy(),
            grid.im0 + static_cast<double>(j1) * grid.hy()};
    bool has_pole = false;
    for (cplx p : poles)
        if (p.real() >= box.re0 && p.real() <= box.re1 && p.imag() >= box.im0 &&
            p.imag() <= box.im1)
            has_pole = true;

    bool single_cell = (i1 - i0 == 1) && (j1 - j0 == 1);
    if (single_cell && has_pole) {
        cell_mask[grid.index(i0, j0)] = 1;
        return;
    }

    long w = -1;  // unknown
    bool known = false;
    try {
        w = winding_with_budget(f, box, 256, t_mag, 0);
        known = true;
    } catch (const Error&) {
        if (single_cell) {
            cell_mask[grid.index(i0, j0)] = 1;
            return;
        }
    }
    if (known && w == 0 && !has_pole) return;
    if (single_cell) {
        if (w < 0)
            cell_mask[grid.index(i0, j0)] = 1;  // an undeclared pole
        else
            counts[grid.index(i0, j0)] += w;
        return;
    }
    std::size_t im = (i1 - i0 > 1) ? (i0 + i1) / 2 : i1;
    std::size_t jm = (j1 - j0 > 1) ? (j0 + j1) / 2 : j1;
    count_zeros_recursive(f, grid, poles, t_mag, i0, im, j0, jm, counts, cell_mask);
    if (im < i1) count_zeros_recursive(f, grid, poles, t_mag, im, i1, j0, jm, counts, cell_mask);
    if (jm < j1) count_zeros_recursive(f, grid, poles, t_mag, i0, im, jm, j1, counts, cell_mask);
    if (im < i1 && jm < j1)
        count_zeros_recursive(f, grid, poles, t_mag, im, i1, jm, j1, counts, cell_mask);
}

}  // namespace

TraceDivisorResult trace_divisor_measure(const Rep& rep, const StepMeasure& mu, cplx t,
                                         const ScanGrid& grid, std::size_t n,
                                         std::size_t words_count, std::uint64_t seed,
                                         bool allow_asymmetric) {
    require_scan_grid(grid);
    if (n < 1) throw Error(ErrorKind::Config, "word length n must be >= 1");
    if (words_count < 1) throw Error(ErrorKind::Config, "need at least one word");
    if (!mu.is_symmetric() && !allow_asymmetric)
        throw Error(ErrorKind::Config,
                    "equidistribution assumes a symmetric step measure (override to force)");

    std::vector<Word> words(words_count);
    for (std::size_t w = 0; w < words_count; ++w) {
        SplitMix64 rng = derive_stream(seed, {stream::kDivisor, w});
        words[w] = mu.sample_word(n, rng);
    }

    // Words whose trace is identically t (e.g. conjugates of a parabolic
    // generator at the parabolic level) have no divisor; the trace is
    // holomorphic, so vanishing of tr - t at 16 sample points settles it.
    std::vector<std::uint8_t> degenerate(words_count, 0);
    parallel_for(words_count, [&](std::size_t w) {
        SplitMix64 rng = derive_stream(seed, {stream::kDivisor, w, 0xDE6Eull});
        bool all_zero = true;
        for (int s = 0; s < 16 && all_zero; ++s) {
            cplx lambda(grid.re0 + (grid.re1 - grid.re0) * rng.next_double(),
                        grid.im0 + (grid.im1 - grid.im0) * rng.next_double());
            try {
                ScaledProduct p = word_product(rep, words[w], lambda, ProductOrder::Right);
                cplx tr = p.matrix.trace();
                double logmag = p.log_scale + std::log(std::abs(tr));
                if (logmag > std::log1p(std::abs(t)) + 46.0 ||
                    std::abs(std::exp(p.log_scale) * tr - t) > 1e-9 * (1.0 + std::abs(t)))
                    all_zero = false;
            } catch (const Error&) {
                all_zero = false;
            }
        }
        degenerate[w] = all_zero ? 1 : 0;
    });

    std::vector<std::vector<long>> counts(words_count, std::vector<long>(grid.size(), 0));
    std::vector<std::vector<std::uint8_t>> masks(words_count,
                                                 std::vector<std::uint8_t>(grid.size(), 0));
    const std::vector<cplx>& poles = rep.family().poles();
    parallel_for(words_count, [&](std::size_t w) {
        if (degenerate[w]) return;
        TraceOnBoundary f(rep, words[w], t);
        count_zeros_recursive(f, grid, poles, std::abs(t), 0, grid.nx, 0, grid.ny, counts[w],
                              masks[w]);
    });

    TraceDivisorResult result{DivisorCloud{{}, n, t}, ScanField(grid), {}, std::move(degenerate),
                              0};
    result.density.meta.kind = "divisor-density";
    result.density.meta.n = n;
    result.density.meta.trials = words_count;
    result.density.meta.seed = seed;
    result.per_word_totals.assign(words_count, 0);

    double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(words_count) *
                          grid.cell_area());
    for (std::size_t w = 0; w < words_count; ++w) {
        for (std::size_t node = 0; node < grid.size(); ++node) {
            if (masks[w][node]) {
                result.density.mask[node] = 1;
                continue;
            }
            long c = counts[w][node];
            if (c == 0) continue;
            result.per_word_totals[w] += c;
            result.cloud.entries.push_back(
                {grid.node(node % grid.nx, node / grid.nx), c, w});
            result.density.values[node] += static_cast<double>(c) * scale;
        }
    }
    for (std::uint8_t m : result.density.mask)
        if (m) ++result.masked_cells;
    return result;
}

GraphVolumeRecord graph_volume(const Rep& rep, const Word& word, const std::vector<cplx>& v0,
                               const ScanGrid& grid, ProductOrder order) {
    require_scan_grid(grid);
    if (v0.size() != rep.dimension())
        throw Error(ErrorKind::Dimension, "start vector dimension mismatch");
    double v0_norm = 0.0;
    for (cplx z : v0) v0_norm += std::norm(z);
    if (!(v0_norm > 0.0)) throw Error(ErrorKind::Config, "start section lift vanishes");

    ScanField field(grid);
    field.meta.kind = "log-section-norm";
    parallel_for(grid.size(), [&](std::size_t node) {
        cplx lambda = grid.node(node % grid.nx, node / grid.nx);
        try {
            ScaledProduct p = word_product(rep, word, lambda, order);
            std::vector<cplx> image = p.matrix.apply(v0);
            double norm2 = 0.0;
            for (cplx z : image) norm2 += std::norm(z);
            field.values[node] = p.log_scale + 0.5 * std::log(norm2);
        } catch (const Error&) {
            field.mask[node] = 1;
        }
    });

    ScanField mass_field = ddc_density(field);
    std::size_t interior_total = (grid.nx - 2) * (grid.ny - 2);
    std::size_t masked_interior = interior_total - mass_field.unmasked_count();

    GraphVolumeRecord record;
    record.length = word.length();
    record.masked_fraction =
        static_cast<double>(masked_interior) / static_cast<double>(interior_total);
    if (record.masked_fraction > 0.10)
        throw Error(ErrorKind::VolumeUnreliable,
                    "more than 10% of interior nodes failed to evaluate");
    record.vol_u = static_cast<double>(interior_total) * grid.cell_area();
    record.mass = mass_field.sum_unmasked();
    record.total = record.vol_u + record.mass;
    record.eps_disc = measure_eps_disc(grid);
    return record;
}

GrowthReport mean_graph_volume(const Rep& rep, const StepMeasure& mu, const std::vector<cplx>& v0,
                               const ScanGrid& grid, const std::vector<std::size_t>& lengths,
                               std::size_t trials, std::uint64_t seed, bool dual,
                               ProductOrder order, std::size_t compare_n,
                               std::size_t compare_trials) {
    if (lengths.size() < 2) throw Error(ErrorKind::Config, "need at least two lengths for a slope");
    if (trials < 2) throw Error(ErrorKind::Config, "need at least 2 trials");

    Rep target = dual ? rep.dual() : rep;
    GrowthReport report;
    report.dual = dual;

    for (std::size_t li = 0; li < lengths.size(); ++li) {
        std::vector<double> totals(trials);
        parallel_for(trials, [&](std::size_t tr) {
            SplitMix64 rng = derive_stream(seed, {stream::kGraph, li, tr});
            Word w = mu.sample_word(lengths[li], rng);
            totals[tr] = graph_volume(target, w, v0, grid, order).total;
        });
        double mean = 0.0;
        for (double v : totals) mean += v;
        mean /= static_cast<double>(trials);
        double var = 0.0;
        for (double v : totals) var += (v - mean) * (v - mean);
        var /= static_cast<double>(trials - 1);
        report.rows.push_back({lengths[li], mean, std::sqrt(var / static_cast<double>(trials))});
    }

    // weighted least squares for the volume-vs-n slope
    double sw = 0.0, swx = 0.0, swy = 0.0;
    for (const GrowthRow& row : report.rows) {
        double se = std::max(row.stderr_, 1e-12);
        double w = 1.0 / (se * se);
        sw += w;
        swx += w * static_cast<double>(row.n);
        swy += w * row.mean_volume;
    }
    double xbar = swx / sw, ybar = swy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (const GrowthRow& row : report.rows) {
        double se = std::max(row.stderr_, 1e-12);
        double w = 1.0 / (se * se);
        double dx = static_cast<double>(row.n) - xbar;
        sxx += w * dx * dx;
        sxy += w * dx * (row.mean_volume - ybar);
    }
    report.slope = sxy / sxx;
    report.slope_stderr = std::sqrt(1.0 / sxx);
    report.vol_u = static_cast<double>((grid.nx - 2) * (grid.ny - 2)) * grid.cell_area();

    if (compare_trials > 0) {
        if (compare_n == 0) compare_n = lengths.back();
        // T_1 mass for the primal walk, the dual-side current mass otherwise;
        // either way it is the ddc mass of the top field of the walk driving
        // the graphs
        ChiFieldResult fields = chi_field(rep, mu, grid, compare_n, compare_trials,
                                          seed_mix(seed, 0xC0117A5Eull),
                                          dual ? ChiFieldWhich::Bottom : ChiFieldWhich::Top);
        const ScanField& potential = dual ? *fields.dual_top : *fields.chi1;
        report.current_mass = ddc_density(potential).sum_unmasked();
        report.slope_to_mass_ratio =
            (report.current_mass != 0.0) ? report.slope / report.current_mass : 0.0;
        report.compared = true;
    }
    return report;
}

}  // namespace bifurc
