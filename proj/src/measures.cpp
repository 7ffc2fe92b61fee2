#include "bifurc/measures.hpp"

#include <algorithm>
#include <cmath>

#include "bifurc/errors.hpp"
#include "bifurc/parallel.hpp"
#include "bifurc/proximality.hpp"
#include "bifurc/rng.hpp"

namespace bifurc {

namespace {

// x <- rho(w) x, applying letters right-to-left, renormalized to unit norm
void apply_word_to_vector(const GeneratorImages& images, const Word& w, std::vector<cplx>& x) {
    for (auto it = w.letters.rbegin(); it != w.letters.rend(); ++it) {
        x = images.letter(*it).apply(x);
        double norm2 = 0.0;
        for (cplx z : x) norm2 += std::norm(z);
        if (!(norm2 > 0.0))
            throw Error(ErrorKind::Singular, "chain vector collapsed to zero");
        double inv = 1.0 / std::sqrt(norm2);
        for (cplx& z : x) z *= inv;
    }
}

}  // namespace

PointCloud stationary_sample(const Rep& rep, cplx lambda, const StepMeasure& mu,
                             std::size_t burn_in, std::size_t count, std::size_t thinning,
                             std::uint64_t seed, bool dual, std::size_t chains,
                             const std::vector<cplx>* start) {
    if (burn_in < 1) throw Error(ErrorKind::Config, "burn_in must be >= 1");
    if (count < 1) throw Error(ErrorKind::Config, "need at least one sample");
    if (thinning < 1) throw Error(ErrorKind::Config, "thinning must be >= 1");
    if (chains < 1) chains = 1;

    Rep target = dual ? rep.dual() : rep;
    GeneratorImages images = images_at(target, lambda);
    std::size_t d = rep.dimension();

    PointCloud cloud;
    cloud.dual = dual;
    cloud.lambda = lambda;
    cloud.burn_in = burn_in;
    cloud.thinning = thinning;
    cloud.seed = seed;

    // cheap diagnostic: a moderately long sampled word should be proximal
    {
        SplitMix64 rng = derive_stream(seed, {stream::kChain, 0xD1A6ull});
        Word probe = mu.sample_word(48, rng);
        try {
            ScaledProduct p = word_product(images, probe, ProductOrder::Right);
            cloud.proximality_warning = !check_proximal(p.matrix, 1e-6).is_proximal;
        } catch (const Error&) {
            cloud.proximality_warning = true;
        }
    }

    std::size_t per_chain = (count + chains - 1) / chains;
    std::vector<std::vector<ProjPoint>> chunks(chains);
    parallel_for(chains, [&](std::size_t c) {
        SplitMix64 rng = derive_stream(seed, {stream::kChain, c});
        std::vector<cplx> x(d, cplx(0.0, 0.0));
        x[0] = 1.0;
        if (start) {
            if (start->size() != d)
                throw Error(ErrorKind::Dimension, "start vector dimension mismatch");
            x = *start;
        }
        std::vector<ProjPoint> samples;
        samples.reserve(per_chain);
        for (std::size_t step = 0; step < burn_in; ++step)
            apply_word_to_vector(images, mu.atoms()[mu.draw_atom(rng)].first, x);
        while (samples.size() < per_chain) {
            for (std::size_t s = 0; s < thinning; ++s)
                apply_word_to_vector(images, mu.atoms()[mu.draw_atom(rng)].first, x);
            samples.emplace_back(x);
        }
        chunks[c] = std::move(samples);
    });
    for (auto& chunk : chunks)
        for (auto& p : chunk) {
            if (cloud.points.size() == count) break;
            cloud.points.push_back(std::move(p));
        }
    return cloud;
}

FurstenbergReport furstenberg_check(const Rep& rep, cplx lambda, const StepMeasure& mu,
                                    const PointCloud& cloud, std::size_t chi_n,
                                    std::size_t chi_trials, std::uint64_t chi_seed) {
    if (cloud.points.empty()) throw Error(ErrorKind::Config, "empty cloud");
    Rep target = cloud.dual ? rep.dual() : rep;
    GeneratorImages images = images_at(target, lambda);

    // per cloud point, the mu-integral is an exact finite sum over atoms
    std::vector<double> contributions(cloud.points.size());
    parallel_for(cloud.points.size(), [&](std::size_t pi) {
        const std::vector<cplx>& v = cloud.points[pi].coords;
        double vnorm2 = 0.0;
        for (cplx z : v) vnorm2 += std::norm(z);
        double acc = 0.0;
        for (const auto& [word, weight] : mu.atoms()) {
            std::vector<cplx> image = v;
            // apply without per-step renormalization: atoms are short
            for (auto it = word.letters.rbegin(); it != word.letters.rend(); ++it)
                image = images.letter(*it).apply(image);
            double inorm2 = 0.0;
            for (cplx z : image) inorm2 += std::norm(z);
            acc += weight * 0.5 * std::log(inorm2 / vnorm2);
        }
        contributions[pi] = acc;
    });

    FurstenbergReport report;
    double mean = 0.0;
    for (double c : contributions) mean += c;
    mean /= static_cast<double>(contributions.size());
    double var = 0.0;
    for (double c : contributions) var += (c - mean) * (c - mean);
    var /= std::max<std::size_t>(1, contributions.size() - 1);
    report.integral = mean;
    report.integral_stderr = std::sqrt(var / static_cast<double>(contributions.size()));

    report.chi = chi_top(target, lambda, mu, chi_n, chi_trials, chi_seed);
    report.difference = std::abs(report.integral - report.chi.value);
    report.combined_stderr = std::sqrt(report.integral_stderr * report.integral_stderr +
                                       report.chi.stderr_ * report.chi.stderr_);
    report.within_tolerance = report.difference <= 3.0 * report.combined_stderr;
    return report;
}

namespace {

RenderResult histogram2d(const std::vector<std::pair<double, double>>& xy, const Box& window,
                         std::size_t resolution) {
    RenderResult r;
    r.width = resolution;
    r.height = resolution;
    r.window = window;
    r.counts.assign(resolution * resolution, 0);
    double sx = static_cast<double>(resolution) / (window.re1 - window.re0);
    double sy = static_cast<double>(resolution) / (window.im1 - window.im0);
    for (const auto& [x, y] : xy) {
        if (x < window.re0 || x >= window.re1 || y < window.im0 || y >= window.im1) {
            ++r.dropped;
            continue;
        }
        auto i = static_cast<std::size_t>((x - window.re0) * sx);
        auto j = static_cast<std::size_t>((y - window.im0) * sy);
        i = std::min(i, resolution - 1);
        j = std::min(j, resolution - 1);
        ++r.counts[j * resolution + i];
    }
    std::uint32_t max_count = 0;
    for (std::uint32_t c : r.counts) max_count = std::max(max_count, c);
    r.intensity.assign(r.counts.size(), 0.0);
    if (max_count > 0) {
        double denom = std::log1p(static_cast<double>(max_count));
        for (std::size_t i = 0; i < r.counts.size(); ++i)
            r.intensity[i] = std::log1p(static_cast<double>(r.counts[i])) / denom;
    }
    return r;
}

double percentile(std::vector<double> xs, double p) {
    if (xs.empty()) return 0.0;
    std::size_t k = static_cast<std::size_t>(p * static_cast<double>(xs.size() - 1));
    std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(k), xs.end());
    return xs[k];
}

}  // namespace

RenderResult limit_set_render(const PointCloud& cloud, std::size_t chart, std::size_t resolution,
                              const Box* window, std::size_t axis) {
    if (cloud.points.empty()) throw Error(ErrorKind::Config, "empty cloud");
    if (resolution < 2) throw Error(ErrorKind::Config, "resolution must be >= 2");
    std::size_t d = cloud.points[0].dim();
    if (chart >= d) throw Error(ErrorKind::Config, "chart index out of range");
    if (axis == SIZE_MAX) axis = (chart == 0) ? 1 : 0;
    if (axis >= d || axis == chart) throw Error(ErrorKind::Config, "axis index invalid");

    std::vector<std::pair<double, double>> xy;
    xy.reserve(cloud.points.size());
    std::size_t degenerate = 0;
    for (const ProjPoint& p : cloud.points) {
        double chart_mag = std::abs(p.coords[chart]);
        // coordinates are max-modulus normalized, so the largest entry is 1
        if (chart_mag < 1e-9) {
            ++degenerate;
            continue;
        }
        cplx w = p.coords[axis] / p.coords[chart];
        xy.emplace_back(w.real(), w.imag());
    }
    if (2 * degenerate > cloud.points.size())
        throw Error(ErrorKind::ChartDegenerate,
                    "more than half the cloud is at infinity in this chart; pick another");

    Box win{0, 0, 0, 0};
    if (window) {
        win = *window;
    } else {
        std::vector<double> xs, ys;
        xs.reserve(xy.size());
        ys.reserve(xy.size());
        for (const auto& [x, y] : xy) {
            xs.push_back(x);
            ys.push_back(y);
        }
        double x0 = percentile(xs, 0.02), x1 = percentile(xs, 0.98);
        double y0 = percentile(ys, 0.02), y1 = percentile(ys, 0.98);
        double padx = 0.1 * std::max(x1 - x0, 1e-6), pady = 0.1 * std::max(y1 - y0, 1e-6);
        win = {x0 - padx, x1 + padx, y0 - pady, y1 + pady};
    }
    RenderResult r = histogram2d(xy, win, resolution);
    r.dropped += degenerate;
    return r;
}

RenderResult limit_set_render_sphere(const PointCloud& cloud, std::size_t resolution) {
    if (cloud.points.empty()) throw Error(ErrorKind::Config, "empty cloud");
    if (cloud.points[0].dim() != 2)
        throw Error(ErrorKind::Config, "sphere net only defined for d = 2");
    std::vector<std::pair<double, double>> az_pol;
    az_pol.reserve(cloud.points.size());
    for (const ProjPoint& p : cloud.points) {
        cplx z0 = p.coords[0], z1 = p.coords[1];
        double azimuth, polar;
        if (std::abs(z0) >= std::abs(z1)) {
            cplx w = z1 / z0;
            azimuth = std::arg(w);
            polar = 2.0 * std::atan(std::abs(w));
        } else {
            cplx w = z0 / z1;  // chart at infinity
            azimuth = -std::arg(w);
            polar = 3.14159265358979323846 - 2.0 * std::atan(std::abs(w));
        }
        az_pol.emplace_back(azimuth, polar);
    }
    Box win{-3.14159265358979323846, 3.14159265358979323846, 0.0, 3.14159265358979323846};
    return histogram2d(az_pol, win, resolution);
}

PointCloud transform_cloud(const PointCloud& cloud, const CMatrix& m) {
    PointCloud out = cloud;
    for (ProjPoint& p : out.points) p = ProjPoint(m.apply(p.coords));
    return out;
}

}  // namespace bifurc
