#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bifurc/errors.hpp"
#include "bifurc/io.hpp"
#include "bifurc/measures.hpp"
#include "bifurc/rng.hpp"

#ifndef TEST_CONFIG_DIR
#define TEST_CONFIG_DIR "tests/configs"
#endif

using namespace bifurc;

namespace {

std::string config_path(const std::string& name) {
    return std::string(TEST_CONFIG_DIR) + "/" + name;
}

// isometric-circle disks of the classical Schottky pair and their inverses:
// |z + 1| <= 1, |z - 2| <= 1 and the same translated by 4i
bool inside_schottky_disks(cplx z) {
    return std::abs(z + cplx(1, 0)) <= 1.0 + 1e-9 || std::abs(z - cplx(2, 0)) <= 1.0 + 1e-9 ||
           std::abs(z - cplx(-1, 4)) <= 1.0 + 1e-9 || std::abs(z - cplx(2, 4)) <= 1.0 + 1e-9;
}

}  // namespace

TEST_CASE("stationary sample: contracting family piles onto the attracting point") {
    Config cfg = load_config(config_path("contracting.json"));
    Rep rep(cfg.family);
    PointCloud cloud = stationary_sample(rep, cplx(0, 0), cfg.walk, 1000, 200, 2, 7);
    ProjPoint attractor = ProjPoint::basis(2, 0);
    double worst = 0.0;
    for (const ProjPoint& p : cloud.points)
        worst = std::max(worst, fubini_study_distance(p, attractor));
    CHECK(worst <= 1e-3);
}

TEST_CASE("stationary sample: identity family never leaves the start point") {
    Config cfg = load_config(config_path("identity.json"));
    Rep rep(cfg.family);
    PointCloud cloud = stationary_sample(rep, cplx(0, 0), cfg.walk, 5, 50, 1, 3);
    for (const ProjPoint& p : cloud.points) {
        CHECK(p.coords[0] == cplx(1.0, 0.0));
        CHECK(p.coords[1] == cplx(0.0, 0.0));
    }
    CHECK(cloud.proximality_warning);  // identity products are never proximal
}

TEST_CASE("stationary sample: Schottky cloud lives in the isometric disks") {
    Config cfg = load_config(config_path("schottky_classical.json"));
    Rep rep(cfg.family);
    PointCloud cloud = stationary_sample(rep, cplx(0, 0), cfg.walk, 64, 4000, 4, 11);
    CHECK_FALSE(cloud.proximality_warning);
    for (const ProjPoint& p : cloud.points) {
        // affine coordinate of [z0 : z1]
        REQUIRE(std::abs(p.coords[1]) > 1e-12);
        cplx z = p.coords[0] / p.coords[1];
        CHECK(inside_schottky_disks(z));
    }
}

TEST_CASE("stationary sample: deterministic and chain-count stable by seed") {
    Config cfg = load_config(config_path("schottky_classical.json"));
    Rep rep(cfg.family);
    PointCloud a = stationary_sample(rep, cplx(0, 0), cfg.walk, 32, 100, 2, 5, false, 4);
    PointCloud b = stationary_sample(rep, cplx(0, 0), cfg.walk, 32, 100, 2, 5, false, 4);
    REQUIRE(a.points.size() == b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i)
        CHECK(a.points[i].coords == b.points[i].coords);
}

TEST_CASE("stationarity: cloud averages are invariant under one more step") {
    Config cfg = load_config(config_path("schottky_classical.json"));
    Rep rep(cfg.family);
    PointCloud cloud = stationary_sample(rep, cplx(0, 0), cfg.walk, 128, 3000, 4, 23);
    GeneratorImages images = images_at(rep, cplx(0, 0));

    // eight projective polynomial kernels f_u(x) = |<x,u>|^2 / ||x||^2
    SplitMix64 rng(31);
    for (int fi = 0; fi < 8; ++fi) {
        std::vector<cplx> u = {cplx(rng.next_double() - 0.5, rng.next_double() - 0.5),
                               cplx(rng.next_double() - 0.5, rng.next_double() - 0.5)};
        auto kernel = [&](const std::vector<cplx>& x) {
            cplx inner = x[0] * std::conj(u[0]) + x[1] * std::conj(u[1]);
            double nx = std::norm(x[0]) + std::norm(x[1]);
            return std::norm(inner) / nx;
        };
        // paired difference: sum_atoms p f(rho(gamma) x) - f(x)
        double mean = 0.0, m2 = 0.0;
        std::size_t count = 0;
        for (const ProjPoint& p : cloud.points) {
            double before = kernel(p.coords);
            double after = 0.0;
            for (const auto& [word, weight] : cfg.walk.atoms()) {
                std::vector<cplx> y = p.coords;
                for (auto it = word.letters.rbegin(); it != word.letters.rend(); ++it)
                    y = images.letter(*it).apply(y);
                after += weight * kernel(y);
            }
            double d = after - before;
            ++count;
            double delta = d - mean;
            mean += delta / static_cast<double>(count);
            m2 += delta * (d - mean);
        }
        double stderr_ = std::sqrt(m2 / static_cast<double>(count - 1) /
                                   static_cast<double>(count));
        CHECK(std::abs(mean) <= 3.0 * stderr_ + 1e-12);
    }
}

TEST_CASE("properness proxy: hyperplane neighborhoods carry vanishing mass") {
    Config cfg = load_config(config_path("schottky_classical.json"));
    Rep rep(cfg.family);
    PointCloud cloud = stationary_sample(rep, cplx(0, 0), cfg.walk, 128, 2000, 4, 17);
    SplitMix64 rng(41);
    for (int hi = 0; hi < 16; ++hi) {
        ProjHyperplane h({cplx(rng.next_double() - 0.5, rng.next_double() - 0.5),
                          cplx(rng.next_double() - 0.5, rng.next_double() - 0.5)});
        double prev = 2.0;
        for (double delta : {1e-1, 1e-2, 1e-3}) {
            std::size_t close = 0;
            for (const ProjPoint& p : cloud.points)
                if (fs_distance_to_hyperplane(p, h) < delta) ++close;
            double frac = static_cast<double>(close) / static_cast<double>(cloud.points.size());
            CHECK(frac <= prev);
            prev = frac;
        }
    }
}

TEST_CASE("two different chain starts give matched kernel means") {
    Config cfg = load_config(config_path("schottky_classical.json"));
    Rep rep(cfg.family);
    std::vector<cplx> start_a = {cplx(1, 0), cplx(0, 0)};
    std::vector<cplx> start_b = {cplx(0.3, 0.1), cplx(-0.7, 0.55)};
    PointCloud ca = stationary_sample(rep, cplx(0, 0), cfg.walk, 256, 3000, 4, 19, false, 4, &start_a);
    PointCloud cb = stationary_sample(rep, cplx(0, 0), cfg.walk, 256, 3000, 4, 20, false, 4, &start_b);
    SplitMix64 rng(47);
    for (int fi = 0; fi < 4; ++fi) {
        std::vector<cplx> u = {cplx(rng.next_double() - 0.5, rng.next_double() - 0.5),
                               cplx(rng.next_double() - 0.5, rng.next_double() - 0.5)};
        auto kernel = [&](const ProjPoint& p) {
            cplx inner = p.coords[0] * std::conj(u[0]) + p.coords[1] * std::conj(u[1]);
            double nx = std::norm(p.coords[0]) + std::norm(p.coords[1]);
            return std::norm(inner) / nx;
        };
        auto stats = [&](const PointCloud& c) {
            double mean = 0.0;
            for (const ProjPoint& p : c.points) mean += kernel(p);
            mean /= static_cast<double>(c.points.size());
            double var = 0.0;
            for (const ProjPoint& p : c.points) {
                double d = kernel(p) - mean;
                var += d * d;
            }
            var /= static_cast<double>(c.points.size() - 1);
            return std::pair<double, double>(mean,
                                             std::sqrt(var / static_cast<double>(c.points.size())));
        };
        auto [ma, ea] = stats(ca);
        auto [mb, eb] = stats(cb);
        CHECK(std::abs(ma - mb) <= 3.0 * std::sqrt(ea * ea + eb * eb) + 1e-3);
    }
}

TEST_CASE("furstenberg: identity family integral is exactly zero") {
    Config cfg = load_config(config_path("identity.json"));
    Rep rep(cfg.family);
    PointCloud cloud = stationary_sample(rep, cplx(0, 0), cfg.walk, 5, 20, 1, 3);
    FurstenbergReport report = furstenberg_check(rep, cplx(0, 0), cfg.walk, cloud, 50, 8, 5);
    CHECK(report.integral == 0.0);
    CHECK(report.chi.value == 0.0);
    CHECK(report.within_tolerance);
}

TEST_CASE("furstenberg: biased diagonal walk recovers 0.5 log 2") {
    Config cfg = load_config(config_path("diag_biased.json"));
    Rep rep(cfg.family);
    PointCloud cloud = stationary_sample(rep, cplx(2, 0), cfg.walk, 300, 2000, 2, 9);
    FurstenbergReport report = furstenberg_check(rep, cplx(2, 0), cfg.walk, cloud, 2000, 100, 13);
    // closed-form atom sum at the concentrated measure: 0.75 log 2 - 0.25 log 2
    CHECK(std::abs(report.integral - 0.5 * std::log(2.0)) <= 1e-6);
    CHECK(report.within_tolerance);
}

TEST_CASE("furstenberg: Schottky integral matches chi_top within tolerance") {
    Config cfg = load_config(config_path("schottky_classical.json"));
    Rep rep(cfg.family);
    PointCloud cloud = stationary_sample(rep, cplx(0, 0), cfg.walk, 256, 4000, 4, 21);
    FurstenbergReport report = furstenberg_check(rep, cplx(0, 0), cfg.walk, cloud, 600, 128, 23);
    CHECK(report.within_tolerance);
}

TEST_CASE("render: single-point cloud lights one pixel") {
    Config cfg = load_config(config_path("identity.json"));
    Rep rep(cfg.family);
    PointCloud cloud = stationary_sample(rep, cplx(0, 0), cfg.walk, 5, 10, 1, 3);
    Box window{-1, 1, -1, 1};
    RenderResult r = limit_set_render(cloud, 0, 32, &window);
    std::size_t lit = 0;
    for (double v : r.intensity)
        if (v > 0.0) ++lit;
    CHECK(lit == 1);
}

TEST_CASE("render: Schottky pixels stay inside the isometric disks") {
    Config cfg = load_config(config_path("schottky_classical.json"));
    Rep rep(cfg.family);
    PointCloud cloud = stationary_sample(rep, cplx(0, 0), cfg.walk, 64, 4000, 4, 11);
    Box window{-2.5, 3.5, -1.5, 5.5};
    RenderResult r = limit_set_render(cloud, 1, 96, &window, 0);
    double hx = (window.re1 - window.re0) / 96.0, hy = (window.im1 - window.im0) / 96.0;
    for (std::size_t j = 0; j < 96; ++j) {
        for (std::size_t i = 0; i < 96; ++i) {
            if (r.counts[j * 96 + i] == 0) continue;
            cplx center(window.re0 + (static_cast<double>(i) + 0.5) * hx,
                        window.im0 + (static_cast<double>(j) + 0.5) * hy);
            // a lit pixel must touch the disk union (half-diagonal slack)
            bool near = false;
            for (double dx : {-0.5, 0.5})
                for (double dy : {-0.5, 0.5})
                    if (inside_schottky_disks(center + cplx(dx * hx, dy * hy))) near = true;
            CHECK(near);
        }
    }
}

TEST_CASE("render: pushing the cloud by a generator moves pixels at most one cell") {
    Config cfg = load_config(config_path("schottky_classical.json"));
    Rep rep(cfg.family);
    PointCloud cloud = stationary_sample(rep, cplx(0, 0), cfg.walk, 64, 6000, 4, 13);
    PointCloud pushed = transform_cloud(cloud, rep.generator(0, false, cplx(0, 0)));
    Box window{-2.5, 3.5, -1.5, 5.5};
    std::size_t res = 64;
    RenderResult before = limit_set_render(cloud, 1, res, &window, 0);
    RenderResult after = limit_set_render(pushed, 1, res, &window, 0);

    // one-sided Hausdorff: every pixel lit after the push has a lit neighbor
    // within one cell diagonal before it (the pushed set is a subset of L)
    for (std::size_t j = 0; j < res; ++j) {
        for (std::size_t i = 0; i < res; ++i) {
            if (after.counts[j * res + i] == 0) continue;
            bool near = false;
            for (long dj = -1; dj <= 1 && !near; ++dj)
                for (long di = -1; di <= 1 && !near; ++di) {
                    long ii = static_cast<long>(i) + di, jj = static_cast<long>(j) + dj;
                    if (ii < 0 || jj < 0 || ii >= static_cast<long>(res) ||
                        jj >= static_cast<long>(res))
                        continue;
                    if (before.counts[static_cast<std::size_t>(jj) * res +
                                      static_cast<std::size_t>(ii)] > 0)
                        near = true;
                }
            CHECK(near);
        }
    }
}

TEST_CASE("render: degenerate chart is rejected with advice") {
    Config cfg = load_config(config_path("contracting.json"));
    Rep rep(cfg.family);
    PointCloud cloud = stationary_sample(rep, cplx(0, 0), cfg.walk, 1000, 100, 2, 7);
    // the cloud sits at [1:0]; chart 1 normalizes the vanishing coordinate
    CHECK_THROWS_AS(limit_set_render(cloud, 1, 32), Error);
    CHECK_NOTHROW(limit_set_render(cloud, 0, 32));
}

TEST_CASE("render: sphere net accepts d=2 clouds") {
    Config cfg = load_config(config_path("schottky_classical.json"));
    Rep rep(cfg.family);
    PointCloud cloud = stationary_sample(rep, cplx(0, 0), cfg.walk, 64, 500, 4, 11);
    RenderResult r = limit_set_render_sphere(cloud, 64);
    CHECK(r.width == 64);
    std::size_t lit = 0;
    for (std::uint32_t c : r.counts) lit += (c > 0);
    CHECK(lit > 0);
}

TEST_CASE("dual chains produce hyperplane clouds that avoid Fix+ directions") {
    Config cfg = load_config(config_path("schottky_classical.json"));
    Rep rep(cfg.family);
    PointCloud dual_cloud = stationary_sample(rep, cplx(0, 0), cfg.walk, 64, 500, 4, 15, true);
    CHECK(dual_cloud.dual);
    CHECK(dual_cloud.points.size() == 500);
}
