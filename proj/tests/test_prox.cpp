#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "bifurc/io.hpp"
#include "bifurc/proximality.hpp"
#include "bifurc/rng.hpp"

#ifndef TEST_CONFIG_DIR
#define TEST_CONFIG_DIR "tests/configs"
#endif

using namespace bifurc;

namespace {

std::string config_path(const std::string& name) {
    return std::string(TEST_CONFIG_DIR) + "/" + name;
}

}  // namespace

TEST_CASE("check_proximal: diagonal with clear gap") {
    CMatrix m(3);
    m(0, 0) = 2.0;
    m(1, 1) = 1.0;
    m(2, 2) = 0.5;
    ProximalityVerdict v = check_proximal(m);
    CHECK(v.is_proximal);
    CHECK(v.gap == doctest::Approx(std::log(2.0)).epsilon(1e-10));
    REQUIRE(v.fix_plus.has_value());
    // attracting point [1:0:0]
    CHECK(std::abs(v.fix_plus->coords[0]) == doctest::Approx(1.0));
    CHECK(std::abs(v.fix_plus->coords[1]) <= 1e-10);
    CHECK(std::abs(v.fix_plus->coords[2]) <= 1e-10);
    // repelling hyperplane {x0 = 0}: covector along e0
    REQUIRE(v.fix_minus.has_value());
    CHECK(std::abs(v.fix_minus->covector[0]) == doctest::Approx(1.0));
    CHECK(std::abs(v.fix_minus->covector[1]) <= 1e-10);
    CHECK(std::abs(v.fix_minus->covector[2]) <= 1e-10);
}

TEST_CASE("check_proximal: rotations and Jordan blocks are not proximal") {
    CMatrix rot(2);
    rot(0, 0) = std::cos(0.9);
    rot(0, 1) = -std::sin(0.9);
    rot(1, 0) = std::sin(0.9);
    rot(1, 1) = std::cos(0.9);
    ProximalityVerdict v = check_proximal(rot);
    CHECK_FALSE(v.is_proximal);
    CHECK(v.gap == 0.0);

    CMatrix jordan(2);
    jordan(0, 0) = 1.0;
    jordan(0, 1) = 1.0;
    jordan(1, 1) = 1.0;
    v = check_proximal(jordan);
    CHECK_FALSE(v.is_proximal);
    CHECK(v.gap == 0.0);
}

TEST_CASE("check_proximal: fixed objects satisfy their defining equations") {
    Config cfg = load_config(config_path("schottky_classical.json"));
    Rep rep(cfg.family);
    StepMeasure mu = uniform_symmetric(2);
    SplitMix64 rng(4);
    for (int i = 0; i < 12; ++i) {
        Word w = mu.sample_word(12, rng);
        ScaledProduct p = word_product(rep, w, cplx(0.0, 0.0), ProductOrder::Right);
        ProximalityVerdict v = check_proximal(p.matrix);
        if (!v.is_proximal) continue;
        EigenResult eig = eigen_decompose(p.matrix, false);
        cplx mu1 = eig.values[0];
        // M Fix+ = mu1 Fix+ within 1e-6 ||M||
        std::vector<cplx> mv = p.matrix.apply(v.fix_plus->coords);
        double defect = 0.0;
        for (std::size_t r = 0; r < 2; ++r) defect += std::norm(mv[r] - mu1 * v.fix_plus->coords[r]);
        CHECK(std::sqrt(defect) <= 1e-6 * p.matrix.frobenius());
        // Fix+ does not lie on Fix-
        cplx pairing(0.0, 0.0);
        for (std::size_t r = 0; r < 2; ++r)
            pairing += v.fix_minus->covector[r] * v.fix_plus->coords[r];
        CHECK(std::abs(pairing) > 1e-8);
    }
}

TEST_CASE("word_gap_field: diagonal family on an annulus matches 2 log|lambda|") {
    Config cfg = load_config(config_path("diag_biased.json"));
    Rep rep(cfg.family);
    ScanGrid grid(1.1, 2.5, -0.7, 0.7, 12, 12);
    ScanField field = word_gap_field(rep, Word{{1}}, grid);
    for (std::size_t j = 0; j < grid.ny; ++j) {
        for (std::size_t i = 0; i < grid.nx; ++i) {
            std::size_t node = grid.index(i, j);
            REQUIRE_FALSE(field.mask[node]);
            double expected = 2.0 * std::log(std::abs(grid.node(i, j)));
            if (expected > 1e-4)
                CHECK(field.values[node] == doctest::Approx(expected).epsilon(1e-9));
        }
    }
}

TEST_CASE("word_gap_field: zero-gap cells exactly on the unit circle") {
    Config cfg = load_config(config_path("diag_biased.json"));
    Rep rep(cfg.family);
    // nodes at 0.0, 0.1, ..., 1.1 in both coordinates: (0.6, 0.8) and (1.0, 0.0)
    // land on |lambda| = 1 up to rounding
    ScanGrid grid(-0.05, 1.15, -0.05, 1.15, 12, 12);
    ScanField field = word_gap_field(rep, Word{{1}}, grid, 1e-4);
    std::size_t zero_cells = 0;
    for (std::size_t j = 0; j < grid.ny; ++j) {
        for (std::size_t i = 0; i < grid.nx; ++i) {
            std::size_t node = grid.index(i, j);
            if (field.mask[node]) continue;  // the node at the origin is a pole
            cplx z = grid.node(i, j);
            bool oracle_zero = std::abs(2.0 * std::log(std::abs(z))) <= 1e-4;
            bool field_zero = field.values[node] <= 0.0;
            CHECK(field_zero == oracle_zero);
            if (field_zero) ++zero_cells;
        }
    }
    CHECK(zero_cells == 4);  // (0.6, 0.8), (0.8, 0.6), (1.0, 0.0), (0.0, 1.0)
}

TEST_CASE("word_gap_field: constant identity family has gap identically zero") {
    Config cfg = load_config(config_path("identity.json"));
    Rep rep(cfg.family);
    ScanGrid grid(-1, 1, -1, 1, 8, 8);
    ScanField field = word_gap_field(rep, Word{{1, 1}}, grid);
    for (std::size_t node = 0; node < grid.size(); ++node) {
        REQUIRE_FALSE(field.mask[node]);
        CHECK(field.values[node] == 0.0);
    }
}

TEST_CASE("stability_scan: conjugation family flags nothing") {
    Config cfg = load_config(config_path("conjugation.json"));
    Rep rep(cfg.family);
    ScanGrid grid(-1, 1, -1, 1, 17, 17);
    StabilityReport report = stability_scan(rep, cfg.walk, grid, {4, 8, 16}, 12, 31);
    CHECK(report.flagged_word_count == 0);
    CHECK(report.flagged_cell_count == 0);
}

TEST_CASE("stability_scan: diagonal family on an annulus avoiding |lambda|=1 flags nothing") {
    Config cfg = load_config(config_path("diag_symmetric.json"));
    Rep rep(cfg.family);
    ScanGrid grid(1.2, 2.2, -0.4, 0.4, 16, 12);
    StabilityReport report = stability_scan(rep, cfg.walk, grid, {3, 6, 9}, 16, 7);
    CHECK(report.flagged_word_count == 0);
}

TEST_CASE("stability_scan: Riley family flags words whose trace crosses [-2,2]") {
    Config cfg = load_config(config_path("riley.json"));
    Rep rep(cfg.family);
    // odd node counts put a node row exactly on the real axis, where elliptic
    // trace values are detected exactly
    ScanGrid grid(-1.015625, 1.015625, -1.015625, 1.015625, 33, 33);
    StabilityReport report = stability_scan(rep, cfg.walk, grid, {2, 4, 8}, 24, 11);
    CHECK(report.flagged_word_count > 0);
    CHECK(report.flagged_cell_count > 0);
}

TEST_CASE("stability_scan exhaustive: the word ab is flagged on the Riley slice") {
    Config cfg = load_config(config_path("riley.json"));
    Rep rep(cfg.family);
    ScanGrid grid(-1.015625, 1.015625, -1.015625, 1.015625, 33, 33);
    StabilityReport report = stability_scan_exhaustive(rep, grid, 2);
    // oracle: tr rho(ab) = 2 lambda + 2 crosses [-2, 2] for real lambda in [-2, 0]
    bool found_ab = false;
    for (const WordStabilityRecord& rec : report.words) {
        if (rec.word == Word{{1, 2}}) {
            found_ab = true;
            CHECK(rec.flagged);
            // non-proximal nodes: real-axis nodes with lambda in [-2, 0]
            std::size_t expected = 0;
            for (std::size_t i = 0; i < grid.nx; ++i) {
                for (std::size_t j = 0; j < grid.ny; ++j) {
                    cplx z = grid.node(i, j);
                    cplx tr = 2.0 * z + 2.0;
                    if (std::abs(tr.imag()) < 1e-12 && std::abs(tr.real()) <= 2.0) ++expected;
                }
            }
            CHECK(rec.nonproximal_nodes == expected);
        }
    }
    CHECK(found_ab);
}

TEST_CASE("stability_scan: flagged boundaries persist under grid refinement") {
    Config cfg = load_config(config_path("riley.json"));
    Rep rep(cfg.family);
    ScanGrid coarse(-1.015625, 1.015625, -1.015625, 1.015625, 33, 33);
    ScanGrid fine(-1.015625, 1.015625, -1.015625, 1.015625, 67, 67);
    StabilityReport rc = stability_scan_exhaustive(rep, coarse, 3);
    StabilityReport rf = stability_scan_exhaustive(rep, fine, 3);
    REQUIRE(rc.flagged_cell_count > 0);
    REQUIRE(rf.flagged_cell_count > 0);

    auto cells_of = [](const StabilityReport& r, const ScanGrid& g) {
        std::vector<cplx> out;
        for (std::size_t j = 0; j < g.ny; ++j)
            for (std::size_t i = 0; i < g.nx; ++i)
                if (r.bifurcation_cells.values[g.index(i, j)] > 0.0) out.push_back(g.node(i, j));
        return out;
    };
    std::vector<cplx> cc = cells_of(rc, coarse), fc = cells_of(rf, fine);

    // Hausdorff distance between flagged sets stays within 2 coarse diagonals
    double diag = std::hypot(coarse.hx(), coarse.hy());
    double worst = 0.0;
    for (cplx a : cc) {
        double best = 1e300;
        for (cplx b : fc) best = std::min(best, std::abs(a - b));
        worst = std::max(worst, best);
    }
    for (cplx b : fc) {
        double best = 1e300;
        for (cplx a : cc) best = std::min(best, std::abs(b - a));
        worst = std::max(worst, best);
    }
    CHECK(worst <= 2.0 * diag);
}

TEST_CASE("stability_scan: no isolated single-node verdict flips on refinement") {
    Config cfg = load_config(config_path("riley.json"));
    Rep rep(cfg.family);
    ScanGrid grid(-1.015625, 1.015625, -1.015625, 1.015625, 33, 33);
    // the non-proximal locus of ab is a run of consecutive real-axis nodes
    ScanField gap = word_gap_field(rep, Word{{1, 2}}, grid, 1e-4);
    std::set<std::pair<std::size_t, std::size_t>> zero_nodes;
    for (std::size_t j = 0; j < grid.ny; ++j)
        for (std::size_t i = 0; i < grid.nx; ++i)
            if (!gap.mask[grid.index(i, j)] && gap.values[grid.index(i, j)] <= 0.0)
                zero_nodes.insert({i, j});
    REQUIRE(zero_nodes.size() > 1);
    for (auto [i, j] : zero_nodes) {
        bool has_neighbor = zero_nodes.count({i + 1, j}) || (i > 0 && zero_nodes.count({i - 1, j})) ||
                            zero_nodes.count({i, j + 1}) || (j > 0 && zero_nodes.count({i, j - 1}));
        CHECK(has_neighbor);
    }
}
