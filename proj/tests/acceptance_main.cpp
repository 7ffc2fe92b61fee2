// Acceptance suite: one pass/fail line per criterion, exit code = failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "bifurc/divisors.hpp"
#include "bifurc/errors.hpp"
#include "bifurc/io.hpp"
#include "bifurc/lyapunov.hpp"
#include "bifurc/measures.hpp"
#include "bifurc/proximality.hpp"
#include "bifurc/scan.hpp"

#ifndef TEST_CONFIG_DIR
#define TEST_CONFIG_DIR "tests/configs"
#endif
#ifndef BIFURCLAB_BIN
#define BIFURCLAB_BIN "./bifurclab"
#endif

using namespace bifurc;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void criterion(int id, const std::string& name, double time_limit_sec,
               const std::function<std::pair<bool, std::string>()>& body) {
    auto start = std::chrono::steady_clock::now();
    bool pass = false;
    std::string detail;
    try {
        auto [ok, text] = body();
        pass = ok;
        detail = text;
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (time_limit_sec > 0 && elapsed > time_limit_sec) {
        pass = false;
        detail += " [over time limit " + std::to_string(time_limit_sec) + "s]";
    }
    std::printf("[%2d] %s %s: %s (%.1f s)\n", id, pass ? "PASS" : "FAIL", name.c_str(),
                detail.c_str(), elapsed);
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

Config cfg(const std::string& name) {
    return load_config(std::string(TEST_CONFIG_DIR) + "/" + name);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.5g", v);
    return buf;
}

double l1_blocks(const ScanField& a, const ScanField& b, std::size_t block) {
    const ScanGrid& g = a.grid;
    std::size_t bx = (g.nx + block - 1) / block, by = (g.ny + block - 1) / block;
    std::vector<double> pa(bx * by, 0.0), pb(bx * by, 0.0);
    for (std::size_t j = 0; j < g.ny; ++j) {
        for (std::size_t i = 0; i < g.nx; ++i) {
            std::size_t node = g.index(i, j);
            if (a.mask[node] || b.mask[node]) continue;
            pa[(j / block) * bx + i / block] += std::abs(a.values[node]);
            pb[(j / block) * bx + i / block] += std::abs(b.values[node]);
        }
    }
    double sa = 0, sb = 0;
    for (double v : pa) sa += v;
    for (double v : pb) sb += v;
    if (sa == 0 || sb == 0) return 2.0;
    double dist = 0;
    for (std::size_t i = 0; i < pa.size(); ++i) dist += std::abs(pa[i] / sa - pb[i] / sb);
    return dist;
}

int run_cli(const std::string& args) {
    std::string command = std::string(BIFURCLAB_BIN) + " " + args + " > /dev/null 2>&1";
    int status = std::system(command.c_str());
    if (status < 0) return -1;
    return WEXITSTATUS(status);
}

}  // namespace

int main() {
    const std::vector<cplx> sample_lambdas = {cplx(0.0, 0.0), cplx(0.3, 0.0), cplx(-0.3, 0.0),
                                              cplx(0.2, 0.25), cplx(-0.1, -0.3)};

    criterion(1, "lelong-calibration", 1.0, [&]() {
        CalibrationReport cal = calibrate();
        bool ok = cal.lelong_mass >= 0.98 && cal.lelong_mass <= 1.02;
        return std::make_pair(ok, "mass=" + fmt(cal.lelong_mass));
    });

    criterion(2, "drift-oracle", 10.0, [&]() {
        Config c = cfg("diag_biased.json");
        LyapEstimate est = chi_top(Rep(c.family), cplx(2, 0), c.walk, 2000, 200, 424242);
        double target = 0.5 * std::log(2.0);
        bool ok = std::abs(est.value - target) <= 3.0 * est.stderr_ && est.stderr_ < 0.01;
        return std::make_pair(ok, "chi1=" + fmt(est.value) + " target=" + fmt(target) +
                                      " stderr=" + fmt(est.stderr_));
    });

    criterion(3, "sum-zero", 30.0, [&]() {
        Config c = cfg("schottky.json");
        Rep rep(c.family);
        double worst = 0.0;
        for (cplx lambda : sample_lambdas) {
            auto spec = chi_spectrum_qr(rep, lambda, c.walk, 300, 48, 333, 2);
            worst = std::max(worst, std::abs(spec[0].value + spec[1].value));
        }
        return std::make_pair(worst <= 1e-2, "max |chi1+chi2| = " + fmt(worst));
    });

    criterion(4, "dual-relation", 60.0, [&]() {
        Config schottky = cfg("schottky.json");
        DualSpectrumReport a =
            dual_spectrum_check(Rep(schottky.family), cplx(0.1, 0.1), schottky.walk, 400, 64, 44);
        Config d3 = cfg("d3_diag_rot.json");
        DualSpectrumReport b =
            dual_spectrum_check(Rep(d3.family), cplx(0, 0), d3.walk, 400, 64, 45);
        bool ok = a.within_tolerance && b.within_tolerance;
        return std::make_pair(ok, "max defects " + fmt(a.max_defect) + " (d=2), " +
                                      fmt(b.max_defect) + " (d=3)");
    });

    criterion(5, "estimator-cross-validation", 120.0, [&]() {
        struct FamilyCase {
            const char* file;
            cplx lambda;
        };
        bool ok = true;
        std::string detail;
        for (FamilyCase fc : {FamilyCase{"schottky.json", cplx(0.15, -0.2)},
                              FamilyCase{"d3_diag_rot.json", cplx(0, 0)}}) {
            Config c = cfg(fc.file);
            Rep rep(c.family);
            std::size_t d = c.family.dimension();
            auto spec = chi_spectrum_qr(rep, fc.lambda, c.walk, 300, 64, 55, d);
            for (std::size_t k = 1; k <= d; ++k) {
                LyapEstimate ext = chi_exterior(rep, fc.lambda, c.walk, 300, 64, 55, k);
                double partial = 0.0, var = ext.stderr_ * ext.stderr_;
                for (std::size_t i = 0; i < k; ++i) {
                    partial += spec[i].value;
                    var += spec[i].stderr_ * spec[i].stderr_;
                }
                double defect = std::abs(ext.value - partial);
                if (defect > 3.0 * std::sqrt(var)) ok = false;
                if (k == d) detail += "d=" + std::to_string(d) + ":" + fmt(defect) + " ";
            }
        }
        return std::make_pair(ok, "top-sum defects " + detail);
    });

    criterion(6, "proximality-iff-gap", 120.0, [&]() {
        Config schottky = cfg("schottky.json");
        Rep srep(schottky.family);
        bool ok = true;
        std::string detail;
        double min_frac = 1.0;
        for (cplx lambda : sample_lambdas) {
            auto spec = chi_spectrum_qr(srep, lambda, schottky.walk, 400, 64, 66, 2);
            double gap = spec[0].value - spec[1].value;
            double comb = std::sqrt(spec[0].stderr_ * spec[0].stderr_ +
                                    spec[1].stderr_ * spec[1].stderr_);
            if (!(gap > 5.0 * comb)) ok = false;
            std::size_t proximal = 0;
            GeneratorImages images = images_at(srep, lambda);
            for (std::size_t w = 0; w < 64; ++w) {
                SplitMix64 rng = derive_stream(67, {stream::kStability, w});
                Word word = schottky.walk.sample_word(40, rng);
                if (check_proximal(word_product(images, word, ProductOrder::Right).matrix)
                        .is_proximal)
                    ++proximal;
            }
            min_frac = std::min(min_frac, static_cast<double>(proximal) / 64.0);
        }
        if (min_frac < 0.95) ok = false;
        detail += "schottky min proximal frac " + fmt(min_frac);

        Config su2 = cfg("su2.json");
        Rep urep(su2.family);
        auto spec = chi_spectrum_qr(urep, cplx(0.4, 0.1), su2.walk, 400, 64, 68, 2);
        double gap = spec[0].value - spec[1].value;
        double comb = std::sqrt(spec[0].stderr_ * spec[0].stderr_ +
                                spec[1].stderr_ * spec[1].stderr_);
        if (!(gap <= 3.0 * comb)) ok = false;
        std::size_t proximal = 0;
        GeneratorImages images = images_at(urep, cplx(0.4, 0.1));
        for (std::size_t w = 0; w < 64; ++w) {
            SplitMix64 rng = derive_stream(69, {stream::kStability, w});
            Word word = su2.walk.sample_word(40, rng);
            if (check_proximal(word_product(images, word, ProductOrder::Right).matrix).is_proximal)
                ++proximal;
        }
        if (proximal > 3) ok = false;  // more than 5% of 64
        detail += ", su2 proximal " + std::to_string(proximal) + "/64 gap=" + fmt(gap);
        return std::make_pair(ok, detail);
    });

    criterion(7, "graph-volume-growth", 300.0, [&]() {
        ScanGrid grid(-1.015625, 1.015625, -1.015625, 1.015625, 33, 33);
        std::vector<cplx> v0 = {cplx(1, 0), cplx(0, 0)};
        std::vector<std::size_t> lengths = {10, 20, 40, 80};

        Config conj = cfg("conjugation.json");
        GrowthReport cg = mean_graph_volume(Rep(conj.family), conj.walk, v0, grid, lengths, 24, 33);
        bool conj_ok = std::abs(cg.slope) <= 1.96 * cg.slope_stderr;

        Config riley = cfg("riley.json");
        Rep rrep(riley.family);
        TBifResult tb = t_bif(rrep, riley.walk, grid, 40, 64, 21);
        GrowthReport rg = mean_graph_volume(rrep, riley.walk, v0, grid, lengths, 24, 33);
        bool riley_ok = std::abs(rg.slope - tb.t1_mass) <= 0.2 * std::abs(tb.t1_mass);

        return std::make_pair(conj_ok && riley_ok,
                              "conj slope " + fmt(cg.slope) + " (ci " +
                                  fmt(1.96 * cg.slope_stderr) + "), riley slope " + fmt(rg.slope) +
                                  " vs T1 mass " + fmt(tb.t1_mass));
    });

    criterion(8, "trace-divisor-equidistribution", 600.0, [&]() {
        Config riley = cfg("riley.json");
        Rep rep(riley.family);
        ScanGrid grid(-1.0, 1.0, -1.0, 1.0, 101, 101);
        TBifResult tb = t_bif(rep, riley.walk, grid, 40, 64, 55);
        TraceDivisorResult d5 = trace_divisor_measure(rep, riley.walk, cplx(2, 0), grid, 5, 32, 77);
        TraceDivisorResult d40 =
            trace_divisor_measure(rep, riley.walk, cplx(2, 0), grid, 40, 32, 77);
        // the L1 comparison aggregates 3x3 cell blocks: a finite divisor has
        // cell-thin support, so the raw per-cell distance saturates near 2
        // and cannot express weak-* convergence
        double l5 = l1_blocks(d5.density, tb.tbif, 3);
        double l40 = l1_blocks(d40.density, tb.tbif, 3);
        double raw5 = l1_blocks(d5.density, tb.tbif, 1);
        double raw40 = l1_blocks(d40.density, tb.tbif, 1);
        bool ok = l40 <= 0.7 * l5;
        return std::make_pair(ok, "L1(40)/L1(5) = " + fmt(l40) + "/" + fmt(l5) + " = " +
                                      fmt(l40 / l5) + " (raw-cell ratio " + fmt(raw40 / raw5) +
                                      ")");
    });

    criterion(9, "support-coincidence", 600.0, [&]() {
        ScanGrid grid(-1.015625, 1.015625, -1.015625, 1.015625, 33, 33);
        Config riley = cfg("riley.json");
        Rep rrep(riley.family);
        TBifResult tb = t_bif(rrep, riley.walk, grid, 40, 48, 11);
        StabilityReport st = stability_scan(rrep, riley.walk, grid, {5, 10, 20, 40}, 16, 3);
        std::size_t flagged = 0, covered = 0;
        for (std::size_t j = 0; j < grid.ny; ++j) {
            for (std::size_t i = 0; i < grid.nx; ++i) {
                if (st.bifurcation_cells.values[grid.index(i, j)] <= 0.0) continue;
                ++flagged;
                bool near = false;
                for (long dj = -2; dj <= 2 && !near; ++dj) {
                    for (long di = -2; di <= 2 && !near; ++di) {
                        long ii = static_cast<long>(i) + di, jj = static_cast<long>(j) + dj;
                        if (ii < 0 || jj < 0 || ii >= static_cast<long>(grid.nx) ||
                            jj >= static_cast<long>(grid.ny))
                            continue;
                        std::size_t node = grid.index(static_cast<std::size_t>(ii),
                                                      static_cast<std::size_t>(jj));
                        if (!tb.support.mask[node] && tb.support.values[node] > 0.0) near = true;
                    }
                }
                if (near) ++covered;
            }
        }
        double frac = flagged ? static_cast<double>(covered) / static_cast<double>(flagged) : 0.0;
        bool riley_ok = flagged > 0 && frac >= 0.8;

        Config conj = cfg("conjugation.json");
        Rep crep(conj.family);
        ScanGrid cgrid(-1, 1, -1, 1, 17, 17);
        TBifResult ctb = t_bif(crep, conj.walk, cgrid, 60, 24, 29);
        StabilityReport cst = stability_scan(crep, conj.walk, cgrid, {5, 10, 20, 40}, 16, 31);
        bool conj_ok = ctb.support_count == 0 && cst.flagged_cell_count == 0;

        return std::make_pair(riley_ok && conj_ok,
                              "riley coverage " + fmt(100.0 * frac) + "% of " +
                                  std::to_string(flagged) + " cells; conj support " +
                                  std::to_string(ctb.support_count) + ", flagged " +
                                  std::to_string(cst.flagged_cell_count));
    });

    criterion(10, "furstenberg-formula", 120.0, [&]() {
        Config diag = cfg("diag_biased.json");
        Rep drep(diag.family);
        PointCloud dcloud = stationary_sample(drep, cplx(2, 0), diag.walk, 300, 2000, 2, 9);
        FurstenbergReport dr = furstenberg_check(drep, cplx(2, 0), diag.walk, dcloud, 2000, 100, 13);
        double oracle = 0.5 * std::log(2.0);
        bool diag_ok = dr.within_tolerance &&
                       std::abs(dr.integral - oracle) <= std::max(3.0 * dr.integral_stderr, 1e-6);

        Config schottky = cfg("schottky.json");
        Rep srep(schottky.family);
        PointCloud scloud = stationary_sample(srep, cplx(0, 0), schottky.walk, 256, 4000, 4, 21);
        FurstenbergReport sr =
            furstenberg_check(srep, cplx(0, 0), schottky.walk, scloud, 600, 128, 23);
        return std::make_pair(diag_ok && sr.within_tolerance,
                              "diag integral " + fmt(dr.integral) + " (oracle " + fmt(oracle) +
                                  "), schottky diff " + fmt(sr.difference) + " <= 3x" +
                                  fmt(sr.combined_stderr));
    });

    criterion(11, "cli-determinism", 300.0, [&]() {
        fs::path base = fs::temp_directory_path() / "bifurclab_acceptance";
        fs::remove_all(base);
        fs::create_directories(base / "a");
        fs::create_directories(base / "b");
        std::string config = std::string(TEST_CONFIG_DIR) + "/riley.json";

        auto pair_identical = [&](const std::string& args, const std::string& name) {
            std::string a = (base / "a").string() + "/" + name;
            std::string b = (base / "b").string() + "/" + name;
            if (run_cli(args + " --out " + a) != 0) return false;
            if (run_cli(args + " --out " + b) != 0) return false;
            // every output except the manifest must be byte-identical; the
            // manifests must agree on the output digests
            bool ok = true;
            for (const auto& entry : fs::directory_iterator(base / "a")) {
                std::string fname = entry.path().filename().string();
                if (fname.rfind(name, 0) != 0) continue;
                std::string other = (base / "b" / fname).string();
                if (fname.find("manifest") != std::string::npos) {
                    auto ja = nlohmann::json::parse(read_file(entry.path().string()));
                    auto jb = nlohmann::json::parse(read_file(other));
                    if (ja["outputs"] != jb["outputs"]) ok = false;
                } else {
                    if (read_file(entry.path().string()) != read_file(other)) ok = false;
                }
            }
            return ok;
        };

        bool lyap_ok = pair_identical(
            "lyap --config " + config + " --lambda 0.3,0.2 --n 200 --trials 40 --seed 5", "lyap_");
        bool scan_ok = pair_identical(
            "scan --config " + config + " --grid -1,1,-1,1,21,21 --n 20 --trials 16 --seed 9",
            "scan_");
        bool stab_ok = pair_identical("stability --config " + config +
                                          " --grid -1,1,-1,1,17,17 --lengths 4,8 --words 8 --seed 3",
                                      "stab_");
        int missing = run_cli("lyap --config /does/not/exist.json --lambda 0,0");
        bool exit_ok = missing == 2;
        fs::remove_all(base);
        return std::make_pair(lyap_ok && scan_ok && stab_ok && exit_ok,
                              std::string("lyap/scan/stability reproducible, missing-config exit ") +
                                  std::to_string(missing));
    });

    criterion(12, "parser-suite", 60.0, [&]() {
        const char* valid[20] = {
            "2*i + l^2", "l", "1/l", "(l+1)/(l-2)", "-l",
            "l^3 - 2*l + 1", "0.25*l^2", "i*l", "3.5", "l^-3",
            "(2+3*i)*(l-1)", "1 + 2*l + 3*l^2 + 4*l^3", "-(l+i)", "2^-2", "((l))",
            "1.5e2*l", "l*l*l", "(1-l)^4", "0.70807341827357118/(3+l)",
            "17-4*i-0.2*l-1.6*i*l-0.04*l^2"};
        SplitMix64 rng(8);
        std::size_t round_trips = 0;
        for (const char* text : valid) {
            Expr original = Expr::parse(text);
            Expr reparsed = Expr::parse(original.print());
            bool all_match = true;
            for (int s = 0; s < 16; ++s) {
                cplx lambda(3.0 * (rng.next_double() - 0.5), 3.0 * (rng.next_double() - 0.5));
                if (std::abs(lambda) < 1e-3) lambda += cplx(0.5, 0.5);
                if (std::abs(lambda - cplx(2, 0)) < 1e-3 || std::abs(lambda + cplx(3, 0)) < 1e-3)
                    continue;
                cplx a = original.eval(lambda), b = reparsed.eval(lambda);
                if (std::abs(a - b) > 1e-12 * (1.0 + std::abs(a))) all_match = false;
            }
            if (all_match) ++round_trips;
        }

        const char* malformed[10] = {"2*",  "l^l", "(l+1", "l^1.5", "1..2",
                                     "l )", "*l",  "2**l", "l^",    "(l+1))"};
        std::size_t syntax_errors = 0;
        for (const char* text : malformed) {
            try {
                Expr::parse(text);
            } catch (const SyntaxError& e) {
                if (std::string(e.what()).find("position") != std::string::npos) ++syntax_errors;
            } catch (const Error&) {
            }
        }

        bool det_caught = false;
        try {
            parse_family(R"({"dimension": 2, "generators": {"a": [["l","0"],["0","1"]]}})");
        } catch (const Error& e) {
            det_caught = e.kind() == ErrorKind::Determinant;
        }

        bool ok = round_trips == 20 && syntax_errors == 10 && det_caught;
        return std::make_pair(ok, std::to_string(round_trips) + "/20 round trips, " +
                                      std::to_string(syntax_errors) +
                                      "/10 position-annotated errors, det violation " +
                                      (det_caught ? "caught" : "missed"));
    });

    std::printf("%d of 12 criteria failed\n", g_failures);
    return g_failures;
}
