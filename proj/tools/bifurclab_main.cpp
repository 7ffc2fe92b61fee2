// bifurclab: Lyapunov spectra, bifurcation currents and proximal-stability
// experiments for holomorphic SL(d,C) representation families.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bifurc/divisors.hpp"
#include "bifurc/errors.hpp"
#include "bifurc/io.hpp"
#include "bifurc/lyapunov.hpp"
#include "bifurc/measures.hpp"
#include "bifurc/parallel.hpp"
#include "bifurc/proximality.hpp"
#include "bifurc/scan.hpp"

using json = nlohmann::json;
using namespace bifurc;

namespace {

constexpr const char* kToolVersion = "0.1.0";

struct GridSpec {
    double re0 = -1, re1 = 1, im0 = -1, im1 = 1;
    std::size_t nx = 65, ny = 65;
    ScanGrid make() const { return ScanGrid(re0, re1, im0, im1, nx, ny); }
};

GridSpec parse_grid(const std::string& text) {
    GridSpec g;
    if (std::sscanf(text.c_str(), "%lf,%lf,%lf,%lf,%zu,%zu", &g.re0, &g.re1, &g.im0, &g.im1,
                    &g.nx, &g.ny) != 6)
        throw Error(ErrorKind::Config, "grid must be RE0,RE1,IM0,IM1,NX,NY");
    return g;
}

cplx parse_complex(const std::string& text) {
    double re = 0, im = 0;
    if (std::sscanf(text.c_str(), "%lf,%lf", &re, &im) != 2)
        throw Error(ErrorKind::Config, "complex values are written RE,IM");
    return {re, im};
}

std::vector<std::size_t> parse_lengths(const std::string& text) {
    std::vector<std::size_t> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        out.push_back(static_cast<std::size_t>(std::stoul(text.substr(pos, comma - pos))));
        pos = comma + 1;
    }
    if (out.empty()) throw Error(ErrorKind::Config, "empty length list");
    return out;
}

json estimate_json(const LyapEstimate& e) {
    json j;
    if (e.index_lo == e.index_hi)
        j["index"] = e.index_lo;
    else
        j["range"] = {e.index_lo, e.index_hi};
    j["value"] = e.value;
    j["stderr"] = e.stderr_;
    j["n"] = e.n;
    j["trials"] = e.trials;
    j["seed"] = e.seed;
    j["estimator"] = e.estimator;
    return j;
}

// Collects output files, then writes the manifest that records the run.
// Wall clock lives only in the manifest; data outputs stay reproducible.
class RunOutputs {
public:
    RunOutputs(std::string prefix, json config_snapshot, std::uint64_t seed, json tolerances,
               std::string command)
        : prefix_(std::move(prefix)),
          config_(std::move(config_snapshot)),
          seed_(seed),
          tolerances_(std::move(tolerances)),
          command_(std::move(command)),
          start_(std::chrono::steady_clock::now()) {}

    bool enabled() const { return !prefix_.empty(); }

    void emit(const std::string& name, const std::string& bytes) {
        if (!enabled()) return;
        write_file(prefix_ + name, bytes);
        digests_[name] = sha256_hex(bytes);
    }

    void finish() {
        if (!enabled()) return;
        json manifest;
        manifest["tool"] = "bifurclab";
        manifest["version"] = kToolVersion;
        manifest["command"] = command_;
        manifest["seed"] = seed_;
        manifest["config"] = config_;
        manifest["tolerances"] = tolerances_;
        manifest["outputs"] = digests_;
        manifest["wall_clock_sec"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        write_file(prefix_ + "manifest.json", manifest.dump(2) + "\n");
    }

private:
    std::string prefix_;
    json config_;
    std::uint64_t seed_;
    json tolerances_;
    std::string command_;
    std::map<std::string, std::string> digests_;
    std::chrono::steady_clock::time_point start_;
};

std::string join_args(int argc, char** argv) {
    std::string out;
    for (int i = 0; i < argc; ++i) {
        if (i) out += ' ';
        out += argv[i];
    }
    return out;
}

void print_report(const json& j) { std::cout << j.dump(2) << "\n"; }

json default_tolerances() {
    return json{{"tol_gap", 1e-9}, {"det_tol", 1e-8}, {"inverse_residual", 1e-10}};
}

// the Lelong self-test gates every current computation
CalibrationReport run_ddc_gate() {
    CalibrationReport cal = calibrate();
    if (!cal.pass)
        throw Error(ErrorKind::Convergence,
                    "ddc calibration failed: Lelong mass " + std::to_string(cal.lelong_mass));
    return cal;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lyapunov spectra and bifurcation currents for SL(d,C) representation families"};
    app.require_subcommand(1);

    std::string config_path, out_prefix, grid_text, lambda_text, lengths_text, order_text = "left";
    std::string t_text = "2,0", window_text;
    std::uint64_t seed = 1;
    std::size_t n = 2000, trials = 200, words = 64, k = 0;
    std::size_t count = 20000, burnin = 1000, thinning = 8, resolution = 512, chains = 4;
    std::size_t exhaustive = 0;
    unsigned threads = 0;
    double theta = 5.0, threshold = 1e-4;
    bool spectrum = false, trajectory = false, dual = false, allow_asym = false, sphere = false;
    std::size_t chart = 0, axis = SIZE_MAX;

    auto add_common = [&](CLI::App* cmd, bool needs_config = true) {
        if (needs_config)
            cmd->add_option("--config", config_path, "family + walk JSON config")->required();
        cmd->add_option("--seed", seed, "base seed; all randomness derives from it");
        cmd->add_option("--threads", threads, "worker cap (default: BIFURCLAB_THREADS or cores)");
        cmd->add_option("--out", out_prefix, "output file prefix; also writes a manifest");
    };

    CLI::App* lyap = app.add_subcommand("lyap", "Lyapunov exponents at a fixed parameter");
    add_common(lyap);
    lyap->add_option("--lambda", lambda_text, "parameter RE,IM")->required();
    lyap->add_option("--n", n, "word length");
    lyap->add_option("--trials", trials, "independent trials");
    lyap->add_flag("--spectrum", spectrum, "full QR spectrum instead of chi_1 only");
    lyap->add_option("--k", k, "spectrum depth (default d)");
    lyap->add_flag("--long-trajectory", trajectory, "diagnostic single-trajectory mode");

    CLI::App* dualcheck = app.add_subcommand("dualcheck", "dual-spectrum relation check");
    add_common(dualcheck);
    dualcheck->add_option("--lambda", lambda_text, "parameter RE,IM")->required();
    dualcheck->add_option("--n", n, "word length");
    dualcheck->add_option("--trials", trials, "independent trials");

    CLI::App* scan = app.add_subcommand("scan", "chi fields, T_1, T_d, T_bif over a grid");
    add_common(scan);
    scan->add_option("--grid", grid_text, "RE0,RE1,IM0,IM1,NX,NY")->required();
    scan->add_option("--n", n, "word length");
    scan->add_option("--trials", trials, "shared words per node");
    scan->add_option("--theta", theta, "support noise floor in robust sigmas");

    CLI::App* stability = app.add_subcommand("stability", "proximal-stability scan");
    add_common(stability);
    stability->add_option("--grid", grid_text, "RE0,RE1,IM0,IM1,NX,NY")->required();
    stability->add_option("--lengths", lengths_text, "word lengths, comma separated");
    stability->add_option("--words", words, "words per length");
    stability->add_option("--threshold", threshold, "gap threshold for scan verdicts");
    stability->add_option("--exhaustive", exhaustive, "scan all reduced words up to this length");

    CLI::App* tracezeros = app.add_subcommand("tracezeros", "trace-level divisors");
    add_common(tracezeros);
    tracezeros->add_option("--grid", grid_text, "RE0,RE1,IM0,IM1,NX,NY")->required();
    tracezeros->add_option("--n", n, "word length");
    tracezeros->add_option("--words", words, "sampled words");
    tracezeros->add_option("--t", t_text, "trace level RE,IM (default 2,0)");
    tracezeros->add_flag("--allow-asymmetric", allow_asym, "skip the symmetric-measure check");

    CLI::App* graphvol = app.add_subcommand("graphvol", "graph-volume growth");
    add_common(graphvol);
    graphvol->add_option("--grid", grid_text, "RE0,RE1,IM0,IM1,NX,NY")->required();
    graphvol->add_option("--lengths", lengths_text, "word lengths, comma separated");
    graphvol->add_option("--trials", trials, "words per length");
    graphvol->add_flag("--dual", dual, "dual walk on hyperplane sections");
    graphvol->add_option("--order", order_text, "composition order: left|right");

    CLI::App* limitset = app.add_subcommand("limitset", "stationary measure and limit set");
    add_common(limitset);
    limitset->add_option("--lambda", lambda_text, "parameter RE,IM")->required();
    limitset->add_option("--count", count, "samples to keep");
    limitset->add_option("--burnin", burnin, "chain burn-in steps");
    limitset->add_option("--thinning", thinning, "steps between samples");
    limitset->add_option("--chart", chart, "affine chart index");
    limitset->add_option("--axis", axis, "plotted coordinate (default: first != chart)");
    limitset->add_option("--res", resolution, "image resolution");
    limitset->add_option("--chains", chains, "independent chains");
    limitset->add_option("--window", window_text, "RE0,RE1,IM0,IM1 (default: autofit)");
    limitset->add_flag("--dual", dual, "sample the dual chain on hyperplanes");
    limitset->add_flag("--sphere", sphere, "Riemann-sphere net (d=2)");

    CLI::App* calibrate_cmd = app.add_subcommand("calibrate", "ddc normalization self-test");
    add_common(calibrate_cmd, false);
    calibrate_cmd->add_option("--grid", grid_text, "RE0,RE1,IM0,IM1,NX,NY (default 201x201)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (threads > 0) set_thread_count(threads);
        std::string command = join_args(argc, argv);

        if (calibrate_cmd->parsed()) {
            CalibrationReport cal = grid_text.empty()
                                        ? calibrate()
                                        : calibrate(parse_grid(grid_text).make(), cplx(0.3, 0.0));
            json j{{"lelong_mass", cal.lelong_mass},
                   {"lelong_error", cal.lelong_error},
                   {"harmonic_residual", cal.harmonic_residual},
                   {"uniform_max_relerr", cal.uniform_max_relerr},
                   {"eps_disc", cal.eps_disc},
                   {"pass", cal.pass}};
            RunOutputs outputs(out_prefix, json::object(), seed, default_tolerances(), command);
            outputs.emit("calibration.json", j.dump(2) + "\n");
            outputs.finish();
            print_report(j);
            return cal.pass ? 0 : 3;
        }

        Config cfg = load_config(config_path);
        Rep rep(cfg.family);
        json tolerances = default_tolerances();

        if (lyap->parsed()) {
            cplx lambda = parse_complex(lambda_text);
            json report;
            report["lambda"] = {lambda.real(), lambda.imag()};
            if (trajectory) {
                report["chi1"] = estimate_json(chi_top_trajectory(rep, lambda, cfg.walk, n, seed));
            } else if (spectrum) {
                std::size_t depth = (k == 0) ? cfg.family.dimension() : k;
                auto est = chi_spectrum_qr(rep, lambda, cfg.walk, n, trials, seed, depth);
                json list = json::array();
                double sum = 0.0;
                for (const LyapEstimate& e : est) {
                    list.push_back(estimate_json(e));
                    sum += e.value;
                }
                report["spectrum"] = list;
                report["sum"] = sum;
            } else {
                report["chi1"] = estimate_json(chi_top(rep, lambda, cfg.walk, n, trials, seed));
            }
            RunOutputs outputs(out_prefix, cfg.raw, seed, tolerances, command);
            outputs.emit("report.json", report.dump(2) + "\n");
            outputs.finish();
            print_report(report);
            return 0;
        }

        if (dualcheck->parsed()) {
            cplx lambda = parse_complex(lambda_text);
            DualSpectrumReport r = dual_spectrum_check(rep, lambda, cfg.walk, n, trials, seed);
            json report;
            report["lambda"] = {lambda.real(), lambda.imag()};
            json primal = json::array(), dual_list = json::array();
            for (const auto& e : r.primal) primal.push_back(estimate_json(e));
            for (const auto& e : r.dual) dual_list.push_back(estimate_json(e));
            report["spectrum"] = primal;
            report["dual_spectrum"] = dual_list;
            report["defect"] = r.defect;
            report["combined_stderr"] = r.combined_stderr;
            report["max_defect"] = r.max_defect;
            report["within_tolerance"] = r.within_tolerance;
            RunOutputs outputs(out_prefix, cfg.raw, seed, tolerances, command);
            outputs.emit("report.json", report.dump(2) + "\n");
            outputs.finish();
            print_report(report);
            return 0;
        }

        if (scan->parsed()) {
            CalibrationReport cal = run_ddc_gate();
            tolerances["eps_disc"] = cal.eps_disc;
            tolerances["noise_floor_theta"] = theta;
            ScanGrid grid = parse_grid(grid_text).make();
            TBifResult r = t_bif(rep, cfg.walk, grid, n, trials, seed, theta);
            RunOutputs outputs(out_prefix, cfg.raw, seed, tolerances, command);
            outputs.emit("chi1.csv", encode_field_csv(r.chi1));
            outputs.emit("chid.csv", encode_field_csv(r.chi_d));
            outputs.emit("t1.csv", encode_field_csv(r.t1));
            outputs.emit("td.csv", encode_field_csv(r.td));
            outputs.emit("tbif.csv", encode_field_csv(r.tbif));
            outputs.emit("support.csv", encode_field_csv(r.support));
            outputs.emit("chi1_lin.ppm",
                         encode_field_ppm(r.chi1, Colormap::Heat, ImageScale::Linear));
            outputs.emit("chi1_log.ppm", encode_field_ppm(r.chi1, Colormap::Heat, ImageScale::Log));
            outputs.emit("tbif_lin.ppm",
                         encode_field_ppm(r.tbif, Colormap::Heat, ImageScale::Linear));
            outputs.emit("tbif_log.ppm", encode_field_ppm(r.tbif, Colormap::Heat, ImageScale::Log));
            json summary{
                {"t1_mass", r.t1_mass},
                {"td_mass", r.td_mass},
                {"tbif_mass", r.tbif_mass},
                {"clip_fraction", r.clip_fraction},
                {"most_negative", r.most_negative},
                {"noise_floor", r.noise_floor},
                {"support_cells", r.support_count},
                {"calibration",
                 {{"lelong_mass", cal.lelong_mass}, {"eps_disc", cal.eps_disc}}}};
            outputs.emit("summary.json", summary.dump(2) + "\n");
            outputs.finish();
            print_report(summary);
            return 0;
        }

        if (stability->parsed()) {
            ScanGrid grid = parse_grid(grid_text).make();
            StabilityReport r =
                exhaustive > 0
                    ? stability_scan_exhaustive(rep, grid, exhaustive, threshold)
                    : stability_scan(rep, cfg.walk, grid,
                                     lengths_text.empty() ? std::vector<std::size_t>{5, 10, 20, 40}
                                                          : parse_lengths(lengths_text),
                                     words, seed, threshold);
            tolerances["scan_threshold"] = threshold;
            json report;
            report["note"] = r.note;
            report["flagged_words"] = r.flagged_word_count;
            report["flagged_cells"] = r.flagged_cell_count;
            json word_list = json::array();
            for (const WordStabilityRecord& rec : r.words) {
                word_list.push_back({{"word", format_word(rec.word, cfg.family.generator_names())},
                                     {"length", rec.length},
                                     {"flagged", rec.flagged},
                                     {"proximal_nodes", rec.proximal_nodes},
                                     {"nonproximal_nodes", rec.nonproximal_nodes},
                                     {"masked_nodes", rec.masked_nodes}});
            }
            report["words"] = word_list;
            RunOutputs outputs(out_prefix, cfg.raw, seed, tolerances, command);
            outputs.emit("report.json", report.dump(2) + "\n");
            outputs.emit("bifcells.csv", encode_field_csv(r.bifurcation_cells));
            outputs.emit("overlay.ppm",
                         encode_field_ppm(r.bifurcation_cells, Colormap::Heat, ImageScale::Linear));
            outputs.finish();
            report.erase("words");
            print_report(report);
            return 0;
        }

        if (tracezeros->parsed()) {
            ScanGrid grid = parse_grid(grid_text).make();
            cplx t = parse_complex(t_text);
            TraceDivisorResult r =
                trace_divisor_measure(rep, cfg.walk, t, grid, n, words, seed, allow_asym);
            json report{{"t", {t.real(), t.imag()}},
                        {"n", n},
                        {"words", words},
                        {"entries", r.cloud.entries.size()},
                        {"masked_cells", r.masked_cells},
                        {"per_word_totals", r.per_word_totals}};
            RunOutputs outputs(out_prefix, cfg.raw, seed, tolerances, command);
            outputs.emit("cloud.csv", encode_cloud_csv(r.cloud.entries));
            outputs.emit("density.csv", encode_field_csv(r.density));
            outputs.emit("density.ppm",
                         encode_field_ppm(r.density, Colormap::Heat, ImageScale::Log));
            outputs.emit("report.json", report.dump(2) + "\n");
            outputs.finish();
            print_report(report);
            return 0;
        }

        if (graphvol->parsed()) {
            CalibrationReport cal = run_ddc_gate();
            tolerances["eps_disc"] = cal.eps_disc;
            ScanGrid grid = parse_grid(grid_text).make();
            ProductOrder order = (order_text == "right") ? ProductOrder::Right : ProductOrder::Left;
            std::vector<cplx> v0(cfg.family.dimension(), cplx(0, 0));
            v0[0] = 1.0;
            GrowthReport r = mean_graph_volume(
                rep, cfg.walk, v0, grid,
                lengths_text.empty() ? std::vector<std::size_t>{10, 20, 40, 80}
                                     : parse_lengths(lengths_text),
                trials, seed, dual, order, 0, trials);
            json rows = json::array();
            for (const GrowthRow& row : r.rows)
                rows.push_back(
                    {{"n", row.n}, {"mean_volume", row.mean_volume}, {"stderr", row.stderr_}});
            json report{{"rows", rows},
                        {"slope", r.slope},
                        {"slope_stderr", r.slope_stderr},
                        {"vol_u", r.vol_u},
                        {"dual", r.dual},
                        {"current_mass", r.current_mass},
                        {"slope_to_mass_ratio", r.slope_to_mass_ratio}};
            RunOutputs outputs(out_prefix, cfg.raw, seed, tolerances, command);
            outputs.emit("growth.json", report.dump(2) + "\n");
            outputs.finish();
            print_report(report);
            return 0;
        }

        if (limitset->parsed()) {
            cplx lambda = parse_complex(lambda_text);
            PointCloud cloud = stationary_sample(rep, lambda, cfg.walk, burnin, count, thinning,
                                                 seed, dual, chains);
            RenderResult image;
            if (sphere) {
                image = limit_set_render_sphere(cloud, resolution);
            } else if (!window_text.empty()) {
                GridSpec w;
                if (std::sscanf(window_text.c_str(), "%lf,%lf,%lf,%lf", &w.re0, &w.re1, &w.im0,
                                &w.im1) != 4)
                    throw Error(ErrorKind::Config, "window must be RE0,RE1,IM0,IM1");
                Box window{w.re0, w.re1, w.im0, w.im1};
                image = limit_set_render(cloud, chart, resolution, &window, axis);
            } else {
                image = limit_set_render(cloud, chart, resolution, nullptr, axis);
            }
            json report{{"lambda", {lambda.real(), lambda.imag()}},
                        {"points", cloud.points.size()},
                        {"dual", cloud.dual},
                        {"proximality_warning", cloud.proximality_warning},
                        {"dropped", image.dropped},
                        {"window",
                         {image.window.re0, image.window.re1, image.window.im0, image.window.im1}}};
            RunOutputs outputs(out_prefix, cfg.raw, seed, tolerances, command);
            outputs.emit("img.ppm", encode_intensity_ppm(image.width, image.height,
                                                         image.intensity, Colormap::Heat));
            outputs.emit("cloud.csv", encode_points_csv(cloud));
            outputs.emit("report.json", report.dump(2) + "\n");
            outputs.finish();
            print_report(report);
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return is_validation_error(e.kind()) ? 2 : 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
