#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "bifurc/divisors.hpp"
#include "bifurc/errors.hpp"
#include "bifurc/io.hpp"
#include "bifurc/lyapunov.hpp"
#include "bifurc/measures.hpp"
#include "bifurc/parallel.hpp"
#include "bifurc/proximality.hpp"
#include "bifurc/scan.hpp"

namespace py = pybind11;
using namespace bifurc;

namespace {

ScanGrid grid_from_tuple(const std::tuple<double, double, double, double, std::size_t,
                                          std::size_t>& g) {
    return ScanGrid(std::get<0>(g), std::get<1>(g), std::get<2>(g), std::get<3>(g), std::get<4>(g),
                    std::get<5>(g));
}

py::dict field_dict(const ScanField& f) {
    py::dict d;
    d["nx"] = f.grid.nx;
    d["ny"] = f.grid.ny;
    d["rect"] = py::make_tuple(f.grid.re0, f.grid.re1, f.grid.im0, f.grid.im1);
    d["values"] = f.values;
    d["mask"] = f.mask;
    d["kind"] = f.meta.kind;
    return d;
}

py::dict estimate_dict(const LyapEstimate& e) {
    py::dict d;
    d["index_lo"] = e.index_lo;
    d["index_hi"] = e.index_hi;
    d["value"] = e.value;
    d["stderr"] = e.stderr_;
    d["n"] = e.n;
    d["trials"] = e.trials;
    d["seed"] = e.seed;
    d["estimator"] = e.estimator;
    return d;
}

std::vector<std::vector<cplx>> matrix_rows(const CMatrix& m) {
    std::vector<std::vector<cplx>> rows(m.dim(), std::vector<cplx>(m.dim()));
    for (std::size_t i = 0; i < m.dim(); ++i)
        for (std::size_t j = 0; j < m.dim(); ++j) rows[i][j] = m(i, j);
    return rows;
}

CMatrix matrix_from_rows(const std::vector<std::vector<cplx>>& rows) {
    CMatrix m(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.size())
            throw Error(ErrorKind::Dimension, "matrix rows must be square");
        for (std::size_t j = 0; j < rows.size(); ++j) m(i, j) = rows[i][j];
    }
    return m;
}

// A parsed family + step measure, the handle the Python surface works with.
class Session {
public:
    explicit Session(const std::string& json_text) : cfg_(parse_config(json_text)) {}

    static Session from_file(const std::string& path) { return Session(read_file(path)); }

    std::size_t dimension() const { return cfg_.family.dimension(); }
    std::vector<std::string> generator_names() const { return cfg_.family.generator_names(); }
    bool walk_symmetric() const { return cfg_.walk.is_symmetric(); }

    std::vector<std::vector<cplx>> evaluate(const std::string& gen, bool inverse,
                                            cplx lambda) const {
        const auto& names = cfg_.family.generator_names();
        auto it = std::find(names.begin(), names.end(), gen);
        if (it == names.end()) throw Error(ErrorKind::UnknownSymbol, "unknown generator " + gen);
        return matrix_rows(cfg_.family.generator_image(
            static_cast<std::size_t>(std::distance(names.begin(), it)), inverse, lambda));
    }

    std::vector<std::vector<cplx>> evaluate_word(const std::string& word_text, cplx lambda,
                                                 bool dual, const std::string& order) const {
        Rep rep(cfg_.family, dual);
        Word w = parse_word(word_text, cfg_.family.generator_names());
        ScaledProduct p = word_product(rep, w, lambda,
                                       order == "right" ? ProductOrder::Right : ProductOrder::Left);
        return matrix_rows(p.matrix * cplx(std::exp(p.log_scale), 0.0));
    }

    py::dict chi_top_py(cplx lambda, std::size_t n, std::size_t trials, std::uint64_t seed,
                        bool dual) const {
        return estimate_dict(chi_top(Rep(cfg_.family, dual), lambda, cfg_.walk, n, trials, seed));
    }

    py::list chi_spectrum_py(cplx lambda, std::size_t n, std::size_t trials, std::uint64_t seed,
                             std::size_t k, bool dual) const {
        Rep rep(cfg_.family, dual);
        if (k == 0) k = cfg_.family.dimension();
        py::list out;
        for (const LyapEstimate& e : chi_spectrum_qr(rep, lambda, cfg_.walk, n, trials, seed, k))
            out.append(estimate_dict(e));
        return out;
    }

    py::dict chi_exterior_py(cplx lambda, std::size_t n, std::size_t trials, std::uint64_t seed,
                             std::size_t k) const {
        return estimate_dict(chi_exterior(Rep(cfg_.family), lambda, cfg_.walk, n, trials, seed, k));
    }

    py::dict dual_check_py(cplx lambda, std::size_t n, std::size_t trials,
                           std::uint64_t seed) const {
        DualSpectrumReport r = dual_spectrum_check(Rep(cfg_.family), lambda, cfg_.walk, n, trials,
                                                   seed);
        py::dict d;
        py::list primal, dual_list;
        for (const auto& e : r.primal) primal.append(estimate_dict(e));
        for (const auto& e : r.dual) dual_list.append(estimate_dict(e));
        d["spectrum"] = primal;
        d["dual_spectrum"] = dual_list;
        d["defect"] = r.defect;
        d["combined_stderr"] = r.combined_stderr;
        d["max_defect"] = r.max_defect;
        d["within_tolerance"] = r.within_tolerance;
        return d;
    }

    py::dict chi_field_py(const std::tuple<double, double, double, double, std::size_t,
                                           std::size_t>& grid,
                          std::size_t n, std::size_t trials, std::uint64_t seed,
                          const std::string& which) const {
        ChiFieldWhich mode = which == "top"      ? ChiFieldWhich::Top
                             : which == "bottom" ? ChiFieldWhich::Bottom
                                                 : ChiFieldWhich::Pair;
        ChiFieldResult r =
            chi_field(Rep(cfg_.family), cfg_.walk, grid_from_tuple(grid), n, trials, seed, mode);
        py::dict d;
        if (r.chi1) d["chi1"] = field_dict(*r.chi1);
        if (r.chi1_stderr) d["chi1_stderr"] = field_dict(*r.chi1_stderr);
        if (r.chi_d) d["chi_d"] = field_dict(*r.chi_d);
        if (r.chi_d_stderr) d["chi_d_stderr"] = field_dict(*r.chi_d_stderr);
        return d;
    }

    py::dict t_bif_py(const std::tuple<double, double, double, double, std::size_t, std::size_t>&
                          grid,
                      std::size_t n, std::size_t trials, std::uint64_t seed, double theta) const {
        TBifResult r = t_bif(Rep(cfg_.family), cfg_.walk, grid_from_tuple(grid), n, trials, seed,
                             theta);
        py::dict d;
        d["chi1"] = field_dict(r.chi1);
        d["chi_d"] = field_dict(r.chi_d);
        d["t1"] = field_dict(r.t1);
        d["td"] = field_dict(r.td);
        d["tbif"] = field_dict(r.tbif);
        d["support"] = field_dict(r.support);
        d["t1_mass"] = r.t1_mass;
        d["td_mass"] = r.td_mass;
        d["tbif_mass"] = r.tbif_mass;
        d["clip_fraction"] = r.clip_fraction;
        d["most_negative"] = r.most_negative;
        d["noise_floor"] = r.noise_floor;
        d["support_cells"] = r.support_count;
        return d;
    }

    py::dict stability_py(const std::tuple<double, double, double, double, std::size_t,
                                           std::size_t>& grid,
                          const std::vector<std::size_t>& lengths, std::size_t words,
                          std::uint64_t seed, double threshold) const {
        StabilityReport r = stability_scan(Rep(cfg_.family), cfg_.walk, grid_from_tuple(grid),
                                           lengths, words, seed, threshold);
        py::dict d;
        d["flagged_words"] = r.flagged_word_count;
        d["flagged_cells"] = r.flagged_cell_count;
        d["bifurcation_cells"] = field_dict(r.bifurcation_cells);
        d["note"] = r.note;
        py::list word_list;
        for (const WordStabilityRecord& rec : r.words) {
            py::dict w;
            w["word"] = format_word(rec.word, cfg_.family.generator_names());
            w["flagged"] = rec.flagged;
            w["proximal_nodes"] = rec.proximal_nodes;
            w["nonproximal_nodes"] = rec.nonproximal_nodes;
            word_list.append(w);
        }
        d["words"] = word_list;
        return d;
    }

    py::dict trace_divisors_py(cplx t,
                               const std::tuple<double, double, double, double, std::size_t,
                                                std::size_t>& grid,
                               std::size_t n, std::size_t words, std::uint64_t seed,
                               bool allow_asymmetric) const {
        TraceDivisorResult r = trace_divisor_measure(Rep(cfg_.family), cfg_.walk, t,
                                                     grid_from_tuple(grid), n, words, seed,
                                                     allow_asymmetric);
        py::dict d;
        py::list entries;
        for (const DivisorEntry& e : r.cloud.entries)
            entries.append(py::make_tuple(e.location, e.multiplicity, e.word_id));
        d["entries"] = entries;
        d["density"] = field_dict(r.density);
        d["per_word_totals"] = r.per_word_totals;
        d["masked_cells"] = r.masked_cells;
        return d;
    }

    py::dict graph_growth_py(const std::tuple<double, double, double, double, std::size_t,
                                              std::size_t>& grid,
                             const std::vector<std::size_t>& lengths, std::size_t trials,
                             std::uint64_t seed, bool dual) const {
        std::vector<cplx> v0(cfg_.family.dimension(), cplx(0, 0));
        v0[0] = 1.0;
        GrowthReport r = mean_graph_volume(Rep(cfg_.family), cfg_.walk, v0, grid_from_tuple(grid),
                                           lengths, trials, seed, dual);
        py::dict d;
        py::list rows;
        for (const GrowthRow& row : r.rows)
            rows.append(py::make_tuple(row.n, row.mean_volume, row.stderr_));
        d["rows"] = rows;
        d["slope"] = r.slope;
        d["slope_stderr"] = r.slope_stderr;
        d["vol_u"] = r.vol_u;
        return d;
    }

    py::dict stationary_py(cplx lambda, std::size_t burn_in, std::size_t count,
                           std::size_t thinning, std::uint64_t seed, bool dual,
                           std::size_t chains) const {
        PointCloud cloud = stationary_sample(Rep(cfg_.family), lambda, cfg_.walk, burn_in, count,
                                             thinning, seed, dual, chains);
        py::dict d;
        py::list points;
        for (const ProjPoint& p : cloud.points) points.append(p.coords);
        d["points"] = points;
        d["dual"] = cloud.dual;
        d["proximality_warning"] = cloud.proximality_warning;
        return d;
    }

    py::dict furstenberg_py(cplx lambda, std::size_t burn_in, std::size_t count,
                            std::size_t thinning, std::uint64_t seed, std::size_t chi_n,
                            std::size_t chi_trials) const {
        Rep rep(cfg_.family);
        PointCloud cloud =
            stationary_sample(rep, lambda, cfg_.walk, burn_in, count, thinning, seed);
        FurstenbergReport r = furstenberg_check(rep, lambda, cfg_.walk, cloud, chi_n, chi_trials,
                                                seed_mix(seed, 1));
        py::dict d;
        d["integral"] = r.integral;
        d["integral_stderr"] = r.integral_stderr;
        d["chi"] = estimate_dict(r.chi);
        d["difference"] = r.difference;
        d["combined_stderr"] = r.combined_stderr;
        d["within_tolerance"] = r.within_tolerance;
        return d;
    }

private:
    Config cfg_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Lyapunov spectra, bifurcation currents and proximal stability for "
              "holomorphic SL(d,C) representation families";

    py::register_exception<Error>(m, "BifurcError");

    py::class_<Session>(m, "Family")
        .def(py::init<const std::string&>(), py::arg("config_json"))
        .def_static("from_file", &Session::from_file, py::arg("path"))
        .def_property_readonly("dimension", &Session::dimension)
        .def_property_readonly("generators", &Session::generator_names)
        .def_property_readonly("walk_symmetric", &Session::walk_symmetric)
        .def("evaluate", &Session::evaluate, py::arg("generator"), py::arg("inverse"),
             py::arg("lam"))
        .def("evaluate_word", &Session::evaluate_word, py::arg("word"), py::arg("lam"),
             py::arg("dual") = false, py::arg("order") = "right")
        .def("chi_top", &Session::chi_top_py, py::arg("lam"), py::arg("n") = 2000,
             py::arg("trials") = 200, py::arg("seed") = 1, py::arg("dual") = false)
        .def("chi_spectrum", &Session::chi_spectrum_py, py::arg("lam"), py::arg("n") = 2000,
             py::arg("trials") = 200, py::arg("seed") = 1, py::arg("k") = 0,
             py::arg("dual") = false)
        .def("chi_exterior", &Session::chi_exterior_py, py::arg("lam"), py::arg("n") = 2000,
             py::arg("trials") = 200, py::arg("seed") = 1, py::arg("k") = 1)
        .def("dual_check", &Session::dual_check_py, py::arg("lam"), py::arg("n") = 1000,
             py::arg("trials") = 100, py::arg("seed") = 1)
        .def("chi_field", &Session::chi_field_py, py::arg("grid"), py::arg("n") = 100,
             py::arg("trials") = 32, py::arg("seed") = 1, py::arg("which") = "pair")
        .def("t_bif", &Session::t_bif_py, py::arg("grid"), py::arg("n") = 100,
             py::arg("trials") = 32, py::arg("seed") = 1, py::arg("theta") = 5.0)
        .def("stability_scan", &Session::stability_py, py::arg("grid"), py::arg("lengths"),
             py::arg("words") = 64, py::arg("seed") = 1, py::arg("threshold") = 1e-4)
        .def("trace_divisors", &Session::trace_divisors_py, py::arg("t"), py::arg("grid"),
             py::arg("n") = 10, py::arg("words") = 32, py::arg("seed") = 1,
             py::arg("allow_asymmetric") = false)
        .def("graph_growth", &Session::graph_growth_py, py::arg("grid"), py::arg("lengths"),
             py::arg("trials") = 16, py::arg("seed") = 1, py::arg("dual") = false)
        .def("stationary_sample", &Session::stationary_py, py::arg("lam"),
             py::arg("burn_in") = 1000, py::arg("count") = 10000, py::arg("thinning") = 8,
             py::arg("seed") = 1, py::arg("dual") = false, py::arg("chains") = 4)
        .def("furstenberg_check", &Session::furstenberg_py, py::arg("lam"),
             py::arg("burn_in") = 1000, py::arg("count") = 5000, py::arg("thinning") = 8,
             py::arg("seed") = 1, py::arg("chi_n") = 1000, py::arg("chi_trials") = 100);

    m.def(
        "calibrate",
        []() {
            CalibrationReport cal = calibrate();
            py::dict d;
            d["lelong_mass"] = cal.lelong_mass;
            d["lelong_error"] = cal.lelong_error;
            d["harmonic_residual"] = cal.harmonic_residual;
            d["uniform_max_relerr"] = cal.uniform_max_relerr;
            d["eps_disc"] = cal.eps_disc;
            d["pass"] = cal.pass;
            return d;
        },
        "run the ddc normalization self-test on the standard grid");

    m.def(
        "check_proximal",
        [](const std::vector<std::vector<cplx>>& rows, double tol_gap) {
            ProximalityVerdict v = check_proximal(matrix_from_rows(rows), tol_gap);
            py::dict d;
            d["is_proximal"] = v.is_proximal;
            d["gap"] = v.gap;
            if (v.fix_plus) d["fix_plus"] = v.fix_plus->coords;
            if (v.fix_minus) d["fix_minus"] = v.fix_minus->covector;
            return d;
        },
        py::arg("matrix"), py::arg("tol_gap") = 1e-9,
        "proximality verdict for a square complex matrix");

    m.def(
        "eigen_moduli",
        [](const std::vector<std::vector<cplx>>& rows) {
            return eigen_moduli(matrix_from_rows(rows));
        },
        py::arg("matrix"), "sorted descending eigenvalue moduli");

    m.def("set_threads", &set_thread_count, py::arg("n"), "cap the worker thread count");

    m.attr("__version__") = "0.1.0";
}
