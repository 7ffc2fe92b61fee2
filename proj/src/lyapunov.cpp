#include "bifurc/lyapunov.hpp"

#include <algorithm>
#include <cmath>

#include "bifurc/errors.hpp"
#include "bifurc/parallel.hpp"
#include "bifurc/rng.hpp"

namespace bifurc {

namespace {

void require_mc_params(std::size_t n, std::size_t trials) {
    if (n < 1) throw Error(ErrorKind::Config, "word length n must be >= 1");
    if (trials < 2) throw Error(ErrorKind::Config, "need at least 2 trials for an error bar");
}

struct MeanStd {
    double mean = 0.0;
    double stderr_ = 0.0;
};

MeanStd mean_and_stderr(const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size() - 1);
    return {mean, std::sqrt(var / static_cast<double>(xs.size()))};
}

}  // namespace

LyapEstimate chi_top(const Rep& rep, cplx lambda, const StepMeasure& mu, std::size_t n,
                     std::size_t trials, std::uint64_t seed) {
    return chi_exterior(rep, lambda, mu, n, trials, seed, 1);
}

LyapEstimate chi_exterior(const Rep& rep, cplx lambda, const StepMeasure& mu, std::size_t n,
                          std::size_t trials, std::uint64_t seed, std::size_t k) {
    require_mc_params(n, trials);
    std::size_t d = rep.dimension();
    if (k < 1 || k > d) throw Error(ErrorKind::Dimension, "exterior order out of range");
    std::size_t dim_k = binomial(d, k);
    if (dim_k > 70)
        throw Error(ErrorKind::Dimension, "exterior power dimension exceeds the supported 70");

    GeneratorImages base = images_at(rep, lambda);
    GeneratorImages images = (k == 1) ? std::move(base) : exterior_images(base, k);
    // growth relative to the identity, computed through the same norm path so
    // a trivial family reports exactly zero
    double baseline = std::log(CMatrix::identity(dim_k).frobenius());

    std::vector<double> values(trials);
    parallel_for(trials, [&](std::size_t t) {
        SplitMix64 rng = derive_stream(seed, {stream::kTrialWord, t});
        Word w = mu.sample_word(n, rng);
        ScaledProduct p = word_product(images, w, ProductOrder::Right);
        values[t] = (p.log_norm() - baseline) / static_cast<double>(n);
    });

    MeanStd ms = mean_and_stderr(values);
    LyapEstimate est;
    est.index_lo = 1;
    est.index_hi = static_cast<int>(k);
    est.value = ms.mean;
    est.stderr_ = ms.stderr_;
    est.n = n;
    est.trials = trials;
    est.seed = seed;
    est.estimator = (k == 1) ? "norm" : "exterior";
    return est;
}

std::vector<LyapEstimate> chi_spectrum_qr(const Rep& rep, cplx lambda, const StepMeasure& mu,
                                          std::size_t n, std::size_t trials, std::uint64_t seed,
                                          std::size_t k) {
    require_mc_params(n, trials);
    std::size_t d = rep.dimension();
    if (k < 1 || k > d) throw Error(ErrorKind::Dimension, "spectrum depth out of range");

    GeneratorImages images = images_at(rep, lambda);

    std::vector<std::vector<double>> per_trial(trials);
    parallel_for(trials, [&](std::size_t t) {
        SplitMix64 rng = derive_stream(seed, {stream::kTrialWord, t});
        Word w = mu.sample_word(n, rng);
        Frame frame = Frame::standard(d, k);
        std::vector<double> acc(k, 0.0);
        for (std::int32_t letter : w.letters) {
            QrStepResult step = qr_step(frame, images.letter(letter));
            frame = std::move(step.frame);
            for (std::size_t i = 0; i < k; ++i) acc[i] += step.log_diag[i];
        }
        for (std::size_t i = 0; i < k; ++i) acc[i] /= static_cast<double>(n);
        per_trial[t] = std::move(acc);
    });

    std::vector<LyapEstimate> out(k);
    std::vector<double> column(trials);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t t = 0; t < trials; ++t) column[t] = per_trial[t][i];
        MeanStd ms = mean_and_stderr(column);
        out[i].index_lo = out[i].index_hi = static_cast<int>(i) + 1;
        out[i].value = ms.mean;
        out[i].stderr_ = ms.stderr_;
        out[i].n = n;
        out[i].trials = trials;
        out[i].seed = seed;
        out[i].estimator = "qr";
    }

    // Raw column averages can come out permuted when the family is reducible
    // and the frame never rotates (e.g. diagonal walks), so the report sorts
    // them; the reported spectrum is always non-increasing.
    std::stable_sort(out.begin(), out.end(),
                     [](const LyapEstimate& a, const LyapEstimate& b) { return a.value > b.value; });
    for (std::size_t i = 0; i < k; ++i) out[i].index_lo = out[i].index_hi = static_cast<int>(i) + 1;
    return out;
}

LyapEstimate chi_top_trajectory(const Rep& rep, cplx lambda, const StepMeasure& mu,
                                std::size_t total_steps, std::uint64_t seed) {
    if (total_steps < 1) throw Error(ErrorKind::Config, "trajectory needs at least one step");
    GeneratorImages images = images_at(rep, lambda);
    SplitMix64 rng = derive_stream(seed, {stream::kTrialWord, 0});
    ScaledProduct p = ScaledProduct::identity(rep.dimension());
    std::size_t since_renorm = 0;
    for (std::size_t step = 0; step < total_steps; ++step) {
        const Word& atom = mu.atoms()[mu.draw_atom(rng)].first;
        for (std::int32_t letter : atom.letters) p.multiply_left(images.letter(letter));
        if (++since_renorm == 64) {
            p.renormalize_unimodular();
            since_renorm = 0;
        }
    }
    p.renormalize_unimodular();
    LyapEstimate est;
    est.value = (p.log_norm() - std::log(CMatrix::identity(rep.dimension()).frobenius())) /
                static_cast<double>(total_steps);
    est.stderr_ = 0.0;
    est.n = total_steps;
    est.trials = 1;
    est.seed = seed;
    est.estimator = "norm-trajectory";
    return est;
}

DualSpectrumReport dual_spectrum_check(const Rep& rep, cplx lambda, const StepMeasure& mu,
                                       std::size_t n, std::size_t trials, std::uint64_t seed) {
    std::size_t d = rep.dimension();
    DualSpectrumReport report;
    report.primal = chi_spectrum_qr(rep, lambda, mu, n, trials, seed, d);
    report.dual = chi_spectrum_qr(rep.dual(), lambda, mu, n, trials, seed, d);
    report.defect.resize(d);
    report.combined_stderr.resize(d);
    report.within_tolerance = true;
    for (std::size_t i = 0; i < d; ++i) {
        const LyapEstimate& dual_i = report.dual[i];
        const LyapEstimate& primal_mirror = report.primal[d - 1 - i];
        report.defect[i] = std::abs(dual_i.value + primal_mirror.value);
        report.combined_stderr[i] = std::sqrt(dual_i.stderr_ * dual_i.stderr_ +
                                              primal_mirror.stderr_ * primal_mirror.stderr_);
        report.max_defect = std::max(report.max_defect, report.defect[i]);
        if (report.defect[i] > 3.0 * report.combined_stderr[i]) report.within_tolerance = false;
    }
    return report;
}

}  // namespace bifurc
