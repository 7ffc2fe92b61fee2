#pragma once

#include <cstdint>
#include <vector>

#include "bifurc/divisors.hpp"
#include "bifurc/dsl.hpp"
#include "bifurc/lyapunov.hpp"
#include "bifurc/word.hpp"

namespace bifurc {

// Markov-chain samples of the projective chain x <- rho_lambda(gamma) x
// (covectors under the dual walk when dual is set).
struct PointCloud {
    std::vector<ProjPoint> points;
    bool dual = false;
    cplx lambda;
    std::size_t burn_in = 0;
    std::size_t thinning = 0;
    std::uint64_t seed = 0;
    // set when a sampled-word gap diagnostic suggests the representation is
    // not proximal at this parameter
    bool proximality_warning = false;
};

// start defaults to the first standard basis direction; properness of the
// stationary measure washes the choice out (checked by the two-starts test)
PointCloud stationary_sample(const Rep& rep, cplx lambda, const StepMeasure& mu,
                             std::size_t burn_in, std::size_t count, std::size_t thinning,
                             std::uint64_t seed, bool dual = false, std::size_t chains = 4,
                             const std::vector<cplx>* start = nullptr);

struct FurstenbergReport {
    double integral = 0.0;        // MC estimate of the double integral
    double integral_stderr = 0.0;
    LyapEstimate chi;             // norm estimator at the same parameters
    double difference = 0.0;
    double combined_stderr = 0.0;
    bool within_tolerance = false;  // difference <= 3 combined stderr
};

// Furstenberg formula check: the mu-integral is exact (finite support), the
// nu-integral is the cloud average.
FurstenbergReport furstenberg_check(const Rep& rep, cplx lambda, const StepMeasure& mu,
                                    const PointCloud& cloud, std::size_t chi_n,
                                    std::size_t chi_trials, std::uint64_t chi_seed);

struct RenderResult {
    std::size_t width = 0, height = 0;
    Box window{0, 0, 0, 0};
    std::vector<std::uint32_t> counts;   // row-major, row 0 = lowest im
    std::vector<double> intensity;       // log-scaled to [0, 1]
    std::size_t dropped = 0;             // points outside the window
};

// Histogram of the cloud in the affine chart where coordinate `chart` is 1,
// plotting the complex coordinate `axis` (default: first index != chart).
// Window auto-fits to the 2nd..98th percentile when not supplied.
RenderResult limit_set_render(const PointCloud& cloud, std::size_t chart, std::size_t resolution,
                              const Box* window = nullptr, std::size_t axis = SIZE_MAX);

// Riemann-sphere net for d = 2: azimuth x polar-angle histogram.
RenderResult limit_set_render_sphere(const PointCloud& cloud, std::size_t resolution);

// push the whole cloud forward by one matrix (render-invariance checks)
PointCloud transform_cloud(const PointCloud& cloud, const CMatrix& m);

}  // namespace bifurc
