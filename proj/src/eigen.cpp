#include <algorithm>
#include <cmath>
#include <numeric>

#include "bifurc/cmatrix.hpp"
#include "bifurc/errors.hpp"

namespace bifurc {

namespace {

constexpr double kDeflateEps = 1e-15;

struct Rotation {
    cplx a, b;  // G = (1/r) [[conj(a), conj(b)], [-b, a]], r = hypot(|a|, |b|)
    double r;
};

Rotation make_rotation(cplx a, cplx b) {
    Rotation g;
    g.a = a;
    g.b = b;
    g.r = std::sqrt(std::norm(a) + std::norm(b));
    return g;
}

// rows i, i+1 of H, columns [c0, c1)
void apply_left(std::vector<cplx>& h, std::size_t n, std::size_t i, const Rotation& g,
                std::size_t c0, std::size_t c1) {
    if (g.r == 0.0) return;
    for (std::size_t j = c0; j < c1; ++j) {
        cplx top = h[i * n + j], bot = h[(i + 1) * n + j];
        h[i * n + j] = (std::conj(g.a) * top + std::conj(g.b) * bot) / g.r;
        h[(i + 1) * n + j] = (-g.b * top + g.a * bot) / g.r;
    }
}

// columns i, i+1 of H, rows [r0, r1)
void apply_right(std::vector<cplx>& h, std::size_t n, std::size_t i, const Rotation& g,
                 std::size_t r0, std::size_t r1) {
    if (g.r == 0.0) return;
    for (std::size_t row = r0; row < r1; ++row) {
        cplx left = h[row * n + i], right = h[row * n + i + 1];
        h[row * n + i] = (g.a * left + g.b * right) / g.r;
        h[row * n + i + 1] = (-std::conj(g.b) * left + std::conj(g.a) * right) / g.r;
    }
}

// eigenvalues of [[a, b], [c, d]]; the pair keeps |l1| >= |l2|
std::pair<cplx, cplx> eig2(cplx a, cplx b, cplx c, cplx d) {
    cplx tr = a + d;
    cplx det = a * d - b * c;
    cplx disc = std::sqrt(tr * tr - 4.0 * det);
    // pick the branch that avoids cancellation in tr + disc
    if (std::real(std::conj(tr) * disc) < 0.0) disc = -disc;
    cplx l1 = 0.5 * (tr + disc);
    cplx l2 = (std::abs(l1) > 0.0) ? det / l1 : 0.5 * (tr - disc);
    if (std::abs(l2) > std::abs(l1)) std::swap(l1, l2);
    return {l1, l2};
}

void hessenberg(std::vector<cplx>& h, std::vector<cplx>& q, std::size_t n, bool want_q) {
    if (n < 3) return;
    std::vector<cplx> v(n);
    for (std::size_t col = 0; col + 2 < n; ++col) {
        double sigma = 0.0;
        for (std::size_t i = col + 1; i < n; ++i) sigma += std::norm(h[i * n + col]);
        if (sigma == 0.0) continue;
        double norm_x = std::sqrt(sigma);
        cplx x0 = h[(col + 1) * n + col];
        cplx phase = (std::abs(x0) > 0.0) ? x0 / std::abs(x0) : cplx(1.0, 0.0);
        cplx alpha = -phase * norm_x;

        double vnorm2 = 0.0;
        for (std::size_t i = col + 1; i < n; ++i) {
            v[i] = h[i * n + col];
            if (i == col + 1) v[i] -= alpha;
            vnorm2 += std::norm(v[i]);
        }
        if (vnorm2 == 0.0) continue;

        // P = I - 2 v v* / (v* v), applied as similarity
        // left: H := P H
        for (std::size_t j = col; j < n; ++j) {
            cplx dot(0.0, 0.0);
            for (std::size_t i = col + 1; i < n; ++i) dot += std::conj(v[i]) * h[i * n + j];
            cplx f = 2.0 * dot / vnorm2;
            for (std::size_t i = col + 1; i < n; ++i) h[i * n + j] -= f * v[i];
        }
        // right: H := H P
        for (std::size_t i = 0; i < n; ++i) {
            cplx dot(0.0, 0.0);
            for (std::size_t j = col + 1; j < n; ++j) dot += h[i * n + j] * v[j];
            cplx f = 2.0 * dot / vnorm2;
            for (std::size_t j = col + 1; j < n; ++j) h[i * n + j] -= f * std::conj(v[j]);
        }
        if (want_q) {
            for (std::size_t i = 0; i < n; ++i) {
                cplx dot(0.0, 0.0);
                for (std::size_t j = col + 1; j < n; ++j) dot += q[i * n + j] * v[j];
                cplx f = 2.0 * dot / vnorm2;
                for (std::size_t j = col + 1; j < n; ++j) q[i * n + j] -= f * std::conj(v[j]);
            }
        }
        // clean the annihilated entries
        h[(col + 1) * n + col] = alpha;
        for (std::size_t i = col + 2; i < n; ++i) h[i * n + col] = cplx(0.0, 0.0);
    }
}

}  // namespace

EigenResult eigen_decompose(const CMatrix& m, bool want_vectors) {
    std::size_t n = m.dim();
    if (n == 0) return {};
    if (!m.all_finite()) throw Error(ErrorKind::Convergence, "eigen solver given non-finite input");

    EigenResult out;
    if (n == 1) {
        out.values = {m(0, 0)};
        if (want_vectors) out.vectors = {{cplx(1.0, 0.0)}};
        return out;
    }
    if (n == 2) {
        auto [l1, l2] = eig2(m(0, 0), m(0, 1), m(1, 0), m(1, 1));
        out.values = {l1, l2};
        if (want_vectors) {
            auto vec_for = [&](cplx lambda) -> std::vector<cplx> {
                // rows of (M - lambda I) give the kernel direction
                cplx r1[2] = {m(0, 0) - lambda, m(0, 1)};
                cplx r2[2] = {m(1, 0), m(1, 1) - lambda};
                std::vector<cplx> v1 = {-r1[1], r1[0]};
                std::vector<cplx> v2 = {-r2[1], r2[0]};
                double n1 = std::sqrt(std::norm(v1[0]) + std::norm(v1[1]));
                double n2 = std::sqrt(std::norm(v2[0]) + std::norm(v2[1]));
                std::vector<cplx> v = (n1 >= n2) ? v1 : v2;
                double nv = std::sqrt(std::norm(v[0]) + std::norm(v[1]));
                if (nv == 0.0) return {cplx(1.0, 0.0), cplx(0.0, 0.0)};
                v[0] /= nv;
                v[1] /= nv;
                return v;
            };
            out.vectors = {vec_for(l1), vec_for(l2)};
        }
        return out;
    }

    std::vector<cplx> h = m.data();
    std::vector<cplx> q;
    if (want_vectors) {
        q.assign(n * n, cplx(0.0, 0.0));
        for (std::size_t i = 0; i < n; ++i) q[i * n + i] = 1.0;
    }
    hessenberg(h, q, n, want_vectors);

    // shifted QR with deflation
    std::size_t hi = n - 1;
    std::size_t total_iters = 0;
    const std::size_t max_iters = 60 * n;
    std::size_t since_deflation = 0;
    while (hi > 0) {
        // deflation scan
        std::size_t lo = hi;
        while (lo > 0) {
            double sub = std::abs(h[lo * n + lo - 1]);
            double diag = std::abs(h[(lo - 1) * n + lo - 1]) + std::abs(h[lo * n + lo]);
            if (diag == 0.0) diag = 1.0;
            if (sub <= kDeflateEps * diag) {
                h[lo * n + lo - 1] = cplx(0.0, 0.0);
                break;
            }
            --lo;
        }
        if (lo == hi) {
            --hi;
            since_deflation = 0;
            continue;
        }

        if (++total_iters > max_iters)
            throw Error(ErrorKind::Convergence, "eigen QR iteration cap exceeded");

        // Wilkinson shift from the trailing 2x2, exceptional shift when stuck
        cplx shift;
        if (++since_deflation % 12 == 0) {
            shift = cplx(std::abs(h[hi * n + hi - 1]), 0.0) + h[hi * n + hi];
        } else {
            auto [l1, l2] = eig2(h[(hi - 1) * n + hi - 1], h[(hi - 1) * n + hi],
                                 h[hi * n + hi - 1], h[hi * n + hi]);
            shift = (std::abs(l1 - h[hi * n + hi]) < std::abs(l2 - h[hi * n + hi])) ? l1 : l2;
        }

        for (std::size_t i = lo; i <= hi; ++i) h[i * n + i] -= shift;
        std::vector<Rotation> rots;
        rots.reserve(hi - lo);
        for (std::size_t i = lo; i < hi; ++i) {
            Rotation g = make_rotation(h[i * n + i], h[(i + 1) * n + i]);
            apply_left(h, n, i, g, i, n);
            h[(i + 1) * n + i] = cplx(0.0, 0.0);
            rots.push_back(g);
        }
        for (std::size_t i = lo; i < hi; ++i) {
            const Rotation& g = rots[i - lo];
            apply_right(h, n, i, g, 0, std::min(i + 2, hi) + 1);
            if (want_vectors) apply_right(q, n, i, g, 0, n);
        }
        for (std::size_t i = lo; i <= hi; ++i) h[i * n + i] += shift;
    }

    // Schur diagonal -> eigenvalues
    std::vector<cplx> values(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = h[i * n + i];

    std::vector<std::vector<cplx>> vectors;
    if (want_vectors) {
        double tnorm = 0.0;
        for (const cplx& z : h) tnorm = std::max(tnorm, std::abs(z));
        if (tnorm == 0.0) tnorm = 1.0;
        vectors.resize(n);
        std::vector<cplx> y(n);
        for (std::size_t idx = 0; idx < n; ++idx) {
            cplx lambda = values[idx];
            std::fill(y.begin(), y.end(), cplx(0.0, 0.0));
            y[idx] = 1.0;
            for (std::size_t jj = idx; jj-- > 0;) {
                cplx acc(0.0, 0.0);
                for (std::size_t k = jj + 1; k <= idx; ++k) acc += h[jj * n + k] * y[k];
                cplx denom = h[jj * n + jj] - lambda;
                if (std::abs(denom) < 1e-14 * tnorm) denom = cplx(1e-14 * tnorm, 0.0);
                y[jj] = -acc / denom;
            }
            std::vector<cplx> v(n, cplx(0.0, 0.0));
            for (std::size_t i = 0; i < n; ++i) {
                cplx acc(0.0, 0.0);
                for (std::size_t k = 0; k <= idx; ++k) acc += q[i * n + k] * y[k];
                v[i] = acc;
            }
            double nv = 0.0;
            for (const cplx& z : v) nv += std::norm(z);
            nv = std::sqrt(nv);
            if (nv > 0.0)
                for (cplx& z : v) z /= nv;
            vectors[idx] = std::move(v);
        }
    }

    // sort by modulus, descending, stable
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(values[a]) > std::abs(values[b]);
    });
    out.values.resize(n);
    if (want_vectors) out.vectors.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.values[i] = values[order[i]];
        if (want_vectors) out.vectors[i] = std::move(vectors[order[i]]);
    }
    return out;
}

std::vector<double> eigen_moduli(const CMatrix& m) {
    EigenResult r = eigen_decompose(m, false);
    std::vector<double> mods(r.values.size());
    for (std::size_t i = 0; i < mods.size(); ++i) mods[i] = std::abs(r.values[i]);
    return mods;
}

}  // namespace bifurc
