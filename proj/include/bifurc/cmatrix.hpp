#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace bifurc {

using cplx = std::complex<double>;

// Dense square complex matrix, row-major. Sized for the small dimensions this
// library needs: representation images (d <= 8) and their exterior powers
// (up to C(8,4) = 70).
class CMatrix {
public:
    CMatrix() = default;
    explicit CMatrix(std::size_t d) : d_(d), a_(d * d, cplx(0.0, 0.0)) {}

    static CMatrix identity(std::size_t d) {
        CMatrix m(d);
        for (std::size_t i = 0; i < d; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t dim() const { return d_; }
    cplx& operator()(std::size_t i, std::size_t j) { return a_[i * d_ + j]; }
    const cplx& operator()(std::size_t i, std::size_t j) const { return a_[i * d_ + j]; }
    const std::vector<cplx>& data() const { return a_; }
    std::vector<cplx>& data() { return a_; }

    CMatrix operator*(const CMatrix& rhs) const;
    CMatrix operator+(const CMatrix& rhs) const;
    CMatrix operator-(const CMatrix& rhs) const;
    CMatrix operator*(cplx scalar) const;

    CMatrix transpose() const;
    std::vector<cplx> apply(const std::vector<cplx>& v) const;

    double frobenius() const;
    cplx trace() const;

    // LU with partial pivoting
    cplx det() const;
    // inverse with residual check ||M * M^-1 - I||_F <= tol (SingularError otherwise)
    CMatrix inverse(double residual_tol = 1e-10) const;

    // spectral norm by power iteration on M* M; diagnostics only, every
    // estimator uses the Frobenius norm
    double operator_norm(std::size_t iterations = 64) const;

    bool all_finite() const;

private:
    std::size_t d_ = 0;
    std::vector<cplx> a_;
};

// matrix of k x k minors in lexicographic order of index subsets
CMatrix exterior_power(const CMatrix& m, std::size_t k);

std::size_t binomial(std::size_t n, std::size_t k);

// Product kept at unit Frobenius scale with the accumulated log of the true
// norm stored separately; prevents overflow in long matrix products.
struct ScaledProduct {
    CMatrix matrix;     // Frobenius norm held in [1/2, 2]
    double log_scale =  0.0;

    static ScaledProduct identity(std::size_t d);
    static ScaledProduct from(const CMatrix& m);

    // absorb a new factor on the given side, then rescale
    void multiply_left(const CMatrix& factor);
    void multiply_right(const CMatrix& factor);

    // log of the Frobenius norm of the true product
    double log_norm() const;

    // pull the true product's |det| back to 1 (valid for SL products only)
    void renormalize_unimodular(double drift_bound = 1e-6);

private:
    void rescale();
};

// Homogeneous coordinates normalized so the max-modulus coordinate is 1.
struct ProjPoint {
    std::vector<cplx> coords;

    explicit ProjPoint(std::vector<cplx> c);
    static ProjPoint basis(std::size_t d, std::size_t i);

    std::size_t dim() const { return coords.size(); }
};

// A hyperplane {x : sum_i phi_i x_i = 0}, stored by its defining covector in
// the same max-modulus normalization.
struct ProjHyperplane {
    std::vector<cplx> covector;

    explicit ProjHyperplane(std::vector<cplx> c);

    std::size_t dim() const { return covector.size(); }
};

// arccos(|<p,q>| / (||p|| ||q||)), in [0, pi/2]
double fubini_study_distance(const ProjPoint& p, const ProjPoint& q);

// hermitian distance from a point to a hyperplane: |<phi, x>| / (||phi|| ||x||) arc
double fs_distance_to_hyperplane(const ProjPoint& p, const ProjHyperplane& h);

// d x k orthonormal frame, column-major storage
struct Frame {
    std::size_t d = 0, k = 0;
    std::vector<cplx> cols;  // cols[j * d + i]

    static Frame standard(std::size_t d, std::size_t k);
    cplx& at(std::size_t i, std::size_t j) { return cols[j * d + i]; }
    const cplx& at(std::size_t i, std::size_t j) const { return cols[j * d + i]; }
    double orthonormality_defect() const;
};

struct QrStepResult {
    Frame frame;
    std::vector<double> log_diag;  // log |R_ii|, i = 1..k
};

// QR of M * frame; RankCollapse when some |R_ii| underflows
QrStepResult qr_step(const Frame& frame, const CMatrix& m);

struct EigenResult {
    std::vector<cplx> values;                  // sorted by modulus, descending
    std::vector<std::vector<cplx>> vectors;    // right eigenvectors, same order (may be empty)
};

// Complex Schur form via Hessenberg reduction + shifted QR iteration.
// Relative accuracy ~1e-12 for the dimensions in scope (contract: 1e-9).
EigenResult eigen_decompose(const CMatrix& m, bool want_vectors);

// sorted descending list of eigenvalue moduli
std::vector<double> eigen_moduli(const CMatrix& m);

}  // namespace bifurc
