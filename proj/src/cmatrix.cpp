#include "bifurc/cmatrix.hpp"

#include <algorithm>
#include <cmath>

#include "bifurc/errors.hpp"

namespace bifurc {

CMatrix CMatrix::operator*(const CMatrix& rhs) const {
    if (d_ != rhs.d_) throw Error(ErrorKind::Dimension, "matrix product dimension mismatch");
    CMatrix out(d_);
    for (std::size_t i = 0; i < d_; ++i) {
        for (std::size_t k = 0; k < d_; ++k) {
            cplx aik = a_[i * d_ + k];
            if (aik == cplx(0.0, 0.0)) continue;
            const cplx* rrow = &rhs.a_[k * d_];
            cplx* orow = &out.a_[i * d_];
            for (std::size_t j = 0; j < d_; ++j) orow[j] += aik * rrow[j];
        }
    }
    return out;
}

CMatrix CMatrix::operator+(const CMatrix& rhs) const {
    if (d_ != rhs.d_) throw Error(ErrorKind::Dimension, "matrix sum dimension mismatch");
    CMatrix out(d_);
    for (std::size_t i = 0; i < a_.size(); ++i) out.a_[i] = a_[i] + rhs.a_[i];
    return out;
}

CMatrix CMatrix::operator-(const CMatrix& rhs) const {
    if (d_ != rhs.d_) throw Error(ErrorKind::Dimension, "matrix difference dimension mismatch");
    CMatrix out(d_);
    for (std::size_t i = 0; i < a_.size(); ++i) out.a_[i] = a_[i] - rhs.a_[i];
    return out;
}

CMatrix CMatrix::operator*(cplx scalar) const {
    CMatrix out(d_);
    for (std::size_t i = 0; i < a_.size(); ++i) out.a_[i] = a_[i] * scalar;
    return out;
}

CMatrix CMatrix::transpose() const {
    CMatrix out(d_);
    for (std::size_t i = 0; i < d_; ++i)
        for (std::size_t j = 0; j < d_; ++j) out(j, i) = (*this)(i, j);
    return out;
}

std::vector<cplx> CMatrix::apply(const std::vector<cplx>& v) const {
    if (v.size() != d_) throw Error(ErrorKind::Dimension, "matrix-vector dimension mismatch");
    std::vector<cplx> out(d_, cplx(0.0, 0.0));
    for (std::size_t i = 0; i < d_; ++i) {
        cplx acc(0.0, 0.0);
        for (std::size_t j = 0; j < d_; ++j) acc += a_[i * d_ + j] * v[j];
        out[i] = acc;
    }
    return out;
}

double CMatrix::frobenius() const {
    double s = 0.0;
    for (const cplx& z : a_) s += std::norm(z);
    return std::sqrt(s);
}

cplx CMatrix::trace() const {
    cplx t(0.0, 0.0);
    for (std::size_t i = 0; i < d_; ++i) t += a_[i * d_ + i];
    return t;
}

namespace {

// LU with partial pivoting; returns false on exact singularity
bool lu_factor(std::vector<cplx>& a, std::size_t d, std::vector<std::size_t>& piv, int& sign) {
    piv.resize(d);
    sign = 1;
    for (std::size_t i = 0; i < d; ++i) piv[i] = i;
    for (std::size_t col = 0; col < d; ++col) {
        std::size_t best = col;
        double best_mag = std::abs(a[col * d + col]);
        for (std::size_t r = col + 1; r < d; ++r) {
            double mag = std::abs(a[r * d + col]);
            if (mag > best_mag) {
                best_mag = mag;
                best = r;
            }
        }
        if (best_mag == 0.0) return false;
        if (best != col) {
            for (std::size_t j = 0; j < d; ++j) std::swap(a[best * d + j], a[col * d + j]);
            std::swap(piv[best], piv[col]);
            sign = -sign;
        }
        cplx pivot = a[col * d + col];
        for (std::size_t r = col + 1; r < d; ++r) {
            cplx f = a[r * d + col] / pivot;
            a[r * d + col] = f;
            if (f == cplx(0.0, 0.0)) continue;
            for (std::size_t j = col + 1; j < d; ++j) a[r * d + j] -= f * a[col * d + j];
        }
    }
    return true;
}

}  // namespace

cplx CMatrix::det() const {
    if (d_ == 0) return 1.0;
    if (d_ == 1) return a_[0];
    if (d_ == 2) return a_[0] * a_[3] - a_[1] * a_[2];
    std::vector<cplx> lu = a_;
    std::vector<std::size_t> piv;
    int sign = 1;
    if (!lu_factor(lu, d_, piv, sign)) return cplx(0.0, 0.0);
    cplx p = (sign > 0) ? cplx(1.0, 0.0) : cplx(-1.0, 0.0);
    for (std::size_t i = 0; i < d_; ++i) p *= lu[i * d_ + i];
    return p;
}

CMatrix CMatrix::inverse(double residual_tol) const {
    std::vector<cplx> lu = a_;
    std::vector<std::size_t> piv;
    int sign = 1;
    if (!lu_factor(lu, d_, piv, sign))
        throw Error(ErrorKind::Singular, "matrix is numerically singular");

    CMatrix inv(d_);
    std::vector<cplx> x(d_);
    for (std::size_t col = 0; col < d_; ++col) {
        // forward solve L y = P e_col
        for (std::size_t i = 0; i < d_; ++i) {
            cplx b = (piv[i] == col) ? cplx(1.0, 0.0) : cplx(0.0, 0.0);
            for (std::size_t j = 0; j < i; ++j) b -= lu[i * d_ + j] * x[j];
            x[i] = b;
        }
        // back solve U x = y
        for (std::size_t ii = d_; ii-- > 0;) {
            cplx b = x[ii];
            for (std::size_t j = ii + 1; j < d_; ++j) b -= lu[ii * d_ + j] * x[j];
            x[ii] = b / lu[ii * d_ + ii];
        }
        for (std::size_t i = 0; i < d_; ++i) inv(i, col) = x[i];
    }

    CMatrix residual = (*this) * inv - CMatrix::identity(d_);
    if (residual.frobenius() > residual_tol)
        throw Error(ErrorKind::Singular, "inverse residual " + std::to_string(residual.frobenius()) +
                                             " exceeds tolerance");
    return inv;
}

double CMatrix::operator_norm(std::size_t iterations) const {
    if (d_ == 0) return 0.0;
    std::vector<cplx> v(d_);
    for (std::size_t i = 0; i < d_; ++i)
        v[i] = cplx(1.0 / std::sqrt(static_cast<double>(d_)), 0.0);
    double sigma = 0.0;
    for (std::size_t it = 0; it < iterations; ++it) {
        std::vector<cplx> mv = apply(v);
        // w = M* (M v)
        std::vector<cplx> w(d_, cplx(0.0, 0.0));
        for (std::size_t j = 0; j < d_; ++j) {
            cplx acc(0.0, 0.0);
            for (std::size_t i = 0; i < d_; ++i) acc += std::conj(a_[i * d_ + j]) * mv[i];
            w[j] = acc;
        }
        double norm = 0.0;
        for (cplx z : w) norm += std::norm(z);
        norm = std::sqrt(norm);
        if (norm == 0.0) return 0.0;
        sigma = std::sqrt(norm);
        for (std::size_t j = 0; j < d_; ++j) v[j] = w[j] / norm;
    }
    return sigma;
}

bool CMatrix::all_finite() const {
    for (const cplx& z : a_)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
}

std::size_t binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    std::size_t r = 1;
    for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

namespace {

std::vector<std::vector<std::size_t>> lex_subsets(std::size_t n, std::size_t k) {
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    while (true) {
        out.push_back(idx);
        // advance to next lexicographic combination
        std::size_t pos = k;
        while (pos-- > 0) {
            if (idx[pos] != pos + n - k) {
                ++idx[pos];
                for (std::size_t j = pos + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
                break;
            }
            if (pos == 0) return out;
        }
    }
}

cplx minor_det(const CMatrix& m, const std::vector<std::size_t>& rows,
               const std::vector<std::size_t>& cols) {
    std::size_t k = rows.size();
    if (k == 1) return m(rows[0], cols[0]);
    if (k == 2)
        return m(rows[0], cols[0]) * m(rows[1], cols[1]) -
               m(rows[0], cols[1]) * m(rows[1], cols[0]);
    CMatrix sub(k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) sub(i, j) = m(rows[i], cols[j]);
    return sub.det();
}

}  // namespace

CMatrix exterior_power(const CMatrix& m, std::size_t k) {
    std::size_t d = m.dim();
    if (k < 1 || k > d) throw Error(ErrorKind::Dimension, "exterior power order out of range");
    if (k == 1) return m;
    auto subsets = lex_subsets(d, k);
    CMatrix out(subsets.size());
    for (std::size_t i = 0; i < subsets.size(); ++i)
        for (std::size_t j = 0; j < subsets.size(); ++j)
            out(i, j) = minor_det(m, subsets[i], subsets[j]);
    return out;
}

ScaledProduct ScaledProduct::identity(std::size_t d) {
    ScaledProduct p;
    p.matrix = CMatrix::identity(d);
    p.log_scale = 0.0;
    p.rescale();
    return p;
}

ScaledProduct ScaledProduct::from(const CMatrix& m) {
    ScaledProduct p;
    p.matrix = m;
    p.log_scale = 0.0;
    p.rescale();
    return p;
}

void ScaledProduct::rescale() {
    double norm = matrix.frobenius();
    if (norm >= 0.5 && norm <= 2.0) return;
    if (!(norm > 0.0) || !std::isfinite(norm))
        throw Error(ErrorKind::Singular, "scaled product norm invalid");
    cplx inv(1.0 / norm, 0.0);
    matrix = matrix * inv;
    log_scale += std::log(norm);
}

void ScaledProduct::multiply_left(const CMatrix& factor) {
    matrix = factor * matrix;
    double norm = matrix.frobenius();
    if (!(norm > 0.0) || !std::isfinite(norm))
        throw Error(ErrorKind::Singular, "scaled product norm invalid");
    if (norm < 0.5 || norm > 2.0) {
        matrix = matrix * cplx(1.0 / norm, 0.0);
        log_scale += std::log(norm);
    }
}

void ScaledProduct::multiply_right(const CMatrix& factor) {
    matrix = matrix * factor;
    double norm = matrix.frobenius();
    if (!(norm > 0.0) || !std::isfinite(norm))
        throw Error(ErrorKind::Singular, "scaled product norm invalid");
    if (norm < 0.5 || norm > 2.0) {
        matrix = matrix * cplx(1.0 / norm, 0.0);
        log_scale += std::log(norm);
    }
}

double ScaledProduct::log_norm() const { return log_scale + std::log(matrix.frobenius()); }

void ScaledProduct::renormalize_unimodular(double drift_bound) {
    std::size_t d = matrix.dim();
    double log_det = std::log(std::abs(matrix.det()));
    // The unit-norm part can resolve its determinant only while the condition
    // number stays well inside double precision; past that the smallest
    // singular value is rounding noise and the reading is meaningless.
    if (!std::isfinite(log_det) || std::abs(log_det) > 20.0) return;
    double drift = static_cast<double>(d) * log_scale + log_det;
    if (std::isfinite(drift) && std::abs(drift) > drift_bound)
        log_scale -= drift / static_cast<double>(d);
}

ProjPoint::ProjPoint(std::vector<cplx> c) : coords(std::move(c)) {
    std::size_t best = 0;
    double best_mag = 0.0;
    for (std::size_t i = 0; i < coords.size(); ++i) {
        double mag = std::abs(coords[i]);
        if (mag > best_mag) {
            best_mag = mag;
            best = i;
        }
    }
    if (best_mag == 0.0) throw Error(ErrorKind::Dimension, "projective point cannot be zero");
    cplx pivot = coords[best];
    for (cplx& z : coords) z /= pivot;
    coords[best] = cplx(1.0, 0.0);
}

ProjPoint ProjPoint::basis(std::size_t d, std::size_t i) {
    std::vector<cplx> c(d, cplx(0.0, 0.0));
    c[i] = 1.0;
    return ProjPoint(std::move(c));
}

ProjHyperplane::ProjHyperplane(std::vector<cplx> c) : covector(std::move(c)) {
    std::size_t best = 0;
    double best_mag = 0.0;
    for (std::size_t i = 0; i < covector.size(); ++i) {
        double mag = std::abs(covector[i]);
        if (mag > best_mag) {
            best_mag = mag;
            best = i;
        }
    }
    if (best_mag == 0.0) throw Error(ErrorKind::Dimension, "hyperplane covector cannot be zero");
    cplx pivot = covector[best];
    for (cplx& z : covector) z /= pivot;
    covector[best] = cplx(1.0, 0.0);
}

namespace {

double clamped_cos_angle(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    cplx inner(0.0, 0.0);
    double na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        inner += a[i] * std::conj(b[i]);
        na += std::norm(a[i]);
        nb += std::norm(b[i]);
    }
    double c = std::abs(inner) / std::sqrt(na * nb);
    return std::min(1.0, std::max(0.0, c));
}

}  // namespace

double fubini_study_distance(const ProjPoint& p, const ProjPoint& q) {
    if (p.dim() != q.dim()) throw Error(ErrorKind::Dimension, "FS distance dimension mismatch");
    return std::acos(clamped_cos_angle(p.coords, q.coords));
}

double fs_distance_to_hyperplane(const ProjPoint& p, const ProjHyperplane& h) {
    if (p.dim() != h.dim()) throw Error(ErrorKind::Dimension, "FS distance dimension mismatch");
    // sine of the angle to the orthogonal complement of the covector
    double c = clamped_cos_angle(p.coords, h.covector);
    return std::asin(c);
}

Frame Frame::standard(std::size_t d, std::size_t k) {
    Frame f;
    f.d = d;
    f.k = k;
    f.cols.assign(d * k, cplx(0.0, 0.0));
    for (std::size_t j = 0; j < k; ++j) f.at(j, j) = 1.0;
    return f;
}

double Frame::orthonormality_defect() const {
    double worst = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a; b < k; ++b) {
            cplx inner(0.0, 0.0);
            for (std::size_t i = 0; i < d; ++i) inner += std::conj(at(i, a)) * at(i, b);
            double target = (a == b) ? 1.0 : 0.0;
            worst = std::max(worst, std::abs(inner - cplx(target, 0.0)));
        }
    }
    return worst;
}

QrStepResult qr_step(const Frame& frame, const CMatrix& m) {
    std::size_t d = frame.d, k = frame.k;
    if (m.dim() != d) throw Error(ErrorKind::Dimension, "qr_step dimension mismatch");

    // apply M to each column
    Frame w;
    w.d = d;
    w.k = k;
    w.cols.assign(d * k, cplx(0.0, 0.0));
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t i = 0; i < d; ++i) {
            cplx acc(0.0, 0.0);
            for (std::size_t l = 0; l < d; ++l) acc += m(i, l) * frame.at(l, j);
            w.at(i, j) = acc;
        }
    }

    // modified Gram-Schmidt with a second orthogonalization pass
    QrStepResult out;
    out.frame.d = d;
    out.frame.k = k;
    out.frame.cols.assign(d * k, cplx(0.0, 0.0));
    out.log_diag.resize(k);
    std::vector<cplx> v(d);
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t i = 0; i < d; ++i) v[i] = w.at(i, j);
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t prev = 0; prev < j; ++prev) {
                cplx proj(0.0, 0.0);
                for (std::size_t i = 0; i < d; ++i) proj += std::conj(out.frame.at(i, prev)) * v[i];
                for (std::size_t i = 0; i < d; ++i) v[i] -= proj * out.frame.at(i, prev);
            }
        }
        double norm = 0.0;
        for (std::size_t i = 0; i < d; ++i) norm += std::norm(v[i]);
        norm = std::sqrt(norm);
        if (!(norm > 1e-300))
            throw Error(ErrorKind::RankCollapse,
                        "qr_step column " + std::to_string(j + 1) + " collapsed");
        out.log_diag[j] = std::log(norm);
        for (std::size_t i = 0; i < d; ++i) out.frame.at(i, j) = v[i] / norm;
    }
    return out;
}

}  // namespace bifurc
