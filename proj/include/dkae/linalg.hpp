#pragma once

// Dense symmetric eigendecomposition (cyclic Jacobi), SPD solves (Cholesky)
// and PCA. Shared numeric substrate for the kernel and autoencoder layers.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "dkae/errors.hpp"
#include "dkae/matrix.hpp"

namespace dkae {

struct EigResult {
    std::vector<double> eigenvalues; // sorted descending
    DenseMatrix eigenvectors;        // column j pairs with eigenvalues[j], unit norm
};

struct PcaModel {
    std::vector<double> mean;
    DenseMatrix components; // d x m, orthonormal columns, descending variance
    std::vector<double> explained_variance;
};

namespace detail {

inline void check_square_symmetric(const DenseMatrix& m, const char* what) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw DimensionError(std::string(what) + ": matrix must be square and nonempty, got " +
                             std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
    if (!is_symmetric(m, 1e-10)) {
        throw NumericError(std::string(what) + ": matrix not symmetric within 1e-10");
    }
}

} // namespace detail

// Cyclic Jacobi with NR-style thresholding. Converges when the off-diagonal
// Frobenius mass drops below 1e-12 * ||M||_F. Eigenvalues are sorted
// descending; each eigenvector's first nonzero component is made positive.
inline EigResult sym_eig(const DenseMatrix& m) {
    detail::check_square_symmetric(m, "sym_eig");
    const std::size_t n = m.rows();

    DenseMatrix a = m;
    // Accumulate rotations into V^T so rotated columns stay row-contiguous.
    DenseMatrix vt = DenseMatrix::identity(n);
    const double norm = frobenius_norm(m);
    const double target = 1e-12 * norm;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off_sq = 0.0;
        double off_abs = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            const double* ap = a.row(p);
            for (std::size_t q = p + 1; q < n; ++q) {
                off_sq += ap[q] * ap[q];
                off_abs += std::abs(ap[q]);
            }
        }
        if (std::sqrt(2.0 * off_sq) <= target) break;
        const double tresh = sweep < 3 ? 0.2 * off_abs / static_cast<double>(n * n) : 0.0;

        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double* rowp = a.row(p);
                double* rowq = a.row(q);
                const double apq = rowp[q];
                const double g = 100.0 * std::abs(apq);
                // Tiny off-diagonal relative to its diagonal pair: flush to zero.
                if (sweep > 3 && std::abs(rowp[p]) + g == std::abs(rowp[p]) &&
                    std::abs(rowq[q]) + g == std::abs(rowq[q])) {
                    rowp[q] = 0.0;
                    rowq[p] = 0.0;
                    continue;
                }
                if (std::abs(apq) <= tresh) continue;

                const double theta = (rowq[q] - rowp[p]) / (2.0 * apq);
                double t;
                if (g + std::abs(theta) * 1e-50 == g && std::abs(theta) > 1e150) {
                    t = 1.0 / (2.0 * theta); // theta overflow guard
                } else {
                    t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                    if (theta < 0.0) t = -t;
                }
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const double tau = s / (1.0 + c);

                const double app = rowp[p];
                const double aqq = rowq[q];
                rowp[p] = app - t * apq;
                rowq[q] = aqq + t * apq;
                rowp[q] = 0.0;
                rowq[p] = 0.0;
                // Rotate rows p and q, then mirror into the columns.
                for (std::size_t j = 0; j < n; ++j) {
                    if (j == p || j == q) continue;
                    const double ajp = rowp[j];
                    const double ajq = rowq[j];
                    rowp[j] = ajp - s * (ajq + tau * ajp);
                    rowq[j] = ajq + s * (ajp - tau * ajq);
                }
                for (std::size_t j = 0; j < n; ++j) {
                    if (j == p || j == q) continue;
                    a(j, p) = rowp[j];
                    a(j, q) = rowq[j];
                }
                double* vp = vt.row(p);
                double* vq = vt.row(q);
                for (std::size_t j = 0; j < n; ++j) {
                    const double up = vp[j];
                    const double uq = vq[j];
                    vp[j] = up - s * (uq + tau * up);
                    vq[j] = uq + s * (up - tau * uq);
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&a](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    EigResult res;
    res.eigenvalues.resize(n);
    res.eigenvectors = DenseMatrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t src = order[k];
        res.eigenvalues[k] = a(src, src);
        const double* v = vt.row(src);
        double sign = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (std::abs(v[i]) > 1e-12) {
                sign = v[i] > 0.0 ? 1.0 : -1.0;
                break;
            }
        }
        for (std::size_t i = 0; i < n; ++i) res.eigenvectors(i, k) = sign * v[i];
    }
    return res;
}

// Cholesky factor of an SPD matrix, lower triangular. Throws NumericError on
// a non-positive pivot.
inline DenseMatrix cholesky(const DenseMatrix& a) {
    detail::check_square_symmetric(a, "cholesky");
    const std::size_t n = a.rows();
    DenseMatrix l(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a(i, j);
            const double* li = l.row(i);
            const double* lj = l.row(j);
            for (std::size_t k = 0; k < j; ++k) s -= li[k] * lj[k];
            if (i == j) {
                if (!(s > 0.0) || !std::isfinite(s)) {
                    throw NumericError("cholesky: matrix not positive definite (pivot " +
                                       std::to_string(s) + " at row " + std::to_string(i) + ")");
                }
                l(i, i) = std::sqrt(s);
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }
    return l;
}

// Solves A X = B for SPD A via Cholesky.
inline DenseMatrix solve_spd(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows()) {
        throw DimensionError("solve_spd: A is " + std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()) + " but B has " + std::to_string(b.rows()) +
                             " rows");
    }
    const DenseMatrix l = cholesky(a);
    const std::size_t n = a.rows();
    const std::size_t m = b.cols();
    // Forward substitution L Y = B, then back substitution L^T X = Y.
    DenseMatrix x = b;
    for (std::size_t i = 0; i < n; ++i) {
        const double* li = l.row(i);
        double* xi = x.row(i);
        for (std::size_t k = 0; k < i; ++k) {
            const double lik = li[k];
            if (lik == 0.0) continue;
            const double* xk = x.row(k);
            for (std::size_t j = 0; j < m; ++j) xi[j] -= lik * xk[j];
        }
        const double inv = 1.0 / li[i];
        for (std::size_t j = 0; j < m; ++j) xi[j] *= inv;
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double* xi = x.row(ii);
        for (std::size_t k = ii + 1; k < n; ++k) {
            const double lki = l(k, ii);
            if (lki == 0.0) continue;
            const double* xk = x.row(k);
            for (std::size_t j = 0; j < m; ++j) xi[j] -= lki * xk[j];
        }
        const double inv = 1.0 / l(ii, ii);
        for (std::size_t j = 0; j < m; ++j) xi[j] *= inv;
    }
    return x;
}

inline PcaModel pca_fit(const DenseMatrix& x, std::size_t m) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    if (n < 2) throw ParameterError("pca_fit: need at least 2 samples, got " + std::to_string(n));
    if (m < 1 || m > std::min(n, d)) {
        throw ParameterError("pca_fit: m = " + std::to_string(m) + " outside [1, min(n,d)] = [1, " +
                             std::to_string(std::min(n, d)) + "]");
    }

    PcaModel model;
    model.mean.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) model.mean[j] += x(i, j);
    for (std::size_t j = 0; j < d; ++j) model.mean[j] /= static_cast<double>(n);

    DenseMatrix centered(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) centered(i, j) = x(i, j) - model.mean[j];

    DenseMatrix cov = multiply_atb(centered, centered);
    const double inv = 1.0 / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < cov.size(); ++i) cov.data()[i] *= inv;

    const EigResult eig = sym_eig(cov);
    model.components = DenseMatrix(d, m);
    model.explained_variance.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
        model.explained_variance[k] = std::max(0.0, eig.eigenvalues[k]);
        for (std::size_t i = 0; i < d; ++i) model.components(i, k) = eig.eigenvectors(i, k);
    }
    return model;
}

inline DenseMatrix pca_project(const PcaModel& model, const DenseMatrix& x) {
    const std::size_t d = model.mean.size();
    if (x.cols() != d) {
        throw DimensionError("pca_project: input has " + std::to_string(x.cols()) +
                             " columns, model expects " + std::to_string(d));
    }
    DenseMatrix centered(x.rows(), d);
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < d; ++j) centered(i, j) = x(i, j) - model.mean[j];
    return multiply(centered, model.components);
}

inline DenseMatrix pca_reconstruct(const PcaModel& model, const DenseMatrix& z) {
    if (z.cols() != model.components.cols()) {
        throw DimensionError("pca_reconstruct: input has " + std::to_string(z.cols()) +
                             " columns, model has " + std::to_string(model.components.cols()) +
                             " components");
    }
    DenseMatrix x = multiply_abt(z, model.components);
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) x(i, j) += model.mean[j];
    return x;
}

} // namespace dkae
