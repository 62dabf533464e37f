#pragma once

// Kernel PCA on a precomputed kernel: truncated spectral features
// Z_m = E_m Lambda_m^{1/2}, Nystrom out-of-sample projection, rank-m kernel
// reconstruction, and a kernel-ridge pre-image map back to input space.

#include <cmath>
#include <string>
#include <vector>

#include "dkae/errors.hpp"
#include "dkae/kernel.hpp"
#include "dkae/linalg.hpp"
#include "dkae/matrix.hpp"

namespace dkae {

struct KpcaModel {
    EigResult eig;
    std::string kernel_kind;
    nlohmann::json kernel_params;
    std::size_t n_train = 0;
    double eigenvalue_floor = 0.0; // 1e-8 * lambda_max
    std::size_t usable_rank = 0;
};

struct PreimageModel {
    DenseMatrix anchors;       // projected training features, n x m
    DenseMatrix ridge_weights; // n x d, solves (K + lambda I) W = X_train
    double sigma_backmap = 0.0;
    double ridge_lambda = 0.0;
};

inline KpcaModel fit_kpca(const KernelMatrix& kernel, bool center = false) {
    const DenseMatrix& p = kernel.values;
    if (p.rows() != p.cols() || p.rows() < 2) {
        throw DimensionError("fit_kpca: kernel must be square with n >= 2, got " +
                             std::to_string(p.rows()) + "x" + std::to_string(p.cols()));
    }
    KpcaModel model;
    model.kernel_kind = kernel.kind;
    model.kernel_params = kernel.params;
    model.n_train = p.rows();
    if (center) {
        // Double centering: K' = K - row means - col means + grand mean.
        const std::size_t n = p.rows();
        std::vector<double> row_mean(n, 0.0);
        double grand = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += p(i, j);
            row_mean[i] = s / static_cast<double>(n);
            grand += s;
        }
        grand /= static_cast<double>(n * n);
        DenseMatrix centered(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                centered(i, j) = p(i, j) - row_mean[i] - row_mean[j] + grand;
            }
        }
        model.eig = sym_eig(centered);
    } else {
        model.eig = sym_eig(p);
    }

    const double lambda_max = model.eig.eigenvalues.front();
    if (!(lambda_max > 0.0)) {
        throw NumericError("fit_kpca: kernel has no positive eigenvalue (lambda_max = " +
                           std::to_string(lambda_max) + ")");
    }
    const double lambda_min = model.eig.eigenvalues.back();
    if (lambda_min < -1e-6 * lambda_max) {
        throw NumericError("fit_kpca: kernel not PSD within tolerance (lambda_min = " +
                           std::to_string(lambda_min) + ", lambda_max = " +
                           std::to_string(lambda_max) + ")");
    }
    // Directions below the floor are unusable: projecting onto them divides
    // by sqrt(lambda) and amplifies the eigensolver residual past 1e-8.
    model.eigenvalue_floor = 1e-8 * lambda_max;
    for (double& v : model.eig.eigenvalues) {
        if (v < 0.0) v = 0.0; // tiny negatives within tolerance
    }
    model.usable_rank = 0;
    for (double v : model.eig.eigenvalues) {
        if (v >= model.eigenvalue_floor) ++model.usable_rank;
    }
    return model;
}

namespace detail {

inline void check_component_count(const KpcaModel& model, std::size_t m, const char* what) {
    if (m < 1 || m > model.usable_rank) {
        throw ParameterError(std::string(what) + ": m = " + std::to_string(m) +
                             " outside usable rank [1, " + std::to_string(model.usable_rank) +
                             "]");
    }
}

} // namespace detail

// Z_m = E_m Lambda_m^{1/2}; row i is the m-dimensional feature of training
// point i.
inline DenseMatrix project_train(const KpcaModel& model, std::size_t m) {
    detail::check_component_count(model, m, "project_train");
    const std::size_t n = model.n_train;
    DenseMatrix z(n, m);
    std::vector<double> scale(m);
    for (std::size_t j = 0; j < m; ++j) scale[j] = std::sqrt(model.eig.eigenvalues[j]);
    for (std::size_t i = 0; i < n; ++i) {
        double* zi = z.row(i);
        const double* vi = model.eig.eigenvectors.row(i);
        for (std::size_t j = 0; j < m; ++j) zi[j] = vi[j] * scale[j];
    }
    return z;
}

// Nystrom extension: z = Lambda_m^{-1/2} E_m^T k_x for one test point's
// kernel column against the training set.
inline std::vector<double> nystrom_project(const KpcaModel& model, std::size_t m,
                                           const std::vector<double>& k_x) {
    detail::check_component_count(model, m, "nystrom_project");
    if (k_x.size() != model.n_train) {
        throw DimensionError("nystrom_project: kernel column length " +
                             std::to_string(k_x.size()) + ", expected " +
                             std::to_string(model.n_train));
    }
    std::vector<double> z(m, 0.0);
    for (std::size_t i = 0; i < model.n_train; ++i) {
        const double* vi = model.eig.eigenvectors.row(i);
        const double ki = k_x[i];
        if (ki == 0.0) continue;
        for (std::size_t j = 0; j < m; ++j) z[j] += vi[j] * ki;
    }
    for (std::size_t j = 0; j < m; ++j) z[j] /= std::sqrt(model.eig.eigenvalues[j]);
    return z;
}

// Rows of `cross`: kernel values of one out-of-sample point against the
// training set. Returns one projected row per input row.
inline DenseMatrix nystrom_project(const KpcaModel& model, std::size_t m,
                                   const DenseMatrix& cross) {
    detail::check_component_count(model, m, "nystrom_project");
    if (cross.cols() != model.n_train) {
        throw DimensionError("nystrom_project: cross kernel has " + std::to_string(cross.cols()) +
                             " columns, expected " + std::to_string(model.n_train));
    }
    DenseMatrix z(cross.rows(), m);
    std::vector<double> inv_scale(m);
    for (std::size_t j = 0; j < m; ++j) inv_scale[j] = 1.0 / std::sqrt(model.eig.eigenvalues[j]);
    for (std::size_t r = 0; r < cross.rows(); ++r) {
        const double* kx = cross.row(r);
        double* zr = z.row(r);
        for (std::size_t j = 0; j < m; ++j) zr[j] = 0.0;
        for (std::size_t i = 0; i < model.n_train; ++i) {
            const double ki = kx[i];
            if (ki == 0.0) continue;
            const double* vi = model.eig.eigenvectors.row(i);
            for (std::size_t j = 0; j < m; ++j) zr[j] += vi[j] * ki;
        }
        for (std::size_t j = 0; j < m; ++j) zr[j] *= inv_scale[j];
    }
    return z;
}

// Rank-m kernel reconstruction K_m = Z_m Z_m^T.
inline DenseMatrix kernel_approximation(const KpcaModel& model, std::size_t m) {
    return gram_rows(project_train(model, m));
}

inline double kernel_approx_distance(const KpcaModel& model, std::size_t m,
                                     const DenseMatrix& p) {
    return frob_distance(kernel_approximation(model, m), p);
}

inline double kernel_approx_distance(const KpcaModel& model, std::size_t m,
                                     const KernelMatrix& p) {
    return kernel_approx_distance(model, m, p.values);
}

inline PreimageModel fit_preimage(const DenseMatrix& z_train, const DenseMatrix& x_train,
                                  double ridge_lambda, double sigma) {
    if (z_train.rows() != x_train.rows()) {
        throw DimensionError("fit_preimage: " + std::to_string(z_train.rows()) +
                             " projected rows vs " + std::to_string(x_train.rows()) +
                             " input rows");
    }
    if (!(ridge_lambda > 0.0)) {
        throw ParameterError("fit_preimage: ridge_lambda must be positive, got " +
                             std::to_string(ridge_lambda));
    }
    if (!(sigma > 0.0)) {
        throw ParameterError("fit_preimage: sigma must be positive, got " +
                             std::to_string(sigma));
    }
    PreimageModel model;
    model.anchors = z_train;
    model.sigma_backmap = sigma;
    model.ridge_lambda = ridge_lambda;
    DenseMatrix k = rbf_kernel(z_train, sigma).values;
    for (std::size_t i = 0; i < k.rows(); ++i) k(i, i) += ridge_lambda;
    model.ridge_weights = solve_spd(k, x_train);
    return model;
}

// sigma defaults to the median pairwise distance between projected features.
inline PreimageModel fit_preimage(const DenseMatrix& z_train, const DenseMatrix& x_train,
                                  double ridge_lambda = 0.5) {
    return fit_preimage(z_train, x_train, ridge_lambda, median_pairwise_distance(z_train));
}

inline DenseMatrix preimage(const PreimageModel& model, const DenseMatrix& z) {
    if (z.cols() != model.anchors.cols()) {
        throw DimensionError("preimage: input has " + std::to_string(z.cols()) +
                             " columns, anchors have " + std::to_string(model.anchors.cols()));
    }
    return multiply(rbf_cross(z, model.anchors, model.sigma_backmap), model.ridge_weights);
}

inline std::vector<double> preimage(const PreimageModel& model, const std::vector<double>& z) {
    return preimage(model, DenseMatrix(1, z.size(), z)).row_vector(0);
}

} // namespace dkae
