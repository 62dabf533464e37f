#pragma once

// Kernel matrices and the normalized-Frobenius geometry used to compare
// them. A kernel matrix travels with provenance (kind + parameters) so
// downstream artifacts can state how they were produced.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dkae/errors.hpp"
#include "dkae/io.hpp"
#include "dkae/matrix.hpp"

namespace dkae {

struct KernelMatrix {
    DenseMatrix values;   // n x n, symmetric
    std::string kind;     // "pck", "rbf", "ideal", "code", ...
    nlohmann::json params = nlohmann::json::object();
};

// Cosine of the angle between two matrices under the Frobenius inner product.
inline double alignment(const DenseMatrix& a, const DenseMatrix& b) {
    if (!a.same_shape(b)) {
        throw DimensionError("alignment: shapes " + std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                             std::to_string(b.cols()));
    }
    const double na = frobenius_norm(a);
    const double nb = frobenius_norm(b);
    if (na == 0.0 || nb == 0.0) {
        throw NumericError("alignment: zero Frobenius norm operand");
    }
    return frobenius_inner(a, b) / (na * nb);
}

// || A/||A||_F - B/||B||_F ||_F. Equals sqrt(2 - 2 * alignment(A, B)).
inline double frob_distance(const DenseMatrix& a, const DenseMatrix& b) {
    if (!a.same_shape(b)) {
        throw DimensionError("frob_distance: shapes " + std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                             std::to_string(b.cols()));
    }
    const double na = frobenius_norm(a);
    const double nb = frobenius_norm(b);
    if (na == 0.0 || nb == 0.0) {
        throw NumericError("frob_distance: zero Frobenius norm operand");
    }
    double sum = 0.0;
    const double* pa = a.data();
    const double* pb = b.data();
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = pa[i] / na - pb[i] / nb;
        sum += d * d;
    }
    return std::sqrt(sum);
}

// K_ij = 1 when labels match, else 0.
inline KernelMatrix ideal_kernel(const std::vector<int>& labels) {
    const std::size_t n = labels.size();
    if (n == 0) throw ParameterError("ideal_kernel: empty label vector");
    KernelMatrix k;
    k.kind = "ideal";
    k.values = DenseMatrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const double v = labels[i] == labels[j] ? 1.0 : 0.0;
            k.values(i, j) = v;
            k.values(j, i) = v;
        }
    }
    return k;
}

// exp(-||x - y||^2 / (2 sigma^2)) between rows of X and rows of Y.
inline DenseMatrix rbf_cross(const DenseMatrix& x, const DenseMatrix& y, double sigma) {
    if (x.cols() != y.cols()) {
        throw DimensionError("rbf_cross: feature dims " + std::to_string(x.cols()) + " vs " +
                             std::to_string(y.cols()));
    }
    if (!(sigma > 0.0)) {
        throw ParameterError("rbf_cross: sigma must be positive, got " + std::to_string(sigma));
    }
    const double gamma = 1.0 / (2.0 * sigma * sigma);
    DenseMatrix k(x.rows(), y.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double* xi = x.row(i);
        double* ki = k.row(i);
        for (std::size_t j = 0; j < y.rows(); ++j) {
            ki[j] = std::exp(-gamma * squared_distance(xi, y.row(j), x.cols()));
        }
    }
    return k;
}

inline KernelMatrix rbf_kernel(const DenseMatrix& x, double sigma) {
    if (!(sigma > 0.0)) {
        throw ParameterError("rbf_kernel: sigma must be positive, got " + std::to_string(sigma));
    }
    const double gamma = 1.0 / (2.0 * sigma * sigma);
    KernelMatrix k;
    k.kind = "rbf";
    k.params["sigma"] = sigma;
    k.values = DenseMatrix(x.rows(), x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        k.values(i, i) = 1.0;
        for (std::size_t j = i + 1; j < x.rows(); ++j) {
            const double v = std::exp(-gamma * squared_distance(x.row(i), x.row(j), x.cols()));
            k.values(i, j) = v;
            k.values(j, i) = v;
        }
    }
    return k;
}

// Median of the n(n-1)/2 pairwise Euclidean distances between rows.
inline double median_pairwise_distance(const DenseMatrix& x) {
    const std::size_t n = x.rows();
    if (n < 2) {
        throw ParameterError("median_pairwise_distance: need at least 2 rows, got " +
                             std::to_string(n));
    }
    std::vector<double> dist;
    dist.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            dist.push_back(std::sqrt(squared_distance(x.row(i), x.row(j), x.cols())));
        }
    }
    std::sort(dist.begin(), dist.end());
    const std::size_t m = dist.size();
    if (m % 2 == 1) return dist[m / 2];
    return 0.5 * (dist[m / 2 - 1] + dist[m / 2]);
}

// Common sigma rule: a fraction (default 15%) of the median pairwise
// distance.
inline double rbf_sigma_heuristic(const DenseMatrix& x, double fraction = 0.15) {
    if (!(fraction > 0.0)) throw ParameterError("rbf_sigma_heuristic: fraction must be positive");
    return fraction * median_pairwise_distance(x);
}

// Persistence: payload as DKMAT1 at `path`, provenance sidecar at
// `path + ".json"`.
inline void save_kernel(const KernelMatrix& k, const std::string& path) {
    if (k.values.rows() != k.values.cols()) {
        throw DimensionError("save_kernel: kernel matrix must be square, got " +
                             std::to_string(k.values.rows()) + "x" +
                             std::to_string(k.values.cols()));
    }
    save_matrix(k.values, path);
    nlohmann::json meta;
    meta["kind"] = k.kind;
    meta["params"] = k.params;
    meta["rows"] = k.values.rows();
    save_json(meta, path + ".json");
}

inline KernelMatrix load_kernel(const std::string& path) {
    KernelMatrix k;
    k.values = load_matrix(path);
    if (k.values.rows() != k.values.cols()) {
        throw ParseError("load_kernel: " + path + " holds a " + std::to_string(k.values.rows()) +
                         "x" + std::to_string(k.values.cols()) + " matrix, expected square");
    }
    const nlohmann::json meta = load_json(path + ".json");
    k.kind = meta.value("kind", std::string("unknown"));
    if (meta.contains("params")) k.params = meta.at("params");
    if (meta.contains("rows") && meta.at("rows").get<std::size_t>() != k.values.rows()) {
        throw ParseError("load_kernel: sidecar rows " +
                         std::to_string(meta.at("rows").get<std::size_t>()) +
                         " disagree with payload rows " + std::to_string(k.values.rows()));
    }
    return k;
}

} // namespace dkae
