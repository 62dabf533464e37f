#pragma once

// Diagonal-covariance Gaussian mixtures fit by EM. Posteriors are the
// membership vectors consumed by the cluster kernel.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dkae/errors.hpp"
#include "dkae/io.hpp"
#include "dkae/matrix.hpp"
#include "dkae/rng.hpp"

namespace dkae {

inline constexpr double kGmmVarianceFloor = 1e-6;

struct GmmModel {
    std::vector<double> weights; // length g, sums to 1
    DenseMatrix means;           // g x d
    DenseMatrix variances;       // g x d, each entry >= kGmmVarianceFloor
    std::uint64_t seed = 0;

    std::size_t components() const { return weights.size(); }
    std::size_t dim() const { return means.cols(); }
};

struct FitTrace {
    std::vector<double> log_likelihoods; // one entry per EM iteration
    bool converged = false;
};

namespace detail {

// log N(x; mu_c, diag(var_c)) for every component; constants precomputed by
// the caller as sum_j log(2 pi var_cj).
inline void component_log_densities(const GmmModel& model, const std::vector<double>& log_norm,
                                    const double* x, double* out) {
    const std::size_t g = model.components();
    const std::size_t d = model.dim();
    for (std::size_t c = 0; c < g; ++c) {
        const double* mu = model.means.row(c);
        const double* var = model.variances.row(c);
        double quad = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double diff = x[j] - mu[j];
            quad += diff * diff / var[j];
        }
        out[c] = -0.5 * (log_norm[c] + quad);
    }
}

inline std::vector<double> gmm_log_normalizers(const GmmModel& model) {
    const std::size_t g = model.components();
    const std::size_t d = model.dim();
    std::vector<double> log_norm(g);
    constexpr double log2pi = 1.8378770664093454836;
    for (std::size_t c = 0; c < g; ++c) {
        const double* var = model.variances.row(c);
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += log2pi + std::log(var[j]);
        log_norm[c] = s;
    }
    return log_norm;
}

inline double log_sum_exp(const double* v, std::size_t n) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, v[i]);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::exp(v[i] - mx);
    return mx + std::log(s);
}

} // namespace detail

// Posterior membership of one point, computed in log space.
inline std::vector<double> posterior(const GmmModel& model, const double* x, std::size_t dim) {
    if (dim != model.dim()) {
        throw DimensionError("posterior: point has dim " + std::to_string(dim) +
                             ", model expects " + std::to_string(model.dim()));
    }
    const std::size_t g = model.components();
    std::vector<double> logp(g);
    const std::vector<double> log_norm = detail::gmm_log_normalizers(model);
    detail::component_log_densities(model, log_norm, x, logp.data());
    for (std::size_t c = 0; c < g; ++c) logp[c] += std::log(model.weights[c]);
    const double lse = detail::log_sum_exp(logp.data(), g);
    std::vector<double> post(g);
    double total = 0.0;
    for (std::size_t c = 0; c < g; ++c) {
        post[c] = std::exp(logp[c] - lse);
        total += post[c];
    }
    for (double& p : post) p /= total;
    return post;
}

inline std::vector<double> posterior(const GmmModel& model, const std::vector<double>& x) {
    return posterior(model, x.data(), x.size());
}

// Posterior rows for every sample in X. Row i is posterior(model, X.row(i)).
inline DenseMatrix posterior_matrix(const GmmModel& model, const DenseMatrix& x) {
    if (x.cols() != model.dim()) {
        throw DimensionError("posterior_matrix: samples have dim " + std::to_string(x.cols()) +
                             ", model expects " + std::to_string(model.dim()));
    }
    const std::size_t g = model.components();
    DenseMatrix post(x.rows(), g);
    const std::vector<double> log_norm = detail::gmm_log_normalizers(model);
    std::vector<double> log_w(g);
    for (std::size_t c = 0; c < g; ++c) log_w[c] = std::log(model.weights[c]);
    std::vector<double> logp(g);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        detail::component_log_densities(model, log_norm, x.row(i), logp.data());
        for (std::size_t c = 0; c < g; ++c) logp[c] += log_w[c];
        const double lse = detail::log_sum_exp(logp.data(), g);
        double* pi = post.row(i);
        double total = 0.0;
        for (std::size_t c = 0; c < g; ++c) {
            pi[c] = std::exp(logp[c] - lse);
            total += pi[c];
        }
        for (std::size_t c = 0; c < g; ++c) pi[c] /= total;
    }
    return post;
}

inline GmmModel fit_gmm(const DenseMatrix& x, std::size_t g, std::uint64_t seed,
                        FitTrace* trace_out = nullptr) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    if (g < 1) throw ParameterError("fit_gmm: need g >= 1");
    if (d < 1) throw ParameterError("fit_gmm: need d >= 1");
    if (n < g) {
        throw ParameterError("fit_gmm: insufficient data, n = " + std::to_string(n) +
                             " < g = " + std::to_string(g));
    }

    // Global per-dimension variance, the fallback spread for init and rescue.
    std::vector<double> global_mean(d, 0.0);
    std::vector<double> global_var(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = x.row(i);
        for (std::size_t j = 0; j < d; ++j) global_mean[j] += xi[j];
    }
    for (std::size_t j = 0; j < d; ++j) global_mean[j] /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = x.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            const double diff = xi[j] - global_mean[j];
            global_var[j] += diff * diff;
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        global_var[j] = std::max(global_var[j] / static_cast<double>(n), kGmmVarianceFloor);
    }

    GmmModel model;
    model.seed = seed;
    model.weights.assign(g, 1.0 / static_cast<double>(g));
    model.means = DenseMatrix(g, d);
    model.variances = DenseMatrix(g, d);
    auto rng = make_rng(seed);
    const std::vector<std::size_t> picks = sample_without_replacement(n, g, rng);
    for (std::size_t c = 0; c < g; ++c) {
        const double* src = x.row(picks[c]);
        for (std::size_t j = 0; j < d; ++j) {
            model.means(c, j) = src[j];
            model.variances(c, j) = global_var[j];
        }
    }

    FitTrace trace;
    DenseMatrix resp(n, g);
    std::vector<double> point_loglik(n);
    std::vector<double> logp(g);
    double prev_ll = -std::numeric_limits<double>::infinity();

    for (int iter = 0; iter < 100; ++iter) {
        const std::vector<double> log_norm = detail::gmm_log_normalizers(model);
        std::vector<double> log_w(g);
        for (std::size_t c = 0; c < g; ++c) log_w[c] = std::log(model.weights[c]);

        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            detail::component_log_densities(model, log_norm, x.row(i), logp.data());
            for (std::size_t c = 0; c < g; ++c) logp[c] += log_w[c];
            const double lse = detail::log_sum_exp(logp.data(), g);
            point_loglik[i] = lse;
            ll += lse;
            double* ri = resp.row(i);
            for (std::size_t c = 0; c < g; ++c) ri[c] = std::exp(logp[c] - lse);
        }
        trace.log_likelihoods.push_back(ll);
        if (iter > 0 && std::abs(ll - prev_ll) <= 1e-6 * std::max(1.0, std::abs(prev_ll))) {
            trace.converged = true;
            break;
        }
        prev_ll = ll;

        // M step. Empty components re-seed at the worst-explained point.
        std::vector<double> mass(g, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double* ri = resp.row(i);
            for (std::size_t c = 0; c < g; ++c) mass[c] += ri[c];
        }
        for (std::size_t c = 0; c < g; ++c) {
            if (mass[c] >= 1e-8 * static_cast<double>(n)) {
                model.weights[c] = mass[c] / static_cast<double>(n);
                continue;
            }
            std::size_t worst = 0;
            for (std::size_t i = 1; i < n; ++i) {
                if (point_loglik[i] < point_loglik[worst]) worst = i;
            }
            const double* src = x.row(worst);
            for (std::size_t j = 0; j < d; ++j) {
                model.means(c, j) = src[j];
                model.variances(c, j) = global_var[j];
            }
            model.weights[c] = 1.0 / static_cast<double>(n);
            mass[c] = -1.0; // flag: skip the regular mean/variance update
        }
        double wsum = 0.0;
        for (double w : model.weights) wsum += w;
        for (double& w : model.weights) w /= wsum;

        for (std::size_t c = 0; c < g; ++c) {
            if (mass[c] < 0.0) continue;
            double* mu = model.means.row(c);
            std::fill(mu, mu + d, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                const double r = resp(i, c);
                if (r == 0.0) continue;
                const double* xi = x.row(i);
                for (std::size_t j = 0; j < d; ++j) mu[j] += r * xi[j];
            }
            for (std::size_t j = 0; j < d; ++j) mu[j] /= mass[c];

            double* var = model.variances.row(c);
            std::fill(var, var + d, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                const double r = resp(i, c);
                if (r == 0.0) continue;
                const double* xi = x.row(i);
                for (std::size_t j = 0; j < d; ++j) {
                    const double diff = xi[j] - mu[j];
                    var[j] += r * diff * diff;
                }
            }
            for (std::size_t j = 0; j < d; ++j) {
                var[j] = std::max(var[j] / mass[c], kGmmVarianceFloor);
            }
        }
    }

    if (trace_out) *trace_out = std::move(trace);
    return model;
}

inline nlohmann::json gmm_to_json(const GmmModel& model) {
    nlohmann::json j;
    j["g"] = model.components();
    j["d"] = model.dim();
    j["seed"] = model.seed;
    j["weights"] = model.weights;
    j["means"] = matrix_to_json(model.means);
    j["variances"] = matrix_to_json(model.variances);
    return j;
}

inline GmmModel gmm_from_json(const nlohmann::json& j) {
    GmmModel model;
    model.seed = j.value("seed", std::uint64_t{0});
    model.weights = j.at("weights").get<std::vector<double>>();
    model.means = matrix_from_json(j.at("means"));
    model.variances = matrix_from_json(j.at("variances"));
    if (model.means.rows() != model.weights.size() || !model.means.same_shape(model.variances)) {
        throw ParseError("gmm_from_json: inconsistent component shapes");
    }
    if (j.contains("g") && j.at("g").get<std::size_t>() != model.components()) {
        throw ParseError("gmm_from_json: g field disagrees with weights length");
    }
    if (j.contains("d") && j.at("d").get<std::size_t>() != model.dim()) {
        throw ParseError("gmm_from_json: d field disagrees with means width");
    }
    return model;
}

} // namespace dkae
