#pragma once

// Evaluation harness: 1-NN, one-vs-rest linear SVMs trained by stochastic
// subgradient descent, ideal-kernel distance reports, noise injection,
// k-means and code-space interpolation walks.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "dkae/errors.hpp"
#include "dkae/kernel.hpp"
#include "dkae/matrix.hpp"
#include "dkae/rng.hpp"

namespace dkae {

struct LabeledDataset {
    DenseMatrix features;
    std::vector<int> labels;
    std::string split; // "train" | "val" | "test"

    std::size_t size() const { return labels.size(); }
};

inline void check_dataset(const LabeledDataset& ds, const char* what) {
    if (ds.features.rows() != ds.labels.size()) {
        throw DimensionError(std::string(what) + ": " + std::to_string(ds.features.rows()) +
                             " feature rows vs " + std::to_string(ds.labels.size()) + " labels");
    }
}

inline double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
    if (predicted.size() != truth.size() || truth.empty()) {
        throw DimensionError("accuracy: prediction/label length mismatch");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

// Euclidean 1-NN; distance ties go to the smallest training index.
inline std::vector<int> knn1_classify(const LabeledDataset& train,
                                      const DenseMatrix& test_features) {
    check_dataset(train, "knn1_classify");
    if (train.size() == 0) throw ParameterError("knn1_classify: empty training set");
    if (test_features.cols() != train.features.cols()) {
        throw DimensionError("knn1_classify: test dim " + std::to_string(test_features.cols()) +
                             " vs train dim " + std::to_string(train.features.cols()));
    }
    const std::size_t d = train.features.cols();
    std::vector<int> out(test_features.rows());
    for (std::size_t t = 0; t < test_features.rows(); ++t) {
        const double* q = test_features.row(t);
        std::size_t best = 0;
        double best_d = squared_distance(q, train.features.row(0), d);
        for (std::size_t i = 1; i < train.size(); ++i) {
            const double di = squared_distance(q, train.features.row(i), d);
            if (di < best_d) {
                best_d = di;
                best = i;
            }
        }
        out[t] = train.labels[best];
    }
    return out;
}

struct Knn1Report {
    std::vector<int> predictions;
    double accuracy = 0.0;
};

inline Knn1Report knn1_evaluate(const LabeledDataset& train, const LabeledDataset& test) {
    check_dataset(test, "knn1_evaluate");
    Knn1Report report;
    report.predictions = knn1_classify(train, test.features);
    report.accuracy = accuracy(report.predictions, test.labels);
    return report;
}

struct LinearSvmModel {
    std::vector<int> class_ids; // ascending
    DenseMatrix weights;        // one row per class
    std::vector<double> biases;
    double c = 1.0;
};

inline std::vector<int> distinct_labels(const std::vector<int>& labels) {
    std::vector<int> ids(labels);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

namespace detail {

// Pegasos primal solver for hinge + L2 on features augmented with a
// constant 1 (the bias is the last weight, regularized like the rest, so
// the convergence guarantees cover it): lambda_reg = 1/(C n),
// eta_t = 1/(lambda_reg t), each step projected onto the 1/sqrt(lambda_reg)
// ball. Returns the average of the second-half iterates, which converges
// where the last iterate still oscillates at large C.
inline void train_binary_svm(const DenseMatrix& x, const std::vector<signed char>& y, double c,
                             std::size_t epochs, rng_engine& rng, double* w, double& bias) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    const double lambda_reg = 1.0 / (c * static_cast<double>(n));
    const double radius = 1.0 / std::sqrt(lambda_reg);
    std::vector<double> wb(d + 1, 0.0);
    std::vector<double> wb_sum(d + 1, 0.0);
    std::uint64_t tail = 0;
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    const std::uint64_t total = static_cast<std::uint64_t>(epochs) * n;
    std::uint64_t t = 0;
    for (std::size_t e = 0; e < epochs; ++e) {
        for (std::size_t s = 0; s < n; ++s) {
            ++t;
            const std::size_t i = pick(rng);
            const double* xi = x.row(i);
            const double yi = y[i];
            const double eta = 1.0 / (lambda_reg * static_cast<double>(t));
            const double margin = yi * (dot(std::span(xi, d), std::span(wb.data(), d)) + wb[d]);
            const double keep = 1.0 - eta * lambda_reg;
            for (std::size_t j = 0; j <= d; ++j) wb[j] *= keep;
            if (margin < 1.0) {
                const double step = eta * yi;
                for (std::size_t j = 0; j < d; ++j) wb[j] += step * xi[j];
                wb[d] += step;
            }
            const double norm =
                std::sqrt(dot(std::span(wb.data(), d + 1), std::span(wb.data(), d + 1)));
            if (norm > radius) {
                const double shrink = radius / norm;
                for (std::size_t j = 0; j <= d; ++j) wb[j] *= shrink;
            }
            if (2 * t > total) {
                ++tail;
                for (std::size_t j = 0; j <= d; ++j) wb_sum[j] += wb[j];
            }
        }
    }
    const double inv = tail > 0 ? 1.0 / static_cast<double>(tail) : 1.0;
    const double* src = tail > 0 ? wb_sum.data() : wb.data();
    for (std::size_t j = 0; j < d; ++j) w[j] = src[j] * inv;
    bias = src[d] * inv;
}

inline LinearSvmModel train_svm_at_c(const LabeledDataset& train, double c, std::size_t epochs,
                                     std::uint64_t seed) {
    const std::vector<int> ids = distinct_labels(train.labels);
    LinearSvmModel model;
    model.class_ids = ids;
    model.c = c;
    model.weights = DenseMatrix(ids.size(), train.features.cols());
    model.biases.assign(ids.size(), 0.0);
    const std::size_t n = train.size();
    std::vector<signed char> y(n);
    for (std::size_t cls = 0; cls < ids.size(); ++cls) {
        for (std::size_t i = 0; i < n; ++i) y[i] = train.labels[i] == ids[cls] ? 1 : -1;
        auto rng = make_rng(mix_seed(seed, "svm-class", cls));
        detail::train_binary_svm(train.features, y, c, epochs, rng, model.weights.row(cls),
                                 model.biases[cls]);
    }
    return model;
}

} // namespace detail

// argmax of class margins; ties go to the smallest class id.
inline std::vector<int> svm_predict(const LinearSvmModel& model, const DenseMatrix& x) {
    if (x.cols() != model.weights.cols()) {
        throw DimensionError("svm_predict: input dim " + std::to_string(x.cols()) +
                             " vs model dim " + std::to_string(model.weights.cols()));
    }
    std::vector<int> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double* xi = x.row(i);
        std::size_t best = 0;
        double best_margin = -std::numeric_limits<double>::infinity();
        for (std::size_t cls = 0; cls < model.class_ids.size(); ++cls) {
            const double margin =
                dot(std::span(xi, x.cols()),
                    std::span(model.weights.row(cls), model.weights.cols())) +
                model.biases[cls];
            if (margin > best_margin) {
                best_margin = margin;
                best = cls;
            }
        }
        out[i] = model.class_ids[best];
    }
    return out;
}

inline const std::vector<double>& default_svm_c_grid() {
    static const std::vector<double> grid{0.01, 0.1, 1.0, 10.0, 100.0};
    return grid;
}

// One-vs-rest SVMs per C, keeping the C with the best validation accuracy
// (ties to the smaller C).
inline LinearSvmModel svm_train(const LabeledDataset& train, const std::vector<double>& c_grid,
                                const LabeledDataset& val, std::uint64_t seed,
                                std::size_t epochs = 30) {
    check_dataset(train, "svm_train");
    check_dataset(val, "svm_train(val)");
    if (c_grid.empty()) throw ParameterError("svm_train: empty C grid");
    if (distinct_labels(train.labels).size() < 2) {
        throw ParameterError("svm_train: degenerate labels, need at least 2 classes");
    }
    if (val.features.cols() != train.features.cols()) {
        throw DimensionError("svm_train: val dim " + std::to_string(val.features.cols()) +
                             " vs train dim " + std::to_string(train.features.cols()));
    }
    LinearSvmModel best;
    double best_acc = -1.0;
    for (std::size_t ci = 0; ci < c_grid.size(); ++ci) {
        if (!(c_grid[ci] > 0.0)) throw ParameterError("svm_train: C must be positive");
        LinearSvmModel model =
            detail::train_svm_at_c(train, c_grid[ci], epochs, mix_seed(seed, "svm-c", ci));
        const double acc = accuracy(svm_predict(model, val.features), val.labels);
        if (acc > best_acc) {
            best_acc = acc;
            best = std::move(model);
        }
    }
    return best;
}

// Distances of candidate kernels to the ideal kernel of `labels`, plus
// pairwise relative differences in percent:
// improvement[a][b] = (d_b - d_a) / d_a * 100.
struct Table1Report {
    std::vector<std::string> names;
    std::vector<double> distances;
    DenseMatrix improvements;
};

inline Table1Report table1_report(const KernelMatrix& code, const KernelMatrix& prior,
                                  const KernelMatrix& ae, const std::vector<int>& labels) {
    const KernelMatrix ideal = ideal_kernel(labels);
    Table1Report report;
    report.names = {"code", "prior", "ae"};
    report.distances = {frob_distance(code.values, ideal.values),
                        frob_distance(prior.values, ideal.values),
                        frob_distance(ae.values, ideal.values)};
    report.improvements = DenseMatrix(3, 3);
    for (std::size_t a = 0; a < 3; ++a) {
        for (std::size_t b = 0; b < 3; ++b) {
            report.improvements(a, b) =
                (report.distances[b] - report.distances[a]) / report.distances[a] * 100.0;
        }
    }
    return report;
}

// Additive N(0, std^2) per entry, clipped back to [0,1].
inline DenseMatrix add_gaussian_noise(const DenseMatrix& x, double stddev, std::uint64_t seed) {
    if (stddev < 0.0) throw ParameterError("add_gaussian_noise: negative std");
    DenseMatrix out = x;
    if (stddev == 0.0) return out;
    auto rng = make_rng(seed);
    std::normal_distribution<double> noise(0.0, stddev);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.data()[i] = std::clamp(out.data()[i] + noise(rng), 0.0, 1.0);
    }
    return out;
}

// Zeroes each entry independently with probability `rate`.
inline DenseMatrix add_masking_noise(const DenseMatrix& x, double rate, std::uint64_t seed) {
    if (!(rate >= 0.0 && rate <= 1.0)) {
        throw ParameterError("add_masking_noise: rate must lie in [0,1], got " +
                             std::to_string(rate));
    }
    DenseMatrix out = x;
    if (rate == 0.0) return out;
    auto rng = make_rng(seed);
    std::bernoulli_distribution drop(rate);
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (drop(rng)) out.data()[i] = 0.0;
    }
    return out;
}

struct KmeansResult {
    DenseMatrix centroids;
    std::vector<std::size_t> assignments;
    double inertia = 0.0;
    std::size_t iterations = 0;
    std::vector<double> inertia_trace; // one value per assignment pass
};

namespace detail {

inline std::size_t nearest_centroid(const double* x, const DenseMatrix& centroids, std::size_t d,
                                    double* dist_out = nullptr) {
    std::size_t best = 0;
    double best_d = squared_distance(x, centroids.row(0), d);
    for (std::size_t c = 1; c < centroids.rows(); ++c) {
        const double dc = squared_distance(x, centroids.row(c), d);
        if (dc < best_d) {
            best_d = dc;
            best = c;
        }
    }
    if (dist_out) *dist_out = best_d;
    return best;
}

} // namespace detail

// k-means++ seeding then Lloyd iterations to an assignment fixpoint (cap
// 300). An emptied cluster re-seeds at the point farthest from its centroid.
inline KmeansResult kmeans(const DenseMatrix& x, std::size_t k, std::uint64_t seed) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    if (k < 1 || k > n) {
        throw ParameterError("kmeans: k = " + std::to_string(k) + " outside [1, n=" +
                             std::to_string(n) + "]");
    }
    auto rng = make_rng(seed);
    KmeansResult res;
    res.centroids = DenseMatrix(k, d);

    // k-means++: next centroid drawn with probability proportional to the
    // squared distance to the nearest chosen one.
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    std::vector<std::size_t> chosen{first(rng)};
    std::copy(x.row(chosen[0]), x.row(chosen[0]) + d, res.centroids.row(0));
    std::vector<double> dist2(n);
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < c; ++j) {
                best = std::min(best, squared_distance(x.row(i), res.centroids.row(j), d));
            }
            dist2[i] = best;
            total += best;
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double target = u(rng);
            for (std::size_t i = 0; i < n; ++i) {
                target -= dist2[i];
                if (target <= 0.0) {
                    pick = i;
                    break;
                }
                pick = i;
            }
        } else {
            // All mass covered (duplicate points): take the first unchosen index.
            std::vector<bool> used(n, false);
            for (std::size_t j : chosen) used[j] = true;
            while (pick < n && used[pick]) ++pick;
            if (pick == n) pick = 0;
        }
        chosen.push_back(pick);
        std::copy(x.row(pick), x.row(pick) + d, res.centroids.row(c));
    }

    res.assignments.assign(n, 0);
    std::vector<std::size_t> counts(k);
    for (std::size_t iter = 0; iter < 300; ++iter) {
        res.iterations = iter + 1;
        bool changed = false;
        double pass_inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double di = 0.0;
            const std::size_t a = detail::nearest_centroid(x.row(i), res.centroids, d, &di);
            pass_inertia += di;
            if (a != res.assignments[i]) {
                res.assignments[i] = a;
                changed = true;
            }
        }
        res.inertia_trace.push_back(pass_inertia);
        if (!changed && iter > 0) break;

        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < res.centroids.size(); ++i) res.centroids.data()[i] = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t a = res.assignments[i];
            counts[a] += 1;
            const double* xi = x.row(i);
            double* c = res.centroids.row(a);
            for (std::size_t j = 0; j < d; ++j) c[j] += xi[j];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            double* cc = res.centroids.row(c);
            const double inv = 1.0 / static_cast<double>(counts[c]);
            for (std::size_t j = 0; j < d; ++j) cc[j] *= inv;
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] > 0) continue;
            // Re-seed an emptied cluster at the globally farthest point.
            std::size_t far = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double di =
                    squared_distance(x.row(i), res.centroids.row(res.assignments[i]), d);
                if (di > far_d) {
                    far_d = di;
                    far = i;
                }
            }
            std::copy(x.row(far), x.row(far) + d, res.centroids.row(c));
        }
    }

    res.inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        res.inertia += squared_distance(x.row(i), res.centroids.row(res.assignments[i]), d);
    }
    return res;
}

// Evenly spaced convex combinations from start to end, endpoints included.
inline DenseMatrix interpolate_walk(const std::vector<double>& start,
                                    const std::vector<double>& end, std::size_t steps) {
    if (start.size() != end.size()) {
        throw DimensionError("interpolate_walk: endpoint dims " + std::to_string(start.size()) +
                             " vs " + std::to_string(end.size()));
    }
    if (steps < 2) throw ParameterError("interpolate_walk: need steps >= 2");
    const std::size_t d = start.size();
    DenseMatrix walk(steps, d);
    for (std::size_t s = 0; s < steps; ++s) {
        const double t = static_cast<double>(s) / static_cast<double>(steps - 1);
        double* row = walk.row(s);
        for (std::size_t j = 0; j < d; ++j) row[j] = (1.0 - t) * start[j] + t * end[j];
    }
    return walk;
}

} // namespace dkae
