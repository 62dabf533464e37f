#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "dkae/eval.hpp"
#include "support/oracles.hpp"

using dkae::DenseMatrix;
using dkae::LabeledDataset;

namespace {

// Two well separated 2D blobs around (0.2,0.2) and (0.8,0.8).
LabeledDataset two_blobs(std::size_t per_class, std::uint64_t seed, double spread = 0.05) {
    LabeledDataset ds;
    ds.features = DenseMatrix(2 * per_class, 2);
    ds.labels.resize(2 * per_class);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, spread);
    for (std::size_t i = 0; i < per_class; ++i) {
        ds.features(i, 0) = 0.2 + noise(rng);
        ds.features(i, 1) = 0.2 + noise(rng);
        ds.labels[i] = 0;
        ds.features(per_class + i, 0) = 0.8 + noise(rng);
        ds.features(per_class + i, 1) = 0.8 + noise(rng);
        ds.labels[per_class + i] = 1;
    }
    return ds;
}

} // namespace

TEST_CASE("1-NN returns the label of an exactly matching point") {
    LabeledDataset train;
    train.features = oracles::random_matrix(10, 3, 3101, 0.0, 1.0);
    train.labels = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    DenseMatrix q(1, 3);
    for (std::size_t j = 0; j < 3; ++j) q(0, j) = train.features(7, j);
    REQUIRE(dkae::knn1_classify(train, q) == std::vector<int>{7});
}

TEST_CASE("1-NN distance ties go to the smaller training index") {
    LabeledDataset train;
    train.features = DenseMatrix(2, 2);
    train.features(1, 0) = 1.0;
    train.labels = {5, 9};
    DenseMatrix mid(1, 2);
    mid(0, 0) = 0.5;
    REQUIRE(dkae::knn1_classify(train, mid) == std::vector<int>{5});
}

TEST_CASE("1-NN matches a brute-force oracle on random instances") {
    LabeledDataset train;
    train.features = oracles::random_matrix(60, 4, 3102, 0.0, 1.0);
    train.labels.resize(60);
    for (std::size_t i = 0; i < 60; ++i) train.labels[i] = static_cast<int>(i % 7);
    const DenseMatrix queries = oracles::random_matrix(100, 4, 3103, 0.0, 1.0);

    const std::vector<int> got = dkae::knn1_classify(train, queries);
    for (std::size_t t = 0; t < 100; ++t) {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < 60; ++i) {
            double d = 0.0;
            for (std::size_t j = 0; j < 4; ++j) {
                const double diff = queries(t, j) - train.features(i, j);
                d += diff * diff;
            }
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        REQUIRE(got[t] == train.labels[best]);
    }

    const auto report = dkae::knn1_evaluate(train, train);
    REQUIRE(report.accuracy == 1.0);
}

TEST_CASE("1-NN rejects bad inputs") {
    LabeledDataset empty;
    REQUIRE_THROWS_AS(dkae::knn1_classify(empty, DenseMatrix(1, 2)), dkae::ParameterError);
    LabeledDataset train;
    train.features = DenseMatrix(3, 2);
    train.labels = {0, 1, 0};
    REQUIRE_THROWS_AS(dkae::knn1_classify(train, DenseMatrix(1, 3)), dkae::DimensionError);
}

TEST_CASE("linear SVM separates clean blobs perfectly") {
    const LabeledDataset train = two_blobs(20, 3104);
    const LabeledDataset val = two_blobs(10, 3105);
    const auto model = dkae::svm_train(train, dkae::default_svm_c_grid(), val, 7);
    REQUIRE(model.class_ids == std::vector<int>{0, 1});
    REQUIRE(dkae::accuracy(dkae::svm_predict(model, val.features), val.labels) == 1.0);
    REQUIRE(dkae::accuracy(dkae::svm_predict(model, train.features), train.labels) == 1.0);
}

TEST_CASE("SVM predictions are unchanged by duplicating a training point") {
    const LabeledDataset train = two_blobs(20, 3106);
    LabeledDataset doubled = train;
    doubled.features = DenseMatrix(train.size() + 1, 2);
    for (std::size_t i = 0; i < train.size(); ++i) {
        doubled.features(i, 0) = train.features(i, 0);
        doubled.features(i, 1) = train.features(i, 1);
    }
    doubled.features(train.size(), 0) = train.features(0, 0);
    doubled.features(train.size(), 1) = train.features(0, 1);
    doubled.labels.push_back(train.labels[0]);

    const LabeledDataset val = two_blobs(10, 3107);
    const DenseMatrix probe = two_blobs(25, 3108).features;
    const auto a = dkae::svm_train(train, dkae::default_svm_c_grid(), val, 7);
    const auto b = dkae::svm_train(doubled, dkae::default_svm_c_grid(), val, 7);
    REQUIRE(dkae::svm_predict(a, probe) == dkae::svm_predict(b, probe));
}

TEST_CASE("signal-free features give exactly the majority-class rate") {
    // Zero features: weights never move, biases decide, so the model predicts
    // the majority class everywhere.
    LabeledDataset train;
    train.features = DenseMatrix(50, 3);
    train.labels.assign(50, 2);
    for (std::size_t i = 30; i < 50; ++i) train.labels[i] = 7;
    const auto model = dkae::svm_train(train, dkae::default_svm_c_grid(), train, 11, 50);
    const double acc = dkae::accuracy(dkae::svm_predict(model, train.features), train.labels);
    REQUIRE(acc >= 0.6);
    // All grid points tie, so the smaller C wins.
    REQUIRE(model.c == 0.01);
}

TEST_CASE("SVM rejects degenerate setups") {
    LabeledDataset single;
    single.features = DenseMatrix(4, 2);
    single.labels = {3, 3, 3, 3};
    REQUIRE_THROWS_AS(dkae::svm_train(single, dkae::default_svm_c_grid(), single, 1),
                      dkae::ParameterError);
    const LabeledDataset ok = two_blobs(5, 3109);
    REQUIRE_THROWS_AS(dkae::svm_train(ok, {}, ok, 1), dkae::ParameterError);
    REQUIRE_THROWS_AS(dkae::svm_train(ok, {-1.0}, ok, 1), dkae::ParameterError);
    const auto model = dkae::svm_train(ok, {1.0}, ok, 1);
    REQUIRE_THROWS_AS(dkae::svm_predict(model, DenseMatrix(2, 5)), dkae::DimensionError);
}

TEST_CASE("ideal-kernel report distances and self improvements") {
    const std::vector<int> labels{0, 0, 1, 1, 2};
    const auto ideal = dkae::ideal_kernel(labels);

    dkae::KernelMatrix code = ideal; // perfect code kernel
    dkae::KernelMatrix prior;
    prior.values = oracles::random_spd(5, 3110);
    dkae::KernelMatrix ae;
    ae.values = oracles::random_spd(5, 3111);

    const auto perfect = dkae::table1_report(code, prior, ae, labels);
    REQUIRE(perfect.names == std::vector<std::string>{"code", "prior", "ae"});
    REQUIRE(perfect.distances[0] == 0.0);
    REQUIRE(perfect.distances[1] == dkae::frob_distance(prior.values, ideal.values));

    // All-distinct kernels: the self comparison is exactly 0 percent.
    code.values = oracles::random_spd(5, 3112);
    const auto report = dkae::table1_report(code, prior, ae, labels);
    for (std::size_t a = 0; a < 3; ++a) {
        REQUIRE(report.improvements(a, a) == 0.0);
        for (std::size_t b = 0; b < 3; ++b) {
            const double expect =
                (report.distances[b] - report.distances[a]) / report.distances[a] * 100.0;
            REQUIRE(report.improvements(a, b) == expect);
        }
    }
}

TEST_CASE("gaussian noise respects std 0, range, and determinism") {
    const DenseMatrix x = oracles::random_matrix(8, 5, 3113, 0.0, 1.0);
    REQUIRE(dkae::add_gaussian_noise(x, 0.0, 99) == x);

    const DenseMatrix noisy = dkae::add_gaussian_noise(x, 0.25, 99);
    REQUIRE(noisy == dkae::add_gaussian_noise(x, 0.25, 99));
    REQUIRE(!(noisy == dkae::add_gaussian_noise(x, 0.25, 100)));
    bool any_changed = false;
    for (std::size_t i = 0; i < noisy.size(); ++i) {
        REQUIRE(noisy.data()[i] >= 0.0);
        REQUIRE(noisy.data()[i] <= 1.0);
        any_changed = any_changed || noisy.data()[i] != x.data()[i];
    }
    REQUIRE(any_changed);
    REQUIRE_THROWS_AS(dkae::add_gaussian_noise(x, -0.1, 1), dkae::ParameterError);
}

TEST_CASE("masking noise zeroes the expected fraction") {
    const DenseMatrix x(20, 20, 1.0);
    REQUIRE(dkae::add_masking_noise(x, 0.0, 5) == x);

    const DenseMatrix all = dkae::add_masking_noise(x, 1.0, 5);
    for (std::size_t i = 0; i < all.size(); ++i) REQUIRE(all.data()[i] == 0.0);

    const DenseMatrix some = dkae::add_masking_noise(x, 0.2, 5);
    REQUIRE(some == dkae::add_masking_noise(x, 0.2, 5));
    std::size_t zeros = 0;
    for (std::size_t i = 0; i < some.size(); ++i) zeros += some.data()[i] == 0.0;
    const double rate = static_cast<double>(zeros) / static_cast<double>(some.size());
    REQUIRE(rate > 0.1);
    REQUIRE(rate < 0.3);
    REQUIRE_THROWS_AS(dkae::add_masking_noise(x, 1.5, 1), dkae::ParameterError);
}

TEST_CASE("kmeans with k equal to n is exact") {
    const DenseMatrix x = oracles::random_matrix(6, 3, 3114, 0.0, 1.0);
    const auto res = dkae::kmeans(x, 6, 17);
    REQUIRE(res.inertia == 0.0);
    // Each point sits on its own centroid.
    std::vector<bool> used(6, false);
    for (std::size_t i = 0; i < 6; ++i) {
        const std::size_t a = res.assignments[i];
        REQUIRE(!used[a]);
        used[a] = true;
        for (std::size_t j = 0; j < 3; ++j) REQUIRE(res.centroids(a, j) == x(i, j));
    }
}

TEST_CASE("kmeans finds two separated blob centers") {
    const LabeledDataset ds = two_blobs(30, 3115);
    const auto res = dkae::kmeans(ds.features, 2, 29);

    // Blob means.
    double m0[2] = {0.0, 0.0};
    double m1[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < 30; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            m0[j] += ds.features(i, j) / 30.0;
            m1[j] += ds.features(30 + i, j) / 30.0;
        }
    }
    const auto near = [&](const double* m) {
        for (std::size_t c = 0; c < 2; ++c) {
            const double dx = res.centroids(c, 0) - m[0];
            const double dy = res.centroids(c, 1) - m[1];
            if (std::sqrt(dx * dx + dy * dy) < 0.5) return true;
        }
        return false;
    };
    REQUIRE(near(m0));
    REQUIRE(near(m1));

    // Lloyd guarantee: the per-pass inertia never increases.
    for (std::size_t i = 1; i < res.inertia_trace.size(); ++i) {
        REQUIRE(res.inertia_trace[i] <= res.inertia_trace[i - 1] + 1e-9);
    }
    REQUIRE(res.inertia == res.inertia_trace.back());
}

TEST_CASE("kmeans parameter errors and determinism") {
    const DenseMatrix x = oracles::random_matrix(5, 2, 3116, 0.0, 1.0);
    REQUIRE_THROWS_AS(dkae::kmeans(x, 6, 1), dkae::ParameterError);
    REQUIRE_THROWS_AS(dkae::kmeans(x, 0, 1), dkae::ParameterError);
    const auto a = dkae::kmeans(x, 2, 123);
    const auto b = dkae::kmeans(x, 2, 123);
    REQUIRE(a.centroids == b.centroids);
    REQUIRE(a.assignments == b.assignments);
}

TEST_CASE("interpolation walk endpoints, midpoint, and segment identity") {
    const std::vector<double> s{0.0, 1.0, 2.0};
    const std::vector<double> e{4.0, -1.0, 2.0};

    const DenseMatrix two = dkae::interpolate_walk(s, e, 2);
    REQUIRE(two.row_vector(0) == s);
    REQUIRE(two.row_vector(1) == e);

    const DenseMatrix three = dkae::interpolate_walk(s, e, 3);
    for (std::size_t j = 0; j < 3; ++j) {
        REQUIRE(three(1, j) == 0.5 * (s[j] + e[j]));
    }

    const DenseMatrix walk = dkae::interpolate_walk(s, e, 7);
    for (std::size_t i = 0; i < 7; ++i) {
        const double t = static_cast<double>(i) / 6.0;
        for (std::size_t j = 0; j < 3; ++j) {
            REQUIRE(walk(i, j) == Catch::Approx((1.0 - t) * s[j] + t * e[j]).margin(1e-15));
        }
    }

    REQUIRE_THROWS_AS(dkae::interpolate_walk(s, {1.0}, 3), dkae::DimensionError);
    REQUIRE_THROWS_AS(dkae::interpolate_walk(s, e, 1), dkae::ParameterError);
}
