#pragma once

// Experiment pipelines behind the CLI. Each command ingests data, runs its
// pipeline, and writes artifacts plus a manifest into <out_dir>/<command>.
// Reruns with a completed manifest are no-ops unless forced.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dkae/autoencoder.hpp"
#include "dkae/config.hpp"
#include "dkae/dataset.hpp"
#include "dkae/eval.hpp"
#include "dkae/io.hpp"
#include "dkae/kernel.hpp"
#include "dkae/kpca.hpp"
#include "dkae/linalg.hpp"
#include "dkae/pck.hpp"
#include "dkae/rng.hpp"

namespace dkae {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["data"] = {{"source", cfg.source},       {"images", cfg.images},
                 {"labels", cfg.labels},       {"csv", cfg.csv},
                 {"label_col", cfg.label_col}, {"blob_samples", cfg.blob_samples},
                 {"blob_classes", cfg.blob_classes}, {"blob_dim", cfg.blob_dim},
                 {"blob_modes", cfg.blob_modes},     {"blob_spread", cfg.blob_spread},
                 {"train_frac", cfg.train_frac},
                 {"val_frac", cfg.val_frac},   {"test_frac", cfg.test_frac}};
    j["pck"] = {{"q", cfg.pck_q}, {"g", cfg.pck_g}, {"subset", cfg.pck_subset}};
    j["model"] = {{"layers", cfg.layers}};
    j["train"] = {{"prior", cfg.prior},
                  {"lambda", cfg.lambda},
                  {"learning_rate", cfg.learning_rate},
                  {"batch_size", cfg.batch_size},
                  {"pretrain_epochs", cfg.pretrain_epochs},
                  {"finetune_epochs", cfg.finetune_epochs}};
    j["experiment"] = {{"lambda_grid", cfg.lambda_grid},
                       {"code_grid", cfg.code_grid},
                       {"components", cfg.components},
                       {"noise_std", cfg.noise_std},
                       {"denoise_classes", cfg.denoise_classes},
                       {"walk_clusters", cfg.walk_clusters},
                       {"walk_steps", cfg.walk_steps},
                       {"approx_m_max", cfg.approx_m_max}};
    j["output"] = {{"dir", cfg.out_dir}, {"seed", cfg.seed}};
    return j;
}

// Holds the per-command lock directory for the lifetime of a run and writes
// the manifest on completion. The lock guards the shared output directory;
// a crash that skips the destructor leaves a stale lock named in the error.
class ManifestGuard {
  public:
    ManifestGuard(const std::filesystem::path& dir, std::string command)
        : dir_(dir), lock_(dir / ".lock"), command_(std::move(command)),
          start_(std::chrono::steady_clock::now()) {
        std::filesystem::create_directories(dir_);
        std::error_code ec;
        if (!std::filesystem::create_directory(lock_, ec) || ec) {
            throw IoError(command_ + ": output busy, lock held at " + lock_.string() +
                          " (remove it if no other run is active)");
        }
    }

    ManifestGuard(const ManifestGuard&) = delete;
    ManifestGuard& operator=(const ManifestGuard&) = delete;

    ~ManifestGuard() {
        std::error_code ec;
        std::filesystem::remove(lock_, ec);
    }

    const std::filesystem::path& dir() const { return dir_; }

    void add_artifact(const std::string& relative) { artifacts_.push_back(relative); }

    void complete(const ExperimentConfig& cfg) {
        const auto elapsed = std::chrono::steady_clock::now() - start_;
        nlohmann::json manifest;
        manifest["command"] = command_;
        manifest["status"] = "complete";
        manifest["seed"] = cfg.seed;
        manifest["versions"] = {{"dkae", kDkaeVersion}, {"matrix_format", "DKMAT1"}};
        manifest["wall_ms"] = std::chrono::duration<double, std::milli>(elapsed).count();
        manifest["inputs"] = config_to_json(cfg);
        manifest["artifacts"] = artifacts_;
        save_json(manifest, dir_ / "manifest.json");
    }

  private:
    std::filesystem::path dir_;
    std::filesystem::path lock_;
    std::string command_;
    std::chrono::steady_clock::time_point start_;
    std::vector<std::string> artifacts_;
};

inline bool manifest_complete(const std::filesystem::path& dir) {
    const std::filesystem::path path = dir / "manifest.json";
    if (!std::filesystem::exists(path)) return false;
    const nlohmann::json manifest = load_json(path);
    return manifest.value("status", "") == "complete";
}

// Seeded ingestion: source rows, deterministic shuffle, fractional split.
// IDX pixels arrive already scaled by 1/255; blobs are generated inside
// [0,1]; CSV columns are min-max scaled with training-split statistics.
inline DataSplit ingest(const ExperimentConfig& cfg) {
    DenseMatrix features;
    std::vector<int> labels;
    if (cfg.source == "blobs") {
        make_blobs(cfg.blob_samples, cfg.blob_classes, cfg.blob_dim, mix_seed(cfg.seed, "blobs"),
                   features, labels, cfg.blob_spread, cfg.blob_modes);
    } else if (cfg.source == "idx") {
        features = load_idx_images(cfg.images);
        labels = load_idx_labels(cfg.labels);
        if (features.rows() != labels.size()) {
            throw ParseError(cfg.labels + ": " + std::to_string(labels.size()) +
                             " labels for " + std::to_string(features.rows()) + " images");
        }
    } else {
        load_csv(cfg.csv, cfg.label_col, features, labels);
    }
    DataSplit split =
        split_dataset(features, labels, cfg.train_frac, cfg.val_frac, mix_seed(cfg.seed, "split"));
    if (cfg.source == "csv") minmax_scale(split);
    return split;
}

inline TrainConfig make_train_config(const ExperimentConfig& cfg) {
    TrainConfig t;
    t.lambda = cfg.lambda;
    t.batch_size = cfg.batch_size;
    t.pretrain_epochs = cfg.pretrain_epochs;
    t.finetune_epochs = cfg.finetune_epochs;
    t.learning_rate = cfg.learning_rate;
    t.seed = cfg.seed;
    return t;
}

inline std::vector<std::size_t> model_dims(const ExperimentConfig& cfg, std::size_t input_dim) {
    std::vector<std::size_t> dims;
    dims.reserve(cfg.layers.size() + 1);
    dims.push_back(input_dim);
    dims.insert(dims.end(), cfg.layers.begin(), cfg.layers.end());
    return dims;
}

inline PckEnsemble fit_config_pck(const ExperimentConfig& cfg, const DenseMatrix& train_features) {
    const std::size_t subset = std::min(cfg.pck_subset, train_features.rows());
    return fit_pck(train_features, cfg.pck_q, cfg.pck_g, subset, mix_seed(cfg.seed, "pck"));
}

struct TrainedModel {
    AutoencoderParams params;
    AdamState adam;
    std::vector<BatchLossReport> history;
};

inline TrainedModel train_model(const ExperimentConfig& cfg, const DenseMatrix& x,
                                const DenseMatrix& prior) {
    const TrainConfig t = make_train_config(cfg);
    TrainedModel model;
    model.params = pretrain(x, model_dims(cfg, x.cols()), t, prior);
    train(model.params, x, prior, t, model.history, model.adam, 0);
    return model;
}

inline std::string history_csv(const std::vector<BatchLossReport>& history) {
    std::string csv = "epoch,total,reconstruction,alignment\n";
    for (std::size_t e = 0; e < history.size(); ++e) {
        csv += std::to_string(e) + "," + fmt_double(history[e].total) + "," +
               fmt_double(history[e].reconstruction_term) + "," +
               fmt_double(history[e].alignment_term) + "\n";
    }
    return csv;
}

// PGM frames use the native image shape when the dimension is a perfect
// square, otherwise a single pixel row.
inline std::pair<std::size_t, std::size_t> image_shape(std::size_t d) {
    const auto side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(d))));
    if (side * side == d) return {side, side};
    return {d, 1};
}

namespace detail {

// Prior Gram matrix over `rows` per the configured prior family. The PCK
// ensemble is fit lazily on the training features the first time a pck
// prior is requested.
class PriorSource {
  public:
    PriorSource(const ExperimentConfig& cfg, const DenseMatrix& train_features)
        : cfg_(cfg), train_features_(train_features) {}

    DenseMatrix gram(const DenseMatrix& rows, const std::vector<int>& labels) {
        if (cfg_.prior == "ideal") return ideal_kernel(labels).values;
        return pck_kernel(ensemble(), rows, rows);
    }

    const PckEnsemble& ensemble() {
        if (!fitted_) {
            ens_ = fit_config_pck(cfg_, train_features_);
            fitted_ = true;
        }
        return ens_;
    }

  private:
    const ExperimentConfig& cfg_;
    const DenseMatrix& train_features_;
    PckEnsemble ens_;
    bool fitted_ = false;
};

inline LabeledDataset filter_classes(const LabeledDataset& ds, const std::vector<int>& keep) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (int cls : keep) {
            if (ds.labels[i] == cls) {
                idx.push_back(i);
                break;
            }
        }
    }
    if (idx.empty()) {
        throw ParameterError("no samples match the requested classes in split '" + ds.split + "'");
    }
    LabeledDataset out;
    out.features = take_rows(ds.features, idx);
    out.labels.reserve(idx.size());
    for (std::size_t i : idx) out.labels.push_back(ds.labels[i]);
    out.split = ds.split;
    return out;
}

inline double row_mse(const DenseMatrix& a, const DenseMatrix& b, std::size_t i) {
    return squared_distance(a.row(i), b.row(i), a.cols()) / static_cast<double>(a.cols());
}

} // namespace detail

inline void run_fit_pck(const ExperimentConfig& cfg, ManifestGuard& out) {
    const DataSplit split = ingest(cfg);
    const PckEnsemble ens = fit_config_pck(cfg, split.train.features);
    save_pck(ens, (out.dir() / "pck").string());
    out.add_artifact("pck");

    const KernelMatrix prior = pck_kernel_matrix(ens, split.train.features);
    save_kernel(prior, (out.dir() / "prior_train.dkmat").string());
    out.add_artifact("prior_train.dkmat");

    double lo = prior.values(0, 0);
    double hi = lo;
    for (std::size_t i = 0; i < prior.values.size(); ++i) {
        lo = std::min(lo, prior.values.data()[i]);
        hi = std::max(hi, prior.values.data()[i]);
    }
    nlohmann::json stats;
    stats["rows"] = prior.values.rows();
    stats["min_entry"] = lo;
    stats["max_entry"] = hi;
    stats["frobenius_norm"] = frobenius_norm(prior.values);
    stats["fit_subset_size"] = ens.fit_subset_size;
    save_json(stats, out.dir() / "kernel_stats.json");
    out.add_artifact("kernel_stats.json");
}

inline void run_train(const ExperimentConfig& cfg, ManifestGuard& out) {
    const DataSplit split = ingest(cfg);
    detail::PriorSource priors(cfg, split.train.features);
    const DenseMatrix prior = priors.gram(split.train.features, split.train.labels);
    const TrainedModel model = train_model(cfg, split.train.features, prior);

    save_checkpoint((out.dir() / "model").string(), model.params, make_train_config(cfg),
                    model.history.size(), &model.adam);
    out.add_artifact("model");
    save_text(history_csv(model.history), out.dir() / "history.csv");
    out.add_artifact("history.csv");

    const DenseMatrix test_codes = encode(model.params, split.test.features);
    save_matrix(test_codes, out.dir() / "codes_test.dkmat");
    out.add_artifact("codes_test.dkmat");

    const DenseMatrix prior_test = priors.gram(split.test.features, split.test.labels);
    nlohmann::json summary;
    summary["epochs"] = model.history.size();
    if (!model.history.empty()) {
        summary["final_total"] = model.history.back().total;
        summary["final_reconstruction"] = model.history.back().reconstruction_term;
        summary["final_alignment"] = model.history.back().alignment_term;
    }
    summary["test_alignment_distance"] = frob_distance(gram_rows(test_codes), prior_test);
    save_json(summary, out.dir() / "summary.json");
    out.add_artifact("summary.json");
}

inline void run_sweep_lambda(const ExperimentConfig& cfg, ManifestGuard& out) {
    const DataSplit split = ingest(cfg);
    detail::PriorSource priors(cfg, split.train.features);
    const DenseMatrix prior = priors.gram(split.train.features, split.train.labels);

    std::string csv = "lambda,reconstruction,alignment\n";
    for (double lambda : cfg.lambda_grid) {
        ExperimentConfig point = cfg;
        point.lambda = lambda;
        const TrainedModel model = train_model(point, split.train.features, prior);
        const BatchLossReport& last = model.history.back();
        csv += fmt_double(lambda) + "," + fmt_double(last.reconstruction_term) + "," +
               fmt_double(last.alignment_term) + "\n";
    }
    save_text(csv, out.dir() / "curve.csv");
    out.add_artifact("curve.csv");
}

inline void run_sweep_codesize(const ExperimentConfig& cfg, ManifestGuard& out) {
    const DataSplit split = ingest(cfg);
    detail::PriorSource priors(cfg, split.train.features);
    const DenseMatrix prior = priors.gram(split.train.features, split.train.labels);

    std::string csv = "code,reconstruction,alignment\n";
    for (std::size_t code : cfg.code_grid) {
        ExperimentConfig point = cfg;
        point.layers.back() = code;
        const TrainedModel model = train_model(point, split.train.features, prior);
        const BatchLossReport& last = model.history.back();
        csv += std::to_string(code) + "," + fmt_double(last.reconstruction_term) + "," +
               fmt_double(last.alignment_term) + "\n";
    }
    save_text(csv, out.dir() / "curve.csv");
    out.add_artifact("curve.csv");
}

// Distances of the code, prior, and plain-AE kernels to the ideal kernel on
// the test split. The plain AE is the same architecture trained at lambda 0.
inline void run_table1(const ExperimentConfig& cfg, ManifestGuard& out) {
    const DataSplit split = ingest(cfg);
    const PckEnsemble ens = fit_config_pck(cfg, split.train.features);
    const DenseMatrix prior_train = pck_kernel(ens, split.train.features, split.train.features);

    const TrainedModel joint = train_model(cfg, split.train.features, prior_train);
    ExperimentConfig plain_cfg = cfg;
    plain_cfg.lambda = 0.0;
    const TrainedModel plain = train_model(plain_cfg, split.train.features, prior_train);

    KernelMatrix code;
    code.kind = "code";
    code.values = gram_rows(encode(joint.params, split.test.features));
    const KernelMatrix prior_test = pck_kernel_matrix(ens, split.test.features);
    KernelMatrix ae;
    ae.kind = "code";
    ae.values = gram_rows(encode(plain.params, split.test.features));

    const Table1Report report = table1_report(code, prior_test, ae, split.test.labels);
    nlohmann::json j;
    j["names"] = report.names;
    j["distances"] = report.distances;
    j["improvements"] = matrix_to_json(report.improvements);
    save_json(j, out.dir() / "table1.json");
    out.add_artifact("table1.json");

    std::string csv = "kernel,distance_to_ideal,improvement_vs_code,improvement_vs_prior,improvement_vs_ae\n";
    for (std::size_t a = 0; a < report.names.size(); ++a) {
        csv += report.names[a] + "," + fmt_double(report.distances[a]);
        for (std::size_t b = 0; b < report.names.size(); ++b) {
            csv += "," + fmt_double(report.improvements(a, b));
        }
        csv += "\n";
    }
    save_text(csv, out.dir() / "table1.csv");
    out.add_artifact("table1.csv");
}

// Kernel approximation quality against the prior for kPCA with m components
// versus the trained code Gram matrix, on the training and test splits.
inline void run_approx_curve(const ExperimentConfig& cfg, ManifestGuard& out) {
    const DataSplit split = ingest(cfg);
    const PckEnsemble ens = fit_config_pck(cfg, split.train.features);
    const DenseMatrix prior_train = pck_kernel(ens, split.train.features, split.train.features);
    const DenseMatrix prior_test = pck_kernel(ens, split.test.features, split.test.features);

    const TrainedModel model = train_model(cfg, split.train.features, prior_train);
    const double dk_train =
        frob_distance(gram_rows(encode(model.params, split.train.features)), prior_train);
    const double dk_test =
        frob_distance(gram_rows(encode(model.params, split.test.features)), prior_test);

    KernelMatrix prior_kernel;
    prior_kernel.kind = "pck";
    prior_kernel.values = prior_train;
    const KpcaModel kpca = fit_kpca(prior_kernel);
    const DenseMatrix cross = pck_kernel(ens, split.test.features, split.train.features);

    std::string csv = "m,kpca_train,kpca_test,dkae_train,dkae_test\n";
    const std::size_t m_max = std::min(cfg.approx_m_max, kpca.usable_rank);
    for (std::size_t m = 1; m <= m_max; ++m) {
        const double train_dist = kernel_approx_distance(kpca, m, prior_train);
        const DenseMatrix z_test = nystrom_project(kpca, m, cross);
        const double test_dist = frob_distance(gram_rows(z_test), prior_test);
        csv += std::to_string(m) + "," + fmt_double(train_dist) + "," + fmt_double(test_dist) +
               "," + fmt_double(dk_train) + "," + fmt_double(dk_test) + "\n";
    }
    save_text(csv, out.dir() / "curve.csv");
    out.add_artifact("curve.csv");

    nlohmann::json summary;
    summary["dkae_train"] = dk_train;
    summary["dkae_test"] = dk_test;
    summary["usable_rank"] = kpca.usable_rank;
    summary["m_max"] = m_max;
    save_json(summary, out.dir() / "summary.json");
    out.add_artifact("summary.json");
}

// Linear SVM in input space, Nystrom-feature kernel SVM in input space, and
// linear SVM in code space. The kernel SVM is a low-rank approximation, so
// the report flags it as such.
inline void run_classify(const ExperimentConfig& cfg, ManifestGuard& out) {
    const DataSplit split = ingest(cfg);
    detail::PriorSource priors(cfg, split.train.features);
    const DenseMatrix prior = priors.gram(split.train.features, split.train.labels);
    const TrainedModel model = train_model(cfg, split.train.features, prior);

    const auto& grid = default_svm_c_grid();
    const LinearSvmModel input_svm =
        svm_train(split.train, grid, split.val, mix_seed(cfg.seed, "svm-input"));
    const double input_acc = accuracy(svm_predict(input_svm, split.test.features), split.test.labels);

    // Nystrom RBF feature map from landmark rows, then a linear SVM on the
    // mapped features.
    const std::size_t landmarks = std::min(cfg.pck_subset, split.train.size());
    auto landmark_rng = make_rng(mix_seed(cfg.seed, "ksvm-landmarks"));
    const std::vector<std::size_t> picks =
        sample_without_replacement(split.train.size(), landmarks, landmark_rng);
    const DenseMatrix anchor = take_rows(split.train.features, picks);
    const double sigma = median_pairwise_distance(anchor);
    const KpcaModel rbf_map = fit_kpca(rbf_kernel(anchor, sigma));
    const auto mapped = [&](const LabeledDataset& ds) {
        LabeledDataset m;
        m.features = nystrom_project(rbf_map, rbf_map.usable_rank, rbf_cross(ds.features, anchor, sigma));
        m.labels = ds.labels;
        m.split = ds.split;
        return m;
    };
    const LabeledDataset ktrain = mapped(split.train);
    const LabeledDataset kval = mapped(split.val);
    const LabeledDataset ktest = mapped(split.test);
    const LinearSvmModel ksvm = svm_train(ktrain, grid, kval, mix_seed(cfg.seed, "svm-ksvm"));
    const double ksvm_acc = accuracy(svm_predict(ksvm, ktest.features), ktest.labels);

    const auto encoded = [&](const LabeledDataset& ds) {
        LabeledDataset c;
        c.features = encode(model.params, ds.features);
        c.labels = ds.labels;
        c.split = ds.split;
        return c;
    };
    const LabeledDataset ctrain = encoded(split.train);
    const LabeledDataset cval = encoded(split.val);
    const LabeledDataset ctest = encoded(split.test);
    const LinearSvmModel code_svm = svm_train(ctrain, grid, cval, mix_seed(cfg.seed, "svm-code"));
    const double code_acc = accuracy(svm_predict(code_svm, ctest.features), ctest.labels);

    nlohmann::json report;
    report["prior"] = cfg.prior;
    report["input_svm"] = {{"accuracy", input_acc}, {"c", input_svm.c}};
    report["kernel_svm"] = {{"accuracy", ksvm_acc},
                            {"c", ksvm.c},
                            {"approximation", true},
                            {"landmarks", landmarks},
                            {"feature_rank", rbf_map.usable_rank},
                            {"sigma", sigma}};
    report["code_svm"] = {{"accuracy", code_acc}, {"c", code_svm.c}};
    save_json(report, out.dir() / "report.json");
    out.add_artifact("report.json");

    std::string csv = "method,accuracy\n";
    csv += "input_svm," + fmt_double(input_acc) + "\n";
    csv += "kernel_svm," + fmt_double(ksvm_acc) + "\n";
    csv += "code_svm," + fmt_double(code_acc) + "\n";
    save_text(csv, out.dir() / "accuracy.csv");
    out.add_artifact("accuracy.csv");
}

// Codes projected to two dimensions with PCA fit on training codes; the
// scatter carries test labels and the summary the 1-NN generalization score.
inline void run_viz2d(const ExperimentConfig& cfg, ManifestGuard& out) {
    const DataSplit split = ingest(cfg);
    detail::PriorSource priors(cfg, split.train.features);
    const DenseMatrix prior = priors.gram(split.train.features, split.train.labels);
    const TrainedModel model = train_model(cfg, split.train.features, prior);

    const DenseMatrix train_codes = encode(model.params, split.train.features);
    const DenseMatrix test_codes = encode(model.params, split.test.features);
    const PcaModel pca = pca_fit(train_codes, 2);

    LabeledDataset embedded_train;
    embedded_train.features = pca_project(pca, train_codes);
    embedded_train.labels = split.train.labels;
    embedded_train.split = "train";
    LabeledDataset embedded_test;
    embedded_test.features = pca_project(pca, test_codes);
    embedded_test.labels = split.test.labels;
    embedded_test.split = "test";

    std::string csv = "x,y,label\n";
    for (std::size_t i = 0; i < embedded_test.size(); ++i) {
        csv += fmt_double(embedded_test.features(i, 0)) + "," +
               fmt_double(embedded_test.features(i, 1)) + "," +
               std::to_string(embedded_test.labels[i]) + "\n";
    }
    save_text(csv, out.dir() / "scatter_test.csv");
    out.add_artifact("scatter_test.csv");

    const Knn1Report knn = knn1_evaluate(embedded_train, embedded_test);
    nlohmann::json summary;
    summary["knn1_accuracy"] = knn.accuracy;
    summary["explained_variance"] = pca.explained_variance;
    save_json(summary, out.dir() / "summary.json");
    out.add_artifact("summary.json");
}

// Two denoising pipelines on the configured class subset: PCA in code space
// wrapped by the autoencoder, and kPCA with a kernel-ridge pre-image map.
inline void run_denoise(const ExperimentConfig& cfg, ManifestGuard& out) {
    const DataSplit split = ingest(cfg);
    const LabeledDataset train = detail::filter_classes(split.train, cfg.denoise_classes);
    const LabeledDataset test = detail::filter_classes(split.test, cfg.denoise_classes);

    ExperimentConfig local = cfg;
    local.pck_subset = std::min(cfg.pck_subset, train.size());
    detail::PriorSource priors(local, train.features);
    const DenseMatrix prior = priors.gram(train.features, train.labels);
    const TrainedModel model = train_model(local, train.features, prior);

    const DenseMatrix noisy = add_gaussian_noise(test.features, cfg.noise_std,
                                                 mix_seed(cfg.seed, "noise"));

    // Route 1: encode, PCA in code space, reconstruct, decode.
    const DenseMatrix train_codes = encode(model.params, train.features);
    const std::size_t pca_m =
        std::min({cfg.components, train_codes.cols(), train_codes.rows()});
    const PcaModel code_pca = pca_fit(train_codes, pca_m);
    const DenseMatrix noisy_codes = encode(model.params, noisy);
    const DenseMatrix cleaned_codes =
        pca_reconstruct(code_pca, pca_project(code_pca, noisy_codes));
    const DenseMatrix dkae_out = decode(model.params, cleaned_codes);

    // Route 2: RBF kPCA projection and kernel-ridge pre-image.
    const double sigma = median_pairwise_distance(train.features);
    const KpcaModel kpca = fit_kpca(rbf_kernel(train.features, sigma));
    const std::size_t kpca_m = std::min(cfg.components, kpca.usable_rank);
    const DenseMatrix z_train = project_train(kpca, kpca_m);
    const PreimageModel backmap = fit_preimage(z_train, train.features);
    const DenseMatrix z_noisy =
        nystrom_project(kpca, kpca_m, rbf_cross(noisy, train.features, sigma));
    const DenseMatrix kpca_out = preimage(backmap, z_noisy);

    std::string csv = "index,label,dkae_mse,kpca_mse\n";
    double dkae_sum = 0.0;
    double kpca_sum = 0.0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const double dk = detail::row_mse(dkae_out, test.features, i);
        const double kp = detail::row_mse(kpca_out, test.features, i);
        dkae_sum += dk;
        kpca_sum += kp;
        csv += std::to_string(i) + "," + std::to_string(test.labels[i]) + "," + fmt_double(dk) +
               "," + fmt_double(kp) + "\n";
    }
    save_text(csv, out.dir() / "mse.csv");
    out.add_artifact("mse.csv");

    nlohmann::json summary;
    summary["noise_std"] = cfg.noise_std;
    summary["components"] = cfg.components;
    summary["samples"] = test.size();
    summary["dkae_mean_mse"] = dkae_sum / static_cast<double>(test.size());
    summary["kpca_mean_mse"] = kpca_sum / static_cast<double>(test.size());
    summary["sigma"] = sigma;
    save_json(summary, out.dir() / "summary.json");
    out.add_artifact("summary.json");

    const auto [width, height] = image_shape(test.features.cols());
    const std::size_t previews = std::min<std::size_t>(8, test.size());
    for (std::size_t i = 0; i < previews; ++i) {
        char name[40];
        for (const auto& [tag, source] :
             std::initializer_list<std::pair<const char*, const DenseMatrix*>>{
                 {"clean", &test.features}, {"noisy", &noisy},
                 {"dkae", &dkae_out},       {"kpca", &kpca_out}}) {
            std::snprintf(name, sizeof name, "%s_%02zu.pgm", tag, i);
            save_pgm(source->row_vector(i), width, height, out.dir() / name);
            out.add_artifact(name);
        }
    }
}

// Decoded frames along a linear walk between the first two k-means
// centroids of the test codes.
inline void run_walk(const ExperimentConfig& cfg, ManifestGuard& out) {
    const DataSplit split = ingest(cfg);
    detail::PriorSource priors(cfg, split.train.features);
    const DenseMatrix prior = priors.gram(split.train.features, split.train.labels);
    const TrainedModel model = train_model(cfg, split.train.features, prior);

    const DenseMatrix test_codes = encode(model.params, split.test.features);
    const std::size_t k = std::min(cfg.walk_clusters, test_codes.rows());
    const KmeansResult clusters = kmeans(test_codes, k, mix_seed(cfg.seed, "kmeans"));

    const DenseMatrix walk_codes = interpolate_walk(clusters.centroids.row_vector(0),
                                                    clusters.centroids.row_vector(1),
                                                    cfg.walk_steps);
    const DenseMatrix frames = decode(model.params, walk_codes);
    save_matrix(walk_codes, out.dir() / "walk_codes.dkmat");
    out.add_artifact("walk_codes.dkmat");
    save_matrix(frames, out.dir() / "walk_images.dkmat");
    out.add_artifact("walk_images.dkmat");

    const auto [width, height] = image_shape(frames.cols());
    for (std::size_t s = 0; s < frames.rows(); ++s) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%03zu.pgm", s);
        save_pgm(frames.row_vector(s), width, height, out.dir() / name);
        out.add_artifact(name);
    }

    nlohmann::json summary;
    summary["clusters"] = k;
    summary["steps"] = cfg.walk_steps;
    summary["inertia"] = clusters.inertia;
    save_json(summary, out.dir() / "summary.json");
    out.add_artifact("summary.json");
}

inline const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names = {"fit-pck",  "train",   "sweep-lambda",
                                                   "sweep-codesize", "table1", "approx-curve",
                                                   "classify", "viz2d",   "denoise", "walk"};
    return names;
}

// Runs one command against its <out_dir>/<command> directory. Returns false
// when a completed manifest made the run a no-op.
inline bool run_command(const std::string& command, const ExperimentConfig& cfg, bool force) {
    const std::filesystem::path dir = std::filesystem::path(cfg.out_dir) / command;
    if (!force && manifest_complete(dir)) return false;
    if (force) {
        std::error_code ec;
        std::filesystem::remove_all(dir, ec);
    }
    ManifestGuard out(dir, command);
    if (command == "fit-pck") run_fit_pck(cfg, out);
    else if (command == "train") run_train(cfg, out);
    else if (command == "sweep-lambda") run_sweep_lambda(cfg, out);
    else if (command == "sweep-codesize") run_sweep_codesize(cfg, out);
    else if (command == "table1") run_table1(cfg, out);
    else if (command == "approx-curve") run_approx_curve(cfg, out);
    else if (command == "classify") run_classify(cfg, out);
    else if (command == "viz2d") run_viz2d(cfg, out);
    else if (command == "denoise") run_denoise(cfg, out);
    else if (command == "walk") run_walk(cfg, out);
    else throw ParameterError("unknown command '" + command + "'");
    out.complete(cfg);
    return true;
}

} // namespace dkae
