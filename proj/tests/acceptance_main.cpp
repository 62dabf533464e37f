// Acceptance suite. Each criterion prints exactly one PASS/FAIL line with
// the measured value and the tolerance pinned beside the check; the process
// exits nonzero if any criterion fails.
//
// The desk dataset is 2000 MNIST digits when idx files are present under
// DKAE_DATA_DIR, otherwise 2000 synthetic 10-class blobs. Heavy artifacts
// (trained models, the full training-set prior) are shared across criteria.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "dkae/autoencoder.hpp"
#include "dkae/config.hpp"
#include "dkae/dataset.hpp"
#include "dkae/eval.hpp"
#include "dkae/experiments.hpp"
#include "dkae/gmm.hpp"
#include "dkae/kernel.hpp"
#include "dkae/kpca.hpp"
#include "dkae/linalg.hpp"
#include "dkae/matrix.hpp"
#include "dkae/pck.hpp"
#include "dkae/rng.hpp"

#include "support/oracles.hpp"

namespace {

namespace fs = std::filesystem;
using dkae::DenseMatrix;

int g_failures = 0;

class Stopwatch {
  public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

void report(int id, const char* name, bool pass, const std::string& detail, double secs) {
    if (!pass) ++g_failures;
    std::printf("%s %2d %-24s %s [%.1f s]\n", pass ? "PASS" : "FAIL", id, name, detail.c_str(),
                secs);
    std::fflush(stdout);
}

// ---------------------------------------------------------------------------
// criterion 1: frob_distance(A, B) == sqrt(2 - 2 alignment(A, B)) for PSD pairs

void criterion_alignment_identity() {
    constexpr double kTol = 1e-10;
    Stopwatch sw;
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const std::size_t n = 3 + static_cast<std::size_t>(i % 10);
        const DenseMatrix a = oracles::random_spd(n, 9000 + static_cast<std::uint64_t>(i));
        const DenseMatrix b = oracles::random_spd(n, 19000 + static_cast<std::uint64_t>(i));
        const double d = dkae::frob_distance(a, b);
        const double al = dkae::alignment(a, b);
        const double identity = std::sqrt(std::max(0.0, 2.0 - 2.0 * al));
        worst = std::max(worst, std::abs(d - identity));
    }
    const double secs = sw.seconds();
    report(1, "alignment identity", worst < kTol && secs < 10.0,
           "max |d - sqrt(2-2a)| = " + num(worst) + " (limit 1e-10, 1000 pairs)", secs);
}

// ---------------------------------------------------------------------------
// criterion 2: analytic gradients vs central finite differences

double rel_err(double a, double f) {
    return std::abs(a - f) / std::max({std::abs(a), std::abs(f), 1e-6});
}

double worst_rel_err(const dkae::Gradients& a, const dkae::Gradients& f) {
    double worst = 0.0;
    for (std::size_t l = 0; l < a.encoder_weights.size(); ++l) {
        for (std::size_t i = 0; i < a.encoder_weights[l].size(); ++i) {
            worst = std::max(worst,
                             rel_err(a.encoder_weights[l].data()[i], f.encoder_weights[l].data()[i]));
        }
        for (std::size_t i = 0; i < a.encoder_biases[l].size(); ++i) {
            worst = std::max(worst, rel_err(a.encoder_biases[l][i], f.encoder_biases[l][i]));
        }
        for (std::size_t i = 0; i < a.decoder_biases[l].size(); ++i) {
            worst = std::max(worst, rel_err(a.decoder_biases[l][i], f.decoder_biases[l][i]));
        }
    }
    return worst;
}

void criterion_gradient_check() {
    constexpr double kTol = 1e-4;
    Stopwatch sw;
    const std::vector<std::size_t> dims{4, 3, 2};
    const double lambdas[] = {0.0, 0.1, 0.5, 1.0};
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
        const auto p = dkae::init_params(dims, dkae::mix_seed(777, "init", t));
        const DenseMatrix x =
            oracles::random_matrix(6, 4, 500 + static_cast<std::uint64_t>(t), 0.05, 0.95);
        const DenseMatrix prior = oracles::random_spd(6, 600 + static_cast<std::uint64_t>(t));
        for (const double lambda : lambdas) {
            const auto analytic = dkae::gradients(p, x, prior, lambda);
            const auto fd = oracles::fd_gradients(p, x, prior, lambda);
            worst = std::max(worst, worst_rel_err(analytic, fd));
        }
    }
    const double secs = sw.seconds();
    report(2, "gradient check", worst < kTol && secs < 60.0,
           "max rel err = " + num(worst) + " (limit 1e-4, 20 nets x 4 lambdas)", secs);
}

// ---------------------------------------------------------------------------
// criterion 4: EM log-likelihood is non-decreasing

void criterion_em_monotone() {
    constexpr double kSlack = 1e-9;
    Stopwatch sw;
    double worst_drop = 0.0; // largest decrease beyond the scaled slack
    double max_decrease = 0.0;
    for (int f = 0; f < 50; ++f) {
        const std::size_t g = 2 + static_cast<std::size_t>(f % 5);
        const DenseMatrix x =
            oracles::random_matrix(80, 4, 3000 + static_cast<std::uint64_t>(f), 0.0, 1.0);
        dkae::FitTrace trace;
        dkae::fit_gmm(x, g, 4000 + static_cast<std::uint64_t>(f), &trace);
        for (std::size_t t = 1; t < trace.log_likelihoods.size(); ++t) {
            const double prev = trace.log_likelihoods[t - 1];
            const double cur = trace.log_likelihoods[t];
            const double decrease = prev - cur;
            max_decrease = std::max(max_decrease, decrease);
            worst_drop = std::max(worst_drop, decrease - kSlack * std::max(1.0, std::abs(prev)));
        }
    }
    const double secs = sw.seconds();
    report(4, "EM monotonicity", worst_drop <= 0.0,
           "max ll decrease = " + num(max_decrease) + " (slack 1e-9 scaled, 50 fits)", secs);
}

// ---------------------------------------------------------------------------
// desk dataset

dkae::DataSplit load_desk_split(const dkae::ExperimentConfig& desk, std::string& kind_out) {
    const fs::path data_dir = DKAE_DATA_DIR;
    const fs::path images = data_dir / "train-images-idx3-ubyte";
    const fs::path labels = data_dir / "train-labels-idx1-ubyte";
    if (fs::exists(images) && fs::exists(labels)) {
        kind_out = "idx digits";
        const DenseMatrix all = dkae::load_idx_images(images.string());
        const std::vector<int> all_labels = dkae::load_idx_labels(labels.string());
        const std::size_t n = std::min<std::size_t>(2000, all.rows());
        std::vector<std::size_t> head(n);
        std::iota(head.begin(), head.end(), std::size_t{0});
        const DenseMatrix sub = dkae::take_rows(all, head);
        const std::vector<int> sub_labels(all_labels.begin(),
                                          all_labels.begin() + static_cast<std::ptrdiff_t>(n));
        return dkae::split_dataset(sub, sub_labels, desk.train_frac, desk.val_frac,
                                   dkae::mix_seed(desk.seed, "split"));
    }
    kind_out = "synthetic blobs";
    return dkae::ingest(desk);
}

// ---------------------------------------------------------------------------
// criterion 12: CLI reruns reproduce artifacts byte for byte

std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Every regular file under the output root except the per-command run
// manifest (out/<command>/manifest.json), which records wall time.
std::map<std::string, std::string> snapshot_outputs(const fs::path& root) {
    std::map<std::string, std::string> files;
    if (!fs::exists(root)) return files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        const fs::path rel = fs::relative(entry.path(), root);
        std::size_t depth = 0;
        for (auto it = rel.begin(); it != rel.end(); ++it) ++depth;
        if (depth == 2 && rel.filename() == "manifest.json") continue;
        files[rel.generic_string()] = read_bytes(entry.path());
    }
    return files;
}

void criterion_cli_reproducible() {
    Stopwatch sw;
    const fs::path base = fs::temp_directory_path() / "dkae-acceptance-cli";
    fs::remove_all(base);
    fs::create_directories(base);
    const fs::path out_dir = base / "out";
    const fs::path config_path = base / "tiny.ini";
    {
        std::ofstream cfg(config_path);
        cfg << "[data]\n"
               "source = blobs\n"
               "blob_samples = 220\n"
               "blob_classes = 4\n"
               "blob_dim = 16\n"
               "blob_spread = 0.08\n"
               "[pck]\n"
               "q = 2\n"
               "g = 3\n"
               "subset = 60\n"
               "[model]\n"
               "layers = 12, 24, 6\n"
               "[train]\n"
               "prior = pck\n"
               "lambda = 0.1\n"
               "learning_rate = 0.001\n"
               "batch_size = 20\n"
               "pretrain_epochs = 2\n"
               "finetune_epochs = 3\n"
               "[experiment]\n"
               "lambda_grid = 0, 0.5, 1\n"
               "code_grid = 2, 6\n"
               "components = 4\n"
               "noise_std = 0.25\n"
               "denoise_classes = 1, 2\n"
               "walk_clusters = 4\n"
               "walk_steps = 6\n"
               "approx_m_max = 12\n"
               "[output]\n"
               "dir = "
            << out_dir.generic_string()
            << "\n"
               "seed = 11\n";
    }

    const std::string bin = DKAE_CLI_BIN;
    bool all_ok = true;
    auto run_all = [&](const char* extra) {
        for (const std::string& name : dkae::command_names()) {
            const std::string cmd = "\"" + bin + "\" " + name + " --config \"" +
                                    config_path.string() + "\"" + extra + " > /dev/null 2>&1";
            if (std::system(cmd.c_str()) != 0) {
                all_ok = false;
                std::fprintf(stderr, "criterion 12: command failed: %s\n", cmd.c_str());
            }
        }
    };

    run_all("");
    const auto first = snapshot_outputs(out_dir);
    run_all(" --force");
    const auto second = snapshot_outputs(out_dir);

    bool identical = first.size() == second.size() && !first.empty();
    std::size_t mismatches = 0;
    if (identical) {
        for (const auto& [path, bytes] : first) {
            const auto it = second.find(path);
            if (it == second.end() || it->second != bytes) {
                ++mismatches;
                identical = false;
            }
        }
    }
    const double secs = sw.seconds();
    report(12, "CLI reproducibility", all_ok && identical,
           num(static_cast<double>(first.size())) + " artifacts compared across --force rerun, " +
               num(static_cast<double>(mismatches)) + " mismatches",
           secs);
    fs::remove_all(base);
}

} // namespace

int main() {
    Stopwatch total;
    std::printf("acceptance suite (single process, single thread)\n");

    criterion_alignment_identity();
    criterion_gradient_check();

    // Shared desk pipeline: dataset, cluster-kernel prior, trained models.
    // The desk protocol is pinned here, independent of the config defaults:
    // 2000 samples, 10 classes, net d-64-64-256-64, PCK Q=G=10 on 200 rows,
    // batch 100, 10 pretrain + 30 finetune epochs. Blob classes carry two
    // sub-clusters each so the prior holds spectral mass past rank 10, and
    // the learning rate compensates for the shortened epoch budget.
    dkae::ExperimentConfig desk;
    desk.source = "blobs";
    desk.blob_samples = 2000;
    desk.blob_classes = 10;
    desk.blob_dim = 64;
    desk.blob_spread = 0.06;
    desk.blob_modes = 2;
    desk.pck_q = 10;
    desk.pck_g = 10;
    desk.pck_subset = 200;
    desk.layers = {64, 64, 256, 64};
    desk.prior = "pck";
    desk.lambda = 0.1;
    desk.learning_rate = 0.01;
    desk.batch_size = 100;
    desk.pretrain_epochs = 10;
    desk.finetune_epochs = 30;
    desk.noise_std = 0.25;
    desk.denoise_classes = {5, 6};
    desk.components = 32;
    desk.seed = 42;
    std::string data_kind;
    const dkae::DataSplit split = load_desk_split(desk, data_kind);
    const dkae::PckEnsemble ens = dkae::fit_config_pck(desk, split.train.features);
    const dkae::KernelMatrix prior_train_k =
        dkae::pck_kernel_matrix(ens, split.train.features);
    const DenseMatrix& prior_train = prior_train_k.values;
    const DenseMatrix prior_test =
        dkae::pck_kernel(ens, split.test.features, split.test.features);
    std::printf("info: desk data = %s, train %zu / val %zu / test %zu, dim %zu, seed %llu\n",
                data_kind.c_str(), split.train.size(), split.val.size(), split.test.size(),
                split.train.features.cols(),
                static_cast<unsigned long long>(desk.seed));
    std::fflush(stdout);

    // criterion 3: lambda = 0 training equals a plain tied-weight autoencoder.
    dkae::AutoencoderParams model_b; // reused as the plain baseline later
    {
        constexpr double kTol = 1e-12;
        Stopwatch sw;
        dkae::TrainConfig t0 = dkae::make_train_config(desk);
        t0.lambda = 0.0;
        const std::vector<std::size_t> dims =
            dkae::model_dims(desk, split.train.features.cols());
        const dkae::AutoencoderParams start =
            dkae::pretrain(split.train.features, dims, t0, prior_train);

        oracles::PlainAeTrainer plain;
        plain.params = start;
        const std::vector<double> plain_losses = plain.train(split.train.features, t0);

        dkae::AutoencoderParams lib = start;
        std::vector<dkae::BatchLossReport> history;
        dkae::AdamState adam;
        dkae::train(lib, split.train.features, prior_train, t0, history, adam, 0);

        double worst = 0.0;
        const bool sized =
            history.size() == plain_losses.size() && history.size() == t0.finetune_epochs;
        if (sized) {
            for (std::size_t e = 0; e < history.size(); ++e) {
                worst = std::max(worst, std::abs(history[e].total - plain_losses[e]));
            }
        }
        model_b = lib;
        report(3, "plain-AE equivalence", sized && worst <= kTol,
               "max per-epoch |loss diff| = " + num(worst) + " (limit 1e-12, " +
                   num(static_cast<double>(history.size())) + " epochs)",
               sw.seconds());
    }

    criterion_em_monotone();

    // criterion 5: the cluster-kernel prior is a valid kernel matrix.
    {
        Stopwatch sw;
        double asym = 0.0;
        double lo = prior_train(0, 0);
        double hi = prior_train(0, 0);
        for (std::size_t i = 0; i < prior_train.rows(); ++i) {
            for (std::size_t j = 0; j < prior_train.cols(); ++j) {
                const double v = prior_train(i, j);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
                if (j > i) asym = std::max(asym, std::abs(v - prior_train(j, i)));
            }
        }
        const dkae::EigResult eig = dkae::sym_eig(prior_train);
        const double min_eig = eig.eigenvalues.back();
        const double limit = -1e-8 * dkae::frobenius_norm(prior_train);
        const bool pass =
            asym <= 1e-12 && lo >= -1e-12 && hi <= 1.0 + 1e-12 && min_eig >= limit;
        report(5, "prior kernel validity", pass,
               "asym " + num(asym) + ", range [" + num(lo) + ", " + num(hi) + "], min eig " +
                   num(min_eig) + " >= " + num(limit),
               sw.seconds());
    }

    // criterion 6: kernel PCA is exact at full rank, matches the
    // Eckart-Young tail at every m, and Nystrom is exact in-sample.
    {
        Stopwatch sw;
        const DenseMatrix sub = dkae::take_rows(split.train.features, ens.subset_indices);
        const dkae::KernelMatrix p6 = dkae::pck_kernel_matrix(ens, sub);
        const dkae::KpcaModel kp = dkae::fit_kpca(p6);
        const dkae::EigResult raw = dkae::sym_eig(p6.values);

        // "Full rank" is the usable rank: eigenvalues below the model's
        // floor (1e-8 * lambda_max) carry no usable spectral mass and
        // project_train rejects m beyond it.
        const std::size_t rank = kp.usable_rank;
        const double full_rel = dkae::frob_distance(
            dkae::kernel_approximation(kp, rank), p6.values); // scale-free distance
        double worst_tail = 0.0;
        for (std::size_t m = 1; m <= rank; ++m) {
            const DenseMatrix km = dkae::kernel_approximation(kp, m);
            double raw_sq = 0.0;
            for (std::size_t i = 0; i < km.size(); ++i) {
                const double d = km.data()[i] - p6.values.data()[i];
                raw_sq += d * d;
            }
            double tail = 0.0;
            for (std::size_t j = m; j < raw.eigenvalues.size(); ++j) {
                tail += raw.eigenvalues[j] * raw.eigenvalues[j];
            }
            worst_tail =
                std::max(worst_tail, std::abs(raw_sq - tail) / std::max(1.0, tail));
        }
        double worst_nystrom = 0.0;
        const std::size_t m = kp.usable_rank;
        const DenseMatrix direct = dkae::project_train(kp, m);
        const DenseMatrix via_nystrom = dkae::nystrom_project(kp, m, p6.values);
        for (std::size_t i = 0; i < direct.size(); ++i) {
            worst_nystrom =
                std::max(worst_nystrom, std::abs(direct.data()[i] - via_nystrom.data()[i]));
        }
        const bool pass = full_rel < 1e-6 && worst_tail <= 1e-8 && worst_nystrom <= 1e-8;
        report(6, "kernel PCA exactness", pass,
               "full-rank(" + num(static_cast<double>(rank)) + ") " + num(full_rel) +
                   ", tail err " + num(worst_tail) + ", nystrom " + num(worst_nystrom) +
                   " (limits 1e-6/1e-8/1e-8)",
               sw.seconds());
    }

    // criterion 7: the trained code gram tracks the prior on held-out data
    // more closely than a rank-(#classes) kernel PCA approximation.
    dkae::TrainedModel model_a;
    DenseMatrix codes_test_a;
    {
        Stopwatch sw;
        const dkae::KpcaModel kbig = dkae::fit_kpca(prior_train_k);
        const std::size_t m10 = std::min<std::size_t>(10, kbig.usable_rank);
        const DenseMatrix cross =
            dkae::pck_kernel(ens, split.test.features, split.train.features);
        const DenseMatrix z_test = dkae::nystrom_project(kbig, m10, cross);
        const double d_kpca = dkae::frob_distance(dkae::gram_rows(z_test), prior_test);

        model_a = dkae::train_model(desk, split.train.features, prior_train);
        codes_test_a = dkae::encode(model_a.params, split.test.features);
        const double d_code = dkae::frob_distance(dkae::gram_rows(codes_test_a), prior_test);

        const double secs = sw.seconds();
        const bool in_budget = total.seconds() < 1800.0;
        report(7, "prior approximation", d_code < d_kpca && in_budget,
               "code distance " + num(d_code) + " < kPCA(m=" + num(static_cast<double>(m10)) +
                   ") " + num(d_kpca),
               secs);
    }

    // criterion 8: joint training moves the code gram toward the ideal
    // kernel at least as much as reconstruction-only training.
    {
        Stopwatch sw;
        const DenseMatrix ideal = dkae::ideal_kernel(split.test.labels).values;
        const DenseMatrix codes_test_b = dkae::encode(model_b, split.test.features);
        const double joint = dkae::frob_distance(dkae::gram_rows(codes_test_a), ideal);
        const double plain = dkae::frob_distance(dkae::gram_rows(codes_test_b), ideal);
        report(8, "ideal-kernel alignment", joint <= plain,
               "joint " + num(joint) + " <= plain " + num(plain), sw.seconds());
    }

    // criterion 9: linear SVM accuracy, input space vs code space vs codes
    // trained against the ideal (label) prior.
    {
        Stopwatch sw;
        const auto code_dataset = [](const dkae::AutoencoderParams& p,
                                     const dkae::LabeledDataset& ds) {
            dkae::LabeledDataset out;
            out.features = dkae::encode(p, ds.features);
            out.labels = ds.labels;
            out.split = ds.split;
            return out;
        };
        const auto grid = dkae::default_svm_c_grid();

        const auto input_svm =
            dkae::svm_train(split.train, grid, split.val, dkae::mix_seed(desk.seed, "svm-input"));
        const double acc_input =
            dkae::accuracy(dkae::svm_predict(input_svm, split.test.features), split.test.labels);

        const auto tr_a = code_dataset(model_a.params, split.train);
        const auto va_a = code_dataset(model_a.params, split.val);
        const auto te_a = code_dataset(model_a.params, split.test);
        const auto code_svm =
            dkae::svm_train(tr_a, grid, va_a, dkae::mix_seed(desk.seed, "svm-code"));
        const double acc_code =
            dkae::accuracy(dkae::svm_predict(code_svm, te_a.features), te_a.labels);

        const DenseMatrix ideal_prior = dkae::ideal_kernel(split.train.labels).values;
        const dkae::TrainedModel model_c =
            dkae::train_model(desk, split.train.features, ideal_prior);
        const auto tr_c = code_dataset(model_c.params, split.train);
        const auto va_c = code_dataset(model_c.params, split.val);
        const auto te_c = code_dataset(model_c.params, split.test);
        const auto scode_svm =
            dkae::svm_train(tr_c, grid, va_c, dkae::mix_seed(desk.seed, "svm-scode"));
        const double acc_scode =
            dkae::accuracy(dkae::svm_predict(scode_svm, te_c.features), te_c.labels);

        report(9, "classification trend", acc_code >= acc_input && acc_scode >= acc_code,
               "input " + num(acc_input) + " <= code " + num(acc_code) + " <= supervised " +
                   num(acc_scode),
               sw.seconds());
    }

    // criterion 10: 1-NN generalization of the 2d PCA embedding of codes.
    {
        Stopwatch sw;
        const auto embed_acc = [&](const dkae::AutoencoderParams& p) {
            const DenseMatrix train_codes = dkae::encode(p, split.train.features);
            const dkae::PcaModel pca = dkae::pca_fit(train_codes, 2);
            dkae::LabeledDataset tr;
            tr.features = dkae::pca_project(pca, train_codes);
            tr.labels = split.train.labels;
            tr.split = "train";
            dkae::LabeledDataset te;
            te.features = dkae::pca_project(pca, dkae::encode(p, split.test.features));
            te.labels = split.test.labels;
            te.split = "test";
            return dkae::knn1_evaluate(tr, te).accuracy;
        };
        const double acc_joint = embed_acc(model_a.params);
        const double acc_plain = embed_acc(model_b);
        report(10, "2d embedding trend", acc_joint >= acc_plain,
               "joint " + num(acc_joint) + " >= plain " + num(acc_plain), sw.seconds());
    }

    // criterion 11: denoising via code-space PCA beats kPCA + pre-image on
    // the two-class subset. Mirrors the denoise command's math.
    {
        Stopwatch sw;
        const dkae::LabeledDataset dtrain =
            dkae::detail::filter_classes(split.train, desk.denoise_classes);
        const dkae::LabeledDataset dtest =
            dkae::detail::filter_classes(split.test, desk.denoise_classes);
        dkae::ExperimentConfig local = desk;
        local.pck_subset = std::min(desk.pck_subset, dtrain.size());
        const dkae::PckEnsemble dens = dkae::fit_config_pck(local, dtrain.features);
        const DenseMatrix dprior =
            dkae::pck_kernel(dens, dtrain.features, dtrain.features);
        const dkae::TrainedModel model_d =
            dkae::train_model(local, dtrain.features, dprior);

        const DenseMatrix noisy = dkae::add_gaussian_noise(dtest.features, desk.noise_std,
                                                           dkae::mix_seed(desk.seed, "noise"));

        const DenseMatrix train_codes = dkae::encode(model_d.params, dtrain.features);
        const std::size_t pca_m =
            std::min({desk.components, train_codes.cols(), train_codes.rows()});
        const dkae::PcaModel code_pca = dkae::pca_fit(train_codes, pca_m);
        const DenseMatrix cleaned = dkae::pca_reconstruct(
            code_pca, dkae::pca_project(code_pca, dkae::encode(model_d.params, noisy)));
        const DenseMatrix dkae_out = dkae::decode(model_d.params, cleaned);

        const double sigma = dkae::median_pairwise_distance(dtrain.features);
        const dkae::KpcaModel kpca = dkae::fit_kpca(dkae::rbf_kernel(dtrain.features, sigma));
        const std::size_t kpca_m = std::min(desk.components, kpca.usable_rank);
        const DenseMatrix z_train = dkae::project_train(kpca, kpca_m);
        const dkae::PreimageModel backmap = dkae::fit_preimage(z_train, dtrain.features);
        const DenseMatrix z_noisy = dkae::nystrom_project(
            kpca, kpca_m, dkae::rbf_cross(noisy, dtrain.features, sigma));
        const DenseMatrix kpca_out = dkae::preimage(backmap, z_noisy);

        double dk_sum = 0.0;
        double kp_sum = 0.0;
        for (std::size_t i = 0; i < dtest.size(); ++i) {
            dk_sum += dkae::detail::row_mse(dkae_out, dtest.features, i);
            kp_sum += dkae::detail::row_mse(kpca_out, dtest.features, i);
        }
        const double dk_mean = dk_sum / static_cast<double>(dtest.size());
        const double kp_mean = kp_sum / static_cast<double>(dtest.size());
        report(11, "denoising trend", dk_mean < kp_mean,
               "code-PCA mse " + num(dk_mean) + " < kPCA+preimage mse " + num(kp_mean) + " (" +
                   num(static_cast<double>(dtest.size())) + " samples)",
               sw.seconds());
    }

    criterion_cli_reproducible();

    std::printf("%d of 12 criteria passed, total %.1f s\n", 12 - g_failures, total.seconds());
    return g_failures == 0 ? 0 : 1;
}
