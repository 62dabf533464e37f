#pragma once

// Tied-weight stacked autoencoder trained on a joint objective: mean squared
// reconstruction plus alignment of the code Gram matrix to a prior kernel,
//   L = (1-lambda)/(k d) * sum_i ||x_i - xt_i||^2
//     + lambda * || C_k/||C_k||_F - P_k/||P_k||_F ||_F,   C_k = H H^T.
// Decoder weights are the encoder transposes by construction; only encoder
// weights and the two bias sets exist.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dkae/errors.hpp"
#include "dkae/io.hpp"
#include "dkae/kernel.hpp"
#include "dkae/matrix.hpp"
#include "dkae/rng.hpp"

namespace dkae {

struct AutoencoderParams {
    std::vector<std::size_t> layer_dims;       // (d, h1, ..., code)
    std::vector<DenseMatrix> encoder_weights;  // layer l: dims[l] x dims[l+1]
    std::vector<std::vector<double>> encoder_biases; // layer l: dims[l+1]
    std::vector<std::vector<double>> decoder_biases; // layer l: dims[l]

    std::size_t layers() const { return encoder_weights.size(); }
    std::size_t input_dim() const { return layer_dims.front(); }
    std::size_t code_dim() const { return layer_dims.back(); }
};

struct TrainConfig {
    double lambda = 0.1;
    std::size_t batch_size = 200;
    std::size_t pretrain_epochs = 30;
    std::size_t finetune_epochs = 100;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;
};

struct BatchLossReport {
    double total = 0.0;
    double reconstruction_term = 0.0; // (1/(k d)) sum ||x - xt||^2, unweighted
    double alignment_term = 0.0;      // frob_distance(C_k, P_k), unweighted
};

struct ForwardPass {
    std::vector<DenseMatrix> encoder; // encoder[l] = activation after layer l
    std::vector<DenseMatrix> decoder; // in application order; back() = reconstruction

    const DenseMatrix& codes() const { return encoder.back(); }
    const DenseMatrix& reconstruction() const { return decoder.back(); }
};

struct Gradients {
    std::vector<DenseMatrix> encoder_weights;
    std::vector<std::vector<double>> encoder_biases;
    std::vector<std::vector<double>> decoder_biases;
};

struct AdamState {
    std::uint64_t step = 0;
    Gradients m;
    Gradients v;
};

namespace detail {

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// A = sigmoid(X W + 1 b^T)
inline DenseMatrix affine_sigmoid(const DenseMatrix& x, const DenseMatrix& w,
                                  const std::vector<double>& b) {
    DenseMatrix a = multiply(x, w);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* ai = a.row(i);
        for (std::size_t j = 0; j < a.cols(); ++j) ai[j] = sigmoid(ai[j] + b[j]);
    }
    return a;
}

// A = sigmoid(X W^T + 1 b^T), the tied decoder map.
inline DenseMatrix affine_sigmoid_t(const DenseMatrix& x, const DenseMatrix& w,
                                    const std::vector<double>& b) {
    DenseMatrix a = multiply_abt(x, w);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* ai = a.row(i);
        for (std::size_t j = 0; j < a.cols(); ++j) ai[j] = sigmoid(ai[j] + b[j]);
    }
    return a;
}

// delta = upstream .* a .* (1 - a), in place on upstream.
inline void apply_sigmoid_backward(DenseMatrix& upstream, const DenseMatrix& a) {
    double* u = upstream.data();
    const double* p = a.data();
    for (std::size_t i = 0; i < upstream.size(); ++i) u[i] *= p[i] * (1.0 - p[i]);
}

inline std::vector<double> column_sums(const DenseMatrix& m) {
    std::vector<double> s(m.cols(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* mi = m.row(i);
        for (std::size_t j = 0; j < m.cols(); ++j) s[j] += mi[j];
    }
    return s;
}

inline Gradients zero_like(const AutoencoderParams& params) {
    Gradients g;
    g.encoder_weights.reserve(params.layers());
    for (const DenseMatrix& w : params.encoder_weights) {
        g.encoder_weights.emplace_back(w.rows(), w.cols());
    }
    for (const auto& b : params.encoder_biases) g.encoder_biases.emplace_back(b.size(), 0.0);
    for (const auto& b : params.decoder_biases) g.decoder_biases.emplace_back(b.size(), 0.0);
    return g;
}

} // namespace detail

inline void validate_train_config(const TrainConfig& cfg, std::size_t n) {
    if (!(cfg.lambda >= 0.0 && cfg.lambda <= 1.0)) {
        throw ParameterError("train config: lambda must lie in [0,1], got " +
                             std::to_string(cfg.lambda));
    }
    if (cfg.batch_size < 1 || cfg.batch_size > n) {
        throw ParameterError("train config: batch_size " + std::to_string(cfg.batch_size) +
                             " outside [1, n=" + std::to_string(n) + "]");
    }
    if (!(cfg.learning_rate > 0.0) || !(cfg.beta1 > 0.0 && cfg.beta1 < 1.0) ||
        !(cfg.beta2 > 0.0 && cfg.beta2 < 1.0) || !(cfg.epsilon > 0.0)) {
        throw ParameterError("train config: optimizer constants must be positive (betas in (0,1))");
    }
}

// An epoch processes (n/k)^2 batches, each drawn with replacement.
inline std::size_t epoch_batch_count(std::size_t n, std::size_t k) {
    const std::size_t ratio = std::max<std::size_t>(1, n / k);
    return ratio * ratio;
}

inline AutoencoderParams init_params(const std::vector<std::size_t>& layer_dims,
                                     std::uint64_t seed) {
    if (layer_dims.size() < 2) {
        throw ParameterError("init_params: need at least 2 layer dims, got " +
                             std::to_string(layer_dims.size()));
    }
    for (std::size_t d : layer_dims) {
        if (d == 0) throw ParameterError("init_params: zero-width layer");
    }
    AutoencoderParams params;
    params.layer_dims = layer_dims;
    auto rng = make_rng(seed);
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        const std::size_t fan_in = layer_dims[l];
        const std::size_t fan_out = layer_dims[l + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-bound, bound);
        DenseMatrix w(fan_in, fan_out);
        for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
        params.encoder_weights.push_back(std::move(w));
        params.encoder_biases.emplace_back(fan_out, 0.0);
        params.decoder_biases.emplace_back(fan_in, 0.0);
    }
    return params;
}

inline ForwardPass forward(const AutoencoderParams& params, const DenseMatrix& x) {
    if (x.cols() != params.input_dim()) {
        throw DimensionError("forward: input has " + std::to_string(x.cols()) +
                             " columns, network expects " + std::to_string(params.input_dim()));
    }
    ForwardPass fwd;
    const std::size_t layers = params.layers();
    fwd.encoder.reserve(layers);
    fwd.decoder.reserve(layers);
    const DenseMatrix* cur = &x;
    for (std::size_t l = 0; l < layers; ++l) {
        fwd.encoder.push_back(detail::affine_sigmoid(*cur, params.encoder_weights[l],
                                                     params.encoder_biases[l]));
        cur = &fwd.encoder.back();
    }
    for (std::size_t l = layers; l-- > 0;) {
        fwd.decoder.push_back(detail::affine_sigmoid_t(*cur, params.encoder_weights[l],
                                                       params.decoder_biases[l]));
        cur = &fwd.decoder.back();
    }
    return fwd;
}

inline DenseMatrix encode(const AutoencoderParams& params, const DenseMatrix& x) {
    if (x.cols() != params.input_dim()) {
        throw DimensionError("encode: input has " + std::to_string(x.cols()) +
                             " columns, network expects " + std::to_string(params.input_dim()));
    }
    DenseMatrix cur = x;
    for (std::size_t l = 0; l < params.layers(); ++l) {
        cur = detail::affine_sigmoid(cur, params.encoder_weights[l], params.encoder_biases[l]);
    }
    return cur;
}

// Accepts arbitrary code-space rows, not only encoder outputs.
inline DenseMatrix decode(const AutoencoderParams& params, const DenseMatrix& h) {
    if (h.cols() != params.code_dim()) {
        throw DimensionError("decode: input has " + std::to_string(h.cols()) +
                             " columns, code space is " + std::to_string(params.code_dim()));
    }
    DenseMatrix cur = h;
    for (std::size_t l = params.layers(); l-- > 0;) {
        cur = detail::affine_sigmoid_t(cur, params.encoder_weights[l], params.decoder_biases[l]);
    }
    return cur;
}

namespace detail {

inline void check_batch_prior(const DenseMatrix& x, const DenseMatrix& pk) {
    if (pk.rows() != x.rows() || pk.cols() != x.rows()) {
        throw DimensionError("batch prior must be " + std::to_string(x.rows()) + "x" +
                             std::to_string(x.rows()) + ", got " + std::to_string(pk.rows()) +
                             "x" + std::to_string(pk.cols()));
    }
}

inline BatchLossReport loss_from_forward(const ForwardPass& fwd, const DenseMatrix& x,
                                         const DenseMatrix& pk, double lambda,
                                         DenseMatrix* code_gram_out = nullptr) {
    const std::size_t k = x.rows();
    const std::size_t d = x.cols();
    const DenseMatrix& recon = fwd.reconstruction();

    double recon_sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        recon_sum += squared_distance(x.row(i), recon.row(i), d);
    }

    DenseMatrix code_gram = gram_rows(fwd.codes());
    if (frobenius_norm(code_gram) < 1e-12) {
        throw NumericError("degenerate codes: ||C_k||_F < 1e-12, training aborted");
    }
    BatchLossReport report;
    report.reconstruction_term = recon_sum / static_cast<double>(k * d);
    report.alignment_term = frob_distance(code_gram, pk);
    report.total = (1.0 - lambda) * report.reconstruction_term + lambda * report.alignment_term;
    if (code_gram_out) *code_gram_out = std::move(code_gram);
    return report;
}

} // namespace detail

inline BatchLossReport batch_loss(const AutoencoderParams& params, const DenseMatrix& x,
                                  const DenseMatrix& pk, double lambda) {
    detail::check_batch_prior(x, pk);
    const ForwardPass fwd = forward(params, x);
    return detail::loss_from_forward(fwd, x, pk, lambda);
}

inline BatchLossReport batch_loss(const AutoencoderParams& params, const DenseMatrix& x,
                                  const KernelMatrix& pk, double lambda) {
    return batch_loss(params, x, pk.values, lambda);
}

// Backpropagation through the joint loss. The alignment term couples the
// whole batch through C_k = H H^T; its symmetric matrix gradient G_C yields
// dL/dH = 2 lambda G_C H. Tied weights accumulate an encoder-side and a
// decoder-side contribution.
inline Gradients gradients(const AutoencoderParams& params, const DenseMatrix& x,
                           const DenseMatrix& pk, double lambda,
                           BatchLossReport* report_out = nullptr) {
    detail::check_batch_prior(x, pk);
    const std::size_t layers = params.layers();
    const std::size_t k = x.rows();
    const std::size_t d = x.cols();

    const ForwardPass fwd = forward(params, x);
    DenseMatrix code_gram;
    const BatchLossReport report = detail::loss_from_forward(fwd, x, pk, lambda, &code_gram);
    if (report_out) *report_out = report;

    Gradients grads = detail::zero_like(params);

    // Reconstruction path: dL/d xt = 2 (1-lambda)/(k d) (xt - x).
    const DenseMatrix& recon = fwd.reconstruction();
    DenseMatrix upstream(k, d);
    const double recon_scale = 2.0 * (1.0 - lambda) / static_cast<double>(k * d);
    for (std::size_t i = 0; i < upstream.size(); ++i) {
        upstream.data()[i] = recon_scale * (recon.data()[i] - x.data()[i]);
    }

    // Decoder sweep, from reconstruction back to the code. decoder[idx] was
    // produced by tied layer l = idx reversed.
    for (std::size_t idx = layers; idx-- > 0;) {
        const std::size_t l = layers - 1 - idx;
        DenseMatrix& delta = upstream; // alias: becomes delta in place
        detail::apply_sigmoid_backward(delta, fwd.decoder[idx]);
        const DenseMatrix& src = idx == 0 ? fwd.codes() : fwd.decoder[idx - 1];
        // Z^d = src W_l^T + b: dW_l += delta^T src, db_l += colsum, up = delta W_l.
        const DenseMatrix wgrad = multiply_atb(delta, src);
        double* gw = grads.encoder_weights[l].data();
        for (std::size_t i = 0; i < wgrad.size(); ++i) gw[i] += wgrad.data()[i];
        const std::vector<double> bsum = detail::column_sums(delta);
        for (std::size_t j = 0; j < bsum.size(); ++j) grads.decoder_biases[l][j] += bsum[j];
        upstream = multiply(delta, params.encoder_weights[l]);
    }

    // Alignment path enters at the code.
    if (lambda != 0.0) {
        const double norm_c = frobenius_norm(code_gram);
        const double norm_p = frobenius_norm(pk);
        if (norm_p == 0.0) throw NumericError("gradients: prior submatrix has zero norm");
        const double dist = report.alignment_term;
        if (dist > 0.0) {
            DenseMatrix diff(k, k);
            for (std::size_t i = 0; i < diff.size(); ++i) {
                diff.data()[i] = code_gram.data()[i] / norm_c - pk.data()[i] / norm_p;
            }
            const double dc = frobenius_inner(diff, code_gram);
            DenseMatrix gc(k, k);
            const double a = 1.0 / (dist * norm_c);
            const double b = dc / (dist * norm_c * norm_c * norm_c);
            for (std::size_t i = 0; i < gc.size(); ++i) {
                gc.data()[i] = a * diff.data()[i] - b * code_gram.data()[i];
            }
            const DenseMatrix align_grad = multiply(gc, fwd.codes());
            const double scale = 2.0 * lambda;
            for (std::size_t i = 0; i < upstream.size(); ++i) {
                upstream.data()[i] += scale * align_grad.data()[i];
            }
        }
    }

    // Encoder sweep.
    for (std::size_t l = layers; l-- > 0;) {
        DenseMatrix& delta = upstream;
        detail::apply_sigmoid_backward(delta, fwd.encoder[l]);
        const DenseMatrix& src = l == 0 ? x : fwd.encoder[l - 1];
        const DenseMatrix wgrad = multiply_atb(src, delta);
        double* gw = grads.encoder_weights[l].data();
        for (std::size_t i = 0; i < wgrad.size(); ++i) gw[i] += wgrad.data()[i];
        const std::vector<double> bsum = detail::column_sums(delta);
        for (std::size_t j = 0; j < bsum.size(); ++j) grads.encoder_biases[l][j] += bsum[j];
        if (l > 0) upstream = multiply_abt(delta, params.encoder_weights[l]);
    }
    return grads;
}

inline Gradients gradients(const AutoencoderParams& params, const DenseMatrix& x,
                           const KernelMatrix& pk, double lambda,
                           BatchLossReport* report_out = nullptr) {
    return gradients(params, x, pk.values, lambda, report_out);
}

namespace detail {

inline void adam_update_array(double* theta, const double* g, double* m, double* v, std::size_t n,
                              const TrainConfig& cfg, double bias1, double bias2) {
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
        const double mhat = m[i] / bias1;
        const double vhat = v[i] / bias2;
        theta[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
    }
}

} // namespace detail

inline void adam_step(AutoencoderParams& params, const Gradients& grads, AdamState& state,
                      const TrainConfig& cfg) {
    if (state.step == 0) {
        state.m = detail::zero_like(params);
        state.v = detail::zero_like(params);
    }
    state.step += 1;
    const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t l = 0; l < params.layers(); ++l) {
        detail::adam_update_array(params.encoder_weights[l].data(),
                                  grads.encoder_weights[l].data(),
                                  state.m.encoder_weights[l].data(),
                                  state.v.encoder_weights[l].data(),
                                  params.encoder_weights[l].size(), cfg, bias1, bias2);
        detail::adam_update_array(params.encoder_biases[l].data(), grads.encoder_biases[l].data(),
                                  state.m.encoder_biases[l].data(),
                                  state.v.encoder_biases[l].data(), params.encoder_biases[l].size(),
                                  cfg, bias1, bias2);
        detail::adam_update_array(params.decoder_biases[l].data(), grads.decoder_biases[l].data(),
                                  state.m.decoder_biases[l].data(),
                                  state.v.decoder_biases[l].data(), params.decoder_biases[l].size(),
                                  cfg, bias1, bias2);
    }
}

// Draws batch row indices uniformly with replacement.
inline std::vector<std::size_t> sample_batch(std::size_t n, std::size_t k, rng_engine& rng) {
    std::uniform_int_distribution<std::size_t> dist(0, n - 1);
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = dist(rng);
    return idx;
}

namespace detail {

// One epoch of joint-loss Adam over (n/k)^2 random batches; returns the
// averaged report.
inline BatchLossReport train_epoch(AutoencoderParams& params, const DenseMatrix& x,
                                   const DenseMatrix& prior, double lambda,
                                   const TrainConfig& cfg, AdamState& state, rng_engine& rng) {
    const std::size_t n = x.rows();
    const std::size_t k = cfg.batch_size;
    const std::size_t batches = epoch_batch_count(n, k);
    BatchLossReport avg;
    for (std::size_t b = 0; b < batches; ++b) {
        const std::vector<std::size_t> idx = sample_batch(n, k, rng);
        const DenseMatrix xb = take_rows(x, idx);
        const DenseMatrix pb = take_submatrix(prior, idx);
        BatchLossReport report;
        const Gradients grads = gradients(params, xb, pb, lambda, &report);
        adam_step(params, grads, state, cfg);
        avg.total += report.total;
        avg.reconstruction_term += report.reconstruction_term;
        avg.alignment_term += report.alignment_term;
    }
    const double inv = 1.0 / static_cast<double>(batches);
    avg.total *= inv;
    avg.reconstruction_term *= inv;
    avg.alignment_term *= inv;
    return avg;
}

} // namespace detail

// Greedy layer-wise pretraining. Outer layers train single-layer AEs on the
// previous representation with plain reconstruction (lambda 0); the innermost
// layer trains with the joint loss against the prior. Earlier layers freeze
// while later ones train.
inline AutoencoderParams pretrain(const DenseMatrix& x, const std::vector<std::size_t>& layer_dims,
                                  const TrainConfig& cfg, const DenseMatrix& prior) {
    const std::size_t n = x.rows();
    if (prior.rows() != n || prior.cols() != n) {
        throw DimensionError("pretrain: prior must be " + std::to_string(n) + "x" +
                             std::to_string(n) + ", got " + std::to_string(prior.rows()) + "x" +
                             std::to_string(prior.cols()));
    }
    validate_train_config(cfg, n);
    AutoencoderParams params = init_params(layer_dims, mix_seed(cfg.seed, "init"));
    if (x.cols() != params.input_dim()) {
        throw DimensionError("pretrain: data has " + std::to_string(x.cols()) +
                             " columns, layer_dims start at " + std::to_string(params.input_dim()));
    }
    if (cfg.pretrain_epochs == 0) return params;

    const std::size_t layers = params.layers();
    DenseMatrix rep = x;
    for (std::size_t l = 0; l < layers; ++l) {
        AutoencoderParams single;
        single.layer_dims = {params.layer_dims[l], params.layer_dims[l + 1]};
        single.encoder_weights = {params.encoder_weights[l]};
        single.encoder_biases = {params.encoder_biases[l]};
        single.decoder_biases = {params.decoder_biases[l]};

        const bool innermost = l + 1 == layers;
        const double lambda = innermost ? cfg.lambda : 0.0;
        AdamState state;
        auto rng = make_rng(mix_seed(cfg.seed, "pretrain", l));
        for (std::size_t e = 0; e < cfg.pretrain_epochs; ++e) {
            detail::train_epoch(single, rep, prior, lambda, cfg, state, rng);
        }
        params.encoder_weights[l] = single.encoder_weights[0];
        params.encoder_biases[l] = single.encoder_biases[0];
        params.decoder_biases[l] = single.decoder_biases[0];
        if (!innermost) {
            rep = detail::affine_sigmoid(rep, params.encoder_weights[l], params.encoder_biases[l]);
        }
    }
    return params;
}

// Fine-tunes the full stack. Appends one averaged report per epoch to
// `history` as it goes, so a degenerate-codes abort leaves the partial
// history with the caller. `start_epoch` continues the per-epoch batch
// streams for checkpoint resume.
inline void train(AutoencoderParams& params, const DenseMatrix& x, const DenseMatrix& prior,
                  const TrainConfig& cfg, std::vector<BatchLossReport>& history,
                  AdamState& state, std::size_t start_epoch = 0) {
    const std::size_t n = x.rows();
    if (prior.rows() != n || prior.cols() != n) {
        throw DimensionError("train: prior must be " + std::to_string(n) + "x" +
                             std::to_string(n) + ", got " + std::to_string(prior.rows()) + "x" +
                             std::to_string(prior.cols()));
    }
    validate_train_config(cfg, n);
    for (std::size_t e = start_epoch; e < cfg.finetune_epochs; ++e) {
        auto rng = make_rng(mix_seed(cfg.seed, "finetune", e));
        history.push_back(detail::train_epoch(params, x, prior, cfg.lambda, cfg, state, rng));
    }
}

inline void train(AutoencoderParams& params, const DenseMatrix& x, const DenseMatrix& prior,
                  const TrainConfig& cfg, std::vector<BatchLossReport>& history) {
    AdamState state;
    train(params, x, prior, cfg, history, state, 0);
}

inline nlohmann::json train_config_to_json(const TrainConfig& cfg) {
    nlohmann::json j;
    j["lambda"] = cfg.lambda;
    j["batch_size"] = cfg.batch_size;
    j["pretrain_epochs"] = cfg.pretrain_epochs;
    j["finetune_epochs"] = cfg.finetune_epochs;
    j["learning_rate"] = cfg.learning_rate;
    j["beta1"] = cfg.beta1;
    j["beta2"] = cfg.beta2;
    j["epsilon"] = cfg.epsilon;
    j["seed"] = cfg.seed;
    return j;
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig cfg;
    cfg.lambda = j.at("lambda").get<double>();
    cfg.batch_size = j.at("batch_size").get<std::size_t>();
    cfg.pretrain_epochs = j.at("pretrain_epochs").get<std::size_t>();
    cfg.finetune_epochs = j.at("finetune_epochs").get<std::size_t>();
    cfg.learning_rate = j.at("learning_rate").get<double>();
    cfg.beta1 = j.at("beta1").get<double>();
    cfg.beta2 = j.at("beta2").get<double>();
    cfg.epsilon = j.at("epsilon").get<double>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    return cfg;
}

namespace detail {

inline DenseMatrix vector_as_row(const std::vector<double>& v) {
    return DenseMatrix(1, v.size(), v);
}

inline std::vector<double> row_as_vector(const DenseMatrix& m, const std::string& what) {
    if (m.rows() != 1) throw ParseError(what + ": expected a 1-row matrix");
    return m.values();
}

} // namespace detail

// Checkpoint: manifest JSON plus DKMAT1 blobs per weight and bias. Optimizer
// moments are included so a resumed run is bit-identical to an uninterrupted
// one.
inline void save_checkpoint(const std::string& dir, const AutoencoderParams& params,
                            const TrainConfig& cfg, std::size_t epoch, const AdamState* state) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["layer_dims"] = params.layer_dims;
    manifest["config"] = train_config_to_json(cfg);
    manifest["epoch"] = epoch;
    manifest["adam_step"] = state ? state->step : 0;
    manifest["has_adam"] = state != nullptr && state->step > 0;
    save_json(manifest, dir + "/manifest.json");
    for (std::size_t l = 0; l < params.layers(); ++l) {
        const std::string tag = std::to_string(l);
        save_matrix(params.encoder_weights[l], dir + "/w" + tag + ".dkmat");
        save_matrix(detail::vector_as_row(params.encoder_biases[l]), dir + "/be" + tag + ".dkmat");
        save_matrix(detail::vector_as_row(params.decoder_biases[l]), dir + "/bd" + tag + ".dkmat");
        if (state && state->step > 0) {
            save_matrix(state->m.encoder_weights[l], dir + "/adam_mw" + tag + ".dkmat");
            save_matrix(state->v.encoder_weights[l], dir + "/adam_vw" + tag + ".dkmat");
            save_matrix(detail::vector_as_row(state->m.encoder_biases[l]),
                        dir + "/adam_mbe" + tag + ".dkmat");
            save_matrix(detail::vector_as_row(state->v.encoder_biases[l]),
                        dir + "/adam_vbe" + tag + ".dkmat");
            save_matrix(detail::vector_as_row(state->m.decoder_biases[l]),
                        dir + "/adam_mbd" + tag + ".dkmat");
            save_matrix(detail::vector_as_row(state->v.decoder_biases[l]),
                        dir + "/adam_vbd" + tag + ".dkmat");
        }
    }
}

struct Checkpoint {
    AutoencoderParams params;
    TrainConfig config;
    std::size_t epoch = 0;
    AdamState adam;
    bool has_adam = false;
};

inline Checkpoint load_checkpoint(const std::string& dir) {
    const nlohmann::json manifest = load_json(dir + "/manifest.json");
    Checkpoint ck;
    ck.params.layer_dims = manifest.at("layer_dims").get<std::vector<std::size_t>>();
    ck.config = train_config_from_json(manifest.at("config"));
    ck.epoch = manifest.at("epoch").get<std::size_t>();
    ck.has_adam = manifest.value("has_adam", false);
    const std::size_t layers = ck.params.layer_dims.size() - 1;
    for (std::size_t l = 0; l < layers; ++l) {
        const std::string tag = std::to_string(l);
        ck.params.encoder_weights.push_back(load_matrix(dir + "/w" + tag + ".dkmat"));
        ck.params.encoder_biases.push_back(
            detail::row_as_vector(load_matrix(dir + "/be" + tag + ".dkmat"), "checkpoint bias"));
        ck.params.decoder_biases.push_back(
            detail::row_as_vector(load_matrix(dir + "/bd" + tag + ".dkmat"), "checkpoint bias"));
        if (ck.params.encoder_weights.back().rows() != ck.params.layer_dims[l] ||
            ck.params.encoder_weights.back().cols() != ck.params.layer_dims[l + 1]) {
            throw ParseError("checkpoint weight w" + tag + " shape disagrees with layer_dims");
        }
    }
    if (ck.has_adam) {
        ck.adam.step = manifest.at("adam_step").get<std::uint64_t>();
        for (std::size_t l = 0; l < layers; ++l) {
            const std::string tag = std::to_string(l);
            ck.adam.m.encoder_weights.push_back(load_matrix(dir + "/adam_mw" + tag + ".dkmat"));
            ck.adam.v.encoder_weights.push_back(load_matrix(dir + "/adam_vw" + tag + ".dkmat"));
            ck.adam.m.encoder_biases.push_back(detail::row_as_vector(
                load_matrix(dir + "/adam_mbe" + tag + ".dkmat"), "checkpoint adam"));
            ck.adam.v.encoder_biases.push_back(detail::row_as_vector(
                load_matrix(dir + "/adam_vbe" + tag + ".dkmat"), "checkpoint adam"));
            ck.adam.m.decoder_biases.push_back(detail::row_as_vector(
                load_matrix(dir + "/adam_mbd" + tag + ".dkmat"), "checkpoint adam"));
            ck.adam.v.decoder_biases.push_back(detail::row_as_vector(
                load_matrix(dir + "/adam_vbd" + tag + ".dkmat"), "checkpoint adam"));
        }
    }
    return ck;
}

} // namespace dkae
