#pragma once

// Probabilistic Cluster Kernel: an ensemble of GMMs over a (q, g) grid whose
// averaged posterior inner products define a data-adaptive kernel.
// kappa(x_i, x_j) = (1/Z) sum_q sum_{g=2..G} pi_i(q,g)^T pi_j(q,g), Z = Q*(G-1).

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dkae/errors.hpp"
#include "dkae/gmm.hpp"
#include "dkae/io.hpp"
#include "dkae/kernel.hpp"
#include "dkae/matrix.hpp"
#include "dkae/parallel.hpp"
#include "dkae/rng.hpp"

namespace dkae {

struct PckEnsemble {
    std::vector<GmmModel> models; // cell (q, g) at index q*(G-1) + (g-2)
    std::size_t q_count = 0;      // Q
    std::size_t g_max = 0;        // G; component counts run 2..G
    std::size_t fit_subset_size = 0;
    double z = 0.0; // normalizer, Q*(G-1)
    std::uint64_t seed = 0;
    std::vector<std::size_t> subset_indices;
    std::size_t dim = 0;

    std::size_t cells() const { return q_count * (g_max - 1); }
    const GmmModel& model_at(std::size_t q, std::size_t g) const {
        return models[q * (g_max - 1) + (g - 2)];
    }
};

inline PckEnsemble fit_pck(const DenseMatrix& x, std::size_t q_count, std::size_t g_max,
                           std::size_t subset_size, std::uint64_t seed) {
    const std::size_t n = x.rows();
    if (g_max < 2) throw ParameterError("fit_pck: need G >= 2, got " + std::to_string(g_max));
    if (q_count < 1) throw ParameterError("fit_pck: need Q >= 1");
    if (subset_size > n) {
        throw ParameterError("fit_pck: subset_size " + std::to_string(subset_size) +
                             " exceeds sample count " + std::to_string(n));
    }
    if (subset_size < g_max) {
        throw ParameterError("fit_pck: subset_size " + std::to_string(subset_size) +
                             " too small for G = " + std::to_string(g_max) + " components");
    }

    PckEnsemble ens;
    ens.q_count = q_count;
    ens.g_max = g_max;
    ens.fit_subset_size = subset_size;
    ens.z = static_cast<double>(q_count * (g_max - 1));
    ens.seed = seed;
    ens.dim = x.cols();

    auto subset_rng = make_rng(mix_seed(seed, "pck-subset"));
    ens.subset_indices = sample_without_replacement(n, subset_size, subset_rng);
    const DenseMatrix subset = take_rows(x, ens.subset_indices);

    ens.models.resize(ens.cells());
    parallel_for(ens.cells(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t cell = begin; cell < end; ++cell) {
            const std::size_t q = cell / (g_max - 1);
            const std::size_t g = cell % (g_max - 1) + 2;
            ens.models[cell] = fit_gmm(subset, g, mix_seed(seed, "pck-fit", q, g));
        }
    });
    return ens;
}

// Cross-kernel between rows of X and rows of Y under the ensemble.
inline DenseMatrix pck_kernel(const PckEnsemble& ens, const DenseMatrix& x,
                              const DenseMatrix& y) {
    if (x.cols() != ens.dim || y.cols() != ens.dim) {
        throw DimensionError("pck_kernel: inputs have dims " + std::to_string(x.cols()) + ", " +
                             std::to_string(y.cols()) + " but ensemble expects " +
                             std::to_string(ens.dim));
    }
    const bool self = &x == &y || x == y;
    DenseMatrix k(x.rows(), y.rows());
    for (const GmmModel& model : ens.models) {
        const DenseMatrix px = posterior_matrix(model, x);
        // Self-kernels go through the mirrored Gram path for exact symmetry.
        const DenseMatrix contrib = self ? gram_rows(px) : multiply_abt(px, posterior_matrix(model, y));
        double* kd = k.data();
        const double* cd = contrib.data();
        for (std::size_t i = 0; i < k.size(); ++i) kd[i] += cd[i];
    }
    const double inv_z = 1.0 / ens.z;
    for (std::size_t i = 0; i < k.size(); ++i) k.data()[i] *= inv_z;
    return k;
}

inline KernelMatrix pck_kernel_matrix(const PckEnsemble& ens, const DenseMatrix& x) {
    KernelMatrix k;
    k.kind = "pck";
    k.params["Q"] = ens.q_count;
    k.params["G"] = ens.g_max;
    k.params["Z"] = ens.z;
    k.params["seed"] = ens.seed;
    k.params["fit_subset_size"] = ens.fit_subset_size;
    k.values = pck_kernel(ens, x, x);
    return k;
}

// Ensemble persists as a directory: manifest.json plus one JSON per model.
inline void save_pck(const PckEnsemble& ens, const std::string& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["Q"] = ens.q_count;
    manifest["G"] = ens.g_max;
    manifest["Z"] = ens.z;
    manifest["seed"] = ens.seed;
    manifest["fit_subset_size"] = ens.fit_subset_size;
    manifest["subset_indices"] = ens.subset_indices;
    manifest["dim"] = ens.dim;
    save_json(manifest, dir + "/manifest.json");
    for (std::size_t q = 0; q < ens.q_count; ++q) {
        for (std::size_t g = 2; g <= ens.g_max; ++g) {
            save_json(gmm_to_json(ens.model_at(q, g)),
                      dir + "/model_q" + std::to_string(q) + "_g" + std::to_string(g) + ".json");
        }
    }
}

inline PckEnsemble load_pck(const std::string& dir) {
    const nlohmann::json manifest = load_json(dir + "/manifest.json");
    PckEnsemble ens;
    ens.q_count = manifest.at("Q").get<std::size_t>();
    ens.g_max = manifest.at("G").get<std::size_t>();
    ens.z = manifest.at("Z").get<double>();
    ens.seed = manifest.at("seed").get<std::uint64_t>();
    ens.fit_subset_size = manifest.at("fit_subset_size").get<std::size_t>();
    ens.subset_indices = manifest.at("subset_indices").get<std::vector<std::size_t>>();
    ens.dim = manifest.at("dim").get<std::size_t>();
    if (ens.g_max < 2 || ens.q_count < 1) {
        throw ParseError("load_pck: manifest grid Q=" + std::to_string(ens.q_count) +
                         " G=" + std::to_string(ens.g_max) + " invalid");
    }
    ens.models.resize(ens.cells());
    for (std::size_t q = 0; q < ens.q_count; ++q) {
        for (std::size_t g = 2; g <= ens.g_max; ++g) {
            const GmmModel model = gmm_from_json(load_json(
                dir + "/model_q" + std::to_string(q) + "_g" + std::to_string(g) + ".json"));
            if (model.dim() != ens.dim) {
                throw ParseError("load_pck: model q=" + std::to_string(q) +
                                 " g=" + std::to_string(g) + " has dim " +
                                 std::to_string(model.dim()) + ", manifest says " +
                                 std::to_string(ens.dim));
            }
            ens.models[q * (ens.g_max - 1) + (g - 2)] = model;
        }
    }
    return ens;
}

} // namespace dkae
