#pragma once

// INI-style experiment configuration. Sections group related keys; every
// field has a default so a minimal config can be a few lines. Validation
// throws ConfigError naming the offending section.key.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dkae/errors.hpp"

namespace dkae {

inline constexpr const char* kDkaeVersion = "1.0.0";

struct ExperimentConfig {
    // [data]
    std::string source = "blobs"; // "blobs" | "idx" | "csv"
    std::string images;           // idx pixel file
    std::string labels;           // idx label file
    std::string csv;              // csv path, header auto-detected
    int label_col = -1;           // -1 = last column
    std::size_t blob_samples = 2000;
    std::size_t blob_classes = 10;
    std::size_t blob_dim = 64;
    std::size_t blob_modes = 1; // sub-clusters per class
    double blob_spread = 0.08;
    double train_frac = 0.7;
    double val_frac = 0.15;
    double test_frac = 0.15;

    // [pck]
    std::size_t pck_q = 30;
    std::size_t pck_g = 30;
    std::size_t pck_subset = 200;

    // [model] hidden widths then code width; the input width comes from the data.
    std::vector<std::size_t> layers = {500, 500, 2000, 10};

    // [train]
    std::string prior = "pck"; // "pck" | "ideal"
    double lambda = 0.1;
    double learning_rate = 1e-3;
    std::size_t batch_size = 200;
    std::size_t pretrain_epochs = 30;
    std::size_t finetune_epochs = 100;

    // [experiment]
    std::vector<double> lambda_grid = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    std::vector<std::size_t> code_grid = {2, 8, 32, 64, 128};
    std::size_t components = 32; // retained dimensions in denoise pipelines
    double noise_std = 0.25;
    std::vector<int> denoise_classes = {5, 6};
    std::size_t walk_clusters = 10;
    std::size_t walk_steps = 10;
    std::size_t approx_m_max = 64; // approx-curve sweeps m = 1..min(this, usable rank)

    // [output]
    std::string out_dir = "out";
    std::uint64_t seed = 42;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

inline double config_double(const std::string& field, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(field + ": expected a number, got '" + value + "'");
    }
}

inline long long config_int(const std::string& field, const std::string& value) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(field + ": expected an integer, got '" + value + "'");
    }
}

inline std::size_t config_size(const std::string& field, const std::string& value) {
    const long long v = config_int(field, value);
    if (v < 0) throw ConfigError(field + ": expected a non-negative integer, got '" + value + "'");
    return static_cast<std::size_t>(v);
}

inline std::vector<std::string> config_list(const std::string& value) {
    std::vector<std::string> items;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

inline void apply_config_key(ExperimentConfig& cfg, const std::string& section,
                             const std::string& key, const std::string& value) {
    const std::string field = section + "." + key;
    if (section == "data") {
        if (key == "source") cfg.source = value;
        else if (key == "images") cfg.images = value;
        else if (key == "labels") cfg.labels = value;
        else if (key == "csv") cfg.csv = value;
        else if (key == "label_col") cfg.label_col = static_cast<int>(config_int(field, value));
        else if (key == "blob_samples") cfg.blob_samples = config_size(field, value);
        else if (key == "blob_classes") cfg.blob_classes = config_size(field, value);
        else if (key == "blob_dim") cfg.blob_dim = config_size(field, value);
        else if (key == "blob_modes") cfg.blob_modes = config_size(field, value);
        else if (key == "blob_spread") cfg.blob_spread = config_double(field, value);
        else if (key == "train_frac") cfg.train_frac = config_double(field, value);
        else if (key == "val_frac") cfg.val_frac = config_double(field, value);
        else if (key == "test_frac") cfg.test_frac = config_double(field, value);
        else throw ConfigError("unknown key '" + key + "' in section [data]");
    } else if (section == "pck") {
        if (key == "q") cfg.pck_q = config_size(field, value);
        else if (key == "g") cfg.pck_g = config_size(field, value);
        else if (key == "subset") cfg.pck_subset = config_size(field, value);
        else throw ConfigError("unknown key '" + key + "' in section [pck]");
    } else if (section == "model") {
        if (key == "layers") {
            cfg.layers.clear();
            for (const std::string& item : config_list(value)) {
                cfg.layers.push_back(config_size(field, item));
            }
        } else {
            throw ConfigError("unknown key '" + key + "' in section [model]");
        }
    } else if (section == "train") {
        if (key == "prior") cfg.prior = value;
        else if (key == "lambda") cfg.lambda = config_double(field, value);
        else if (key == "learning_rate") cfg.learning_rate = config_double(field, value);
        else if (key == "batch_size") cfg.batch_size = config_size(field, value);
        else if (key == "pretrain_epochs") cfg.pretrain_epochs = config_size(field, value);
        else if (key == "finetune_epochs") cfg.finetune_epochs = config_size(field, value);
        else throw ConfigError("unknown key '" + key + "' in section [train]");
    } else if (section == "experiment") {
        if (key == "lambda_grid") {
            cfg.lambda_grid.clear();
            for (const std::string& item : config_list(value)) {
                cfg.lambda_grid.push_back(config_double(field, item));
            }
        } else if (key == "code_grid") {
            cfg.code_grid.clear();
            for (const std::string& item : config_list(value)) {
                cfg.code_grid.push_back(config_size(field, item));
            }
        } else if (key == "components") {
            cfg.components = config_size(field, value);
        } else if (key == "noise_std") {
            cfg.noise_std = config_double(field, value);
        } else if (key == "denoise_classes") {
            cfg.denoise_classes.clear();
            for (const std::string& item : config_list(value)) {
                cfg.denoise_classes.push_back(static_cast<int>(config_int(field, item)));
            }
        } else if (key == "walk_clusters") {
            cfg.walk_clusters = config_size(field, value);
        } else if (key == "walk_steps") {
            cfg.walk_steps = config_size(field, value);
        } else if (key == "approx_m_max") {
            cfg.approx_m_max = config_size(field, value);
        } else {
            throw ConfigError("unknown key '" + key + "' in section [experiment]");
        }
    } else if (section == "output") {
        if (key == "dir") cfg.out_dir = value;
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(config_int(field, value));
        else throw ConfigError("unknown key '" + key + "' in section [output]");
    } else {
        throw ConfigError("unknown section [" + section + "]");
    }
}

} // namespace detail

inline ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::stringstream ss(text);
    std::string line;
    std::string section;
    std::size_t lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) {
                throw ConfigError("line " + std::to_string(lineno) + ": malformed section header '" +
                                  line + "'");
            }
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value, got '" +
                              line + "'");
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        }
        if (section.empty()) {
            throw ConfigError("line " + std::to_string(lineno) + ": key '" + key +
                              "' appears before any [section]");
        }
        detail::apply_config_key(cfg, section, key, value);
    }
    return cfg;
}

inline void validate_config(const ExperimentConfig& cfg) {
    const auto require = [](bool ok, const std::string& msg) {
        if (!ok) throw ConfigError(msg);
    };
    require(cfg.source == "blobs" || cfg.source == "idx" || cfg.source == "csv",
            "data.source: must be blobs, idx, or csv, got '" + cfg.source + "'");
    if (cfg.source == "idx") {
        require(!cfg.images.empty(), "data.images: required when source = idx");
        require(!cfg.labels.empty(), "data.labels: required when source = idx");
        require(std::filesystem::exists(cfg.images), "data.images: no such file '" + cfg.images + "'");
        require(std::filesystem::exists(cfg.labels), "data.labels: no such file '" + cfg.labels + "'");
    }
    if (cfg.source == "csv") {
        require(!cfg.csv.empty(), "data.csv: required when source = csv");
        require(std::filesystem::exists(cfg.csv), "data.csv: no such file '" + cfg.csv + "'");
    }
    if (cfg.source == "blobs") {
        require(cfg.blob_classes >= 1, "data.blob_classes: must be >= 1");
        require(cfg.blob_samples >= cfg.blob_classes, "data.blob_samples: must be >= blob_classes");
        require(cfg.blob_dim >= 1, "data.blob_dim: must be >= 1");
        require(cfg.blob_modes >= 1, "data.blob_modes: must be >= 1");
        require(cfg.blob_spread > 0.0, "data.blob_spread: must be positive");
    }
    require(cfg.train_frac > 0.0 && cfg.val_frac >= 0.0 && cfg.test_frac >= 0.0,
            "data.train_frac/val_frac/test_frac: fractions must be positive");
    const double total = cfg.train_frac + cfg.val_frac + cfg.test_frac;
    require(std::abs(total - 1.0) <= 1e-9,
            "data.train_frac + val_frac + test_frac: must sum to 1, got " + std::to_string(total));

    require(cfg.pck_q >= 1, "pck.q: must be >= 1");
    require(cfg.pck_g >= 2, "pck.g: must be >= 2");
    require(cfg.pck_subset >= cfg.pck_g, "pck.subset: must be >= pck.g");

    require(!cfg.layers.empty(), "model.layers: need at least one layer width");
    for (std::size_t w : cfg.layers) require(w >= 1, "model.layers: widths must be >= 1");

    require(cfg.prior == "pck" || cfg.prior == "ideal",
            "train.prior: must be pck or ideal, got '" + cfg.prior + "'");
    require(cfg.lambda >= 0.0 && cfg.lambda <= 1.0, "train.lambda: must lie in [0, 1]");
    require(cfg.learning_rate > 0.0, "train.learning_rate: must be positive");
    require(cfg.batch_size >= 1, "train.batch_size: must be >= 1");

    require(!cfg.lambda_grid.empty(), "experiment.lambda_grid: must not be empty");
    for (double l : cfg.lambda_grid) {
        require(l >= 0.0 && l <= 1.0, "experiment.lambda_grid: entries must lie in [0, 1]");
    }
    require(!cfg.code_grid.empty(), "experiment.code_grid: must not be empty");
    for (std::size_t c : cfg.code_grid) require(c >= 1, "experiment.code_grid: entries must be >= 1");
    require(cfg.components >= 1, "experiment.components: must be >= 1");
    require(cfg.noise_std >= 0.0, "experiment.noise_std: must be non-negative");
    require(!cfg.denoise_classes.empty(), "experiment.denoise_classes: must not be empty");
    require(cfg.walk_clusters >= 2, "experiment.walk_clusters: must be >= 2");
    require(cfg.walk_steps >= 2, "experiment.walk_steps: must be >= 2");
    require(cfg.approx_m_max >= 1, "experiment.approx_m_max: must be >= 1");

    require(!cfg.out_dir.empty(), "output.dir: must not be empty");
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    ExperimentConfig cfg = parse_config_text(buffer.str());
    validate_config(cfg);
    return cfg;
}

} // namespace dkae
