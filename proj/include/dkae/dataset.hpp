#pragma once

// Dataset ingestion: IDX image/label pairs, CSV with a label column, and a
// synthetic blob generator. All sources end in the same shape: features in
// [0,1], integer labels, seeded shuffle, train/val/test split.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "dkae/errors.hpp"
#include "dkae/eval.hpp"
#include "dkae/matrix.hpp"
#include "dkae/rng.hpp"

namespace dkae {

struct DataSplit {
    LabeledDataset train;
    LabeledDataset val;
    LabeledDataset test;
};

namespace detail {

inline std::vector<unsigned char> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    return bytes;
}

inline std::uint32_t get_u32_be(const std::vector<unsigned char>& b, std::size_t off,
                                const std::string& path) {
    if (off + 4 > b.size()) {
        throw ParseError(path + ": truncated at byte " + std::to_string(off) +
                         " (need 4 more bytes)");
    }
    return (std::uint32_t(b[off]) << 24) | (std::uint32_t(b[off + 1]) << 16) |
           (std::uint32_t(b[off + 2]) << 8) | std::uint32_t(b[off + 3]);
}

} // namespace detail

// IDX image file (magic 0x00000803): features scaled to [0,1] by /255.
inline DenseMatrix load_idx_images(const std::string& path) {
    const std::vector<unsigned char> b = detail::read_file_bytes(path);
    const std::uint32_t magic = detail::get_u32_be(b, 0, path);
    if (magic != 0x00000803u) {
        throw ParseError(path + ": bad IDX image magic at byte 0 (got 0x" +
                         [](std::uint32_t v) {
                             char buf[9];
                             std::snprintf(buf, sizeof buf, "%08x", v);
                             return std::string(buf);
                         }(magic) +
                         ", expected 0x00000803)");
    }
    const std::uint32_t n = detail::get_u32_be(b, 4, path);
    const std::uint32_t rows = detail::get_u32_be(b, 8, path);
    const std::uint32_t cols = detail::get_u32_be(b, 12, path);
    const std::size_t want = std::size_t(n) * rows * cols;
    if (b.size() != 16 + want) {
        throw ParseError(path + ": payload is " + std::to_string(b.size() - 16) +
                         " bytes at byte 16, header promises " + std::to_string(want));
    }
    DenseMatrix x(n, std::size_t(rows) * cols);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x.data()[i] = static_cast<double>(b[16 + i]) / 255.0;
    }
    return x;
}

// IDX label file (magic 0x00000801).
inline std::vector<int> load_idx_labels(const std::string& path) {
    const std::vector<unsigned char> b = detail::read_file_bytes(path);
    const std::uint32_t magic = detail::get_u32_be(b, 0, path);
    if (magic != 0x00000801u) {
        throw ParseError(path + ": bad IDX label magic at byte 0 (expected 0x00000801)");
    }
    const std::uint32_t n = detail::get_u32_be(b, 4, path);
    if (b.size() != 8 + std::size_t(n)) {
        throw ParseError(path + ": payload is " + std::to_string(b.size() - 8) +
                         " bytes at byte 8, header promises " + std::to_string(n));
    }
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = b[8 + i];
    return labels;
}

namespace detail {

inline bool parse_double(const std::string& field, double& out) {
    const char* begin = field.data();
    const char* end = begin + field.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end > begin && (end[-1] == ' ' || end[-1] == '\t')) --end;
    if (begin == end) return false;
    const auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

inline std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

} // namespace detail

// CSV with one sample per row. `label_col` < 0 selects the last column. A
// first row with any non-numeric field is treated as a header and skipped.
inline void load_csv(const std::string& path, int label_col, DenseMatrix& features_out,
                     std::vector<int>& labels_out) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    bool first_data_line = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> fields = detail::split_fields(line);
        std::vector<double> values(fields.size());
        bool numeric = true;
        for (std::size_t j = 0; j < fields.size(); ++j) {
            if (!detail::parse_double(fields[j], values[j])) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (first_data_line) {
                first_data_line = false; // header row
                continue;
            }
            throw ParseError(path + ": line " + std::to_string(line_no) +
                             ": non-numeric field");
        }
        first_data_line = false;
        if (width == 0) {
            width = fields.size();
            if (width < 2) {
                throw ParseError(path + ": line " + std::to_string(line_no) +
                                 ": need at least 2 columns (features + label)");
            }
        } else if (fields.size() != width) {
            throw ParseError(path + ": line " + std::to_string(line_no) + ": expected " +
                             std::to_string(width) + " fields, got " +
                             std::to_string(fields.size()));
        }
        const std::size_t lc = label_col < 0 ? width - 1 : static_cast<std::size_t>(label_col);
        if (lc >= width) {
            throw ParseError(path + ": label column " + std::to_string(label_col) +
                             " outside row width " + std::to_string(width));
        }
        const double raw_label = values[lc];
        const double rounded = std::nearbyint(raw_label);
        if (std::abs(raw_label - rounded) > 1e-9) {
            throw ParseError(path + ": line " + std::to_string(line_no) +
                             ": label value " + std::to_string(raw_label) + " is not an integer");
        }
        labels.push_back(static_cast<int>(rounded));
        values.erase(values.begin() + static_cast<std::ptrdiff_t>(lc));
        rows.push_back(std::move(values));
    }
    if (rows.empty()) throw ParseError(path + ": no data rows");
    features_out = DenseMatrix(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy(rows[i].begin(), rows[i].end(), features_out.row(i));
    }
    labels_out = std::move(labels);
}

// Gaussian class blobs in [0,1]^dim with per-class anisotropic spreads.
// Class counts are exact: n/classes each, remainder to the lowest class ids.
// With modes > 1 each class is a union of that many sub-clusters (its count
// split the same way), giving classes internal structure while labels stay
// per class. The modes = 1 stream matches the single-mode generator bit for
// bit.
inline void make_blobs(std::size_t n, std::size_t classes, std::size_t dim, std::uint64_t seed,
                       DenseMatrix& features_out, std::vector<int>& labels_out,
                       double spread = 0.1, std::size_t modes = 1) {
    if (classes < 1 || n < classes) {
        throw ParameterError("make_blobs: need n >= classes >= 1");
    }
    if (dim < 1) throw ParameterError("make_blobs: need dim >= 1");
    if (!(spread > 0.0)) throw ParameterError("make_blobs: spread must be positive");
    if (modes < 1) throw ParameterError("make_blobs: need modes >= 1");
    auto rng = make_rng(seed);
    std::uniform_real_distribution<double> center_dist(0.2, 0.8);
    std::uniform_real_distribution<double> aniso_dist(0.25, 1.75);
    DenseMatrix centers(classes * modes, dim);
    DenseMatrix sigmas(classes * modes, dim);
    for (std::size_t u = 0; u < classes * modes; ++u) {
        for (std::size_t j = 0; j < dim; ++j) centers(u, j) = center_dist(rng);
        for (std::size_t j = 0; j < dim; ++j) sigmas(u, j) = spread * aniso_dist(rng);
    }
    features_out = DenseMatrix(n, dim);
    labels_out.assign(n, 0);
    std::normal_distribution<double> unit(0.0, 1.0);
    std::size_t row = 0;
    for (std::size_t c = 0; c < classes; ++c) {
        const std::size_t count = n / classes + (c < n % classes ? 1 : 0);
        for (std::size_t m = 0; m < modes; ++m) {
            const std::size_t mode_count = count / modes + (m < count % modes ? 1 : 0);
            const std::size_t u = c * modes + m;
            for (std::size_t s = 0; s < mode_count; ++s, ++row) {
                double* x = features_out.row(row);
                for (std::size_t j = 0; j < dim; ++j) {
                    x[j] = std::clamp(centers(u, j) + sigmas(u, j) * unit(rng), 0.0, 1.0);
                }
                labels_out[row] = static_cast<int>(c);
            }
        }
    }
}

// Seeded shuffle then split by fractions; test takes the remainder.
inline DataSplit split_dataset(const DenseMatrix& features, const std::vector<int>& labels,
                               double train_frac, double val_frac, std::uint64_t seed) {
    if (features.rows() != labels.size()) {
        throw DimensionError("split_dataset: " + std::to_string(features.rows()) +
                             " rows vs " + std::to_string(labels.size()) + " labels");
    }
    if (!(train_frac > 0.0) || val_frac < 0.0 || train_frac + val_frac > 1.0 + 1e-9) {
        throw ParameterError("split_dataset: bad fractions " + std::to_string(train_frac) + "/" +
                             std::to_string(val_frac));
    }
    const std::size_t n = features.rows();
    auto rng = make_rng(seed);
    const std::vector<std::size_t> order = shuffled_indices(n, rng);
    const std::size_t n_train = static_cast<std::size_t>(train_frac * static_cast<double>(n));
    const std::size_t n_val = static_cast<std::size_t>(val_frac * static_cast<double>(n));
    if (n_train == 0 || n_train + n_val > n) {
        throw ParameterError("split_dataset: fractions leave no data for some split");
    }
    const auto slice = [&](std::size_t begin, std::size_t count, const char* tag) {
        LabeledDataset ds;
        std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                     order.begin() + static_cast<std::ptrdiff_t>(begin + count));
        ds.features = take_rows(features, idx);
        ds.labels.resize(count);
        for (std::size_t i = 0; i < count; ++i) ds.labels[i] = labels[idx[i]];
        ds.split = tag;
        return ds;
    };
    DataSplit split;
    split.train = slice(0, n_train, "train");
    split.val = slice(n_train, n_val, "val");
    split.test = slice(n_train + n_val, n - n_train - n_val, "test");
    return split;
}

// Min-max scaling per column from training statistics, then clamp to [0,1].
// Constant columns map to 0.
inline void minmax_scale(DataSplit& split) {
    const DenseMatrix& train = split.train.features;
    const std::size_t d = train.cols();
    std::vector<double> lo(d, std::numeric_limits<double>::infinity());
    std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < train.rows(); ++i) {
        const double* row = train.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            lo[j] = std::min(lo[j], row[j]);
            hi[j] = std::max(hi[j], row[j]);
        }
    }
    const auto apply = [&](DenseMatrix& m) {
        for (std::size_t i = 0; i < m.rows(); ++i) {
            double* row = m.row(i);
            for (std::size_t j = 0; j < d; ++j) {
                const double range = hi[j] - lo[j];
                row[j] = range > 0.0 ? std::clamp((row[j] - lo[j]) / range, 0.0, 1.0) : 0.0;
            }
        }
    };
    apply(split.train.features);
    apply(split.val.features);
    apply(split.test.features);
}

} // namespace dkae
