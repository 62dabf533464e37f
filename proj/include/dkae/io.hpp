#pragma once

// File formats: DKMAT1 binary matrices, PGM (P5) images, JSON documents.
//
// DKMAT1 layout: magic "DKMAT1" (6 bytes), rows and cols as u64 little-endian,
// then rows*cols IEEE-754 doubles, little-endian. Encoding is byte-explicit so
// files are identical across hosts.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "dkae/errors.hpp"
#include "dkae/matrix.hpp"

#include <nlohmann/json.hpp>

namespace dkae {

namespace detail {

inline void put_u64_le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint64_t get_u64_le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

inline void put_f64_le(std::string& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    put_u64_le(out, bits);
}

inline double get_f64_le(const unsigned char* p) {
    const std::uint64_t bits = get_u64_le(p);
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
}

} // namespace detail

inline constexpr char kDkmatMagic[6] = {'D', 'K', 'M', 'A', 'T', '1'};

inline void save_matrix(const DenseMatrix& m, const std::filesystem::path& path) {
    std::string buf;
    buf.reserve(22 + 8 * m.size());
    buf.append(kDkmatMagic, 6);
    detail::put_u64_le(buf, m.rows());
    detail::put_u64_le(buf, m.cols());
    for (std::size_t i = 0; i < m.size(); ++i) detail::put_f64_le(buf, m.data()[i]);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

inline DenseMatrix load_matrix(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() < 22) {
        throw ParseError(path.string() + ": truncated DKMAT1 header (file is " +
                         std::to_string(bytes.size()) + " bytes, need 22)");
    }
    if (std::memcmp(bytes.data(), kDkmatMagic, 6) != 0) {
        throw ParseError(path.string() + ": bad DKMAT1 magic at byte 0");
    }
    const std::uint64_t rows = detail::get_u64_le(bytes.data() + 6);
    const std::uint64_t cols = detail::get_u64_le(bytes.data() + 14);
    const std::uint64_t want = 22 + 8 * rows * cols;
    if (bytes.size() != want) {
        throw ParseError(path.string() + ": payload size mismatch at byte 22 (have " +
                         std::to_string(bytes.size()) + ", header implies " + std::to_string(want) +
                         ")");
    }
    DenseMatrix m(rows, cols);
    for (std::uint64_t i = 0; i < rows * cols; ++i)
        m.data()[i] = detail::get_f64_le(bytes.data() + 22 + 8 * i);
    return m;
}

// 8-bit binary PGM. Values are clamped to [0,1] and scaled to 0..255.
inline void save_pgm(const std::vector<double>& pixels, std::size_t width, std::size_t height,
                     const std::filesystem::path& path) {
    if (pixels.size() != width * height) {
        throw DimensionError("save_pgm: pixel count " + std::to_string(pixels.size()) +
                             " != " + std::to_string(width) + "x" + std::to_string(height));
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "P5\n" << width << " " << height << "\n255\n";
    std::string raw;
    raw.reserve(pixels.size());
    for (double v : pixels) {
        const double c = std::min(1.0, std::max(0.0, v));
        raw.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(c * 255.0))));
    }
    out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

inline void save_json(const nlohmann::json& j, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << j.dump(2) << "\n";
    if (!out) throw IoError("write failed: " + path.string());
}

inline nlohmann::json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return j;
}

inline void save_text(const std::string& text, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

inline nlohmann::json matrix_to_json(const DenseMatrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline DenseMatrix matrix_from_json(const nlohmann::json& j) {
    const std::size_t rows = j.size();
    const std::size_t cols = rows == 0 ? 0 : j.at(0).size();
    DenseMatrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        if (j.at(i).size() != cols) throw ParseError("matrix_from_json: ragged rows");
        for (std::size_t jj = 0; jj < cols; ++jj) m(i, jj) = j.at(i).at(jj).get<double>();
    }
    return m;
}

} // namespace dkae
