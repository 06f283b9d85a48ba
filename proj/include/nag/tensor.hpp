#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nag/rng.hpp"

namespace nag {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
void fill_normal(Mat<T>& m, Rng& rng, double stddev) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            m(i, j) = static_cast<T>(rng.normal() * stddev);
        }
    }
}

template <typename T>
const char* dtype_name() {
    if constexpr (sizeof(T) == 4) {
        return "f32";
    } else {
        return "f64";
    }
}

// Raw little-endian row-major tensor files used by checkpoints and bundles.
template <typename T>
void write_tensor(const std::string& path, const Mat<T>& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(T) * static_cast<std::size_t>(m.size())));
}

template <typename T>
Mat<T> read_tensor(const std::string& path, Eigen::Index rows, Eigen::Index cols) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    Mat<T> m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(T) * static_cast<std::size_t>(m.size())));
    if (in.gcount() != static_cast<std::streamsize>(sizeof(T) * static_cast<std::size_t>(m.size()))) {
        throw std::runtime_error("tensor file " + path + " is truncated");
    }
    return m;
}

inline void write_int32_file(const std::string& path, const std::vector<int>& values) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    for (const int v : values) {
        const std::int32_t w = v;
        out.write(reinterpret_cast<const char*>(&w), sizeof(w));
    }
}

}  // namespace nag
