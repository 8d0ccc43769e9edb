#pragma once

#include <cstdint>
#include <vector>

namespace hg {

/// Dense row-major matrix of doubles.
struct Matrix {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::int64_t r, std::int64_t c)
        : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), 0.0) {}

    double at(std::int64_t r, std::int64_t c) const {
        return data[static_cast<std::size_t>(r * cols + c)];
    }
    double& at(std::int64_t r, std::int64_t c) {
        return data[static_cast<std::size_t>(r * cols + c)];
    }
};

Matrix identity_matrix(std::int64_t n);
Matrix matmul(const Matrix& a, const Matrix& b);

} // namespace hg
