#include "hgkit/matrix.hpp"

#include <stdexcept>

namespace hg {

Matrix identity_matrix(std::int64_t n) {
    Matrix m(n, n);
    for (std::int64_t i = 0; i < n; ++i) {
        m.at(i, i) = 1.0;
    }
    return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) {
        throw std::invalid_argument("matmul: inner extents disagree");
    }
    Matrix out(a.rows, b.cols);
    for (std::int64_t i = 0; i < a.rows; ++i) {
        for (std::int64_t k = 0; k < a.cols; ++k) {
            const double v = a.at(i, k);
            if (v == 0.0) {
                continue;
            }
            for (std::int64_t j = 0; j < b.cols; ++j) {
                out.at(i, j) += v * b.at(k, j);
            }
        }
    }
    return out;
}

} // namespace hg
