#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "hgkit/matrix.hpp"
#include "hgkit/rng.hpp"
#include "hgkit/tensor.hpp"

namespace testutil {

inline hg::Tensor random_tensor(std::vector<std::int64_t> dims, std::uint64_t seed,
                                double lo = -1.0, double hi = 1.0) {
    hg::Tensor t(std::move(dims));
    hg::CounterRng rng(seed);
    for (std::int64_t i = 0; i < t.size(); ++i) {
        t[i] = rng.uniform(lo, hi);
    }
    return t;
}

inline hg::Matrix random_matrix(std::int64_t rows, std::int64_t cols, std::uint64_t seed,
                                double lo = -1.0, double hi = 1.0) {
    hg::Matrix m(rows, cols);
    hg::CounterRng rng(seed);
    for (double& v : m.data) {
        v = rng.uniform(lo, hi);
    }
    return m;
}

inline double max_abs_diff(const hg::Tensor& a, const hg::Tensor& b) {
    if (!a.same_dims(b)) {
        return 1e300;
    }
    double m = 0;
    for (std::int64_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

inline double max_abs_diff(const hg::Matrix& a, const hg::Matrix& b) {
    if (a.rows != b.rows || a.cols != b.cols) {
        return 1e300;
    }
    double m = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        m = std::max(m, std::abs(a.data[i] - b.data[i]));
    }
    return m;
}

} // namespace testutil
