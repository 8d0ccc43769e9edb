#include "hgkit/tensor.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

namespace hg {

namespace {

std::int64_t checked_element_count(const std::vector<std::int64_t>& dims) {
    if (dims.empty() || dims.size() > 4) {
        throw std::invalid_argument("tensor rank must be 1..4");
    }
    std::int64_t n = 1;
    for (std::int64_t d : dims) {
        if (d < 1) {
            throw std::invalid_argument("tensor extents must be >= 1");
        }
        n *= d;
    }
    return n;
}

} // namespace

Tensor::Tensor(std::vector<std::int64_t> dims) : dims_(std::move(dims)) {
    data_.assign(static_cast<std::size_t>(checked_element_count(dims_)), 0.0);
}

Tensor::Tensor(std::vector<std::int64_t> dims, std::vector<double> values)
    : dims_(std::move(dims)), data_(std::move(values)) {
    if (checked_element_count(dims_) != static_cast<std::int64_t>(data_.size())) {
        throw std::invalid_argument("tensor value count does not match extents");
    }
}

std::int64_t Tensor::dim(std::int64_t axis) const {
    if (axis < 0 || axis >= rank()) {
        throw std::invalid_argument("tensor axis out of range");
    }
    return dims_[static_cast<std::size_t>(axis)];
}

double Tensor::at4(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) const {
    return data_[static_cast<std::size_t>(((n * dims_[1] + c) * dims_[2] + h) * dims_[3] + w)];
}

double& Tensor::at4(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) {
    return data_[static_cast<std::size_t>(((n * dims_[1] + c) * dims_[2] + h) * dims_[3] + w)];
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

Tensor pointwise(const Tensor& a, const Tensor& b, PointwiseOp op) {
    if (a.rank() != b.rank()) {
        throw std::invalid_argument("pointwise: rank mismatch");
    }
    const std::int64_t r = a.rank();
    // Pad to 4 leading unit axes so one loop nest covers every rank.
    std::int64_t da[4] = {1, 1, 1, 1}, db[4] = {1, 1, 1, 1}, do_[4] = {1, 1, 1, 1};
    for (std::int64_t i = 0; i < r; ++i) {
        da[4 - r + i] = a.dim(i);
        db[4 - r + i] = b.dim(i);
    }
    for (int i = 0; i < 4; ++i) {
        if (da[i] != db[i] && da[i] != 1 && db[i] != 1) {
            throw std::invalid_argument("pointwise: extents are not broadcastable");
        }
        do_[i] = da[i] == 1 ? db[i] : da[i];
    }
    std::vector<std::int64_t> out_dims;
    for (std::int64_t i = 0; i < r; ++i) {
        out_dims.push_back(do_[4 - r + i]);
    }
    Tensor out(out_dims);

    std::int64_t sa[4], sb[4];
    std::int64_t acc_a = 1, acc_b = 1;
    for (int i = 3; i >= 0; --i) {
        sa[i] = da[i] == 1 ? 0 : acc_a;
        sb[i] = db[i] == 1 ? 0 : acc_b;
        acc_a *= da[i];
        acc_b *= db[i];
    }

    std::int64_t idx = 0;
    for (std::int64_t i0 = 0; i0 < do_[0]; ++i0) {
        for (std::int64_t i1 = 0; i1 < do_[1]; ++i1) {
            for (std::int64_t i2 = 0; i2 < do_[2]; ++i2) {
                for (std::int64_t i3 = 0; i3 < do_[3]; ++i3) {
                    const double va = a[i0 * sa[0] + i1 * sa[1] + i2 * sa[2] + i3 * sa[3]];
                    const double vb = b[i0 * sb[0] + i1 * sb[1] + i2 * sb[2] + i3 * sb[3]];
                    out[idx++] = op == PointwiseOp::mul ? va * vb : va + vb;
                }
            }
        }
    }
    return out;
}

Tensor tensor_full(std::vector<std::int64_t> dims, double value) {
    Tensor t(std::move(dims));
    for (std::int64_t i = 0; i < t.size(); ++i) {
        t[i] = value;
    }
    return t;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
    if (!a.same_dims(b)) {
        return false;
    }
    return std::memcmp(a.data().data(), b.data().data(),
                       a.data().size_bytes()) == 0;
}

namespace {

void require_rank4(const Tensor& t, const char* what) {
    if (t.rank() != 4) {
        throw std::invalid_argument(std::string(what) + ": rank-4 tensor required");
    }
}

} // namespace

Tensor slice_channels(const Tensor& t, std::int64_t c_begin, std::int64_t c_end) {
    require_rank4(t, "slice_channels");
    if (c_begin < 0 || c_end <= c_begin || c_end > t.dim(1)) {
        throw std::invalid_argument("slice_channels: bad channel range");
    }
    Tensor out({t.dim(0), c_end - c_begin, t.dim(2), t.dim(3)});
    for (std::int64_t n = 0; n < t.dim(0); ++n) {
        for (std::int64_t c = c_begin; c < c_end; ++c) {
            for (std::int64_t h = 0; h < t.dim(2); ++h) {
                for (std::int64_t w = 0; w < t.dim(3); ++w) {
                    out.at4(n, c - c_begin, h, w) = t.at4(n, c, h, w);
                }
            }
        }
    }
    return out;
}

Tensor slice_height(const Tensor& t, std::int64_t h_begin, std::int64_t h_end) {
    require_rank4(t, "slice_height");
    if (h_begin < 0 || h_end <= h_begin || h_end > t.dim(2)) {
        throw std::invalid_argument("slice_height: bad row range");
    }
    Tensor out({t.dim(0), t.dim(1), h_end - h_begin, t.dim(3)});
    for (std::int64_t n = 0; n < t.dim(0); ++n) {
        for (std::int64_t c = 0; c < t.dim(1); ++c) {
            for (std::int64_t h = h_begin; h < h_end; ++h) {
                for (std::int64_t w = 0; w < t.dim(3); ++w) {
                    out.at4(n, c, h - h_begin, w) = t.at4(n, c, h, w);
                }
            }
        }
    }
    return out;
}

Tensor concat_channels(const std::vector<Tensor>& parts) {
    if (parts.empty()) {
        throw std::invalid_argument("concat_channels: no parts");
    }
    std::int64_t channels = 0;
    for (const Tensor& p : parts) {
        require_rank4(p, "concat_channels");
        if (p.dim(0) != parts[0].dim(0) || p.dim(2) != parts[0].dim(2) ||
            p.dim(3) != parts[0].dim(3)) {
            throw std::invalid_argument("concat_channels: extent mismatch");
        }
        channels += p.dim(1);
    }
    Tensor out({parts[0].dim(0), channels, parts[0].dim(2), parts[0].dim(3)});
    std::int64_t c_off = 0;
    for (const Tensor& p : parts) {
        for (std::int64_t n = 0; n < p.dim(0); ++n) {
            for (std::int64_t c = 0; c < p.dim(1); ++c) {
                for (std::int64_t h = 0; h < p.dim(2); ++h) {
                    for (std::int64_t w = 0; w < p.dim(3); ++w) {
                        out.at4(n, c_off + c, h, w) = p.at4(n, c, h, w);
                    }
                }
            }
        }
        c_off += p.dim(1);
    }
    return out;
}

Tensor concat_height(const Tensor& a, const Tensor& b) {
    require_rank4(a, "concat_height");
    require_rank4(b, "concat_height");
    if (a.dim(0) != b.dim(0) || a.dim(1) != b.dim(1) || a.dim(3) != b.dim(3)) {
        throw std::invalid_argument("concat_height: extent mismatch");
    }
    Tensor out({a.dim(0), a.dim(1), a.dim(2) + b.dim(2), a.dim(3)});
    for (std::int64_t n = 0; n < out.dim(0); ++n) {
        for (std::int64_t c = 0; c < out.dim(1); ++c) {
            for (std::int64_t h = 0; h < a.dim(2); ++h) {
                for (std::int64_t w = 0; w < out.dim(3); ++w) {
                    out.at4(n, c, h, w) = a.at4(n, c, h, w);
                }
            }
            for (std::int64_t h = 0; h < b.dim(2); ++h) {
                for (std::int64_t w = 0; w < out.dim(3); ++w) {
                    out.at4(n, c, a.dim(2) + h, w) = b.at4(n, c, h, w);
                }
            }
        }
    }
    return out;
}

Tensor transpose_hw(const Tensor& t) {
    require_rank4(t, "transpose_hw");
    Tensor out({t.dim(0), t.dim(1), t.dim(3), t.dim(2)});
    for (std::int64_t n = 0; n < t.dim(0); ++n) {
        for (std::int64_t c = 0; c < t.dim(1); ++c) {
            for (std::int64_t h = 0; h < t.dim(2); ++h) {
                for (std::int64_t w = 0; w < t.dim(3); ++w) {
                    out.at4(n, c, w, h) = t.at4(n, c, h, w);
                }
            }
        }
    }
    return out;
}

Tensor sum_channels(const Tensor& t) {
    require_rank4(t, "sum_channels");
    Tensor out({t.dim(0), 1, t.dim(2), t.dim(3)});
    for (std::int64_t n = 0; n < t.dim(0); ++n) {
        for (std::int64_t h = 0; h < t.dim(2); ++h) {
            for (std::int64_t w = 0; w < t.dim(3); ++w) {
                double s = 0;
                for (std::int64_t c = 0; c < t.dim(1); ++c) {
                    s += t.at4(n, c, h, w);
                }
                out.at4(n, 0, h, w) = s;
            }
        }
    }
    return out;
}

} // namespace hg
