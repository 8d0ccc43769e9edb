#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace hg {

/// Dense row-major tensor of 64-bit reals, rank 1 to 4. Rank-4 tensors are
/// interpreted as (N, C, H, W). All extents are >= 1 and the element count
/// always equals the product of the extents.
class Tensor {
public:
    Tensor() = default;

    /// Zero-filled tensor with the given extents.
    explicit Tensor(std::vector<std::int64_t> dims);

    /// Tensor wrapping `values`; throws std::invalid_argument when the value
    /// count does not match the extents or an extent is < 1.
    Tensor(std::vector<std::int64_t> dims, std::vector<double> values);

    std::int64_t rank() const { return static_cast<std::int64_t>(dims_.size()); }
    std::int64_t dim(std::int64_t axis) const;
    std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
    const std::vector<std::int64_t>& dims() const { return dims_; }

    double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }
    double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }

    /// Rank-4 element access in (N, C, H, W) order.
    double at4(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) const;
    double& at4(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w);

    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }

    bool same_dims(const Tensor& other) const { return dims_ == other.dims_; }
    bool all_finite() const;

private:
    std::vector<std::int64_t> dims_;
    std::vector<double> data_;
};

enum class PointwiseOp { mul, add };

/// Elementwise combine with two-sided broadcasting: ranks must match and each
/// axis extent must either agree or be 1 on one side.
Tensor pointwise(const Tensor& a, const Tensor& b, PointwiseOp op);

Tensor tensor_full(std::vector<std::int64_t> dims, double value);

/// True when dims match and every element is bit-identical.
bool bitwise_equal(const Tensor& a, const Tensor& b);

// Rank-4 shape utilities used by the attention blocks.
Tensor slice_channels(const Tensor& t, std::int64_t c_begin, std::int64_t c_end);
Tensor slice_height(const Tensor& t, std::int64_t h_begin, std::int64_t h_end);
Tensor concat_channels(const std::vector<Tensor>& parts);
Tensor concat_height(const Tensor& a, const Tensor& b);
Tensor transpose_hw(const Tensor& t);
Tensor sum_channels(const Tensor& t);

} // namespace hg
