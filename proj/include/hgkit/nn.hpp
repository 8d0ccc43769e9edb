#pragma once

#include "hgkit/tensor.hpp"

namespace hg {

/// How out-of-range taps are read. `zero` reads 0; `replicate` reads the
/// nearest border element, which keeps spatially constant maps constant.
enum class PadMode { zero, replicate };

/// 2-D convolution (cross-correlation, no kernel flip). Weight extents are
/// (out_c, in_c / groups, kh, kw); bias is empty or out_c long. Depthwise
/// convolution is groups == in_c == out_c.
struct ConvSpec {
    std::int64_t kh = 1, kw = 1;
    std::int64_t stride = 1;
    std::int64_t ph = 0, pw = 0;
    std::int64_t groups = 1;
    PadMode pad = PadMode::zero;
    Tensor weight;
    std::vector<double> bias;

    std::int64_t out_channels() const { return weight.dim(0); }
    std::int64_t in_channels() const { return weight.dim(1) * groups; }
    void validate() const;
};

/// Output extents are (N, out_c, (H + 2*ph - kh)/stride + 1,
/// (W + 2*pw - kw)/stride + 1); throws when the geometry yields an empty
/// output or the channel counts disagree with the spec.
Tensor conv2d(const Tensor& input, const ConvSpec& spec);

enum class Pool { max, avg, global_avg, row_avg, col_avg };

/// k/stride/pad apply to the windowed kinds only; the global and directional
/// kinds ignore them. `avg` divides by the full k*k window area, counting
/// padded cells; `max` never selects a zero-mode padding cell.
Tensor pool2d(const Tensor& input, Pool kind, std::int64_t k = 1,
              std::int64_t stride = 1, std::int64_t pad = 0,
              PadMode mode = PadMode::zero);

Tensor sigmoid(const Tensor& input);

/// Numerically stable softmax (max subtraction) along `axis`.
Tensor softmax(const Tensor& input, std::int64_t axis);

/// Normalizes each (sample, channel-group) block of a rank-4 tensor to zero
/// mean and unit population variance. No learned affine parameters.
Tensor group_norm(const Tensor& input, std::int64_t num_groups, double eps = 1e-5);

} // namespace hg
