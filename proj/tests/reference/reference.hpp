#pragma once

// Straight-line serial reference implementations used as oracles by the test
// and acceptance suites, plus as the baseline of the kernel benchmark. They
// share no compute path with the library kernels they check.

#include <cstdint>
#include <span>
#include <vector>

#include "hgkit/emca.hpp"
#include "hgkit/hypergraph.hpp"
#include "hgkit/losses.hpp"
#include "hgkit/matrix.hpp"
#include "hgkit/metrics.hpp"
#include "hgkit/nn.hpp"
#include "hgkit/tensor.hpp"

namespace hgref {

/// Convolution via an explicitly padded copy of the input.
hg::Tensor conv2d(const hg::Tensor& input, const hg::ConvSpec& spec);

/// Grouped attention stage coded as one straight-line pass. When `gates` is
/// non-null, every sigmoid output produced along the way is appended to it.
hg::Tensor ema_forward(const hg::Tensor& input, const hg::EmaConfig& cfg,
                       std::vector<double>* gates = nullptr);

/// Context stage coded as one straight-line pass.
hg::Tensor caa_forward(const hg::Tensor& input, const hg::CaaConfig& cfg,
                       std::vector<double>* gates = nullptr);

/// Dense-matrix propagation D_v^-1 H D_e^-1 H^T X theta, with the degree
/// diagonals recomputed from the incidence matrix itself.
hg::Matrix propagate_dense(const hg::Matrix& x, const hg::Hypergraph& g,
                           const hg::Matrix& theta);

/// Dominant eigenvector of a symmetric matrix by the cyclic Jacobi method.
std::vector<double> jacobi_dominant_eigenvector(const hg::Matrix& sym);

/// Area under the precision-recall envelope with the interpolated precision
/// found by a brute-force forward scan per point.
double ap_exhaustive(std::span<const char> flags, std::int64_t n_gt);

/// CIoU box loss value computed literally, without gradient plumbing or
/// epsilon stabilizers.
double ciou_loss_value(const hg::BBox& pred, const hg::BBox& gt);

struct CutPoint {
    double precision = 0;
    double recall = 0;
};

/// Single-class P/R points obtained by re-running the greedy matching from
/// scratch at every confidence cut, plus the envelope area over them.
struct CutCurve {
    std::vector<CutPoint> points;
    double ap = 0;
};
CutCurve evaluate_by_cuts(std::span<const hg::Detection> dets,
                          std::span<const hg::GroundTruth> gts, double iou_thresh);

} // namespace hgref
