#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hgkit/matrix.hpp"
#include "hgkit/tensor.hpp"

namespace hg {

/// Row-major heatmap with values in [0, 1]. Unless degenerate, the minimum
/// is 0 and the maximum is 1; degenerate maps are all zero.
struct Heatmap {
    std::int64_t height = 0;
    std::int64_t width = 0;
    std::vector<double> values;
    bool degenerate = false;

    double at(std::int64_t y, std::int64_t x) const {
        return values[static_cast<std::size_t>(y * width + x)];
    }
};

/// Dominant right singular vector of m, by power iteration on m^T m from the
/// fixed start (1/sqrt(C), ...), run until the iterate moves less than 1e-10
/// or 1000 iterations. Unit 2-norm; sign fixed so that sum(m v) >= 0.
/// Throws on an all-zero matrix.
std::vector<double> principal_direction(const Matrix& m);

/// Projects a (1, C, H, W) activation onto its principal direction, clamps
/// negatives, min-max normalizes, and bilinearly resizes (corner-aligned) to
/// (out_h, out_w). Zero or spatially constant activations yield the flagged
/// all-zero heatmap.
Heatmap eigen_cam(const Tensor& activation, std::int64_t out_h, std::int64_t out_w);

/// Binary PGM (P5), 8-bit, pixel = round(255 * value).
void write_pgm(const Heatmap& map, const std::filesystem::path& path);

std::string heatmap_csv(const Heatmap& map);

} // namespace hg
