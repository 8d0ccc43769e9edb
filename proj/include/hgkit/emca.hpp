#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "hgkit/nn.hpp"
#include "hgkit/tensor.hpp"

namespace hg {

/// Grouped multi-scale attention stage. The two convolutions act on C/g
/// channels and are shared across the g groups. Spatial taps use replicate
/// padding so a spatially constant map stays constant through the stage.
struct EmaConfig {
    std::int64_t groups = 1;    // g; must divide the channel count
    std::int64_t gn_groups = 1; // groups of the internal normalization
    double gn_eps = 1e-5;
    ConvSpec conv1x1; // C/g -> C/g, applied to the pooled (H+W) strip
    ConvSpec conv3x3; // C/g -> C/g, pad 1

    void validate(std::int64_t channels) const;
};

/// Context stage: 7x7 mean pool, channel mix, orthogonal 1xk / kx1 depthwise
/// band convolutions, then a sigmoid gate multiplied into the input.
struct CaaConfig {
    std::int64_t band_k = 11; // odd, >= 3
    ConvSpec reduce1x1;       // C -> C, after the pool
    ConvSpec band_1xk;        // depthwise 1 x k
    ConvSpec band_kx1;        // depthwise k x 1
    ConvSpec expand1x1;       // C -> C, before the sigmoid

    void validate(std::int64_t channels) const;
};

/// 8 when the channel count allows it, otherwise 1.
std::int64_t default_group_count(std::int64_t channels);

/// Glorot-uniform weights (zero biases) drawn from the counter RNG stream of
/// `seed` in declaration order.
EmaConfig ema_random(std::int64_t channels, std::int64_t groups, std::uint64_t seed);
CaaConfig caa_random(std::int64_t channels, std::int64_t band_k, std::uint64_t seed);

Tensor ema_forward(const Tensor& input, const EmaConfig& cfg);

/// The sigmoid gate of the context stage, same extents as the input.
Tensor caa_attention(const Tensor& input, const CaaConfig& cfg);
Tensor caa_forward(const Tensor& input, const CaaConfig& cfg);

/// caa_forward(ema_forward(input)).
Tensor emca_forward(const Tensor& input, const EmaConfig& ema, const CaaConfig& caa);

std::string emca_weights_to_json(const EmaConfig& ema, const CaaConfig& caa);
std::pair<EmaConfig, CaaConfig> emca_weights_from_json(const std::string& text);

} // namespace hg
