#include "hgkit/emca.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "hgkit/rng.hpp"

namespace hg {

namespace {

ConvSpec make_conv(std::int64_t out_c, std::int64_t in_c, std::int64_t kh,
                   std::int64_t kw, std::int64_t groups, PadMode pad,
                   CounterRng& rng) {
    ConvSpec spec;
    spec.kh = kh;
    spec.kw = kw;
    spec.ph = (kh - 1) / 2;
    spec.pw = (kw - 1) / 2;
    spec.groups = groups;
    spec.pad = pad;
    spec.weight = Tensor({out_c, in_c / groups, kh, kw});
    const double fan_in = static_cast<double>(in_c / groups * kh * kw);
    const double fan_out = static_cast<double>(out_c / groups * kh * kw);
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (std::int64_t i = 0; i < spec.weight.size(); ++i) {
        spec.weight[i] = rng.uniform(-bound, bound);
    }
    spec.bias.assign(static_cast<std::size_t>(out_c), 0.0);
    return spec;
}

void check_square_conv(const ConvSpec& spec, std::int64_t channels, const char* what) {
    spec.validate();
    if (spec.in_channels() != channels || spec.out_channels() != channels) {
        throw std::invalid_argument(std::string(what) + ": channel count mismatch");
    }
}

} // namespace

std::int64_t default_group_count(std::int64_t channels) {
    return channels >= 8 && channels % 8 == 0 ? 8 : 1;
}

void EmaConfig::validate(std::int64_t channels) const {
    if (groups < 1 || channels % groups != 0) {
        throw std::invalid_argument("ema: channels not divisible by the group count");
    }
    const std::int64_t cg = channels / groups;
    check_square_conv(conv1x1, cg, "ema conv1x1");
    check_square_conv(conv3x3, cg, "ema conv3x3");
    if (conv1x1.kh != 1 || conv1x1.kw != 1 || conv3x3.kh != 3 || conv3x3.kw != 3) {
        throw std::invalid_argument("ema: kernel extents must be 1x1 and 3x3");
    }
    if (gn_groups < 1 || cg % gn_groups != 0) {
        throw std::invalid_argument("ema: bad normalization group count");
    }
}

void CaaConfig::validate(std::int64_t channels) const {
    if (band_k < 3 || band_k % 2 == 0) {
        throw std::invalid_argument("caa: band kernel must be odd and >= 3");
    }
    check_square_conv(reduce1x1, channels, "caa reduce1x1");
    check_square_conv(expand1x1, channels, "caa expand1x1");
    check_square_conv(band_1xk, channels, "caa band_1xk");
    check_square_conv(band_kx1, channels, "caa band_kx1");
    if (band_1xk.groups != channels || band_kx1.groups != channels) {
        throw std::invalid_argument("caa: band convolutions must be depthwise");
    }
    if (band_1xk.kh != 1 || band_1xk.kw != band_k || band_kx1.kh != band_k ||
        band_kx1.kw != 1) {
        throw std::invalid_argument("caa: band kernel extents disagree with band_k");
    }
}

EmaConfig ema_random(std::int64_t channels, std::int64_t groups, std::uint64_t seed) {
    if (groups < 1 || channels % groups != 0) {
        throw std::invalid_argument("ema: channels not divisible by the group count");
    }
    const std::int64_t cg = channels / groups;
    CounterRng rng(seed);
    EmaConfig cfg;
    cfg.groups = groups;
    cfg.conv1x1 = make_conv(cg, cg, 1, 1, 1, PadMode::zero, rng);
    cfg.conv3x3 = make_conv(cg, cg, 3, 3, 1, PadMode::replicate, rng);
    return cfg;
}

CaaConfig caa_random(std::int64_t channels, std::int64_t band_k, std::uint64_t seed) {
    if (band_k < 3 || band_k % 2 == 0) {
        throw std::invalid_argument("caa: band kernel must be odd and >= 3");
    }
    CounterRng rng(seed);
    CaaConfig cfg;
    cfg.band_k = band_k;
    cfg.reduce1x1 = make_conv(channels, channels, 1, 1, 1, PadMode::zero, rng);
    cfg.band_1xk = make_conv(channels, channels, 1, band_k, channels, PadMode::replicate, rng);
    cfg.band_kx1 = make_conv(channels, channels, band_k, 1, channels, PadMode::replicate, rng);
    cfg.expand1x1 = make_conv(channels, channels, 1, 1, 1, PadMode::zero, rng);
    return cfg;
}

Tensor ema_forward(const Tensor& input, const EmaConfig& cfg) {
    if (input.rank() != 4) {
        throw std::invalid_argument("ema_forward: rank-4 input required");
    }
    cfg.validate(input.dim(1));
    const std::int64_t channels = input.dim(1);
    const std::int64_t cg = channels / cfg.groups;

    std::vector<Tensor> outputs;
    outputs.reserve(static_cast<std::size_t>(cfg.groups));
    for (std::int64_t g = 0; g < cfg.groups; ++g) {
        const Tensor xg = slice_channels(input, g * cg, (g + 1) * cg);

        // Directional pooling branch: both pooled strips pass through the
        // shared 1x1 convolution as one (H + W) column, then split back into
        // a height gate and a width gate.
        const Tensor pool_h = pool2d(xg, Pool::row_avg);                 // (N, cg, H, 1)
        const Tensor pool_w = transpose_hw(pool2d(xg, Pool::col_avg));   // (N, cg, W, 1)
        const Tensor mixed = conv2d(concat_height(pool_h, pool_w), cfg.conv1x1);
        const std::int64_t h = xg.dim(2);
        const Tensor gate_h = sigmoid(slice_height(mixed, 0, h));
        const Tensor gate_w = sigmoid(transpose_hw(slice_height(mixed, h, mixed.dim(2))));
        Tensor weighted = pointwise(xg, gate_h, PointwiseOp::mul);
        weighted = pointwise(weighted, gate_w, PointwiseOp::mul);
        const Tensor x1 = group_norm(weighted, cfg.gn_groups, cfg.gn_eps);

        const Tensor x2 = conv2d(xg, cfg.conv3x3);

        // Cross-spatial stage: channel softmax of each branch's pooled
        // descriptor contracted against the opposite branch.
        const Tensor a1 = softmax(pool2d(x1, Pool::global_avg), 1); // (N, cg, 1, 1)
        const Tensor a2 = softmax(pool2d(x2, Pool::global_avg), 1);
        const Tensor map_a = sum_channels(pointwise(x2, a1, PointwiseOp::mul));
        const Tensor map_b = sum_channels(pointwise(x1, a2, PointwiseOp::mul));
        const Tensor gate = sigmoid(pointwise(map_a, map_b, PointwiseOp::add));
        outputs.push_back(pointwise(xg, gate, PointwiseOp::mul));
    }
    return concat_channels(outputs);
}

Tensor caa_attention(const Tensor& input, const CaaConfig& cfg) {
    if (input.rank() != 4) {
        throw std::invalid_argument("caa_attention: rank-4 input required");
    }
    cfg.validate(input.dim(1));
    const Tensor pooled = pool2d(input, Pool::avg, 7, 1, 3, PadMode::replicate);
    const Tensor f1 = conv2d(pooled, cfg.reduce1x1);
    const Tensor f2 = conv2d(conv2d(f1, cfg.band_1xk), cfg.band_kx1);
    return sigmoid(conv2d(f2, cfg.expand1x1));
}

Tensor caa_forward(const Tensor& input, const CaaConfig& cfg) {
    return pointwise(caa_attention(input, cfg), input, PointwiseOp::mul);
}

Tensor emca_forward(const Tensor& input, const EmaConfig& ema, const CaaConfig& caa) {
    return caa_forward(ema_forward(input, ema), caa);
}

namespace {

nlohmann::json tensor_to_json(const Tensor& t) {
    return {{"dims", t.dims()},
            {"data", std::vector<double>(t.data().begin(), t.data().end())}};
}

Tensor tensor_from_json(const nlohmann::json& j) {
    return Tensor(j.at("dims").get<std::vector<std::int64_t>>(),
                  j.at("data").get<std::vector<double>>());
}

nlohmann::json conv_to_json(const ConvSpec& s) {
    return {{"kh", s.kh},       {"kw", s.kw},
            {"stride", s.stride}, {"ph", s.ph},
            {"pw", s.pw},       {"groups", s.groups},
            {"pad", s.pad == PadMode::replicate ? "replicate" : "zero"},
            {"weight", tensor_to_json(s.weight)},
            {"bias", s.bias}};
}

ConvSpec conv_from_json(const nlohmann::json& j) {
    ConvSpec s;
    s.kh = j.at("kh").get<std::int64_t>();
    s.kw = j.at("kw").get<std::int64_t>();
    s.stride = j.at("stride").get<std::int64_t>();
    s.ph = j.at("ph").get<std::int64_t>();
    s.pw = j.at("pw").get<std::int64_t>();
    s.groups = j.at("groups").get<std::int64_t>();
    s.pad = j.at("pad").get<std::string>() == "replicate" ? PadMode::replicate
                                                          : PadMode::zero;
    s.weight = tensor_from_json(j.at("weight"));
    s.bias = j.at("bias").get<std::vector<double>>();
    s.validate();
    return s;
}

} // namespace

std::string emca_weights_to_json(const EmaConfig& ema, const CaaConfig& caa) {
    nlohmann::json j;
    j["ema"] = {{"groups", ema.groups},
                {"gn_groups", ema.gn_groups},
                {"gn_eps", ema.gn_eps},
                {"conv1x1", conv_to_json(ema.conv1x1)},
                {"conv3x3", conv_to_json(ema.conv3x3)}};
    j["caa"] = {{"band_k", caa.band_k},
                {"reduce1x1", conv_to_json(caa.reduce1x1)},
                {"band_1xk", conv_to_json(caa.band_1xk)},
                {"band_kx1", conv_to_json(caa.band_kx1)},
                {"expand1x1", conv_to_json(caa.expand1x1)}};
    return j.dump(2) + "\n";
}

std::pair<EmaConfig, CaaConfig> emca_weights_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    EmaConfig ema;
    ema.groups = j.at("ema").at("groups").get<std::int64_t>();
    ema.gn_groups = j.at("ema").at("gn_groups").get<std::int64_t>();
    ema.gn_eps = j.at("ema").at("gn_eps").get<double>();
    ema.conv1x1 = conv_from_json(j.at("ema").at("conv1x1"));
    ema.conv3x3 = conv_from_json(j.at("ema").at("conv3x3"));
    CaaConfig caa;
    caa.band_k = j.at("caa").at("band_k").get<std::int64_t>();
    caa.reduce1x1 = conv_from_json(j.at("caa").at("reduce1x1"));
    caa.band_1xk = conv_from_json(j.at("caa").at("band_1xk"));
    caa.band_kx1 = conv_from_json(j.at("caa").at("band_kx1"));
    caa.expand1x1 = conv_from_json(j.at("caa").at("expand1x1"));
    return {std::move(ema), std::move(caa)};
}

} // namespace hg
