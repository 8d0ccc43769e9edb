#include "hgkit/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hgkit/parallel.hpp"

namespace hg {

void ConvSpec::validate() const {
    if (kh < 1 || kw < 1 || stride < 1 || ph < 0 || pw < 0 || groups < 1) {
        throw std::invalid_argument("conv2d: bad kernel geometry");
    }
    if (weight.rank() != 4 || weight.dim(2) != kh || weight.dim(3) != kw) {
        throw std::invalid_argument("conv2d: weight extents disagree with the spec");
    }
    if (out_channels() % groups != 0) {
        throw std::invalid_argument("conv2d: out channels not divisible by groups");
    }
    if (!bias.empty() && static_cast<std::int64_t>(bias.size()) != out_channels()) {
        throw std::invalid_argument("conv2d: bias length must equal out channels");
    }
}

Tensor conv2d(const Tensor& input, const ConvSpec& spec) {
    spec.validate();
    if (input.rank() != 4) {
        throw std::invalid_argument("conv2d: rank-4 input required");
    }
    const std::int64_t batch = input.dim(0), in_c = input.dim(1);
    const std::int64_t h = input.dim(2), w = input.dim(3);
    if (in_c != spec.in_channels()) {
        throw std::invalid_argument("conv2d: input channel count disagrees with the spec");
    }
    if (in_c % spec.groups != 0) {
        throw std::invalid_argument("conv2d: in channels not divisible by groups");
    }
    const std::int64_t oh = (h + 2 * spec.ph - spec.kh) / spec.stride + 1;
    const std::int64_t ow = (w + 2 * spec.pw - spec.kw) / spec.stride + 1;
    if (h + 2 * spec.ph < spec.kh || w + 2 * spec.pw < spec.kw || oh < 1 || ow < 1) {
        throw std::invalid_argument("conv2d: geometry yields an empty output");
    }

    const std::int64_t out_c = spec.out_channels();
    const std::int64_t in_per_group = in_c / spec.groups;
    const std::int64_t out_per_group = out_c / spec.groups;
    Tensor out({batch, out_c, oh, ow});

    const bool replicate = spec.pad == PadMode::replicate;
    const std::int64_t rows = batch * out_c * oh;
#if defined(_OPENMP)
#pragma omp parallel for schedule(static) num_threads(hg::thread_count())
#endif
    for (std::int64_t row = 0; row < rows; ++row) {
        const std::int64_t n = row / (out_c * oh);
        const std::int64_t oc = (row / oh) % out_c;
        const std::int64_t oy = row % oh;
        const std::int64_t g = oc / out_per_group;
        const std::int64_t ic0 = g * in_per_group;
        const std::int64_t y0 = oy * spec.stride - spec.ph;
        // Zero padding contributes nothing; restrict the tap ranges instead
        // of testing every tap. Replicate mode clamps and uses full ranges.
        const std::int64_t ky_lo = replicate ? 0 : std::max<std::int64_t>(0, -y0);
        const std::int64_t ky_hi = replicate ? spec.kh : std::min<std::int64_t>(spec.kh, h - y0);
        for (std::int64_t ox = 0; ox < ow; ++ox) {
            const std::int64_t x0 = ox * spec.stride - spec.pw;
            const std::int64_t kx_lo = replicate ? 0 : std::max<std::int64_t>(0, -x0);
            const std::int64_t kx_hi = replicate ? spec.kw : std::min<std::int64_t>(spec.kw, w - x0);
            double acc = spec.bias.empty() ? 0.0 : spec.bias[static_cast<std::size_t>(oc)];
            for (std::int64_t icg = 0; icg < in_per_group; ++icg) {
                const double* plane = input.data().data() +
                                      ((n * in_c + ic0 + icg) * h) * w;
                const double* kernel = spec.weight.data().data() +
                                       ((oc * in_per_group + icg) * spec.kh) * spec.kw;
                for (std::int64_t ky = ky_lo; ky < ky_hi; ++ky) {
                    const std::int64_t iy =
                        replicate ? std::clamp<std::int64_t>(y0 + ky, 0, h - 1) : y0 + ky;
                    const double* src = plane + iy * w;
                    const double* krow = kernel + ky * spec.kw;
                    if (replicate) {
                        for (std::int64_t kx = 0; kx < spec.kw; ++kx) {
                            const std::int64_t ix =
                                std::clamp<std::int64_t>(x0 + kx, 0, w - 1);
                            acc += krow[kx] * src[ix];
                        }
                    } else {
                        for (std::int64_t kx = kx_lo; kx < kx_hi; ++kx) {
                            acc += krow[kx] * src[x0 + kx];
                        }
                    }
                }
            }
            out.at4(n, oc, oy, ox) = acc;
        }
    }
    return out;
}

Tensor pool2d(const Tensor& input, Pool kind, std::int64_t k, std::int64_t stride,
              std::int64_t pad, PadMode mode) {
    if (input.rank() != 4) {
        throw std::invalid_argument("pool2d: rank-4 input required");
    }
    const std::int64_t batch = input.dim(0), channels = input.dim(1);
    const std::int64_t h = input.dim(2), w = input.dim(3);

    if (kind == Pool::global_avg || kind == Pool::row_avg || kind == Pool::col_avg) {
        const std::int64_t oh = kind == Pool::col_avg ? 1 : (kind == Pool::row_avg ? h : 1);
        const std::int64_t ow = kind == Pool::row_avg ? 1 : (kind == Pool::col_avg ? w : 1);
        Tensor out({batch, channels, oh, ow});
        for (std::int64_t n = 0; n < batch; ++n) {
            for (std::int64_t c = 0; c < channels; ++c) {
                if (kind == Pool::global_avg) {
                    double s = 0;
                    for (std::int64_t y = 0; y < h; ++y) {
                        for (std::int64_t x = 0; x < w; ++x) {
                            s += input.at4(n, c, y, x);
                        }
                    }
                    out.at4(n, c, 0, 0) = s / static_cast<double>(h * w);
                } else if (kind == Pool::row_avg) {
                    for (std::int64_t y = 0; y < h; ++y) {
                        double s = 0;
                        for (std::int64_t x = 0; x < w; ++x) {
                            s += input.at4(n, c, y, x);
                        }
                        out.at4(n, c, y, 0) = s / static_cast<double>(w);
                    }
                } else {
                    for (std::int64_t x = 0; x < w; ++x) {
                        double s = 0;
                        for (std::int64_t y = 0; y < h; ++y) {
                            s += input.at4(n, c, y, x);
                        }
                        out.at4(n, c, 0, x) = s / static_cast<double>(h);
                    }
                }
            }
        }
        return out;
    }

    if (k < 1 || stride < 1 || pad < 0 || pad > k - 1) {
        throw std::invalid_argument("pool2d: bad window geometry");
    }
    const std::int64_t oh = (h + 2 * pad - k) / stride + 1;
    const std::int64_t ow = (w + 2 * pad - k) / stride + 1;
    if (h + 2 * pad < k || w + 2 * pad < k || oh < 1 || ow < 1) {
        throw std::invalid_argument("pool2d: geometry yields an empty output");
    }
    Tensor out({batch, channels, oh, ow});

    const std::int64_t planes = batch * channels;
#if defined(_OPENMP)
#pragma omp parallel for schedule(static) num_threads(hg::thread_count())
#endif
    for (std::int64_t plane = 0; plane < planes; ++plane) {
        const std::int64_t n = plane / channels;
        const std::int64_t c = plane % channels;
        for (std::int64_t oy = 0; oy < oh; ++oy) {
            for (std::int64_t ox = 0; ox < ow; ++ox) {
                if (kind == Pool::max) {
                    double best = -std::numeric_limits<double>::infinity();
                    for (std::int64_t ky = 0; ky < k; ++ky) {
                        for (std::int64_t kx = 0; kx < k; ++kx) {
                            std::int64_t iy = oy * stride - pad + ky;
                            std::int64_t ix = ox * stride - pad + kx;
                            if (mode == PadMode::replicate) {
                                iy = std::clamp<std::int64_t>(iy, 0, h - 1);
                                ix = std::clamp<std::int64_t>(ix, 0, w - 1);
                            } else if (iy < 0 || iy >= h || ix < 0 || ix >= w) {
                                continue;
                            }
                            best = std::max(best, input.at4(n, c, iy, ix));
                        }
                    }
                    out.at4(n, c, oy, ox) = best;
                } else {
                    double s = 0;
                    for (std::int64_t ky = 0; ky < k; ++ky) {
                        for (std::int64_t kx = 0; kx < k; ++kx) {
                            std::int64_t iy = oy * stride - pad + ky;
                            std::int64_t ix = ox * stride - pad + kx;
                            if (mode == PadMode::replicate) {
                                iy = std::clamp<std::int64_t>(iy, 0, h - 1);
                                ix = std::clamp<std::int64_t>(ix, 0, w - 1);
                            } else if (iy < 0 || iy >= h || ix < 0 || ix >= w) {
                                continue;
                            }
                            s += input.at4(n, c, iy, ix);
                        }
                    }
                    out.at4(n, c, oy, ox) = s / static_cast<double>(k * k);
                }
            }
        }
    }
    return out;
}

Tensor sigmoid(const Tensor& input) {
    Tensor out = input;
    for (std::int64_t i = 0; i < out.size(); ++i) {
        out[i] = 1.0 / (1.0 + std::exp(-out[i]));
    }
    return out;
}

Tensor softmax(const Tensor& input, std::int64_t axis) {
    if (axis < 0 || axis >= input.rank()) {
        throw std::invalid_argument("softmax: axis out of range");
    }
    // Walk every fiber along `axis`: outer indices before it, inner after.
    std::int64_t axis_len = input.dim(axis);
    std::int64_t inner = 1, outer = 1;
    for (std::int64_t i = axis + 1; i < input.rank(); ++i) {
        inner *= input.dim(i);
    }
    for (std::int64_t i = 0; i < axis; ++i) {
        outer *= input.dim(i);
    }
    Tensor out = input;
    for (std::int64_t o = 0; o < outer; ++o) {
        for (std::int64_t in = 0; in < inner; ++in) {
            const std::int64_t base = o * axis_len * inner + in;
            double mx = -std::numeric_limits<double>::infinity();
            for (std::int64_t a = 0; a < axis_len; ++a) {
                mx = std::max(mx, out[base + a * inner]);
            }
            double sum = 0;
            for (std::int64_t a = 0; a < axis_len; ++a) {
                const double e = std::exp(out[base + a * inner] - mx);
                out[base + a * inner] = e;
                sum += e;
            }
            for (std::int64_t a = 0; a < axis_len; ++a) {
                out[base + a * inner] /= sum;
            }
        }
    }
    return out;
}

Tensor group_norm(const Tensor& input, std::int64_t num_groups, double eps) {
    if (input.rank() != 4) {
        throw std::invalid_argument("group_norm: rank-4 input required");
    }
    if (num_groups < 1 || input.dim(1) % num_groups != 0) {
        throw std::invalid_argument("group_norm: channels not divisible by group count");
    }
    const std::int64_t batch = input.dim(0), channels = input.dim(1);
    const std::int64_t h = input.dim(2), w = input.dim(3);
    const std::int64_t per_group = channels / num_groups;
    const double count = static_cast<double>(per_group * h * w);
    Tensor out = input;

    const std::int64_t blocks = batch * num_groups;
#if defined(_OPENMP)
#pragma omp parallel for schedule(static) num_threads(hg::thread_count())
#endif
    for (std::int64_t blk = 0; blk < blocks; ++blk) {
        const std::int64_t n = blk / num_groups;
        const std::int64_t g = blk % num_groups;
        const std::int64_t c0 = g * per_group;
        double mean = 0;
        for (std::int64_t c = c0; c < c0 + per_group; ++c) {
            for (std::int64_t y = 0; y < h; ++y) {
                for (std::int64_t x = 0; x < w; ++x) {
                    mean += input.at4(n, c, y, x);
                }
            }
        }
        mean /= count;
        double var = 0;
        for (std::int64_t c = c0; c < c0 + per_group; ++c) {
            for (std::int64_t y = 0; y < h; ++y) {
                for (std::int64_t x = 0; x < w; ++x) {
                    const double d = input.at4(n, c, y, x) - mean;
                    var += d * d;
                }
            }
        }
        var /= count;
        const double inv = 1.0 / std::sqrt(var + eps);
        for (std::int64_t c = c0; c < c0 + per_group; ++c) {
            for (std::int64_t y = 0; y < h; ++y) {
                for (std::int64_t x = 0; x < w; ++x) {
                    out.at4(n, c, y, x) = (input.at4(n, c, y, x) - mean) * inv;
                }
            }
        }
    }
    return out;
}

} // namespace hg
