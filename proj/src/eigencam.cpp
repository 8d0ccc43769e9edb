#include "hgkit/eigencam.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace hg {

namespace {

std::vector<double> multiply(const Matrix& a, const std::vector<double>& v) {
    std::vector<double> out(static_cast<std::size_t>(a.rows), 0.0);
    for (std::int64_t i = 0; i < a.rows; ++i) {
        double s = 0;
        for (std::int64_t j = 0; j < a.cols; ++j) {
            s += a.at(i, j) * v[static_cast<std::size_t>(j)];
        }
        out[static_cast<std::size_t>(i)] = s;
    }
    return out;
}

double norm2(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) {
        s += x * x;
    }
    return std::sqrt(s);
}

} // namespace

std::vector<double> principal_direction(const Matrix& m) {
    if (m.rows < 1 || m.cols < 1) {
        throw std::invalid_argument("principal_direction: empty matrix");
    }
    bool nonzero = false;
    for (double v : m.data) {
        if (v != 0.0) {
            nonzero = true;
            break;
        }
    }
    if (!nonzero) {
        throw std::invalid_argument("principal_direction: zero matrix");
    }

    const std::int64_t c = m.cols;
    Matrix gram(c, c); // m^T m
    for (std::int64_t i = 0; i < c; ++i) {
        for (std::int64_t j = i; j < c; ++j) {
            double s = 0;
            for (std::int64_t r = 0; r < m.rows; ++r) {
                s += m.at(r, i) * m.at(r, j);
            }
            gram.at(i, j) = s;
            gram.at(j, i) = s;
        }
    }

    std::vector<double> v(static_cast<std::size_t>(c),
                          1.0 / std::sqrt(static_cast<double>(c)));
    for (int iter = 0; iter < 1000; ++iter) {
        std::vector<double> next = multiply(gram, v);
        double n = norm2(next);
        if (n == 0.0) {
            // Start vector in the null space; restart from the first basis
            // vector the Gram matrix does not annihilate.
            bool found = false;
            for (std::int64_t k = 0; k < c && !found; ++k) {
                std::vector<double> basis(static_cast<std::size_t>(c), 0.0);
                basis[static_cast<std::size_t>(k)] = 1.0;
                next = multiply(gram, basis);
                n = norm2(next);
                found = n != 0.0;
            }
            if (!found) {
                throw std::invalid_argument("principal_direction: zero matrix");
            }
        }
        for (double& x : next) {
            x /= n;
        }
        double delta = 0;
        for (std::size_t k = 0; k < next.size(); ++k) {
            const double d = next[k] - v[k];
            delta += d * d;
        }
        v = std::move(next);
        if (std::sqrt(delta) < 1e-10) {
            break;
        }
    }

    double projection_sum = 0;
    for (std::int64_t r = 0; r < m.rows; ++r) {
        for (std::int64_t j = 0; j < c; ++j) {
            projection_sum += m.at(r, j) * v[static_cast<std::size_t>(j)];
        }
    }
    if (projection_sum < 0) {
        for (double& x : v) {
            x = -x;
        }
    }
    return v;
}

Heatmap eigen_cam(const Tensor& activation, std::int64_t out_h, std::int64_t out_w) {
    if (activation.rank() != 4 || activation.dim(0) != 1) {
        throw std::invalid_argument("eigen_cam: (1, C, H, W) activation required");
    }
    if (out_h < 1 || out_w < 1) {
        throw std::invalid_argument("eigen_cam: bad output extents");
    }
    const std::int64_t c = activation.dim(1);
    const std::int64_t h = activation.dim(2);
    const std::int64_t w = activation.dim(3);

    Heatmap map;
    map.height = out_h;
    map.width = out_w;
    map.values.assign(static_cast<std::size_t>(out_h * out_w), 0.0);

    Matrix m(h * w, c);
    bool nonzero = false;
    for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
            for (std::int64_t ch = 0; ch < c; ++ch) {
                const double v = activation.at4(0, ch, y, x);
                m.at(y * w + x, ch) = v;
                nonzero = nonzero || v != 0.0;
            }
        }
    }
    if (!nonzero) {
        map.degenerate = true;
        return map;
    }

    const std::vector<double> dir = principal_direction(m);
    std::vector<double> scores = multiply(m, dir);
    for (double& s : scores) {
        s = std::max(s, 0.0);
    }
    const auto [mn_it, mx_it] = std::minmax_element(scores.begin(), scores.end());
    const double mn = *mn_it, mx = *mx_it;
    if (mx == mn) {
        map.degenerate = true;
        return map;
    }
    for (double& s : scores) {
        s = (s - mn) / (mx - mn);
    }

    // Corner-aligned bilinear resize of the (h, w) score grid.
    for (std::int64_t oy = 0; oy < out_h; ++oy) {
        const double sy = out_h == 1 ? 0.0
                                     : static_cast<double>(oy) * static_cast<double>(h - 1) /
                                           static_cast<double>(out_h - 1);
        const std::int64_t y0 = std::min<std::int64_t>(static_cast<std::int64_t>(sy), h - 1);
        const std::int64_t y1 = std::min<std::int64_t>(y0 + 1, h - 1);
        const double fy = sy - static_cast<double>(y0);
        for (std::int64_t ox = 0; ox < out_w; ++ox) {
            const double sx = out_w == 1 ? 0.0
                                         : static_cast<double>(ox) * static_cast<double>(w - 1) /
                                               static_cast<double>(out_w - 1);
            const std::int64_t x0 = std::min<std::int64_t>(static_cast<std::int64_t>(sx), w - 1);
            const std::int64_t x1 = std::min<std::int64_t>(x0 + 1, w - 1);
            const double fx = sx - static_cast<double>(x0);
            const double top = scores[static_cast<std::size_t>(y0 * w + x0)] * (1 - fx) +
                               scores[static_cast<std::size_t>(y0 * w + x1)] * fx;
            const double bot = scores[static_cast<std::size_t>(y1 * w + x0)] * (1 - fx) +
                               scores[static_cast<std::size_t>(y1 * w + x1)] * fx;
            map.values[static_cast<std::size_t>(oy * out_w + ox)] = top * (1 - fy) + bot * fy;
        }
    }
    return map;
}

void write_pgm(const Heatmap& map, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out << "P5\n" << map.width << " " << map.height << "\n255\n";
    for (double v : map.values) {
        const auto byte = static_cast<unsigned char>(std::lround(255.0 * v));
        out.put(static_cast<char>(byte));
    }
    if (!out) {
        throw std::runtime_error("failed writing " + path.string());
    }
}

std::string heatmap_csv(const Heatmap& map) {
    std::string out;
    char buf[32];
    for (std::int64_t y = 0; y < map.height; ++y) {
        for (std::int64_t x = 0; x < map.width; ++x) {
            std::snprintf(buf, sizeof(buf), "%.9g", map.at(y, x));
            out += buf;
            out += x + 1 == map.width ? '\n' : ',';
        }
    }
    return out;
}

} // namespace hg
