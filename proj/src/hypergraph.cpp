#include "hgkit/hypergraph.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "hgkit/parallel.hpp"
#include "hgkit/rng.hpp"

namespace hg {

const char* metric_name(Metric m) {
    switch (m) {
        case Metric::manhattan: return "manhattan";
        case Metric::euclidean: return "euclidean";
        case Metric::chebyshev: return "chebyshev";
        case Metric::gaussian_kernel: return "gaussian";
    }
    return "?";
}

Metric metric_from_name(const std::string& name) {
    if (name == "manhattan") return Metric::manhattan;
    if (name == "euclidean") return Metric::euclidean;
    if (name == "chebyshev") return Metric::chebyshev;
    if (name == "gaussian" || name == "gaussian_kernel") return Metric::gaussian_kernel;
    throw std::invalid_argument("unknown metric '" + name + "'");
}

void MetricSpec::validate() const {
    if (kind == Metric::gaussian_kernel) {
        if (!(tau > 0.0 && tau < 1.0)) {
            throw std::invalid_argument("gaussian metric: tau must lie in (0, 1)");
        }
        if (!(sigma > 0.0)) {
            throw std::invalid_argument("gaussian metric: sigma must be positive");
        }
    } else if (!(delta > 0.0)) {
        throw std::invalid_argument("distance metric: delta must be positive");
    }
}

std::int64_t Hypergraph::incidence_count() const {
    return std::accumulate(edge_degree.begin(), edge_degree.end(), std::int64_t{0});
}

NodeSet gridize(const Tensor& feature_map) {
    if (feature_map.rank() != 4) {
        throw std::invalid_argument("gridize: rank-4 map required");
    }
    if (feature_map.dim(0) != 1) {
        throw std::invalid_argument("gridize: batch extent must be 1");
    }
    const std::int64_t c = feature_map.dim(1);
    const std::int64_t h = feature_map.dim(2);
    const std::int64_t w = feature_map.dim(3);
    NodeSet nodes;
    nodes.features = Matrix(h * w, c);
    for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
            for (std::int64_t ch = 0; ch < c; ++ch) {
                nodes.features.at(y * w + x, ch) = feature_map.at4(0, ch, y, x);
            }
        }
    }
    return nodes;
}

double pair_distance(const Matrix& features, std::int64_t i, std::int64_t j, Metric kind) {
    const double* a = features.data.data() + i * features.cols;
    const double* b = features.data.data() + j * features.cols;
    const std::int64_t c = features.cols;
    switch (kind) {
        case Metric::manhattan: {
            double s = 0;
            for (std::int64_t d = 0; d < c; ++d) {
                s += std::abs(a[d] - b[d]);
            }
            return s;
        }
        case Metric::euclidean: {
            double s = 0;
            for (std::int64_t d = 0; d < c; ++d) {
                const double t = a[d] - b[d];
                s += t * t;
            }
            return std::sqrt(s);
        }
        case Metric::chebyshev: {
            double s = 0;
            for (std::int64_t d = 0; d < c; ++d) {
                s = std::max(s, std::abs(a[d] - b[d]));
            }
            return s;
        }
        case Metric::gaussian_kernel:
            break;
    }
    throw std::invalid_argument("pair_distance: gaussian kernel is a similarity, not a distance");
}

double gaussian_similarity(const Matrix& features, std::int64_t i, std::int64_t j,
                           double sigma) {
    const double d = pair_distance(features, i, j, Metric::euclidean);
    return std::exp(-(d * d) / (2.0 * sigma * sigma));
}

namespace {

// The one membership predicate both construction strategies share. The
// Euclidean and Gaussian rules are evaluated on squared distances (the
// Gaussian threshold exp(-d^2 / 2s^2) > tau becomes d^2 < 2 s^2 ln(1/tau)),
// and the nonnegative accumulations bail out once the bound is exceeded.
struct MembershipRule {
    Metric kind;
    double bound; // delta, delta^2, or the gaussian squared radius

    explicit MembershipRule(const MetricSpec& m) : kind(m.kind) {
        switch (m.kind) {
            case Metric::manhattan:
            case Metric::chebyshev:
                bound = m.delta;
                break;
            case Metric::euclidean:
                bound = m.delta * m.delta;
                break;
            case Metric::gaussian_kernel:
                bound = 2.0 * m.sigma * m.sigma * std::log(1.0 / m.tau);
                break;
        }
    }

    bool admits(const double* a, const double* b, std::int64_t c) const {
        double s = 0; // branchless accumulations keep the loop vectorizable
        if (kind == Metric::manhattan) {
            for (std::int64_t d = 0; d < c; ++d) {
                s += std::abs(a[d] - b[d]);
            }
        } else if (kind == Metric::chebyshev) {
            for (std::int64_t d = 0; d < c; ++d) {
                s = std::max(s, std::abs(a[d] - b[d]));
            }
        } else { // euclidean and gaussian: squared distance
            for (std::int64_t d = 0; d < c; ++d) {
                const double t = a[d] - b[d];
                s += t * t;
            }
        }
        return s < bound;
    }

    bool admits(const Matrix& f, std::int64_t center, std::int64_t candidate) const {
        return admits(f.data.data() + center * f.cols,
                      f.data.data() + candidate * f.cols, f.cols);
    }
};

void fill_degrees(Hypergraph& g) {
    g.edge_degree.assign(g.edges.size(), 0);
    g.node_degree.assign(static_cast<std::size_t>(g.node_count), 0);
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
        g.edge_degree[e] = static_cast<std::int64_t>(g.edges[e].size());
        for (std::int32_t v : g.edges[e]) {
            ++g.node_degree[static_cast<std::size_t>(v)];
        }
    }
}

// Radius such that membership implies every per-dimension gap is below it.
// For the Gaussian kernel, sim > tau maps to an equivalent Euclidean ball.
double prune_radius(const MetricSpec& m) {
    if (m.kind == Metric::gaussian_kernel) {
        return m.sigma * std::sqrt(2.0 * std::log(1.0 / m.tau));
    }
    return m.delta;
}

} // namespace

Hypergraph build_hypergraph_dense(const NodeSet& nodes, const MetricSpec& metric) {
    metric.validate();
    const std::int64_t n = nodes.count();
    if (n < 1) {
        throw std::invalid_argument("build_hypergraph: empty node set");
    }
    const MembershipRule rule(metric);
    Hypergraph g;
    g.node_count = n;
    g.edges.resize(static_cast<std::size_t>(n));

#if defined(_OPENMP)
#pragma omp parallel for schedule(static) num_threads(hg::thread_count())
#endif
    for (std::int64_t i = 0; i < n; ++i) {
        std::vector<std::int32_t>& members = g.edges[static_cast<std::size_t>(i)];
        for (std::int64_t j = 0; j < n; ++j) {
            if (rule.admits(nodes.features, i, j)) {
                members.push_back(static_cast<std::int32_t>(j));
            }
        }
    }
    fill_degrees(g);
    return g;
}

Hypergraph build_hypergraph(const NodeSet& nodes, const MetricSpec& metric) {
    metric.validate();
    const std::int64_t n = nodes.count();
    if (n < 1) {
        throw std::invalid_argument("build_hypergraph: empty node set");
    }
    const std::int64_t c = nodes.dim();
    const Matrix& f = nodes.features;

    // Sweep along the dimension with the widest spread; candidate pairs must
    // be within the radius along it. The 1e-9 slack absorbs rounding in the
    // distance accumulation, keeping the pruning a strict superset of the
    // exact predicate.
    std::int64_t best_dim = 0;
    double best_spread = -1;
    for (std::int64_t d = 0; d < c; ++d) {
        double lo = f.at(0, d), hi = f.at(0, d);
        for (std::int64_t i = 1; i < n; ++i) {
            lo = std::min(lo, f.at(i, d));
            hi = std::max(hi, f.at(i, d));
        }
        if (hi - lo > best_spread) {
            best_spread = hi - lo;
            best_dim = d;
        }
    }
    const MembershipRule rule(metric);
    const double radius = prune_radius(metric) * (1.0 + 1e-9);

    std::vector<std::int32_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
        return f.at(a, best_dim) < f.at(b, best_dim);
    });
    // Features copied into sweep order so the window scan reads contiguous
    // rows; sorted_coord[k] is the sweep coordinate of sweep position k.
    std::vector<double> sorted_coord(static_cast<std::size_t>(n));
    Matrix sweep_feat(n, c);
    for (std::int64_t k = 0; k < n; ++k) {
        const std::int32_t src = order[static_cast<std::size_t>(k)];
        sorted_coord[static_cast<std::size_t>(k)] = f.at(src, best_dim);
        for (std::int64_t d = 0; d < c; ++d) {
            sweep_feat.at(k, d) = f.at(src, d);
        }
    }

    Hypergraph g;
    g.node_count = n;
    g.edges.resize(static_cast<std::size_t>(n));

#if defined(_OPENMP)
#pragma omp parallel num_threads(hg::thread_count())
#endif
    {
        // Accepted nodes land in a bitmap and are extracted in ascending
        // index order, which replaces a per-hyperedge comparison sort.
        std::vector<std::uint64_t> mark(static_cast<std::size_t>((n + 63) / 64), 0);
#if defined(_OPENMP)
#pragma omp for schedule(dynamic, 16)
#endif
        for (std::int64_t i = 0; i < n; ++i) {
            const double center = f.at(i, best_dim);
            const std::int64_t lo = std::lower_bound(sorted_coord.begin(), sorted_coord.end(),
                                                     center - radius) -
                                    sorted_coord.begin();
            const std::int64_t hi = std::upper_bound(sorted_coord.begin(), sorted_coord.end(),
                                                     center + radius) -
                                    sorted_coord.begin();
            const double* center_row = f.data.data() + i * c;
            std::size_t count = 0;
            for (std::int64_t k = lo; k < hi; ++k) {
                if (rule.admits(center_row, sweep_feat.data.data() + k * c, c)) {
                    const auto j = static_cast<std::uint32_t>(order[static_cast<std::size_t>(k)]);
                    mark[j >> 6] |= std::uint64_t{1} << (j & 63);
                    ++count;
                }
            }
            std::vector<std::int32_t>& members = g.edges[static_cast<std::size_t>(i)];
            members.reserve(count);
            for (std::size_t word = 0; word < mark.size(); ++word) {
                std::uint64_t bits = mark[word];
                mark[word] = 0;
                while (bits != 0) {
                    members.push_back(static_cast<std::int32_t>(
                        (word << 6) + static_cast<std::size_t>(std::countr_zero(bits))));
                    bits &= bits - 1;
                }
            }
        }
    }
    fill_degrees(g);
    return g;
}

double percentile_delta(const NodeSet& nodes, Metric kind, double q, std::uint64_t seed) {
    if (kind == Metric::gaussian_kernel) {
        throw std::invalid_argument("percentile_delta: needs a distance kind");
    }
    if (!(q >= 0.0 && q <= 100.0)) {
        throw std::invalid_argument("percentile_delta: q must lie in [0, 100]");
    }
    const std::int64_t n = nodes.count();
    if (n < 2) {
        throw std::invalid_argument("percentile_delta: needs at least two nodes");
    }

    constexpr std::int64_t kMaxPairs = 2048;
    std::vector<double> dists;
    const std::int64_t total = n * (n - 1) / 2;
    if (total <= kMaxPairs) {
        dists.reserve(static_cast<std::size_t>(total));
        for (std::int64_t i = 0; i < n; ++i) {
            for (std::int64_t j = i + 1; j < n; ++j) {
                dists.push_back(pair_distance(nodes.features, i, j, kind));
            }
        }
    } else {
        dists.reserve(kMaxPairs);
        CounterRng rng(seed);
        while (static_cast<std::int64_t>(dists.size()) < kMaxPairs) {
            const auto i = static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(n)));
            const auto j = static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(n)));
            if (i == j) {
                continue;
            }
            dists.push_back(pair_distance(nodes.features, i, j, kind));
        }
    }
    std::sort(dists.begin(), dists.end());
    const auto m = static_cast<std::int64_t>(dists.size());
    auto idx = static_cast<std::int64_t>(std::llround(q / 100.0 * static_cast<double>(m - 1)));
    idx = std::clamp<std::int64_t>(idx, 0, m - 1);
    double d = dists[static_cast<std::size_t>(idx)];
    if (d <= 0.0) {
        // delta must stay positive; fall back to the nearest distinct pair.
        const auto pos = std::upper_bound(dists.begin(), dists.end(), 0.0);
        d = pos == dists.end() ? 1e-9 : *pos;
    }
    return d;
}

Matrix propagate(const Matrix& x, const Hypergraph& g, const Matrix& theta) {
    if (x.rows != g.node_count) {
        throw std::invalid_argument("propagate: feature rows disagree with the node count");
    }
    if (theta.rows != x.cols) {
        throw std::invalid_argument("propagate: theta rows disagree with the feature dim");
    }
    for (std::int64_t e = 0; e < g.edge_count(); ++e) {
        if (g.edge_degree[static_cast<std::size_t>(e)] < 1) {
            throw std::invalid_argument("propagate: degenerate hypergraph (empty hyperedge)");
        }
    }
    for (std::int64_t v = 0; v < g.node_count; ++v) {
        if (g.node_degree[static_cast<std::size_t>(v)] < 1) {
            throw std::invalid_argument("propagate: degenerate hypergraph (isolated node)");
        }
    }

    const std::int64_t out_c = theta.cols;
    const Matrix xt = matmul(x, theta);

    // Node -> hyperedge: mean of member rows, ascending member order.
    const std::int64_t e_count = g.edge_count();
    Matrix edge_feat(e_count, out_c);
#if defined(_OPENMP)
#pragma omp parallel for schedule(static) num_threads(hg::thread_count())
#endif
    for (std::int64_t e = 0; e < e_count; ++e) {
        double* row = edge_feat.data.data() + e * out_c;
        for (std::int32_t v : g.edges[static_cast<std::size_t>(e)]) {
            const double* src = xt.data.data() + static_cast<std::int64_t>(v) * out_c;
            for (std::int64_t k = 0; k < out_c; ++k) {
                row[k] += src[k];
            }
        }
        const double inv = 1.0 / static_cast<double>(g.edge_degree[static_cast<std::size_t>(e)]);
        for (std::int64_t k = 0; k < out_c; ++k) {
            row[k] *= inv;
        }
    }

    // Hyperedge -> node: mean over incident hyperedges, ascending edge order.
    std::vector<std::vector<std::int32_t>> incident(static_cast<std::size_t>(g.node_count));
    for (std::int64_t e = 0; e < e_count; ++e) {
        for (std::int32_t v : g.edges[static_cast<std::size_t>(e)]) {
            incident[static_cast<std::size_t>(v)].push_back(static_cast<std::int32_t>(e));
        }
    }
    Matrix node_feat(g.node_count, out_c);
#if defined(_OPENMP)
#pragma omp parallel for schedule(static) num_threads(hg::thread_count())
#endif
    for (std::int64_t v = 0; v < g.node_count; ++v) {
        double* row = node_feat.data.data() + v * out_c;
        for (std::int32_t e : incident[static_cast<std::size_t>(v)]) {
            const double* src = edge_feat.data.data() + static_cast<std::int64_t>(e) * out_c;
            for (std::int64_t k = 0; k < out_c; ++k) {
                row[k] += src[k];
            }
        }
        const double inv = 1.0 / static_cast<double>(g.node_degree[static_cast<std::size_t>(v)]);
        for (std::int64_t k = 0; k < out_c; ++k) {
            row[k] *= inv;
        }
    }
    return node_feat;
}

Tensor hyperconv_layer(const Tensor& feature_map, const MetricSpec& metric,
                       const Matrix& theta) {
    const NodeSet nodes = gridize(feature_map);
    const Hypergraph g = build_hypergraph(nodes, metric);
    const Matrix updated = propagate(nodes.features, g, theta);
    const std::int64_t h = feature_map.dim(2), w = feature_map.dim(3);
    Tensor out({1, updated.cols, h, w});
    for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
            for (std::int64_t ch = 0; ch < updated.cols; ++ch) {
                out.at4(0, ch, y, x) = updated.at(y * w + x, ch);
            }
        }
    }
    return out;
}

std::string hypergraph_to_json(const Hypergraph& g) {
    nlohmann::json j;
    j["n"] = g.node_count;
    j["edges"] = g.edges;
    j["d_e"] = g.edge_degree;
    j["d_v"] = g.node_degree;
    return j.dump(2) + "\n";
}

Hypergraph hypergraph_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    Hypergraph g;
    g.node_count = j.at("n").get<std::int64_t>();
    g.edges = j.at("edges").get<std::vector<std::vector<std::int32_t>>>();
    g.edge_degree = j.at("d_e").get<std::vector<std::int64_t>>();
    g.node_degree = j.at("d_v").get<std::vector<std::int64_t>>();
    return g;
}

} // namespace hg
