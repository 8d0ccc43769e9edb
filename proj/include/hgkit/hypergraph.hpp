#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hgkit/matrix.hpp"
#include "hgkit/tensor.hpp"

namespace hg {

/// Feature-space nodes lifted from a spatial map: row i of `features` holds
/// the feature vector of pixel i in row-major (h * W + w) order.
struct NodeSet {
    Matrix features;

    std::int64_t count() const { return features.rows; }
    std::int64_t dim() const { return features.cols; }
};

enum class Metric { manhattan, euclidean, chebyshev, gaussian_kernel };

const char* metric_name(Metric m);
Metric metric_from_name(const std::string& name);

/// Hyperedge membership rule. The distance kinds admit node j into e_i when
/// dist(x_j, x_i) < delta (strict); the Gaussian kernel admits j when
/// exp(-|x_j - x_i|^2 / (2 sigma^2)) > tau. The node itself always qualifies.
struct MetricSpec {
    Metric kind = Metric::manhattan;
    double delta = 1.0; // distance kinds, > 0
    double tau = 0.5;   // gaussian similarity threshold, in (0, 1)
    double sigma = 1.0; // gaussian bandwidth, > 0

    void validate() const;
};

/// One hyperedge per node: edges[i] lists the members of e_i in ascending
/// node order, so edge_count() == node_count. edge_degree[i] == |e_i| and
/// node_degree[j] counts the hyperedges containing node j.
struct Hypergraph {
    std::int64_t node_count = 0;
    std::vector<std::vector<std::int32_t>> edges;
    std::vector<std::int64_t> edge_degree;
    std::vector<std::int64_t> node_degree;

    std::int64_t edge_count() const { return static_cast<std::int64_t>(edges.size()); }
    std::int64_t incidence_count() const;
    bool operator==(const Hypergraph&) const = default;
};

/// Lifts a (1, C, H, W) map to H*W nodes with C-dimensional features.
NodeSet gridize(const Tensor& feature_map);

/// Distance between feature rows i and j; the Gaussian kind is not a
/// distance and is rejected here.
double pair_distance(const Matrix& features, std::int64_t i, std::int64_t j, Metric kind);

double gaussian_similarity(const Matrix& features, std::int64_t i, std::int64_t j, double sigma);

/// Bucketed construction: candidate pairs are pruned with a sorted sweep
/// along the widest feature dimension, then filtered by the exact membership
/// predicate. Produces the same hypergraph as build_hypergraph_dense.
Hypergraph build_hypergraph(const NodeSet& nodes, const MetricSpec& metric);

/// All-pairs O(N^2) construction; the correctness oracle for the bucketed
/// path and the second strategy timed by the benchmark harness.
Hypergraph build_hypergraph_dense(const NodeSet& nodes, const MetricSpec& metric);

/// q-th percentile of pairwise distances, estimated from at most 2048 pairs
/// (all pairs when fewer exist, otherwise seeded sampling). Returns the
/// smallest positive sampled distance when the percentile lands on 0.
double percentile_delta(const NodeSet& nodes, Metric kind, double q = 10.0,
                        std::uint64_t seed = 0);

/// Two-stage propagation: hyperedge means of x * theta, then node means of
/// the hyperedge values. Summation order within a hyperedge (and within a
/// node's incident set) is ascending index. Throws on zero degrees.
Matrix propagate(const Matrix& x, const Hypergraph& g, const Matrix& theta);

/// gridize -> build_hypergraph -> propagate -> reshape to (1, C', H, W).
Tensor hyperconv_layer(const Tensor& feature_map, const MetricSpec& metric,
                       const Matrix& theta);

std::string hypergraph_to_json(const Hypergraph& g);
Hypergraph hypergraph_from_json(const std::string& text);

} // namespace hg
