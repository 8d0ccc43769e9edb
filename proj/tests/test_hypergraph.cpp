#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "hgkit/hypergraph.hpp"
#include "hgkit/parallel.hpp"
#include "hgkit/rng.hpp"
#include "reference.hpp"
#include "test_util.hpp"

using hg::Hypergraph;
using hg::Matrix;
using hg::Metric;
using hg::MetricSpec;
using hg::NodeSet;
using hg::Tensor;
using testutil::max_abs_diff;
using testutil::random_matrix;
using testutil::random_tensor;

namespace {

NodeSet scalar_nodes(std::vector<double> values) {
    NodeSet nodes;
    nodes.features = Matrix(static_cast<std::int64_t>(values.size()), 1);
    nodes.features.data = std::move(values);
    return nodes;
}

NodeSet random_nodes(std::int64_t n, std::int64_t c, std::uint64_t seed) {
    NodeSet nodes;
    nodes.features = random_matrix(n, c, seed, 0.0, 1.0);
    return nodes;
}

MetricSpec manhattan(double delta) {
    MetricSpec m;
    m.kind = Metric::manhattan;
    m.delta = delta;
    return m;
}

} // namespace

TEST_CASE("gridize") {
    const Tensor grid({1, 1, 2, 2}, {1, 2, 3, 4});
    const NodeSet a = gridize(grid);
    CHECK(a.count() == 4);
    CHECK(a.dim() == 1);
    for (std::int64_t i = 0; i < 4; ++i) {
        CHECK(a.features.at(i, 0) == doctest::Approx(static_cast<double>(i + 1)));
    }

    // channel-major layout: node features interleave across channels
    const Tensor two_channel({1, 2, 1, 2}, {5, 6, 7, 8});
    const NodeSet b = gridize(two_channel);
    CHECK(b.count() == 2);
    CHECK(b.dim() == 2);
    CHECK(b.features.at(0, 0) == doctest::Approx(5));
    CHECK(b.features.at(0, 1) == doctest::Approx(7));
    CHECK(b.features.at(1, 0) == doctest::Approx(6));
    CHECK(b.features.at(1, 1) == doctest::Approx(8));

    const NodeSet c = gridize(random_tensor({1, 3, 5, 4}, 2));
    CHECK(c.count() == 20);
    CHECK_THROWS_AS(gridize(random_tensor({2, 3, 2, 2}, 3)), std::invalid_argument);
}

TEST_CASE("four scalar nodes at delta 1.5") {
    const NodeSet nodes = scalar_nodes({0, 1, 2, 3});
    for (const Hypergraph& g : {hg::build_hypergraph(nodes, manhattan(1.5)),
                                hg::build_hypergraph_dense(nodes, manhattan(1.5))}) {
        REQUIRE(g.edge_count() == 4);
        CHECK(g.edges[0] == std::vector<std::int32_t>{0, 1});
        CHECK(g.edges[1] == std::vector<std::int32_t>{0, 1, 2});
        CHECK(g.edges[2] == std::vector<std::int32_t>{1, 2, 3});
        CHECK(g.edges[3] == std::vector<std::int32_t>{2, 3});
        CHECK(g.edge_degree == std::vector<std::int64_t>{2, 3, 3, 2});
        CHECK(g.node_degree == std::vector<std::int64_t>{2, 3, 3, 2});
    }
}

TEST_CASE("tiny delta gives the identity incidence") {
    const NodeSet nodes = scalar_nodes({0, 1, 2, 3});
    const Hypergraph g = hg::build_hypergraph(nodes, manhattan(1e-9));
    for (std::int64_t i = 0; i < 4; ++i) {
        CHECK(g.edges[static_cast<std::size_t>(i)] ==
              std::vector<std::int32_t>{static_cast<std::int32_t>(i)});
    }
}

TEST_CASE("delta above the diameter gives the complete hypergraph") {
    const NodeSet nodes = scalar_nodes({0, 1, 2, 3});
    const Hypergraph g = hg::build_hypergraph(nodes, manhattan(100.0));
    for (const auto& e : g.edges) {
        CHECK(e == std::vector<std::int32_t>{0, 1, 2, 3});
    }
    CHECK(g.node_degree == std::vector<std::int64_t>{4, 4, 4, 4});
}

TEST_CASE("sparse construction equals the all-pairs oracle") {
    std::uint64_t seed = 100;
    for (int rep = 0; rep < 12; ++rep) {
        hg::CounterRng rng(seed++);
        const std::int64_t n = 2 + static_cast<std::int64_t>(rng.next_below(120));
        const std::int64_t c = 1 + static_cast<std::int64_t>(rng.next_below(16));
        const NodeSet nodes = random_nodes(n, c, seed++);
        for (Metric kind : {Metric::manhattan, Metric::euclidean, Metric::chebyshev,
                            Metric::gaussian_kernel}) {
            MetricSpec m;
            m.kind = kind;
            if (kind == Metric::gaussian_kernel) {
                m.sigma = hg::percentile_delta(nodes, Metric::euclidean, 50.0, seed);
                m.tau = 0.3 + 0.4 * rng.next_unit();
            } else {
                m.delta = hg::percentile_delta(nodes, kind, 5.0 + 40.0 * rng.next_unit(), seed);
            }
            CHECK(hg::build_hypergraph(nodes, m) == hg::build_hypergraph_dense(nodes, m));
        }
    }
}

TEST_CASE("degree identities") {
    const NodeSet nodes = random_nodes(40, 3, 5);
    const Hypergraph g = hg::build_hypergraph(nodes, manhattan(0.4));
    const std::int64_t sum_de =
        std::accumulate(g.edge_degree.begin(), g.edge_degree.end(), std::int64_t{0});
    const std::int64_t sum_dv =
        std::accumulate(g.node_degree.begin(), g.node_degree.end(), std::int64_t{0});
    CHECK(sum_de == sum_dv);
    CHECK(sum_de == g.incidence_count());
    for (std::int64_t i = 0; i < g.node_count; ++i) {
        // self-membership for any positive delta
        const auto& e = g.edges[static_cast<std::size_t>(i)];
        CHECK(std::binary_search(e.begin(), e.end(), static_cast<std::int32_t>(i)));
    }
}

TEST_CASE("hyperedges grow monotonically with delta") {
    const NodeSet nodes = random_nodes(60, 4, 6);
    const Hypergraph small = hg::build_hypergraph(nodes, manhattan(0.3));
    const Hypergraph large = hg::build_hypergraph(nodes, manhattan(0.9));
    for (std::size_t i = 0; i < small.edges.size(); ++i) {
        CHECK(std::includes(large.edges[i].begin(), large.edges[i].end(),
                            small.edges[i].begin(), small.edges[i].end()));
    }
}

TEST_CASE("construction and propagation are permutation-equivariant") {
    const std::int64_t n = 24, c = 3;
    const NodeSet nodes = random_nodes(n, c, 7);
    const MetricSpec m = manhattan(0.5);

    // a fixed permutation: reverse
    std::vector<std::int64_t> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::reverse(perm.begin(), perm.end());

    NodeSet permuted;
    permuted.features = Matrix(n, c);
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t d = 0; d < c; ++d) {
            permuted.features.at(perm[static_cast<std::size_t>(i)], d) =
                nodes.features.at(i, d);
        }
    }

    const Hypergraph g = hg::build_hypergraph(nodes, m);
    const Hypergraph gp = hg::build_hypergraph(permuted, m);
    for (std::int64_t i = 0; i < n; ++i) {
        const auto pi = perm[static_cast<std::size_t>(i)];
        std::vector<std::int32_t> mapped;
        for (std::int32_t v : g.edges[static_cast<std::size_t>(i)]) {
            mapped.push_back(static_cast<std::int32_t>(perm[static_cast<std::size_t>(v)]));
        }
        std::sort(mapped.begin(), mapped.end());
        CHECK(gp.edges[static_cast<std::size_t>(pi)] == mapped);
        CHECK(gp.edge_degree[static_cast<std::size_t>(pi)] ==
              g.edge_degree[static_cast<std::size_t>(i)]);
        CHECK(gp.node_degree[static_cast<std::size_t>(pi)] ==
              g.node_degree[static_cast<std::size_t>(i)]);
    }

    const Matrix theta = random_matrix(c, 2, 8);
    const Matrix out = propagate(nodes.features, g, theta);
    const Matrix outp = propagate(permuted.features, gp, theta);
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t d = 0; d < 2; ++d) {
            CHECK(outp.at(perm[static_cast<std::size_t>(i)], d) ==
                  doctest::Approx(out.at(i, d)).epsilon(1e-12));
        }
    }
}

TEST_CASE("metric families are ordered and triangular") {
    const NodeSet nodes = random_nodes(30, 5, 9);
    hg::CounterRng rng(10);
    for (int rep = 0; rep < 200; ++rep) {
        const auto i = static_cast<std::int64_t>(rng.next_below(30));
        const auto j = static_cast<std::int64_t>(rng.next_below(30));
        const double cheb = pair_distance(nodes.features, i, j, Metric::chebyshev);
        const double eucl = pair_distance(nodes.features, i, j, Metric::euclidean);
        const double manh = pair_distance(nodes.features, i, j, Metric::manhattan);
        CHECK(cheb <= eucl + 1e-12);
        CHECK(eucl <= manh + 1e-12);

        const auto k = static_cast<std::int64_t>(rng.next_below(30));
        const double dij = pair_distance(nodes.features, i, j, Metric::manhattan);
        const double djk = pair_distance(nodes.features, j, k, Metric::manhattan);
        const double dik = pair_distance(nodes.features, i, k, Metric::manhattan);
        CHECK(dik <= dij + djk + 1e-12);
    }
}

TEST_CASE("propagate on the identity hypergraph is the identity") {
    const NodeSet nodes = scalar_nodes({5, -2, 9});
    const Hypergraph g = hg::build_hypergraph(nodes, manhattan(1e-9));
    Matrix x(3, 2);
    x.data = {1, 2, 3, 4, 5, 6};
    const Matrix out = propagate(x, g, hg::identity_matrix(2));
    CHECK(max_abs_diff(out, x) == doctest::Approx(0.0));
}

TEST_CASE("propagate hand-worked four-node example") {
    const NodeSet nodes = scalar_nodes({0, 1, 2, 3});
    const Hypergraph g = hg::build_hypergraph(nodes, manhattan(1.5));
    Matrix x(4, 1);
    x.data = {0, 1, 2, 3};
    Matrix theta(1, 1);
    theta.data = {1.0};
    const Matrix out = propagate(x, g, theta);
    CHECK(out.at(0, 0) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(out.at(1, 0) == doctest::Approx(7.0 / 6.0).epsilon(1e-12));
    CHECK(out.at(2, 0) == doctest::Approx(11.0 / 6.0).epsilon(1e-12));
    CHECK(out.at(3, 0) == doctest::Approx(2.25).epsilon(1e-12));
}

TEST_CASE("complete hypergraph averages every column") {
    const NodeSet nodes = scalar_nodes({0, 1, 2, 3});
    const Hypergraph g = hg::build_hypergraph(nodes, manhattan(50.0));
    const Matrix x = random_matrix(4, 3, 11);
    const Matrix out = propagate(x, g, hg::identity_matrix(3));
    for (std::int64_t d = 0; d < 3; ++d) {
        double mean = 0;
        for (std::int64_t i = 0; i < 4; ++i) {
            mean += x.at(i, d);
        }
        mean /= 4.0;
        for (std::int64_t i = 0; i < 4; ++i) {
            CHECK(out.at(i, d) == doctest::Approx(mean).epsilon(1e-12));
        }
    }
}

TEST_CASE("propagate equals the dense matrix formula") {
    std::uint64_t seed = 300;
    for (int rep = 0; rep < 8; ++rep) {
        hg::CounterRng rng(seed++);
        const std::int64_t n = 3 + static_cast<std::int64_t>(rng.next_below(60));
        const std::int64_t c = 1 + static_cast<std::int64_t>(rng.next_below(6));
        const std::int64_t c_out = 1 + static_cast<std::int64_t>(rng.next_below(5));
        const NodeSet nodes = random_nodes(n, c, seed++);
        const MetricSpec m = manhattan(hg::percentile_delta(nodes, Metric::manhattan, 25.0, seed));
        const Hypergraph g = hg::build_hypergraph(nodes, m);
        const Matrix x = random_matrix(n, c, seed++);
        const Matrix theta = random_matrix(c, c_out, seed++);
        CHECK(max_abs_diff(propagate(x, g, theta),
                           hgref::propagate_dense(x, g, theta)) < 1e-9);
    }
}

TEST_CASE("constant node rows pass through as c * theta") {
    const NodeSet nodes = random_nodes(25, 4, 12);
    const Hypergraph g = hg::build_hypergraph(nodes, manhattan(0.7));
    Matrix x(25, 3);
    const double c_row[3] = {0.5, -1.5, 2.0};
    for (std::int64_t i = 0; i < 25; ++i) {
        for (std::int64_t d = 0; d < 3; ++d) {
            x.at(i, d) = c_row[d];
        }
    }
    const Matrix theta = random_matrix(3, 2, 13);
    const Matrix out = propagate(x, g, theta);
    for (std::int64_t i = 0; i < 25; ++i) {
        for (std::int64_t d = 0; d < 2; ++d) {
            double expect = 0;
            for (std::int64_t k = 0; k < 3; ++k) {
                expect += c_row[k] * theta.at(k, d);
            }
            CHECK(out.at(i, d) == doctest::Approx(expect).epsilon(1e-9));
        }
    }
}

TEST_CASE("degenerate hypergraphs are rejected") {
    Hypergraph g;
    g.node_count = 2;
    g.edges = {{0, 1}, {}};
    g.edge_degree = {2, 0};
    g.node_degree = {1, 1};
    Matrix x(2, 1);
    CHECK_THROWS_AS(propagate(x, g, hg::identity_matrix(1)), std::invalid_argument);

    Hypergraph iso;
    iso.node_count = 2;
    iso.edges = {{0}, {0}};
    iso.edge_degree = {1, 1};
    iso.node_degree = {2, 0};
    CHECK_THROWS_AS(propagate(x, iso, hg::identity_matrix(1)), std::invalid_argument);
}

TEST_CASE("hyperconv layer composes the pipeline") {
    const Tensor map = random_tensor({1, 16, 8, 8}, 40, 0.0, 1.0);
    const NodeSet nodes = gridize(map);
    MetricSpec m = manhattan(hg::percentile_delta(nodes, Metric::manhattan, 10.0, 41));
    const Matrix theta = random_matrix(16, 8, 42);

    const Tensor out = hyperconv_layer(map, m, theta);
    CHECK(out.dims() == std::vector<std::int64_t>{1, 8, 8, 8});

    // bitwise equal to the explicit composition
    const Hypergraph g = hg::build_hypergraph(nodes, m);
    const Matrix updated = propagate(nodes.features, g, theta);
    for (std::int64_t y = 0; y < 8; ++y) {
        for (std::int64_t x = 0; x < 8; ++x) {
            for (std::int64_t ch = 0; ch < 8; ++ch) {
                CHECK(out.at4(0, ch, y, x) == updated.at(y * 8 + x, ch));
            }
        }
    }
    // and within 1e-9 of the dense matrix route
    const Matrix dense = hgref::propagate_dense(nodes.features, g, theta);
    CHECK(max_abs_diff(updated, dense) < 1e-9);

    // spatially constant maps stay spatially constant
    const Tensor flat = hg::tensor_full({1, 3, 4, 4}, 2.25);
    const Tensor flat_out = hyperconv_layer(flat, manhattan(0.5), hg::identity_matrix(3));
    for (std::int64_t i = 0; i < flat_out.size(); ++i) {
        CHECK(flat_out[i] == doctest::Approx(2.25).epsilon(1e-12));
    }
}

TEST_CASE("percentile delta heuristic") {
    const NodeSet nodes = random_nodes(50, 4, 14);
    const double d1 = hg::percentile_delta(nodes, Metric::manhattan, 10.0, 99);
    const double d2 = hg::percentile_delta(nodes, Metric::manhattan, 10.0, 99);
    CHECK(d1 == d2);
    CHECK(d1 > 0.0);
    const double d90 = hg::percentile_delta(nodes, Metric::manhattan, 90.0, 99);
    CHECK(d90 >= d1);

    // the percentile stays positive even on duplicated nodes
    NodeSet dup = scalar_nodes({1, 1, 1, 5});
    CHECK(hg::percentile_delta(dup, Metric::manhattan, 10.0, 0) > 0.0);

    CHECK_THROWS_AS(hg::percentile_delta(scalar_nodes({1}), Metric::manhattan, 10.0, 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(hg::percentile_delta(nodes, Metric::gaussian_kernel, 10.0, 0),
                    std::invalid_argument);
}

TEST_CASE("metric spec validation") {
    MetricSpec bad;
    bad.kind = Metric::manhattan;
    bad.delta = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    MetricSpec gauss;
    gauss.kind = Metric::gaussian_kernel;
    gauss.tau = 1.5;
    CHECK_THROWS_AS(gauss.validate(), std::invalid_argument);
    CHECK_THROWS_AS(hg::metric_from_name("hamming"), std::invalid_argument);
}

TEST_CASE("hypergraph JSON roundtrip") {
    const NodeSet nodes = random_nodes(12, 2, 15);
    const Hypergraph g = hg::build_hypergraph(nodes, manhattan(0.4));
    const Hypergraph back = hg::hypergraph_from_json(hg::hypergraph_to_json(g));
    CHECK(back == g);
}

TEST_CASE("construction is deterministic across thread counts") {
    const NodeSet nodes = random_nodes(80, 6, 16);
    const MetricSpec m = manhattan(0.8);
    hg::set_thread_count(1);
    const Hypergraph serial = hg::build_hypergraph(nodes, m);
    hg::set_thread_count(4);
    const Hypergraph threaded = hg::build_hypergraph(nodes, m);
    hg::set_thread_count(1);
    CHECK(serial == threaded);
}
