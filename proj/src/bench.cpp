#include "hgkit/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "hgkit/rng.hpp"

namespace hg {

namespace {

using Clock = std::chrono::steady_clock;

template <typename Fn>
std::pair<double, double> time_reps(int reps, Fn&& fn) {
    for (int i = 0; i < 2; ++i) {
        fn(); // warmup
    }
    std::vector<double> samples;
    samples.reserve(static_cast<std::size_t>(reps));
    for (int i = 0; i < reps; ++i) {
        const auto t0 = Clock::now();
        fn();
        const auto t1 = Clock::now();
        samples.push_back(
            static_cast<double>(std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count()));
    }
    std::sort(samples.begin(), samples.end());
    double mean = 0;
    for (double s : samples) {
        mean += s;
    }
    mean /= static_cast<double>(samples.size());
    const auto p95_idx = std::min<std::size_t>(
        samples.size() - 1,
        static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(samples.size()))) - 1);
    return {mean, samples[p95_idx]};
}

} // namespace

std::vector<BenchRow> bench_distances(std::int64_t n, std::int64_t c,
                                      const std::vector<Metric>& metrics, int reps,
                                      std::uint64_t seed, double percentile_q) {
    if (n < 2) {
        throw std::invalid_argument("bench: need at least two nodes");
    }
    if (reps < 3) {
        throw std::invalid_argument("bench: need at least three repetitions");
    }
    if (metrics.empty()) {
        throw std::invalid_argument("bench: empty metric list");
    }

    NodeSet nodes;
    nodes.features = Matrix(n, c);
    CounterRng rng(seed);
    for (double& v : nodes.features.data) {
        v = rng.next_unit();
    }

    std::vector<BenchRow> rows;
    for (Metric metric : metrics) {
        MetricSpec spec;
        spec.kind = metric;
        if (metric == Metric::gaussian_kernel) {
            spec.sigma = percentile_delta(nodes, Metric::euclidean, 50.0, seed);
            spec.tau = 0.5;
        } else {
            spec.delta = percentile_delta(nodes, metric, percentile_q, seed);
        }

        // Correctness precedes timing: both strategies must agree exactly.
        const Hypergraph dense = build_hypergraph_dense(nodes, spec);
        const Hypergraph sparse = build_hypergraph(nodes, spec);
        if (!(dense == sparse)) {
            throw std::runtime_error(std::string("bench: strategies disagree for metric ") +
                                     metric_name(metric));
        }
        const std::int64_t edges = dense.incidence_count();

        const auto [dense_mean, dense_p95] =
            time_reps(reps, [&] { (void)build_hypergraph_dense(nodes, spec); });
        rows.push_back({metric_name(metric), "dense", n, c, dense_mean, dense_p95, edges});
        const auto [sparse_mean, sparse_p95] =
            time_reps(reps, [&] { (void)build_hypergraph(nodes, spec); });
        rows.push_back({metric_name(metric), "sparse", n, c, sparse_mean, sparse_p95, edges});
    }
    return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
    std::string out = "metric,strategy,n,c,mean_ns,p95_ns,edges\n";
    char buf[160];
    for (const BenchRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%s,%lld,%lld,%lld,%lld,%lld\n",
                      r.metric.c_str(), r.strategy.c_str(),
                      static_cast<long long>(r.n), static_cast<long long>(r.c),
                      static_cast<long long>(std::llround(r.mean_ns)),
                      static_cast<long long>(std::llround(r.p95_ns)),
                      static_cast<long long>(r.edges));
        out += buf;
    }
    return out;
}

} // namespace hg
