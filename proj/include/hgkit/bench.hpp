#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hgkit/hypergraph.hpp"

namespace hg {

struct BenchRow {
    std::string metric;
    std::string strategy; // "dense" or "sparse"
    std::int64_t n = 0;
    std::int64_t c = 0;
    double mean_ns = 0;
    double p95_ns = 0;
    std::int64_t edges = 0; // total (node, hyperedge) incidences
};

/// Times the all-pairs and bucketed constructions on identical seeded random
/// features, one dense and one sparse row per metric. Thresholds come from
/// the q-th percentile heuristic (Gaussian: median-sigma, tau = 0.5). The
/// two strategies must agree set-for-set before any timing is reported;
/// disagreement throws. Two warmup repetitions precede `reps` timed ones.
std::vector<BenchRow> bench_distances(std::int64_t n, std::int64_t c,
                                      const std::vector<Metric>& metrics,
                                      int reps, std::uint64_t seed,
                                      double percentile_q = 10.0);

/// Header "metric,strategy,n,c,mean_ns,p95_ns,edges" plus one row per entry.
std::string bench_csv(const std::vector<BenchRow>& rows);

} // namespace hg
