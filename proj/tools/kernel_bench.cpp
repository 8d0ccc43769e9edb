// Times the OpenMP kernels against the straight-line serial reference on the
// same inputs, verifying agreement before any timing. Usage:
//   hgkit-kernel-bench [--threads N] [--reps R]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "hgkit/hypergraph.hpp"
#include "hgkit/nn.hpp"
#include "hgkit/parallel.hpp"
#include "hgkit/rng.hpp"
#include "hgkit/tensor.hpp"
#include "reference.hpp"

namespace {

using Clock = std::chrono::steady_clock;

template <typename Fn>
double time_ns(int reps, Fn&& fn) {
    fn(); // warmup
    double best = 1e300;
    for (int i = 0; i < reps; ++i) {
        const auto t0 = Clock::now();
        fn();
        const auto t1 = Clock::now();
        best = std::min(best, static_cast<double>(
                                  std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0)
                                      .count()));
    }
    return best;
}

double max_abs_diff(const hg::Tensor& a, const hg::Tensor& b) {
    double m = 0;
    for (std::int64_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

} // namespace

int main(int argc, char** argv) {
    int threads = 4;
    int reps = 5;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--threads") == 0 && i + 1 < argc) {
            threads = std::atoi(argv[++i]);
        } else if (std::strcmp(argv[i], "--reps") == 0 && i + 1 < argc) {
            reps = std::atoi(argv[++i]);
        } else {
            std::fprintf(stderr, "usage: %s [--threads N] [--reps R]\n", argv[0]);
            return 2;
        }
    }

    std::printf("kernel,impl,threads,best_ns\n");

    // conv2d: 16 -> 16 channels, 3x3, 64x64 map.
    {
        hg::CounterRng rng(7);
        hg::Tensor input({1, 16, 64, 64});
        for (std::int64_t i = 0; i < input.size(); ++i) {
            input[i] = rng.uniform(-1, 1);
        }
        hg::ConvSpec spec;
        spec.kh = spec.kw = 3;
        spec.ph = spec.pw = 1;
        spec.weight = hg::Tensor({16, 16, 3, 3});
        for (std::int64_t i = 0; i < spec.weight.size(); ++i) {
            spec.weight[i] = rng.uniform(-0.3, 0.3);
        }

        const hg::Tensor ref = hgref::conv2d(input, spec);
        hg::set_thread_count(1);
        const hg::Tensor serial = hg::conv2d(input, spec);
        hg::set_thread_count(threads);
        const hg::Tensor parallel = hg::conv2d(input, spec);
        if (max_abs_diff(ref, serial) > 1e-9 || !hg::bitwise_equal(serial, parallel)) {
            std::fprintf(stderr, "conv2d: implementations disagree\n");
            return 1;
        }

        std::printf("conv2d,reference,1,%lld\n",
                    static_cast<long long>(time_ns(reps, [&] { (void)hgref::conv2d(input, spec); })));
        hg::set_thread_count(1);
        std::printf("conv2d,openmp,1,%lld\n",
                    static_cast<long long>(time_ns(reps, [&] { (void)hg::conv2d(input, spec); })));
        hg::set_thread_count(threads);
        std::printf("conv2d,openmp,%d,%lld\n", threads,
                    static_cast<long long>(time_ns(reps, [&] { (void)hg::conv2d(input, spec); })));
    }

    // hypergraph construction: dense scan vs bucketed sweep, N = 2048.
    {
        hg::CounterRng rng(11);
        hg::NodeSet nodes;
        nodes.features = hg::Matrix(2048, 16);
        for (double& v : nodes.features.data) {
            v = rng.next_unit();
        }
        hg::MetricSpec spec;
        spec.kind = hg::Metric::manhattan;
        spec.delta = hg::percentile_delta(nodes, spec.kind, 10.0, 3);

        hg::set_thread_count(1);
        const hg::Hypergraph dense = hg::build_hypergraph_dense(nodes, spec);
        const hg::Hypergraph sparse = hg::build_hypergraph(nodes, spec);
        hg::set_thread_count(threads);
        const hg::Hypergraph sparse_mt = hg::build_hypergraph(nodes, spec);
        if (!(dense == sparse) || !(sparse == sparse_mt)) {
            std::fprintf(stderr, "hypergraph: strategies disagree\n");
            return 1;
        }

        hg::set_thread_count(1);
        std::printf("hypergraph_build,dense,1,%lld\n",
                    static_cast<long long>(
                        time_ns(reps, [&] { (void)hg::build_hypergraph_dense(nodes, spec); })));
        std::printf("hypergraph_build,sparse,1,%lld\n",
                    static_cast<long long>(
                        time_ns(reps, [&] { (void)hg::build_hypergraph(nodes, spec); })));
        hg::set_thread_count(threads);
        std::printf("hypergraph_build,sparse,%d,%lld\n", threads,
                    static_cast<long long>(
                        time_ns(reps, [&] { (void)hg::build_hypergraph(nodes, spec); })));

        // propagation: two-stage sparse pass vs dense matrix formula.
        const hg::Matrix theta = hg::identity_matrix(16);
        hg::set_thread_count(1);
        const hg::Matrix sparse_prop = hg::propagate(nodes.features, dense, theta);
        const hg::Matrix dense_prop = hgref::propagate_dense(nodes.features, dense, theta);
        double m = 0;
        for (std::size_t i = 0; i < sparse_prop.data.size(); ++i) {
            m = std::max(m, std::abs(sparse_prop.data[i] - dense_prop.data[i]));
        }
        if (m > 1e-9) {
            std::fprintf(stderr, "propagate: implementations disagree\n");
            return 1;
        }
        std::printf("propagate,reference,1,%lld\n",
                    static_cast<long long>(time_ns(
                        reps, [&] { (void)hgref::propagate_dense(nodes.features, dense, theta); })));
        std::printf("propagate,openmp,1,%lld\n",
                    static_cast<long long>(
                        time_ns(reps, [&] { (void)hg::propagate(nodes.features, dense, theta); })));
        hg::set_thread_count(threads);
        std::printf("propagate,openmp,%d,%lld\n", threads,
                    static_cast<long long>(
                        time_ns(reps, [&] { (void)hg::propagate(nodes.features, dense, theta); })));
    }

    return 0;
}
