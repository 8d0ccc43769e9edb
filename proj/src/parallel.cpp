#include "hgkit/parallel.hpp"

#include <algorithm>
#include <atomic>

namespace hg {

namespace {
std::atomic<int> g_threads{1};
}

void set_thread_count(int n) { g_threads.store(std::clamp(n, 1, 256)); }

int thread_count() { return g_threads.load(); }

} // namespace hg
