#pragma once

namespace hg {

/// Worker count used by the OpenMP kernels. Defaults to 1 (serial). Every
/// kernel assigns whole output items to single threads, so results are
/// bit-identical for any thread count.
void set_thread_count(int n);
int thread_count();

} // namespace hg
