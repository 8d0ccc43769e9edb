#pragma once

#include <filesystem>
#include <iosfwd>

#include "hgkit/tensor.hpp"

namespace hg {

// HGTN tensor file, all integers little-endian:
//   magic "HGTN" | u32 version = 1 | u32 ndim (1..4) | ndim x u64 extents |
//   row-major IEEE-754 binary32 payload.
// Values are stored at binary32 precision; in-memory tensors are binary64.

void write_tensor(const Tensor& t, std::ostream& out);
void write_tensor(const Tensor& t, const std::filesystem::path& path);

/// Throws std::runtime_error with a distinct message for a bad magic,
/// unsupported version, bad rank, bad extent, truncated payload, or trailing
/// bytes after the payload.
Tensor read_tensor(std::istream& in);
Tensor read_tensor(const std::filesystem::path& path);

} // namespace hg
