#include "hgkit/tensor_io.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace hg {

namespace {

constexpr char kMagic[4] = {'H', 'G', 'T', 'N'};
constexpr std::uint32_t kVersion = 1;
constexpr std::int64_t kMaxElements = 1'000'000'000;

void put_u32(std::ostream& out, std::uint32_t v) {
    const std::array<char, 4> b = {
        static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
        static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
    out.write(b.data(), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    std::array<char, 8> b{};
    for (int i = 0; i < 8; ++i) {
        b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xFF);
    }
    out.write(b.data(), 8);
}

void put_f32(std::ostream& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

bool get_bytes(std::istream& in, char* dst, std::size_t n) {
    in.read(dst, static_cast<std::streamsize>(n));
    return static_cast<std::size_t>(in.gcount()) == n;
}

std::uint32_t parse_u32(const char* b) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) {
        v = (v << 8) | static_cast<std::uint8_t>(b[i]);
    }
    return v;
}

std::uint64_t parse_u64(const char* b) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) {
        v = (v << 8) | static_cast<std::uint8_t>(b[i]);
    }
    return v;
}

} // namespace

void write_tensor(const Tensor& t, std::ostream& out) {
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::int64_t d : t.dims()) {
        put_u64(out, static_cast<std::uint64_t>(d));
    }
    for (std::int64_t i = 0; i < t.size(); ++i) {
        put_f32(out, static_cast<float>(t[i]));
    }
    if (!out) {
        throw std::runtime_error("tensor write failed");
    }
}

void write_tensor(const Tensor& t, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    write_tensor(t, out);
}

Tensor read_tensor(std::istream& in) {
    char header[12];
    if (!get_bytes(in, header, 4)) {
        throw std::runtime_error("tensor file: truncated header");
    }
    if (std::memcmp(header, kMagic, 4) != 0) {
        throw std::runtime_error("tensor file: bad magic (expected HGTN)");
    }
    if (!get_bytes(in, header, 8)) {
        throw std::runtime_error("tensor file: truncated header");
    }
    const std::uint32_t version = parse_u32(header);
    if (version != kVersion) {
        throw std::runtime_error("tensor file: unsupported version " + std::to_string(version));
    }
    const std::uint32_t ndim = parse_u32(header + 4);
    if (ndim < 1 || ndim > 4) {
        throw std::runtime_error("tensor file: rank must be 1..4, got " + std::to_string(ndim));
    }

    std::vector<std::int64_t> dims;
    std::int64_t count = 1;
    for (std::uint32_t i = 0; i < ndim; ++i) {
        char raw[8];
        if (!get_bytes(in, raw, 8)) {
            throw std::runtime_error("tensor file: truncated header");
        }
        const std::uint64_t d = parse_u64(raw);
        if (d < 1 || d > static_cast<std::uint64_t>(kMaxElements)) {
            throw std::runtime_error("tensor file: bad extent");
        }
        dims.push_back(static_cast<std::int64_t>(d));
        count *= static_cast<std::int64_t>(d);
        if (count > kMaxElements) {
            throw std::runtime_error("tensor file: bad extent");
        }
    }

    std::vector<double> values(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i) {
        char raw[4];
        if (!get_bytes(in, raw, 4)) {
            throw std::runtime_error("tensor file: truncated payload");
        }
        const std::uint32_t bits = parse_u32(raw);
        float f;
        std::memcpy(&f, &bits, 4);
        values[static_cast<std::size_t>(i)] = static_cast<double>(f);
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw std::runtime_error("tensor file: payload/extent mismatch (trailing bytes)");
    }
    return Tensor(std::move(dims), std::move(values));
}

Tensor read_tensor(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    return read_tensor(in);
}

} // namespace hg
