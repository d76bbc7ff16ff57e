#include "gqn/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "gqn/errors.hpp"

namespace gqn::nn {

namespace {

constexpr std::array<char, 8> kMagic{'G', 'Q', 'N', 'C', 'K', 'P', 'T', '\0'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw CheckpointIncompatible("truncated checkpoint");
    return v;
}

std::string get_string(std::istream& in, std::uint64_t n) {
    if (n > (1ULL << 30)) throw CheckpointIncompatible("corrupt checkpoint string length");
    std::string s(n, '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    if (!in) throw CheckpointIncompatible("truncated checkpoint");
    return s;
}

} // namespace

void save_checkpoint(const std::filesystem::path& path, const std::string& descriptor, const ParameterSet& params) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write checkpoint " + path.string());
    out.write(kMagic.data(), kMagic.size());
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint64_t>(out, descriptor.size());
    out.write(descriptor.data(), static_cast<std::streamsize>(descriptor.size()));
    put<std::uint64_t>(out, params.size());
    for (const auto& p : params) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
        out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        put<std::uint32_t>(out, 2);
        put<std::uint64_t>(out, static_cast<std::uint64_t>(p.value.rows()));
        put<std::uint64_t>(out, static_cast<std::uint64_t>(p.value.cols()));
        out.write(reinterpret_cast<const char*>(p.value.data()),
                  static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(p.value.size())));
    }
    if (!out) throw InvalidArgument("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointIncompatible("cannot open checkpoint " + path.string());
    std::array<char, 8> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kMagic) throw CheckpointIncompatible("not a gqn checkpoint: " + path.string());
    const auto version = get<std::uint32_t>(in);
    if (version != kCheckpointVersion) {
        throw CheckpointIncompatible("unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint ck;
    ck.descriptor = get_string(in, get<std::uint64_t>(in));
    const auto count = get<std::uint64_t>(in);
    for (std::uint64_t k = 0; k < count; ++k) {
        std::string name = get_string(in, get<std::uint32_t>(in));
        const auto ndims = get<std::uint32_t>(in);
        if (ndims != 2) throw CheckpointIncompatible("only 2-D tensors are supported");
        const auto rows = get<std::uint64_t>(in);
        const auto cols = get<std::uint64_t>(in);
        if (rows * cols > (1ULL << 28)) throw CheckpointIncompatible("corrupt tensor shape");
        Tensor t(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(sizeof(double) * rows * cols));
        if (!in) throw CheckpointIncompatible("truncated checkpoint");
        ck.params.add(std::move(name), std::move(t));
    }
    return ck;
}

} // namespace gqn::nn
