#include "eod/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "checkpoint IO assumes a little-endian host");

namespace eod {

namespace {

constexpr char kMagic[4] = {'E', 'O', 'D', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& os, T value) {
    os.write(reinterpret_cast<const char*>(&value), sizeof(value));
}

template <typename T>
T read_pod(std::istream& is, const std::string& what) {
    T value;
    is.read(reinterpret_cast<char*>(&value), sizeof(value));
    if (!is) {
        throw ParseError("checkpoint: truncated while reading " + what);
    }
    return value;
}

}  // namespace

void save_checkpoint(const std::string& path, const std::vector<NamedTensor>& tensors) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw ParseError("checkpoint: cannot open for writing: " + path);
    }
    os.write(kMagic, 4);
    write_pod(os, kVersion);
    write_pod(os, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& t : tensors) {
        write_pod(os, static_cast<std::uint32_t>(t.name.size()));
        os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        write_pod(os, static_cast<std::uint32_t>(t.extents.size()));
        for (std::uint64_t e : t.extents) {
            write_pod(os, e);
        }
        os.write(reinterpret_cast<const char*>(t.data.data()),
                 static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    }
    if (!os) {
        throw ParseError("checkpoint: write failed: " + path);
    }
}

std::vector<NamedTensor> load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw ParseError("checkpoint: cannot open: " + path);
    }
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) {
        throw ParseError("checkpoint: bad magic in " + path);
    }
    const auto version = read_pod<std::uint32_t>(is, "version");
    if (version != kVersion) {
        throw ParseError("checkpoint: unsupported version " + std::to_string(version));
    }
    const auto count = read_pod<std::uint32_t>(is, "record count");
    std::vector<NamedTensor> tensors;
    tensors.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        NamedTensor t;
        const auto name_len = read_pod<std::uint32_t>(is, "name length");
        t.name.resize(name_len);
        is.read(t.name.data(), name_len);
        if (!is) {
            throw ParseError("checkpoint: truncated tensor name");
        }
        const auto rank = read_pod<std::uint32_t>(is, "rank");
        std::uint64_t total = 1;
        for (std::uint32_t r = 0; r < rank; ++r) {
            const auto e = read_pod<std::uint64_t>(is, "extent");
            t.extents.push_back(e);
            total *= e;
        }
        t.data.resize(total);
        is.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(total * sizeof(double)));
        if (!is) {
            throw ParseError("checkpoint: truncated data for tensor " + t.name);
        }
        tensors.push_back(std::move(t));
    }
    return tensors;
}

NamedTensor tensor_record(const std::string& name, const Matrix& m) {
    NamedTensor t;
    t.name = name;
    t.extents = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
    t.data.assign(m.data(), m.data() + m.size());
    return t;
}

NamedTensor tensor_record(const std::string& name, const Vector& v) {
    NamedTensor t;
    t.name = name;
    t.extents = {static_cast<std::uint64_t>(v.size())};
    t.data.assign(v.data(), v.data() + v.size());
    return t;
}

NamedTensor scalar_record(const std::string& name, double value) {
    NamedTensor t;
    t.name = name;
    t.extents = {1};
    t.data = {value};
    return t;
}

Matrix record_to_matrix(const NamedTensor& t) {
    if (t.extents.size() != 2) {
        throw ParseError("checkpoint: tensor " + t.name + " is not rank 2");
    }
    Matrix m(static_cast<Eigen::Index>(t.extents[0]), static_cast<Eigen::Index>(t.extents[1]));
    std::memcpy(m.data(), t.data.data(), t.data.size() * sizeof(double));
    return m;
}

Vector record_to_vector(const NamedTensor& t) {
    if (t.extents.size() != 1) {
        throw ParseError("checkpoint: tensor " + t.name + " is not rank 1");
    }
    Vector v(static_cast<Eigen::Index>(t.extents[0]));
    std::memcpy(v.data(), t.data.data(), t.data.size() * sizeof(double));
    return v;
}

}  // namespace eod
