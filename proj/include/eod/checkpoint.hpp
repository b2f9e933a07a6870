#ifndef EOD_CHECKPOINT_HPP
#define EOD_CHECKPOINT_HPP

#include "eod/core.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace eod {

// Flat binary tensor container. Layout, all little-endian:
//   magic "EOD1", version u32, record count u32, then per tensor:
//   name length u32 + UTF-8 name, rank u32, extents u64[rank], raw f64 data.
struct NamedTensor {
    std::string name;
    std::vector<std::uint64_t> extents;
    std::vector<double> data;  // row-major
};

void save_checkpoint(const std::string& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_checkpoint(const std::string& path);

NamedTensor tensor_record(const std::string& name, const Matrix& m);
NamedTensor tensor_record(const std::string& name, const Vector& v);
NamedTensor scalar_record(const std::string& name, double value);

Matrix record_to_matrix(const NamedTensor& t);
Vector record_to_vector(const NamedTensor& t);

}  // namespace eod

#endif
