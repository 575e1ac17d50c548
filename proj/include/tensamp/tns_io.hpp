#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "tensamp/tensor.hpp"

namespace tensamp {

/// Dense complex N-way array, column-major (first index fastest).
struct NArray {
  std::vector<std::size_t> dims;
  std::vector<cplx> data;

  NArray() = default;
  /// Zero array; throws ShapeError if any dim is 0.
  explicit NArray(std::vector<std::size_t> d);

  std::size_t size() const { return data.size(); }
  std::size_t offset(const std::vector<std::size_t>& idx) const;
  cplx& at(const std::vector<std::size_t>& idx) { return data[offset(idx)]; }
  const cplx& at(const std::vector<std::size_t>& idx) const { return data[offset(idx)]; }
};

struct TnsHeader {
  char magic[5] = {0, 0, 0, 0, 0};
  std::uint8_t version = 0;
  std::uint8_t dtype = 0;
  std::vector<std::uint64_t> dims;
  std::uintmax_t file_bytes = 0;
};

/// "TNS3" container: magic, version 1, dtype 0 (complex128 LE), three u64 LE
/// dims, then interleaved (re, im) doubles in column-major order.
void write_tns3(const std::filesystem::path& path, const Tensor3& t);
Tensor3 read_tns3(const std::filesystem::path& path);

/// "TNSN" container: as TNS3 plus a 1-byte order N before the N dims.
void write_tnsn(const std::filesystem::path& path, const NArray& a);
NArray read_tnsn(const std::filesystem::path& path);

/// Reads the header of either container without loading the payload.
TnsHeader read_header(const std::filesystem::path& path);

}  // namespace tensamp
