#include "tensamp/tns_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include "tensamp/error.hpp"

namespace tensamp {
namespace {

constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kComplex128 = 0;

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
T byteswap_if_big(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

void put_u64(std::ofstream& out, std::uint64_t v) {
  v = byteswap_if_big(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t get_u64(std::ifstream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return byteswap_if_big(v);
}

void write_payload(std::ofstream& out, const cplx* data, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(cplx)));
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const double re = byteswap_if_big(data[i].real()), im = byteswap_if_big(data[i].imag());
      out.write(reinterpret_cast<const char*>(&re), sizeof re);
      out.write(reinterpret_cast<const char*>(&im), sizeof im);
    }
  }
}

void read_payload(std::ifstream& in, cplx* data, std::size_t n) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(cplx)));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < n; ++i) data[i] = {byteswap_if_big(data[i].real()), byteswap_if_big(data[i].imag())};
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

TnsHeader parse_header(std::ifstream& in, const std::filesystem::path& path) {
  TnsHeader h;
  in.read(h.magic, 4);
  if (!in) throw IoError("'" + path.string() + "': truncated header");
  const std::string magic(h.magic, 4);
  if (magic != "TNS3" && magic != "TNSN") throw IoError("'" + path.string() + "': bad magic '" + magic + "'");
  char vd[2];
  in.read(vd, 2);
  h.version = static_cast<std::uint8_t>(vd[0]);
  h.dtype = static_cast<std::uint8_t>(vd[1]);
  if (!in) throw IoError("'" + path.string() + "': truncated header");
  if (h.version != kVersion) throw IoError("'" + path.string() + "': unsupported version " + std::to_string(h.version));
  if (h.dtype != kComplex128) throw IoError("'" + path.string() + "': unsupported dtype " + std::to_string(h.dtype));
  std::size_t order = 3;
  if (magic == "TNSN") {
    char n = 0;
    in.read(&n, 1);
    order = static_cast<unsigned char>(n);
    if (!in || order == 0) throw IoError("'" + path.string() + "': bad order byte");
  }
  for (std::size_t m = 0; m < order; ++m) h.dims.push_back(get_u64(in));
  if (!in) throw IoError("'" + path.string() + "': truncated header");
  std::error_code ec;
  h.file_bytes = std::filesystem::file_size(path, ec);
  return h;
}

std::size_t payload_count(const TnsHeader& h, const std::filesystem::path& path) {
  std::size_t n = 1;
  for (const auto d : h.dims) {
    if (d == 0) throw IoError("'" + path.string() + "': zero dimension");
    n *= static_cast<std::size_t>(d);
  }
  const std::size_t header = 6 + (h.dims.size() == 3 && std::string(h.magic, 4) == "TNS3" ? 0 : 1) + 8 * h.dims.size();
  if (h.file_bytes != header + n * sizeof(cplx)) {
    throw IoError("'" + path.string() + "': expected " + std::to_string(header + n * sizeof(cplx)) + " bytes, found " +
                  std::to_string(h.file_bytes));
  }
  return n;
}

}  // namespace

NArray::NArray(std::vector<std::size_t> d) : dims(std::move(d)) {
  std::size_t n = 1;
  for (const auto x : dims) {
    if (x == 0) throw ShapeError("NArray dims must be positive");
    n *= x;
  }
  data.assign(n, cplx(0.0, 0.0));
}

std::size_t NArray::offset(const std::vector<std::size_t>& idx) const {
  std::size_t off = 0, stride = 1;
  for (std::size_t m = 0; m < dims.size(); ++m) {
    off += idx[m] * stride;
    stride *= dims[m];
  }
  return off;
}

void write_tns3(const std::filesystem::path& path, const Tensor3& t) {
  auto out = open_out(path);
  out.write("TNS3", 4);
  const char vd[2] = {static_cast<char>(kVersion), static_cast<char>(kComplex128)};
  out.write(vd, 2);
  for (const auto d : t.dims()) put_u64(out, d);
  write_payload(out, t.data().data(), t.size());
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

Tensor3 read_tns3(const std::filesystem::path& path) {
  auto in = open_in(path);
  const TnsHeader h = parse_header(in, path);
  if (std::string(h.magic, 4) != "TNS3") throw IoError("'" + path.string() + "' is not a TNS3 file");
  const std::size_t n = payload_count(h, path);
  std::vector<cplx> data(n);
  read_payload(in, data.data(), n);
  if (!in) throw IoError("'" + path.string() + "': truncated payload");
  try {
    return Tensor3({h.dims[0], h.dims[1], h.dims[2]}, std::move(data));
  } catch (const NumericalError& e) {
    throw IoError("'" + path.string() + "': " + e.what());
  }
}

void write_tnsn(const std::filesystem::path& path, const NArray& a) {
  if (a.dims.empty() || a.dims.size() > 255) throw ShapeError("TNSN order must be in 1..255");
  auto out = open_out(path);
  out.write("TNSN", 4);
  const char vd[3] = {static_cast<char>(kVersion), static_cast<char>(kComplex128), static_cast<char>(a.dims.size())};
  out.write(vd, 3);
  for (const auto d : a.dims) put_u64(out, d);
  write_payload(out, a.data.data(), a.size());
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

NArray read_tnsn(const std::filesystem::path& path) {
  auto in = open_in(path);
  const TnsHeader h = parse_header(in, path);
  if (std::string(h.magic, 4) != "TNSN") throw IoError("'" + path.string() + "' is not a TNSN file");
  payload_count(h, path);
  NArray a(std::vector<std::size_t>(h.dims.begin(), h.dims.end()));
  read_payload(in, a.data.data(), a.size());
  if (!in) throw IoError("'" + path.string() + "': truncated payload");
  return a;
}

TnsHeader read_header(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_header(in, path);
}

}  // namespace tensamp
