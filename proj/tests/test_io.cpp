#include <doctest.h>

#include <filesystem>
#include <cstring>
#include <fstream>

#include "tensamp/cpd.hpp"
#include "tensamp/error.hpp"
#include "tensamp/tns_io.hpp"

using namespace tensamp;
namespace fs = std::filesystem;

namespace {

fs::path tmp(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "tensamp_test_io";
  fs::create_directories(d);
  return d / name;
}

}  // namespace

TEST_CASE("TNS3 round trip is exact") {
  const Tensor3 t = cpd_reconstruct(random_factors({3, 4, 5}, 2, 9));
  write_tns3(tmp("a.tns3"), t);
  CHECK(read_tns3(tmp("a.tns3")) == t);
  const TnsHeader h = read_header(tmp("a.tns3"));
  CHECK(std::string(h.magic) == "TNS3");
  CHECK(h.dims == std::vector<std::uint64_t>{3, 4, 5});
  CHECK(h.file_bytes == fs::file_size(tmp("a.tns3")));
}

TEST_CASE("TNS3 byte layout") {
  Tensor3 t({1, 1, 2});
  t(0, 0, 1) = {1.5, -2.0};
  write_tns3(tmp("b.tns3"), t);
  std::ifstream in(tmp("b.tns3"), std::ios::binary);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), {});
  REQUIRE(bytes.size() == 4 + 1 + 1 + 24 + 32);
  CHECK(std::string(bytes.data(), 4) == "TNS3");
  CHECK(bytes[4] == 1);
  CHECK(bytes[5] == 0);
  double re = 0, im = 0;
  std::memcpy(&re, bytes.data() + 30 + 16, 8);
  std::memcpy(&im, bytes.data() + 30 + 24, 8);
  CHECK(re == 1.5);
  CHECK(im == -2.0);
}

TEST_CASE("corrupt and missing files raise IoError") {
  CHECK_THROWS_AS(read_tns3(tmp("missing.tns3")), IoError);
  const Tensor3 t = cpd_reconstruct(random_factors({2, 2, 2}, 1, 1));
  write_tns3(tmp("c.tns3"), t);
  fs::resize_file(tmp("c.tns3"), fs::file_size(tmp("c.tns3")) - 3);
  CHECK_THROWS_AS(read_tns3(tmp("c.tns3")), IoError);
  {
    std::ofstream out(tmp("d.tns3"), std::ios::binary);
    out << "NOPE0000000000000000000000000000";
  }
  CHECK_THROWS_AS(read_tns3(tmp("d.tns3")), IoError);
}

TEST_CASE("TNSN round trip") {
  NArray a({2, 3, 1, 2});
  for (std::size_t p = 0; p < a.size(); ++p) a.data[p] = {static_cast<double>(p), -static_cast<double>(p)};
  write_tnsn(tmp("e.tnsn"), a);
  const NArray b = read_tnsn(tmp("e.tnsn"));
  CHECK(b.dims == a.dims);
  CHECK(b.data == a.data);
  CHECK(read_header(tmp("e.tnsn")).dims.size() == 4);
  CHECK_THROWS_AS(read_tns3(tmp("e.tnsn")), IoError);
}
