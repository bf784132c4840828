#include <doctest.h>

#include <sstream>
#include <vector>

#include "nvfp4/prng.hpp"
#include "nvfp4/quantizers.hpp"
#include "nvfp4/tensor_io.hpp"

using namespace nvfp4;

namespace {

NVFP4Tensor sample_tensor() {
  Matrix m(16, 32);
  fill_gaussian(4, 0, 0, m.data());
  return quantize_matrix(m, GroupLayout::kColMajor,
                         [](auto s) { return quantize_rtn(s, GridMax(6.0)); });
}

}  // namespace

TEST_CASE("container round trip") {
  const NVFP4Tensor t = sample_tensor();
  CHECK(deserialize(serialize(t)) == t);
  std::stringstream ss;
  write_tensor(ss, t);
  CHECK(read_tensor(ss) == t);
}

TEST_CASE("container layout") {
  const NVFP4Tensor t = sample_tensor();
  const auto bytes = serialize(t);
  REQUIRE(bytes.size() == 24 + t.size() / 2 + t.groups() + 4);
  CHECK(bytes[0] == 'N');
  CHECK(bytes[3] == '4');
  CHECK(bytes[4] == 1);
  CHECK(bytes[5] == 0);
  CHECK(bytes[6] == 1);  // column-major groups
  CHECK(bytes[8] == 16);
  CHECK(bytes[16] == 32);
  CHECK((bytes[24] & 0xF) == t.fp4[0].bits);
  CHECK((bytes[24] >> 4) == t.fp4[1].bits);
  CHECK(bytes[24 + t.size() / 2] == t.scales8[0].bits);
}

TEST_CASE("malformed containers are rejected") {
  auto bytes = serialize(sample_tensor());
  SUBCASE("magic") {
    bytes[0] = 'X';
    CHECK_THROWS_AS(deserialize(bytes), ContainerError);
  }
  SUBCASE("version") {
    bytes[4] = 9;
    CHECK_THROWS_AS(deserialize(bytes), ContainerError);
  }
  SUBCASE("layout") {
    bytes[6] = 7;
    CHECK_THROWS_AS(deserialize(bytes), ContainerError);
  }
  SUBCASE("truncation") {
    bytes.pop_back();
    CHECK_THROWS_AS(deserialize(bytes), ContainerError);
  }
  SUBCASE("empty") { CHECK_THROWS_AS(deserialize({}), ContainerError); }
}
