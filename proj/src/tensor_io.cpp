#include "nvfp4/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <istream>
#include <iterator>
#include <ostream>

namespace nvfp4 {
namespace {

constexpr std::uint8_t kMagic[4] = {'N', 'V', 'F', '4'};
constexpr std::size_t kHeaderSize = 24;

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_le(const std::vector<std::uint8_t>& in, std::size_t off, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(in[off + i]) << (8 * i);
  return v;
}

}  // namespace

std::vector<std::uint8_t> serialize(const NVFP4Tensor& t) {
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + t.size() / 2 + t.groups() + 4);
  for (std::uint8_t c : kMagic) out.push_back(c);
  put_le(out, kContainerVersion, 2);
  out.push_back(static_cast<std::uint8_t>(t.layout));
  out.push_back(0);
  put_le(out, t.shape.rows, 8);
  put_le(out, t.shape.cols, 8);
  for (std::size_t i = 0; i < t.size(); i += 2) {
    const std::uint8_t lo = t.fp4[i].bits & 0xF;
    const std::uint8_t hi = i + 1 < t.size() ? (t.fp4[i + 1].bits & 0xF) : 0;
    out.push_back(static_cast<std::uint8_t>(lo | (hi << 4)));
  }
  for (Fp8Code s : t.scales8) out.push_back(s.bits);
  put_le(out, std::bit_cast<std::uint32_t>(t.scale32), 4);
  return out;
}

NVFP4Tensor deserialize(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kHeaderSize || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw ContainerError("deserialize: missing NVF4 magic");
  }
  if (get_le(bytes, 4, 2) != kContainerVersion) {
    throw ContainerError("deserialize: unsupported container version");
  }
  const std::uint8_t layout = bytes[6];
  if (layout > 1) throw ContainerError("deserialize: unknown layout");
  const Shape shape{get_le(bytes, 8, 8), get_le(bytes, 16, 8)};
  const std::size_t n = shape.rows * shape.cols;
  if (n % kGroupSize != 0) throw ContainerError("deserialize: element count not a multiple of 16");
  const std::size_t code_bytes = (n + 1) / 2;
  const std::size_t groups = n / kGroupSize;
  if (bytes.size() != kHeaderSize + code_bytes + groups + 4) {
    throw ContainerError("deserialize: payload size does not match header");
  }

  NVFP4Tensor t;
  t.shape = shape;
  t.layout = static_cast<GroupLayout>(layout);
  t.fp4.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t b = bytes[kHeaderSize + i / 2];
    t.fp4[i] = Fp4Code{static_cast<std::uint8_t>(i % 2 == 0 ? (b & 0xF) : (b >> 4))};
  }
  t.scales8.resize(groups);
  for (std::size_t g = 0; g < groups; ++g) t.scales8[g] = Fp8Code{bytes[kHeaderSize + code_bytes + g]};
  t.scale32 = std::bit_cast<float>(
      static_cast<std::uint32_t>(get_le(bytes, kHeaderSize + code_bytes + groups, 4)));
  return t;
}

void write_tensor(std::ostream& os, const NVFP4Tensor& t) {
  const auto bytes = serialize(t);
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw ContainerError("write_tensor: stream write failed");
}

NVFP4Tensor read_tensor(std::istream& is) {
  std::vector<std::uint8_t> bytes(std::istreambuf_iterator<char>(is), {});
  return deserialize(bytes);
}

}  // namespace nvfp4
