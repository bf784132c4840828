#ifndef NVFP4_TENSOR_IO_HPP
#define NVFP4_TENSOR_IO_HPP

// Binary container for NVFP4Tensor (all integers little-endian):
//
//   offset  size  field
//   0       4     magic "NVF4"
//   4       2     version (1)
//   6       1     layout (0 = row-major groups, 1 = column-major groups)
//   7       1     reserved, 0
//   8       8     rows
//   16      8     cols
//   24      n/2   FP4 codes, two per byte, element 2k in the low nibble
//   ...     n/16  E4M3 scale bytes
//   ...     4     scale32, IEEE binary32

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "nvfp4/quantizers.hpp"

namespace nvfp4 {

inline constexpr std::uint16_t kContainerVersion = 1;

class ContainerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::uint8_t> serialize(const NVFP4Tensor& t);
NVFP4Tensor deserialize(const std::vector<std::uint8_t>& bytes);

void write_tensor(std::ostream& os, const NVFP4Tensor& t);
NVFP4Tensor read_tensor(std::istream& is);

}  // namespace nvfp4

#endif  // NVFP4_TENSOR_IO_HPP
