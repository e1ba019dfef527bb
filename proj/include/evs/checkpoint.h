// Copyright 2026 The evs Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EVS_CHECKPOINT_H_
#define EVS_CHECKPOINT_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "evs/tensor.h"

namespace evs {

struct NamedTensor {
  std::string name;
  Tensor tensor;

  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

inline constexpr char kCheckpointMagic[4] = {'E', 'V', 'S', 'M'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

// Layout, all little-endian:
//   "EVSM" u16 version u32 tensor_count
//   per tensor: u16 name_len, name bytes, u32 rank, rank x u32 dims,
//               product(dims) x f32
std::vector<std::uint8_t> encode_checkpoint(std::span<const NamedTensor> tensors);

// Parses the tensor section. When `consumed` is non-null the number of bytes
// read is stored there and trailing bytes are left to the caller; otherwise
// trailing bytes are a FormatError.
std::vector<NamedTensor> decode_checkpoint(std::span<const std::uint8_t> bytes,
                                           std::size_t* consumed = nullptr);

}  // namespace evs

#endif  // EVS_CHECKPOINT_H_
