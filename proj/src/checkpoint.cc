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

#include "evs/checkpoint.h"

#include <cstring>

#include "byte_io.h"

namespace evs {

std::vector<std::uint8_t> encode_checkpoint(std::span<const NamedTensor> tensors) {
  io::ByteWriter w;
  w.raw(std::string_view(kCheckpointMagic, 4));
  w.u16(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const NamedTensor& nt : tensors) {
    w.string16(nt.name);
    w.u32(static_cast<std::uint32_t>(nt.tensor.rank()));
    for (int d : nt.tensor.shape()) w.u32(static_cast<std::uint32_t>(d));
    for (float v : nt.tensor.data()) w.f32(v);
  }
  return w.take();
}

std::vector<NamedTensor> decode_checkpoint(std::span<const std::uint8_t> bytes,
                                           std::size_t* consumed) {
  io::ByteReader r(bytes);
  auto magic = r.bytes(4, "magic");
  if (std::memcmp(magic.data(), kCheckpointMagic, 4) != 0) {
    throw FormatError("bad checkpoint magic", 0);
  }
  const std::size_t version_at = r.offset();
  if (r.u16() != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version", version_at);
  }
  const std::uint32_t count = r.u32();
  std::vector<NamedTensor> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor nt;
    nt.name = r.string16();
    const std::size_t rank_at = r.offset();
    const std::uint32_t rank = r.u32();
    if (rank > 8) throw FormatError("implausible tensor rank", rank_at);
    Shape shape;
    std::size_t n = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      const std::size_t dim_at = r.offset();
      const std::uint32_t dim = r.u32();
      if (dim == 0 || dim > (1u << 28)) throw FormatError("bad tensor dimension", dim_at);
      shape.push_back(static_cast<int>(dim));
      n *= dim;
    }
    if (n * 4 > r.remaining()) throw FormatError("truncated tensor payload", r.offset());
    std::vector<float> data(n);
    for (float& v : data) v = r.f32();
    nt.tensor = Tensor(std::move(shape), std::move(data));
    out.push_back(std::move(nt));
  }
  if (consumed) {
    *consumed = r.offset();
  } else if (!r.done()) {
    throw FormatError("trailing bytes after checkpoint", r.offset());
  }
  return out;
}

}  // namespace evs
