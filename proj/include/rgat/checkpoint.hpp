#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rgat/embeddings.hpp"
#include "rgat/errors.hpp"
#include "rgat/matrix.hpp"

namespace rgat {

inline constexpr char kRgckMagic[4] = {'R', 'G', 'C', 'K'};
inline constexpr std::uint16_t kRgckVersion = 1;

// Named-tensor container: magic, version, count, then per tensor a
// length-prefixed name, the shape, and f32 row-major data, little-endian.
template <typename Visitable>
std::string encode_checkpoint(const Visitable& v) {
  std::string out;
  out.append(kRgckMagic, 4);
  detail::put_u16(out, kRgckVersion);
  std::uint64_t count = 0;
  v.visit([&](const std::string&, const char*, const auto&, bool) { ++count; });
  detail::put_u64(out, count);
  v.visit([&](const std::string& name, const char*, const auto& m, bool) {
    if (name.size() > 0xffff) throw format_error("checkpoint: tensor name too long");
    detail::put_u16(out, static_cast<std::uint16_t>(name.size()));
    out += name;
    detail::put_u32(out, static_cast<std::uint32_t>(m.rows));
    detail::put_u32(out, static_cast<std::uint32_t>(m.cols));
    for (const auto value : m.a) detail::put_f32(out, static_cast<float>(value));
  });
  return out;
}

template <typename Visitable>
void decode_checkpoint(const std::string& bytes, Visitable& v) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kRgckMagic, 4) != 0)
    throw format_error("checkpoint: bad magic, not an RGCK file");
  detail::ByteReader r(bytes, "checkpoint");
  r.bytes(4);
  const std::uint16_t version = r.u16();
  if (version != kRgckVersion)
    throw format_error("checkpoint: unsupported version " + std::to_string(version));
  const std::uint64_t count = r.u64();
  std::map<std::string, std::pair<std::pair<int, int>, std::vector<float>>> tensors;
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint16_t name_len = r.u16();
    const std::string name = r.bytes(name_len);
    const int rows = static_cast<int>(r.u32());
    const int cols = static_cast<int>(r.u32());
    std::vector<float> data(static_cast<std::size_t>(rows) * cols);
    for (float& value : data) value = r.f32();
    if (!tensors.emplace(name, std::make_pair(std::make_pair(rows, cols), std::move(data)))
             .second)
      throw format_error("checkpoint: duplicate tensor '" + name + "'");
  }
  if (!r.exhausted()) throw format_error("checkpoint: trailing bytes after last tensor");

  std::size_t used = 0;
  v.visit([&](const std::string& name, const char*, auto& m, bool) {
    auto it = tensors.find(name);
    if (it == tensors.end())
      throw format_error("checkpoint: missing tensor '" + name + "'");
    const auto& [shape, data] = it->second;
    if (shape.first != m.rows || shape.second != m.cols)
      throw format_error("checkpoint: tensor '" + name + "' has shape (" +
                         std::to_string(shape.first) + "x" + std::to_string(shape.second) +
                         "), expected " + m.shape_str());
    for (std::size_t k = 0; k < data.size(); ++k)
      m.a[k] = static_cast<typename std::decay_t<decltype(m)>::value_type>(data[k]);
    ++used;
  });
  if (used != tensors.size())
    throw format_error("checkpoint: file holds " + std::to_string(tensors.size()) +
                       " tensors, model expects " + std::to_string(used));
}

template <typename Visitable>
void save_checkpoint(const std::filesystem::path& path, const Visitable& v) {
  detail::write_file_bytes(path, encode_checkpoint(v), "checkpoint");
}

template <typename Visitable>
void load_checkpoint(const std::filesystem::path& path, Visitable& v) {
  decode_checkpoint(detail::read_file_bytes(path, "checkpoint"), v);
}

}  // namespace rgat
