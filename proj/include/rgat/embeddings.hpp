#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rgat/conllu.hpp"
#include "rgat/errors.hpp"
#include "rgat/gap.hpp"
#include "rgat/rng.hpp"

namespace rgat {

// Frozen per-(document, token) contextual vectors. Immutable once loaded;
// concurrent reads are fine.
class TokenEmbeddingTable {
 public:
  using Key = std::pair<std::string, int>;

  TokenEmbeddingTable() = default;
  explicit TokenEmbeddingTable(int dim) : dim_(dim) {
    if (dim < 1) throw config_error("embedding table: dimension must be >= 1");
  }

  int dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }

  void insert(const std::string& doc_id, int token_index, std::vector<float> v) {
    if (dim_ == 0) dim_ = static_cast<int>(v.size());
    if (static_cast<int>(v.size()) != dim_)
      throw format_error("embedding record for (" + doc_id + ", " +
                         std::to_string(token_index) + ") has dimension " +
                         std::to_string(v.size()) + ", table dimension is " +
                         std::to_string(dim_));
    auto [it, fresh] = entries_.emplace(Key{doc_id, token_index}, std::move(v));
    if (!fresh)
      throw duplication_error("duplicate embedding key (" + doc_id + ", " +
                              std::to_string(token_index) + ")");
  }

  const std::vector<float>& lookup(const std::string& doc_id, int token_index) const {
    auto it = entries_.find(Key{doc_id, token_index});
    if (it == entries_.end())
      throw lookup_error("no embedding for document '" + doc_id + "' token " +
                         std::to_string(token_index));
    return it->second;
  }

  bool contains(const std::string& doc_id, int token_index) const {
    return entries_.count(Key{doc_id, token_index}) > 0;
  }

  // ordered by (doc_id, token_index), which fixes the on-disk record order
  const std::map<Key, std::vector<float>>& entries() const { return entries_; }

 private:
  int dim_ = 0;
  std::map<Key, std::vector<float>> entries_;
};

namespace detail {

inline void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}
inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_f32(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

class ByteReader {
 public:
  ByteReader(const std::string& data, std::string what) : data_(data), what_(std::move(what)) {}

  std::uint16_t u16() { return static_cast<std::uint16_t>(byte() | byte() << 8); }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(byte()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(byte()) << (8 * i);
    return v;
  }
  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  std::string bytes(std::size_t n) {
    if (pos_ + n > data_.size()) overflow();
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool exhausted() const { return pos_ == data_.size(); }

 private:
  std::uint8_t byte() {
    if (pos_ >= data_.size()) overflow();
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  [[noreturn]] void overflow() const {
    throw format_error(what_ + ": unexpected end of file");
  }
  const std::string& data_;
  std::string what_;
  std::size_t pos_ = 0;
};

inline std::string read_file_bytes(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw usage_error(std::string("cannot open ") + what + " '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file_bytes(const std::filesystem::path& path, const std::string& bytes,
                             const char* what) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw usage_error(std::string("cannot write ") + what + " '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace detail

inline constexpr char kRgebMagic[4] = {'R', 'G', 'E', 'B'};
inline constexpr std::uint16_t kRgebVersion = 1;

inline std::string encode_rgeb(const TokenEmbeddingTable& table) {
  std::string out;
  out.append(kRgebMagic, 4);
  detail::put_u16(out, kRgebVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(table.dim()));
  detail::put_u64(out, table.size());
  for (const auto& [key, vec] : table.entries()) {
    if (key.first.size() > 0xffff)
      throw format_error("rgeb: document id longer than 65535 bytes");
    detail::put_u16(out, static_cast<std::uint16_t>(key.first.size()));
    out += key.first;
    detail::put_u32(out, static_cast<std::uint32_t>(key.second));
    for (float v : vec) detail::put_f32(out, v);
  }
  return out;
}

inline TokenEmbeddingTable decode_rgeb(const std::string& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kRgebMagic, 4) != 0)
    throw format_error("rgeb: bad magic, not an RGEB file");
  detail::ByteReader r(bytes, "rgeb");
  r.bytes(4);
  const std::uint16_t version = r.u16();
  if (version != kRgebVersion)
    throw format_error("rgeb: unsupported version " + std::to_string(version));
  const std::uint32_t dim = r.u32();
  const std::uint64_t count = r.u64();
  if (dim == 0 && count > 0) throw format_error("rgeb: zero dimension with nonzero count");
  TokenEmbeddingTable table(dim == 0 ? 1 : static_cast<int>(dim));
  if (dim == 0) return TokenEmbeddingTable{};
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint16_t id_len = r.u16();
    const std::string doc = r.bytes(id_len);
    const std::uint32_t token = r.u32();
    std::vector<float> vec(dim);
    for (std::uint32_t k = 0; k < dim; ++k) vec[k] = r.f32();
    table.insert(doc, static_cast<int>(token), std::move(vec));
  }
  if (!r.exhausted()) throw format_error("rgeb: trailing bytes after last record");
  return table;
}

// Companion textual format for hand-written tests:
//   doc_id TAB token_index TAB v v v ...
inline TokenEmbeddingTable decode_embedding_text(const std::string& text) {
  TokenEmbeddingTable table;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = detail::split_tabs(line);
    if (cells.size() != 3)
      throw parse_error("embedding text line " + std::to_string(line_no) +
                        ": expected doc, index and values separated by tabs");
    int token = 0;
    try {
      token = std::stoi(cells[1]);
    } catch (const std::exception&) {
      throw parse_error("embedding text line " + std::to_string(line_no) +
                        ": token index '" + cells[1] + "' is not an integer");
    }
    std::vector<float> vec;
    std::istringstream vals(cells[2]);
    std::string cell;
    while (vals >> cell) {
      try {
        vec.push_back(std::stof(cell));
      } catch (const std::exception&) {
        throw parse_error("embedding text line " + std::to_string(line_no) + ": bad value '" +
                          cell + "'");
      }
    }
    if (vec.empty())
      throw parse_error("embedding text line " + std::to_string(line_no) + ": no values");
    try {
      table.insert(cells[0], token, std::move(vec));
    } catch (const format_error& e) {
      throw format_error("embedding text line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return table;
}

// Sniffs the magic: RGEB binary or the textual companion format.
inline TokenEmbeddingTable load_table(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file_bytes(path, "embedding file");
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kRgebMagic, 4) == 0)
    return decode_rgeb(bytes);
  return decode_embedding_text(bytes);
}

inline void write_table(const TokenEmbeddingTable& table, const std::filesystem::path& path) {
  detail::write_file_bytes(path, encode_rgeb(table), "embedding file");
}

// Class-correlated additive component that makes synthetic labels decodable:
// label A adds `scale` to coordinate 0 of the A-mention tokens and the
// pronoun token, label B to coordinate 1, NEITHER to coordinate 2 of the
// pronoun token only.
struct SignalTarget {
  std::string doc_id;
  Label label = Label::Neither;
  MentionTokens mentions;
};

struct SignalSpec {
  double scale = 3.0;
  std::vector<SignalTarget> targets;
};

// Deterministic synthetic embeddings: per-token standard-normal vectors from
// a stream seeded on (seed, doc_id, token_index).
inline TokenEmbeddingTable synth_embeddings(const std::vector<DependencyGraph>& graphs, int dim,
                                            std::uint64_t seed,
                                            const SignalSpec* signal = nullptr) {
  if (dim < 4) throw config_error("synth embeddings: dimension must be >= 4");
  TokenEmbeddingTable table(dim);
  for (const DependencyGraph& g : graphs) {
    const std::uint64_t doc_seed = mix_seed(seed, fnv1a64(g.doc_id));
    for (const Token& tok : g.tokens) {
      SplitMix64 rng(mix_seed(doc_seed, static_cast<std::uint64_t>(tok.index)));
      std::vector<float> vec(dim);
      for (float& v : vec) v = static_cast<float>(rng.normal());
      table.insert(g.doc_id, tok.index, std::move(vec));
    }
  }
  if (signal) {
    std::map<TokenEmbeddingTable::Key, std::vector<float>> boosted(table.entries());
    for (const SignalTarget& target : signal->targets) {
      const int coord = static_cast<int>(target.label);
      auto bump = [&](int token) {
        auto it = boosted.find({target.doc_id, token});
        if (it == boosted.end())
          throw coverage_error("signal target (" + target.doc_id + ", " +
                               std::to_string(token) + ") has no synthesized embedding");
        it->second[coord] += static_cast<float>(signal->scale);
      };
      if (target.label == Label::A)
        for (int tok : target.mentions.a) bump(tok);
      if (target.label == Label::B)
        for (int tok : target.mentions.b) bump(tok);
      bump(target.mentions.p);
    }
    TokenEmbeddingTable out(dim);
    for (auto& [key, vec] : boosted) out.insert(key.first, key.second, std::move(vec));
    return out;
  }
  return table;
}

}  // namespace rgat
