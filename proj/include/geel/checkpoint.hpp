#pragma once

// Checkpoint layout (all integers little-endian):
//   "GEEL" | u32 format version | u64 json length | canonical JSON config |
//   f64 tensors in Parameters::tensors() order | u32 CRC32 of everything before it

#include <zlib.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "json.hpp"

#include "geel/error.hpp"
#include "geel/model.hpp"

namespace geel {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig config;
  Parameters params;
  nlohmann::json codec;                          // SequenceCodec::to_json()
  nlohmann::json extra = nlohmann::json::object();  // free-form run metadata
};

inline nlohmann::json to_json(const ModelConfig& c) {
  return {{"vocab_size", c.vocab_size}, {"embed_dim", c.embed_dim},       {"num_layers", c.num_layers},
          {"input_dropout", c.input_dropout}, {"max_nodes", c.max_nodes}, {"mode", to_string(c.mode)}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.num_layers = j.at("num_layers").get<std::size_t>();
  c.input_dropout = j.at("input_dropout").get<double>();
  c.max_nodes = j.at("max_nodes").get<std::size_t>();
  c.mode = j.at("mode").get<std::string>() == "attributed" ? SequenceMode::attributed : SequenceMode::plain;
  c.validate();
  return c;
}

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline std::uint64_t get_le(const std::string& in, std::size_t at, int bytes) {
  if (at + static_cast<std::size_t>(bytes) > in.size()) throw ParseError(0, "checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}
inline std::uint32_t crc32_of(const std::string& bytes, std::size_t len) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(len)));
}

}  // namespace detail

inline std::string serialize_checkpoint(const Checkpoint& ck) {
  nlohmann::json cfg = {{"model", to_json(ck.config)}, {"codec", ck.codec}, {"extra", ck.extra}};
  const std::string text = cfg.dump();
  std::string out = "GEEL";
  detail::put_u32(out, kCheckpointVersion);
  detail::put_u64(out, text.size());
  out += text;
  for (const Matrix* m : ck.params.tensors())
    for (double x : m->data) detail::put_u64(out, std::bit_cast<std::uint64_t>(x));
  detail::put_u32(out, detail::crc32_of(out, out.size()));
  return out;
}

inline Checkpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < 20 || bytes.compare(0, 4, "GEEL") != 0) throw ParseError(0, "not a GEEL checkpoint");
  const auto stored_crc = static_cast<std::uint32_t>(detail::get_le(bytes, bytes.size() - 4, 4));
  if (stored_crc != detail::crc32_of(bytes, bytes.size() - 4)) throw ParseError(0, "checkpoint CRC mismatch");
  const auto version = static_cast<std::uint32_t>(detail::get_le(bytes, 4, 4));
  if (version > kCheckpointVersion)
    throw ParseError(0, "checkpoint version " + std::to_string(version) + " is newer than supported " +
                            std::to_string(kCheckpointVersion));
  const auto len = detail::get_le(bytes, 8, 8);
  if (16 + len > bytes.size() - 4) throw ParseError(0, "checkpoint truncated");
  const auto cfg = nlohmann::json::parse(bytes.substr(16, len));
  Checkpoint ck;
  ck.config = model_config_from_json(cfg.at("model"));
  ck.codec = cfg.at("codec");
  ck.extra = cfg.value("extra", nlohmann::json::object());
  ck.params = Parameters::zeros(ck.config);
  std::size_t at = 16 + len;
  for (Matrix* m : ck.params.tensors())
    for (double& x : m->data) {
      x = std::bit_cast<double>(detail::get_le(bytes, at, 8));
      at += 8;
    }
  if (at != bytes.size() - 4) throw ParseError(0, "checkpoint tensor payload size mismatch");
  return ck;
}

inline void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  const auto bytes = serialize_checkpoint(ck);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace geel
