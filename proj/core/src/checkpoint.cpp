// Copyright 2026 The asrkit Authors
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

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "json.hpp"

#include "asrkit/error.hpp"
#include "asrkit/toymodel.hpp"

namespace asrkit::toymodel {
namespace {

constexpr char kMagic[8] = {'A', 'S', 'R', 'K', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    T v;
    std::memcpy(&v, take(sizeof(T)), sizeof(T));
    return v;
  }

  const std::uint8_t* take(std::size_t n) {
    if (n > bytes_.size() - pos_) throw Error(Errc::MalformedCheckpoint, "checkpoint is truncated");
    const auto* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

nlohmann::ordered_json metadata(const ModelParams& p) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json layers = nlohmann::ordered_json::array();
  for (const auto& l : p.encoder.layers) layers.push_back({l.kernel, l.stride, l.channels});
  j["encoder"] = {{"layers", layers}};
  j["context"] = {{"embed_dim", p.context.embed_dim},   {"attention_heads", p.context.attention_heads},
                  {"ffn_dim", p.context.ffn_dim},       {"blocks", p.context.blocks},
                  {"pos_kernel", p.context.pos_kernel}, {"pos_groups", p.context.pos_groups}};
  j["vocab"] = p.vocab.symbols();
  j["codebook_size"] = p.codebook_size;
  return j;
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const ModelParams& p) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  const std::string meta = metadata(p).dump();
  put<std::uint64_t>(out, meta.size());
  out.insert(out.end(), meta.begin(), meta.end());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(p.tensors.size()));
  for (const auto& [name, m] : p.tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
    const auto* data = reinterpret_cast<const std::uint8_t*>(m.data());
    out.insert(out.end(), data, data + static_cast<std::size_t>(m.size()) * sizeof(double));
  }
  return out;
}

ModelParams deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (std::memcmp(r.take(sizeof kMagic), kMagic, sizeof kMagic) != 0) {
    throw Error(Errc::MalformedCheckpoint, "bad magic");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw Error(Errc::MalformedCheckpoint, "unsupported version " + std::to_string(version));
  }
  const auto meta_len = r.get<std::uint64_t>();
  const auto* meta_bytes = r.take(static_cast<std::size_t>(meta_len));

  ModelParams shape;
  try {
    const auto j = nlohmann::json::parse(meta_bytes, meta_bytes + meta_len);
    EncoderConfig enc;
    enc.layers.clear();
    for (const auto& l : j.at("encoder").at("layers")) {
      enc.layers.push_back({l.at(0).get<int>(), l.at(1).get<int>(), l.at(2).get<int>()});
    }
    const auto& c = j.at("context");
    ContextConfig ctx;
    ctx.embed_dim = c.at("embed_dim").get<int>();
    ctx.attention_heads = c.at("attention_heads").get<int>();
    ctx.ffn_dim = c.at("ffn_dim").get<int>();
    ctx.blocks = c.at("blocks").get<int>();
    ctx.pos_kernel = c.at("pos_kernel").get<int>();
    ctx.pos_groups = c.at("pos_groups").get<int>();
    ctc::Vocabulary vocab(j.at("vocab").get<std::vector<std::string>>());
    shape = ModelParams::init(enc, ctx, vocab, 0, j.at("codebook_size").get<int>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedCheckpoint, std::string("metadata: ") + e.what());
  } catch (const Error& e) {
    throw Error(Errc::MalformedCheckpoint, std::string("metadata: ") + e.what());
  }

  const auto count = r.get<std::uint32_t>();
  if (count != shape.tensors.size()) throw Error(Errc::MalformedCheckpoint, "tensor count differs from configuration");
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = r.get<std::uint32_t>();
    const auto* name_bytes = r.take(len);
    const std::string name(reinterpret_cast<const char*>(name_bytes), len);
    const auto it = shape.tensors.find(name);
    if (it == shape.tensors.end()) throw Error(Errc::MalformedCheckpoint, "unexpected tensor " + name);
    const auto rows = r.get<std::uint64_t>();
    const auto cols = r.get<std::uint64_t>();
    if (rows != static_cast<std::uint64_t>(it->second.rows()) || cols != static_cast<std::uint64_t>(it->second.cols())) {
      throw Error(Errc::MalformedCheckpoint, "shape mismatch for " + name);
    }
    std::memcpy(it->second.data(), r.take(static_cast<std::size_t>(rows * cols) * sizeof(double)),
                static_cast<std::size_t>(rows * cols) * sizeof(double));
  }
  if (!r.done()) throw Error(Errc::MalformedCheckpoint, "trailing bytes after tensors");
  return shape;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& p) {
  const auto bytes = serialize_checkpoint(p);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace asrkit::toymodel
