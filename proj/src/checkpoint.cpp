// Copyright 2026 The glyphstack Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "glyphstack/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "glyphstack/error.hpp"
#include "glyphstack/keyvalue.hpp"

namespace glyphstack {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

namespace {

constexpr char kMagic[4] = {'F', 'T', 'C', 'K'};
constexpr std::size_t kHeaderBytes = 4 + 4 + 8;

ParameterList parallel_list(FontModel& m) {
  ParameterList out = m.codec_parameters();
  for (Parameter* p : m.parallel_parameters()) out.push_back(p);
  return out;
}

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(std::string_view bytes, std::size_t offset) {
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  return value;
}

void put_tensor(std::string& out, const Tensor& t) {
  out.append(reinterpret_cast<const char*>(t.data()), t.size() * sizeof(double));
}

void put_stack(KeyValues& kv, const std::string& prefix, const StackConfig& s) {
  kv.set(prefix + ".d_model", s.d_model);
  kv.set(prefix + ".encoder_layers", s.encoder_layers);
  kv.set(prefix + ".decoder_layers", s.decoder_layers);
  kv.set(prefix + ".heads", s.heads);
  kv.set(prefix + ".ff_width", s.ff_width);
}

StackConfig get_stack(const KeyValues& kv, const std::string& prefix) {
  StackConfig s;
  s.d_model = kv.get_size(prefix + ".d_model");
  s.encoder_layers = kv.get_size(prefix + ".encoder_layers");
  s.decoder_layers = kv.get_size(prefix + ".decoder_layers");
  s.heads = kv.get_size(prefix + ".heads");
  s.ff_width = kv.get_size(prefix + ".ff_width");
  return s;
}

std::string shape_text(const Tensor& t) {
  std::string s;
  for (std::size_t e : t.shape()) s += (s.empty() ? "" : "x") + std::to_string(e);
  return s;
}

// Reads consecutive f64 arrays out of the payload.
class PayloadReader {
 public:
  explicit PayloadReader(std::string_view payload) : payload_(payload) {}

  void fill(Tensor& t, const std::string& what) {
    const std::size_t bytes = t.size() * sizeof(double);
    if (offset_ + bytes > payload_.size()) throw CheckpointError("checkpoint truncated inside " + what);
    std::memcpy(t.data(), payload_.data() + offset_, bytes);
    offset_ += bytes;
  }
  std::size_t offset() const { return offset_; }

 private:
  std::string_view payload_;
  std::size_t offset_ = 0;
};

}  // namespace

std::string chunk_string(const ChunkConfig& cfg) {
  return std::to_string(cfg.height) + "x" + std::to_string(cfg.width) + "/B" + std::to_string(cfg.block) +
         "/P" + std::to_string(cfg.patch) + "/L" + std::to_string(cfg.patch_dim);
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  FontModel& model = const_cast<FontModel&>(ckpt.model);
  const ModelConfig& cfg = model.config();
  const ParameterList params = model.all_parameters();

  std::string payload;
  for (const Parameter* p : params) put_tensor(payload, p->value);
  const AdamState* states[2] = {&ckpt.parallel_adam, &ckpt.serial_adam};
  for (const AdamState* s : states) {
    for (const Tensor& t : s->first_moment) put_tensor(payload, t);
    for (const Tensor& t : s->second_moment) put_tensor(payload, t);
  }

  KeyValues kv;
  kv.set("chunk.height", cfg.chunk.height);
  kv.set("chunk.width", cfg.chunk.width);
  kv.set("chunk.block", cfg.chunk.block);
  kv.set("chunk.patch", cfg.chunk.patch);
  kv.set("chunk.patch_dim", cfg.chunk.patch_dim);
  kv.set("dims.style", cfg.dims.style);
  kv.set("dims.content", cfg.dims.content);
  kv.set("dims.wubi", cfg.dims.wubi);
  kv.set("style_rows", cfg.style_rows);
  kv.set("chars", cfg.chars);
  put_stack(kv, "parallel", cfg.parallel);
  put_stack(kv, "serial", cfg.serial);
  kv.set("param_count", params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    kv.set("param." + std::to_string(i), params[i]->name + " " + shape_text(params[i]->value));
  }
  const char* tags[2] = {"adam.parallel", "adam.serial"};
  for (int i = 0; i < 2; ++i) {
    const AdamState& s = *states[i];
    kv.set(std::string(tags[i]) + ".tensors", s.first_moment.size());
    kv.set(std::string(tags[i]) + ".step", static_cast<std::size_t>(s.step));
    kv.set_double(std::string(tags[i]) + ".beta1", s.beta1);
    kv.set_double(std::string(tags[i]) + ".beta2", s.beta2);
    kv.set_double(std::string(tags[i]) + ".eps", s.eps);
  }
  kv.set("seed", std::to_string(ckpt.seed));
  kv.set("references", ckpt.references);
  kv.set("config_digest", ckpt.config_digest);
  kv.set("split_digest", ckpt.split_digest);
  kv.set_sizes("pretrain_styles", ckpt.pretrain_styles);
  kv.set_sizes("finetuned_styles", ckpt.finetuned_styles);
  kv.set("payload_bytes", payload.size());
  kv.set("payload_fnv1a", hex64(fnv1a64(payload)));

  const std::string meta = kv.to_text();
  std::string out(kMagic, 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, meta.size());
  out += meta;
  out += payload;
  return out;
}

Checkpoint parse_checkpoint(std::string_view bytes) {
  if (bytes.size() < kHeaderBytes) throw CheckpointError("checkpoint truncated: header incomplete");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw CheckpointError("not a checkpoint: bad magic");
  const auto version = take<std::uint32_t>(bytes, 4);
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint version " + std::to_string(version) + " unsupported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  const auto meta_len = take<std::uint64_t>(bytes, 8);
  if (meta_len > bytes.size() - kHeaderBytes) throw CheckpointError("checkpoint truncated inside metadata");
  const std::string_view meta = bytes.substr(kHeaderBytes, meta_len);
  const std::string_view payload = bytes.substr(kHeaderBytes + meta_len);

  KeyValues kv;
  try {
    kv = KeyValues::parse(meta);
  } catch (const Error& e) {
    throw CheckpointError(std::string("checkpoint metadata corrupt: ") + e.what());
  }
  try {
    const std::size_t expected_bytes = kv.get_size("payload_bytes");
    if (payload.size() < expected_bytes) {
      throw CheckpointError("checkpoint truncated: payload has " + std::to_string(payload.size()) +
                            " of " + std::to_string(expected_bytes) + " bytes");
    }
    if (payload.size() > expected_bytes) throw CheckpointError("checkpoint corrupt: trailing bytes");
    if (hex64(fnv1a64(payload)) != kv.get("payload_fnv1a")) {
      throw CheckpointError("checkpoint corrupt: payload checksum mismatch");
    }

    ModelConfig cfg;
    cfg.chunk = {kv.get_size("chunk.height"), kv.get_size("chunk.width"), kv.get_size("chunk.block"),
                 kv.get_size("chunk.patch"), kv.get_size("chunk.patch_dim")};
    cfg.dims = {kv.get_size("dims.style"), kv.get_size("dims.content"), kv.get_size("dims.wubi")};
    cfg.style_rows = kv.get_size("style_rows");
    cfg.chars = kv.get_size("chars");
    cfg.parallel = get_stack(kv, "parallel");
    cfg.serial = get_stack(kv, "serial");

    Checkpoint ckpt;
    ckpt.model = FontModel(cfg, 0);
    ckpt.seed = kv.get_u64_or("seed", 0);
    ckpt.references = kv.get_size("references");
    ckpt.config_digest = kv.get_or("config_digest", "");
    ckpt.split_digest = kv.get_or("split_digest", "");
    ckpt.pretrain_styles = kv.get_sizes("pretrain_styles");
    ckpt.finetuned_styles = kv.get_sizes("finetuned_styles");

    const ParameterList params = ckpt.model.all_parameters();
    if (kv.get_size("param_count") != params.size()) {
      throw CheckpointError("checkpoint corrupt: parameter count mismatch");
    }
    PayloadReader reader(payload);
    for (std::size_t i = 0; i < params.size(); ++i) {
      const std::string declared = kv.get("param." + std::to_string(i));
      if (declared != params[i]->name + " " + shape_text(params[i]->value)) {
        throw CheckpointError("checkpoint corrupt: parameter " + std::to_string(i) + " is '" + declared +
                              "', expected '" + params[i]->name + " " + shape_text(params[i]->value) + "'");
      }
      reader.fill(params[i]->value, params[i]->name);
    }
    const ParameterList lists[2] = {parallel_list(ckpt.model), ckpt.model.serial_parameters()};
    AdamState* states[2] = {&ckpt.parallel_adam, &ckpt.serial_adam};
    const char* tags[2] = {"adam.parallel", "adam.serial"};
    for (int i = 0; i < 2; ++i) {
      const std::string tag = tags[i];
      const std::size_t tensors = kv.get_size(tag + ".tensors");
      AdamState& s = *states[i];
      s.beta1 = kv.get_double(tag + ".beta1");
      s.beta2 = kv.get_double(tag + ".beta2");
      s.eps = kv.get_double(tag + ".eps");
      s.step = kv.get_size(tag + ".step");
      if (tensors == 0) continue;
      if (tensors != lists[i].size()) throw CheckpointError("checkpoint corrupt: " + tag + " tensor count");
      const AdamState shaped = AdamState::for_params(lists[i], s.beta1, s.beta2, s.eps);
      s.first_moment = shaped.first_moment;
      s.second_moment = shaped.second_moment;
      for (Tensor& t : s.first_moment) reader.fill(t, tag);
      for (Tensor& t : s.second_moment) reader.fill(t, tag);
    }
    if (reader.offset() != payload.size()) throw CheckpointError("checkpoint corrupt: payload size mismatch");
    for (const Parameter* p : params) {
      if (!p->value.all_finite()) throw CheckpointError("checkpoint corrupt: non-finite values in " + p->name);
    }
    return ckpt;
  } catch (const CheckpointError&) {
    throw;
  } catch (const Error& e) {
    throw CheckpointError(std::string("checkpoint metadata corrupt: ") + e.what());
  }
}

std::string checkpoint_digest(const Checkpoint& ckpt) { return hex64(fnv1a64(serialize_checkpoint(ckpt))); }

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("checkpoint write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const std::optional<ChunkConfig>& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read checkpoint " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  Checkpoint ckpt = parse_checkpoint(buffer.str());
  if (expected && !(ckpt.model.chunk() == *expected)) {
    throw CheckpointError("checkpoint config mismatch: chunk " + chunk_string(ckpt.model.chunk()) +
                          ", expected " + chunk_string(*expected));
  }
  return ckpt;
}

}  // namespace glyphstack
