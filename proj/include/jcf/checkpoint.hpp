#pragma once

// Checkpoint container.
//
//   offset 0   8 bytes   magic "JCFCKPT\0"
//   offset 8   u32 LE    format version (1)
//   offset 12  u64 LE    header length H
//   offset 20  H bytes   UTF-8 JSON header
//   offset 20+H          tensor payload, IEEE-754 binary64 little-endian
//
// Header fields: schema, model (ModelConfig), config (the run configuration),
// config_hash, step, epoch, tensors: [{name, shape, offset, count}] where
// offset and count are in doubles relative to the payload start.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "jcf/model.hpp"

namespace jcf {

inline constexpr char kCheckpointMagic[8] = {'J', 'C', 'F', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload is written in host order and assumes little-endian");

inline nlohmann::json model_config_to_json(const ModelConfig& c) {
  return {{"method", std::string(to_string(c.method))},
          {"d_in", c.d_in},
          {"d", c.d},
          {"out_dim", c.out_dim},
          {"n_words", c.n_words},
          {"rank", c.rank},
          {"temperature", c.temperature},
          {"hard_assignment", c.hard_assignment},
          {"dual_codebook", c.dual_codebook},
          {"normalize_output", c.normalize_output},
          {"eps", c.eps}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.method = method_from_string(j.at("method").get<std::string>());
  c.d_in = j.at("d_in").get<std::size_t>();
  c.d = j.at("d").get<std::size_t>();
  c.out_dim = j.at("out_dim").get<std::size_t>();
  c.n_words = j.at("n_words").get<std::size_t>();
  c.rank = j.at("rank").get<std::size_t>();
  c.temperature = j.at("temperature").get<double>();
  c.hard_assignment = j.at("hard_assignment").get<bool>();
  c.dual_codebook = j.at("dual_codebook").get<bool>();
  c.normalize_output = j.at("normalize_output").get<bool>();
  c.eps = j.at("eps").get<double>();
  return c;
}

// Zero-filled parameters with the shapes `cfg` implies.
inline ModelParams shaped_model(const ModelConfig& cfg) {
  cfg.validate();
  ModelParams p;
  p.config = cfg;
  const std::size_t d = cfg.pooled_dim(), big_d = cfg.out_dim, n = cfg.n_words, r = cfg.rank;
  p.reduction = Matrix(cfg.d_in, d);
  if (uses_codebook(cfg.method)) {
    p.codebook = Codebook(Matrix(n, d, 1.0), cfg.assign_mode());
    if (cfg.dual_codebook) p.codebook_q = Codebook(Matrix(n, d, 1.0), cfg.assign_mode());
  }
  switch (cfg.method) {
    case Method::Factorized:
      p.rank1 = {Matrix(big_d, d), Matrix(big_d, d)};
      break;
    case Method::Jcf:
      p.jcf = {Tensor3(big_d, d, n), Tensor3(big_d, d, n)};
      break;
    case Method::JcfShared:
      p.shared = {Tensor3(big_d, d, r), Tensor3(big_d, d, r), Matrix(n, r), Matrix(n, r)};
      break;
    default:
      break;
  }
  return p;
}

struct Checkpoint {
  ModelParams params;
  nlohmann::json run_config = nlohmann::json::object();
  std::string config_hash;
  std::uint64_t step = 0;
  std::uint64_t epoch = 0;
};

inline std::string encode_checkpoint(const Checkpoint& ck) {
  nlohmann::json header;
  header["schema"] = 1;
  header["model"] = model_config_to_json(ck.params.config);
  header["config"] = ck.run_config;
  header["config_hash"] = ck.config_hash;
  header["step"] = ck.step;
  header["epoch"] = ck.epoch;
  header["tensors"] = nlohmann::json::array();
  std::vector<double> payload;
  ck.params.for_each_tensor([&](const ConstTensorRef& t) {
    header["tensors"].push_back(
        {{"name", std::string(t.name)}, {"shape", t.shape}, {"offset", payload.size()}, {"count", t.data.size()}});
    payload.insert(payload.end(), t.data.begin(), t.data.end());
  });
  const std::string head = header.dump();
  const std::uint64_t head_len = head.size();

  std::string out;
  out.append(kCheckpointMagic, sizeof kCheckpointMagic);
  out.append(reinterpret_cast<const char*>(&kCheckpointVersion), sizeof kCheckpointVersion);
  out.append(reinterpret_cast<const char*>(&head_len), sizeof head_len);
  out.append(head);
  out.append(reinterpret_cast<const char*>(payload.data()), payload.size() * sizeof(double));
  return out;
}

inline Checkpoint decode_checkpoint(const std::string& bytes) {
  constexpr std::size_t kPrefix = sizeof kCheckpointMagic + sizeof(std::uint32_t) + sizeof(std::uint64_t);
  if (bytes.size() < kPrefix || std::memcmp(bytes.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0)
    throw InputError("checkpoint: bad magic");
  std::uint32_t version = 0;
  std::uint64_t head_len = 0;
  std::memcpy(&version, bytes.data() + 8, sizeof version);
  std::memcpy(&head_len, bytes.data() + 12, sizeof head_len);
  if (version != kCheckpointVersion)
    throw InputError("checkpoint: unsupported version " + std::to_string(version));
  if (bytes.size() < kPrefix + head_len) throw InputError("checkpoint: truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(kPrefix, head_len));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("checkpoint: malformed header: ") + e.what());
  }
  const std::size_t payload_at = kPrefix + head_len;
  const std::size_t payload_doubles = (bytes.size() - payload_at) / sizeof(double);

  Checkpoint ck;
  try {
    ck.params = shaped_model(model_config_from_json(header.at("model")));
    ck.run_config = header.at("config");
    ck.config_hash = header.at("config_hash").get<std::string>();
    ck.step = header.at("step").get<std::uint64_t>();
    ck.epoch = header.at("epoch").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("checkpoint: ") + e.what());
  }

  std::size_t filled = 0;
  ck.params.for_each_tensor([&](const TensorRef& t) {
    const nlohmann::json* entry = nullptr;
    for (const auto& e : header.at("tensors"))
      if (e.at("name").get<std::string>() == t.name) entry = &e;
    if (!entry) throw InputError("checkpoint: missing tensor '" + std::string(t.name) + "'");
    const auto shape = entry->at("shape").get<std::vector<std::size_t>>();
    const auto offset = entry->at("offset").get<std::size_t>();
    const auto count = entry->at("count").get<std::size_t>();
    if (shape != t.shape || count != t.data.size())
      throw ShapeError("checkpoint: tensor '" + std::string(t.name) + "' has the wrong shape");
    if (offset + count > payload_doubles)
      throw InputError("checkpoint: tensor '" + std::string(t.name) + "' runs past the payload");
    std::memcpy(t.data.data(), bytes.data() + payload_at + offset * sizeof(double),
                count * sizeof(double));
    ++filled;
  });
  if (filled != header.at("tensors").size()) throw InputError("checkpoint: unexpected extra tensors");
  return ck;
}

inline void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  const std::string bytes = encode_checkpoint(ck);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("checkpoint: cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("checkpoint: cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

// Throws NumericError naming the first tensor holding a NaN or infinity.
inline void require_finite(const ModelParams& p) {
  p.for_each_tensor([](const ConstTensorRef& t) {
    if (!all_finite(t.data))
      throw NumericError(std::string(t.name), "tensor '" + std::string(t.name) + "' has non-finite entries");
  });
}

}  // namespace jcf
