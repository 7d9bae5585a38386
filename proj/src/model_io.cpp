#include "reinflect/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "reinflect/errors.hpp"

namespace reinflect {

namespace {

using Bytes = std::vector<std::uint8_t>;
using json = nlohmann::json;

void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(Bytes& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

constexpr std::size_t kHeaderSize = sizeof(kModelMagic) + 4 + 8;

json manifest_of(const ModelParameters& model) {
  json m;
  m["hyperparameters"] = {{"embed_dim", model.hyper.embed_dim},
                          {"hidden_dim", model.hyper.hidden_dim},
                          {"decoder_dim", model.hyper.decoder_dim},
                          {"attention_dim", model.hyper.attention_dim}};
  json symbols = json::array();
  for (const Symbol& s : model.vocab.symbols()) symbols.push_back({to_string(s.cls), s.text});
  m["vocabulary"] = std::move(symbols);
  json tensors = json::array();
  for (const auto& t : model.tensors()) tensors.push_back({{"name", t.name}, {"shape", t.tensor->shape()}});
  m["tensors"] = std::move(tensors);
  return m;
}

}  // namespace

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t size) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::uint8_t> serialize_model(const ModelParameters& model) {
  const std::string manifest = manifest_of(model).dump();
  Bytes out(std::begin(kModelMagic), std::end(kModelMagic));
  put_u32(out, kModelFormatVersion);
  put_u64(out, manifest.size());
  out.insert(out.end(), manifest.begin(), manifest.end());
  for (const auto& t : model.tensors()) {
    for (double v : t.tensor->data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  put_u64(out, fnv1a64(out.data(), out.size()));
  return out;
}

ModelParameters deserialize_model(const std::vector<std::uint8_t>& bytes) {
  using R = LoadError::Reason;
  if (bytes.size() < sizeof(kModelMagic)) throw LoadError(R::kTruncated, "model file shorter than its header");
  if (std::memcmp(bytes.data(), kModelMagic, sizeof(kModelMagic)) != 0) {
    throw LoadError(R::kBadMagic, "not a model file (bad magic bytes)");
  }
  if (bytes.size() < kHeaderSize) throw LoadError(R::kTruncated, "model file shorter than its header");
  const std::uint32_t version = get_u32(bytes.data() + sizeof(kModelMagic));
  if (version != kModelFormatVersion) {
    throw LoadError(R::kVersion, "unsupported model format version " + std::to_string(version) + " (expected " +
                                     std::to_string(kModelFormatVersion) + ")");
  }
  const std::uint64_t manifest_size = get_u64(bytes.data() + sizeof(kModelMagic) + 4);
  if (manifest_size > bytes.size() - kHeaderSize) throw LoadError(R::kTruncated, "model manifest is truncated");

  json manifest;
  ModelParameters model;
  std::size_t expected = 0;
  try {
    manifest = json::parse(bytes.begin() + kHeaderSize, bytes.begin() + kHeaderSize + manifest_size);
    const json& h = manifest.at("hyperparameters");
    Hyperparameters hyper{h.at("embed_dim").get<std::size_t>(), h.at("hidden_dim").get<std::size_t>(),
                          h.at("decoder_dim").get<std::size_t>(), h.at("attention_dim").get<std::size_t>()};
    std::vector<Symbol> symbols;
    for (const json& s : manifest.at("vocabulary")) {
      symbols.push_back({symbol_class_from_string(s.at(0).get<std::string>()), s.at(1).get<std::string>()});
    }
    model = ModelParameters::zeros(Vocabulary::from_symbols(std::move(symbols)), hyper);
    const json& tensors = manifest.at("tensors");
    auto slots = model.tensors();
    if (tensors.size() != slots.size()) throw LoadError(R::kFormat, "model tensor count mismatch");
    for (std::size_t i = 0; i < slots.size(); ++i) {
      if (tensors[i].at("name").get<std::string>() != slots[i].name ||
          tensors[i].at("shape").get<Tensor::Shape>() != slots[i].tensor->shape()) {
        throw LoadError(R::kFormat, "model tensor '" + std::string(slots[i].name) + "' does not match the manifest");
      }
      expected += slots[i].tensor->size() * 8;
    }
  } catch (const LoadError&) {
    throw;
  } catch (const std::exception& e) {
    throw LoadError(R::kFormat, std::string("malformed model manifest: ") + e.what());
  }

  const std::size_t data_begin = kHeaderSize + manifest_size;
  const std::size_t total = data_begin + expected + 8;
  if (bytes.size() < total) throw LoadError(R::kTruncated, "model tensor data is truncated");
  if (bytes.size() > total) throw LoadError(R::kFormat, "trailing bytes after model checksum");
  if (fnv1a64(bytes.data(), total - 8) != get_u64(bytes.data() + total - 8)) {
    throw LoadError(R::kChecksum, "model checksum mismatch");
  }

  const std::uint8_t* p = bytes.data() + data_begin;
  for (const auto& slot : model.tensors()) {
    for (double& v : slot.tensor->data()) {
      v = std::bit_cast<double>(get_u64(p));
      p += 8;
    }
  }
  return model;
}

void save_model(const ModelParameters& model, const std::filesystem::path& path) {
  const Bytes bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError(LoadError::Reason::kIo, "cannot write model file " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw LoadError(LoadError::Reason::kIo, "failed writing model file " + path.string());
}

ModelParameters load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(LoadError::Reason::kIo, "cannot open model file " + path.string());
  const Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace reinflect
