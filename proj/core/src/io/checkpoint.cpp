#include "nli/io/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "nli/errors.hpp"

namespace nli {
namespace {

constexpr char kMagic[8] = {'N', 'L', 'I', 'C', 'K', 'P', 'T', '\0'};

enum SectionId : std::uint32_t {
  kConfigSection = 1,
  kMetaSection = 2,
  kTensorSection = 3,
  kEndSection = 0xFFFFFFFFu,
};

constexpr std::uint8_t kDtypeFloat32 = 1;

const char* section_name(std::uint32_t id) {
  switch (id) {
    case kConfigSection:
      return "CONFIG";
    case kMetaSection:
      return "META";
    case kTensorSection:
      return "TENSORS";
    case kEndSection:
      return "END";
  }
  return "UNKNOWN";
}

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(const std::string& s) { buf_ += s; }
  const std::string& buffer() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& buf, std::string section) : buf_(buf), section_(std::move(section)) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(buf_[pos_++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf_[pos_++])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(buf_[pos_++])) << (8 * i);
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return buf_.size() - pos_; }
  const std::string& section() const { return section_; }

 private:
  void need(std::size_t n) const {
    if (buf_.size() - pos_ < n) throw IntegrityError(section_, "truncated");
  }

  const std::string& buf_;
  std::size_t pos_ = 0;
  std::string section_;
};

std::uint32_t checksum(const std::string& payload) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(payload.data()), static_cast<uInt>(payload.size())));
}

void write_section(Writer& file, std::uint32_t id, const std::string& payload) {
  file.u32(id);
  file.u64(payload.size());
  file.bytes(payload);
  file.u32(checksum(payload));
}

std::string read_section(Reader& file, std::uint32_t expected_id) {
  const std::string name = section_name(expected_id);
  std::uint32_t id = 0;
  std::uint64_t length = 0;
  try {
    id = file.u32();
    length = file.u64();
  } catch (const IntegrityError&) {
    throw IntegrityError(name, "truncated section header");
  }
  if (id != expected_id) {
    throw IntegrityError(name, std::string("expected section id ") + std::to_string(expected_id) + ", found " +
                                   std::to_string(id));
  }
  if (length > file.remaining()) throw IntegrityError(name, "truncated payload");
  std::string payload = file.bytes(static_cast<std::size_t>(length));
  std::uint32_t stored = 0;
  try {
    stored = file.u32();
  } catch (const IntegrityError&) {
    throw IntegrityError(name, "truncated checksum");
  }
  if (stored != checksum(payload)) throw IntegrityError(name, "checksum mismatch");
  return payload;
}

void write_config(Writer& w, const ModelConfig& c) {
  for (std::uint64_t v : {c.n_blocks, c.n_heads, c.d_model, c.max_len, c.vocab_words, c.d_ffn, c.n_classes}) w.u64(v);
  w.f64(c.layer_norm_eps);
  w.f64(c.init_std);
  w.f64(c.dropout);
  w.u64(c.fingerprint());
}

ModelConfig read_config(Reader& r) {
  ModelConfig c;
  for (std::size_t* field : {&c.n_blocks, &c.n_heads, &c.d_model, &c.max_len, &c.vocab_words, &c.d_ffn, &c.n_classes}) {
    *field = static_cast<std::size_t>(r.u64());
  }
  c.layer_norm_eps = r.f64();
  c.init_std = r.f64();
  c.dropout = r.f64();
  const std::uint64_t stored_hash = r.u64();
  if (stored_hash != c.fingerprint()) throw ConfigError("checkpoint config hash does not match its stored config");
  return c;
}

}  // namespace

void save_checkpoint(const ModelConfig& config, const ModelParameters<float>& params, const CheckpointMeta& meta,
                     const std::filesystem::path& path) {
  params.check_shapes(config);
  Writer file;
  file.bytes(std::string(kMagic, sizeof kMagic));
  file.u32(kCheckpointVersion);

  Writer cfg;
  write_config(cfg, config);
  write_section(file, kConfigSection, cfg.buffer());

  Writer m;
  m.u64(meta.vocab_fingerprint);
  m.i64(meta.best_epoch);
  m.f64(meta.best_val_accuracy);
  m.u64(meta.seed);
  write_section(file, kMetaSection, m.buffer());

  Writer t;
  const auto named = params.named_tensors();
  t.u32(static_cast<std::uint32_t>(named.size()));
  for (const auto& [name, tensor] : named) {
    t.u32(static_cast<std::uint32_t>(name.size()));
    t.bytes(name);
    t.u8(kDtypeFloat32);
    t.u32(static_cast<std::uint32_t>(tensor.rank()));
    for (std::size_t d : tensor.shape()) t.u64(d);
    for (float v : tensor.data()) t.f32(v);
  }
  write_section(file, kTensorSection, t.buffer());
  write_section(file, kEndSection, "");

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IngestionError("cannot write checkpoint " + path.string());
  out.write(file.buffer().data(), static_cast<std::streamsize>(file.buffer().size()));
  if (!out) throw IngestionError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelConfig* expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot read checkpoint " + path.string());
  const std::string contents((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  Reader file(contents, "HEADER");
  if (contents.size() < sizeof kMagic || std::memcmp(contents.data(), kMagic, sizeof kMagic) != 0) {
    throw IntegrityError("HEADER", "bad magic, not a checkpoint file");
  }
  file.bytes(sizeof kMagic);
  const std::uint32_t version = file.u32();
  if (version != kCheckpointVersion) {
    throw VersionError("checkpoint format version " + std::to_string(version) + " is not supported (reader is v" +
                       std::to_string(kCheckpointVersion) + ")");
  }

  Checkpoint ckpt;
  {
    const std::string payload = read_section(file, kConfigSection);
    Reader r(payload, "CONFIG");
    ckpt.config = read_config(r);
    try {
      ckpt.config.validate();
    } catch (const ConfigError& e) {
      throw IntegrityError("CONFIG", e.what());
    }
  }
  if (expected != nullptr && !(*expected == ckpt.config)) {
    throw ConfigError("checkpoint config (" + describe(ckpt.config) + ") does not match expected (" +
                      describe(*expected) + ")");
  }
  {
    const std::string payload = read_section(file, kMetaSection);
    Reader r(payload, "META");
    ckpt.meta.vocab_fingerprint = r.u64();
    ckpt.meta.best_epoch = r.i64();
    ckpt.meta.best_val_accuracy = r.f64();
    ckpt.meta.seed = r.u64();
  }
  {
    const std::string payload = read_section(file, kTensorSection);
    Reader r(payload, "TENSORS");
    const auto layout = parameter_layout(ckpt.config);
    const std::uint32_t count = r.u32();
    if (count != layout.size()) {
      throw IntegrityError("TENSORS", "expected " + std::to_string(layout.size()) + " tensors, found " +
                                          std::to_string(count));
    }
    ckpt.params = ModelParameters<float>::zeros(ckpt.config);
    auto named = ckpt.params.named_tensors();
    for (std::size_t i = 0; i < count; ++i) {
      const std::string name = r.bytes(r.u32());
      if (name != layout[i].first) {
        throw IntegrityError("TENSORS", "expected tensor " + layout[i].first + ", found " + name);
      }
      if (r.u8() != kDtypeFloat32) throw IntegrityError("TENSORS", "unsupported dtype for " + name);
      Shape shape(r.u32());
      for (auto& d : shape) d = static_cast<std::size_t>(r.u64());
      if (shape != layout[i].second) {
        throw IntegrityError("TENSORS", "tensor " + name + " has shape " + shape_string(shape) + ", expected " +
                                            shape_string(layout[i].second));
      }
      for (float& v : named[i].second.mutable_data()) v = r.f32();
    }
    if (r.remaining() != 0) throw IntegrityError("TENSORS", "trailing bytes after last tensor");
  }
  read_section(file, kEndSection);
  if (file.remaining() != 0) throw IntegrityError("END", "trailing bytes after end marker");
  return ckpt;
}

}  // namespace nli
