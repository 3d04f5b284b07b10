#include "aglm/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace aglm {

CheckpointException::CheckpointException(CheckpointError code, const std::string& what)
    : std::runtime_error(what), code(code) {}

namespace {

constexpr char kMagic[4] = {'A', 'G', 'L', 'M'};

void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::string& out, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  void need(size_t n) {
    if (pos_ + n > bytes_.size()) {
      throw CheckpointException(CheckpointError::Truncated,
                                "checkpoint truncated at byte " + std::to_string(pos_));
    }
  }
  uint8_t u8() {
    need(1);
    return static_cast<uint8_t>(bytes_[pos_++]);
  }
  uint16_t u16() {
    need(2);
    uint16_t v = static_cast<uint8_t>(bytes_[pos_]) |
                 (static_cast<uint16_t>(static_cast<uint8_t>(bytes_[pos_ + 1])) << 8);
    pos_ += 2;
    return v;
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<uint32_t>(static_cast<uint8_t>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<uint64_t>(static_cast<uint8_t>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 8;
    return v;
  }
  std::string_view take(size_t n) {
    need(n);
    std::string_view out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  size_t pos() const { return pos_; }

 private:
  std::string_view bytes_;
  size_t pos_ = 0;
};

std::string hex(uint64_t v) {
  std::ostringstream out;
  out << std::hex << v;
  return out.str();
}

uint64_t from_hex(const std::string& s) { return std::stoull(s, nullptr, 16); }

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::string header;
  for (const auto& [k, v] : ckpt.config.to_map()) {
    header += "model." + k + " = " + v + "\n";
  }
  header += "hash.word = " + hex(ckpt.word_vocab_hash) + "\n";
  header += "hash.morph = " + hex(ckpt.morph_vocab_hash) + "\n";
  header += "hash.syllable = " + hex(ckpt.syll_vocab_hash) + "\n";
  header += "hash.jamo = " + hex(ckpt.jamo_vocab_hash) + "\n";
  header += "prng = " + ckpt.prng_id + "\n";
  for (const auto& [k, v] : ckpt.extra) {
    header += "run." + k + " = " + v + "\n";
  }

  std::string out;
  out.append(kMagic, 4);
  put_u16(out, Checkpoint::kVersion);
  put_u32(out, static_cast<uint32_t>(header.size()));
  out += header;
  put_u32(out, static_cast<uint32_t>(ckpt.params.tensors.size()));
  uint64_t offset = 0;
  for (const auto& [name, t] : ckpt.params.tensors) {
    put_u16(out, static_cast<uint16_t>(name.size()));
    out += name;
    out.push_back(static_cast<char>(t.rank()));
    for (int d : t.shape) put_u32(out, static_cast<uint32_t>(d));
    put_u64(out, offset);
    offset += t.size() * 4;
  }
  for (const auto& [name, t] : ckpt.params.tensors) {
    for (double v : t.data) put_f32(out, static_cast<float>(v));
  }
  return out;
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  if (std::string(r.take(4)) != std::string(kMagic, 4)) {
    throw CheckpointException(CheckpointError::BadMagic, "not a checkpoint file (bad magic)");
  }
  uint16_t version = r.u16();
  if (version != Checkpoint::kVersion) {
    throw CheckpointException(CheckpointError::VersionSkew,
                              "unsupported checkpoint version " + std::to_string(version));
  }
  uint32_t header_len = r.u32();
  std::string header{r.take(header_len)};

  Checkpoint ckpt;
  std::map<std::string, std::string> model_kv;
  std::istringstream hs(header);
  std::string line;
  while (std::getline(hs, line)) {
    size_t eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 3);
    if (key.rfind("model.", 0) == 0) {
      model_kv[key.substr(6)] = value;
    } else if (key == "hash.word") {
      ckpt.word_vocab_hash = from_hex(value);
    } else if (key == "hash.morph") {
      ckpt.morph_vocab_hash = from_hex(value);
    } else if (key == "hash.syllable") {
      ckpt.syll_vocab_hash = from_hex(value);
    } else if (key == "hash.jamo") {
      ckpt.jamo_vocab_hash = from_hex(value);
    } else if (key == "prng") {
      ckpt.prng_id = value;
    } else if (key.rfind("run.", 0) == 0) {
      ckpt.extra[key.substr(4)] = value;
    }
  }
  try {
    ckpt.config = ModelConfig::from_map(model_kv);
  } catch (const std::exception& e) {
    throw CheckpointException(CheckpointError::Malformed,
                              std::string("bad checkpoint header: ") + e.what());
  }

  uint32_t tensor_count = r.u32();
  struct Entry {
    std::string name;
    std::vector<int> shape;
    uint64_t offset;
  };
  std::vector<Entry> dir;
  uint64_t payload_size = 0;
  for (uint32_t i = 0; i < tensor_count; ++i) {
    Entry e;
    uint16_t name_len = r.u16();
    e.name = std::string(r.take(name_len));
    uint8_t rank = r.u8();
    for (uint8_t k = 0; k < rank; ++k) e.shape.push_back(static_cast<int>(r.u32()));
    e.offset = r.u64();
    payload_size += Tensor::element_count(e.shape) * 4;
    dir.push_back(std::move(e));
  }
  size_t payload_base = r.pos();
  r.take(payload_size);  // bounds check the whole payload up front
  for (const Entry& e : dir) {
    size_t n = Tensor::element_count(e.shape);
    Tensor t(e.shape);
    const char* src = bytes.data() + payload_base + e.offset;
    if (payload_base + e.offset + n * 4 > bytes.size()) {
      throw CheckpointException(CheckpointError::Truncated, "tensor payload out of bounds");
    }
    for (size_t i = 0; i < n; ++i) {
      uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) {
        bits |= static_cast<uint32_t>(static_cast<uint8_t>(src[i * 4 + b])) << (8 * b);
      }
      float v;
      std::memcpy(&v, &bits, 4);
      t.data[i] = static_cast<double>(v);
    }
    ckpt.params.tensors.emplace_back(e.name, std::move(t));
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  std::string bytes = serialize_checkpoint(ckpt);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("short write to checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str());
}

void verify_vocab_hashes(const Checkpoint& ckpt, const VocabSet& vocabs) {
  if (ckpt.word_vocab_hash != vocabs.word.hash() ||
      ckpt.morph_vocab_hash != vocabs.morph.hash() ||
      ckpt.syll_vocab_hash != vocabs.syllable.hash() ||
      ckpt.jamo_vocab_hash != vocabs.jamo.hash()) {
    throw CheckpointException(CheckpointError::VocabHashMismatch,
                              "checkpoint was trained with different vocabularies");
  }
}

}  // namespace aglm
