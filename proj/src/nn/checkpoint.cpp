#include "dcpose/nn/checkpoint.hpp"

#include <zlib.h>

#include <fstream>
#include <iterator>

namespace dcpose::nn {
namespace {

constexpr char kMagic[4] = {'D', 'C', 'P', 'K'};

template <typename V>
void put(std::vector<std::uint8_t>& out, V v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(V));
}

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& bytes, std::size_t end, const std::string& path)
      : bytes_(bytes), end_(end), path_(path) {}

  template <typename V>
  V get() {
    need(sizeof(V));
    V v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(V));
    pos_ += sizeof(V);
    return v;
  }
  std::vector<std::uint8_t> take(std::size_t n) {
    need(n);
    std::vector<std::uint8_t> out(bytes_.begin() + pos_, bytes_.begin() + pos_ + n);
    pos_ += n;
    return out;
  }
  bool done() const { return pos_ == end_; }

 private:
  void need(std::size_t n) {
    if (n > end_ - pos_) throw CheckpointCorrupted("checkpoint: truncated record in " + path_);
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
  std::string path_;
};

std::size_t dtype_size(DType d) {
  switch (d) {
    case DType::kFloat64:
      return 8;
    case DType::kFloat32:
      return 4;
    case DType::kUInt8:
      return 1;
  }
  return 0;
}

}  // namespace

std::uint32_t crc32_of(const std::vector<std::uint8_t>& bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  return static_cast<std::uint32_t>(crc32(crc, bytes.data(), static_cast<uInt>(bytes.size())));
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put<std::uint32_t>(out, ckpt.version);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.config_hash.size()));
  out.insert(out.end(), ckpt.config_hash.begin(), ckpt.config_hash.end());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.blocks.size()));
  for (const auto& b : ckpt.blocks) {
    std::size_t count = 1;
    for (auto d : b.dims) count *= static_cast<std::size_t>(d);
    if (count * dtype_size(b.dtype) != b.bytes.size()) {
      throw InvalidArgument("save_checkpoint: tensor '" + b.name + "' byte size does not match its shape");
    }
    put<std::uint32_t>(out, static_cast<std::uint32_t>(b.name.size()));
    out.insert(out.end(), b.name.begin(), b.name.end());
    put<std::uint8_t>(out, static_cast<std::uint8_t>(b.dtype));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(b.dims.size()));
    for (auto d : b.dims) put<std::int64_t>(out, d);
    out.insert(out.end(), b.bytes.begin(), b.bytes.end());
  }
  put<std::uint32_t>(out, crc32_of(out));

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw DataError("save_checkpoint: cannot write " + tmp.string());
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw DataError("save_checkpoint: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("load_checkpoint: cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw CheckpointCorrupted("load_checkpoint: bad header in " + path.string());
  }
  std::uint32_t version;
  std::memcpy(&version, bytes.data() + 4, 4);
  if (version != kCheckpointVersion) {
    throw CheckpointVersionMismatch("load_checkpoint: " + path.string() + " has format version " + std::to_string(version) +
                                    ", expected " + std::to_string(kCheckpointVersion));
  }
  const std::size_t body = bytes.size() - 4;
  std::uint32_t stored_crc;
  std::memcpy(&stored_crc, bytes.data() + body, 4);
  if (crc32_of(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + body)) != stored_crc) {
    throw CheckpointCorrupted("load_checkpoint: checksum mismatch in " + path.string());
  }

  Reader r(bytes, body, path.string());
  r.take(4);
  Checkpoint ckpt;
  ckpt.version = r.get<std::uint32_t>();
  const auto hash = r.take(r.get<std::uint32_t>());
  ckpt.config_hash.assign(hash.begin(), hash.end());
  const std::uint32_t count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    TensorBlock b;
    const auto name = r.take(r.get<std::uint32_t>());
    b.name.assign(name.begin(), name.end());
    const auto dtype = r.get<std::uint8_t>();
    if (dtype > 2) throw CheckpointCorrupted("load_checkpoint: unknown dtype in " + path.string());
    b.dtype = static_cast<DType>(dtype);
    const std::uint32_t rank = r.get<std::uint32_t>();
    if (rank > 8) throw CheckpointCorrupted("load_checkpoint: bad rank in " + path.string());
    std::size_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      const auto d = r.get<std::int64_t>();
      if (d < 0 || d > (1LL << 32)) throw CheckpointCorrupted("load_checkpoint: bad dimension in " + path.string());
      b.dims.push_back(d);
      n *= static_cast<std::size_t>(d);
      if (n > body) throw CheckpointCorrupted("load_checkpoint: tensor larger than file in " + path.string());
    }
    b.bytes = r.take(n * dtype_size(b.dtype));
    ckpt.blocks.push_back(std::move(b));
  }
  if (!r.done()) throw CheckpointCorrupted("load_checkpoint: trailing bytes in " + path.string());
  return ckpt;
}

}  // namespace dcpose::nn
