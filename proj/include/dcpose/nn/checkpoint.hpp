#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "dcpose/errors.hpp"
#include "dcpose/nn/adam.hpp"
#include "dcpose/nn/tensor.hpp"

namespace dcpose::nn {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

class CheckpointVersionMismatch : public DataError {
 public:
  using DataError::DataError;
};
class CheckpointCorrupted : public DataError {
 public:
  using DataError::DataError;
};
class CheckpointShapeMismatch : public DataError {
 public:
  using DataError::DataError;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class DType : std::uint8_t { kFloat64 = 0, kFloat32 = 1, kUInt8 = 2 };

struct TensorBlock {
  std::string name;
  DType dtype = DType::kFloat64;
  std::vector<std::int64_t> dims;
  std::vector<std::uint8_t> bytes;
};

/// File layout (little-endian):
///   "DCPK" | u32 version | u32 hash length | hash bytes | u32 block count
///   per block: u32 name length | name | u8 dtype | u32 rank | i64 dims[rank] | raw values
///   u32 CRC-32 of everything before it
struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::string config_hash;
  std::vector<TensorBlock> blocks;

  const TensorBlock* find(const std::string& name) const {
    for (const auto& b : blocks) {
      if (b.name == name) return &b;
    }
    return nullptr;
  }
  const TensorBlock& at(const std::string& name) const {
    const TensorBlock* b = find(name);
    if (!b) throw CheckpointShapeMismatch("checkpoint: missing tensor '" + name + "'");
    return *b;
  }
};

/// Writes to a temporary sibling and renames, so a crash never leaves a half-written file.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
/// Throws CheckpointCorrupted, CheckpointVersionMismatch or DataError (unreadable file).
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::uint32_t crc32_of(const std::vector<std::uint8_t>& bytes);

template <typename T>
constexpr DType dtype_of() {
  if constexpr (std::is_same_v<T, double>) return DType::kFloat64;
  else if constexpr (std::is_same_v<T, float>) return DType::kFloat32;
  else return DType::kUInt8;
}

template <typename T>
TensorBlock make_block(std::string name, const Shape& shape, std::span<const T> values) {
  TensorBlock b;
  b.name = std::move(name);
  b.dtype = dtype_of<T>();
  for (int d : shape) b.dims.push_back(d);
  b.bytes.resize(values.size() * sizeof(T));
  if (!values.empty()) std::memcpy(b.bytes.data(), values.data(), b.bytes.size());
  return b;
}

inline TensorBlock make_text_block(std::string name, const std::string& text) {
  return make_block<std::uint8_t>(std::move(name), {static_cast<int>(text.size())},
                                  std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

inline std::string block_text(const TensorBlock& b) {
  if (b.dtype != DType::kUInt8) throw CheckpointShapeMismatch("checkpoint: tensor '" + b.name + "' is not text");
  return std::string(b.bytes.begin(), b.bytes.end());
}

/// Checks a block against an expected shape and element type.
template <typename T>
void check_block(const TensorBlock& b, const Shape& shape) {
  std::vector<std::int64_t> want(shape.begin(), shape.end());
  if (b.dims != want) {
    std::string got = "[";
    for (std::size_t i = 0; i < b.dims.size(); ++i) got += (i ? "," : "") + std::to_string(b.dims[i]);
    throw CheckpointShapeMismatch("checkpoint: tensor '" + b.name + "' has shape " + got + "], expected " + shape_string(shape));
  }
  if (b.dtype != dtype_of<T>()) throw CheckpointShapeMismatch("checkpoint: tensor '" + b.name + "' has a different dtype");
}

template <typename T>
void copy_block(const TensorBlock& b, std::span<T> out) {
  std::memcpy(out.data(), b.bytes.data(), out.size() * sizeof(T));
}

/// Appends parameters and, when given, Adam moments and step count.
template <typename T>
void append_state(Checkpoint& ckpt, const ParameterList<T>& params, const Adam<T>* adam) {
  for (const auto& p : params) ckpt.blocks.push_back(make_block<T>(p.name, p.tensor.shape(), p.tensor.value()));
  if (!adam) return;
  for (const auto& s : adam->slots()) {
    ckpt.blocks.push_back(make_block<T>("adam.m/" + s.param.name, s.param.tensor.shape(), std::span<const T>(s.m)));
    ckpt.blocks.push_back(make_block<T>("adam.v/" + s.param.name, s.param.tensor.shape(), std::span<const T>(s.v)));
  }
  const double step = static_cast<double>(adam->step_count());
  ckpt.blocks.push_back(make_block<double>("adam.step", {1}, std::span<const double>(&step, 1)));
}

/// Validates every tensor first, then copies; a failing checkpoint leaves the targets untouched.
template <typename T>
void restore_state(const Checkpoint& ckpt, const ParameterList<T>& params, Adam<T>* adam) {
  for (const auto& p : params) check_block<T>(ckpt.at(p.name), p.tensor.shape());
  if (adam) {
    for (const auto& s : adam->slots()) {
      check_block<T>(ckpt.at("adam.m/" + s.param.name), s.param.tensor.shape());
      check_block<T>(ckpt.at("adam.v/" + s.param.name), s.param.tensor.shape());
    }
    check_block<double>(ckpt.at("adam.step"), {1});
  }
  for (const auto& p : params) {
    Tensor<T> t = p.tensor;
    copy_block<T>(ckpt.at(p.name), t.value());
  }
  if (adam) {
    for (auto& s : adam->slots()) {
      copy_block<T>(ckpt.at("adam.m/" + s.param.name), std::span<T>(s.m));
      copy_block<T>(ckpt.at("adam.v/" + s.param.name), std::span<T>(s.v));
    }
    double step = 0;
    copy_block<double>(ckpt.at("adam.step"), std::span<double>(&step, 1));
    adam->set_step_count(static_cast<long>(step));
  }
}

}  // namespace dcpose::nn
