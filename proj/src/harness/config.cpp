#include "dcpose/harness/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>

#include "dcpose/errors.hpp"
#include "dcpose/harness/hashing.hpp"

namespace dcpose {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double to_double(const std::string& key, const std::string& v) {
  double out;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("config: '" + key + "' expects an integer, got '" + v + "'");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("config: '" + key + "' expects an unsigned integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config: '" + key + "' expects true or false, got '" + v + "'");
}

std::vector<std::string> split(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_same_v<T, std::string>) {
      out += xs[i];
    } else {
      out += std::to_string(xs[i]);
    }
  }
  return out;
}

struct Binding {
  const char* key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

#define DCPOSE_DOUBLE(KEY, FIELD)                                                \
  Binding {                                                                      \
    KEY, [](const ExperimentConfig& c) { return fmt(c.FIELD); },                 \
        [](ExperimentConfig& c, const std::string& v) { c.FIELD = to_double(KEY, v); } \
  }
#define DCPOSE_INT(KEY, FIELD)                                                                      \
  Binding {                                                                                         \
    KEY, [](const ExperimentConfig& c) { return std::to_string(c.FIELD); },                         \
        [](ExperimentConfig& c, const std::string& v) { c.FIELD = static_cast<int>(to_int(KEY, v)); } \
  }
#define DCPOSE_BOOL(KEY, FIELD)                                                  \
  Binding {                                                                      \
    KEY, [](const ExperimentConfig& c) { return std::string(c.FIELD ? "true" : "false"); }, \
        [](ExperimentConfig& c, const std::string& v) { c.FIELD = to_bool(KEY, v); } \
  }

const std::vector<Binding>& bindings() {
  static const std::vector<Binding> table = {
      {"seed", [](const ExperimentConfig& c) { return std::to_string(c.seed); },
       [](ExperimentConfig& c, const std::string& v) { c.seed = to_u64("seed", v); }},
      DCPOSE_INT("gen.frames", gen.frames),
      DCPOSE_INT("gen.width", gen.width),
      DCPOSE_INT("gen.height", gen.height),
      DCPOSE_DOUBLE("gen.fx", gen.fx),
      DCPOSE_DOUBLE("gen.fy", gen.fy),
      DCPOSE_INT("gen.max_attempts", gen.sampler.max_attempts),
      DCPOSE_DOUBLE("gen.min_visibility", gen.sampler.min_visibility),
      DCPOSE_DOUBLE("gen.target_region", gen.sampler.target_region),
      DCPOSE_INT("gen.border_margin", gen.sampler.border_margin),
      DCPOSE_DOUBLE("gen.tissue_depth_min", gen.backdrop.depth_min),
      DCPOSE_DOUBLE("gen.tissue_depth_max", gen.backdrop.depth_max),
      DCPOSE_DOUBLE("gen.tissue_amplitude", gen.backdrop.amplitude),
      DCPOSE_DOUBLE("gen.tissue_half_extent", gen.backdrop.half_extent),
      DCPOSE_INT("gen.tissue_resolution", gen.backdrop.resolution),
      DCPOSE_INT("train.steps", train.steps),
      DCPOSE_INT("train.batch", train.batch),
      DCPOSE_INT("train.crop", train.crop),
      DCPOSE_INT("train.positives", train.positives),
      DCPOSE_INT("train.negatives", train.negatives),
      DCPOSE_DOUBLE("train.lr_encoder", train.lr_encoder),
      DCPOSE_DOUBLE("train.lr_field", train.lr_field),
      DCPOSE_INT("train.checkpoint_every", train.checkpoint_every),
      DCPOSE_DOUBLE("train.crop_padding", train.crop_padding),
      {"train.precision",
       [](const ExperimentConfig& c) { return std::string(c.train.precision == Precision::kFloat64 ? "float64" : "float32"); },
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "float64") c.train.precision = Precision::kFloat64;
         else if (v == "float32") c.train.precision = Precision::kFloat32;
         else throw ConfigError("config: 'train.precision' expects float64 or float32, got '" + v + "'");
       }},
      DCPOSE_DOUBLE("loss.alpha", loss.alpha),
      DCPOSE_DOUBLE("loss.beta", loss.beta),
      DCPOSE_DOUBLE("loss.lambda", loss.lambda),
      DCPOSE_DOUBLE("loss.m", loss.m),
      {"model.field_hidden", [](const ExperimentConfig& c) { return join(c.field.hidden); },
       [](ExperimentConfig& c, const std::string& v) {
         c.field.hidden.clear();
         for (const auto& s : split(v)) c.field.hidden.push_back(static_cast<int>(to_int("model.field_hidden", s)));
       }},
      DCPOSE_DOUBLE("model.omega0", field.omega0),
      DCPOSE_INT("model.embedding_dim", field.embedding_dim),
      DCPOSE_INT("model.encoder_levels", encoder.levels),
      DCPOSE_INT("model.encoder_base", encoder.base_channels),
      DCPOSE_INT("model.encoder_max", encoder.max_channels),
      DCPOSE_INT("infer.key_bank", infer.key_bank),
      DCPOSE_INT("infer.samples", infer.correspondences.samples),
      DCPOSE_DOUBLE("infer.inverse_temperature", infer.correspondences.inverse_temperature),
      DCPOSE_INT("infer.ransac_iterations", infer.ransac.iterations),
      DCPOSE_DOUBLE("infer.threshold_px", infer.ransac.threshold_px),
      DCPOSE_BOOL("infer.refine", infer.ransac.refine),
      DCPOSE_INT("ablate.seeds", ablate.seeds),
      DCPOSE_INT("ablate.train_frames", ablate.train_frames),
      DCPOSE_INT("ablate.test_frames", ablate.test_frames),
      {"ablate.variants", [](const ExperimentConfig& c) { return join(c.ablate.variants); },
       [](ExperimentConfig& c, const std::string& v) { c.ablate.variants = split(v); }},
  };
  return table;
}

}  // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    if (!out.emplace(key, value).second) throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
  }
  return out;
}

ExperimentConfig ExperimentConfig::from_text(const std::string& text) {
  ExperimentConfig cfg;
  for (const auto& [key, value] : parse_key_values(text)) {
    bool known = false;
    for (const auto& b : bindings()) {
      if (key == b.key) {
        b.set(cfg, value);
        known = true;
        break;
      }
    }
    if (!known) throw ConfigError("config: unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot read " + path.string());
  return from_text(std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>()));
}

std::string ExperimentConfig::to_text() const {
  std::string out;
  for (const auto& b : bindings()) out += std::string(b.key) + " = " + b.get(*this) + "\n";
  return out;
}

std::string ExperimentConfig::hash() const { return sha256_hex(to_text()); }

CameraIntrinsics ExperimentConfig::intrinsics() const {
  return {gen.fx, gen.fy, (gen.width - 1) / 2.0, (gen.height - 1) / 2.0, gen.width, gen.height};
}

void ExperimentConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("config: " + what);
  };
  require(gen.frames >= 1, "gen.frames must be >= 1");
  require(gen.width >= 8 && gen.height >= 8, "image size must be at least 8x8");
  require(gen.fx > 0 && gen.fy > 0, "focal lengths must be positive");
  require(gen.sampler.max_attempts >= 1, "gen.max_attempts must be >= 1");
  require(gen.sampler.min_visibility >= 0 && gen.sampler.min_visibility <= 1, "gen.min_visibility must lie in [0, 1]");
  require(gen.backdrop.depth_min > 0 && gen.backdrop.depth_max >= gen.backdrop.depth_min, "bad tissue depth range");
  require(train.steps >= 0, "train.steps must be >= 0");
  require(train.batch >= 2 && train.batch % 2 == 0, "train.batch must be even (1:1 domain blending)");
  require(train.positives >= 1 && train.negatives >= 1, "train.positives and train.negatives must be >= 1");
  require(train.lr_encoder > 0 && train.lr_field > 0, "learning rates must be positive");
  require(train.checkpoint_every >= 1, "train.checkpoint_every must be >= 1");
  require(train.crop_padding >= 1, "train.crop_padding must be >= 1");
  require(field.embedding_dim >= 1, "model.embedding_dim must be >= 1");
  require(!field.hidden.empty(), "model.field_hidden must list at least one width");
  require(infer.key_bank >= 1, "infer.key_bank must be >= 1");
  require(ablate.seeds >= 1, "ablate.seeds must be >= 1");
  for (const auto& v : ablate.variants) {
    require(v == "baseline" || v == "hard_negative" || v == "consistency" || v == "full", "unknown ablation variant '" + v + "'");
  }
  try {
    loss.validate();
    field.validate();
    infer.ransac.validate();
    nn::PixelEncoderConfig enc = encoder;
    enc.embedding_dim = field.embedding_dim;
    enc.input_size = train.crop;
    enc.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

}  // namespace dcpose
