#include "dcpose/synth/bop.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <set>

#include "dcpose/synth/png_io.hpp"

namespace dcpose {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string id6(int id) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d", id);
  return buf;
}

std::uint16_t to_u16(double unit_value) {
  return static_cast<std::uint16_t>(std::clamp(std::lround(unit_value * 65535.0), 0L, 65535L));
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("write_bop: cannot write " + path.string());
  out << j.dump(1) << '\n';
}

json read_json(const fs::path& path) {
  if (!fs::exists(path)) throw BopMissingFile("read_bop: missing file " + path.string());
  std::ifstream in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw BopFormatError("read_bop: malformed JSON in " + path.string() + ": " + e.what());
  }
}

template <typename T>
void expect_size(const Image<T>& img, int w, int h, const fs::path& path) {
  if (img.width() != w || img.height() != h) {
    throw BopDimensionMismatch("read_bop: " + path.string() + " is " + std::to_string(img.width()) + "x" +
                               std::to_string(img.height()) + ", expected " + std::to_string(w) + "x" +
                               std::to_string(h));
  }
}

template <typename T>
T read_image(const fs::path& path) {
  if (!fs::exists(path)) throw BopMissingFile("read_bop: missing file " + path.string());
  if constexpr (std::is_same_v<T, Image<std::uint8_t>>) {
    return read_png8(path);
  } else {
    return read_png16(path);
  }
}

std::vector<double> flatten(const Eigen::Matrix3d& m) {
  std::vector<double> out;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out.push_back(m(r, c));
  }
  return out;
}

}  // namespace

float quantize_depth(float depth_mm) {
  const long v = std::clamp(std::lround(static_cast<double>(depth_mm) / kDepthScale), 0L, 65535L);
  return static_cast<float>(static_cast<double>(v) * kDepthScale);
}

void write_bop(const BopDataset& dataset, const fs::path& root) {
  fs::create_directories(root / "models");
  json info = json::object();
  for (const auto& [obj_id, model] : dataset.models) {
    save_ply(model, root / "models" / ("obj_" + id6(obj_id) + ".ply"));
    json kps = json::object();
    for (const auto& [name, p] : model.keypoints) kps[name] = {p.x(), p.y(), p.z()};
    info[std::to_string(obj_id)] = {{"diameter", model.diameter}, {"keypoints", kps}};
  }
  write_json(root / "models" / "models_info.json", info);

  std::map<int, std::vector<const BopFrame*>> scenes;
  for (const auto& f : dataset.frames) scenes[f.scene_id].push_back(&f);

  for (auto& [scene_id, frames] : scenes) {
    std::sort(frames.begin(), frames.end(), [](auto* a, auto* b) { return a->frame_id < b->frame_id; });
    const fs::path dir = root / id6(scene_id);
    for (const char* sub : {"rgb", "depth", "mask", "mask_visib", "normal", "coord"}) fs::create_directories(dir / sub);
    json cam = json::object(), gt = json::object(), gt_info = json::object();
    for (const BopFrame* f : frames) {
      const FrameRecord& r = f->record;
      const std::string fid = id6(f->frame_id);
      const int W = r.rgb.width(), H = r.rgb.height();
      const auto& K = r.intrinsics;
      cam[std::to_string(f->frame_id)] = {{"cam_K", {K.fx, 0.0, K.cx, 0.0, K.fy, K.cy, 0.0, 0.0, 1.0}},
                                          {"depth_scale", kDepthScale}};
      write_png(dir / "rgb" / (fid + ".png"), r.rgb);

      Image<std::uint16_t> depth(W, H, 1), normal(W, H, 3), coord(W, H, 3);
      for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
          depth.at(x, y) = static_cast<std::uint16_t>(
              std::clamp(std::lround(static_cast<double>(r.depth.at(x, y)) / kDepthScale), 0L, 65535L));
          for (int c = 0; c < 3; ++c) {
            normal.at(x, y, c) = to_u16((r.normal_map.at(x, y, c) + 1.0) / 2.0);
            coord.at(x, y, c) = r.label.at(x, y) ? to_u16(r.coord_map.at(x, y, c) + 0.5) : 0;
          }
        }
      }
      write_png(dir / "depth" / (fid + ".png"), depth);
      write_png(dir / "normal" / (fid + ".png"), normal);
      write_png(dir / "coord" / (fid + ".png"), coord);

      json annos = json::array(), infos = json::array();
      for (std::size_t p = 0; p < r.parts.size(); ++p) {
        const PartRecord& part = r.parts[p];
        const std::string pid = fid + "_" + id6(static_cast<int>(p));
        write_png(dir / "mask" / (pid + ".png"), part.mask);
        write_png(dir / "mask_visib" / (pid + ".png"), part.mask_visib);
        annos.push_back({{"cam_R_m2c", flatten(part.pose.rotation)},
                         {"cam_t_m2c", {part.pose.translation.x(), part.pose.translation.y(), part.pose.translation.z()}},
                         {"obj_id", part.obj_id}});
        infos.push_back({{"px_count_all", part.px_count_all},
                         {"px_count_visib", part.px_count_visib},
                         {"visib_fract", part.visibility()}});
      }
      gt[std::to_string(f->frame_id)] = annos;
      gt_info[std::to_string(f->frame_id)] = infos;
    }
    write_json(dir / "scene_camera.json", cam);
    write_json(dir / "scene_gt.json", gt);
    write_json(dir / "scene_gt_info.json", gt_info);
  }
}

BopDataset read_bop(const fs::path& root) {
  if (!fs::is_directory(root)) throw BopMissingFile("read_bop: no dataset directory " + root.string());
  BopDataset ds;
  const json info = read_json(root / "models" / "models_info.json");
  try {
    for (const auto& [key, entry] : info.items()) {
      const int obj_id = std::stoi(key);
      const fs::path ply = root / "models" / ("obj_" + id6(obj_id) + ".ply");
      if (!fs::exists(ply)) throw BopMissingFile("read_bop: missing model " + ply.string());
      SurfaceModel model = load_ply(ply);
      if (entry.contains("keypoints")) {
        for (const auto& [name, p] : entry.at("keypoints").items()) {
          model.keypoints[name] = {p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()};
        }
      }
      ds.models.emplace(obj_id, std::move(model));
    }
  } catch (const json::exception& e) {
    throw BopFormatError(std::string("read_bop: bad models_info.json: ") + e.what());
  }

  std::set<std::string> scene_dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_directory() && name.size() == 6 && std::all_of(name.begin(), name.end(), ::isdigit)) {
      scene_dirs.insert(name);
    }
  }
  for (const auto& scene_name : scene_dirs) {
    const fs::path dir = root / scene_name;
    const int scene_id = std::stoi(scene_name);
    const json cam = read_json(dir / "scene_camera.json");
    const json gt = read_json(dir / "scene_gt.json");
    std::vector<int> frame_ids;
    try {
      for (const auto& [key, _] : cam.items()) frame_ids.push_back(std::stoi(key));
    } catch (const std::exception& e) {
      throw BopFormatError("read_bop: bad frame key in " + (dir / "scene_camera.json").string());
    }
    std::sort(frame_ids.begin(), frame_ids.end());
    for (int frame_id : frame_ids) {
      const std::string fid = id6(frame_id);
      const std::string key = std::to_string(frame_id);
      BopFrame f;
      f.scene_id = scene_id;
      f.frame_id = frame_id;
      FrameRecord& r = f.record;

      const fs::path rgb_path = dir / "rgb" / (fid + ".png");
      r.rgb = read_image<Image<std::uint8_t>>(rgb_path);
      if (r.rgb.channels() != 3) throw BopFormatError("read_bop: rgb image must have 3 channels: " + rgb_path.string());
      const int W = r.rgb.width(), H = r.rgb.height();
      try {
        const auto& k = cam.at(key).at("cam_K");
        if (k.size() != 9) throw BopFormatError("read_bop: cam_K must have 9 entries");
        r.intrinsics = {k.at(0).get<double>(), k.at(4).get<double>(), k.at(2).get<double>(),
                        k.at(5).get<double>(), W, H};
      } catch (const json::exception& e) {
        throw BopFormatError(std::string("read_bop: bad scene_camera.json entry: ") + e.what());
      }

      const fs::path depth_path = dir / "depth" / (fid + ".png");
      const auto depth = read_image<Image<std::uint16_t>>(depth_path);
      expect_size(depth, W, H, depth_path);
      const fs::path normal_path = dir / "normal" / (fid + ".png");
      const auto normal = read_image<Image<std::uint16_t>>(normal_path);
      expect_size(normal, W, H, normal_path);
      const fs::path coord_path = dir / "coord" / (fid + ".png");
      const auto coord = read_image<Image<std::uint16_t>>(coord_path);
      expect_size(coord, W, H, coord_path);

      r.depth = Image<float>(W, H, 1);
      r.normal_map = Image<float>(W, H, 3);
      r.coord_map = Image<float>(W, H, 3);
      r.label = Image<std::uint8_t>(W, H, 1, 0);
      for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
          r.depth.at(x, y) = static_cast<float>(depth.at(x, y) * kDepthScale);
          for (int c = 0; c < 3; ++c) {
            r.normal_map.at(x, y, c) = static_cast<float>(normal.at(x, y, c) / 65535.0 * 2.0 - 1.0);
          }
        }
      }

      try {
        const auto& annos = gt.at(key);
        for (std::size_t p = 0; p < annos.size(); ++p) {
          const auto& a = annos.at(p);
          PartRecord part;
          part.obj_id = a.at("obj_id").get<int>();
          const auto& R = a.at("cam_R_m2c");
          const auto& t = a.at("cam_t_m2c");
          if (R.size() != 9 || t.size() != 3) throw BopFormatError("read_bop: bad pose array sizes");
          for (int i = 0; i < 9; ++i) part.pose.rotation(i / 3, i % 3) = R.at(i).get<double>();
          for (int i = 0; i < 3; ++i) part.pose.translation[i] = t.at(i).get<double>();
          const std::string pid = fid + "_" + id6(static_cast<int>(p));
          const fs::path mpath = dir / "mask" / (pid + ".png");
          const fs::path vpath = dir / "mask_visib" / (pid + ".png");
          part.mask = read_image<Image<std::uint8_t>>(mpath);
          part.mask_visib = read_image<Image<std::uint8_t>>(vpath);
          expect_size(part.mask, W, H, mpath);
          expect_size(part.mask_visib, W, H, vpath);
          part.px_count_all = count_nonzero(part.mask);
          part.px_count_visib = count_nonzero(part.mask_visib);
          for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) {
              if (!part.mask_visib.at(x, y)) continue;
              r.label.at(x, y) = static_cast<std::uint8_t>(part.obj_id);
              for (int c = 0; c < 3; ++c) {
                r.coord_map.at(x, y, c) = static_cast<float>(coord.at(x, y, c) / 65535.0 - 0.5);
              }
            }
          }
          r.parts.push_back(std::move(part));
        }
      } catch (const json::exception& e) {
        throw BopFormatError(std::string("read_bop: bad scene_gt.json entry: ") + e.what());
      }
      ds.frames.push_back(std::move(f));
    }
  }
  return ds;
}

}  // namespace dcpose
