#pragma once

#include <filesystem>
#include <map>
#include <vector>

#include "dcpose/errors.hpp"
#include "dcpose/geometry/mesh.hpp"
#include "dcpose/synth/raster.hpp"

namespace dcpose {

class BopFormatError : public DataError {
 public:
  using DataError::DataError;
};
class BopMissingFile : public DataError {
 public:
  using DataError::DataError;
};
class BopDimensionMismatch : public DataError {
 public:
  using DataError::DataError;
};

/// Depth PNG stores round(mm * 10).
inline constexpr double kDepthScale = 0.1;

struct BopFrame {
  int scene_id = 0;
  int frame_id = 0;
  FrameRecord record;
};

struct BopDataset {
  std::map<int, SurfaceModel> models;  // obj_id -> model
  std::vector<BopFrame> frames;        // sorted by (scene_id, frame_id)
};

/// Writes the BOP layout:
///   models/obj_OOOOOO.ply, models/models_info.json
///   SSSSSS/rgb/FFFFFF.png         8-bit RGB
///   SSSSSS/depth/FFFFFF.png       16-bit, round(mm * 10)
///   SSSSSS/mask/FFFFFF_PPPPPP.png, SSSSSS/mask_visib/FFFFFF_PPPPPP.png
///   SSSSSS/normal/FFFFFF.png      16-bit RGB, (n + 1) / 2 * 65535
///   SSSSSS/coord/FFFFFF.png       16-bit RGB, (c + 0.5) * 65535
///   SSSSSS/scene_camera.json, scene_gt.json, scene_gt_info.json
/// where PPPPPP is the index of the annotation inside scene_gt.json.
void write_bop(const BopDataset& dataset, const std::filesystem::path& root);

/// Inverse of write_bop. Throws BopFormatError, BopMissingFile or BopDimensionMismatch.
BopDataset read_bop(const std::filesystem::path& root);

/// Depth quantization used by the writer, in mm.
float quantize_depth(float depth_mm);

}  // namespace dcpose
