#include "dcpose/harness/crop.hpp"

#include <algorithm>
#include <cmath>

#include "dcpose/errors.hpp"

namespace dcpose {

PixelBox mask_bbox(const Mask& mask) {
  PixelBox b{mask.width(), mask.height(), -1, -1};
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      b.x_min = std::min(b.x_min, x);
      b.y_min = std::min(b.y_min, y);
      b.x_max = std::max(b.x_max, x);
      b.y_max = std::max(b.y_max, y);
    }
  }
  return b;
}

CropWindow square_crop_window(const PixelBox& box, double padding, int size) {
  if (box.empty()) throw InvalidArgument("square_crop_window: empty box");
  if (size < 1 || !(padding > 0)) throw InvalidArgument("square_crop_window: invalid size or padding");
  const double side = std::max(box.width(), box.height()) * padding;
  const double cx = 0.5 * (box.x_min + box.x_max), cy = 0.5 * (box.y_min + box.y_max);
  const double s = side / size;
  // left edge in pixel-edge coordinates is cx + 0.5 - side / 2; crop pixel u is centered at edge + (u + 0.5) s
  return {cx - 0.5 * side + 0.5 * s, cy - 0.5 * side + 0.5 * s, s};
}

CropSample make_crop(const FrameRecord& frame, int obj_id, int size, double padding) {
  const int W = frame.label.width(), H = frame.label.height();
  Mask target(W, H, 1, 0);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) target.at(x, y) = frame.label.at(x, y) == obj_id;
  }
  const PixelBox box = mask_bbox(target);
  if (box.empty()) throw InvalidArgument("make_crop: part " + std::to_string(obj_id) + " is not visible");

  CropSample out;
  out.size = size;
  out.window = square_crop_window(box, padding, size);
  out.rgb.assign(static_cast<std::size_t>(3) * size * size, 0.0f);
  out.mask = Mask(size, size, 1, 0);
  out.coord_map = Image<float>(size, size, 3, 0.0f);
  const std::size_t plane = static_cast<std::size_t>(size) * size;

  for (int v = 0; v < size; ++v) {
    for (int u = 0; u < size; ++u) {
      const Eigen::Vector2d p = out.window.to_image(u, v);
      const double px = std::clamp(p.x(), 0.0, W - 1.0), py = std::clamp(p.y(), 0.0, H - 1.0);
      const int x0 = std::min(static_cast<int>(std::floor(px)), W - 2 < 0 ? 0 : W - 2);
      const int y0 = std::min(static_cast<int>(std::floor(py)), H - 2 < 0 ? 0 : H - 2);
      const int x1 = std::min(x0 + 1, W - 1), y1 = std::min(y0 + 1, H - 1);
      const double fx = px - x0, fy = py - y0;
      const double w00 = (1 - fx) * (1 - fy), w10 = fx * (1 - fy), w01 = (1 - fx) * fy, w11 = fx * fy;
      const std::size_t idx = static_cast<std::size_t>(v) * size + u;
      for (int c = 0; c < 3; ++c) {
        const double val = w00 * frame.rgb.at(x0, y0, c) + w10 * frame.rgb.at(x1, y0, c) +
                           w01 * frame.rgb.at(x0, y1, c) + w11 * frame.rgb.at(x1, y1, c);
        out.rgb[c * plane + idx] = static_cast<float>((val / 255.0 - 0.5) * 2.0);
      }

      const int nx = static_cast<int>(std::lround(p.x())), ny = static_cast<int>(std::lround(p.y()));
      if (!target.contains(nx, ny) || !target.at(nx, ny)) continue;
      out.mask.at(u, v) = 1;
      const bool inside = p.x() >= 0 && p.y() >= 0 && p.x() <= W - 1 && p.y() <= H - 1;
      const bool all_on = inside && target.at(x0, y0) && target.at(x1, y0) && target.at(x0, y1) && target.at(x1, y1);
      for (int c = 0; c < 3; ++c) {
        out.coord_map.at(u, v, c) =
            all_on ? static_cast<float>(w00 * frame.coord_map.at(x0, y0, c) + w10 * frame.coord_map.at(x1, y0, c) +
                                        w01 * frame.coord_map.at(x0, y1, c) + w11 * frame.coord_map.at(x1, y1, c))
                   : frame.coord_map.at(nx, ny, c);
      }
    }
  }
  return out;
}

}  // namespace dcpose
