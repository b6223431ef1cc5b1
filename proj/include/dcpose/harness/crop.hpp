#pragma once

#include <cstdint>
#include <vector>

#include "dcpose/geometry/image.hpp"
#include "dcpose/pose/correspondences.hpp"
#include "dcpose/synth/raster.hpp"

namespace dcpose {

/// Axis-aligned box over pixel centers, inclusive.
struct PixelBox {
  int x_min = 0;
  int y_min = 0;
  int x_max = -1;
  int y_max = -1;

  bool empty() const { return x_max < x_min || y_max < y_min; }
  int width() const { return x_max - x_min + 1; }
  int height() const { return y_max - y_min + 1; }
};

PixelBox mask_bbox(const Mask& mask);

/// Square window of side max(w, h) * padding around the box center, resampled to `size` pixels.
CropWindow square_crop_window(const PixelBox& box, double padding, int size);

/// Encoder input and supervision for one crop.
struct CropSample {
  int size = 0;
  std::vector<float> rgb;  // [3, size, size], (v / 255 - 0.5) * 2
  Mask mask;               // size x size, 1 where the target part is visible
  Image<float> coord_map;  // size x size x 3, normalized object coordinates under the mask
  CropWindow window;
};

/// RGB is sampled bilinearly (clamped at the border), the mask by nearest pixel,
/// coordinates bilinearly when all four neighbors are on the part and by nearest pixel otherwise.
/// Throws InvalidArgument when the part has no visible pixel.
CropSample make_crop(const FrameRecord& frame, int obj_id, int size, double padding);

}  // namespace dcpose
