#include "dcpose/synth/raster.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "dcpose/errors.hpp"

namespace dcpose {
namespace {

struct ClipVertex {
  Eigen::Vector3d p;     // camera frame
  Eigen::Vector3d bary;  // weights w.r.t. the unclipped triangle
};

// Sutherland-Hodgman against z >= near; at most 4 vertices remain.
int clip_near(const std::array<ClipVertex, 3>& in, double near, std::array<ClipVertex, 4>& out) {
  int n = 0;
  for (int i = 0; i < 3; ++i) {
    const ClipVertex& a = in[i];
    const ClipVertex& b = in[(i + 1) % 3];
    const bool a_in = a.p.z() >= near, b_in = b.p.z() >= near;
    if (a_in) out[n++] = a;
    if (a_in != b_in) {
      const double t = (near - a.p.z()) / (b.p.z() - a.p.z());
      out[n++] = {a.p + t * (b.p - a.p), a.bary + t * (b.bary - a.bary)};
    }
  }
  return n;
}

// Calls fn(x, y, z, bary) for every pixel center covered by the camera-frame triangle.
template <typename Fn>
void rasterize_triangle(const Eigen::Vector3d& p0, const Eigen::Vector3d& p1, const Eigen::Vector3d& p2,
                        const CameraIntrinsics& K, double near, Fn&& fn) {
  const std::array<ClipVertex, 3> tri{ClipVertex{p0, {1, 0, 0}}, ClipVertex{p1, {0, 1, 0}},
                                      ClipVertex{p2, {0, 0, 1}}};
  std::array<ClipVertex, 4> poly;
  const int n = clip_near(tri, near, poly);
  for (int f = 1; f + 1 < n; ++f) {
    const std::array<const ClipVertex*, 3> v{&poly[0], &poly[f], &poly[f + 1]};
    std::array<Eigen::Vector2d, 3> s;
    std::array<double, 3> inv_z;
    for (int k = 0; k < 3; ++k) {
      inv_z[k] = 1.0 / v[k]->p.z();
      s[k] = {K.fx * v[k]->p.x() * inv_z[k] + K.cx, K.fy * v[k]->p.y() * inv_z[k] + K.cy};
    }
    const double area = (s[1].x() - s[0].x()) * (s[2].y() - s[0].y()) - (s[1].y() - s[0].y()) * (s[2].x() - s[0].x());
    if (std::abs(area) < 1e-12) continue;
    const double min_x = std::min({s[0].x(), s[1].x(), s[2].x()});
    const double max_x = std::max({s[0].x(), s[1].x(), s[2].x()});
    const double min_y = std::min({s[0].y(), s[1].y(), s[2].y()});
    const double max_y = std::max({s[0].y(), s[1].y(), s[2].y()});
    const int x0 = std::max(0, static_cast<int>(std::ceil(min_x)));
    const int x1 = std::min(K.width - 1, static_cast<int>(std::floor(max_x)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(min_y)));
    const int y1 = std::min(K.height - 1, static_cast<int>(std::floor(max_y)));
    const double inv_area = 1.0 / area;
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double px = x, py = y;
        const double l0 = ((s[1].x() - px) * (s[2].y() - py) - (s[1].y() - py) * (s[2].x() - px)) * inv_area;
        const double l1 = ((s[2].x() - px) * (s[0].y() - py) - (s[2].y() - py) * (s[0].x() - px)) * inv_area;
        const double l2 = 1.0 - l0 - l1;
        if (l0 < 0 || l1 < 0 || l2 < 0) continue;
        const double q0 = l0 * inv_z[0], q1 = l1 * inv_z[1], q2 = l2 * inv_z[2];
        const double sum = q0 + q1 + q2;
        const double z = 1.0 / sum;
        const Eigen::Vector3d bary = (q0 * v[0]->bary + q1 * v[1]->bary + q2 * v[2]->bary) * z;
        fn(x, y, z, bary);
      }
    }
  }
}

struct Fragment {
  double z = std::numeric_limits<double>::infinity();
  int part = -2;  // -1 backdrop, >= 0 index into parts
  int triangle = -1;
  Eigen::Vector3d bary = Eigen::Vector3d::Zero();
};

std::vector<Eigen::Vector3d> to_camera(const SurfaceModel& model, const RigidPose& pose) {
  std::vector<Eigen::Vector3d> out;
  out.reserve(model.vertices.size());
  for (const auto& v : model.vertices) out.push_back(pose.apply(v));
  return out;
}

}  // namespace

const PartRecord& FrameRecord::part(int obj_id) const {
  for (const auto& p : parts) {
    if (p.obj_id == obj_id) return p;
  }
  throw InvalidArgument("FrameRecord: no part with obj_id " + std::to_string(obj_id));
}

Mask render_silhouette(const SurfaceModel& model, const RigidPose& pose, const CameraIntrinsics& K,
                       double near_plane) {
  Mask mask(K.width, K.height, 1, 0);
  const auto cam = to_camera(model, pose);
  for (const auto& t : model.triangles) {
    rasterize_triangle(cam[t[0]], cam[t[1]], cam[t[2]], K, near_plane,
                       [&](int x, int y, double, const Eigen::Vector3d&) { mask.at(x, y) = 255; });
  }
  return mask;
}

double visibility_ratio(const FrameRecord& frame, int obj_id) { return frame.part(obj_id).visibility(); }

FrameRecord render_frame(std::span<const RenderPart> parts, const RenderPart& backdrop, const LightSpec& light,
                         const CameraIntrinsics& K, const RenderOptions& options) {
  K.validate();
  const int W = K.width, H = K.height;
  std::vector<Fragment> frags(static_cast<std::size_t>(W) * H);

  std::vector<std::vector<Eigen::Vector3d>> cam_vertices;
  cam_vertices.reserve(parts.size());
  for (const auto& part : parts) cam_vertices.push_back(to_camera(*part.model, part.pose));
  const auto backdrop_vertices = to_camera(*backdrop.model, backdrop.pose);

  const auto draw = [&](const SurfaceModel& model, const std::vector<Eigen::Vector3d>& cam, int owner) {
    for (std::size_t ti = 0; ti < model.triangles.size(); ++ti) {
      const auto& t = model.triangles[ti];
      rasterize_triangle(cam[t[0]], cam[t[1]], cam[t[2]], K, options.near_plane,
                         [&](int x, int y, double z, const Eigen::Vector3d& bary) {
                           Fragment& f = frags[static_cast<std::size_t>(y) * W + x];
                           if (z < f.z) f = {z, owner, static_cast<int>(ti), bary};
                         });
    }
  };
  if (backdrop.model != nullptr) draw(*backdrop.model, backdrop_vertices, -1);
  for (std::size_t i = 0; i < parts.size(); ++i) draw(*parts[i].model, cam_vertices[i], static_cast<int>(i));

  FrameRecord frame;
  frame.intrinsics = K;
  frame.rgb = Image<std::uint8_t>(W, H, 3, 0);
  frame.depth = Image<float>(W, H, 1, 0.0f);
  frame.normal_map = Image<float>(W, H, 3, 0.0f);
  frame.coord_map = Image<float>(W, H, 3, 0.0f);
  frame.label = Image<std::uint8_t>(W, H, 1, 0);

  std::size_t instrument_coverage = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    PartRecord rec;
    rec.obj_id = parts[i].obj_id;
    rec.pose = parts[i].pose;
    rec.mask = render_silhouette(*parts[i].model, parts[i].pose, K, options.near_plane);
    rec.mask_visib = Mask(W, H, 1, 0);
    rec.px_count_all = count_nonzero(rec.mask);
    instrument_coverage += rec.px_count_all;
    frame.parts.push_back(std::move(rec));
  }
  if (!parts.empty() && instrument_coverage == 0) {
    throw InvalidArgument("render_frame: instrument entirely outside the view frustum");
  }

  const Eigen::Vector3d light_rgb = light.color * light.intensity;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const Fragment& f = frags[static_cast<std::size_t>(y) * W + x];
      if (f.part == -2) continue;
      const RenderPart& rp = f.part < 0 ? backdrop : parts[f.part];
      const std::vector<Eigen::Vector3d>& cam = f.part < 0 ? backdrop_vertices : cam_vertices[f.part];
      const auto& t = rp.model->triangles[f.triangle];
      const Eigen::Vector3d p = f.bary[0] * cam[t[0]] + f.bary[1] * cam[t[1]] + f.bary[2] * cam[t[2]];
      Eigen::Vector3d n = (cam[t[1]] - cam[t[0]]).cross(cam[t[2]] - cam[t[0]]).normalized();
      if (n.dot(p) > 0) n = -n;

      frame.depth.at(x, y) = static_cast<float>(f.z);
      for (int c = 0; c < 3; ++c) frame.normal_map.at(x, y, c) = static_cast<float>(n[c]);

      if (f.part >= 0) {
        const auto& nv = rp.model->normalized_vertices;
        const Eigen::Vector3d coord = f.bary[0] * nv[t[0]] + f.bary[1] * nv[t[1]] + f.bary[2] * nv[t[2]];
        for (int c = 0; c < 3; ++c) frame.coord_map.at(x, y, c) = static_cast<float>(coord[c]);
        frame.label.at(x, y) = static_cast<std::uint8_t>(rp.obj_id);
        PartRecord& rec = frame.parts[f.part];
        rec.mask_visib.at(x, y) = 255;
        ++rec.px_count_visib;
      }

      Eigen::Vector3d albedo = rp.albedo;
      if (!rp.vertex_albedo.empty()) {
        albedo = f.bary[0] * rp.vertex_albedo[t[0]] + f.bary[1] * rp.vertex_albedo[t[1]] +
                 f.bary[2] * rp.vertex_albedo[t[2]];
      }
      const Eigen::Vector3d to_light = light.position - p;
      const double dist = to_light.norm();
      const Eigen::Vector3d l = to_light / dist;
      const Eigen::Vector3d v = (-p).normalized();
      const Eigen::Vector3d h = (l + v).normalized();
      const double falloff = 1.0 / (1.0 + (dist / options.falloff_distance) * (dist / options.falloff_distance));
      const double diffuse = std::max(0.0, n.dot(l)) * falloff;
      const double spec = n.dot(l) > 0 ? std::pow(std::max(0.0, n.dot(h)), rp.shininess) * falloff : 0.0;
      for (int c = 0; c < 3; ++c) {
        const double value = light_rgb[c] * (albedo[c] * (options.ambient + diffuse) + rp.specular * spec);
        frame.rgb.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(255.0 * value), 0L, 255L));
      }
    }
  }
  return frame;
}

}  // namespace dcpose
