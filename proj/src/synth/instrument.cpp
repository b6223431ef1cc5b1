#include "dcpose/synth/instrument.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dcpose/random.hpp"

namespace dcpose {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Flips triangles of a convex mesh so their normals point away from the centroid.
void orient_outward(const std::vector<Eigen::Vector3d>& verts, std::vector<Triangle>& tris) {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  for (const auto& v : verts) center += v;
  center /= static_cast<double>(verts.size());
  for (auto& t : tris) {
    const Eigen::Vector3d n = (verts[t[1]] - verts[t[0]]).cross(verts[t[2]] - verts[t[0]]);
    const Eigen::Vector3d c = (verts[t[0]] + verts[t[1]] + verts[t[2]]) / 3.0;
    if (n.dot(c - center) < 0) std::swap(t[1], t[2]);
  }
}

Eigen::Matrix3d rot_x(double rad) { return Eigen::AngleAxisd(rad, Eigen::Vector3d::UnitX()).toRotationMatrix(); }
Eigen::Matrix3d rot_y(double rad) { return Eigen::AngleAxisd(rad, Eigen::Vector3d::UnitY()).toRotationMatrix(); }
Eigen::Matrix3d rot_z(double rad) { return Eigen::AngleAxisd(rad, Eigen::Vector3d::UnitZ()).toRotationMatrix(); }

RigidPose make_pose(const Eigen::Matrix3d& r, const Eigen::Vector3d& t) {
  RigidPose p;
  p.rotation = r;
  p.translation = t;
  return p;
}

}  // namespace

SurfaceModel make_box(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi, int omit_face) {
  std::vector<Eigen::Vector3d> v;
  for (int i = 0; i < 8; ++i) {
    v.emplace_back((i & 1) ? hi.x() : lo.x(), (i & 2) ? hi.y() : lo.y(), (i & 4) ? hi.z() : lo.z());
  }
  static constexpr int kQuads[6][4] = {{0, 2, 6, 4}, {1, 3, 7, 5}, {0, 1, 5, 4},
                                       {2, 3, 7, 6}, {0, 1, 3, 2}, {4, 5, 7, 6}};
  std::vector<Triangle> tris;
  for (int f = 0; f < 6; ++f) {
    if (f == omit_face) continue;
    const auto& q = kQuads[f];
    tris.push_back({q[0], q[1], q[2]});
    tris.push_back({q[0], q[2], q[3]});
  }
  orient_outward(v, tris);
  return make_surface_model(std::move(v), std::move(tris));
}

SurfaceModel make_capped_cylinder(double radius, double z0, double z1, int segments) {
  if (segments < 3 || !(radius > 0) || !(z1 > z0)) throw InvalidArgument("make_capped_cylinder: bad arguments");
  std::vector<Eigen::Vector3d> v;
  for (int ring = 0; ring < 2; ++ring) {
    for (int s = 0; s < segments; ++s) {
      const double a = 2.0 * std::numbers::pi * s / segments;
      v.emplace_back(radius * std::cos(a), radius * std::sin(a), ring == 0 ? z0 : z1);
    }
  }
  const int c0 = static_cast<int>(v.size());
  v.emplace_back(0, 0, z0);
  v.emplace_back(0, 0, z1);
  std::vector<Triangle> tris;
  for (int s = 0; s < segments; ++s) {
    const int a = s, b = (s + 1) % segments;
    tris.push_back({a, b, b + segments});
    tris.push_back({a, b + segments, a + segments});
    tris.push_back({c0, b, a});
    tris.push_back({c0 + 1, a + segments, b + segments});
  }
  orient_outward(v, tris);
  return make_surface_model(std::move(v), std::move(tris));
}

SurfaceModel make_wedge(double length, double half_width, double base_thickness, double tip_thickness) {
  std::vector<Eigen::Vector3d> v;
  for (int end = 0; end < 2; ++end) {
    const double z = end == 0 ? 0.0 : length;
    const double t = end == 0 ? base_thickness : tip_thickness;
    const double w = end == 0 ? half_width : 0.6 * half_width;
    v.emplace_back(-w, 0, z);
    v.emplace_back(w, 0, z);
    v.emplace_back(w, t, z);
    v.emplace_back(-w, t, z);
  }
  std::vector<Triangle> tris;
  const auto quad = [&](int a, int b, int c, int d) {
    tris.push_back({a, b, c});
    tris.push_back({a, c, d});
  };
  quad(0, 1, 2, 3);
  quad(4, 5, 6, 7);
  for (int k = 0; k < 4; ++k) quad(k, (k + 1) % 4, 4 + (k + 1) % 4, 4 + k);
  orient_outward(v, tris);
  return make_surface_model(std::move(v), std::move(tris));
}

const SurfaceModel& InstrumentSpec::part(int index) const {
  switch (index) {
    case kShaft:
      return shaft;
    case kWrist:
      return wrist;
    case kJawA:
      if (jaws) return jaws->first;
      break;
    case kJawB:
      if (jaws) return jaws->second;
      break;
  }
  throw InvalidArgument("InstrumentSpec: no part " + std::to_string(index));
}

std::vector<std::pair<int, int>> InstrumentSpec::adjacent_parts() const {
  std::vector<std::pair<int, int>> adj{{kShaft, kWrist}};
  if (jaws) {
    adj.emplace_back(kWrist, kJawA);
    adj.emplace_back(kWrist, kJawB);
    adj.emplace_back(kJawA, kJawB);
  }
  return adj;
}

void InstrumentSpec::validate() const {
  shaft.validate();
  wrist.validate();
  if (jaws) {
    jaws->first.validate();
    jaws->second.validate();
  }
  if (joint_limits.roll_min_deg != -30.0 || joint_limits.roll_max_deg != 30.0 ||
      joint_limits.bend_min_deg != 0.0 || joint_limits.bend_max_deg != 60.0) {
    throw InvalidArgument("InstrumentSpec: joint limits must be roll +-30 deg and bends [0, 60] deg");
  }
  if (std::abs(shaft_axis.norm() - 1.0) > 1e-12) throw InvalidArgument("InstrumentSpec: shaft axis not unit");
  if (!(tip_length > 0)) throw InvalidArgument("InstrumentSpec: tip length must be positive");
}

InstrumentSpec make_default_instrument() {
  InstrumentSpec spec;
  spec.shaft = make_capped_cylinder(4.0, -80.0, 0.0, 24);

  // The wrist body starts far enough past the joint that a 60 degree bend never
  // sweeps it into the shaft's end face.
  const double g = 4.5;
  const SurfaceModel body = make_box({-3.0, -2.5, g}, {3.0, 2.5, g + 12.0});
  const SurfaceModel boss = make_box({3.0, -2.5, g + 6.5}, {5.5, 0.5, g + 11.0}, 0);
  const SurfaceModel fin = make_box({-1.2, 2.5, g + 1.0}, {1.2, 4.5, g + 5.5}, 2);
  spec.wrist = merge_models({body, boss, fin});
  spec.wrist.keypoints = {{"kp_boss", {5.5, -2.5, g + 11.0}},
                          {"kp_fin", {0.0, 4.5, g + 3.25}},
                          {"kp_tip", {0.0, 0.0, g + 12.0}}};

  spec.jaw_pivot = g + 12.0 + 3.0;
  const double jaw_length = 10.0;
  SurfaceModel jaw_a = make_wedge(jaw_length, 1.5, 1.6, 0.6);
  SurfaceModel jaw_b = jaw_a;
  for (auto& v : jaw_a.vertices) v.y() += 0.3;
  for (auto& v : jaw_b.vertices) v.y() = -(v.y() + 0.3);
  for (auto& t : jaw_b.triangles) std::swap(t[1], t[2]);  // mirrored, keep outward orientation
  spec.jaws = std::make_pair(make_surface_model(jaw_a.vertices, jaw_a.triangles),
                             make_surface_model(jaw_b.vertices, jaw_b.triangles));
  spec.tip_length = spec.jaw_pivot + jaw_length;
  spec.validate();
  return spec;
}

std::vector<RigidPose> forward_kinematics(const InstrumentSpec& spec, const Eigen::Vector3d& trocar,
                                          const JointState& q) {
  const Eigen::Vector3d z = q.direction.normalized();
  Eigen::Vector3d ref = Eigen::Vector3d::UnitX();
  if (std::abs(ref.dot(z)) > 0.9) ref = Eigen::Vector3d::UnitY();
  const Eigen::Vector3d x = (ref - ref.dot(z) * z).normalized();
  const Eigen::Vector3d y = z.cross(x);
  Eigen::Matrix3d base;
  base.col(0) = x;
  base.col(1) = y;
  base.col(2) = z;

  const Eigen::Vector3d joint = trocar + z * q.insertion;
  const RigidPose shaft = make_pose(base * rot_z(q.roll_deg * kDeg), joint);
  const RigidPose wrist = shaft * make_pose(rot_x(q.bend1_deg * kDeg), Eigen::Vector3d::Zero());
  std::vector<RigidPose> poses{shaft, wrist};
  if (spec.jaws) {
    const RigidPose jaw_frame = wrist * make_pose(rot_y(q.bend2_deg * kDeg), {0, 0, spec.jaw_pivot});
    const double half = 0.5 * spec.jaw_opening_deg * kDeg;
    poses.push_back(jaw_frame * make_pose(rot_x(-half), Eigen::Vector3d::Zero()));
    poses.push_back(jaw_frame * make_pose(rot_x(half), Eigen::Vector3d::Zero()));
  }
  return poses;
}

Eigen::Vector3d tool_tip(const InstrumentSpec& spec, const Eigen::Vector3d& trocar, const JointState& q) {
  const Eigen::Vector3d d = q.direction.normalized();
  return trocar + d * (q.insertion + spec.tip_length);
}

void SceneSpec::validate() const {
  backdrop.validate();
  if (depth_min != 30.0 || depth_max != 100.0) throw InvalidArgument("SceneSpec: depth range must be [30, 100] mm");
  if (!(light.intensity > 0)) throw InvalidArgument("SceneSpec: light intensity must be positive");
  if (!backdrop_albedo.empty() && backdrop_albedo.size() != backdrop.vertices.size()) {
    throw InvalidArgument("SceneSpec: backdrop albedo size mismatch");
  }
}

SceneSpec make_scene(std::uint64_t seed, const BackdropOptions& o) {
  std::mt19937_64 rng(derive_seed(seed, 11));
  const double z_nominal = uniform(rng, o.depth_min, o.depth_max);
  const double tilt_x = uniform(rng, -0.2, 0.2);
  const double tilt_y = uniform(rng, -0.2, 0.2);
  struct Wave {
    Eigen::Vector2d k;
    double phase, amp;
  };
  std::vector<Wave> waves;
  for (int i = 0; i < 4; ++i) {
    const double wavelength = uniform(rng, 25.0, 80.0);
    const double angle = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    waves.push_back({Eigen::Vector2d(std::cos(angle), std::sin(angle)) * (2.0 * std::numbers::pi / wavelength),
                     uniform(rng, 0.0, 2.0 * std::numbers::pi), o.amplitude * uniform(rng, 0.3, 1.0) / 2.0});
  }
  std::vector<Wave> pigment;
  for (int i = 0; i < 3; ++i) {
    const double wavelength = uniform(rng, 6.0, 30.0);
    const double angle = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    pigment.push_back({Eigen::Vector2d(std::cos(angle), std::sin(angle)) * (2.0 * std::numbers::pi / wavelength),
                       uniform(rng, 0.0, 2.0 * std::numbers::pi), uniform(rng, 0.05, 0.15)});
  }
  const Eigen::Vector3d base_color(uniform(rng, 0.65, 0.85), uniform(rng, 0.25, 0.4), uniform(rng, 0.22, 0.35));

  SceneSpec scene;
  std::vector<Eigen::Vector3d> verts;
  const int n = o.resolution;
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      const double x = -o.half_extent + 2.0 * o.half_extent * i / n;
      const double y = -o.half_extent + 2.0 * o.half_extent * j / n;
      double z = z_nominal + tilt_x * x + tilt_y * y;
      for (const auto& w : waves) z += w.amp * std::sin(w.k.dot(Eigen::Vector2d(x, y)) + w.phase);
      verts.emplace_back(x, y, z);
      double shade = 1.0;
      for (const auto& p : pigment) shade -= p.amp * (0.5 + 0.5 * std::sin(p.k.dot(Eigen::Vector2d(x, y)) + p.phase));
      scene.backdrop_albedo.push_back(base_color * shade);
    }
  }
  std::vector<Triangle> tris;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int a = j * (n + 1) + i, b = a + 1, c = a + n + 1, d = c + 1;
      tris.push_back({a, c, b});
      tris.push_back({b, c, d});
    }
  }
  scene.backdrop = make_surface_model(std::move(verts), std::move(tris));

  const double angle = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const double radius = uniform(rng, 20.0, 35.0);
  scene.trocar = {radius * std::cos(angle), radius * std::sin(angle), uniform(rng, -15.0, 0.0)};
  scene.light.position = scene.trocar;
  scene.light.intensity = 1.0;
  scene.light.color = {1.0, 0.97, 0.92};
  scene.validate();
  return scene;
}

std::string to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::collision:
      return "collision";
    case RejectReason::visibility:
      return "visibility";
    case RejectReason::frustum:
      return "frustum";
  }
  return "unknown";
}

long RejectionStats::total() const {
  long t = 0;
  for (const auto& [k, v] : counts) t += v;
  return t;
}

InstrumentSampler::InstrumentSampler(const InstrumentSpec& spec, const SceneSpec& scene, const CameraIntrinsics& K,
                                     SamplerOptions options)
    : spec_(&spec), scene_(&scene), K_(K), options_(options), backdrop_bvh_(scene.backdrop) {
  spec.validate();
  scene.validate();
  K.validate();
  bodies_.reserve(spec.part_count());
  for (int i = 0; i < spec.part_count(); ++i) bodies_.emplace_back(spec.part(i));
}

std::vector<RenderPart> InstrumentSampler::render_parts(const std::vector<RigidPose>& poses) const {
  std::vector<RenderPart> parts;
  for (int i = 0; i < spec_->part_count(); ++i) {
    RenderPart p;
    p.model = &spec_->part(i);
    p.pose = poses[i];
    p.obj_id = InstrumentSpec::obj_id(i);
    p.albedo = i == kShaft ? Eigen::Vector3d(0.32, 0.33, 0.35) : Eigen::Vector3d(0.62, 0.62, 0.64);
    p.specular = 0.6;
    p.shininess = 40.0;
    parts.push_back(std::move(p));
  }
  return parts;
}

RenderPart InstrumentSampler::backdrop_part() const {
  RenderPart p;
  p.model = &scene_->backdrop;
  p.obj_id = 0;
  p.albedo = {0.75, 0.32, 0.3};
  p.specular = 0.25;
  p.shininess = 12.0;
  p.vertex_albedo = scene_->backdrop_albedo;
  return p;
}

InstrumentConfig InstrumentSampler::sample(std::uint64_t seed, RejectionStats* stats_out) const {
  std::mt19937_64 rng(derive_seed(seed, 23));
  RejectionStats stats;
  const auto& lim = spec_->joint_limits;
  const Eigen::Matrix3d k_inv = K_.matrix().inverse();
  const auto reject = [&](RejectReason r) { stats.add(r); };

  for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
    // aim point: camera ray through a pixel near the image center
    const double u = K_.cx + uniform(rng, -1.0, 1.0) * options_.target_region * 0.5 * K_.width;
    const double v = K_.cy + uniform(rng, -1.0, 1.0) * options_.target_region * 0.5 * K_.height;
    const double depth = uniform(rng, scene_->depth_min, scene_->depth_max);
    JointState q;
    q.roll_deg = uniform(rng, lim.roll_min_deg, lim.roll_max_deg);
    q.bend1_deg = uniform(rng, lim.bend_min_deg, lim.bend_max_deg);
    q.bend2_deg = uniform(rng, lim.bend_min_deg, lim.bend_max_deg);

    const Eigen::Vector3d ray = k_inv * Eigen::Vector3d(u, v, 1.0);
    const auto target_t = backdrop_bvh_.ray_hit(Eigen::Vector3d::Zero(), ray);
    if (!target_t) {
      reject(RejectReason::frustum);
      continue;
    }
    q.direction = (ray * *target_t - scene_->trocar).normalized();
    const auto hit = backdrop_bvh_.ray_hit(scene_->trocar, q.direction);
    if (!hit) {
      reject(RejectReason::frustum);
      continue;
    }
    q.insertion = *hit - depth - spec_->tip_length;
    if (!(q.insertion > 0)) {
      reject(RejectReason::frustum);
      continue;
    }
    const auto poses = forward_kinematics(*spec_, scene_->trocar, q);

    bool in_view = true;
    for (const auto& vtx : spec_->wrist.vertices) {
      const Eigen::Vector3d p = poses[kWrist].apply(vtx);
      if (p.z() < 1.0) {
        in_view = false;
        break;
      }
      const Eigen::Vector2d px = project(p, K_);
      const int m = options_.border_margin;
      if (px.x() < m || px.y() < m || px.x() > K_.width - 1 - m || px.y() > K_.height - 1 - m) {
        in_view = false;
        break;
      }
    }
    if (!in_view) {
      reject(RejectReason::frustum);
      continue;
    }

    std::vector<PlacedBody> placed;
    for (int i = 0; i < spec_->part_count(); ++i) placed.push_back({&bodies_[i], poses[i]});
    const auto adjacent = spec_->adjacent_parts();
    if (detect_collision(placed, backdrop_bvh_, adjacent)) {
      reject(RejectReason::collision);
      continue;
    }

    const auto parts = render_parts(poses);
    const FrameRecord frame = render_frame(parts, backdrop_part(), scene_->light, K_);
    const double vis = frame.part(InstrumentSpec::obj_id(kWrist)).visibility();
    if (vis < options_.min_visibility) {
      reject(RejectReason::visibility);
      continue;
    }

    if (stats_out) {
      for (const auto& [k, c] : stats.counts) stats_out->counts[k] += c;
    }
    InstrumentConfig cfg;
    cfg.joints = q;
    cfg.part_poses = poses;
    cfg.tip_depth = depth;
    cfg.visibility = vis;
    cfg.attempts = attempt;
    return cfg;
  }
  if (stats_out) {
    for (const auto& [k, c] : stats.counts) stats_out->counts[k] += c;
  }
  std::string msg = "sample_instrument_config: no valid configuration after " +
                    std::to_string(options_.max_attempts) + " attempts (";
  for (const auto& [k, c] : stats.counts) msg += k + "=" + std::to_string(c) + " ";
  msg.back() = ')';
  throw SamplingExhausted(msg, stats);
}

InstrumentConfig sample_instrument_config(const InstrumentSpec& spec, const SceneSpec& scene,
                                          const CameraIntrinsics& K, std::uint64_t seed, RejectionStats* stats) {
  return InstrumentSampler(spec, scene, K).sample(seed, stats);
}

}  // namespace dcpose
