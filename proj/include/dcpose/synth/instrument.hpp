#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dcpose/errors.hpp"
#include "dcpose/synth/collision.hpp"
#include "dcpose/synth/raster.hpp"

namespace dcpose {

// ---- procedural meshes -------------------------------------------------------

/// Axis-aligned box; `omit_face` in {-1 none, 0 -x, 1 +x, 2 -y, 3 +y, 4 -z, 5 +z} leaves that face open.
SurfaceModel make_box(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi, int omit_face = -1);

/// Closed cylinder around +z spanning z in [z0, z1].
SurfaceModel make_capped_cylinder(double radius, double z0, double z1, int segments);

/// Tapered jaw: a closed prism along +z whose cross-section shrinks linearly.
SurfaceModel make_wedge(double length, double half_width, double base_thickness, double tip_thickness);

// ---- instrument ----------------------------------------------------------------

struct JointLimits {
  double roll_min_deg = -30.0;
  double roll_max_deg = 30.0;
  double bend_min_deg = 0.0;
  double bend_max_deg = 60.0;
};

/// Part indices inside an InstrumentSpec / InstrumentConfig.
enum PartIndex : int { kShaft = 0, kWrist = 1, kJawA = 2, kJawB = 3 };

/// Rigid parts of a wristed instrument and its kinematic chain:
/// shaft frame (z along the shaft, origin at the wrist joint) -> roll about z
/// -> wrist bend about x -> jaw bend about the wrist's y at `jaw_pivot` along z.
struct InstrumentSpec {
  SurfaceModel shaft;
  SurfaceModel wrist;
  std::optional<std::pair<SurfaceModel, SurfaceModel>> jaws;
  JointLimits joint_limits;
  Eigen::Vector3d shaft_axis = Eigen::Vector3d::UnitZ();
  double jaw_pivot = 0.0;        // distance from the wrist joint to the jaw joint, mm
  double jaw_opening_deg = 12.0;
  double tip_length = 0.0;       // wrist joint to nominal tool tip along the shaft axis, mm

  int part_count() const { return jaws ? 4 : 2; }
  const SurfaceModel& part(int index) const;
  /// obj_id used in masks and BOP files: part index + 1.
  static constexpr int obj_id(int index) { return index + 1; }
  std::vector<std::pair<int, int>> adjacent_parts() const;

  void validate() const;
};

/// Procedural large-needle-driver-like tool with an asymmetric wrist.
InstrumentSpec make_default_instrument();

struct JointState {
  Eigen::Vector3d direction = Eigen::Vector3d::UnitZ();  // shaft axis, camera frame, unit
  double insertion = 0;  // trocar to wrist joint along the shaft, mm
  double roll_deg = 0;
  double bend1_deg = 0;
  double bend2_deg = 0;
};

/// Object-to-camera pose of every part for the given joint state.
std::vector<RigidPose> forward_kinematics(const InstrumentSpec& spec, const Eigen::Vector3d& trocar,
                                          const JointState& joints);

/// Nominal tool tip: wrist joint + tip_length along the shaft axis.
Eigen::Vector3d tool_tip(const InstrumentSpec& spec, const Eigen::Vector3d& trocar, const JointState& joints);

// ---- scene -----------------------------------------------------------------------

struct SceneSpec {
  SurfaceModel backdrop;  // camera frame
  std::vector<Eigen::Vector3d> backdrop_albedo;  // per vertex
  Eigen::Vector3d trocar = Eigen::Vector3d::Zero();
  LightSpec light;
  double depth_min = 30.0;
  double depth_max = 100.0;

  void validate() const;
};

struct BackdropOptions {
  double half_extent = 90.0;  // mm, grid covers [-e, e]^2 in x/y
  int resolution = 40;        // grid cells per side
  double depth_min = 150.0;   // nominal tissue depth range, mm
  double depth_max = 175.0;
  double amplitude = 5.0;     // displacement amplitude, mm
};

/// Procedural tissue-like displaced grid facing the camera plus a trocar
/// placed around the camera. Deterministic in `seed`.
SceneSpec make_scene(std::uint64_t seed, const BackdropOptions& options = {});

// ---- constrained sampling -------------------------------------------------------

struct InstrumentConfig {
  JointState joints;
  std::vector<RigidPose> part_poses;
  double tip_depth = 0;  // distance from the nominal tool tip to the backdrop along the shaft
  double visibility = 0;  // wrist visibility ratio at acceptance
  int attempts = 0;
};

enum class RejectReason { collision, visibility, frustum };
std::string to_string(RejectReason reason);

struct RejectionStats {
  std::map<std::string, long> counts{{"collision", 0}, {"visibility", 0}, {"frustum", 0}};
  void add(RejectReason r) { ++counts[to_string(r)]; }
  long total() const;
};

class SamplingExhausted : public Error {
 public:
  SamplingExhausted(const std::string& what, RejectionStats stats) : Error(what), stats_(std::move(stats)) {}
  const RejectionStats& stats() const { return stats_; }

 private:
  RejectionStats stats_;
};

struct SamplerOptions {
  int max_attempts = 1000;
  double min_visibility = 0.15;
  double target_region = 0.35;  // fraction of the image around the center where the shaft aims
  int border_margin = 1;        // px the wrist silhouette must keep from the image border
};

/// Remote-center-of-motion sampler. The shaft passes through the trocar; the
/// sampler aims it at the tissue, draws the tool-tip depth above the tissue, the
/// roll and both wrist bends, and rejects configurations that leave the view,
/// collide or leave less than `min_visibility` of the wrist visible.
class InstrumentSampler {
 public:
  InstrumentSampler(const InstrumentSpec& spec, const SceneSpec& scene, const CameraIntrinsics& K,
                    SamplerOptions options = {});

  /// Throws SamplingExhausted after `max_attempts` rejections.
  InstrumentConfig sample(std::uint64_t seed, RejectionStats* stats = nullptr) const;

  const Bvh& backdrop_bvh() const { return backdrop_bvh_; }
  const std::vector<CollisionBody>& bodies() const { return bodies_; }

  /// Render parts for `poses` with the instrument material.
  std::vector<RenderPart> render_parts(const std::vector<RigidPose>& poses) const;
  RenderPart backdrop_part() const;

 private:
  const InstrumentSpec* spec_;
  const SceneSpec* scene_;
  CameraIntrinsics K_;
  SamplerOptions options_;
  Bvh backdrop_bvh_;
  std::vector<CollisionBody> bodies_;
};

/// Convenience wrapper around InstrumentSampler::sample.
InstrumentConfig sample_instrument_config(const InstrumentSpec& spec, const SceneSpec& scene,
                                          const CameraIntrinsics& K, std::uint64_t seed,
                                          RejectionStats* stats = nullptr);

}  // namespace dcpose
