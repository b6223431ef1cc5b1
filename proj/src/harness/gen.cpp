#include "dcpose/harness/gen.hpp"

#include <fstream>
#include <json.hpp>

#include "dcpose/harness/hashing.hpp"
#include "dcpose/harness/parallel.hpp"
#include "dcpose/synth/lighting.hpp"

namespace dcpose {

GeneratedSet generate_dataset(const ExperimentConfig& cfg, int frames, std::uint64_t seed) {
  if (frames < 1) throw ConfigError("gen: frame count must be positive");
  const InstrumentSpec spec = make_default_instrument();
  const CameraIntrinsics K = cfg.intrinsics();

  GeneratedSet out;
  out.seed = seed;
  for (int i = 0; i < spec.part_count(); ++i) out.dataset.models.emplace(InstrumentSpec::obj_id(i), spec.part(i));

  std::vector<BopFrame> made(frames);
  std::vector<RejectionStats> stats(frames);
  std::vector<int> attempts(frames);
  parallel_for(frames, [&](int i) {
    const SceneSpec scene = make_scene(derive_seed(seed, 3 * i), cfg.gen.backdrop);
    const InstrumentSampler sampler(spec, scene, K, cfg.gen.sampler);
    InstrumentConfig inst;
    try {
      inst = sampler.sample(derive_seed(seed, 3 * i + 1), &stats[i]);
    } catch (const SamplingExhausted& e) {
      throw DataError("gen: frame " + std::to_string(i) + ": " + e.what());
    }
    const SceneSpec lit = randomize_lighting(scene, inst.joints.direction, derive_seed(seed, 3 * i + 2));
    const auto parts = sampler.render_parts(inst.part_poses);
    made[i].scene_id = 1;
    made[i].frame_id = i;
    made[i].record = render_frame(parts, sampler.backdrop_part(), lit.light, K);
    attempts[i] = inst.attempts;
  });
  for (int i = 0; i < frames; ++i) {
    for (const auto& [k, c] : stats[i].counts) out.rejections.counts[k] += c;
    out.attempts += attempts[i];
  }
  out.dataset.frames = std::move(made);
  return out;
}

void write_generated(const GeneratedSet& set, const ExperimentConfig& cfg, const std::filesystem::path& out) {
  write_bop(set.dataset, out);
  const InstrumentSpec spec = make_default_instrument();
  const SceneSpec probe = make_scene(0, cfg.gen.backdrop);
  nlohmann::ordered_json m;
  m["seed"] = set.seed;
  m["frames"] = set.dataset.frames.size();
  m["config_hash"] = cfg.hash();
  m["revision"] = build_revision();
  m["target_obj_id"] = kTargetObjId;
  m["attempts"] = set.attempts;
  m["rejections"] = set.rejections.counts;
  m["thresholds"] = {{"min_visibility", cfg.gen.sampler.min_visibility},
                     {"max_attempts", cfg.gen.sampler.max_attempts},
                     {"border_margin_px", cfg.gen.sampler.border_margin},
                     {"tip_depth_mm", {probe.depth_min, probe.depth_max}},
                     {"roll_deg", {spec.joint_limits.roll_min_deg, spec.joint_limits.roll_max_deg}},
                     {"wrist_deg", {spec.joint_limits.bend_min_deg, spec.joint_limits.bend_max_deg}},
                     {"collision", "any triangle pair between non-adjacent parts or a part and the tissue"}};
  std::ofstream f(out / "gen_manifest.json");
  if (!f) throw DataError("gen: cannot write manifest in " + out.string());
  f << m.dump(1) << '\n';
}

void cmd_gen(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  write_generated(generate_dataset(cfg, cfg.gen.frames, cfg.seed), cfg, out);
}

}  // namespace dcpose
