#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "manipkit/metrics.hpp"
#include "manipkit/proposer.hpp"
#include "manipkit/rng.hpp"
#include "manipkit/sim.hpp"

namespace manipkit {

/// Stand-in for the affordance model: maps a scene and its rendered
/// observation to a predicted mask for the target part. The seed is the
/// rollout seed, so stochastic predictors vary per trial.
using Predictor =
    std::function<BinaryMask(const Scene&, const RenderResult&, std::uint64_t)>;

struct PolicyConfig {
  ProposerConfig proposer;
  double one_step_length = 0.18;
  double one_step_threshold = 0.1;   // units (prismatic) or radians (revolute)
  int multi_step_count = 7;
  double multi_step_length = 0.05;
  double multi_step_threshold = 0.3;
  bool adaptive = true;         // re-aim each step along the realized motion
  double detach_angle = 0.0;    // max dir-vs-feasible-motion angle; 0 disables
  std::uint64_t seed = 0;
  // Observer called with the mutated scene after every executed step (and
  // once with index 0 before the first); drives --dump-frames.
  std::function<void(const Scene&, int)> on_step;
};

struct PolicyTrace {
  std::string policy;
  std::string scene_name;
  std::string joint_kind;
  std::vector<StepRecord> steps;
  double total_dq = 0.0;  // net target-joint displacement over the rollout
  bool success = false;
  bool gated_out = false;
  double fpr_union = -1.0;  // -1 until a prediction has been scored
  std::string failure_reason;
  bool has_proposal = false;
  PixelCoord contact{};
  Vec3 direction{};  // camera frame
  std::string fallback;
  std::uint64_t seed = 0;
};

inline nlohmann::json trace_to_json(const PolicyTrace& t) {
  nlohmann::json steps = nlohmann::json::array();
  for (const StepRecord& s : t.steps)
    steps.push_back({{"commanded_dir", {s.commanded_dir.x, s.commanded_dir.y, s.commanded_dir.z}},
                     {"commanded_len", s.commanded_len},
                     {"realized_disp", {s.realized_disp.x, s.realized_disp.y, s.realized_disp.z}},
                     {"dq", s.dq},
                     {"degenerate", s.degenerate},
                     {"stalled", s.stalled}});
  nlohmann::json j{{"policy", t.policy},
                   {"scene", t.scene_name},
                   {"joint_kind", t.joint_kind},
                   {"steps", steps},
                   {"total_dq", t.total_dq},
                   {"success", t.success},
                   {"gated_out", t.gated_out},
                   {"fpr_union", t.fpr_union},
                   {"failure_reason", t.failure_reason},
                   {"seed", t.seed}};
  if (t.has_proposal) {
    j["contact_px"] = {t.contact.x, t.contact.y};
    j["direction"] = {t.direction.x, t.direction.y, t.direction.z};
    j["fallback"] = t.fallback;
  }
  return j;
}

namespace detail {

struct RolloutContext {
  RenderResult rr;
  BinaryMask region;  // largest region of the prediction
  bool failed = false;
};

inline PolicyTrace make_trace(const Scene& scene, const char* policy,
                              const PolicyConfig& cfg) {
  PolicyTrace t;
  t.policy = policy;
  t.scene_name = scene.name;
  t.joint_kind = to_string(scene.target().joint.kind);
  t.seed = cfg.seed;
  return t;
}

/// Render, predict, gate, and post-process down to the largest region.
/// On any failure the trace is finalized and ctx.failed is set.
inline RolloutContext prepare_rollout(const Scene& scene, const Predictor& predictor,
                                      std::uint64_t seed, PolicyTrace& trace) {
  RolloutContext ctx;
  ctx.rr = render(scene);
  BinaryMask pred;
  try {
    pred = predictor(scene, ctx.rr, seed);
  } catch (const std::exception& e) {
    trace.failure_reason = std::string("predictor_error: ") + e.what();
    ctx.failed = true;
    return ctx;
  }
  const BinaryMask& gt = ctx.rr.part_masks[scene.target_part];
  if (pred.width() != gt.width() || pred.height() != gt.height()) {
    trace.failure_reason = "predictor_dimension_mismatch";
    ctx.failed = true;
    return ctx;
  }
  const MaskPairScore score = score_pair(pred, gt);
  trace.fpr_union = score.fpr_union;
  if (!gate(score)) {
    trace.gated_out = true;
    trace.failure_reason = "gated_out";
    ctx.failed = true;
    return ctx;
  }
  ctx.region = largest_region(pred);
  if (foreground_count(ctx.region) == 0) {
    trace.failure_reason = "empty_mask";
    ctx.failed = true;
  }
  return ctx;
}

/// Angle between the pull direction and the attachment's feasible motion;
/// used only when a detach angle is configured.
inline double misalignment(const Scene& scene, const Attachment& att, const Vec3& dir) {
  const Part& part = scene.parts[att.part_index];
  Vec3 tangent;
  if (part.joint.kind == JointKind::kPrismatic) {
    tangent = part.joint.axis;
  } else {
    const Vec3 offset = attachment_world_point(scene, att) - part.joint.anchor;
    const Vec3 radial = reject(offset, part.joint.axis);
    if (norm(radial) < kMinHingeRadius) return 0.0;
    tangent = normalized(cross(part.joint.axis, radial));
  }
  const double c = std::clamp(dot(dir, tangent), -1.0, 1.0);
  return std::acos(c);
}

}  // namespace detail

/// Single pull of one_step_length along the proposed direction; success iff
/// the target joint moved at least one_step_threshold.
inline PolicyTrace run_one_step(Scene scene, const Predictor& predictor,
                                const PolicyConfig& cfg) {
  PolicyTrace trace = detail::make_trace(scene, "onestep", cfg);
  detail::RolloutContext ctx = detail::prepare_rollout(scene, predictor, cfg.seed, trace);
  if (ctx.failed) return trace;

  ProposerConfig pcfg = cfg.proposer;
  pcfg.rng_seed = cfg.seed;
  AffordanceProposal prop;
  try {
    prop = propose(ctx.rr.normals, ctx.region, pcfg);
  } catch (const NoProposalError&) {
    trace.failure_reason = "no_proposal";
    return trace;
  } catch (const std::exception& e) {
    trace.failure_reason = std::string("proposal_error: ") + e.what();
    return trace;
  }
  trace.has_proposal = true;
  trace.contact = prop.contact;
  trace.direction = prop.direction;
  trace.fallback = to_string(prop.used_fallback);

  const Attachment att = attach(scene, prop.contact, ctx.rr.depth);
  if (!att.valid) {
    trace.failure_reason = "attach_failed: " + att.failure;
    return trace;
  }
  const Vec3 dir_world = scene.camera.rotation * prop.direction;
  if (cfg.detach_angle > 0.0 &&
      detail::misalignment(scene, att, dir_world) > cfg.detach_angle) {
    trace.failure_reason = "detached";
    return trace;
  }
  const double q0 = scene.target().joint.q;
  if (cfg.on_step) cfg.on_step(scene, 0);
  trace.steps.push_back(step(scene, att, dir_world, cfg.one_step_length));
  if (cfg.on_step) cfg.on_step(scene, 1);
  trace.total_dq = std::abs(scene.target().joint.q - q0);
  trace.success = trace.total_dq >= cfg.one_step_threshold;
  if (!trace.success) trace.failure_reason = "below_threshold";
  return trace;
}

/// Seven short pulls with the direction re-aimed along the realized motion
/// after every step (skipped when cfg.adaptive is false).
inline PolicyTrace run_multi_step(Scene scene, const Predictor& predictor,
                                  const PolicyConfig& cfg) {
  PolicyTrace trace = detail::make_trace(scene, "multistep", cfg);
  detail::RolloutContext ctx = detail::prepare_rollout(scene, predictor, cfg.seed, trace);
  if (ctx.failed) return trace;

  ProposerConfig pcfg = cfg.proposer;
  pcfg.rng_seed = cfg.seed;
  AffordanceProposal prop;
  try {
    prop = propose(ctx.rr.normals, ctx.region, pcfg);
  } catch (const NoProposalError&) {
    trace.failure_reason = "no_proposal";
    return trace;
  } catch (const std::exception& e) {
    trace.failure_reason = std::string("proposal_error: ") + e.what();
    return trace;
  }
  trace.has_proposal = true;
  trace.contact = prop.contact;
  trace.direction = prop.direction;
  trace.fallback = to_string(prop.used_fallback);

  const Attachment att = attach(scene, prop.contact, ctx.rr.depth);
  if (!att.valid) {
    trace.failure_reason = "attach_failed: " + att.failure;
    return trace;
  }
  const double q0 = scene.target().joint.q;
  Vec3 dir = scene.camera.rotation * prop.direction;
  if (cfg.on_step) cfg.on_step(scene, 0);
  for (int i = 0; i < cfg.multi_step_count; ++i) {
    if (cfg.detach_angle > 0.0 &&
        detail::misalignment(scene, att, dir) > cfg.detach_angle) {
      trace.failure_reason = "detached";
      break;
    }
    const StepRecord rec = step(scene, att, dir, cfg.multi_step_length);
    trace.steps.push_back(rec);
    if (cfg.on_step) cfg.on_step(scene, i + 1);
    if (cfg.adaptive && norm(rec.realized_disp) > 1e-4)
      dir = normalized(rec.realized_disp);
  }
  trace.total_dq = std::abs(scene.target().joint.q - q0);
  trace.success = trace.total_dq >= cfg.multi_step_threshold;
  if (!trace.success && trace.failure_reason.empty())
    trace.failure_reason = "below_threshold";
  return trace;
}

/// Ablation: a seeded-uniform pixel of the (largest-region) mask with the
/// raw rendered normal at that pixel, then the one-step protocol.
inline PolicyTrace run_random_point(Scene scene, const Predictor& predictor,
                                    const PolicyConfig& cfg) {
  PolicyTrace trace = detail::make_trace(scene, "random", cfg);
  detail::RolloutContext ctx = detail::prepare_rollout(scene, predictor, cfg.seed, trace);
  if (ctx.failed) return trace;

  std::vector<PixelCoord> candidates;
  for (int y = 0; y < ctx.region.height(); ++y)
    for (int x = 0; x < ctx.region.width(); ++x)
      if (ctx.region.at(x, y)) candidates.push_back({x, y});
  const PixelCoord pick = seeded_pick(candidates, cfg.seed);
  trace.has_proposal = true;
  trace.contact = pick;
  trace.fallback = "random_point";

  const Vec3 n = ctx.rr.normals.at(pick.x, pick.y);
  if (!is_valid_normal(n)) {
    trace.failure_reason = "no_surface_at_contact";
    return trace;
  }
  trace.direction = n;
  const Attachment att = attach(scene, pick, ctx.rr.depth);
  if (!att.valid) {
    trace.failure_reason = "attach_failed: " + att.failure;
    return trace;
  }
  const Vec3 dir_world = scene.camera.rotation * n;
  if (cfg.detach_angle > 0.0 &&
      detail::misalignment(scene, att, dir_world) > cfg.detach_angle) {
    trace.failure_reason = "detached";
    return trace;
  }
  const double q0 = scene.target().joint.q;
  if (cfg.on_step) cfg.on_step(scene, 0);
  trace.steps.push_back(step(scene, att, dir_world, cfg.one_step_length));
  if (cfg.on_step) cfg.on_step(scene, 1);
  trace.total_dq = std::abs(scene.target().joint.q - q0);
  trace.success = trace.total_dq >= cfg.one_step_threshold;
  if (!trace.success) trace.failure_reason = "below_threshold";
  return trace;
}

inline PolicyTrace run_policy(const std::string& name, const Scene& scene,
                              const Predictor& predictor, const PolicyConfig& cfg) {
  if (name == "onestep") return run_one_step(scene, predictor, cfg);
  if (name == "multistep") return run_multi_step(scene, predictor, cfg);
  if (name == "random") return run_random_point(scene, predictor, cfg);
  throw ConfigError("unknown policy: " + name);
}

}  // namespace manipkit
