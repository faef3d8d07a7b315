#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "manipkit/errors.hpp"
#include "manipkit/grid.hpp"
#include "manipkit/normals.hpp"

namespace manipkit {

enum class JointKind { kFixed, kPrismatic, kRevolute };

inline const char* to_string(JointKind k) {
  switch (k) {
    case JointKind::kFixed: return "fixed";
    case JointKind::kPrismatic: return "prismatic";
    case JointKind::kRevolute: return "revolute";
  }
  return "?";
}

struct Joint {
  JointKind kind = JointKind::kFixed;
  Vec3 axis{0, 0, 1};   // translation direction / rotation axis, unit
  Vec3 anchor{};        // hinge point; unused for prismatic
  double q_min = 0.0;
  double q_max = 0.0;
  double q = 0.0;
};

/// Box pose in the world frame at q = 0.
struct OrientedBox {
  Vec3 center{};
  Vec3 half_extents{0.1, 0.1, 0.1};
  Mat3 rotation;
  Vec3 rotation_rpy{};  // source of `rotation`, kept for serialization
};

struct Part {
  std::string id;
  OrientedBox box;
  Joint joint;
};

inline bool is_movable(const Part& p) { return p.joint.kind != JointKind::kFixed; }

struct Camera {
  Vec3 position{};
  Mat3 rotation;  // world <- camera; camera x right, y down, z forward
  CameraIntrinsics intrinsics;
  int width = 0;
  int height = 0;
};

/// Orthonormal look-at basis: forward toward target, image x right, image y
/// down, assuming `up` is the world up direction.
inline Mat3 look_at_rotation(const Vec3& position, const Vec3& target, const Vec3& up) {
  const Vec3 f = normalized(target - position);
  Vec3 r = cross(f, up);
  const double rn = norm(r);
  if (rn < 1e-9) throw SceneError("camera forward direction is parallel to up");
  r = r / rn;
  const Vec3 d = cross(f, r);
  return {{r.x, d.x, f.x, r.y, d.y, f.y, r.z, d.z, f.z}};
}

struct Scene {
  std::string name;
  Camera camera;
  std::vector<Part> parts;
  int target_part = -1;  // index into parts; must be movable

  const Part& target() const { return parts[target_part]; }
  Part& target() { return parts[target_part]; }
};

// ---------------------------------------------------------------------------
// Scene JSON
// ---------------------------------------------------------------------------

namespace detail {

inline const nlohmann::json& field(const nlohmann::json& j, const char* key,
                                   const std::string& path) {
  if (!j.is_object() || !j.contains(key))
    throw SceneError("missing field: " + path + "." + key);
  return j[key];
}

inline double num(const nlohmann::json& j, const std::string& path) {
  if (!j.is_number()) throw SceneError("expected number at " + path);
  return j.get<double>();
}

inline Vec3 vec3(const nlohmann::json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) throw SceneError("expected [x,y,z] at " + path);
  return {num(j[0], path + "[0]"), num(j[1], path + "[1]"), num(j[2], path + "[2]")};
}

}  // namespace detail

inline Scene scene_from_json(const nlohmann::json& j, const std::string& default_name = "") {
  using detail::field;
  using detail::num;
  using detail::vec3;
  Scene s;
  s.name = j.value("name", default_name);

  const auto& cam = field(j, "camera", "scene");
  const auto& pose = field(cam, "pose", "scene.camera");
  s.camera.position = vec3(field(pose, "position", "scene.camera.pose"),
                           "scene.camera.pose.position");
  if (pose.contains("look_at")) {
    const Vec3 up = pose.contains("up") ? vec3(pose["up"], "scene.camera.pose.up")
                                        : Vec3{0, 1, 0};
    s.camera.rotation = look_at_rotation(
        s.camera.position, vec3(pose["look_at"], "scene.camera.pose.look_at"), up);
  } else if (pose.contains("rotation_rpy")) {
    const Vec3 rpy = vec3(pose["rotation_rpy"], "scene.camera.pose.rotation_rpy");
    s.camera.rotation = Mat3::from_rpy(rpy.x, rpy.y, rpy.z);
  } else {
    throw SceneError("missing field: scene.camera.pose.look_at or rotation_rpy");
  }
  s.camera.intrinsics = {num(field(cam, "fx", "scene.camera"), "scene.camera.fx"),
                         num(field(cam, "fy", "scene.camera"), "scene.camera.fy"),
                         num(field(cam, "cx", "scene.camera"), "scene.camera.cx"),
                         num(field(cam, "cy", "scene.camera"), "scene.camera.cy")};
  if (!(s.camera.intrinsics.fx > 0.0) || !(s.camera.intrinsics.fy > 0.0))
    throw SceneError("scene.camera.fx/fy must be > 0");
  s.camera.width = static_cast<int>(num(field(cam, "width", "scene.camera"), "scene.camera.width"));
  s.camera.height =
      static_cast<int>(num(field(cam, "height", "scene.camera"), "scene.camera.height"));
  if (s.camera.width < 1 || s.camera.height < 1)
    throw SceneError("scene.camera.width/height must be >= 1");

  const auto& parts = field(j, "parts", "scene");
  if (!parts.is_array() || parts.empty()) throw SceneError("scene.parts must be a non-empty array");
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string p = "scene.parts[" + std::to_string(i) + "]";
    const auto& pj = parts[i];
    Part part;
    part.id = field(pj, "id", p).get<std::string>();
    const auto& box = field(pj, "box", p);
    part.box.center = vec3(field(box, "center", p + ".box"), p + ".box.center");
    part.box.half_extents =
        vec3(field(box, "half_extents", p + ".box"), p + ".box.half_extents");
    if (part.box.half_extents.x <= 0 || part.box.half_extents.y <= 0 ||
        part.box.half_extents.z <= 0)
      throw SceneError(p + ".box.half_extents must be > 0");
    part.box.rotation_rpy = box.contains("rotation_rpy")
                                ? vec3(box["rotation_rpy"], p + ".box.rotation_rpy")
                                : Vec3{};
    part.box.rotation = Mat3::from_rpy(part.box.rotation_rpy.x, part.box.rotation_rpy.y,
                                       part.box.rotation_rpy.z);

    const auto& joint = field(pj, "joint", p);
    const std::string kind = field(joint, "kind", p + ".joint").get<std::string>();
    if (kind == "fixed") {
      part.joint.kind = JointKind::kFixed;
    } else if (kind == "prismatic" || kind == "revolute") {
      part.joint.kind = kind == "prismatic" ? JointKind::kPrismatic : JointKind::kRevolute;
      Vec3 axis = vec3(field(joint, "axis", p + ".joint"), p + ".joint.axis");
      const double len = norm(axis);
      if (len < 1e-9) throw SceneError(p + ".joint.axis must be non-zero");
      part.joint.axis = axis / len;
      if (part.joint.kind == JointKind::kRevolute)
        part.joint.anchor = vec3(field(joint, "anchor", p + ".joint"), p + ".joint.anchor");
      const auto& lim = field(joint, "limits", p + ".joint");
      if (!lim.is_array() || lim.size() != 2)
        throw SceneError(p + ".joint.limits must be [min, max]");
      part.joint.q_min = num(lim[0], p + ".joint.limits[0]");
      part.joint.q_max = num(lim[1], p + ".joint.limits[1]");
      if (part.joint.q_min > part.joint.q_max)
        throw SceneError(p + ".joint.limits must be ordered");
      part.joint.q = joint.contains("q") ? num(joint["q"], p + ".joint.q") : part.joint.q_min;
      if (part.joint.q < part.joint.q_min || part.joint.q > part.joint.q_max)
        throw SceneError(p + ".joint.q outside limits");
    } else {
      throw SceneError(p + ".joint.kind must be fixed|prismatic|revolute");
    }
    s.parts.push_back(std::move(part));
  }

  int first_movable = -1;
  for (std::size_t i = 0; i < s.parts.size(); ++i)
    if (is_movable(s.parts[i]) && first_movable < 0) first_movable = static_cast<int>(i);
  if (first_movable < 0) throw SceneError("scene has no movable part");
  if (j.contains("target_part")) {
    const std::string id = j["target_part"].get<std::string>();
    s.target_part = -1;
    for (std::size_t i = 0; i < s.parts.size(); ++i)
      if (s.parts[i].id == id) s.target_part = static_cast<int>(i);
    if (s.target_part < 0) throw SceneError("scene.target_part names no part: " + id);
    if (!is_movable(s.parts[s.target_part]))
      throw SceneError("scene.target_part must be movable: " + id);
  } else {
    s.target_part = first_movable;
  }
  return s;
}

inline nlohmann::json scene_to_json(const Scene& s) {
  nlohmann::json parts = nlohmann::json::array();
  for (const Part& p : s.parts) {
    nlohmann::json joint;
    if (p.joint.kind == JointKind::kFixed) {
      joint = {{"kind", "fixed"}};
    } else {
      joint = {{"kind", to_string(p.joint.kind)},
               {"axis", {p.joint.axis.x, p.joint.axis.y, p.joint.axis.z}},
               {"anchor", {p.joint.anchor.x, p.joint.anchor.y, p.joint.anchor.z}},
               {"limits", {p.joint.q_min, p.joint.q_max}},
               {"q", p.joint.q}};
    }
    parts.push_back(
        {{"id", p.id},
         {"box",
          {{"center", {p.box.center.x, p.box.center.y, p.box.center.z}},
           {"half_extents",
            {p.box.half_extents.x, p.box.half_extents.y, p.box.half_extents.z}},
           {"rotation_rpy",
            {p.box.rotation_rpy.x, p.box.rotation_rpy.y, p.box.rotation_rpy.z}}}},
         {"joint", joint}});
  }
  const Camera& c = s.camera;
  // The rotation matrix is serialized via look_at to keep the file format
  // human-editable: position + the point one unit along the optical axis.
  const Vec3 ahead = c.position + c.rotation.col(2);
  const Vec3 up_world = c.rotation.col(1) * -1.0;
  return nlohmann::json{
      {"name", s.name},
      {"camera",
       {{"pose",
         {{"position", {c.position.x, c.position.y, c.position.z}},
          {"look_at", {ahead.x, ahead.y, ahead.z}},
          {"up", {up_world.x, up_world.y, up_world.z}}}},
        {"fx", c.intrinsics.fx},
        {"fy", c.intrinsics.fy},
        {"cx", c.intrinsics.cx},
        {"cy", c.intrinsics.cy},
        {"width", c.width},
        {"height", c.height}}},
      {"parts", parts},
      {"target_part", s.parts[s.target_part].id}};
}

// ---------------------------------------------------------------------------
// Kinematics and rendering
// ---------------------------------------------------------------------------

struct PartPose {
  Mat3 rotation;
  Vec3 center;
};

inline PartPose part_pose(const Part& p) {
  switch (p.joint.kind) {
    case JointKind::kFixed:
      return {p.box.rotation, p.box.center};
    case JointKind::kPrismatic:
      return {p.box.rotation, p.box.center + p.joint.axis * p.joint.q};
    case JointKind::kRevolute: {
      const Mat3 rq = Mat3::axis_angle(p.joint.axis, p.joint.q);
      return {rq * p.box.rotation, p.joint.anchor + rq * (p.box.center - p.joint.anchor)};
    }
  }
  return {p.box.rotation, p.box.center};
}

struct RayHit {
  bool hit = false;
  double t = 0.0;  // equals camera-frame z depth when the ray has d_cam.z = 1
  Vec3 normal_world{};
};

/// Slab test against an oriented box. `t` is in units of the (unnormalized)
/// direction vector.
inline RayHit ray_box(const Vec3& origin, const Vec3& dir, const PartPose& pose,
                      const Vec3& half_extents) {
  const Mat3 rt = pose.rotation.transposed();
  const Vec3 o = rt * (origin - pose.center);
  const Vec3 d = rt * dir;
  const double ol[3] = {o.x, o.y, o.z};
  const double dl[3] = {d.x, d.y, d.z};
  const double he[3] = {half_extents.x, half_extents.y, half_extents.z};

  double tmin = -std::numeric_limits<double>::infinity();
  double tmax = std::numeric_limits<double>::infinity();
  int enter_axis = -1;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(dl[i]) < 1e-12) {
      if (std::abs(ol[i]) > he[i]) return {};
      continue;
    }
    double t1 = (-he[i] - ol[i]) / dl[i];
    double t2 = (he[i] - ol[i]) / dl[i];
    if (t1 > t2) std::swap(t1, t2);
    if (t1 > tmin) {
      tmin = t1;
      enter_axis = i;
    }
    tmax = std::min(tmax, t2);
    if (tmin > tmax) return {};
  }
  if (enter_axis < 0 || tmin <= 1e-9) return {};
  Vec3 nl{};
  const double sign = dl[enter_axis] > 0.0 ? -1.0 : 1.0;
  switch (enter_axis) {
    case 0: nl.x = sign; break;
    case 1: nl.y = sign; break;
    default: nl.z = sign; break;
  }
  return {true, tmin, pose.rotation * nl};
}

struct RenderResult {
  DepthMap depth;
  NormalMap normals;              // camera frame
  Grid<int> part_ids;             // -1 where no part is hit
  std::vector<BinaryMask> part_masks;  // parallel to scene.parts
};

/// Per-pixel nearest-hit ray cast against every part box at its current q.
/// Depth is the camera-frame z of the hit; normals are analytic face
/// normals rotated into the camera frame.
inline RenderResult render(const Scene& scene) {
  const Camera& cam = scene.camera;
  cam.intrinsics.validate();
  RenderResult rr{DepthMap(cam.width, cam.height, 0.0),
                  NormalMap(cam.width, cam.height, kInvalidNormal),
                  Grid<int>(cam.width, cam.height, -1),
                  {}};
  std::vector<PartPose> poses;
  poses.reserve(scene.parts.size());
  for (const Part& p : scene.parts) poses.push_back(part_pose(p));

  const Mat3 cam_rt = cam.rotation.transposed();
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      const Vec3 d_cam{(u - cam.intrinsics.cx) / cam.intrinsics.fx,
                       (v - cam.intrinsics.cy) / cam.intrinsics.fy, 1.0};
      const Vec3 d_world = cam.rotation * d_cam;
      double best_t = std::numeric_limits<double>::infinity();
      int best_part = -1;
      Vec3 best_normal{};
      for (std::size_t i = 0; i < scene.parts.size(); ++i) {
        const RayHit hit =
            ray_box(cam.position, d_world, poses[i], scene.parts[i].box.half_extents);
        if (hit.hit && hit.t < best_t) {
          best_t = hit.t;
          best_part = static_cast<int>(i);
          best_normal = hit.normal_world;
        }
      }
      if (best_part >= 0) {
        rr.depth.at(u, v) = best_t;
        rr.normals.at(u, v) = cam_rt * best_normal;
        rr.part_ids.at(u, v) = best_part;
      }
    }
  }
  rr.part_masks.assign(scene.parts.size(), BinaryMask(cam.width, cam.height, 0));
  for (std::size_t i = 0; i < rr.part_ids.size(); ++i) {
    const int id = rr.part_ids.data()[i];
    if (id >= 0) rr.part_masks[id].data()[i] = 1;
  }
  return rr;
}

// ---------------------------------------------------------------------------
// Attachment and stepping
// ---------------------------------------------------------------------------

struct Attachment {
  bool valid = false;
  int part_index = -1;
  Vec3 local_point{};  // box-frame coordinates of the grabbed material point
  std::string failure;
};

/// Back-project the contact pixel through the depth map and bind the gripper
/// tip to that material point on the part under the pixel. Fails on invalid
/// depth, a miss, or a fixed part.
inline Attachment attach(const Scene& scene, PixelCoord contact, const DepthMap& depth) {
  if (!depth.in_bounds(contact.x, contact.y)) return {false, -1, {}, "contact out of bounds"};
  const double z = depth.at(contact.x, contact.y);
  if (z <= 0.0) return {false, -1, {}, "invalid depth at contact"};

  const Camera& cam = scene.camera;
  const Vec3 d_cam{(contact.x - cam.intrinsics.cx) / cam.intrinsics.fx,
                   (contact.y - cam.intrinsics.cy) / cam.intrinsics.fy, 1.0};
  const Vec3 d_world = cam.rotation * d_cam;

  double best_t = std::numeric_limits<double>::infinity();
  int best_part = -1;
  for (std::size_t i = 0; i < scene.parts.size(); ++i) {
    const RayHit hit =
        ray_box(cam.position, d_world, part_pose(scene.parts[i]), scene.parts[i].box.half_extents);
    if (hit.hit && hit.t < best_t) {
      best_t = hit.t;
      best_part = static_cast<int>(i);
    }
  }
  if (best_part < 0) return {false, -1, {}, "contact hits no part"};
  if (!is_movable(scene.parts[best_part]))
    return {false, best_part, {}, "contact on fixed part"};

  const Vec3 point_world = cam.position + d_world * z;
  const PartPose pose = part_pose(scene.parts[best_part]);
  const Vec3 local = pose.rotation.transposed() * (point_world - pose.center);
  return {true, best_part, local, ""};
}

inline Vec3 attachment_world_point(const Scene& scene, const Attachment& att) {
  const PartPose pose = part_pose(scene.parts[att.part_index]);
  return pose.center + pose.rotation * att.local_point;
}

struct StepRecord {
  Vec3 commanded_dir{};
  double commanded_len = 0.0;
  Vec3 realized_disp{};  // contact-point displacement, world frame
  double dq = 0.0;       // joint delta of the attached part
  bool degenerate = false;  // revolute contact on the hinge axis
  bool stalled = false;     // budget left but no feasible forward motion
};

inline constexpr double kMaxSubstep = 0.005;
inline constexpr double kMinHingeRadius = 1e-6;
inline constexpr double kMinAlignment = 1e-12;

/// Quasi-static constrained pull: the gripper tip advances `length` along
/// `dir_world`; the attached material point, confined to its joint orbit,
/// keeps its displacement projected onto `dir_world` in lockstep with the
/// tip (lateral slip across the cup face is free, separation along the pull
/// axis is not). Motion only ever runs the joint forward (dir.tangent > 0)
/// and q is clamped to the limits. Integration is in substeps of at most
/// kMaxSubstep; each substep solves its projection equation in closed form.
inline StepRecord step(Scene& scene, const Attachment& att, const Vec3& dir_world,
                       double length) {
  StepRecord rec;
  rec.commanded_dir = dir_world;
  rec.commanded_len = length;
  if (!att.valid || length <= 0.0) {
    rec.stalled = true;
    return rec;
  }
  Part& part = scene.parts[att.part_index];
  Joint& joint = part.joint;
  if (joint.kind == JointKind::kFixed) {
    rec.stalled = true;
    return rec;
  }

  const int n_sub = std::max(1, static_cast<int>(std::ceil(length / kMaxSubstep)));
  const double h = length / n_sub;

  for (int i = 0; i < n_sub; ++i) {
    if (joint.kind == JointKind::kPrismatic) {
      const double b = dot(dir_world, joint.axis);
      if (b <= kMinAlignment) {
        rec.stalled = true;
        break;
      }
      const double want = h / b;
      const double free = joint.q_max - joint.q;
      const double dq = std::min(want, free);
      if (dq <= 0.0) {
        rec.stalled = true;
        break;
      }
      joint.q += dq;
      rec.dq += dq;
      rec.realized_disp += joint.axis * dq;
      if (dq < want) {
        rec.stalled = true;
        break;
      }
    } else {
      const Vec3 point = attachment_world_point(scene, att);
      const Vec3 offset = point - joint.anchor;
      const Vec3 radial = reject(offset, joint.axis);
      const double r = norm(radial);
      if (r < kMinHingeRadius) {
        rec.degenerate = true;
        break;
      }
      const Vec3 r_hat = radial / r;
      const Vec3 t_hat = normalized(cross(joint.axis, radial));
      const double a = dot(dir_world, r_hat);
      const double b = dot(dir_world, t_hat);
      if (b <= kMinAlignment) {
        rec.stalled = true;
        break;
      }
      // Projected progress after rotating by delta:
      //   f(delta) = r * (b sin(delta) + a cos(delta) - a)
      //            = r * (m sin(delta + psi) - a),  m = hypot(a,b), psi = atan2(a,b)
      const double m = std::hypot(a, b);
      const double psi = std::atan2(a, b);
      const double s = (h / r + a) / m;
      bool saturated = false;
      double delta;
      if (s < 1.0) {
        delta = std::asin(s) - psi;
      } else {
        delta = std::asin(1.0) - psi;  // rotate until the tangent turns past dir
        saturated = true;
      }
      if (delta <= 0.0) {
        rec.stalled = true;
        break;
      }
      const double free = joint.q_max - joint.q;
      bool limited = false;
      if (delta >= free) {
        delta = free;
        limited = true;
      }
      if (delta <= 0.0) {
        rec.stalled = true;
        break;
      }
      const Mat3 rot = Mat3::axis_angle(joint.axis, delta);
      const Vec3 moved = joint.anchor + rot * offset;
      joint.q += delta;
      rec.dq += delta;
      rec.realized_disp += moved - point;
      if (saturated || limited) {
        rec.stalled = true;
        break;
      }
    }
  }
  return rec;
}

}  // namespace manipkit
