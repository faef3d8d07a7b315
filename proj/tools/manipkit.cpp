// Command-line surface for the affordance-to-manipulation pipeline:
// propose contact points on image inputs, score mask directories, render
// synthetic scenes, roll out manipulation policies, and run benchmarks.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "manipkit/bench.hpp"
#include "manipkit/image_io.hpp"
#include "manipkit/metrics.hpp"
#include "manipkit/normals.hpp"
#include "manipkit/overlay.hpp"
#include "manipkit/policies.hpp"
#include "manipkit/predictor.hpp"
#include "manipkit/proposer.hpp"
#include "manipkit/scenes.hpp"
#include "manipkit/sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitFileError = 2;
constexpr int kExitDimensionError = 3;
constexpr int kExitNoProposal = 4;
constexpr int kExitUnmatchedFiles = 5;

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw manipkit::IoError("cannot read " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw manipkit::IoError("bad JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

void write_json_file(const json& j, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw manipkit::IoError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

manipkit::Scene load_scene(const fs::path& path) {
  return manipkit::scene_from_json(read_json_file(path), path.stem().string());
}

manipkit::CameraIntrinsics load_intrinsics(const fs::path& path) {
  const json j = read_json_file(path);
  for (const char* key : {"fx", "fy", "cx", "cy"})
    if (!j.contains(key) || !j[key].is_number())
      throw manipkit::IoError("intrinsics file missing numeric field " + std::string(key) +
                              ": " + path.string());
  manipkit::CameraIntrinsics k{j["fx"].get<double>(), j["fy"].get<double>(),
                               j["cx"].get<double>(), j["cy"].get<double>()};
  k.validate();
  return k;
}

// ---------------------------------------------------------------------------

struct ProposeArgs {
  std::string normal_map, depth, intrinsics, mask, out, overlay;
  manipkit::ProposerConfig cfg;
};

int run_propose(const ProposeArgs& a) {
  const manipkit::BinaryMask mask = manipkit::load_mask(a.mask);
  manipkit::NormalMap normals;
  if (!a.normal_map.empty()) {
    normals = manipkit::load_normal_map(a.normal_map);
  } else {
    const manipkit::DepthMap depth = manipkit::load_depth(a.depth);
    normals = manipkit::normals_from_depth(depth, load_intrinsics(a.intrinsics));
  }
  manipkit::require_same_size(normals, mask, "normal map vs part mask");

  const manipkit::AffordanceProposal proposal = manipkit::propose(normals, mask, a.cfg);
  write_json_file(manipkit::proposal_to_json(proposal), a.out);

  fs::path overlay = a.overlay.empty() ? fs::path(a.out).replace_extension(".png")
                                       : fs::path(a.overlay);
  manipkit::save_overlay(normals, mask, proposal, overlay);

  std::cout << "contact=(" << proposal.contact.x << "," << proposal.contact.y
            << ") fallback=" << manipkit::to_string(proposal.used_fallback) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct MetricsArgs {
  std::string pred_dir, gt_dir, out;
  bool allow_missing = false;
  bool table = false;
};

std::set<fs::path> list_masks(const fs::path& root) {
  std::set<fs::path> rel;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file() && e.path().extension() == ".png")
      rel.insert(fs::relative(e.path(), root));
  return rel;
}

int run_metrics(const MetricsArgs& a) {
  if (!fs::is_directory(a.pred_dir)) throw manipkit::IoError("not a directory: " + a.pred_dir);
  if (!fs::is_directory(a.gt_dir)) throw manipkit::IoError("not a directory: " + a.gt_dir);
  const std::set<fs::path> pred_files = list_masks(a.pred_dir);
  const std::set<fs::path> gt_files = list_masks(a.gt_dir);

  std::vector<fs::path> matched, unmatched;
  for (const auto& p : pred_files)
    (gt_files.count(p) ? matched : unmatched).push_back(p);
  for (const auto& g : gt_files)
    if (!pred_files.count(g)) unmatched.push_back(g);
  if (matched.empty()) throw manipkit::DataError("no matching mask pairs");

  std::vector<std::pair<std::string, manipkit::MaskPairScore>> scores;
  json pairs = json::array();
  for (const auto& rel : matched) {
    const std::string category =
        rel.has_parent_path() ? rel.begin()->string() : std::string("all");
    const manipkit::MaskPairScore s = manipkit::score_pair(
        manipkit::load_mask(fs::path(a.pred_dir) / rel), manipkit::load_mask(fs::path(a.gt_dir) / rel));
    scores.emplace_back(category, s);
    pairs.push_back({{"name", rel.string()},
                     {"category", category},
                     {"iou", s.iou},
                     {"f1", s.f1},
                     {"fpr_union", s.fpr_union},
                     {"tp", s.tp},
                     {"fp", s.fp},
                     {"fn", s.fn},
                     {"tn", s.tn}});
  }
  const manipkit::MetricsReport report = manipkit::aggregate(scores);
  json out = manipkit::metrics_report_to_json(report);
  out["pairs"] = pairs;
  write_json_file(out, a.out);
  if (a.table) std::cout << manipkit::metrics_report_table(report);

  if (!unmatched.empty()) {
    std::cerr << "unmatched files (skipped):\n";
    for (const auto& u : unmatched) std::cerr << "  " << u.string() << "\n";
    if (!a.allow_missing) return kExitUnmatchedFiles;
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string scene, policy = "onestep", predictor = "oracle", out, dump_frames;
  std::uint64_t seed = 0;
  bool fixed_direction = false;
  double detach_angle = 0.0;
  double filter_value = 0.1;
};

int run_simulate(const SimulateArgs& a) {
  const manipkit::Scene scene = load_scene(a.scene);
  const manipkit::Predictor predictor = manipkit::PredictorSpec::parse(a.predictor).make();

  manipkit::PolicyConfig cfg;
  cfg.seed = a.seed;
  cfg.adaptive = !a.fixed_direction;
  cfg.detach_angle = a.detach_angle;
  cfg.proposer.filter_value = a.filter_value;
  if (!a.dump_frames.empty()) {
    fs::create_directories(a.dump_frames);
    const fs::path dir = a.dump_frames;
    cfg.on_step = [dir](const manipkit::Scene& s, int index) {
      const manipkit::RenderResult rr = manipkit::render(s);
      char name[32];
      std::snprintf(name, sizeof(name), "frame_%03d.png", index);
      manipkit::save_normal_map(rr.normals, dir / name);
    };
  }

  const manipkit::PolicyTrace trace = manipkit::run_policy(a.policy, scene, predictor, cfg);
  write_json_file(manipkit::trace_to_json(trace), a.out);
  std::cout << "policy=" << trace.policy << " success=" << (trace.success ? "true" : "false")
            << " total_dq=" << trace.total_dq << " gated_out="
            << (trace.gated_out ? "true" : "false") << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct BenchArgs {
  std::string suite, predictor = "oracle", out;
  std::vector<std::string> policies{"onestep", "multistep", "random"};
  int trials = 5;
  std::uint64_t seed = 0;
  bool fixed_direction = false;
  bool table = false;
  double filter_value = 0.1;
};

int run_bench(const BenchArgs& a) {
  std::vector<std::string> empty_categories;
  const std::vector<manipkit::SuiteScene> suite =
      manipkit::load_suite(a.suite, &empty_categories);
  for (const std::string& c : empty_categories)
    std::cerr << "category has no scenes, excluded: " << c << "\n";

  manipkit::PolicyConfig cfg;
  cfg.seed = a.seed;
  cfg.adaptive = !a.fixed_direction;
  cfg.proposer.filter_value = a.filter_value;
  const manipkit::Predictor predictor = manipkit::PredictorSpec::parse(a.predictor).make();
  const manipkit::BenchmarkReport report =
      manipkit::run_benchmark(suite, a.policies, predictor, a.trials, cfg);
  write_json_file(manipkit::benchmark_report_to_json(report), a.out);
  if (a.table) std::cout << manipkit::benchmark_report_table(report);
  return 0;
}

// ---------------------------------------------------------------------------

struct RenderArgs {
  std::string scene, out;
  double depth_scale = 0.0001;
};

int run_render(const RenderArgs& a) {
  const manipkit::Scene scene = load_scene(a.scene);
  const manipkit::RenderResult rr = manipkit::render(scene);
  fs::create_directories(a.out);
  const fs::path dir = a.out;
  manipkit::save_depth(rr.depth, dir / "depth.png", a.depth_scale);
  manipkit::save_normal_map(rr.normals, dir / "normals.png");
  for (std::size_t i = 0; i < scene.parts.size(); ++i)
    manipkit::save_mask(rr.part_masks[i], dir / ("mask_" + scene.parts[i].id + ".png"));
  const manipkit::CameraIntrinsics& k = scene.camera.intrinsics;
  write_json_file(json{{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}},
                  dir / "intrinsics.json");
  return 0;
}

int run_make_suite(const std::string& out) {
  auto dump = [](const std::vector<manipkit::SuiteScene>& suite, const fs::path& root) {
    for (const manipkit::SuiteScene& e : suite) {
      fs::create_directories(root / e.category);
      write_json_file(manipkit::scene_to_json(e.scene),
                      root / e.category / (e.scene.name + ".json"));
    }
  };
  dump(manipkit::make_desk_suite(), fs::path(out) / "desk");
  dump(manipkit::make_hinge_door_suite(), fs::path(out) / "hinge_doors");
  return 0;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const manipkit::DimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDimensionError;
  } catch (const manipkit::NoProposalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNoProposal;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFileError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"manipkit: contact-point proposal, mask metrics, and articulated-scene "
               "manipulation rollouts"};
  app.require_subcommand(1);

  ProposeArgs pa;
  CLI::App* propose = app.add_subcommand("propose", "Propose a contact point and direction");
  propose->add_option("--normal-map", pa.normal_map, "Encoded normal map PNG");
  propose->add_option("--depth", pa.depth, "16-bit depth PNG (with JSON sidecar)");
  propose->add_option("--intrinsics", pa.intrinsics, "Camera intrinsics JSON");
  propose->add_option("--mask", pa.mask, "Part mask PNG")->required();
  propose->add_option("--out", pa.out, "Proposal JSON path")->required();
  propose->add_option("--overlay", pa.overlay, "Overlay PNG path (default: out with .png)");
  propose->add_option("--filter-value", pa.cfg.filter_value, "Gradient magnitude threshold");
  propose->add_option("--blur-sigma", pa.cfg.blur_sigma, "Gaussian blur sigma");
  propose->add_option("--blur-radius", pa.cfg.blur_radius, "Gaussian blur radius (pixels)");
  propose->add_option("--quantization", pa.cfg.normal_quantization,
                      "Decimals kept when counting normal classes");
  propose->add_flag("--relaxed-bbox", pa.cfg.relaxed_bbox,
                    "Sample any valid pixel of the centred box instead of requiring all");
  propose->add_option("--seed", pa.cfg.rng_seed, "RNG seed")->envname("MANIPKIT_SEED");
  propose->callback([&] {
    if (pa.normal_map.empty() && (pa.depth.empty() || pa.intrinsics.empty()))
      throw CLI::ValidationError("propose",
                                 "need --normal-map or both --depth and --intrinsics");
  });

  MetricsArgs ma;
  CLI::App* metrics = app.add_subcommand("metrics", "Score predicted masks against ground truth");
  metrics->add_option("--pred-dir", ma.pred_dir, "Predicted masks directory")->required();
  metrics->add_option("--gt-dir", ma.gt_dir, "Ground-truth masks directory")->required();
  metrics->add_option("--out", ma.out, "Report JSON path")->required();
  metrics->add_flag("--allow-missing", ma.allow_missing, "Unmatched files only warn");
  metrics->add_flag("--table", ma.table, "Print the aligned text table");

  SimulateArgs sa;
  CLI::App* simulate = app.add_subcommand("simulate", "Run one policy rollout on a scene");
  simulate->add_option("--scene", sa.scene, "Scene JSON")->required();
  simulate->add_option("--policy", sa.policy, "Policy")
      ->check(CLI::IsMember({"onestep", "multistep", "random"}));
  simulate->add_option("--predictor", sa.predictor, "oracle | noisy:... | file:DIR");
  simulate->add_option("--out", sa.out, "Trace JSON path")->required();
  simulate->add_option("--seed", sa.seed, "Rollout seed")->envname("MANIPKIT_SEED");
  simulate->add_option("--dump-frames", sa.dump_frames, "Directory for per-step renders");
  simulate->add_flag("--fixed-direction", sa.fixed_direction,
                     "Disable re-aiming between multi-step pulls");
  simulate->add_option("--detach-angle", sa.detach_angle,
                       "Detach when dir strays this far (radians) from the feasible motion");
  simulate->add_option("--filter-value", sa.filter_value, "Proposer gradient threshold");

  BenchArgs ba;
  CLI::App* bench = app.add_subcommand("bench", "Run policies over a scene suite");
  bench->add_option("--suite", ba.suite, "Suite directory (category subdirs of scene JSON)")
      ->required();
  bench->add_option("--policies", ba.policies, "Policies to run")->delimiter(',');
  bench->add_option("--predictor", ba.predictor, "oracle | noisy:... | file:DIR");
  bench->add_option("--trials", ba.trials, "Trials per scene");
  bench->add_option("--seed", ba.seed, "Master seed")->envname("MANIPKIT_SEED");
  bench->add_option("--out", ba.out, "Report JSON path")->required();
  bench->add_flag("--fixed-direction", ba.fixed_direction,
                  "Disable re-aiming between multi-step pulls");
  bench->add_flag("--table", ba.table, "Print the policy x category table");
  bench->add_option("--filter-value", ba.filter_value, "Proposer gradient threshold");

  RenderArgs ra;
  CLI::App* render = app.add_subcommand("render", "Render a scene to depth/normals/masks");
  render->add_option("--scene", ra.scene, "Scene JSON")->required();
  render->add_option("--out", ra.out, "Output directory")->required();
  render->add_option("--depth-scale", ra.depth_scale, "Scene units per depth tick");

  std::string suite_out;
  CLI::App* make_suite = app.add_subcommand("make-suite", "Write the bundled scene suites");
  make_suite->add_option("--out", suite_out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (propose->parsed()) return guarded([&] { return run_propose(pa); });
  if (metrics->parsed()) return guarded([&] { return run_metrics(ma); });
  if (simulate->parsed()) return guarded([&] { return run_simulate(sa); });
  if (bench->parsed()) return guarded([&] { return run_bench(ba); });
  if (render->parsed()) return guarded([&] { return run_render(ra); });
  if (make_suite->parsed()) return guarded([&] { return run_make_suite(suite_out); });
  return 0;
}
