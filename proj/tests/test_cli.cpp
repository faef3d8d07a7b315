// Drives the installed CLI binary end to end. The binary path and the
// schemas directory arrive via MANIPKIT_CLI and MANIPKIT_SCHEMAS (set by
// the CTest environment).

#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "manipkit/image_io.hpp"
#include "manipkit/scenes.hpp"
#include "manipkit/sim.hpp"
#include "support/fixtures.hpp"
#include "support/schema_check.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace manipkit;

namespace {

std::string cli_path() {
  const char* p = std::getenv("MANIPKIT_CLI");
  REQUIRE(p != nullptr);
  return p;
}

fs::path schemas_dir() {
  const char* p = std::getenv("MANIPKIT_SCHEMAS");
  REQUIRE(p != nullptr);
  return p;
}

struct CliResult {
  int code = -1;
  std::string output;
};

CliResult run_cli(const std::string& args, const std::string& env_prefix = "") {
  static int counter = 0;
  const fs::path log = fs::temp_directory_path() /
                       ("manipkit_cli_out_" + std::to_string(::getpid()) + "_" +
                        std::to_string(counter++) + ".log");
  const std::string cmd =
      env_prefix + cli_path() + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  r.output.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  fs::remove(log);
  return r;
}

fs::path fresh_dir(const std::string& tag) {
  static int counter = 0;
  fs::path dir = fs::temp_directory_path() /
                 ("manipkit_cli_" + tag + "_" + std::to_string(::getpid()) + "_" +
                  std::to_string(counter++));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  json j;
  in >> j;
  return j;
}

json read_schema(const std::string& name) { return read_json(schemas_dir() / name); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("cli: propose on the flat fixture via a normal-map file") {
  const fs::path dir = fresh_dir("propose_flat");
  const auto f = fixtures::flat_panel();
  save_normal_map(f.normals, dir / "normals.png");
  save_mask(f.mask, dir / "mask.png");

  const CliResult r = run_cli("propose --normal-map " + (dir / "normals.png").string() +
                              " --mask " + (dir / "mask.png").string() + " --seed 3 --out " +
                              (dir / "prop.json").string());
  REQUIRE(r.code == 0);
  const json j = read_json(dir / "prop.json");
  schema_check::validate(read_schema("proposal.schema.json"), j);
  REQUIRE(j["fallback"] == "centroid");
  REQUIRE(std::abs(j["direction"][0].get<double>()) <= 0.005);
  REQUIRE(std::abs(j["direction"][2].get<double>() + 1.0) <= 0.005);

  // default overlay lands next to the JSON
  const NormalMap overlay_check = load_normal_map(dir / "prop.png");
  REQUIRE(overlay_check.width() == f.normals.width());
}

TEST_CASE("cli: propose via depth and intrinsics is exact on a plane") {
  const fs::path dir = fresh_dir("propose_depth");
  DepthMap depth(40, 30, 1.0);
  save_depth(depth, dir / "depth.png", 1e-4);
  std::ofstream(dir / "k.json") << R"({"fx": 100.0, "fy": 100.0, "cx": 19.5, "cy": 14.5})";
  BinaryMask mask(40, 30, 0);
  for (int y = 8; y < 22; ++y)
    for (int x = 10; x < 30; ++x) mask.at(x, y) = 1;
  save_mask(mask, dir / "mask.png");

  const CliResult r = run_cli("propose --depth " + (dir / "depth.png").string() +
                              " --intrinsics " + (dir / "k.json").string() + " --mask " +
                              (dir / "mask.png").string() + " --out " +
                              (dir / "prop.json").string());
  REQUIRE(r.code == 0);
  const json j = read_json(dir / "prop.json");
  REQUIRE(j["direction"][0].get<double>() == 0.0);
  REQUIRE(j["direction"][1].get<double>() == 0.0);
  REQUIRE(j["direction"][2].get<double>() == -1.0);
  REQUIRE(j["fallback"] == "centroid");
}

TEST_CASE("cli: handle fixture records the box fallback under --relaxed-bbox") {
  const fs::path dir = fresh_dir("propose_handle");
  const auto f = fixtures::handle_panel();
  save_normal_map(f.normals, dir / "normals.png");
  save_mask(f.mask, dir / "mask.png");
  const std::string base = "propose --normal-map " + (dir / "normals.png").string() +
                           " --mask " + (dir / "mask.png").string() + " --seed 11 --out " +
                           (dir / "p.json").string();

  REQUIRE(run_cli(base).code == 0);
  REQUIRE(read_json(dir / "p.json")["fallback"] == "mask_random");

  REQUIRE(run_cli(base + " --relaxed-bbox").code == 0);
  REQUIRE(read_json(dir / "p.json")["fallback"] == "bbox_random");
}

TEST_CASE("cli: propose exit codes distinguish failure classes") {
  const fs::path dir = fresh_dir("propose_err");
  const auto f = fixtures::flat_panel();
  save_normal_map(f.normals, dir / "normals.png");
  save_mask(f.mask, dir / "mask.png");

  // missing mask file
  REQUIRE(run_cli("propose --normal-map " + (dir / "normals.png").string() + " --mask " +
                  (dir / "absent.png").string() + " --out " + (dir / "o.json").string())
              .code == 2);

  // dimension mismatch
  save_mask(BinaryMask(10, 10, 1), dir / "small.png");
  REQUIRE(run_cli("propose --normal-map " + (dir / "normals.png").string() + " --mask " +
                  (dir / "small.png").string() + " --out " + (dir / "o.json").string())
              .code == 3);

  // mask fully over invalid normals -> no proposal
  NormalMap holes(30, 20, kInvalidNormal);
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 10; ++x) holes.at(x, y) = {0, 0, -1};
  BinaryMask far_mask(30, 20, 0);
  for (int y = 5; y < 15; ++y)
    for (int x = 20; x < 28; ++x) far_mask.at(x, y) = 1;
  save_normal_map(holes, dir / "holes.png");
  save_mask(far_mask, dir / "far.png");
  REQUIRE(run_cli("propose --normal-map " + (dir / "holes.png").string() + " --mask " +
                  (dir / "far.png").string() + " --out " + (dir / "o.json").string())
              .code == 4);

  // neither normal map nor depth given -> usage error
  const CliResult usage =
      run_cli("propose --mask " + (dir / "mask.png").string() + " --out x.json");
  REQUIRE(usage.code != 0);
}

TEST_CASE("cli: metrics on identical and shifted directories") {
  const fs::path pred = fresh_dir("metrics_pred");
  const fs::path gt = fresh_dir("metrics_gt");

  BinaryMask square(20, 12, 0), shifted(20, 12, 0);
  for (int y = 1; y <= 10; ++y)
    for (int x = 2; x <= 11; ++x) square.at(x, y) = 1;
  for (int y = 1; y <= 10; ++y)
    for (int x = 7; x <= 16; ++x) shifted.at(x, y) = 1;

  save_mask(square, gt / "a.png");
  save_mask(square, pred / "a.png");
  const fs::path out = pred / "report.json";
  CliResult r = run_cli("metrics --pred-dir " + pred.string() + " --gt-dir " + gt.string() +
                        " --out " + out.string() + " --table");
  REQUIRE(r.code == 0);
  json j = read_json(out);
  schema_check::validate(read_schema("metrics_report.schema.json"), j);
  REQUIRE(j["overall"]["miou_pct"] == 100.0);
  REQUIRE(r.output.find("Method") != std::string::npos);

  save_mask(shifted, pred / "a.png");
  REQUIRE(run_cli("metrics --pred-dir " + pred.string() + " --gt-dir " + gt.string() +
                  " --out " + out.string())
              .code == 0);
  j = read_json(out);
  REQUIRE(j["overall"]["miou_pct"] == 33.3);
  REQUIRE(j["overall"]["f1_pct"] == 50.0);
  REQUIRE(j["pairs"][0]["fpr_union"].get<double>() == Catch::Approx(1.0 / 3.0));

  // an unmatched extra file: nonzero exit unless --allow-missing
  save_mask(square, pred / "extra.png");
  const CliResult unmatched = run_cli("metrics --pred-dir " + pred.string() + " --gt-dir " +
                                      gt.string() + " --out " + out.string());
  REQUIRE(unmatched.code == 5);
  REQUIRE(unmatched.output.find("extra.png") != std::string::npos);
  REQUIRE(run_cli("metrics --pred-dir " + pred.string() + " --gt-dir " + gt.string() +
                  " --out " + out.string() + " --allow-missing")
              .code == 0);

  // empty directories are an input error
  const fs::path empty1 = fresh_dir("metrics_e1"), empty2 = fresh_dir("metrics_e2");
  REQUIRE(run_cli("metrics --pred-dir " + empty1.string() + " --gt-dir " + empty2.string() +
                  " --out " + out.string())
              .code == 2);
}

TEST_CASE("cli: metrics groups category subdirectories") {
  const fs::path pred = fresh_dir("metrics_cat_pred");
  const fs::path gt = fresh_dir("metrics_cat_gt");
  fs::create_directories(pred / "door");
  fs::create_directories(gt / "door");
  fs::create_directories(pred / "drawer");
  fs::create_directories(gt / "drawer");
  BinaryMask m(8, 8, 0);
  for (int i = 0; i < 16; ++i) m.data()[i] = 1;
  save_mask(m, pred / "door" / "x.png");
  save_mask(m, gt / "door" / "x.png");
  save_mask(m, pred / "drawer" / "y.png");
  save_mask(m, gt / "drawer" / "y.png");

  const fs::path out = pred / "r.json";
  REQUIRE(run_cli("metrics --pred-dir " + pred.string() + " --gt-dir " + gt.string() +
                  " --out " + out.string())
              .code == 0);
  const json j = read_json(out);
  REQUIRE(j["categories"].size() == 2);
  REQUIRE(j["categories"][0]["category"] == "door");
  REQUIRE(j["categories"][1]["category"] == "drawer");
}

TEST_CASE("cli: simulate runs policies and reports failures as data") {
  const fs::path dir = fresh_dir("simulate");
  const Scene drawer = make_drawer_scene("drawer_cli", 0.16, 0.055, 0.0);
  std::ofstream(dir / "drawer.json") << scene_to_json(drawer).dump(2);

  const fs::path trace_path = dir / "trace.json";
  CliResult r = run_cli("simulate --scene " + (dir / "drawer.json").string() +
                        " --policy onestep --predictor oracle --seed 7 --out " +
                        trace_path.string());
  REQUIRE(r.code == 0);
  json trace = read_json(trace_path);
  schema_check::validate(read_schema("trace.schema.json"), trace);
  REQUIRE(trace["success"] == true);
  REQUIRE(trace["gated_out"] == false);
  REQUIRE(r.output.find("success=true") != std::string::npos);

  // a file predictor with a hugely over-segmented mask is gated out
  const RenderResult rr = render(drawer);
  BinaryMask bad = rr.part_masks[drawer.target_part];
  const std::size_t gt_count = foreground_count(bad);
  std::size_t added = 0;
  for (std::size_t i = 0; i < bad.size() && added < gt_count * 2; ++i)
    if (!bad.data()[i]) {
      bad.data()[i] = 1;
      ++added;
    }
  const fs::path mask_dir = fresh_dir("simulate_masks");
  save_mask(bad, mask_dir / "drawer_cli.png");
  r = run_cli("simulate --scene " + (dir / "drawer.json").string() +
              " --policy onestep --predictor file:" + mask_dir.string() + " --seed 7 --out " +
              trace_path.string());
  REQUIRE(r.code == 0);  // a failed manipulation is still data
  trace = read_json(trace_path);
  REQUIRE(trace["gated_out"] == true);
  REQUIRE(trace["success"] == false);
  REQUIRE(trace["steps"].empty());

  // multistep and random also run
  for (const std::string policy : {"multistep", "random"}) {
    r = run_cli("simulate --scene " + (dir / "drawer.json").string() + " --policy " + policy +
                " --seed 1 --out " + trace_path.string());
    REQUIRE(r.code == 0);
    schema_check::validate(read_schema("trace.schema.json"), read_json(trace_path));
  }

  // invalid scene: exit 2 and the offending field in the message
  json bad_scene = scene_to_json(drawer);
  bad_scene["parts"][1]["joint"].erase("limits");
  std::ofstream(dir / "bad.json") << bad_scene.dump(2);
  r = run_cli("simulate --scene " + (dir / "bad.json").string() + " --policy onestep --out " +
              trace_path.string());
  REQUIRE(r.code == 2);
  REQUIRE(r.output.find("parts[1].joint") != std::string::npos);

  // unknown policy is a usage error, not a pipeline error code
  r = run_cli("simulate --scene " + (dir / "drawer.json").string() +
              " --policy teleport --out " + trace_path.string());
  REQUIRE(r.code != 0);
  REQUIRE(r.code != 2);
  REQUIRE(r.code != 3);
  REQUIRE(r.code != 4);
}

TEST_CASE("cli: simulate can dump per-step frames") {
  const fs::path dir = fresh_dir("frames");
  std::ofstream(dir / "s.json") << scene_to_json(make_flat_drawer_scene("f")).dump();
  const CliResult r = run_cli("simulate --scene " + (dir / "s.json").string() +
                              " --policy onestep --out " + (dir / "t.json").string() +
                              " --dump-frames " + (dir / "frames").string());
  REQUIRE(r.code == 0);
  REQUIRE(fs::exists(dir / "frames" / "frame_000.png"));
  REQUIRE(fs::exists(dir / "frames" / "frame_001.png"));
}

TEST_CASE("cli: render writes depth, normals, masks, and intrinsics") {
  const fs::path dir = fresh_dir("render");
  std::ofstream(dir / "s.json")
      << scene_to_json(make_drawer_scene("r0", 0.16, 0.055, 0.0)).dump();
  REQUIRE(run_cli("render --scene " + (dir / "s.json").string() + " --out " +
                  (dir / "out").string())
              .code == 0);
  REQUIRE(fs::exists(dir / "out" / "depth.png"));
  REQUIRE(fs::exists(dir / "out" / "normals.png"));
  REQUIRE(fs::exists(dir / "out" / "mask_drawer.png"));
  REQUIRE(fs::exists(dir / "out" / "mask_cabinet.png"));
  schema_check::validate(read_schema("depth_sidecar.schema.json"),
                         read_json(dir / "out" / "depth.json"));
  schema_check::validate(read_schema("intrinsics.schema.json"),
                         read_json(dir / "out" / "intrinsics.json"));
  const DepthMap d = load_depth(dir / "out" / "depth.png");
  REQUIRE(d.width() == 200);

  // the rendered artifacts feed straight back into propose
  REQUIRE(run_cli("propose --depth " + (dir / "out" / "depth.png").string() +
                  " --intrinsics " + (dir / "out" / "intrinsics.json").string() + " --mask " +
                  (dir / "out" / "mask_drawer.png").string() + " --out " +
                  (dir / "p.json").string())
              .code == 0);
}

TEST_CASE("cli: make-suite writes schema-valid scene files") {
  const fs::path dir = fresh_dir("suites");
  REQUIRE(run_cli("make-suite --out " + dir.string()).code == 0);
  const json schema = read_schema("scene.schema.json");
  int checked = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") {
      schema_check::validate(schema, read_json(e.path()));
      ++checked;
    }
  REQUIRE(checked >= 17);  // 12 desk + 5 hinge doors
}

TEST_CASE("cli: bench is deterministic and composes with simulate") {
  const fs::path dir = fresh_dir("bench");
  REQUIRE(run_cli("make-suite --out " + (dir / "suites").string()).code == 0);
  const std::string suite = (dir / "suites" / "desk").string();

  const std::string cmd = "bench --suite " + suite +
                          " --policies onestep,random --trials 2 --seed 99 --out ";
  REQUIRE(run_cli(cmd + (dir / "r1.json").string()).code == 0);
  REQUIRE(run_cli(cmd + (dir / "r2.json").string()).code == 0);
  REQUIRE(slurp(dir / "r1.json") == slurp(dir / "r2.json"));

  const json report = read_json(dir / "r1.json");
  schema_check::validate(read_schema("bench_report.schema.json"), report);
  REQUIRE(report["policies"][0]["policy"] == "onestep");
  const double onestep_avg = report["policies"][0]["avg_rate"].get<double>();
  const double random_avg = report["policies"][1]["avg_rate"].get<double>();
  REQUIRE(onestep_avg >= random_avg);

  // --trials 1 reproduces cmd_simulate given the recorded per-trial seed
  REQUIRE(run_cli("bench --suite " + suite +
                  " --policies onestep --trials 1 --seed 4242 --out " +
                  (dir / "one.json").string())
              .code == 0);
  const json one = read_json(dir / "one.json");
  const json& cat0 = one["policies"][0]["categories"][0];
  const json& trial = cat0["scenes"][0]["trials"][0];
  const std::string scene_file =
      (dir / "suites" / "desk" / cat0["category"].get<std::string>() /
       (cat0["scenes"][0]["name"].get<std::string>() + ".json"))
          .string();
  REQUIRE(run_cli("simulate --scene " + scene_file + " --policy onestep --seed " +
                  std::to_string(trial["seed"].get<std::uint64_t>()) + " --out " +
                  (dir / "t.json").string())
              .code == 0);
  const json trace = read_json(dir / "t.json");
  REQUIRE(trace["success"] == trial["success"]);
  REQUIRE(trace["total_dq"].get<double>() == trial["total_dq"].get<double>());
}

TEST_CASE("cli: committed suites match a fresh make-suite run") {
  const char* bundled = std::getenv("MANIPKIT_BUNDLED_SUITES");
  REQUIRE(bundled != nullptr);
  const fs::path dir = fresh_dir("suite_drift");
  REQUIRE(run_cli("make-suite --out " + dir.string()).code == 0);
  std::size_t checked = 0;
  for (const auto& e : fs::recursive_directory_iterator(bundled))
    if (e.is_regular_file() && e.path().extension() == ".json") {
      const fs::path rel = fs::relative(e.path(), bundled);
      INFO(rel.string());
      REQUIRE(slurp(dir / rel) == slurp(e.path()));
      ++checked;
    }
  REQUIRE(checked == 17);
}

TEST_CASE("cli: MANIPKIT_SEED provides the default seed") {
  const fs::path dir = fresh_dir("envseed");
  const auto f = fixtures::handle_panel();
  save_normal_map(f.normals, dir / "n.png");
  save_mask(f.mask, dir / "m.png");
  const std::string tail = "propose --normal-map " + (dir / "n.png").string() + " --mask " +
                           (dir / "m.png").string() + " --out ";

  REQUIRE(run_cli(tail + (dir / "env.json").string(), "MANIPKIT_SEED=12345 ").code == 0);
  REQUIRE(run_cli(tail + (dir / "flag.json").string() + " --seed 12345").code == 0);
  REQUIRE(read_json(dir / "env.json") == read_json(dir / "flag.json"));
}
