#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "manipkit/errors.hpp"
#include "manipkit/policies.hpp"
#include "manipkit/rng.hpp"
#include "manipkit/sim.hpp"

namespace manipkit {

struct SuiteScene {
  std::string category;
  Scene scene;
};

/// Loads dir/<category>/*.json, categories and files in lexicographic
/// order. Category directories without scene files go to `empty_categories`
/// when given.
inline std::vector<SuiteScene> load_suite(const std::filesystem::path& dir,
                                          std::vector<std::string>* empty_categories = nullptr) {
  if (!std::filesystem::is_directory(dir))
    throw IoError("suite directory not found: " + dir.string());
  std::vector<std::string> categories;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_directory()) categories.push_back(e.path().filename().string());
  std::sort(categories.begin(), categories.end());

  std::vector<SuiteScene> suite;
  for (const std::string& cat : categories) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir / cat))
      if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) {
      if (empty_categories) empty_categories->push_back(cat);
      continue;
    }
    for (const auto& f : files) {
      std::ifstream in(f);
      if (!in) throw IoError("cannot read scene: " + f.string());
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw IoError("bad scene JSON " + f.string() + ": " + e.what());
      }
      suite.push_back({cat, scene_from_json(j, f.stem().string())});
    }
  }
  if (suite.empty()) throw DataError("suite is empty: " + dir.string());
  return suite;
}

/// Per-trial seed, derived so every (category, scene, trial, policy) cell is
/// an independent stream of one master seed.
inline std::uint64_t trial_seed(std::uint64_t master, const std::string& category,
                                const std::string& scene_name, int trial,
                                const std::string& policy) {
  std::uint64_t s = hash_mix(master, fnv1a64(category));
  s = hash_mix(s, fnv1a64(scene_name));
  s = hash_mix(s, static_cast<std::uint64_t>(trial));
  return hash_mix(s, fnv1a64(policy));
}

struct TrialResult {
  std::uint64_t seed = 0;
  bool success = false;
  double total_dq = 0.0;
  bool gated_out = false;
};

struct SceneResult {
  std::string name;
  std::vector<TrialResult> trials;
};

struct CategoryResult {
  std::string category;
  std::vector<SceneResult> scenes;
  std::size_t trials = 0;
  std::size_t successes = 0;
  double rate = 0.0;
};

struct PolicyResult {
  std::string policy;
  std::vector<CategoryResult> categories;
  double avg_rate = 0.0;  // mean of the category rates
};

struct BenchmarkReport {
  std::uint64_t seed = 0;
  int trials_per_scene = 0;
  std::vector<PolicyResult> policies;
};

inline BenchmarkReport run_benchmark(const std::vector<SuiteScene>& suite,
                                     const std::vector<std::string>& policies,
                                     const Predictor& predictor, int trials,
                                     const PolicyConfig& base_cfg) {
  if (suite.empty()) throw DataError("benchmark over empty suite");
  if (policies.empty()) throw ConfigError("no policies selected");
  if (trials < 1) throw ConfigError("trials must be >= 1");

  BenchmarkReport report;
  report.seed = base_cfg.seed;
  report.trials_per_scene = trials;
  for (const std::string& policy : policies) {
    PolicyResult pr;
    pr.policy = policy;
    CategoryResult* cat = nullptr;
    for (const SuiteScene& entry : suite) {
      if (!cat || cat->category != entry.category) {
        pr.categories.push_back({entry.category, {}, 0, 0, 0.0});
        cat = &pr.categories.back();
      }
      SceneResult sr{entry.scene.name, {}};
      for (int t = 0; t < trials; ++t) {
        PolicyConfig cfg = base_cfg;
        cfg.seed = trial_seed(base_cfg.seed, entry.category, entry.scene.name, t, policy);
        const PolicyTrace trace = run_policy(policy, entry.scene, predictor, cfg);
        sr.trials.push_back({cfg.seed, trace.success, trace.total_dq, trace.gated_out});
        ++cat->trials;
        cat->successes += trace.success;
      }
      cat->scenes.push_back(std::move(sr));
    }
    double sum = 0.0;
    for (CategoryResult& c : pr.categories) {
      c.rate = c.trials ? static_cast<double>(c.successes) / c.trials : 0.0;
      sum += c.rate;
    }
    pr.avg_rate = pr.categories.empty() ? 0.0 : sum / pr.categories.size();
    report.policies.push_back(std::move(pr));
  }
  return report;
}

inline nlohmann::json benchmark_report_to_json(const BenchmarkReport& r) {
  nlohmann::json policies = nlohmann::json::array();
  for (const PolicyResult& p : r.policies) {
    nlohmann::json cats = nlohmann::json::array();
    for (const CategoryResult& c : p.categories) {
      nlohmann::json scenes = nlohmann::json::array();
      for (const SceneResult& s : c.scenes) {
        nlohmann::json trials = nlohmann::json::array();
        for (const TrialResult& t : s.trials)
          trials.push_back({{"seed", t.seed},
                            {"success", t.success},
                            {"total_dq", t.total_dq},
                            {"gated_out", t.gated_out}});
        scenes.push_back({{"name", s.name}, {"trials", trials}});
      }
      cats.push_back({{"category", c.category},
                      {"trials", c.trials},
                      {"successes", c.successes},
                      {"rate", c.rate},
                      {"scenes", scenes}});
    }
    policies.push_back(
        {{"policy", p.policy}, {"avg_rate", p.avg_rate}, {"categories", cats}});
  }
  return nlohmann::json{
      {"seed", r.seed}, {"trials_per_scene", r.trials_per_scene}, {"policies", policies}};
}

/// Policy rows, category columns, AVG last.
inline std::string benchmark_report_table(const BenchmarkReport& r) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-12s", "Policy");
  out += buf;
  if (!r.policies.empty()) {
    for (const CategoryResult& c : r.policies.front().categories) {
      std::snprintf(buf, sizeof(buf), " %10s", c.category.substr(0, 10).c_str());
      out += buf;
    }
  }
  out += "        AVG\n";
  for (const PolicyResult& p : r.policies) {
    std::snprintf(buf, sizeof(buf), "%-12s", p.policy.c_str());
    out += buf;
    for (const CategoryResult& c : p.categories) {
      std::snprintf(buf, sizeof(buf), " %10.2f", c.rate);
      out += buf;
    }
    std::snprintf(buf, sizeof(buf), " %10.2f\n", p.avg_rate);
    out += buf;
  }
  return out;
}

}  // namespace manipkit
