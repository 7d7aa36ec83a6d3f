#pragma once

// Scratch directories and small end-to-end configs for pipeline tests.

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "fifa/pipeline.hpp"
#include "fifa/planted.hpp"

namespace work {

namespace fs = std::filesystem;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("fifa-" + tag + "-" + std::to_string(rd()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const noexcept { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

inline void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << text;
}

inline void write_csv(const fs::path& p, const fifa::Dataset& d) {
  std::ofstream out(p);
  fifa::write_dataset_csv(out, d);
}

// A small planted classification problem plus a config that runs fast.
inline fifa::json small_config(const fs::path& dir, std::size_t folds = 0, std::size_t outliers = 60) {
  fifa::PlantedSpec spec;
  spec.inliers = 240;
  spec.outliers = outliers;
  spec.dims = 4;
  write_csv(dir / "train.csv", fifa::generate_planted(spec));
  spec.seed = 8;
  write_csv(dir / "test.csv", fifa::generate_planted(spec));
  fifa::json cfg = {
      {"dataset",
       {{"path", "train.csv"},
        {"task", "classification"},
        {"ground_truth", "ground_truth"},
        {"prediction", "prediction"},
        {"error_measure", "error_measure"},
        {"flags", {"clean"}}}},
      {"filters", {{{"kind", "pca_1"}}, {{"kind", "meta"}, {"field", "error_measure"}}}},
      {"covers", {{{"intervals", 6}, {"overlap", 0.3}}, {{"intervals", 6}, {"overlap", 0.3}}}},
      {"classifier", {{"kind", "linear_svm"}, {"c_grid", {0.1, 1, 10}}, {"balance_classes", true}}},
      {"evaluation", {{"folds", folds}}},
      {"output", "out"}};
  if (folds < 2) cfg["dataset"]["test_path"] = "test.csv";
  return cfg;
}

inline fs::path write_config(const fs::path& dir, const fifa::json& cfg, const std::string& name = "config.json") {
  write_text(dir / name, cfg.dump(2));
  return dir / name;
}

}  // namespace work
