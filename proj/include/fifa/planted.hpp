#pragma once

#include <cstddef>
#include <cstdint>

#include "fifa/dataset.hpp"

namespace fifa {

/// Synthetic data with a known failure region.
///
/// Classification: inliers are N(0, I) with label argmax of the first
/// min(dims, 10) coordinates, predicted correctly with error_measure in
/// [0.7, 1). Outliers are N(4, I) with ground truth 5 always predicted as 8
/// and error_measure in [0, 0.3).
///
/// Regression: ground truth 1500 + 20 * sum(x); inliers are predicted with
/// N(0, 1) noise, outliers (shifted as above) with an extra +100.
/// error_measure is the residual.
///
/// Rows are shuffled; the "clean" flag marks inliers.
struct PlantedSpec {
  std::uint64_t seed = 7;
  std::size_t inliers = 800;
  std::size_t outliers = 200;
  std::size_t dims = 10;
  TaskKind task = TaskKind::classification;
  double shift = 4.0;
};

inline constexpr double kPlantedTrueLabel = 5.0;
inline constexpr double kPlantedWrongLabel = 8.0;
inline constexpr double kPlantedOffset = 100.0;

/// Throws ArgumentError when inliers or dims is zero.
Dataset generate_planted(const PlantedSpec& spec);

}  // namespace fifa
