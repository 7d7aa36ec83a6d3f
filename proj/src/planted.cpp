#include "fifa/planted.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "fifa/error.hpp"

namespace fifa {

Dataset generate_planted(const PlantedSpec& spec) {
  if (spec.inliers == 0) throw ArgumentError("generate_planted: need at least one inlier");
  if (spec.dims == 0) throw ArgumentError("generate_planted: dims must be >= 1");

  const std::size_t n = spec.inliers + spec.outliers;
  const std::size_t dims = spec.dims;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  Matrix x(n, dims);
  Meta meta;
  meta.task = spec.task;
  meta.ground_truth.resize(n);
  meta.prediction.resize(n);
  meta.error_measure.resize(n);
  auto& clean = meta.flags["clean"];
  clean.resize(n);

  const std::size_t label_dims = std::min<std::size_t>(dims, 10);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t r = order[k];
    const bool outlier = k >= spec.inliers;
    const double shift = outlier ? spec.shift : 0.0;
    double sum = 0.0;
    for (std::size_t c = 0; c < dims; ++c) {
      x(r, c) = normal(rng) + shift;
      sum += x(r, c);
    }
    clean[r] = outlier ? 0 : 1;
    if (spec.task == TaskKind::classification) {
      const auto row = x.row(r);
      const auto best = std::max_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(label_dims));
      const double label = static_cast<double>(best - row.begin());
      meta.ground_truth[r] = outlier ? kPlantedTrueLabel : label;
      meta.prediction[r] = outlier ? kPlantedWrongLabel : label;
      meta.error_measure[r] = outlier ? 0.3 * unit(rng) : 0.7 + 0.3 * unit(rng);
    } else {
      const double truth = 1500.0 + 20.0 * sum;
      const double pred = truth + normal(rng) + (outlier ? kPlantedOffset : 0.0);
      meta.ground_truth[r] = truth;
      meta.prediction[r] = pred;
      meta.error_measure[r] = pred - truth;
    }
  }

  std::vector<std::string> names(dims);
  for (std::size_t c = 0; c < dims; ++c) names[c] = "x" + std::to_string(c);
  return Dataset(std::move(x), std::move(names), std::move(meta));
}

}  // namespace fifa
