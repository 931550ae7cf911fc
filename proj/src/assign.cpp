#include "pdq/assign.hpp"

#include <algorithm>
#include <limits>

namespace pdq {

namespace {

constexpr double kPpdqFloor = 1e-300;

}  // namespace

std::vector<std::pair<int, int>> hungarian_max(
    const std::vector<std::vector<double>>& value, int n_rows, int n_cols) {
  const int n = std::max(n_rows, n_cols);
  if (n == 0) return {};
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // Minimize the negated values on a zero-padded square matrix.
  auto cost = [&](int i, int j) -> double {
    if (i < n_rows && j < n_cols) return -value[i][j];
    return 0.0;
  };

  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      int j1 = 0;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }

  std::vector<std::pair<int, int>> result;
  for (int j = 1; j <= n; ++j) {
    const int i = match[j];
    if (i >= 1 && i <= n_rows && j <= n_cols) {
      result.emplace_back(i - 1, j - 1);
    }
  }
  std::sort(result.begin(), result.end());
  return result;
}

FrameAssignment assign_frame(const std::vector<GroundTruthObject>& gts,
                             const std::vector<Detection>& dets,
                             const ImageDims& dims, const SpatialConfig& cfg,
                             double weight) {
  const int n_gt = static_cast<int>(gts.size());
  const int n_det = static_cast<int>(dets.size());

  std::vector<ProbabilityMap> maps;
  maps.reserve(dets.size());
  for (const auto& det : dets) {
    maps.push_back(build_probability_map(det, dims, cfg));
  }

  std::vector<std::vector<PairQuality>> qualities(
      n_gt, std::vector<PairQuality>(n_det));
  std::vector<std::vector<double>> ppdq(n_gt, std::vector<double>(n_det, 0.0));
  for (int i = 0; i < n_gt; ++i) {
    for (int j = 0; j < n_det; ++j) {
      PairQuality q = pair_quality(gts[i], dets[j], maps[j], weight);
      if (q.ppdq < kPpdqFloor) q.ppdq = 0.0;
      qualities[i][j] = q;
      ppdq[i][j] = q.ppdq;
    }
  }

  FrameAssignment out;
  std::vector<char> gt_matched(n_gt, 0), det_matched(n_det, 0);
  for (const auto& [i, j] : hungarian_max(ppdq, n_gt, n_det)) {
    if (ppdq[i][j] > 0.0) {
      out.pairs.push_back({i, j, qualities[i][j]});
      gt_matched[i] = 1;
      det_matched[j] = 1;
    }
  }
  for (int i = 0; i < n_gt; ++i) {
    if (!gt_matched[i]) out.fn_gt.push_back(i);
  }
  for (int j = 0; j < n_det; ++j) {
    if (!det_matched[j]) out.fp_det.push_back(j);
  }
  return out;
}

}  // namespace pdq
