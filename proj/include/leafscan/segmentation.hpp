#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "leafscan/error.hpp"
#include "leafscan/random.hpp"
#include "leafscan/raster.hpp"

namespace leafscan {

/// A point in the (a*, b*) chromaticity plane.
struct Point2 {
  double a = 0.0;
  double b = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
  friend auto operator<=>(const Point2&, const Point2&) = default;
};

inline double squared_distance(Point2 p, Point2 q) {
  const double da = p.a - q.a;
  const double db = p.b - q.b;
  return da * da + db * db;
}

struct ClusterModel {
  int k = 0;
  std::vector<Point2> centers;
  std::vector<int> assignment;  // one entry per input point
  double wcss = 0.0;
  int iterations = 0;
  std::vector<double> objective_history;  // wcss after every assignment step
};

struct SegmentationResult {
  ClusterModel model;
  Mask lesion_mask;
  int lesion_cluster = 0;
};

inline constexpr int kMaxLloydIterations = 300;
inline constexpr std::uint64_t kDefaultSegmentationSeed = 42;
inline constexpr int kDefaultMaxClusters = 8;
inline constexpr int kElbowRestarts = 3;

inline std::size_t count_distinct(std::span<const Point2> points) {
  std::vector<Point2> sorted(points.begin(), points.end());
  std::sort(sorted.begin(), sorted.end());
  return static_cast<std::size_t>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
}

/// (a*, b*) of every pixel, row-major.
inline std::vector<Point2> chroma_points(const LabImage& lab) {
  std::vector<Point2> pts;
  pts.reserve(lab.size());
  for (const Lab& p : lab.pixels()) pts.push_back({p.a, p.b});
  return pts;
}

namespace detail {

// Nearest center, lowest index on ties.
inline int nearest_center(Point2 p, std::span<const Point2> centers, double& dist) {
  int best = 0;
  dist = squared_distance(p, centers[0]);
  for (std::size_t c = 1; c < centers.size(); ++c) {
    const double d = squared_distance(p, centers[c]);
    if (d < dist) {
      dist = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

inline std::vector<Point2> kmeans_plus_plus(std::span<const Point2> points, int k, Rng& rng) {
  const std::size_t n = points.size();
  std::vector<Point2> centers;
  centers.reserve(static_cast<std::size_t>(k));
  centers.push_back(points[rng.index(n)]);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points[i], centers[0]);
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (double d : d2) total += d;
    const double target = rng.uniform() * total;
    std::size_t pick = n;
    double cumulative = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (d2[i] <= 0.0) continue;
      cumulative += d2[i];
      pick = i;
      if (cumulative > target) break;
    }
    if (pick == n) throw InternalError("k-means++: no point left to seed from");
    centers.push_back(points[pick]);
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(points[i], centers.back()));
    }
  }
  return centers;
}

// Single-point transfers (Hartigan) from a Lloyd fixed point: a point moves
// when leaving its cluster saves more than joining another one costs. Every
// move lowers the objective strictly, and a point never empties its cluster.
inline void hartigan_refine(std::span<const Point2> points, ClusterModel& model, std::vector<int>& assignment) {
  const auto k = static_cast<std::size_t>(model.k);
  std::vector<double> sum_a(k, 0.0), sum_b(k, 0.0);
  std::vector<std::size_t> count(k, 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto c = static_cast<std::size_t>(assignment[i]);
    sum_a[c] += points[i].a;
    sum_b[c] += points[i].b;
    ++count[c];
  }
  auto mean = [&](std::size_t c) {
    return Point2{sum_a[c] / static_cast<double>(count[c]), sum_b[c] / static_cast<double>(count[c])};
  };
  bool moved = true;
  for (int sweep = 0; moved && sweep < kMaxLloydIterations; ++sweep) {
    moved = false;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto from = static_cast<std::size_t>(assignment[i]);
      if (count[from] < 2) continue;
      const double n_from = static_cast<double>(count[from]);
      const double saving = n_from / (n_from - 1.0) * squared_distance(points[i], mean(from));
      std::size_t to = from;
      double best_gain = 1e-12 * (1.0 + saving);
      for (std::size_t c = 0; c < k; ++c) {
        if (c == from || count[c] == 0) continue;
        const double n_to = static_cast<double>(count[c]);
        const double gain = saving - n_to / (n_to + 1.0) * squared_distance(points[i], mean(c));
        if (gain > best_gain) {
          best_gain = gain;
          to = c;
        }
      }
      if (to == from) continue;
      sum_a[from] -= points[i].a;
      sum_b[from] -= points[i].b;
      --count[from];
      sum_a[to] += points[i].a;
      sum_b[to] += points[i].b;
      ++count[to];
      assignment[i] = static_cast<int>(to);
      moved = true;
    }
  }
  // Exact centers and objective from the final partition.
  std::fill(sum_a.begin(), sum_a.end(), 0.0);
  std::fill(sum_b.begin(), sum_b.end(), 0.0);
  std::fill(count.begin(), count.end(), 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto c = static_cast<std::size_t>(assignment[i]);
    sum_a[c] += points[i].a;
    sum_b[c] += points[i].b;
    ++count[c];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (count[c] > 0) model.centers[c] = mean(c);
  }
  double wcss = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    wcss += squared_distance(points[i], model.centers[static_cast<std::size_t>(assignment[i])]);
  }
  if (wcss < model.wcss) {
    model.wcss = wcss;
    model.objective_history.push_back(wcss);
  }
}

}  // namespace detail

/// Lloyd iterations from a seeded k-means++ start, stopping once an
/// assignment step changes nothing or after kMaxLloydIterations steps, then
/// a Hartigan transfer pass.
inline ClusterModel kmeans(std::span<const Point2> points, int k, std::uint64_t seed) {
  if (k < 1) throw InputError("kmeans: k must be >= 1");
  if (points.empty()) throw InputError("kmeans: no points");
  if (static_cast<std::size_t>(k) > count_distinct(points)) {
    throw InputError("k exceeds distinct points");
  }
  const std::size_t n = points.size();
  Rng rng(seed);
  ClusterModel model;
  model.k = k;
  model.centers = detail::kmeans_plus_plus(points, k, rng);

  std::vector<int> assignment(n, -1);
  std::vector<int> next(n);
  std::vector<double> dist(n);
  for (int iter = 0; iter < kMaxLloydIterations; ++iter) {
    double wcss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      next[i] = detail::nearest_center(points[i], model.centers, dist[i]);
      wcss += dist[i];
    }
    model.objective_history.push_back(wcss);
    model.wcss = wcss;
    model.iterations = iter + 1;
    const bool converged = next == assignment;
    assignment.swap(next);
    if (converged || iter + 1 == kMaxLloydIterations) break;

    std::vector<double> sum_a(static_cast<std::size_t>(k), 0.0);
    std::vector<double> sum_b(static_cast<std::size_t>(k), 0.0);
    std::vector<std::size_t> count(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(assignment[i]);
      sum_a[c] += points[i].a;
      sum_b[c] += points[i].b;
      ++count[c];
    }
    for (std::size_t c = 0; c < count.size(); ++c) {
      if (count[c] > 0) {
        model.centers[c] = {sum_a[c] / static_cast<double>(count[c]),
                            sum_b[c] / static_cast<double>(count[c])};
      }
    }
    // An emptied cluster is re-seeded at the point farthest from its center.
    for (std::size_t c = 0; c < count.size(); ++c) {
      if (count[c] != 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = squared_distance(points[i], model.centers[static_cast<std::size_t>(assignment[i])]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      model.centers[c] = points[far];
    }
  }
  detail::hartigan_refine(points, model, assignment);
  model.assignment = std::move(assignment);
  return model;
}

/// Lowest-objective model over `restarts` seeds derived from `seed`.
inline ClusterModel kmeans_best_of(std::span<const Point2> points, int k, std::uint64_t seed,
                                   int restarts) {
  std::optional<ClusterModel> best;
  for (int r = 0; r < restarts; ++r) {
    ClusterModel m = kmeans(points, k, seed + static_cast<std::uint64_t>(r));
    if (!best || m.wcss < best->wcss) best = std::move(m);
  }
  return std::move(*best);
}

struct ElbowResult {
  int k = 0;
  std::vector<double> wcss;        // wcss[i] belongs to k = i + 1
  std::vector<ClusterModel> models;
};

/// Index of the interior point farthest from the chord joining the first and
/// last points of a decreasing curve. Ties resolve to the smaller k.
inline int elbow_of_curve(std::span<const double> wcss) {
  const int k_max = static_cast<int>(wcss.size());
  if (k_max < 2) throw InputError("elbow: need at least two curve points");
  if (k_max == 2) return 2;
  const double x0 = 1.0, y0 = wcss.front();
  const double x1 = k_max, y1 = wcss.back();
  const double dx = x1 - x0, dy = y1 - y0;
  const double norm = std::hypot(dx, dy);
  int best = 2;
  double best_d = -1.0;
  for (int k = 2; k < k_max; ++k) {
    const double d = std::abs(dy * (k - x0) - dx * (wcss[k - 1] - y0)) / norm;
    if (d > best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

/// wcss(k) for k = 1..k_max, each the best of kElbowRestarts seeded runs,
/// and the elbow of that curve.
inline ElbowResult elbow_analysis(std::span<const Point2> points, int k_max, std::uint64_t seed) {
  if (k_max < 2) throw InputError("elbow: k_max must be >= 2");
  ElbowResult out;
  for (int k = 1; k <= k_max; ++k) {
    ClusterModel m = kmeans_best_of(points, k, seed + 1000u * static_cast<std::uint64_t>(k),
                                    kElbowRestarts);
    out.wcss.push_back(m.wcss);
    out.models.push_back(std::move(m));
  }
  out.k = elbow_of_curve(out.wcss);
  return out;
}

inline int elbow_select_k(std::span<const Point2> points, int k_max, std::uint64_t seed) {
  return elbow_analysis(points, k_max, seed).k;
}

/// Picks the cluster with the greatest centroid a* (the least green one)
/// unless `override_cluster` names one explicitly.
inline SegmentationResult select_lesion_cluster(ClusterModel model, const LabImage& lab,
                                                std::optional<int> override_cluster = {}) {
  if (model.assignment.size() != lab.size()) {
    throw InputError("select_lesion_cluster: model was not fit on this image");
  }
  std::vector<std::size_t> sizes(static_cast<std::size_t>(model.k), 0);
  for (int c : model.assignment) ++sizes[static_cast<std::size_t>(c)];

  int lesion = -1;
  if (override_cluster) {
    if (*override_cluster < 0 || *override_cluster >= model.k) {
      throw InputError("lesion cluster index out of range");
    }
    lesion = *override_cluster;
  } else {
    for (int c = 0; c < model.k; ++c) {
      if (sizes[static_cast<std::size_t>(c)] == 0) continue;
      if (lesion < 0 || model.centers[static_cast<std::size_t>(c)].a >
                            model.centers[static_cast<std::size_t>(lesion)].a) {
        lesion = c;
      }
    }
  }
  if (lesion < 0 || sizes[static_cast<std::size_t>(lesion)] == 0) {
    throw InternalError("selected lesion cluster is empty");
  }
  Mask mask(lab.width(), lab.height(), 0);
  auto m = mask.pixels();
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = model.assignment[i] == lesion ? 1 : 0;
  return SegmentationResult{std::move(model), std::move(mask), lesion};
}

struct SegmentOptions {
  int k_max = kDefaultMaxClusters;
  std::uint64_t seed = kDefaultSegmentationSeed;
  std::optional<int> lesion_cluster;  // explicit override of the a* rule
};

/// Elbow-chosen k-means on (a*, b*) followed by lesion selection. k_max is
/// lowered to the number of distinct colors when the image has fewer.
inline SegmentationResult segment_lesion(const LabImage& lab, const SegmentOptions& opts = {}) {
  const std::vector<Point2> pts = chroma_points(lab);
  const auto distinct = static_cast<int>(count_distinct(pts));
  if (distinct < 2) throw DegenerateLesion("lesion segmentation failed: image has a single color");
  const int k_max = std::min(opts.k_max, distinct);
  ElbowResult elbow = elbow_analysis(pts, k_max, opts.seed);
  ClusterModel model = std::move(elbow.models[static_cast<std::size_t>(elbow.k - 1)]);
  return select_lesion_cluster(std::move(model), lab, opts.lesion_cluster);
}

}  // namespace leafscan
