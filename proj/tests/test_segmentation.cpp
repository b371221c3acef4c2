#include <catch_amalgamated.hpp>

#include "leafscan/colorspace.hpp"
#include "leafscan/random.hpp"
#include "leafscan/segmentation.hpp"
#include "leafscan/synthetic.hpp"
#include "oracles.hpp"

using namespace leafscan;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<Point2> blobs(const std::vector<Point2>& centers, std::size_t per_blob, double sigma, Rng& rng) {
  std::vector<Point2> pts;
  for (const Point2& c : centers)
    for (std::size_t i = 0; i < per_blob; ++i) pts.push_back({rng.normal(c.a, sigma), rng.normal(c.b, sigma)});
  return pts;
}

}  // namespace

TEST_CASE("best-of-ten k-means reaches the exhaustive optimum on small sets") {
  Rng rng(77);
  for (int instance = 0; instance < 50; ++instance) {
    const std::size_t n = 3 + rng.index(6);
    std::vector<Point2> pts;
    std::vector<std::array<double, 2>> raw;
    for (std::size_t i = 0; i < n; ++i) {
      const Point2 p{rng.uniform(-10, 10), rng.uniform(-10, 10)};
      pts.push_back(p);
      raw.push_back({p.a, p.b});
    }
    for (int k = 1; k <= 3; ++k) {
      const ClusterModel m = kmeans_best_of(pts, k, 1000u * static_cast<std::uint64_t>(instance), 10);
      INFO("instance " << instance << " n " << n << " k " << k);
      CHECK_THAT(m.wcss, WithinAbs(oracle::best_partition_wcss(raw, k), 1e-9));
    }
  }
}

TEST_CASE("Lloyd objective never increases and assignments are nearest centers") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const auto pts = blobs({{0, 0}, {4, 1}, {1, 5}, {6, 6}}, 40, 1.5, rng);
    const ClusterModel m = kmeans(pts, 4, static_cast<std::uint64_t>(trial));
    for (std::size_t i = 1; i < m.objective_history.size(); ++i)
      CHECK(m.objective_history[i] <= m.objective_history[i - 1]);
    CHECK(m.iterations <= kMaxLloydIterations);
    double wcss = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto own = static_cast<std::size_t>(m.assignment[i]);
      const double d = squared_distance(pts[i], m.centers[own]);
      for (const Point2& c : m.centers) CHECK(d <= squared_distance(pts[i], c));
      wcss += d;
    }
    CHECK_THAT(wcss, WithinAbs(m.wcss, 1e-9 * (1 + wcss)));
  }
}

TEST_CASE("k-means is deterministic for a seed and rejects impossible k") {
  Rng rng(2);
  const auto pts = blobs({{0, 0}, {5, 5}}, 30, 1.0, rng);
  const ClusterModel a = kmeans(pts, 3, 9);
  const ClusterModel b = kmeans(pts, 3, 9);
  CHECK(a.assignment == b.assignment);
  CHECK(a.wcss == b.wcss);

  const std::vector<Point2> dup{{1, 1}, {1, 1}, {2, 2}};
  CHECK_THROWS_WITH(kmeans(dup, 3, 0), "k exceeds distinct points");
  CHECK_NOTHROW(kmeans(dup, 2, 0));
}

TEST_CASE("elbow finds three well separated blobs") {
  int hits = 0;
  for (std::uint64_t run = 0; run < 100; ++run) {
    Rng rng(500 + run);
    const auto pts = blobs({{-20, 10}, {15, 25}, {5, -20}}, 60, 2.0, rng);
    if (elbow_select_k(pts, kDefaultMaxClusters, run) == 3) ++hits;
  }
  CHECK(hits >= 95);
}

TEST_CASE("elbow of explicit curves") {
  const std::vector<double> sharp{100, 10, 9, 8, 7, 6};
  CHECK(elbow_of_curve(sharp) == 2);
  const std::vector<double> two{5, 1};
  CHECK(elbow_of_curve(two) == 2);
  const std::vector<double> knee3{100, 60, 12, 10, 9, 8};
  CHECK(elbow_of_curve(knee3) == 3);
}

TEST_CASE("a single blob never yields k = 1 or k_max") {
  for (std::uint64_t run = 0; run < 10; ++run) {
    Rng rng(run);
    const auto pts = blobs({{0, 0}}, 200, 3.0, rng);
    const int k = elbow_select_k(pts, 8, run);
    CHECK(k >= 2);
    CHECK(k < 8);
  }
}

TEST_CASE("lesion cluster is the one with the largest a*") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SyntheticLeaf leaf = make_leaf(48, seed, {140, 85, 40}, 6, true);
    const LabImage lab = srgb_to_lab(leaf.image);
    const SegmentationResult seg = segment_lesion(lab);
    const auto lesion = static_cast<std::size_t>(seg.lesion_cluster);
    for (std::size_t c = 0; c < seg.model.centers.size(); ++c)
      CHECK(seg.model.centers[c].a <= seg.model.centers[lesion].a);
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < lab.size(); ++i) {
      const bool a = seg.lesion_mask.pixels()[i] != 0, b = leaf.lesion.pixels()[i] != 0;
      inter += a && b;
      uni += a || b;
    }
    CHECK(static_cast<double>(inter) / static_cast<double>(uni) > 0.9);
  }
}

TEST_CASE("explicit lesion cluster override") {
  const SyntheticLeaf leaf = make_leaf(32, 4, {140, 85, 40}, 6, true);
  const LabImage lab = srgb_to_lab(leaf.image);
  SegmentOptions opts;
  opts.lesion_cluster = 0;
  const SegmentationResult seg = segment_lesion(lab, opts);
  CHECK(seg.lesion_cluster == 0);
  opts.lesion_cluster = 99;
  CHECK_THROWS_AS(segment_lesion(lab, opts), InputError);
}

TEST_CASE("single-color images cannot be segmented") {
  const LabImage flat(8, 8, Lab{50, 10, 10});
  CHECK_THROWS_AS(segment_lesion(flat), DegenerateLesion);

  // Two colors only: k_max shrinks to 2.
  LabImage two(4, 4, Lab{50, -30, 20});
  two(1, 1) = two(1, 2) = Lab{40, 25, 20};
  const SegmentationResult seg = segment_lesion(two);
  CHECK(seg.model.k == 2);
  CHECK(count_selected(seg.lesion_mask) == 2);
}
