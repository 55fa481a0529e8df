#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "padsmooth/partitions.hpp"

using namespace padsmooth;

namespace {

std::vector<Point> circle_points(std::size_t n, double r, Rng& rng) {
  std::vector<Point> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = 2 * std::numbers::pi * uniform01(rng);
    out.push_back({r * std::cos(t), r * std::sin(t)});
  }
  return out;
}

BallCarvingPartition disc_carving(double eps, std::uint64_t seed, std::size_t n = 4000) {
  Rng rng(99);
  std::vector<Point> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back(uniform_in_ball({0, 0}, 1.0, rng));
  return sample_ball_carving(greedy_net(pts, eps / 4), eps, seed);
}

// Brute force: first center in permutation order within R.
std::optional<std::size_t> oracle_ball_cell(const BallCarvingPartition& p, const Point& x) {
  for (std::size_t k = 0; k < p.order.size(); ++k) {
    const Point& c = p.net.centers[p.order[k]];
    double s = 0;
    for (std::size_t i = 0; i < x.dim(); ++i) s += (x[i] - c[i]) * (x[i] - c[i]);
    if (std::sqrt(s) <= p.radius) return p.order[k];
  }
  return std::nullopt;
}

Point perturb(const Point& x, double r, Rng& rng) { return uniform_in_ball(x, r, rng); }

}  // namespace

TEST(CubePartition, WidthAndShiftRange) {
  for (std::size_t d : {1, 2, 5, 10}) {
    const auto p = sample_cube_partition(d, 1.0, 3);
    EXPECT_DOUBLE_EQ(p.width, 1.0 / std::sqrt(static_cast<double>(d)));
    for (double s : p.shift) {
      EXPECT_GE(s, 0.0);
      EXPECT_LT(s, p.width);
    }
  }
}

TEST(CubePartition, SameSeedSameCells) {
  const auto a = sample_cube_partition(3, 0.7, 42), b = sample_cube_partition(3, 0.7, 42);
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const Point x = gaussian_point(3, rng, 3.0);
    EXPECT_EQ(cell_of(a, x), cell_of(b, x));
  }
}

TEST(CubePartition, ShiftIsUniform) {
  std::vector<double> u;
  for (std::uint64_t s = 0; s < 3000; ++s) {
    const auto p = sample_cube_partition(2, 1.0, derive_seed(5, "shift", s));
    u.push_back(p.shift[1] / p.width);
  }
  EXPECT_LT(ks_statistic(u, [](double v) { return v; }), ks_critical_01(u.size()));
}

TEST(CubePartition, HalfOpenCells) {
  CubePartition p;
  p.dim = 1;
  p.epsilon = 0.5;
  p.width = 0.5;
  p.shift = Point{0.0};
  EXPECT_EQ(cell_of(p, {1.0}).index[0], 2);
  EXPECT_EQ(cell_of(p, {std::nextafter(1.0, 0.0)}).index[0], 1);
  EXPECT_EQ(cell_of(p, {0.0}).index[0], 0);
  EXPECT_EQ(cell_of(p, {-1e-300}).index[0], -1);
}

TEST(CubePartition, RejectsBadQueries) {
  const auto p = sample_cube_partition(2, 1.0, 1);
  EXPECT_THROW(cell_of(p, {0.0, 0.0, 0.0}), DimensionMismatch);
  EXPECT_THROW(cell_of(p, {NAN, 0.0}), std::invalid_argument);
  EXPECT_THROW(sample_cube_partition(0, 1.0, 1), std::invalid_argument);
  EXPECT_THROW(sample_cube_partition(2, 0.0, 1), std::invalid_argument);
}

TEST(CubePartition, CellsHaveDiameterAtMostEpsilon) {
  const auto p = sample_cube_partition(4, 1.0, 8);
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const CellId c = cell_of(p, gaussian_point(4, rng));
    // Corners of the closed cell are the farthest pair.
    Point lo = representative(p, c), hi = lo;
    for (std::size_t k = 0; k < 4; ++k) lo[k] -= p.width / 2, hi[k] += p.width / 2;
    EXPECT_LE(l2_distance(lo, hi), 1.0 + 1e-12);
  }
}

TEST(CubePartition, CertificateIsSound) {
  Rng rng(3);
  for (std::size_t d : {1, 2, 3, 8}) {
    const auto p = sample_cube_partition(d, 1.0, 10 + d);
    int checked = 0;
    for (int i = 0; i < 200; ++i) {
      const Point x = gaussian_point(d, rng);
      const auto cert = certificate(p, x, 0.0);
      if (cert.margin <= 0) continue;
      ++checked;
      const CellId c = cell_of(p, x);
      for (int j = 0; j < 1000; ++j)
        ASSERT_EQ(cell_of(p, perturb(x, cert.margin * (1 - 1e-9), rng)), c);
    }
    EXPECT_GT(checked, 100);
  }
}

TEST(CubePartition, CertificateIsTight) {
  Rng rng(4);
  const auto p = sample_cube_partition(3, 1.0, 77);
  for (int i = 0; i < 500; ++i) {
    const Point x = gaussian_point(3, rng);
    const auto [dir, dist] = boundary_direction(p, x);
    EXPECT_NEAR(dist, certificate(p, x, 0.0).margin, 1e-12);
    EXPECT_NE(cell_of(p, add_scaled(x, dir, dist + 1e-9)), cell_of(p, x));
  }
}

TEST(CubePartition, ExactCutProbability) {
  // For a fixed point the cut probability over shifts is 1 - (1 - 2t/w)^d.
  const std::size_t d = 3;
  const double eps = 1.0, t = 0.05, w = eps / std::sqrt(3.0);
  const double exact = 1 - std::pow(1 - 2 * t / w, 3.0);
  Rng rng(5);
  const Point x{0.3, -0.2, 0.9};
  const auto est = estimate_paddedness(
      [&](Rng& r) { return Partition(sample_cube_partition(d, eps, r())); },
      [&](Rng&) { return x; }, [&](const Partition&) { return t; }, 40000, rng);
  EXPECT_NEAR(est.value(), exact, 4 * binomial_sigma(exact, est.trials));
  EXPECT_LE(exact, 2 * t * static_cast<double>(d) / w);
}

TEST(CubePartition, OneDimensionalSeparationSlopeIsOne) {
  Rng rng(6);
  const double eps = 1.0;
  const auto curve = estimate_lipschitz_constant(
      [&](Rng& r) { return Partition(sample_cube_partition(1, eps, r())); },
      [](double dist, Rng& r) {
        const Point a{10 * uniform01(r)};
        return std::pair{a, Point{a[0] + dist}};
      },
      {0.02, 0.05, 0.1, 0.2}, 20000, rng);
  EXPECT_NEAR(curve.slope, 1.0, 0.05);
  for (const auto& lp : curve.points)
    EXPECT_NEAR(lp.separated.value(), lp.distance, 4 * binomial_sigma(lp.distance, 20000));
}

TEST(BallCarving, RadiusRangeAndNetRequirement) {
  const auto p = disc_carving(0.4, 1);
  EXPECT_GE(p.radius, 0.1);
  EXPECT_LE(p.radius, 0.2);
  Rng rng(7);
  auto pts = circle_points(100, 1.0, rng);
  EXPECT_THROW(sample_ball_carving(greedy_net(pts, 0.2), 0.4, 1), std::invalid_argument);
}

TEST(BallCarving, RadiusIsUniform) {
  Rng rng(8);
  const auto pts = circle_points(500, 1.0, rng);
  const auto net = greedy_net(pts, 0.1);
  std::vector<double> u;
  for (std::uint64_t s = 0; s < 3000; ++s) {
    const auto p = sample_ball_carving(net, 0.4, derive_seed(1, "r", s));
    u.push_back((p.radius - 0.1) / 0.1);
  }
  EXPECT_LT(ks_statistic(u, [](double v) { return v; }), ks_critical_01(u.size()));
}

TEST(BallCarving, OrderIsPermutation) {
  const auto p = disc_carving(0.4, 9);
  std::vector<std::size_t> sorted = p.order;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) EXPECT_EQ(sorted[i], i);
}

TEST(BallCarving, MatchesBruteForceAssignment) {
  const auto p = disc_carving(0.3, 10);
  Rng rng(11);
  for (int i = 0; i < 3000; ++i) {
    const Point x = uniform_in_ball({0, 0}, 1.3, rng);
    const auto got = lookup(p, x);
    const auto want = oracle_ball_cell(p, x);
    ASSERT_EQ(!got.fallback, want.has_value());
    if (want) {
      EXPECT_EQ(static_cast<std::size_t>(got.cell.index[0]), *want);
    }
  }
}

TEST(BallCarving, FarPointsFallBackAndAreOffSupport) {
  const auto p = disc_carving(0.3, 12);
  const Point far{5.0, 5.0};
  const auto l = lookup(p, far);
  EXPECT_TRUE(l.fallback);
  EXPECT_EQ(certificate(p, far, 0.0).status, CertificateStatus::OffSupport);
  // Fallback is the nearest center.
  double best = INFINITY;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < p.net.size(); ++i)
    if (l2_distance(p.net.centers[i], far) < best) best = l2_distance(p.net.centers[i], far), arg = i;
  EXPECT_EQ(static_cast<std::size_t>(l.cell.index[0]), arg);
}

TEST(BallCarving, SupportIsCovered) {
  // Every source point lies within eps/4 of a center and R >= eps/4.
  Rng rng(13);
  const auto pts = circle_points(3000, 1.0, rng);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto p = sample_ball_carving(greedy_net(pts, 0.1), 0.4, s);
    for (const auto& x : pts) ASSERT_FALSE(lookup(p, x).fallback);
  }
}

TEST(BallCarving, CellsHaveDiameterAtMostEpsilon) {
  const auto p = disc_carving(0.3, 14);
  Rng rng(15);
  std::map<std::int64_t, std::vector<Point>> cells;
  for (int i = 0; i < 4000; ++i) {
    const Point x = uniform_in_ball({0, 0}, 1.0, rng);
    const auto l = lookup(p, x);
    if (!l.fallback) cells[l.cell.index[0]].push_back(x);
  }
  for (const auto& [id, pts] : cells)
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i + 1; j < pts.size(); ++j) ASSERT_LE(l2_distance(pts[i], pts[j]), 0.3);
}

TEST(BallCarving, CertificateIsSound) {
  Rng rng(16);
  for (std::uint64_t s = 0; s < 4; ++s) {
    const auto p = disc_carving(0.3, 100 + s);
    int checked = 0;
    for (int i = 0; i < 100; ++i) {
      const Point x = uniform_in_ball({0, 0}, 1.0, rng);
      const auto cert = certificate(p, x, 0.0);
      if (cert.margin <= 0) continue;
      ++checked;
      const CellId c = cell_of(p, x);
      for (int j = 0; j < 1000; ++j) {
        const auto l = lookup(p, perturb(x, cert.margin * (1 - 1e-9), rng));
        ASSERT_FALSE(l.fallback);
        ASSERT_EQ(l.cell, c);
      }
    }
    EXPECT_GT(checked, 30);
  }
}

TEST(BallCarving, CertificateIsTight) {
  const auto p = disc_carving(0.3, 17);
  Rng rng(18);
  for (int i = 0; i < 500; ++i) {
    const Point x = uniform_in_ball({0, 0}, 1.0, rng);
    const auto cert = certificate(p, x, 0.0);
    if (cert.margin <= 0) continue;
    const auto [dir, dist] = boundary_direction(p, x);
    EXPECT_NEAR(dist, cert.margin, 1e-12);
    const auto moved = lookup(p, add_scaled(x, dir, dist + 1e-9));
    EXPECT_TRUE(moved.fallback || !(moved.cell == cell_of(p, x)));
  }
}

TEST(BallCarving, CutProbabilityWithinPaddingBound) {
  Rng rng(19);
  const auto pts = circle_points(4000, 1.0, rng);
  const double eps = 0.4;
  const auto net = greedy_net(pts, eps / 4);
  const double dd = estimate_doubling_dimension(pts, eps);
  for (double t : {eps / 40, eps / 20, eps / 10}) {
    const auto est = estimate_paddedness(
        [&](Rng& r) { return Partition(sample_ball_carving(net, eps, r())); },
        [&](Rng& r) { return pts[std::uniform_int_distribution<std::size_t>(0, pts.size() - 1)(r)]; },
        [&](const Partition&) { return t; }, 5000, rng, 10);
    EXPECT_LE(est.value(), t * (8 * dd + 4) / eps);
    EXPECT_GT(est.value(), 0.0);
  }
}

TEST(PartitionJson, RoundTripPreservesCells) {
  Rng rng(20);
  const Partition parts[] = {Partition(sample_cube_partition(2, 0.5, 5)),
                             Partition(disc_carving(0.3, 21))};
  for (const auto& part : parts) {
    const Partition back = partition_from_json(json::parse(to_json(part).dump()));
    EXPECT_STREQ(family_name(back), family_name(part));
    for (int i = 0; i < 1000; ++i) {
      const Point x = uniform_in_ball({0, 0}, 1.2, rng);
      EXPECT_EQ(cell_of(back, x), cell_of(part, x));
      EXPECT_EQ(certificate(back, x, 0.01).margin, certificate(part, x, 0.01).margin);
    }
  }
  EXPECT_THROW(partition_from_json(json{{"family", "hex"}}), Error);
}

TEST(CellId, StringAndOrdering) {
  const CellId a{CellKind::cube, {1, -2}}, b{CellKind::cube, {1, 3}};
  EXPECT_EQ(a.str(), "c:1:-2");
  EXPECT_LT(a, b);
  EXPECT_NE(CellIdHash{}(a), CellIdHash{}(b));
}
