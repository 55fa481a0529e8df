#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "padsmooth/core.hpp"

namespace padsmooth {

inline void require_same_dim(const Point& a, const Point& b) {
  if (a.dim() != b.dim())
    throw DimensionMismatch("dimension mismatch: " + std::to_string(a.dim()) +
                            " vs " + std::to_string(b.dim()));
}

inline double squared_distance(std::span<const double> a,
                               std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    s += t * t;
  }
  return s;
}

inline double l2_distance(const Point& a, const Point& b) {
  require_same_dim(a, b);
  return std::sqrt(squared_distance(a.coords(), b.coords()));
}

/// Centers with pairwise spacing >= epsilon covering every scanned point
/// within distance < epsilon.
struct EpsilonNet {
  std::vector<Point> centers;
  double epsilon = 0.0;
  std::size_t source_count = 0;

  std::size_t size() const { return centers.size(); }
  std::size_t dim() const { return centers.empty() ? 0 : centers[0].dim(); }
};

/// Greedy net in input order: a point becomes a center unless some existing
/// center lies at distance < epsilon.
inline EpsilonNet greedy_net(const std::vector<Point>& points, double epsilon) {
  if (points.empty()) throw std::invalid_argument("greedy_net: empty input");
  if (!(epsilon > 0.0))
    throw std::invalid_argument("greedy_net: epsilon must be positive");
  EpsilonNet net;
  net.epsilon = epsilon;
  net.source_count = points.size();
  const double eps2 = epsilon * epsilon;
  const std::size_t d = points[0].dim();
  for (const Point& p : points) {
    if (p.dim() != d) throw DimensionMismatch("greedy_net: ragged input");
    bool covered = false;
    for (const Point& c : net.centers) {
      if (squared_distance(p.coords(), c.coords()) < eps2) {
        covered = true;
        break;
      }
    }
    if (!covered) net.centers.push_back(p);
  }
  return net;
}

struct NetCheck {
  bool spacing_ok = true;
  bool coverage_ok = true;
  double min_spacing = INFINITY;
  double max_cover = 0.0;

  bool ok() const { return spacing_ok && coverage_ok; }
};

/// Exhaustive O(n * |net| + |net|^2) check of both net conditions.
inline NetCheck verify_net(const EpsilonNet& net,
                           const std::vector<Point>& points) {
  NetCheck out;
  for (std::size_t i = 0; i < net.size(); ++i)
    for (std::size_t j = i + 1; j < net.size(); ++j)
      out.min_spacing =
          std::min(out.min_spacing, l2_distance(net.centers[i], net.centers[j]));
  out.spacing_ok = !(out.min_spacing < net.epsilon);
  for (const Point& p : points) {
    double best = INFINITY;
    for (const Point& c : net.centers) best = std::min(best, l2_distance(p, c));
    out.max_cover = std::max(out.max_cover, best);
  }
  out.coverage_ok = !(out.max_cover > net.epsilon);
  return out;
}

/// Number of net centers strictly inside B_t(center).
inline std::size_t packing_count(const EpsilonNet& net, const Point& center,
                                 double t) {
  std::size_t n = 0;
  for (const Point& c : net.centers)
    if (l2_distance(c, center) < t) ++n;
  return n;
}

/// 2^{dd * ceil(log2(2t/r))}.
inline double packing_bound(double dd, double t, double r) {
  return std::exp2(dd * std::ceil(std::log2(2.0 * t / r)));
}

struct DoublingOptions {
  std::size_t max_centers = 64;
  int scales = 8;
};

/// log2 of the largest greedy (r/2)-cover of B_r(c), maximized over sampled
/// centers c and radii r = epsilon * 2^-j.
inline double estimate_doubling_dimension(const std::vector<Point>& points,
                                          double epsilon,
                                          DoublingOptions opt = {}) {
  if (points.size() < 2)
    throw std::invalid_argument("estimate_doubling_dimension: need >= 2 points");
  const std::size_t n = points.size();
  const std::size_t m = std::min(opt.max_centers, n);
  std::size_t best = 1;
  std::vector<Point> ball;
  for (std::size_t ci = 0; ci < m; ++ci) {
    const Point& c = points[ci * n / m];
    for (int j = 0; j < opt.scales; ++j) {
      const double r = epsilon * std::exp2(-j);
      ball.clear();
      for (const Point& p : points)
        if (squared_distance(p.coords(), c.coords()) < r * r) ball.push_back(p);
      if (ball.empty()) continue;
      best = std::max(best, greedy_net(ball, r / 2.0).size());
    }
  }
  return std::log2(static_cast<double>(best));
}

}  // namespace padsmooth
