#pragma once

// Random partition families: the shifted cube lattice and ball carving over
// an epsilon/4-net. Instances are immutable after sampling.

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "padsmooth/core.hpp"
#include "padsmooth/geometry.hpp"
#include "padsmooth/stats.hpp"

namespace padsmooth {

enum class CellKind : std::uint8_t { cube, ball };

struct CellId {
  CellKind kind = CellKind::cube;
  std::vector<std::int64_t> index;

  friend bool operator==(const CellId&, const CellId&) = default;
  friend auto operator<=>(const CellId&, const CellId&) = default;

  std::string str() const {
    std::string s = kind == CellKind::cube ? "c" : "b";
    for (auto v : index) s += ":" + std::to_string(v);
    return s;
  }
};

struct CellIdHash {
  std::size_t operator()(const CellId& c) const {
    std::uint64_t h = static_cast<std::uint64_t>(c.kind);
    for (auto v : c.index) h = splitmix64(h ^ static_cast<std::uint64_t>(v));
    return static_cast<std::size_t>(h);
  }
};

enum class CertificateStatus { Contained, Cut, OffSupport };

inline const char* to_string(CertificateStatus s) {
  switch (s) {
    case CertificateStatus::Contained: return "contained";
    case CertificateStatus::Cut: return "cut";
    case CertificateStatus::OffSupport: return "off_support";
  }
  return "?";
}

struct PaddingCertificate {
  CertificateStatus status = CertificateStatus::Cut;
  /// Distance from x to the boundary of its cell; 0 when off support.
  double margin = 0.0;

  bool contained() const { return status == CertificateStatus::Contained; }
};

/// Result of a cell lookup. `fallback` marks the nearest-center branch of
/// ball carving for points no ball reaches.
struct CellLookup {
  CellId cell;
  bool fallback = false;
};

// ---------------------------------------------------------------------------

struct CubePartition {
  double epsilon = 0.0;
  std::size_t dim = 0;
  double width = 0.0;
  Point shift;
  std::uint64_t seed = 0;
};

inline CubePartition sample_cube_partition(std::size_t d, double epsilon,
                                           std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("cube partition: d must be >= 1");
  if (!(epsilon > 0.0))
    throw std::invalid_argument("cube partition: epsilon must be positive");
  CubePartition p;
  p.epsilon = epsilon;
  p.dim = d;
  p.width = epsilon / std::sqrt(static_cast<double>(d));
  p.seed = seed;
  p.shift = Point(d);
  Rng rng(seed);
  for (std::size_t i = 0; i < d; ++i) {
    double s = uniform01(rng) * p.width;
    p.shift[i] = s < p.width ? s : 0.0;
  }
  return p;
}

inline void check_query(std::size_t dim, const Point& x) {
  if (x.dim() != dim)
    throw DimensionMismatch("partition dim " + std::to_string(dim) +
                            " vs point dim " + std::to_string(x.dim()));
  if (!x.is_finite()) throw std::invalid_argument("non-finite query point");
}

inline CellId cell_of(const CubePartition& p, const Point& x) {
  check_query(p.dim, x);
  CellId c{CellKind::cube, std::vector<std::int64_t>(p.dim)};
  for (std::size_t i = 0; i < p.dim; ++i)
    c.index[i] = static_cast<std::int64_t>(std::floor((x[i] - p.shift[i]) / p.width));
  return c;
}

inline PaddingCertificate certificate(const CubePartition& p, const Point& x,
                                      double t) {
  const CellId c = cell_of(p, x);
  double m = INFINITY;
  for (std::size_t i = 0; i < p.dim; ++i) {
    const double lo = p.shift[i] + static_cast<double>(c.index[i]) * p.width;
    const double r = std::clamp(x[i] - lo, 0.0, p.width);
    m = std::min({m, r, p.width - r});
  }
  return {m >= t ? CertificateStatus::Contained : CertificateStatus::Cut, m};
}

inline Point representative(const CubePartition& p, const CellId& c) {
  Point out(p.dim);
  for (std::size_t i = 0; i < p.dim; ++i)
    out[i] = p.shift[i] + (static_cast<double>(c.index[i]) + 0.5) * p.width;
  return out;
}

/// Unit direction toward the nearest cell face and the distance to it.
inline std::pair<Point, double> boundary_direction(const CubePartition& p,
                                                   const Point& x) {
  const CellId c = cell_of(p, x);
  Point dir(p.dim);
  double best = INFINITY;
  std::size_t axis = 0;
  double sgn = 1.0;
  for (std::size_t i = 0; i < p.dim; ++i) {
    const double lo = p.shift[i] + static_cast<double>(c.index[i]) * p.width;
    const double r = x[i] - lo;
    if (r < best) best = r, axis = i, sgn = -1.0;
    if (p.width - r < best) best = p.width - r, axis = i, sgn = 1.0;
  }
  dir[axis] = sgn;
  return {dir, best};
}

// ---------------------------------------------------------------------------

struct BallCarvingPartition {
  EpsilonNet net;
  double epsilon = 0.0;
  double radius = 0.0;
  /// order[k] is the net index at permutation position k.
  std::vector<std::size_t> order;
  std::uint64_t seed = 0;
  /// Center coordinates laid out flat in permutation order.
  std::vector<double> ordered;

  std::size_t dim() const { return net.dim(); }

  std::span<const double> center_at(std::size_t pos) const {
    return {ordered.data() + pos * dim(), dim()};
  }
};

inline void build_ordered(BallCarvingPartition& p) {
  const std::size_t d = p.dim();
  p.ordered.assign(p.order.size() * d, 0.0);
  for (std::size_t k = 0; k < p.order.size(); ++k) {
    const Point& c = p.net.centers[p.order[k]];
    std::copy(c.begin(), c.end(), p.ordered.begin() + static_cast<std::ptrdiff_t>(k * d));
  }
}

inline BallCarvingPartition sample_ball_carving(EpsilonNet net, double epsilon,
                                                std::uint64_t seed) {
  if (net.centers.empty()) throw std::invalid_argument("ball carving: empty net");
  if (!(epsilon > 0.0))
    throw std::invalid_argument("ball carving: epsilon must be positive");
  if (std::abs(net.epsilon - epsilon / 4.0) > 1e-12 * epsilon)
    throw std::invalid_argument("ball carving: net spacing must be epsilon/4");
  BallCarvingPartition p;
  p.net = std::move(net);
  p.epsilon = epsilon;
  p.seed = seed;
  Rng rng(seed);
  p.radius = epsilon / 2.0 - uniform01(rng) * (epsilon / 4.0);
  const std::size_t n = p.net.size();
  p.order.resize(n);
  std::iota(p.order.begin(), p.order.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(p.order[i - 1], p.order[pick(rng)]);
  }
  build_ordered(p);
  return p;
}

namespace detail {
/// Squared distance, abandoned as soon as it exceeds `cap`.
inline double capped_sq(std::span<const double> a, std::span<const double> b,
                        double cap) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    s += t * t;
    if (s > cap) return s;
  }
  return s;
}

/// Permutation position of the capturing center, or none.
inline std::optional<std::size_t> capture_position(const BallCarvingPartition& p,
                                                   const Point& x) {
  const double r2 = p.radius * p.radius;
  for (std::size_t k = 0; k < p.order.size(); ++k)
    if (capped_sq(x.coords(), p.center_at(k), r2) <= r2) return k;
  return std::nullopt;
}

inline std::size_t nearest_position(const BallCarvingPartition& p,
                                    const Point& x) {
  std::size_t best = 0;
  double bd = INFINITY;
  for (std::size_t k = 0; k < p.order.size(); ++k) {
    const double s = capped_sq(x.coords(), p.center_at(k), bd);
    if (s < bd) bd = s, best = k;
  }
  return best;
}
}  // namespace detail

inline CellLookup lookup(const BallCarvingPartition& p, const Point& x) {
  check_query(p.dim(), x);
  if (auto k = detail::capture_position(p, x))
    return {{CellKind::ball, {static_cast<std::int64_t>(p.order[*k])}}, false};
  const std::size_t k = detail::nearest_position(p, x);
  return {{CellKind::ball, {static_cast<std::int64_t>(p.order[k])}}, true};
}

inline CellId cell_of(const BallCarvingPartition& p, const Point& x) {
  return lookup(p, x).cell;
}

/// margin = min(R - d(x,u), min over earlier w of d(x,w) - R).
inline PaddingCertificate certificate(const BallCarvingPartition& p,
                                      const Point& x, double t) {
  check_query(p.dim(), x);
  const auto k = detail::capture_position(p, x);
  if (!k) return {CertificateStatus::OffSupport, 0.0};
  double m = p.radius - std::sqrt(squared_distance(x.coords(), p.center_at(*k)));
  for (std::size_t j = 0; j < *k && m > 0.0; ++j) {
    const double cap = (p.radius + m) * (p.radius + m);
    const double s = detail::capped_sq(x.coords(), p.center_at(j), cap);
    if (s < cap) m = std::min(m, std::sqrt(s) - p.radius);
  }
  m = std::max(m, 0.0);
  return {m >= t ? CertificateStatus::Contained : CertificateStatus::Cut, m};
}

inline Point representative(const BallCarvingPartition& p, const CellId& c) {
  return p.net.centers.at(static_cast<std::size_t>(c.index.at(0)));
}

/// Unit direction that crosses the binding cell boundary and its distance.
/// Off-support points get the direction toward their fallback center.
inline std::pair<Point, double> boundary_direction(const BallCarvingPartition& p,
                                                   const Point& x) {
  const std::size_t d = p.dim();
  auto unit = [&](std::span<const double> from, std::span<const double> to,
                  double sgn) {
    Point v(d);
    for (std::size_t i = 0; i < d; ++i) v[i] = sgn * (to[i] - from[i]);
    const double n = norm(v.coords());
    if (n > 0) v = scaled(v, 1.0 / n);
    else v[0] = 1.0;
    return v;
  };
  const auto k = detail::capture_position(p, x);
  if (!k) {
    const std::size_t j = detail::nearest_position(p, x);
    const double dj = std::sqrt(squared_distance(x.coords(), p.center_at(j)));
    return {unit(x.coords(), p.center_at(j), 1.0), std::max(0.0, dj - p.radius)};
  }
  const double du = std::sqrt(squared_distance(x.coords(), p.center_at(*k)));
  double best = p.radius - du;
  Point dir = unit(p.center_at(*k), x.coords(), 1.0);
  for (std::size_t j = 0; j < *k; ++j) {
    const double dj = std::sqrt(squared_distance(x.coords(), p.center_at(j)));
    if (dj - p.radius < best) {
      best = dj - p.radius;
      dir = unit(x.coords(), p.center_at(j), 1.0);
    }
  }
  return {dir, std::max(0.0, best)};
}

// ---------------------------------------------------------------------------

using Partition = std::variant<CubePartition, BallCarvingPartition>;

inline CellLookup lookup(const CubePartition& p, const Point& x) {
  return {cell_of(p, x), false};
}
inline CellLookup lookup(const Partition& p, const Point& x) {
  return std::visit([&](const auto& q) { return lookup(q, x); }, p);
}
inline CellId cell_of(const Partition& p, const Point& x) {
  return lookup(p, x).cell;
}
inline PaddingCertificate certificate(const Partition& p, const Point& x,
                                      double t) {
  return std::visit([&](const auto& q) { return certificate(q, x, t); }, p);
}
inline Point representative(const Partition& p, const CellId& c) {
  return std::visit([&](const auto& q) { return representative(q, c); }, p);
}
inline std::pair<Point, double> boundary_direction(const Partition& p,
                                                   const Point& x) {
  return std::visit([&](const auto& q) { return boundary_direction(q, x); }, p);
}
inline double partition_epsilon(const Partition& p) {
  return std::visit([](const auto& q) { return q.epsilon; }, p);
}
inline std::size_t partition_dim(const Partition& p) {
  return std::visit(
      [](const auto& q) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(q)>, CubePartition>)
          return q.dim;
        else
          return q.dim();
      },
      p);
}
inline const char* family_name(const Partition& p) {
  return std::holds_alternative<CubePartition>(p) ? "cube" : "ball";
}

// ---------------------------------------------------------------------------
// JSON

using nlohmann::json;

inline json to_json(const Partition& part) {
  json j;
  if (const auto* c = std::get_if<CubePartition>(&part)) {
    j["family"] = "cube";
    j["epsilon"] = c->epsilon;
    j["d"] = c->dim;
    j["seed"] = c->seed;
    j["width"] = c->width;
    j["shift"] = c->shift.vec();
  } else {
    const auto& b = std::get<BallCarvingPartition>(part);
    j["family"] = "ball";
    j["epsilon"] = b.epsilon;
    j["d"] = b.dim();
    j["seed"] = b.seed;
    j["radius"] = b.radius;
    j["order"] = b.order;
    j["net_epsilon"] = b.net.epsilon;
    j["net_source_count"] = b.net.source_count;
    json centers = json::array();
    for (const auto& c : b.net.centers) centers.push_back(c.vec());
    j["centers"] = std::move(centers);
  }
  return j;
}

inline Partition partition_from_json(const json& j) {
  const std::string fam = j.at("family").get<std::string>();
  if (fam == "cube") {
    CubePartition c;
    c.epsilon = j.at("epsilon").get<double>();
    c.dim = j.at("d").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.width = j.at("width").get<double>();
    c.shift = Point(j.at("shift").get<std::vector<double>>());
    if (c.shift.dim() != c.dim) throw Error("partition json: shift length");
    return c;
  }
  if (fam == "ball") {
    BallCarvingPartition b;
    b.epsilon = j.at("epsilon").get<double>();
    b.seed = j.at("seed").get<std::uint64_t>();
    b.radius = j.at("radius").get<double>();
    b.order = j.at("order").get<std::vector<std::size_t>>();
    b.net.epsilon = j.at("net_epsilon").get<double>();
    b.net.source_count = j.at("net_source_count").get<std::size_t>();
    for (const auto& c : j.at("centers"))
      b.net.centers.emplace_back(c.get<std::vector<double>>());
    if (b.order.size() != b.net.size()) throw Error("partition json: order size");
    build_ordered(b);
    return b;
  }
  throw Error("partition json: unknown family '" + fam + "'");
}

// ---------------------------------------------------------------------------
// Empirical estimators

using PartitionSampler = std::function<Partition(Rng&)>;
using PointSampler = std::function<Point(Rng&)>;

/// Fraction of (partition, point) draws whose t-ball certificate is not
/// Contained. `t_of` maps a partition to the radius tested on it.
inline Proportion estimate_paddedness(const PartitionSampler& family,
                                      const PointSampler& data,
                                      const std::function<double(const Partition&)>& t_of,
                                      std::size_t trials, Rng& rng,
                                      std::size_t points_per_partition = 1) {
  if (trials < 1) throw std::invalid_argument("estimate_paddedness: trials >= 1");
  Proportion out;
  while (out.trials < trials) {
    const Partition part = family(rng);
    const double t = t_of(part);
    for (std::size_t i = 0; i < points_per_partition && out.trials < trials; ++i) {
      const Point x = data(rng);
      if (!certificate(part, x, t).contained()) ++out.successes;
      ++out.trials;
    }
  }
  return out;
}

struct LipschitzPoint {
  double distance = 0.0;
  Proportion separated;
};

struct LipschitzCurve {
  std::vector<LipschitzPoint> points;
  double epsilon = 0.0;
  /// c in P ~ c * dist / epsilon, fitted on buckets with P <= 0.5.
  double slope = 0.0;
};

using PairSampler = std::function<std::pair<Point, Point>(double, Rng&)>;

inline LipschitzCurve estimate_lipschitz_constant(
    const PartitionSampler& family, const PairSampler& pairs,
    const std::vector<double>& distances, std::size_t trials, Rng& rng) {
  LipschitzCurve curve;
  std::vector<double> xs, ys;
  for (double dist : distances) {
    LipschitzPoint lp{dist, {}};
    for (std::size_t i = 0; i < trials; ++i) {
      const Partition part = family(rng);
      curve.epsilon = partition_epsilon(part);
      auto [a, b] = pairs(dist, rng);
      if (!(cell_of(part, a) == cell_of(part, b))) ++lp.separated.successes;
      ++lp.separated.trials;
    }
    curve.points.push_back(lp);
  }
  for (const auto& lp : curve.points) {
    if (lp.separated.value() <= 0.5 && lp.distance > 0) {
      xs.push_back(lp.distance / curve.epsilon);
      ys.push_back(lp.separated.value());
    }
  }
  curve.slope = fit_through_origin(xs, ys);
  return curve;
}

}  // namespace padsmooth
