#pragma once

// Synthetic separable binary tasks with exact ground truth, planted-error
// base classifiers and analytic robust classifiers.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "padsmooth/core.hpp"
#include "padsmooth/geometry.hpp"
#include "padsmooth/partitions.hpp"

namespace padsmooth {

enum class TaskFamily { spheres, circles, discs, hard };

inline const char* to_string(TaskFamily f) {
  switch (f) {
    case TaskFamily::spheres: return "spheres";
    case TaskFamily::circles: return "circles";
    case TaskFamily::discs: return "discs";
    case TaskFamily::hard: return "hard";
  }
  return "?";
}

struct SupportMetadata {
  std::optional<int> manifold_dim;
  std::optional<double> curvature;
};

/// Geometry of the hard distribution: +1 mass on B_r(0) and on B_r(u) for u
/// in a 1.2*scale packing of the radius-`scale` sphere; -1 is a point mass.
struct HardDistributionInfo {
  double sigma = 0.0;
  double scale = 0.0;  ///< sqrt(d * sigma / 10)
  double blob_radius = 0.0;
  std::vector<Point> packing;
  std::size_t target_size = 0;
  std::size_t rejection_trials = 0;
  double center_weight = 0.0;  ///< density ratio, central vs each outer ball
  Point far_point;

  /// Probability of the misclassified central blob.
  double central_mass() const {
    return 0.5 * center_weight /
           (center_weight + static_cast<double>(packing.size()));
  }
};

struct Task {
  TaskFamily family = TaskFamily::spheres;
  std::string name;
  std::size_t dim = 0;
  std::function<LabeledSample(Rng&)> sample;
  std::function<Label(const Point&)> ground_truth;
  std::function<double(double)> separation;
  SupportMetadata support;
  std::shared_ptr<const HardDistributionInfo> hard;

  Point sample_point(Rng& rng) const { return sample(rng).x; }
};

/// Deterministic black-box classifier with a shared evaluation counter.
class BlackBoxClassifier {
 public:
  BlackBoxClassifier() = default;
  explicit BlackBoxClassifier(std::function<Label(const Point&)> fn)
      : fn_(std::move(fn)),
        count_(std::make_shared<std::atomic<std::uint64_t>>(0)) {}

  Label operator()(const Point& x) const {
    count_->fetch_add(1, std::memory_order_relaxed);
    return fn_(x);
  }
  std::uint64_t evaluations() const { return count_->load(); }

 private:
  std::function<Label(const Point&)> fn_;
  std::shared_ptr<std::atomic<std::uint64_t>> count_;
};

/// Classifier sgn(s(x)) where |s(x)| is the exact distance to the decision
/// boundary and `toward` points across it. Certificates are exact.
class SignedDistanceClassifier {
 public:
  SignedDistanceClassifier(std::function<double(const Point&)> s,
                           std::function<Point(const Point&)> toward)
      : s_(std::move(s)), toward_(std::move(toward)) {}

  Label operator()(const Point& x) const { return sign_label(s_(x)); }
  double signed_distance(const Point& x) const { return s_(x); }

  PaddingCertificate certify(const Point& x, double t) const {
    const double m = std::abs(s_(x));
    return {m >= t ? CertificateStatus::Contained : CertificateStatus::Cut, m};
  }
  std::pair<Point, double> attack_direction(const Point& x) const {
    return {toward_(x), std::abs(s_(x))};
  }

 private:
  std::function<double(const Point&)> s_;
  std::function<Point(const Point&)> toward_;
};

// ---------------------------------------------------------------------------
// Concentric spheres

inline constexpr double kInnerRadius = 1.0;
inline constexpr double kOuterRadius = 1.3;
inline constexpr double kSpheresThreshold = 1.15;

inline Task concentric_spheres_task(std::size_t d) {
  if (d < 2) throw std::invalid_argument("spheres task: d >= 2");
  Task t;
  t.family = TaskFamily::spheres;
  t.name = "spheres";
  t.dim = d;
  t.sample = [d](Rng& rng) {
    const bool inner = uniform01(rng) < 0.5;
    const Point u = uniform_direction(d, rng);
    return LabeledSample{scaled(u, inner ? kInnerRadius : kOuterRadius),
                         inner ? Label::negative : Label::positive};
  };
  t.ground_truth = [](const Point& x) {
    return norm(x.coords()) <= kSpheresThreshold ? Label::negative
                                                 : Label::positive;
  };
  t.separation = [](double eps) {
    return eps < kOuterRadius - kInnerRadius ? 0.0 : 0.5;
  };
  t.support.manifold_dim = static_cast<int>(d) - 1;
  t.support.curvature = 1.0;
  return t;
}

// ---------------------------------------------------------------------------
// Intersecting circles: C- centered at 0, C+ centered at e1, unit radius,
// embedded in the first two coordinates.

namespace detail {
inline double planar_radius(const Point& x, double cx) {
  return std::hypot(x[0] - cx, x[1]);
}
}  // namespace detail

/// Mass that must be deleted from the circles task so the classes are
/// eps-separated, restricted to removals symmetric about each crossing.
/// C- keeps points whose offset from the crossing is >= a; a point q of C+
/// survives iff its eps-neighbourhood on C- lies inside the removed arc.
/// Valid for eps <= 1/4; larger eps returns the trivial bound 1/2.
inline double circles_separation(double eps, std::size_t resolution = 100000) {
  if (eps <= 0.0) return 0.0;
  if (eps > 0.25) return 0.5;
  using std::numbers::pi;
  const double cross_minus = pi / 3.0;       // crossing angle seen from 0
  const double cross_plus = 2.0 * pi / 3.0;  // seen from e1
  const double span = std::min(4.0 * eps, pi / 3.0);
  struct Q {
    double need;  // removal half-width on C- needed for q to survive
    double off;   // |offset| of q on C+
  };
  std::vector<Q> qs;
  qs.reserve(resolution);
  for (std::size_t i = 0; i < resolution; ++i) {
    const double phi =
        -span + 2.0 * span * (static_cast<double>(i) + 0.5) / static_cast<double>(resolution);
    const double qx = 1.0 + std::cos(cross_plus + phi);
    const double qy = std::sin(cross_plus + phi);
    const double rho = std::hypot(qx, qy);
    if (std::abs(rho - 1.0) >= eps) continue;
    const double w = std::acos(std::clamp((rho * rho + 1.0 - eps * eps) / (2.0 * rho), -1.0, 1.0));
    const double psi = std::atan2(qy, qx);
    qs.push_back({std::abs(psi - cross_minus) + w, std::abs(phi)});
  }
  if (qs.empty()) return 0.0;
  std::sort(qs.begin(), qs.end(), [](const Q& a, const Q& b) { return a.need > b.need; });
  // Removing half-width a on C- forces removal of every q with need >= a.
  double best = qs.front().need;  // a above every need, nothing on C+
  double prefix = 0.0;
  for (std::size_t i = 0; i < qs.size(); ++i) {
    prefix = std::max(prefix, qs[i].off);
    const double a = (i + 1 < qs.size()) ? qs[i + 1].need : 0.0;
    best = std::min(best, a + prefix);
  }
  // Two crossings, two arcs per crossing; an angle theta of one circle has
  // mass theta / (4 pi).
  return std::min(0.5, best / pi);
}

inline Label circles_truth(const Point& x) {
  const double dm = std::abs(detail::planar_radius(x, 0.0) - 1.0);
  const double dp = std::abs(detail::planar_radius(x, 1.0) - 1.0);
  return dm <= dp ? Label::negative : Label::positive;
}

inline Task intersecting_circles_task(std::size_t d) {
  if (d < 2) throw std::invalid_argument("circles task: d >= 2");
  Task t;
  t.family = TaskFamily::circles;
  t.name = "circles";
  t.dim = d;
  t.sample = [d](Rng& rng) {
    const bool minus = uniform01(rng) < 0.5;
    const double th = 2.0 * std::numbers::pi * uniform01(rng);
    Point x(d);
    x[0] = (minus ? 0.0 : 1.0) + std::cos(th);
    x[1] = std::sin(th);
    return LabeledSample{x, minus ? Label::negative : Label::positive};
  };
  t.ground_truth = circles_truth;
  t.separation = [](double eps) { return circles_separation(eps); };
  t.support.manifold_dim = 1;
  t.support.curvature = 1.0;
  return t;
}

// ---------------------------------------------------------------------------
// Two discs of radius 1 centered at (-2,0) and (2,0).

inline double disc_segment_area(double c) {
  // area of {u > c} inside the unit disc
  c = std::clamp(c, -1.0, 1.0);
  return std::acos(c) - c * std::sqrt(1.0 - c * c);
}

inline Task two_discs_task() {
  Task t;
  t.family = TaskFamily::discs;
  t.name = "discs";
  t.dim = 2;
  t.sample = [](Rng& rng) {
    const bool left = uniform01(rng) < 0.5;
    const Point c{left ? -2.0 : 2.0, 0.0};
    return LabeledSample{uniform_in_ball(c, 1.0, rng),
                         left ? Label::negative : Label::positive};
  };
  t.ground_truth = [](const Point& x) {
    return x[0] < 0.0 ? Label::negative : Label::positive;
  };
  // Exact 0 below the gap; above it, the mass of the right-disc segment
  // within eps of the left disc, an upper bound.
  t.separation = [](double eps) {
    if (eps < 2.0) return 0.0;
    const double c = eps - 3.0;  // cut x1 < -1 + eps in right-disc coords
    return 0.5 * (std::numbers::pi - disc_segment_area(c)) / std::numbers::pi;
  };
  t.support.manifold_dim = 2;
  t.support.curvature = 0.0;
  return t;
}

/// -1 exactly on the left disc, +1 elsewhere; equals the ground truth on the
/// support.
inline std::function<Label(const Point&)> discs_reference_classifier() {
  return [](const Point& x) {
    return std::hypot(x[0] + 2.0, x[1]) <= 1.0 ? Label::negative : Label::positive;
  };
}

// ---------------------------------------------------------------------------
// Hard distribution for Gaussian smoothing.

inline constexpr std::size_t kPackingTrialCap = 1000000;

inline Task hard_distribution_task(std::size_t d, double sigma, std::uint64_t seed,
                                   std::size_t trial_cap = kPackingTrialCap) {
  if (d < 10) throw std::invalid_argument("hard distribution: d >= 10");
  if (!(sigma > 0)) throw std::invalid_argument("hard distribution: sigma > 0");
  auto info = std::make_shared<HardDistributionInfo>();
  info->sigma = sigma;
  info->scale = std::sqrt(static_cast<double>(d) * sigma / 10.0);
  info->blob_radius = 0.01 * info->scale;
  info->center_weight = std::exp(0.108 * static_cast<double>(d));
  const double target = std::floor(std::exp(0.118 * static_cast<double>(d)));
  info->target_size = static_cast<std::size_t>(std::min(target, double(trial_cap)));
  const double min_sep2 = 1.44 * info->scale * info->scale;
  Rng rng(seed);
  std::size_t trials = 0;
  while (info->packing.size() < info->target_size && trials < trial_cap) {
    ++trials;
    const Point p = scaled(uniform_direction(d, rng), info->scale);
    bool ok = true;
    for (const Point& q : info->packing)
      if (squared_distance(p.coords(), q.coords()) < min_sep2) {
        ok = false;
        break;
      }
    if (ok) info->packing.push_back(p);
  }
  info->rejection_trials = trials;
  if (info->packing.size() < 2)
    throw InfeasibleError("hard distribution: packing reached " +
                          std::to_string(info->packing.size()) + " points");
  info->far_point = Point(d);
  info->far_point[0] = 100.0 * info->scale;

  Task t;
  t.family = TaskFamily::hard;
  t.name = "hard";
  t.dim = d;
  t.hard = info;
  t.sample = [info, d](Rng& rng) {
    if (uniform01(rng) < 0.5) return LabeledSample{info->far_point, Label::negative};
    const double n = static_cast<double>(info->packing.size());
    const double u = uniform01(rng) * (info->center_weight + n);
    Point c(d);
    if (u >= info->center_weight) {
      auto k = static_cast<std::size_t>(u - info->center_weight);
      c = info->packing[std::min(k, info->packing.size() - 1)];
    }
    return LabeledSample{uniform_in_ball(c, info->blob_radius, rng), Label::positive};
  };
  t.ground_truth = [info](const Point& x) {
    return squared_distance(x.coords(), info->far_point.coords()) <
                   norm(x.coords()) * norm(x.coords())
               ? Label::negative
               : Label::positive;
  };
  t.separation = [info](double eps) {
    const double gap = norm(info->far_point.coords()) - info->scale - info->blob_radius;
    return eps < gap ? 0.0 : 0.5;
  };
  return t;
}

/// Ground truth except on B_{0.01 scale}(0), where it answers -1.
inline BlackBoxClassifier hard_distribution_base_classifier(const Task& task) {
  if (!task.hard) throw std::invalid_argument("not a hard-distribution task");
  auto info = task.hard;
  auto h = task.ground_truth;
  return BlackBoxClassifier([info, h](const Point& x) {
    if (norm(x.coords()) < info->blob_radius) return Label::negative;
    return h(x);
  });
}

// ---------------------------------------------------------------------------
// Planted errors

/// Cap {x1/|x| >= c} holding a fraction `frac` of the uniform measure on
/// S^{d-1}; x1 is distributed as 2B - 1 with B ~ Beta((d-1)/2, (d-1)/2).
inline double cap_threshold(std::size_t d, double frac) {
  if (frac <= 0.0) return 1.0 + 1e-9;
  const double a = (static_cast<double>(d) - 1.0) / 2.0;
  return 2.0 * boost::math::ibeta_inv(a, a, 1.0 - frac) - 1.0;
}

struct PlantedClassifier {
  BlackBoxClassifier f;
  double delta = 0.0;
  std::function<bool(const Point&)> in_region;
  std::string region;
};

inline PlantedClassifier plant_error_classifier(const Task& task, double delta) {
  if (!(delta >= 0.0 && delta < 0.5))
    throw std::invalid_argument("plant_error_classifier: 0 <= delta < 1/2");
  std::function<bool(const Point&)> region;
  std::string desc;
  switch (task.family) {
    case TaskFamily::spheres: {
      const double c = cap_threshold(task.dim, delta);
      region = [c, delta](const Point& x) {
        return delta > 0 && x[0] >= c * norm(x.coords());
      };
      desc = "cap x1/|x| >= " + std::to_string(c) + " on both spheres";
      break;
    }
    case TaskFamily::circles: {
      const double half = std::numbers::pi * delta;
      region = [half](const Point& x) {
        // arc around (-1,0) on C- and around (2,0) on C+
        if (circles_truth(x) == Label::negative) {
          const double a = std::atan2(x[1], x[0]);
          return std::numbers::pi - std::abs(a) < half;
        }
        return std::abs(std::atan2(x[1], x[0] - 1.0)) < half;
      };
      desc = "arcs of angle 2*pi*delta at (-1,0) and (2,0)";
      break;
    }
    case TaskFamily::discs: {
      const double r = std::sqrt(delta);
      region = [r](const Point& x) {
        const double cx = x[0] < 0 ? -2.0 : 2.0;
        return std::hypot(x[0] - cx, x[1]) < r;
      };
      desc = "sub-discs of radius sqrt(delta) at both disc centers";
      break;
    }
    case TaskFamily::hard:
      throw std::invalid_argument("plant_error_classifier: unsupported family");
  }
  auto h = task.family == TaskFamily::discs ? discs_reference_classifier()
                                            : task.ground_truth;
  BlackBoxClassifier f([h, region](const Point& x) {
    const Label y = h(x);
    return region(x) ? flip(y) : y;
  });
  return {f, delta, region, desc};
}

// ---------------------------------------------------------------------------
// Robust classifiers with analytic margins

inline SignedDistanceClassifier radial_threshold_classifier(double tau) {
  return SignedDistanceClassifier(
      [tau](const Point& x) { return norm(x.coords()) - tau; },
      [tau](const Point& x) {
        const double n = norm(x.coords());
        Point u = n > 0 ? scaled(x, 1.0 / n) : Point(x.dim(), 0.0);
        if (n == 0) u[0] = 1.0;
        return n > tau ? scaled(u, -1.0) : u;
      });
}

inline SignedDistanceClassifier midline_classifier() {
  return SignedDistanceClassifier([](const Point& x) { return x[0]; },
                                  [](const Point& x) {
                                    Point u(x.dim());
                                    u[0] = x[0] >= 0 ? -1.0 : 1.0;
                                    return u;
                                  });
}

/// Classifier attaining AR(f, eps) = S(2 eps) where the minimizing
/// separator is empty.
inline SignedDistanceClassifier optimal_robust_classifier(const Task& task,
                                                          double eps) {
  if (task.family == TaskFamily::spheres &&
      2 * eps < kOuterRadius - kInnerRadius)
    return radial_threshold_classifier(kSpheresThreshold);
  if (task.family == TaskFamily::discs && 2 * eps < 2.0)
    return midline_classifier();
  throw std::invalid_argument("optimal_robust_classifier: no analytic separator");
}

}  // namespace padsmooth
