#pragma once

// Basic vocabulary shared by every module: points, labels, errors and
// seeded randomness.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace padsmooth {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Raised when a requested construction cannot be achieved within its budget
/// (e.g. a packing that never reaches two points).
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// A point of R^d with finite coordinates.
class Point {
 public:
  Point() = default;
  explicit Point(std::size_t dim, double fill = 0.0) : coords_(dim, fill) {}
  explicit Point(std::vector<double> coords) : coords_(std::move(coords)) {}
  Point(std::initializer_list<double> init) : coords_(init) {}

  std::size_t dim() const { return coords_.size(); }
  double operator[](std::size_t i) const { return coords_[i]; }
  double& operator[](std::size_t i) { return coords_[i]; }

  std::span<const double> coords() const { return coords_; }
  std::span<double> coords() { return coords_; }
  const std::vector<double>& vec() const { return coords_; }

  auto begin() const { return coords_.begin(); }
  auto end() const { return coords_.end(); }
  auto begin() { return coords_.begin(); }
  auto end() { return coords_.end(); }

  bool is_finite() const {
    return std::all_of(coords_.begin(), coords_.end(),
                       [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const Point&, const Point&) = default;

 private:
  std::vector<double> coords_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// a + scale * b, dimensions assumed equal.
inline Point add_scaled(const Point& a, const Point& b, double scale) {
  Point out = a;
  for (std::size_t i = 0; i < out.dim(); ++i) out[i] += scale * b[i];
  return out;
}

inline Point scaled(const Point& a, double scale) {
  Point out = a;
  for (auto& v : out) v *= scale;
  return out;
}

enum class Label : int { negative = -1, positive = 1 };

constexpr int to_int(Label y) { return static_cast<int>(y); }
constexpr Label flip(Label y) {
  return y == Label::positive ? Label::negative : Label::positive;
}
/// sgn with the tie sgn(0) = +1.
constexpr Label sign_label(double v) {
  return v >= 0.0 ? Label::positive : Label::negative;
}

struct LabeledSample {
  Point x;
  Label y = Label::positive;
};

// ---------------------------------------------------------------------------
// Randomness. Every stream descends from a root seed: child seeds are derived
// by hashing (parent, tag, index) with splitmix64, so adding streams never
// perturbs existing ones.

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag,
                                    std::uint64_t index = 0) {
  return splitmix64(splitmix64(parent ^ fnv1a(tag)) + index);
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

/// Draws a fresh 64-bit seed from an existing stream.
inline std::uint64_t next_seed(Rng& rng) { return rng(); }

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline Point gaussian_point(std::size_t dim, Rng& rng, double sigma = 1.0) {
  std::normal_distribution<double> normal(0.0, sigma);
  Point p(dim);
  for (auto& v : p) v = normal(rng);
  return p;
}

inline Point uniform_direction(std::size_t dim, Rng& rng) {
  for (;;) {
    Point p = gaussian_point(dim, rng);
    const double n = norm(p.coords());
    if (n > 1e-300) return scaled(p, 1.0 / n);
  }
}

inline Point uniform_in_ball(const Point& center, double radius, Rng& rng) {
  const std::size_t d = center.dim();
  const Point dir = uniform_direction(d, rng);
  const double r =
      radius * std::pow(uniform01(rng), 1.0 / static_cast<double>(d));
  return add_scaled(center, dir, r);
}

/// Stable hash of a point's bit pattern, used to derandomize per-query
/// Monte-Carlo draws so classifiers stay deterministic.
inline std::uint64_t hash_point(const Point& x, std::uint64_t seed) {
  std::uint64_t h = splitmix64(seed);
  for (double v : x) {
    std::uint64_t bits = 0;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(v));
    h = splitmix64(h ^ bits);
  }
  return h;
}

}  // namespace padsmooth
