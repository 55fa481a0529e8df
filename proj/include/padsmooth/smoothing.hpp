#pragma once

// Partition smoothing g(x) = sgn E[f(Z) | Z in cell(x)] with three
// estimators (task draws, unlabeled pool, uniform in-cell sampling), plus the
// Gaussian smoothing baselines.

#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "padsmooth/core.hpp"
#include "padsmooth/geometry.hpp"
#include "padsmooth/partitions.hpp"
#include "padsmooth/tasks.hpp"

namespace padsmooth {

struct CellEstimate {
  CellId cell;
  std::size_t votes_pos = 0;
  std::size_t votes_neg = 0;

  std::size_t votes() const { return votes_pos + votes_neg; }
  double mean() const {
    const auto n = votes();
    return n ? (static_cast<double>(votes_pos) - static_cast<double>(votes_neg)) /
                   static_cast<double>(n)
             : 0.0;
  }
  Label label() const { return sign_label(mean()); }
  void add(Label y) { (y == Label::positive ? votes_pos : votes_neg) += 1; }
};

struct Provenance {
  std::string scheme;  // exact | A | B
  std::size_t draws = 0;
  std::size_t per_cell = 0;
  std::size_t s = 0;
  std::size_t k = 0;
  std::size_t flagged_walks = 0;
};

/// Cell-constant classifier. Cells without votes answer f at the cell's
/// representative point, which keeps g constant on every cell.
class SmoothedClassifier {
 public:
  SmoothedClassifier(std::shared_ptr<const Partition> part, BlackBoxClassifier f)
      : part_(std::move(part)), f_(std::move(f)) {}

  Label operator()(const Point& x) const { return label_of(cell_of(*part_, x)); }

  Label label_of(const CellId& c) const {
    auto it = table_.find(c);
    if (it != table_.end() && it->second.votes()) return it->second.label();
    return f_(representative(*part_, c));
  }

  PaddingCertificate certify(const Point& x, double t) const {
    return certificate(*part_, x, t);
  }
  std::pair<Point, double> attack_direction(const Point& x) const {
    return boundary_direction(*part_, x);
  }

  const Partition& partition() const { return *part_; }
  std::shared_ptr<const Partition> partition_ptr() const { return part_; }
  const BlackBoxClassifier& base() const { return f_; }

  std::map<CellId, CellEstimate>& table() { return table_; }
  const std::map<CellId, CellEstimate>& table() const { return table_; }
  std::set<CellId>& flagged() { return flagged_; }
  const std::set<CellId>& flagged() const { return flagged_; }
  Provenance& provenance() { return prov_; }
  const Provenance& provenance() const { return prov_; }

  void vote(const CellId& c, Label y) {
    auto [it, fresh] = table_.try_emplace(c);
    if (fresh) it->second.cell = c;
    it->second.add(y);
  }

 private:
  std::shared_ptr<const Partition> part_;
  BlackBoxClassifier f_;
  std::map<CellId, CellEstimate> table_;
  std::set<CellId> flagged_;
  Provenance prov_;
};

inline nlohmann::json to_json(const SmoothedClassifier& g) {
  nlohmann::json j;
  j["fallback"] = "f_at_representative";
  j["partition_family"] = family_name(g.partition());
  j["partition_seed"] = std::visit([](const auto& p) { return p.seed; }, g.partition());
  const auto& pv = g.provenance();
  j["provenance"] = {{"scheme", pv.scheme}, {"draws", pv.draws},
                     {"per_cell", pv.per_cell}, {"s", pv.s},
                     {"k", pv.k}, {"flagged_walks", pv.flagged_walks}};
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& [c, e] : g.table())
    cells.push_back({{"cell", c.index}, {"pos", e.votes_pos}, {"neg", e.votes_neg}});
  j["cells"] = std::move(cells);
  nlohmann::json fl = nlohmann::json::array();
  for (const auto& c : g.flagged()) fl.push_back(c.index);
  j["flagged"] = std::move(fl);
  return j;
}

inline SmoothedClassifier smoothed_from_json(const nlohmann::json& j,
                                             std::shared_ptr<const Partition> part,
                                             BlackBoxClassifier f) {
  SmoothedClassifier g(part, std::move(f));
  const CellKind kind =
      std::holds_alternative<CubePartition>(*part) ? CellKind::cube : CellKind::ball;
  for (const auto& c : j.at("cells")) {
    CellId id{kind, c.at("cell").get<std::vector<std::int64_t>>()};
    CellEstimate e{id, c.at("pos").get<std::size_t>(), c.at("neg").get<std::size_t>()};
    g.table().emplace(id, e);
  }
  for (const auto& c : j.at("flagged"))
    g.flagged().insert({kind, c.get<std::vector<std::int64_t>>()});
  const auto& pv = j.at("provenance");
  auto& p = g.provenance();
  p.scheme = pv.at("scheme").get<std::string>();
  p.draws = pv.at("draws").get<std::size_t>();
  p.per_cell = pv.at("per_cell").get<std::size_t>();
  p.s = pv.at("s").get<std::size_t>();
  p.k = pv.at("k").get<std::size_t>();
  p.flagged_walks = pv.at("flagged_walks").get<std::size_t>();
  return g;
}

// ---------------------------------------------------------------------------
// Reference estimator

inline constexpr std::size_t kDefaultDrawCap = 1000000;

/// Draws task samples until every cell touched by `queries` holds
/// `per_cell` votes or `draw_cap` is reached. With no queries every drawn
/// cell is a target. Short cells are flagged.
inline SmoothedClassifier smooth_exact(const BlackBoxClassifier& f,
                                       std::shared_ptr<const Partition> part,
                                       const Task& task,
                                       const std::vector<Point>& queries,
                                       std::size_t per_cell, Rng& rng,
                                       std::size_t draw_cap = kDefaultDrawCap) {
  if (per_cell < 1) throw std::invalid_argument("smooth_exact: per_cell >= 1");
  SmoothedClassifier g(part, f);
  std::set<CellId> targets;
  for (const Point& q : queries) targets.insert(cell_of(*part, q));
  std::size_t short_count = targets.size();
  std::size_t draws = 0;
  const std::size_t batch = 1024;
  while (draws < draw_cap) {
    for (std::size_t i = 0; i < batch && draws < draw_cap; ++i, ++draws) {
      const Point z = task.sample_point(rng);
      const CellId c = cell_of(*part, z);
      g.vote(c, f(z));
      if (targets.count(c) && g.table()[c].votes() == per_cell) --short_count;
    }
    if (!targets.empty() && short_count == 0) break;
  }
  for (const CellId& c : targets) {
    auto it = g.table().find(c);
    if (it == g.table().end() || it->second.votes() < per_cell) g.flagged().insert(c);
  }
  if (targets.empty())
    for (const auto& [c, e] : g.table())
      if (e.votes() < per_cell) g.flagged().insert(c);
  g.provenance().scheme = "exact";
  g.provenance().draws = draws;
  g.provenance().per_cell = per_cell;
  return g;
}

// ---------------------------------------------------------------------------
// Scheme A: unlabeled pool

/// Budget Q/R log(Q/R) + (Q log Q / R) log log(Q/R), logs base 2, hidden
/// constants 1, rounded up. The log log term is clamped at 0.
inline std::size_t scheme_a_sample_size(std::size_t Q, double risk_f) {
  if (Q < 1) throw std::invalid_argument("scheme_a_sample_size: Q >= 1");
  if (!(risk_f > 0.0 && risk_f < 1.0))
    throw std::invalid_argument("scheme_a_sample_size: 0 < risk_f < 1");
  const double q = static_cast<double>(Q);
  const double ratio = q / risk_f;
  const double l = std::log2(ratio);
  const double ll = l > 1.0 ? std::log2(l) : 0.0;
  const double v = ratio * l + (q * std::log2(q) / risk_f) * ll;
  return static_cast<std::size_t>(std::ceil(std::max(v, 1.0)));
}

inline constexpr double kRiskFloor = 1e-3;

inline SmoothedClassifier scheme_a_estimate(const BlackBoxClassifier& f,
                                            std::shared_ptr<const Partition> part,
                                            const std::vector<Point>& unlabeled) {
  if (unlabeled.empty()) throw std::invalid_argument("scheme_a_estimate: empty pool");
  SmoothedClassifier g(part, f);
  for (const Point& z : unlabeled) g.vote(cell_of(*part, z), f(z));
  g.provenance().scheme = "A";
  g.provenance().draws = unlabeled.size();
  return g;
}

// ---------------------------------------------------------------------------
// Hit-and-run

struct WalkResult {
  Point x;
  bool flagged = false;
};

using Membership = std::function<bool(const Point&)>;
/// Feasible parameter interval [lo, hi] of x + theta v inside the enclosing ball.
using ChordSolver = std::function<std::pair<double, double>(const Point&, const Point&)>;

inline constexpr int kChordRetries = 64;

inline WalkResult hit_and_run(const Membership& member, const ChordSolver& chord,
                              Point start, std::size_t k, Rng& rng) {
  if (k < 1) throw std::invalid_argument("hit_and_run: k >= 1");
  if (!member(start)) throw std::invalid_argument("hit_and_run: start outside cell");
  WalkResult out{std::move(start), false};
  for (std::size_t step = 0; step < k; ++step) {
    const Point v = uniform_direction(out.x.dim(), rng);
    const auto [lo, hi] = chord(out.x, v);
    bool moved = false;
    for (int r = 0; r < kChordRetries; ++r) {
      const double th = lo + (hi - lo) * uniform01(rng);
      Point y = add_scaled(out.x, v, th);
      if (member(y)) {
        out.x = std::move(y);
        moved = true;
        break;
      }
    }
    if (!moved) out.flagged = true;
  }
  return out;
}

inline ChordSolver ball_chord(Point center, double radius) {
  return [center = std::move(center), radius](const Point& x, const Point& v) {
    double b = 0.0, c = -radius * radius;
    for (std::size_t i = 0; i < x.dim(); ++i) {
      const double w = x[i] - center[i];
      b += v[i] * w;
      c += w * w;
    }
    const double disc = std::sqrt(std::max(0.0, b * b - c));
    return std::pair{-b - disc, -b + disc};
  };
}

/// One carved cell: B_R(u) minus the balls of earlier centers that reach it.
class BallCell {
 public:
  BallCell(const BallCarvingPartition& p, std::size_t net_index) : radius_(p.radius) {
    std::size_t pos = 0;
    while (p.order[pos] != net_index) ++pos;
    center_ = p.net.centers[net_index];
    const double reach = 2.0 * p.radius;
    for (std::size_t j = 0; j < pos; ++j) {
      auto w = p.center_at(j);
      if (squared_distance(w, center_.coords()) < reach * reach)
        blockers_.emplace_back(std::vector<double>(w.begin(), w.end()));
    }
  }

  bool contains(const Point& y) const {
    const double r2 = radius_ * radius_;
    if (squared_distance(y.coords(), center_.coords()) > r2) return false;
    for (const Point& w : blockers_)
      if (squared_distance(y.coords(), w.coords()) <= r2) return false;
    return true;
  }
  const Point& center() const { return center_; }
  double radius() const { return radius_; }
  ChordSolver chord() const { return ball_chord(center_, radius_); }

 private:
  Point center_;
  double radius_;
  std::vector<Point> blockers_;
};

inline Point uniform_in_cube_cell(const CubePartition& p, const CellId& c, Rng& rng) {
  Point x(p.dim);
  for (std::size_t i = 0; i < p.dim; ++i)
    x[i] = p.shift[i] + (static_cast<double>(c.index[i]) + uniform01(rng)) * p.width;
  return x;
}

// ---------------------------------------------------------------------------
// Scheme B: uniform in-cell sampling

inline constexpr std::size_t kStartRejections = 4096;

/// s votes per queried cell; cube cells are sampled exactly, carved cells by
/// a hit-and-run chain with k steps between votes, started at a query point
/// of the cell (or a rejection-sampled point of it).
inline SmoothedClassifier scheme_b_estimate(const BlackBoxClassifier& f,
                                            std::shared_ptr<const Partition> part,
                                            const std::vector<Point>& queries,
                                            std::size_t s, std::size_t k, Rng& rng) {
  if (s < 1 || k < 1) throw std::invalid_argument("scheme_b_estimate: s, k >= 1");
  SmoothedClassifier g(part, f);
  std::map<CellId, Point> starts;
  for (const Point& q : queries) {
    const CellLookup lk = lookup(*part, q);
    auto it = starts.find(lk.cell);
    if (it == starts.end()) starts.emplace(lk.cell, q);
    else if (!lk.fallback) it->second = q;
  }
  std::size_t flagged_walks = 0;
  for (const auto& [cell, q0] : starts) {
    if (const auto* cube = std::get_if<CubePartition>(part.get())) {
      for (std::size_t i = 0; i < s; ++i) g.vote(cell, f(uniform_in_cube_cell(*cube, cell, rng)));
      continue;
    }
    const auto& ball = std::get<BallCarvingPartition>(*part);
    const BallCell bc(ball, static_cast<std::size_t>(cell.index[0]));
    std::optional<Point> x;
    if (bc.contains(q0)) x = q0;
    else if (bc.contains(bc.center())) x = bc.center();
    for (std::size_t r = 0; !x && r < kStartRejections; ++r) {
      Point y = uniform_in_ball(bc.center(), bc.radius(), rng);
      if (bc.contains(y)) x = y;
    }
    if (!x) {
      g.flagged().insert(cell);
      continue;
    }
    const auto member = [&bc](const Point& y) { return bc.contains(y); };
    const ChordSolver chord = bc.chord();
    bool walk_flag = false;
    for (std::size_t i = 0; i < s; ++i) {
      WalkResult w = hit_and_run(member, chord, *x, k, rng);
      walk_flag |= w.flagged;
      x = std::move(w.x);
      g.vote(cell, f(*x));
    }
    if (walk_flag) {
      ++flagged_walks;
      g.flagged().insert(cell);
    }
  }
  g.provenance().scheme = "B";
  g.provenance().s = s;
  g.provenance().k = k;
  g.provenance().flagged_walks = flagged_walks;
  return g;
}

// ---------------------------------------------------------------------------
// Gaussian baselines

/// Majority of f(x + N(0, sigma^2 I)) over n draws; the draws for x are
/// seeded from x itself so the classifier is deterministic.
class GaussianSmoothedClassifier {
 public:
  GaussianSmoothedClassifier(BlackBoxClassifier f, double sigma, std::size_t n,
                             std::uint64_t seed)
      : f_(std::move(f)), sigma_(sigma), n_(n), seed_(seed) {
    if (n < 1) throw std::invalid_argument("gaussian smoothing: n >= 1");
  }

  Label operator()(const Point& x) const {
    Rng rng(hash_point(x, seed_));
    std::normal_distribution<double> normal(0.0, sigma_);
    long votes = 0;
    Point y(x.dim());
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < x.dim(); ++j) y[j] = x[j] + normal(rng);
      votes += to_int(f_(y));
    }
    return votes >= 0 ? Label::positive : Label::negative;
  }

 private:
  BlackBoxClassifier f_;
  double sigma_;
  std::size_t n_;
  std::uint64_t seed_;
};

/// sgn of sum_i f(Z_i) exp(-|x - Z_i|^2 / (2 sigma^2)) over a task pool,
/// evaluated in log space.
class ConditionedGaussianClassifier {
 public:
  ConditionedGaussianClassifier(BlackBoxClassifier f, double sigma,
                                const Task& task, std::size_t n, Rng& rng)
      : f_(std::move(f)), sigma_(sigma) {
    if (n < 1) throw std::invalid_argument("conditioned smoothing: n >= 1");
    pool_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      Point z = task.sample_point(rng);
      votes_.push_back(to_int(f_(z)));
      pool_.push_back(std::move(z));
    }
  }

  Label operator()(const Point& x) const { return evaluate(x).first; }

  /// Label and whether every weight underflowed (fallback to f).
  std::pair<Label, bool> evaluate(const Point& x) const {
    const double inv = 1.0 / (2.0 * sigma_ * sigma_);
    std::vector<double> logw(pool_.size());
    double m = -INFINITY;
    for (std::size_t i = 0; i < pool_.size(); ++i) {
      logw[i] = -squared_distance(x.coords(), pool_[i].coords()) * inv;
      m = std::max(m, logw[i]);
    }
    if (m < kUnderflow) return {f_(x), true};
    double pos = 0.0, neg = 0.0;
    for (std::size_t i = 0; i < pool_.size(); ++i)
      (votes_[i] > 0 ? pos : neg) += std::exp(logw[i] - m);
    return {pos >= neg ? Label::positive : Label::negative, false};
  }

  static constexpr double kUnderflow = -745.0;

 private:
  BlackBoxClassifier f_;
  double sigma_;
  std::vector<Point> pool_;
  std::vector<int> votes_;
};

}  // namespace padsmooth
