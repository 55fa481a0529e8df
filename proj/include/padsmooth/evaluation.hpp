#pragma once

// Risk and adversarial-risk estimators, the competitive-ratio experiment and
// the oblivious-adversary game.

#include <cmath>
#include <concepts>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "padsmooth/core.hpp"
#include "padsmooth/partitions.hpp"
#include "padsmooth/smoothing.hpp"
#include "padsmooth/stats.hpp"
#include "padsmooth/tasks.hpp"

namespace padsmooth {

template <class G>
concept Classifier = requires(const G& g, const Point& x) {
  { g(x) } -> std::convertible_to<Label>;
};

template <class G>
concept CertifiedClassifier = Classifier<G> && requires(const G& g, const Point& x) {
  { g.certify(x, 0.0) } -> std::same_as<PaddingCertificate>;
  { g.attack_direction(x) } -> std::same_as<std::pair<Point, double>>;
};

struct RiskEstimate {
  Proportion errors;
  double value() const { return errors.value(); }
  Interval ci() const { return errors.wilson(); }
  double sigma() const { return errors.sigma(); }
};

template <Classifier G>
RiskEstimate estimate_risk(const G& g, const Task& task, std::size_t n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("estimate_risk: n >= 1");
  RiskEstimate r;
  for (std::size_t i = 0; i < n; ++i) {
    const LabeledSample s = task.sample(rng);
    if (g(s.x) != s.y) ++r.errors.successes;
    ++r.errors.trials;
  }
  return r;
}

template <Classifier G>
RiskEstimate risk_on(const G& g, const std::vector<LabeledSample>& test) {
  RiskEstimate r;
  for (const auto& s : test) {
    if (g(s.x) != s.y) ++r.errors.successes;
    ++r.errors.trials;
  }
  return r;
}

struct RobustnessReport {
  double epsilon = 0.0;
  Proportion risk;
  Proportion certified;  ///< Contained at radius epsilon and correct
  Proportion ar_lower;
  Proportion ar_upper;
  std::size_t soundness_violations = 0;
  bool statistical_only = false;
};

inline constexpr double kAttackShrink = 0.999;

namespace detail {
template <Classifier G>
bool attack(const G& g, const Point& x, Label y, double eps, std::size_t trials,
            const std::optional<std::pair<Point, double>>& guided, Rng& rng) {
  if (guided) {
    const auto& [dir, dist] = *guided;
    for (double step : {dist * (1.0 + 1e-9) + 1e-12, kAttackShrink * eps}) {
      if (step >= eps || step <= 0) continue;
      if (g(add_scaled(x, dir, step)) != y) return true;
    }
  }
  for (std::size_t i = 0; i < trials; ++i) {
    const Point v = uniform_direction(x.dim(), rng);
    if (g(add_scaled(x, v, kAttackShrink * eps)) != y) return true;
  }
  return false;
}
}  // namespace detail

/// ar_upper counts errors plus points whose eps-ball is not certified;
/// ar_lower counts errors plus successful attacks. Classifiers without
/// certificates fall back to sampled constancy on the ball, flagged
/// statistical-only.
template <Classifier G>
RobustnessReport estimate_adversarial_risk(const G& g,
                                           const std::vector<LabeledSample>& test,
                                           double eps, std::size_t attack_trials,
                                           Rng& rng) {
  if (test.empty() || attack_trials < 1)
    throw std::invalid_argument("estimate_adversarial_risk: n, attack_trials >= 1");
  RobustnessReport rep;
  rep.epsilon = eps;
  rep.statistical_only = !CertifiedClassifier<G>;
  for (const auto& s : test) {
    const bool wrong = g(s.x) != s.y;
    bool upper = wrong, lower = wrong, certified = false;
    if (eps > 0.0) {
      if constexpr (CertifiedClassifier<G>) {
        const PaddingCertificate cert = g.certify(s.x, eps);
        certified = cert.contained();
        if (!certified) {
          upper = true;
          if (!wrong)
            lower = detail::attack(g, s.x, s.y, eps, attack_trials,
                                   g.attack_direction(s.x), rng);
        } else if (!wrong && detail::attack(g, s.x, s.y, eps, 1, std::nullopt, rng)) {
          ++rep.soundness_violations;
          lower = upper = true;
        }
      } else {
        const Label y0 = g(s.x);
        bool constant = true;
        for (std::size_t i = 0; i < attack_trials && constant; ++i)
          constant = g(uniform_in_ball(s.x, kAttackShrink * eps, rng)) == y0;
        if (!wrong) lower = detail::attack(g, s.x, s.y, eps, attack_trials, std::nullopt, rng);
        upper = wrong || !constant || lower;
        certified = constant && !wrong;
      }
    } else {
      certified = !wrong;
    }
    rep.risk.successes += wrong;
    rep.ar_upper.successes += upper;
    rep.ar_lower.successes += lower;
    rep.certified.successes += certified && !wrong;
    ++rep.risk.trials, ++rep.ar_upper.trials, ++rep.ar_lower.trials, ++rep.certified.trials;
  }
  return rep;
}

template <Classifier G>
RobustnessReport estimate_adversarial_risk(const G& g, const Task& task, double eps,
                                           std::size_t n, std::size_t attack_trials,
                                           Rng& rng) {
  std::vector<LabeledSample> test;
  test.reserve(n);
  for (std::size_t i = 0; i < n; ++i) test.push_back(task.sample(rng));
  return estimate_adversarial_risk(g, test, eps, attack_trials, rng);
}

inline nlohmann::json to_json(const RobustnessReport& r) {
  auto prop = [](const Proportion& p) {
    const Interval ci = p.wilson();
    return nlohmann::json{{"value", p.value()}, {"successes", p.successes},
                          {"trials", p.trials}, {"ci_lo", ci.lo}, {"ci_hi", ci.hi}};
  };
  return {{"epsilon", r.epsilon},
          {"risk", prop(r.risk)},
          {"certified_fraction", prop(r.certified)},
          {"ar_lower", prop(r.ar_lower)},
          {"ar_upper", prop(r.ar_upper)},
          {"soundness_violations", r.soundness_violations},
          {"statistical_only", r.statistical_only}};
}

// ---------------------------------------------------------------------------
// Competitive ratio on concentric spheres

struct CompetitiveRatioResult {
  std::size_t d = 0;
  double delta = 0.0;
  double eta = 0.0;
  double eps_alg = 0.0;
  double eps_opt_bound = 0.0;
  std::optional<double> ratio;  ///< absent when delta = 0
  double reference = 0.0;       ///< log(eta/delta) / (eta - 2 delta)
  double risk_g = 0.0;
  std::size_t bisection_steps = 0;
  std::vector<std::pair<double, double>> ar_curve;
};

/// Solves the cap-growth approximation (delta/2)(1+eps)^d = eta for eps.
inline double eps_opt_bound(std::size_t d, double delta, double eta) {
  return std::pow(2.0 * eta / delta, 1.0 / static_cast<double>(d)) - 1.0;
}

struct CompetitiveOptions {
  double partition_epsilon = 0.29;
  std::size_t n = 100000;
  std::size_t pool = 20000;
  double rel_tol = 0.02;
  std::string family = "cube";
};

/// Largest eps with ar_upper(eps) <= eta for the pipeline g built from the
/// planted-delta classifier on spheres. Certificate margins are computed
/// once; each bisection probe re-evaluates ar_upper from them.
inline CompetitiveRatioResult competitive_ratio_experiment(std::size_t d, double delta,
                                                           double eta, std::uint64_t seed,
                                                           CompetitiveOptions opt = {}) {
  if (!(delta >= 0 && 2 * delta < eta && eta < 0.5))
    throw std::invalid_argument("competitive ratio: need 0 <= 2 delta < eta < 1/2");
  CompetitiveRatioResult out;
  out.d = d, out.delta = delta, out.eta = eta;
  const Task task = concentric_spheres_task(d);
  const PlantedClassifier planted = plant_error_classifier(task, delta);
  Rng rng(derive_seed(seed, "competitive", d));
  std::vector<Point> pool;
  for (std::size_t i = 0; i < opt.pool; ++i) pool.push_back(task.sample_point(rng));
  std::shared_ptr<const Partition> part;
  if (opt.family == "cube") {
    part = std::make_shared<Partition>(
        sample_cube_partition(d, opt.partition_epsilon, derive_seed(seed, "partition", d)));
  } else {
    EpsilonNet net = greedy_net(pool, opt.partition_epsilon / 4.0);
    part = std::make_shared<Partition>(sample_ball_carving(
        std::move(net), opt.partition_epsilon, derive_seed(seed, "partition", d)));
  }
  const SmoothedClassifier g = scheme_a_estimate(planted.f, part, pool);
  std::vector<char> wrong(opt.n);
  std::vector<double> margin(opt.n);
  std::size_t errs = 0;
  for (std::size_t i = 0; i < opt.n; ++i) {
    const LabeledSample s = task.sample(rng);
    wrong[i] = g(s.x) != s.y;
    errs += wrong[i];
    margin[i] = g.certify(s.x, 0.0).margin;
  }
  out.risk_g = static_cast<double>(errs) / static_cast<double>(opt.n);
  auto ar = [&](double eps) {
    std::size_t c = 0;
    for (std::size_t i = 0; i < opt.n; ++i) c += wrong[i] || margin[i] < eps;
    const double v = static_cast<double>(c) / static_cast<double>(opt.n);
    out.ar_curve.emplace_back(eps, v);
    return v;
  };
  if (ar(0.0) > eta) {
    std::ostringstream os;
    os << "competitive ratio: ar_upper(0) = " << out.ar_curve.back().second
       << " exceeds eta";
    throw InfeasibleError(os.str());
  }
  double lo = 0.0, hi = opt.partition_epsilon;
  while (ar(hi) <= eta) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e3) throw InfeasibleError("competitive ratio: no upper bracket");
  }
  while (hi - lo > opt.rel_tol * lo || lo == 0.0) {
    const double mid = lo == 0.0 ? hi / 64.0 : 0.5 * (lo + hi);
    (ar(mid) <= eta ? lo : hi) = mid;
    ++out.bisection_steps;
    if (out.bisection_steps > 200) break;
  }
  out.eps_alg = lo;
  out.eps_opt_bound = delta > 0 ? eps_opt_bound(d, delta, eta) : INFINITY;
  if (delta > 0) {
    out.ratio = out.eps_opt_bound / out.eps_alg;
    out.reference = std::log(eta / delta) / (eta - 2 * delta);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Oblivious adversary game

struct GameHistory {
  std::vector<Point> queries;
  std::vector<Label> answers;
  std::vector<std::size_t> epochs;
};

/// Maps (X, h(X), eps, history, current epoch) to a perturbed query.
using Adversary = std::function<Point(const Point&, Label, double, const GameHistory&,
                                      std::size_t, Rng&)>;

inline Adversary identity_adversary() {
  return [](const Point& x, Label, double, const GameHistory&, std::size_t, Rng&) {
    return x;
  };
}

inline Adversary random_adversary() {
  return [](const Point& x, Label, double eps, const GameHistory&, std::size_t, Rng& rng) {
    return add_scaled(x, uniform_direction(x.dim(), rng), kAttackShrink * eps);
  };
}

/// Moves toward the nearest opposite-label point of a labeled pool, and
/// prefers an earlier query of the current epoch that was answered with the
/// wrong label for x.
inline Adversary boundary_seeking_adversary(std::vector<LabeledSample> reference) {
  auto ref = std::make_shared<std::vector<LabeledSample>>(std::move(reference));
  return [ref](const Point& x, Label y, double eps, const GameHistory& hist,
               std::size_t epoch, Rng&) {
    for (std::size_t i = hist.queries.size(); i-- > 0 && hist.epochs[i] == epoch;) {
      if (hist.answers[i] != y && l2_distance(hist.queries[i], x) < kAttackShrink * eps)
        return hist.queries[i];
    }
    double best = INFINITY;
    const Point* target = nullptr;
    for (const auto& s : *ref) {
      if (s.y == y) continue;
      const double dd = squared_distance(s.x.coords(), x.coords());
      if (dd < best) best = dd, target = &s.x;
    }
    if (!target || best == 0.0) return x;
    const double dist = std::sqrt(best);
    return add_scaled(x, add_scaled(*target, x, -1.0), kAttackShrink * std::min(eps, dist) / dist);
  };
}

struct GameResult {
  Proportion errors;
  std::size_t faults = 0;
  std::size_t refreshes = 0;
};

/// Each round draws X, lets the adversary pick X' in the closed eps-ball and
/// answers with the current g; g is rebuilt from `make_g(seed)` every
/// `refresh_every` rounds with a seed the adversary never sees.
template <class MakeG>
GameResult oblivious_game_simulate(const Task& task, MakeG make_g, double eps,
                                   std::size_t refresh_every, std::size_t rounds,
                                   const Adversary& adversary, std::uint64_t seed) {
  if (rounds < 1 || refresh_every < 1)
    throw std::invalid_argument("oblivious game: rounds, refresh_every >= 1");
  GameResult out;
  GameHistory hist;
  Rng data(derive_seed(seed, "game-data"));
  Rng adv(derive_seed(seed, "game-adversary"));
  std::optional<decltype(make_g(std::uint64_t{0}))> g;
  std::size_t epoch = 0;
  for (std::size_t r = 0; r < rounds; ++r) {
    if (r % refresh_every == 0) {
      epoch = r / refresh_every;
      g.emplace(make_g(derive_seed(seed, "game-partition", epoch)));
      ++out.refreshes;
    }
    const LabeledSample s = task.sample(data);
    const Point xp = adversary(s.x, s.y, eps, hist, epoch, adv);
    if (xp.dim() != s.x.dim() || l2_distance(xp, s.x) > eps * (1 + 1e-12)) {
      ++out.faults;
      continue;
    }
    const Label a = (*g)(xp);
    hist.queries.push_back(xp);
    hist.answers.push_back(a);
    hist.epochs.push_back(epoch);
    out.errors.successes += a != s.y;
    ++out.errors.trials;
  }
  return out;
}

/// Cell labeler for repeated partitions over one unlabeled pool: a query's
/// cell is labeled by majority of f over pool points in that cell, found via
/// a per-center neighbour index. Falls back to f at the cell center.
class PoolCellLabeler {
 public:
  PoolCellLabeler(const EpsilonNet& net, const std::vector<Point>& pool,
                  const BlackBoxClassifier& f, double epsilon)
      : f_(f), pool_(pool) {
    near_.resize(net.size());
    for (std::size_t i = 0; i < pool.size(); ++i) votes_.push_back(to_int(f(pool[i])));
    const double half2 = (epsilon / 2.0) * (epsilon / 2.0);
    for (std::size_t c = 0; c < net.size(); ++c)
      for (std::size_t i = 0; i < pool.size(); ++i)
        if (squared_distance(net.centers[c].coords(), pool[i].coords()) <= half2)
          near_[c].push_back(i);
  }

  /// Smoothed classifier for one partition draw.
  auto classifier(std::shared_ptr<const BallCarvingPartition> part) const {
    return [this, part](const Point& x) {
      const CellLookup lk = lookup(*part, x);
      const auto idx = static_cast<std::size_t>(lk.cell.index[0]);
      const BallCell cell(*part, idx);
      long v = 0;
      std::size_t n = 0;
      for (std::size_t i : near_[idx])
        if (cell.contains(pool_[i])) v += votes_[i], ++n;
      if (!n) return f_(part->net.centers[idx]);
      return v >= 0 ? Label::positive : Label::negative;
    };
  }

 private:
  BlackBoxClassifier f_;
  std::vector<Point> pool_;
  std::vector<int> votes_;
  std::vector<std::vector<std::size_t>> near_;
};

}  // namespace padsmooth
