#include <gtest/gtest.h>

#include <cmath>

#include "padsmooth/evaluation.hpp"

using namespace padsmooth;

namespace {

std::vector<LabeledSample> draw(const Task& t, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<LabeledSample> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(t.sample(rng));
  return out;
}

SmoothedClassifier smoothed_spheres(double delta, double eps, std::uint64_t seed) {
  const Task t = concentric_spheres_task(3);
  const auto planted = plant_error_classifier(t, delta);
  auto part = std::make_shared<const Partition>(sample_cube_partition(3, eps, seed));
  Rng rng(seed + 1);
  return smooth_exact(planted.f, part, t, {}, 20, rng, 100000);
}

}  // namespace

TEST(Risk, CountsErrorsAndInterval) {
  const Task t = concentric_spheres_task(3);
  const auto planted = plant_error_classifier(t, 0.1);
  Rng rng(1);
  const auto r = estimate_risk(planted.f, t, 20000, rng);
  EXPECT_NEAR(r.value(), 0.1, 4 * binomial_sigma(0.1, 20000));
  EXPECT_LE(r.ci().lo, r.value());
  EXPECT_GE(r.ci().hi, r.value());
  const auto test = draw(t, 100, 2);
  EXPECT_EQ(risk_on(t.ground_truth, test).value(), 0.0);
}

TEST(AdversarialRisk, ZeroRadiusEqualsRisk) {
  const Task t = concentric_spheres_task(3);
  const auto test = draw(t, 3000, 3);
  const auto g = smoothed_spheres(0.1, 0.25, 4);
  Rng rng(5);
  for (const auto& rep : {estimate_adversarial_risk(g, test, 0.0, 4, rng),
                          estimate_adversarial_risk(plant_error_classifier(t, 0.1).f, test, 0.0,
                                                    4, rng)}) {
    EXPECT_EQ(rep.ar_lower.successes, rep.risk.successes);
    EXPECT_EQ(rep.ar_upper.successes, rep.risk.successes);
  }
}

TEST(AdversarialRisk, BoundsBracketAndGrow) {
  const Task t = concentric_spheres_task(3);
  const auto test = draw(t, 2000, 6);
  const auto g = smoothed_spheres(0.05, 0.25, 7);
  Rng rng(8);
  std::size_t prev_upper = 0;
  for (double eps : {0.0, 0.01, 0.02, 0.04, 0.08}) {
    const auto rep = estimate_adversarial_risk(g, test, eps, 8, rng);
    EXPECT_LE(rep.ar_lower.successes, rep.ar_upper.successes);
    EXPECT_LE(rep.risk.successes, rep.ar_lower.successes);
    EXPECT_GE(rep.ar_upper.successes, prev_upper);
    EXPECT_EQ(rep.soundness_violations, 0u);
    EXPECT_FALSE(rep.statistical_only);
    EXPECT_EQ(rep.certified.successes + rep.ar_upper.successes, rep.ar_upper.trials);
    prev_upper = rep.ar_upper.successes;
  }
}

TEST(AdversarialRisk, ExactValuesForRadialThreshold) {
  // tau = 1.1: the inner sphere is attackable once eps > 0.1, the outer once
  // eps > 0.2.
  const Task t = concentric_spheres_task(4);
  const auto test = draw(t, 4000, 9);
  const auto g = radial_threshold_classifier(1.1);
  Rng rng(10);
  struct Case {
    double eps, want;
  };
  for (const Case c : {Case{0.05, 0.0}, Case{0.15, 0.5}, Case{0.25, 1.0}}) {
    const auto rep = estimate_adversarial_risk(g, test, c.eps, 4, rng);
    const double tol = 4 * binomial_sigma(0.5, test.size());
    EXPECT_NEAR(rep.ar_lower.value(), c.want, tol) << c.eps;
    EXPECT_NEAR(rep.ar_upper.value(), c.want, tol) << c.eps;
  }
}

TEST(AdversarialRisk, UncertifiedClassifierIsStatisticalOnly) {
  const Task t = concentric_spheres_task(3);
  const auto test = draw(t, 200, 11);
  Rng rng(12);
  const auto rep = estimate_adversarial_risk(t.ground_truth, test, 0.1, 8, rng);
  EXPECT_TRUE(rep.statistical_only);
  EXPECT_EQ(rep.ar_upper.successes, 0u);
  EXPECT_THROW(estimate_adversarial_risk(t.ground_truth, std::vector<LabeledSample>{}, 0.1, 8, rng),
               std::invalid_argument);
}

TEST(AdversarialRisk, AttackFindsPlantedRegionEdge) {
  // Points just outside a planted cap flip under small perturbations.
  const Task t = concentric_spheres_task(3);
  const auto planted = plant_error_classifier(t, 0.2);
  const auto test = draw(t, 4000, 13);
  Rng rng(14);
  const auto rep = estimate_adversarial_risk(planted.f, test, 0.2, 32, rng);
  EXPECT_GT(rep.ar_lower.value(), rep.risk.value());
}

TEST(AdversarialRisk, JsonFields) {
  RobustnessReport r;
  r.epsilon = 0.5;
  r.risk = {3, 10};
  const auto j = to_json(r);
  EXPECT_DOUBLE_EQ(j["risk"]["value"].get<double>(), 0.3);
  EXPECT_EQ(j["epsilon"].get<double>(), 0.5);
}

TEST(CompetitiveRatio, BoundFormula) {
  for (std::size_t d : {10, 20, 40}) {
    const double e = eps_opt_bound(d, 0.01, 0.1);
    EXPECT_NEAR(0.005 * std::pow(1 + e, static_cast<double>(d)), 0.1, 1e-12);
  }
}

TEST(CompetitiveRatio, NoPlantedErrorHasNoRatio) {
  CompetitiveOptions opt;
  opt.n = 5000;
  opt.pool = 5000;
  const auto r = competitive_ratio_experiment(10, 0.0, 0.1, 1, opt);
  EXPECT_FALSE(r.ratio.has_value());
  EXPECT_GT(r.eps_alg, 0.0);
  EXPECT_TRUE(std::isinf(r.eps_opt_bound));
  // ar curve respects eta at eps_alg
  for (auto [e, v] : r.ar_curve)
    if (e <= r.eps_alg) {
      EXPECT_LE(v, 0.1);
    }
}

TEST(CompetitiveRatio, PlantedErrorGivesFiniteRatio) {
  CompetitiveOptions opt;
  opt.n = 20000;
  opt.pool = 20000;
  const auto r = competitive_ratio_experiment(10, 0.01, 0.1, 2, opt);
  ASSERT_TRUE(r.ratio.has_value());
  EXPECT_GT(*r.ratio, 1.0);
  EXPECT_NEAR(r.reference, std::log(10.0) / 0.08, 1e-12);
  EXPECT_LE(r.risk_g, 0.1);
}

TEST(CompetitiveRatio, RejectsBadArguments) {
  EXPECT_THROW(competitive_ratio_experiment(10, 0.1, 0.1, 1), std::invalid_argument);
  EXPECT_THROW(competitive_ratio_experiment(10, 0.01, 0.6, 1), std::invalid_argument);
}

TEST(ObliviousGame, IdentityAdversaryMeasuresRisk) {
  const Task t = concentric_spheres_task(3);
  const auto planted = plant_error_classifier(t, 0.1);
  auto make = [&](std::uint64_t) { return planted.f; };
  const auto res = oblivious_game_simulate(t, make, 0.0, 7, 20000, identity_adversary(), 15);
  EXPECT_EQ(res.faults, 0u);
  EXPECT_EQ(res.refreshes, (20000 + 6) / 7);
  EXPECT_NEAR(res.errors.value(), 0.1, 4 * binomial_sigma(0.1, 20000));
  const auto perfect =
      oblivious_game_simulate(t, [&](std::uint64_t) { return t.ground_truth; }, 0.1, 1, 2000,
                              random_adversary(), 16);
  EXPECT_EQ(perfect.errors.successes, 0u);
}

TEST(ObliviousGame, OutOfBallMovesAreFaults) {
  const Task t = concentric_spheres_task(3);
  Adversary cheat = [](const Point& x, Label, double eps, const GameHistory&, std::size_t,
                       Rng&) {
    Point y = x;
    y[0] += 2 * eps;
    return y;
  };
  const auto res = oblivious_game_simulate(t, [&](std::uint64_t) { return t.ground_truth; }, 0.1,
                                           1, 100, cheat, 17);
  EXPECT_EQ(res.faults, 100u);
  EXPECT_EQ(res.errors.trials, 0u);
}

TEST(ObliviousGame, BoundarySeekerStaysInBall) {
  const Task t = concentric_spheres_task(3);
  const auto adv = boundary_seeking_adversary(draw(t, 500, 18));
  const auto res = oblivious_game_simulate(
      t, [&](std::uint64_t) { return radial_threshold_classifier(1.15); }, 0.2, 5, 500, adv, 19);
  EXPECT_EQ(res.faults, 0u);
  EXPECT_GT(res.errors.value(), 0.9);
}

TEST(ObliviousGame, RefreshSeedsAreIndependentOfAdversary) {
  const Task t = concentric_spheres_task(3);
  std::vector<std::uint64_t> a, b;
  auto rec = [](std::vector<std::uint64_t>& out) {
    return [&out](std::uint64_t s) {
      out.push_back(s);
      return BlackBoxClassifier([](const Point&) { return Label::positive; });
    };
  };
  oblivious_game_simulate(t, rec(a), 0.1, 3, 30, identity_adversary(), 20);
  oblivious_game_simulate(t, rec(b), 0.1, 3, 30, random_adversary(), 20);
  EXPECT_EQ(a, b);
  EXPECT_EQ(std::set<std::uint64_t>(a.begin(), a.end()).size(), a.size());
}

TEST(PoolCellLabeler, MatchesPoolVoting) {
  const Task t = intersecting_circles_task(2);
  const auto planted = plant_error_classifier(t, 0.1);
  Rng rng(21);
  std::vector<Point> pool;
  for (int i = 0; i < 3000; ++i) pool.push_back(t.sample_point(rng));
  const double eps = 0.3;
  const auto net = greedy_net(pool, eps / 4);
  const PoolCellLabeler lab(net, pool, planted.f, eps);
  for (std::uint64_t s = 0; s < 3; ++s) {
    auto bp = std::make_shared<const BallCarvingPartition>(sample_ball_carving(net, eps, s));
    const auto h = lab.classifier(bp);
    const auto g = scheme_a_estimate(planted.f, std::make_shared<const Partition>(*bp), pool);
    for (int i = 0; i < 1000; ++i) {
      const Point x = t.sample_point(rng);
      EXPECT_EQ(h(x), g(x));
    }
  }
}
