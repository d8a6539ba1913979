#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "support.hpp"
#include "wsac/critics.hpp"

using namespace wsac;
using wsac::testing::random_cmdp;
using wsac::testing::random_policy;
using wsac::testing::random_table;
using namespace wsac::testing;

TEST_CASE("QTable and WeightClass validation") {
  CHECK_THROWS_AS(QTable(Matrix::Constant(1, 1, 3.0), 0.0, 2.0), ConfigError);
  CHECK_NOTHROW(QTable::cost_critic(Matrix::Constant(1, 1, -2.0), 2.0));
  CHECK_THROWS_AS(WeightClass::box(0.0), ConfigError);
  CHECK_THROWS_AS(WeightClass::two_point(-1.0), ConfigError);
  CriticSolverCfg cfg;
  cfg.max_iters = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("loss_l examples") {
  std::vector<Transition> ts{{0, 0, 0.5, 0.0, 1}, {1, 1, 0.2, 0.1, 0}};
  const Dataset d(ts, 2, 2, 0.9, 0);
  const double v_max = 10.0;
  CHECK(loss_l(d, Policy::uniform(2, 2), QTable::reward_critic(Matrix::Constant(2, 2, 3.0), v_max)) == 0.0);
  CounterRng rng(1);
  const QTable any = QTable::reward_critic(random_table(rng, 2, 2, 0, 10), v_max);
  CHECK(loss_l(d, Policy::deterministic({0, 1}, 2), any) == 0.0);

  Matrix f(2, 2);
  f << 1.0, 3.0, 2.0, 6.0;
  Matrix p(2, 2);
  p << 0.25, 0.75, 0.5, 0.5;
  // Sample 1: (0.25*1 + 0.75*3) - 1 = 1.5; sample 2: (0.5*2 + 0.5*6) - 6 = -2; mean -0.25.
  CHECK(loss_l(d, Policy(p), QTable::reward_critic(f, v_max)) == doctest::Approx(-0.25).epsilon(1e-15));
}

TEST_CASE("weighted_bellman_error examples") {
  SUBCASE("one sample, residual -1, b_w = 2") {
    // f(0,0) = 0, r = 1, f(s',pi) = 0 -> residual -1.
    const Dataset d({{0, 0, 1.0, 0.0, 0}}, 1, 1, 0.5, 0);
    const QTable f = QTable::reward_critic(Matrix::Zero(1, 1), 2.0);
    CHECK(weighted_bellman_error(d, Policy::uniform(1, 1), f, WeightClass::box(2.0), Signal::kReward) == 2.0);
  }
  SUBCASE("true Q of a deterministic model has zero error") {
    CounterRng rng(21);
    Matrix p = Matrix::Zero(6, 3);
    for (Index row = 0; row < 6; ++row) p(row, static_cast<Index>(rng.next_u64() % 3)) = 1.0;
    const Cmdp m(p, random_table(rng, 3, 2, 0, 1), random_table(rng, 3, 2, -1, 1), 0.9, Vector::Constant(3, 1.0 / 3));
    const Policy pi = random_policy(rng, 3, 2);
    const ValueBundle v = policy_eval(m, pi);
    const Dataset d = sample_dataset(m, Policy::uniform(3, 2), 500, 4);
    for (auto wc : {WeightClass::box(1.0), WeightClass::two_point(3.0)}) {
      CHECK(weighted_bellman_error(d, pi, QTable::reward_critic(v.q_r, m.v_max()), wc, Signal::kReward) <
            1e-12);
      CHECK(weighted_bellman_error(d, pi, QTable::cost_critic(v.q_c, m.v_max()), wc, Signal::kCost) < 1e-12);
    }
  }
  SUBCASE("mixed-sign six-sample dataset matches the grid adversary") {
    CounterRng rng(22);
    const Dataset d = random_small_dataset(rng, 2, 2, 6, 0.9);
    const Policy pi = random_policy(rng, 2, 2);
    const Matrix f = random_table(rng, 2, 2, 0.0, 10.0);
    const double closed = weighted_bellman_error(d, pi, QTable::reward_critic(f, 10.0), WeightClass::box(1.0),
                                                 Signal::kReward);
    CHECK(closed == doctest::Approx(grid_bellman_error(d, pi, f, 1.0, Signal::kReward)).epsilon(1e-9));
  }
  SUBCASE("two-point variant is c_inf times the mean squared residual") {
    CounterRng rng(23);
    const Dataset d = random_small_dataset(rng, 3, 2, 40, 0.8);
    const Policy pi = random_policy(rng, 3, 2);
    const Matrix f = random_table(rng, 3, 2, -5.0, 5.0);
    double sq = 0.0;
    for (const auto& t : d.transitions()) sq += std::pow(residual(t, pi, f, 0.8, Signal::kCost), 2);
    const double got =
        weighted_bellman_error(d, pi, QTable::cost_critic(f, 5.0), WeightClass::two_point(4.0), Signal::kCost);
    CHECK(got == doctest::Approx(4.0 * sq / 40.0).epsilon(1e-12));
  }
}

TEST_CASE("critic_solve_reward examples") {
  CriticSolverCfg cfg;
  SUBCASE("beta 0 with a policy matching every action has zero objective") {
    const Dataset d({{0, 1, 0.3, 0.0, 1}, {1, 0, 0.6, 0.0, 0}}, 2, 2, 0.9, 0);
    const CriticSolution sol =
        critic_solve_reward(d, Policy::deterministic({1, 0}, 2), 0.0, WeightClass::box(1.0), cfg);
    CHECK(sol.objective == 0.0);
  }
  SUBCASE("one state, large beta recovers r / (1 - gamma)") {
    const Dataset d({{0, 0, 0.5, 0.0, 0}}, 1, 1, 0.5, 0);
    const CriticSolution sol = critic_solve_reward(d, Policy::uniform(1, 1), 100.0, WeightClass::box(1.0), cfg);
    CHECK(std::abs(sol.table(0, 0) - 1.0) < 1e-3);
  }
}

TEST_CASE("critic objectives match lattice search on 2-state instances") {
  CriticSolverCfg cfg;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    CounterRng rng(seed, 31);
    const Cmdp m = random_cmdp(rng, 2, 2, 0.5);
    const Policy pi = random_policy(rng, 2, 2);
    const Dataset d = sample_dataset(m, random_policy(rng, 2, 2), 200, seed);
    const BellmanMoments mom = empirical_moments(d);
    const double v_max = m.v_max();
    const double h = 0.05 * v_max;
    for (double beta : {0.5, 2.0}) {
      const WeightClass wc = WeightClass::box(1.0);
      // Moving every entry by at most h/2 changes L by <= h and E by <= b_w (1 + gamma) h / 2.
      const double slack = h + beta * (1.0 + m.gamma()) * h / 2.0;

      const CriticSolution r = critic_solve_reward(mom, pi, beta, wc, cfg);
      const double grid_r = lattice_min(CriticObjective(mom, pi, Signal::kReward, 1.0, beta, wc), 0.0, v_max, h);
      CHECK(r.objective <= grid_r + slack);
      CHECK(r.objective >= grid_r - slack);

      const double lambda = 1.5;
      const CriticSolution c = critic_solve_cost(mom, pi, lambda, beta, wc, cfg);
      const double grid_c =
          lattice_min(CriticObjective(mom, pi, Signal::kCost, -lambda, beta, wc), -v_max, v_max, 2 * h);
      CHECK(c.objective <= grid_c + lambda * 2 * h + beta * (1.0 + m.gamma()) * h);
      CHECK(c.objective >= grid_c - (lambda * 2 * h + beta * (1.0 + m.gamma()) * h));
    }
  }
}

TEST_CASE("critic_solve_cost with beta 0 sits at box corners") {
  CounterRng rng(41);
  const Cmdp m = random_cmdp(rng, 3, 2, 0.9);
  const Dataset d = sample_dataset(m, random_policy(rng, 3, 2), 300, 2);
  const Policy pi = random_policy(rng, 3, 2);
  const double lambda = 2.0;
  // -lambda L(f) = sum_{s,a} coef(s,a) f(s,a) with coef = -lambda (n(s) pi(a|s) - n(s,a)) / N.
  const Matrix& n = d.counts();
  const Vector n_s = n.rowwise().sum();
  double corner = 0.0;
  for (Index s = 0; s < 3; ++s) {
    for (Index a = 0; a < 2; ++a) {
      const double coef = -lambda * (n_s(s) * pi(s, a) - n(s, a)) / static_cast<double>(d.size());
      corner -= m.v_max() * std::abs(coef);
    }
  }
  CriticSolverCfg cfg;
  const CriticSolution sol = critic_solve_cost(d, pi, lambda, 0.0, WeightClass::box(1.0), cfg);
  CHECK(std::abs(sol.objective - corner) <= 1e-4 * m.v_max());
}

TEST_CASE("population and dataset losses agree within plug-in error") {
  CounterRng rng(51);
  const Cmdp m = random_cmdp(rng, 4, 2, 0.9);
  const Policy mu = random_policy(rng, 4, 2);
  const Policy pi = random_policy(rng, 4, 2);
  const Matrix f = random_table(rng, 4, 2, 0.0, m.v_max());
  const std::size_t n = 100000;
  const Dataset d = sample_dataset(m, mu, n, 77);
  const BellmanMoments exact = exact_moments(m, occupancy(m, mu));
  const QTable q = QTable::reward_critic(f, m.v_max());

  // loss_l
  double s1 = 0.0, s2 = 0.0;
  for (const auto& t : d.transitions()) {
    const double x = pi.probs().row(t.s).dot(f.row(t.s)) - f(t.s, t.a);
    s1 += x;
    s2 += x * x;
  }
  double mean = s1 / n;
  double se = std::sqrt((s2 / n - mean * mean) / n);
  CHECK(std::abs(loss_l(d, pi, q) - loss_l(exact, pi, f)) <= 3 * se);

  // Two-point error: mean of squared residuals.
  s1 = s2 = 0.0;
  for (const auto& t : d.transitions()) {
    const double x = std::pow(residual(t, pi, f, m.gamma(), Signal::kReward), 2);
    s1 += x;
    s2 += x * x;
  }
  mean = s1 / n;
  se = std::sqrt((s2 / n - mean * mean) / n);
  const auto tp = WeightClass::two_point(1.0);
  CHECK(std::abs(weighted_bellman_error(d, pi, q, tp, Signal::kReward) -
                 weighted_bellman_error(exact, pi, f, tp, Signal::kReward)) <= 3 * se);

  // Box error: linearize at the population's bang-bang weights.
  const Matrix m_exact = weighted_residuals(exact, pi, f, Signal::kReward);
  const bool positive_side = m_exact.cwiseMax(0.0).sum() >= -m_exact.cwiseMin(0.0).sum();
  s1 = s2 = 0.0;
  for (const auto& t : d.transitions()) {
    const double r = residual(t, pi, f, m.gamma(), Signal::kReward);
    const double w = positive_side ? (m_exact(t.s, t.a) > 0 ? 1.0 : 0.0) : (m_exact(t.s, t.a) < 0 ? -1.0 : 0.0);
    const double x = w * r;
    s1 += x;
    s2 += x * x;
  }
  mean = s1 / n;
  se = std::sqrt((s2 / n - mean * mean) / n);
  const auto box = WeightClass::box(1.0);
  CHECK(std::abs(weighted_bellman_error(d, pi, q, box, Signal::kReward) -
                 weighted_bellman_error(exact, pi, f, box, Signal::kReward)) <= 3 * se);
}
