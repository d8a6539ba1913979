#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "wsac/oracle.hpp"

using namespace wsac;
using wsac::testing::random_policy;
using wsac::testing::random_table;

TEST_CASE("aggression_limited_payoff examples") {
  const double v_max = 10.0;
  SUBCASE("hinge inactive") {
    Matrix fc(2, 2);
    fc << 1.0, 1.0, -2.0, -2.0;
    CounterRng rng(1);
    const Matrix fr = random_table(rng, 2, 2, 0, v_max);
    const PayoffTable u = aggression_limited_payoff(QTable::reward_critic(fr, v_max), QTable::cost_critic(fc, v_max),
                                                    3.0, random_policy(rng, 2, 2));
    CHECK(u.u == fr);
  }
  SUBCASE("single active entry") {
    // pi_ref plays action 1, so f_c(s, pi_ref) = 0 and the only positive gap is 0.5 at (0,0).
    Matrix fc(2, 2);
    fc << 0.5, 0.0, 0.0, 0.0;
    const PayoffTable u = aggression_limited_payoff(QTable::reward_critic(Matrix::Zero(2, 2), v_max),
                                                    QTable::cost_critic(fc, v_max), 2.0,
                                                    Policy::deterministic({1, 1}, 2));
    CHECK(u.u(0, 0) == -1.0);
    CHECK(u.u(0, 1) == 0.0);
    CHECK(u.u(1, 0) == 0.0);
    CHECK(u.u(1, 1) == 0.0);
  }
  SUBCASE("naive loop oracle") {
    CounterRng rng(2);
    const Matrix fr = random_table(rng, 5, 3, 0, v_max);
    const Matrix fc = random_table(rng, 5, 3, -v_max, v_max);
    const Policy ref = random_policy(rng, 5, 3);
    const double lambda = 1.7;
    const PayoffTable u =
        aggression_limited_payoff(QTable::reward_critic(fr, v_max), QTable::cost_critic(fc, v_max), lambda, ref);
    for (Index s = 0; s < 5; ++s) {
      double base = 0.0;
      for (Index a = 0; a < 3; ++a) base += ref(s, a) * fc(s, a);
      for (Index a = 0; a < 3; ++a) {
        const double gap = fc(s, a) - base;
        CHECK(std::abs(u.u(s, a) - (fr(s, a) - lambda * (gap > 0 ? gap : 0.0))) <= 1e-12);
      }
    }
  }
  CHECK_THROWS_AS(aggression_limited_payoff(QTable::reward_critic(Matrix::Zero(1, 1), v_max),
                                            QTable::cost_critic(Matrix::Zero(1, 1), v_max), 0.0,
                                            Policy::uniform(1, 1)),
                  ConfigError);
}

TEST_CASE("po_update examples") {
  const OracleState start = OracleState::initial(1, 2, std::log(2.0), 10);
  Matrix u(1, 2);
  u << 1.0, 0.0;
  const OracleState next = po_update(start, PayoffTable{u});
  CHECK(next.policy(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(next.policy(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(next.step == start.step + 1);

  CounterRng rng(3);
  OracleState st{random_policy(rng, 3, 4), 0.7, 10, 0};
  const Vector shift = Vector::LinSpaced(3, -5.0, 7.0);
  const Matrix constant_rows = shift.replicate(1, 4);
  CHECK((po_update(st, PayoffTable{constant_rows}).policy.probs() - st.policy.probs()).cwiseAbs().maxCoeff() <
        1e-12);

  OracleState tiny{random_policy(rng, 3, 4), 1e-12, 10, 0};
  const Matrix big = random_table(rng, 3, 4, 0, 10);
  CHECK((po_update(tiny, PayoffTable{big}).policy.probs() - tiny.policy.probs()).cwiseAbs().maxCoeff() < 1e-9);

  Matrix bad = Matrix::Zero(3, 4);
  bad(1, 2) = std::nan("");
  CHECK_THROWS_AS(po_update(st, PayoffTable{bad}), NumericalError);
  const OracleState done{st.policy, 0.7, 3, 3};
  CHECK_THROWS_AS(po_update(done, PayoffTable{big}), ConfigError);

  // Overflow safety: payoffs of huge magnitude still give a valid row.
  OracleState hot{Policy::uniform(1, 3), 50.0, 10, 0};
  Matrix huge(1, 3);
  huge << 1e4, 1e4 - 1.0, -1e4;
  const Policy p = po_update(hot, PayoffTable{huge}).policy;
  CHECK(std::abs(p.probs().sum() - 1.0) < 1e-12);
}

TEST_CASE("default_eta") {
  CHECK(default_eta_from_log(1.0, 1.0, 2) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(default_eta(4, 10.0, 400) == doctest::Approx(0.5 * default_eta(4, 10.0, 100)).epsilon(1e-15));
  // sqrt(ln 4 / 20000) = 0.0083255461...
  CHECK(default_eta(4, 10.0, 100) == doctest::Approx(0.008325546111576977).epsilon(1e-14));
}

TEST_CASE("regret_audit examples") {
  CounterRng rng(4);
  const Index n_s = 3, n_a = 2;
  const Policy comp = random_policy(rng, n_s, n_a);
  Matrix d = Matrix::Zero(n_s, n_a);
  const Vector nu = Vector::Constant(n_s, 1.0 / 3.0);
  for (Index s = 0; s < n_s; ++s) d.row(s) = nu(s) * comp.probs().row(s);
  const Occupancy occ{d};

  std::vector<PayoffTable> pays{PayoffTable{random_table(rng, n_s, n_a, 0, 5)},
                                PayoffTable{random_table(rng, n_s, n_a, 0, 5)}};
  CHECK(std::abs(regret_audit(pays, {comp, comp}, comp, occ)) < 1e-15);

  // K = 1, comparator is the per-state argmax, iterate uniform.
  Matrix u(2, 2);
  u << 3.0, 1.0, 0.0, 4.0;
  const Policy best = Policy::deterministic({0, 1}, 2);
  Matrix dbest(2, 2);
  dbest << 0.25, 0.0, 0.0, 0.75;
  // Gaps: state 0: 3 - 2 = 1; state 1: 4 - 2 = 2; weighted 0.25 * 1 + 0.75 * 2 = 1.75.
  CHECK(regret_audit({PayoffTable{u}}, {Policy::uniform(2, 2)}, best, Occupancy{dbest}) ==
        doctest::Approx(1.75).epsilon(1e-15));
  CHECK_THROWS_AS(regret_audit(pays, {comp}, comp, occ), ConfigError);
}

TEST_CASE("no-regret decay on fixed-payoff streams") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    CounterRng rng(seed, 5);
    const Index n_s = 4, n_a = 3;
    const double v_max = 10.0;
    const Matrix mean = random_table(rng, n_s, n_a, 0, v_max);
    auto audit_at = [&](int k) {
      OracleState st = OracleState::initial(n_s, n_a, default_eta(n_a, v_max, k), k);
      std::vector<PayoffTable> pays;
      std::vector<Policy> its;
      for (int t = 0; t < k; ++t) {
        its.push_back(st.policy);
        pays.push_back(PayoffTable{mean});
        if (t + 1 < k) st = po_update(st, pays.back());
      }
      std::vector<Index> arg(static_cast<std::size_t>(n_s));
      for (Index s = 0; s < n_s; ++s) mean.row(s).maxCoeff(&arg[static_cast<std::size_t>(s)]);
      const Policy comp = Policy::deterministic(arg, n_a);
      return regret_audit(pays, its, comp, Occupancy{comp.probs() / static_cast<double>(n_s)});
    };
    CHECK(audit_at(400) <= 0.75 * audit_at(100));
  }
}
