// Acceptance run: prints one PASS/FAIL line per criterion and exits nonzero if any fails.
// Usage: acceptance [property-test-binary] [--only N]
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "support.hpp"
#include "wsac/experiments.hpp"

using namespace wsac;
using namespace wsac::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int workers() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

double pos(double x) { return std::max(x, 0.0); }

GeneratorSpec figure_generator() {
  GeneratorSpec g;  // 20 x 4, gamma 0.9, kappa 0.1
  g.seed = 0;
  return g;
}

// Exact-distribution check with behavior = reference = optimal safe policy.
Outcome criterion1() {
  const double lambda = 20.0;
  int ok = 0;
  double worst_r = 1e300;
  double worst_c = 1e300;
  std::vector<std::pair<double, double>> margins(10);
  parallel_for(margins.size(), workers(), [&](std::size_t i) {
    const Instance inst = make_instance(figure_generator(), static_cast<int>(i));
    WsacConfig cfg = ExperimentSpec::default_wsac();
    cfg.mode = RunMode::kExact;
    cfg.lambda = lambda;
    cfg.beta = 2.0;
    cfg.k = 500;
    const WsacResult res = run_wsac_exact(inst.cmdp, inst.optimal_safe, inst.optimal_safe, cfg);
    const ValueBundle vb = mixture_eval(inst.cmdp, res.policy);
    const ValueBundle vm = policy_eval(inst.cmdp, inst.optimal_safe);
    margins[i] = {vb.j_r - (vm.j_r - 1e-2), pos(vm.j_c) + 1.0 / lambda + 1e-2 - pos(vb.j_c)};
  });
  for (const auto& [mr, mc] : margins) {
    if (mr >= 0 && mc >= 0) ++ok;
    worst_r = std::min(worst_r, mr);
    worst_c = std::min(worst_c, mc);
  }
  std::ostringstream os;
  os << ok << "/10 instances; worst reward margin " << worst_r << ", worst cost margin " << worst_c;
  return {ok == 10, os.str()};
}

// Safe robust improvement over the behavior across beta.
Outcome criterion2() {
  ExperimentSpec spec;
  spec.generator = figure_generator();
  spec.data.n_samples = {20000};
  spec.data.seeds = {0, 1, 2};
  spec.data.n_instances = 5;
  spec.sweep.mix_p = {0.5};
  spec.sweep.beta = {0.0, 0.5, 2.0, 8.0};
  spec.wsac.lambda = 2.0;
  spec.reference = ReferenceKind::kBehaviorClone;
  spec.timing = false;
  const Figure1Report rep = run_figure1(spec, workers());
  const double v_max = 1.0 / (1.0 - spec.generator.gamma);
  const double cost_slack = 0.05 + v_max / spec.wsac.lambda;
  std::ostringstream os;
  bool pass = true;
  for (double beta : spec.sweep.beta) {
    int ok = 0;
    int runs = 0;
    double worst_r = 1e300;
    double worst_c = 1e300;
    for (const auto& c : rep.cells) {
      if (c.row.beta != beta) continue;
      ++runs;
      const double mr = c.row.j_r_wsac - (c.row.j_r_behavior - 0.05);
      const double mc = pos(c.row.j_c_behavior) + cost_slack - pos(c.row.j_c_wsac);
      if (mr >= 0 && mc >= 0) ++ok;
      worst_r = std::min(worst_r, mr);
      worst_c = std::min(worst_c, mc);
    }
    pass = pass && ok == runs;
    os << "beta " << beta << ": " << ok << "/" << runs << " (reward margin " << worst_r << ", cost margin "
       << worst_c << "); ";
  }
  return {pass, os.str()};
}

Outcome criterion3() {
  ExperimentSpec spec;
  spec.generator = figure_generator();
  spec.timing = false;
  const RateReport rep = run_rate(spec, workers());
  std::ostringstream os;
  os << "slope " << rep.slope << " (se " << rep.slope_se << "), means";
  for (const auto& p : rep.points) os << " N=" << p.n << ":" << p.subopt_mean;
  os << "; population suboptimality " << rep.population_subopt << ", excess slope " << rep.excess_slope << " (se "
     << rep.excess_slope_se << ")";
  const bool pass = std::isfinite(rep.slope) && rep.slope >= -0.8 && rep.slope <= -0.3;
  return {pass, os.str()};
}

Outcome criterion4() {
  ExperimentSpec spec;
  spec.generator = figure_generator();
  spec.timing = false;
  const AblationReport rep = run_ablation(spec, workers());
  std::ostringstream os;
  os << "beta=0 costlier on " << rep.beta0_costlier << "/" << rep.instance_cost.size() << " instances;";
  for (const auto& s : rep.summary) os << " " << s.config << " cost " << s.cost_mean << " reward " << s.reward_mean;
  return {rep.beta0_costlier >= 8, os.str()};
}

Outcome criterion5() {
  // Box closed form against the grid adversary.
  int wbe_ok = 0;
  double wbe_worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    CounterRng rng(static_cast<std::uint64_t>(i), 501);
    const Dataset d = random_small_dataset(rng, 2, 2, 1 + rng.next_u64() % 10, 0.5 + 0.45 * rng.uniform());
    const Policy pi = random_policy(rng, 2, 2, 0.2);
    const double v_max = 1.0 / (1.0 - d.gamma());
    const Signal kind = i % 2 == 0 ? Signal::kReward : Signal::kCost;
    const Matrix f = random_table(rng, 2, 2, kind == Signal::kReward ? 0.0 : -v_max, v_max);
    const double b_w = 1.0 + 2.0 * rng.uniform();
    const double closed =
        weighted_bellman_error(d, pi, QTable(f, -v_max, v_max), WeightClass::box(b_w), kind);
    const double err = std::abs(closed - grid_bellman_error(d, pi, f, b_w, kind));
    wbe_worst = std::max(wbe_worst, err);
    if (err <= 1e-9) ++wbe_ok;
  }

  // Critic solutions against exhaustive lattice search.
  int lat_ok = 0;
  int lat_total = 0;
  CriticSolverCfg cfg;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    CounterRng rng(seed, 502);
    const Cmdp m = random_cmdp(rng, 2, 2, 0.5);
    const Policy pi = random_policy(rng, 2, 2);
    const BellmanMoments mom = empirical_moments(sample_dataset(m, random_policy(rng, 2, 2), 200, seed));
    const double v_max = m.v_max();
    const double h = 0.05 * v_max;
    const WeightClass wc = WeightClass::box(1.0);
    for (double beta : {0.5, 2.0}) {
      const double slack_r = h + beta * (1.0 + m.gamma()) * h / 2.0;
      const double grid_r = lattice_min(CriticObjective(mom, pi, Signal::kReward, 1.0, beta, wc), 0.0, v_max, h);
      const double got_r = critic_solve_reward(mom, pi, beta, wc, cfg).objective;
      lat_ok += std::abs(got_r - grid_r) <= slack_r;
      const double lambda = 1.5;
      const double slack_c = lambda * 2 * h + beta * (1.0 + m.gamma()) * h;
      const double grid_c =
          lattice_min(CriticObjective(mom, pi, Signal::kCost, -lambda, beta, wc), -v_max, v_max, 2 * h);
      const double got_c = critic_solve_cost(mom, pi, lambda, beta, wc, cfg).objective;
      lat_ok += std::abs(got_c - grid_c) <= slack_c;
      lat_total += 2;
    }
  }

  // LP optimum against deterministic-plus-mixing enumeration.
  int enum_ok = 0;
  int enum_total = 0;
  double enum_worst = 0.0;
  for (std::uint64_t seed = 0; enum_total < 20 && seed < 500; ++seed) {
    CounterRng rng(seed, 503);
    const Cmdp m = random_cmdp(rng, 3, seed % 3 == 0 ? 3 : 2, 0.9);
    const auto best = enumerated_safe_optimum(m);
    if (!best) continue;
    ++enum_total;
    const ValueBundle v = policy_eval(m, solve_optimal_safe(m));
    const double gap = std::abs(v.j_r - *best);
    enum_worst = std::max(enum_worst, gap);
    if (gap <= 1e-3 && v.j_c <= 1e-9) ++enum_ok;
  }

  std::ostringstream os;
  os << "grid adversary " << wbe_ok << "/200 (max err " << wbe_worst << "); lattice " << lat_ok << "/" << lat_total
     << "; enumeration " << enum_ok << "/" << enum_total << " (max gap " << enum_worst << ")";
  return {wbe_ok == 200 && lat_ok == lat_total && enum_ok == 20 && enum_total == 20, os.str()};
}

// Payoff streams in [0, V_max] chosen to stress the exponentiated-weights actor.
Matrix adversary_payoff(int kind, int t, int k_total, const Policy& current, CounterRng& rng, double v_max) {
  const Index n_s = current.n_states();
  const Index n_a = current.n_actions();
  Matrix u = Matrix::Zero(n_s, n_a);
  for (Index s = 0; s < n_s; ++s) {
    switch (kind) {
      case 0:  // i.i.d. uniform
        for (Index a = 0; a < n_a; ++a) u(s, a) = v_max * rng.uniform();
        break;
      case 1: {  // adaptive: pay the currently least likely action
        Index a_min = 0;
        current.probs().row(s).minCoeff(&a_min);
        u(s, a_min) = v_max;
        break;
      }
      case 2:  // the best action switches every quarter of the run
        u(s, (t * 4 / k_total + s) % n_a) = v_max;
        break;
      default:  // alternate between two actions, with a fixed small edge for action 0
        u(s, t % 2 == 0 ? 0 : 1) = v_max;
        u(s, 0) = std::max(u(s, 0), 0.02 * v_max);
        break;
    }
  }
  return u;
}

Outcome criterion6() {
  int stream_ok = 0;
  double worst_ratio = 0.0;
  for (int i = 0; i < 50; ++i) {
    CounterRng rng(static_cast<std::uint64_t>(i), 601);
    const int kind = i % 4;
    const Index n_a = std::vector<Index>{2, 4, 8}[static_cast<std::size_t>(i / 4 % 3)];
    const int k = i % 2 == 0 ? 200 : 1000;
    const Index n_s = 3;
    const double v_max = 10.0;
    OracleState st = OracleState::initial(n_s, n_a, default_eta(n_a, v_max, k), k);
    std::vector<PayoffTable> pays;
    std::vector<Policy> its;
    for (int t = 0; t < k; ++t) {
      its.push_back(st.policy);
      pays.push_back(PayoffTable{adversary_payoff(kind, t, k, st.policy, rng, v_max)});
      if (t + 1 < k) st = po_update(st, pays.back());
    }
    // Best fixed action in hindsight per state, uniform state weights.
    Matrix total = Matrix::Zero(n_s, n_a);
    for (const auto& p : pays) total += p.u;
    std::vector<Index> best(static_cast<std::size_t>(n_s));
    for (Index s = 0; s < n_s; ++s) total.row(s).maxCoeff(&best[static_cast<std::size_t>(s)]);
    const Policy comp = Policy::deterministic(best, n_a);
    const double audit = regret_audit(pays, its, comp, Occupancy{comp.probs() / static_cast<double>(n_s)});
    const double bound = v_max * std::sqrt(2.0 * std::log(static_cast<double>(n_a)) / k);
    worst_ratio = std::max(worst_ratio, audit / bound);
    if (audit <= bound) ++stream_ok;
  }

  // Hinge bound on WSAC runs with a deterministic reference (the optimal safe policy).
  std::vector<std::pair<double, double>> hinge(20);
  parallel_for(hinge.size(), workers(), [&](std::size_t i) {
    GeneratorSpec g;
    g.n_states = 8;
    g.n_actions = 3;
    g.seed = 700 + i;
    const Instance inst = make_instance(g, 0);
    const Cmdp& m = inst.cmdp;
    const Policy mu = mixture_behavior(inst.optimal_safe, Policy::uniform(8, 3), 0.5);
    const Dataset data = sample_dataset(m, mu, 5000, 700 + i);
    WsacConfig cfg = ExperimentSpec::default_wsac();
    cfg.k = 200;
    cfg.lambda = std::vector<double>{1.0, 2.0, 5.0, 10.0}[i % 4];
    const Policy& ref = inst.optimal_safe;
    const WsacResult res = run_wsac(data, ref, cfg);
    const Occupancy occ = occupancy(m, ref);
    const double eps_opt = regret_audit(res.trace.payoffs, res.policy.members(), ref, occ);
    const Vector nu = occ.state_marginal();
    double h = 0.0;
    for (std::size_t t = 0; t < res.policy.size(); ++t) {
      const Matrix& fc = res.trace.cost_critics[t].values();
      const Vector gap = state_average(fc, res.policy.members()[t].probs()) - state_average(fc, ref.probs());
      h += nu.dot(gap.cwiseMax(0.0));
    }
    h /= static_cast<double>(res.policy.size());
    hinge[i] = {h, pos(eps_opt) + m.v_max() / cfg.lambda};
  });
  int hinge_ok = 0;
  double hinge_worst = 0.0;
  for (const auto& [h, bound] : hinge) {
    if (h <= bound) ++hinge_ok;
    hinge_worst = std::max(hinge_worst, h / bound);
  }

  std::ostringstream os;
  os << "streams " << stream_ok << "/50 under V_max sqrt(2 ln|A|/K) (max audit/bound " << worst_ratio << "); hinge "
     << hinge_ok << "/20 (max hinge/bound " << hinge_worst << ")";
  return {stream_ok == 50 && hinge_ok == 20, os.str()};
}

Outcome criterion7(const std::string& property_binary) {
  if (property_binary.empty()) return {false, "no property-test binary given"};
  const auto t0 = std::chrono::steady_clock::now();
  const std::string cmd = "\"" + property_binary + "\" --minimal > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ostringstream os;
  os << "property suite exit status " << status << " in " << secs << " s (limit 300 s)";
  return {status == 0 && secs < 300.0, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  std::string property_binary;
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      property_binary = arg;
    }
  }
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"exact-mode improvement over the reference", criterion1},
      {"safe robust improvement across beta", criterion2},
      {"suboptimality rate in N", criterion3},
      {"ablation: beta = 0 raises cost", criterion4},
      {"oracle equivalence", criterion5},
      {"no-regret and hinge bounds", criterion6},
      {"invariant property suite", [&] { return criterion7(property_binary); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && static_cast<int>(i) + 1 != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += out.pass ? 0 : 1;
    std::cout << (out.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first << "): "
              << out.detail << " [" << secs << " s]" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
