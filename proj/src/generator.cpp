#include "wsac/generator.hpp"

#include <cmath>
#include <sstream>

#include "wsac/log.hpp"
#include "wsac/rng.hpp"

namespace wsac {

void GeneratorSpec::validate() const {
  if (n_states < 1 || n_actions < 1) throw ConfigError("generator: sizes must be positive");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("generator: gamma must lie in [0,1)");
  if (!(kappa >= 0.0 && kappa <= 1.0)) throw ConfigError("generator: kappa must lie in [0,1]");
  if (!(transition_concentration > 0.0) || !std::isfinite(transition_concentration)) {
    throw ConfigError("generator: transition concentration must be positive");
  }
  if (!(cost_density >= 0.0 && cost_density <= 1.0)) {
    throw ConfigError("generator: cost density must lie in [0,1]");
  }
}

Cmdp generate_cmdp(const GeneratorSpec& spec) {
  spec.validate();
  const Index n_s = spec.n_states;
  const Index n_a = spec.n_actions;
  CounterRng rng(spec.seed, /*stream=*/0x636d6470);

  Matrix transition(n_s * n_a, n_s);
  for (Index row = 0; row < transition.rows(); ++row) {
    double total = 0.0;
    for (Index sn = 0; sn < n_s; ++sn) {
      transition(row, sn) = rng.gamma(spec.transition_concentration);
      total += transition(row, sn);
    }
    if (!(total > 0.0)) {
      // Every draw underflowed (tiny concentration): fall back to a point mass.
      transition.row(row).setZero();
      transition(row, static_cast<Index>(rng.next_u64() % static_cast<std::uint64_t>(n_s))) = 1.0;
    } else {
      transition.row(row) /= total;
    }
  }
  Matrix reward(n_s, n_a);
  Matrix raw_cost(n_s, n_a);
  for (Index s = 0; s < n_s; ++s) {
    for (Index a = 0; a < n_a; ++a) {
      reward(s, a) = rng.uniform();
      const double magnitude = rng.uniform();
      raw_cost(s, a) = rng.uniform() < spec.cost_density ? magnitude : 0.0;
    }
  }
  Vector rho = Vector::Constant(n_s, 1.0 / static_cast<double>(n_s));
  CmdpMetadata meta;
  meta.seed = spec.seed;
  meta.generator = "dirichlet-uniform";
  return Cmdp::with_cost_budget(std::move(transition), std::move(reward), raw_cost, spec.kappa, spec.gamma,
                                std::move(rho), std::move(meta));
}

GeneratedInstance generate_feasible(const GeneratorSpec& spec, int max_attempts) {
  GeneratorSpec attempt = spec;
  for (int i = 0; i < max_attempts; ++i) {
    attempt.seed = spec.seed + static_cast<std::uint64_t>(i) * kSeedStride;
    Cmdp cmdp = generate_cmdp(attempt);
    try {
      Policy opt = solve_optimal_safe(cmdp);
      return GeneratedInstance{std::move(cmdp), std::move(opt), attempt.seed, i};
    } catch (const InfeasibleError& e) {
      log::info() << "generator: seed " << attempt.seed << " infeasible (min J_c = "
                  << e.min_achievable_cost << "), regenerating\n";
    }
  }
  std::ostringstream msg;
  msg << "generator: no feasible instance after " << max_attempts << " attempts from seed " << spec.seed;
  throw InfeasibleError(msg.str(), 0.0);
}

}  // namespace wsac
