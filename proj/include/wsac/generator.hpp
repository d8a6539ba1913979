#pragma once

#include <cstdint>

#include "wsac/cmdp.hpp"

namespace wsac {

/// Random tabular instance family.
struct GeneratorSpec {
  Index n_states = 20;
  Index n_actions = 4;
  double gamma = 0.9;
  /// Normalized cost budget; stored costs are c_raw - kappa.
  double kappa = 0.1;
  std::uint64_t seed = 0;
  /// Symmetric Dirichlet parameter for every P(.|s,a).
  double transition_concentration = 0.5;
  /// Probability that an (s,a) pair carries a nonzero raw cost.
  double cost_density = 0.5;

  void validate() const;
};

/// Draws P ~ Dir(concentration), R ~ U[0,1], c_raw ~ U[0,1] masked by
/// Bernoulli(cost_density), uniform rho. Deterministic per seed.
Cmdp generate_cmdp(const GeneratorSpec& spec);

struct GeneratedInstance {
  Cmdp cmdp;
  Policy optimal_safe;
  /// Seed actually used (seed + offset after rejected attempts).
  std::uint64_t seed_used = 0;
  int rejected = 0;
};

/// Generates instances until one admits a policy with J_c <= 0, trying
/// seed, seed + kSeedStride, ... Throws after max_attempts failures.
GeneratedInstance generate_feasible(const GeneratorSpec& spec, int max_attempts = 100);

inline constexpr std::uint64_t kSeedStride = 1000003;

}  // namespace wsac
