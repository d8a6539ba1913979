#include "wsac/dataset.hpp"

#include <algorithm>
#include <sstream>

#include "wsac/rng.hpp"

namespace wsac {

namespace {

/// Index of the first cumulative entry strictly above u * total.
Index draw_categorical(const std::vector<double>& cumulative, CounterRng& rng) {
  const double target = rng.uniform() * cumulative.back();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
  auto idx = static_cast<Index>(it - cumulative.begin());
  idx = std::min<Index>(idx, static_cast<Index>(cumulative.size()) - 1);
  // Skip zero-probability entries that share a cumulative value with their successor.
  while (idx > 0 && cumulative[static_cast<std::size_t>(idx)] ==
                        cumulative[static_cast<std::size_t>(idx - 1)]) {
    --idx;
  }
  return idx;
}

std::vector<double> cumulative_of(const Eigen::Ref<const Eigen::RowVectorXd>& probs) {
  std::vector<double> cum(static_cast<std::size_t>(probs.size()));
  double acc = 0.0;
  for (Index i = 0; i < probs.size(); ++i) {
    acc += probs(i);
    cum[static_cast<std::size_t>(i)] = acc;
  }
  return cum;
}

}  // namespace

Dataset::Dataset(std::vector<Transition> transitions, Index n_states, Index n_actions, double gamma,
                 std::uint64_t source_seed)
    : transitions_(std::move(transitions)),
      counts_(Matrix::Zero(n_states, n_actions)),
      n_states_(n_states),
      n_actions_(n_actions),
      gamma_(gamma),
      source_seed_(source_seed) {
  if (transitions_.empty()) throw ConfigError("Dataset: at least one transition is required");
  if (n_states <= 0 || n_actions <= 0) throw ConfigError("Dataset: invalid model dimensions");
  for (std::size_t i = 0; i < transitions_.size(); ++i) {
    const Transition& t = transitions_[i];
    if (t.s < 0 || t.s >= n_states || t.s_next < 0 || t.s_next >= n_states || t.a < 0 ||
        t.a >= n_actions) {
      std::ostringstream msg;
      msg << "Dataset: transition " << i << " has an out-of-range index";
      throw ConfigError(msg.str());
    }
    if (!(t.r >= 0.0 && t.r <= 1.0) || !(t.c >= -1.0 && t.c <= 1.0)) {
      std::ostringstream msg;
      msg << "Dataset: transition " << i << " has reward/cost outside the model bounds";
      throw ConfigError(msg.str());
    }
    counts_(t.s, t.a) += 1.0;
  }
}

Dataset sample_dataset(const Cmdp& cmdp, const Policy& behavior, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ConfigError("sample_dataset: n must be at least 1");
  const Occupancy occ = occupancy(cmdp, behavior);
  const Index n_a = cmdp.n_actions();

  Eigen::RowVectorXd flat(occ.d.size());
  for (Index s = 0; s < occ.d.rows(); ++s) {
    for (Index a = 0; a < n_a; ++a) flat(sa_index(s, a, n_a)) = occ.d(s, a);
  }
  const std::vector<double> sa_cum = cumulative_of(flat);
  std::vector<std::vector<double>> next_cum;
  next_cum.reserve(static_cast<std::size_t>(cmdp.transition().rows()));
  for (Index row = 0; row < cmdp.transition().rows(); ++row) {
    next_cum.push_back(cumulative_of(cmdp.transition().row(row)));
  }

  CounterRng rng(seed);
  std::vector<Transition> transitions;
  transitions.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Index flat_idx = draw_categorical(sa_cum, rng);
    Transition t;
    t.s = flat_idx / n_a;
    t.a = flat_idx % n_a;
    t.r = cmdp.reward()(t.s, t.a);
    t.c = cmdp.cost()(t.s, t.a);
    t.s_next = draw_categorical(next_cum[static_cast<std::size_t>(flat_idx)], rng);
    transitions.push_back(t);
  }
  return Dataset(std::move(transitions), cmdp.n_states(), n_a, cmdp.gamma(), seed);
}

Policy behavior_clone(const Dataset& dataset, Index n_states, Index n_actions) {
  if (dataset.n_states() != n_states || dataset.n_actions() != n_actions) {
    throw ConfigError("behavior_clone: dataset shape does not match the requested policy");
  }
  Matrix probs(n_states, n_actions);
  for (Index s = 0; s < n_states; ++s) {
    const double visits = dataset.counts().row(s).sum();
    if (visits > 0.0) {
      probs.row(s) = dataset.counts().row(s) / visits;
    } else {
      probs.row(s).setConstant(1.0 / static_cast<double>(n_actions));
    }
  }
  return Policy(std::move(probs));
}

Policy mixture_behavior(const Policy& optimal, const Policy& base, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("mixture_behavior: p must lie in [0,1]");
  if (optimal.n_states() != base.n_states() || optimal.n_actions() != base.n_actions()) {
    throw ConfigError("mixture_behavior: policy shapes differ");
  }
  return Policy(p * optimal.probs() + (1.0 - p) * base.probs());
}

}  // namespace wsac
