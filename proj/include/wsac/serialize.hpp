#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "wsac/cmdp.hpp"
#include "wsac/dataset.hpp"

namespace wsac {

/// CMDP document: {n_states, n_actions, gamma, rho, P[s][a][s'], R[s][a], C[s][a],
/// metadata?: {seed, generator, kappa}}.
nlohmann::json cmdp_to_json(const Cmdp& cmdp);
Cmdp cmdp_from_json(const nlohmann::json& doc);

void save_cmdp(const Cmdp& cmdp, const std::filesystem::path& path);
Cmdp load_cmdp(const std::filesystem::path& path);

/// JSON Lines: header {"n_states","n_actions","gamma","seed","n"} followed by
/// one {"s","a","r","c","sn"} object per transition.
void write_dataset(const Dataset& dataset, std::ostream& out);
Dataset read_dataset(std::istream& in);

void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

/// Policy document: {"n_states","n_actions","probs":[[...]]}.
nlohmann::json policy_to_json(const Policy& policy);
Policy policy_from_json(const nlohmann::json& doc);

/// {"members": [policy, ...]}; members are weighted uniformly.
nlohmann::json mixture_to_json(const MixturePolicy& mix);
MixturePolicy mixture_from_json(const nlohmann::json& doc);

}  // namespace wsac
