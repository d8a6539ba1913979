#include "wsac/serialize.hpp"

#include <fstream>
#include <sstream>

namespace wsac {

using nlohmann::json;

namespace {

json table_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix table_from_json(const json& rows, Index n_rows, Index n_cols, const char* name) {
  if (!rows.is_array() || static_cast<Index>(rows.size()) != n_rows) {
    throw ConfigError(std::string("CMDP document: field ") + name + " has wrong outer length");
  }
  Matrix m(n_rows, n_cols);
  for (Index i = 0; i < n_rows; ++i) {
    const json& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != n_cols) {
      throw ConfigError(std::string("CMDP document: field ") + name + " has wrong inner length");
    }
    for (Index j = 0; j < n_cols; ++j) m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
  }
  return m;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string() + " for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace

json cmdp_to_json(const Cmdp& cmdp) {
  const Index n_s = cmdp.n_states();
  const Index n_a = cmdp.n_actions();
  json doc;
  doc["n_states"] = n_s;
  doc["n_actions"] = n_a;
  doc["gamma"] = cmdp.gamma();
  doc["rho"] = std::vector<double>(cmdp.initial_dist().data(),
                                   cmdp.initial_dist().data() + cmdp.initial_dist().size());
  json p = json::array();
  for (Index s = 0; s < n_s; ++s) {
    json per_action = json::array();
    for (Index a = 0; a < n_a; ++a) {
      json row = json::array();
      for (Index sn = 0; sn < n_s; ++sn) row.push_back(cmdp.next_state_dist(s, a)(sn));
      per_action.push_back(std::move(row));
    }
    p.push_back(std::move(per_action));
  }
  doc["P"] = std::move(p);
  doc["R"] = table_to_json(cmdp.reward());
  doc["C"] = table_to_json(cmdp.cost());
  const CmdpMetadata& meta = cmdp.metadata();
  if (meta.seed || !meta.generator.empty() || meta.kappa) {
    json m = json::object();
    if (meta.seed) m["seed"] = *meta.seed;
    if (!meta.generator.empty()) m["generator"] = meta.generator;
    if (meta.kappa) m["kappa"] = *meta.kappa;
    doc["metadata"] = std::move(m);
  }
  return doc;
}

Cmdp cmdp_from_json(const json& doc) {
  try {
    const auto n_s = doc.at("n_states").get<Index>();
    const auto n_a = doc.at("n_actions").get<Index>();
    if (n_s <= 0 || n_a <= 0) throw ConfigError("CMDP document: dimensions must be positive");
    const auto rho_vec = doc.at("rho").get<std::vector<double>>();
    if (static_cast<Index>(rho_vec.size()) != n_s) throw ConfigError("CMDP document: rho has wrong length");
    Vector rho = Eigen::Map<const Vector>(rho_vec.data(), n_s);

    const json& p = doc.at("P");
    if (!p.is_array() || static_cast<Index>(p.size()) != n_s) {
      throw ConfigError("CMDP document: P has wrong outer length");
    }
    Matrix transition(n_s * n_a, n_s);
    for (Index s = 0; s < n_s; ++s) {
      const Matrix block = table_from_json(p[static_cast<std::size_t>(s)], n_a, n_s, "P[s]");
      for (Index a = 0; a < n_a; ++a) transition.row(sa_index(s, a, n_a)) = block.row(a);
    }
    CmdpMetadata meta;
    if (doc.contains("metadata")) {
      const json& m = doc["metadata"];
      if (m.contains("seed")) meta.seed = m["seed"].get<std::uint64_t>();
      if (m.contains("generator")) meta.generator = m["generator"].get<std::string>();
      if (m.contains("kappa")) meta.kappa = m["kappa"].get<double>();
    }
    return Cmdp(std::move(transition), table_from_json(doc.at("R"), n_s, n_a, "R"),
                table_from_json(doc.at("C"), n_s, n_a, "C"), doc.at("gamma").get<double>(),
                std::move(rho), std::move(meta));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("CMDP document: ") + e.what());
  }
}

void save_cmdp(const Cmdp& cmdp, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << cmdp_to_json(cmdp).dump(1) << '\n';
}

Cmdp load_cmdp(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return cmdp_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_dataset(const Dataset& dataset, std::ostream& out) {
  json header;
  header["n_states"] = dataset.n_states();
  header["n_actions"] = dataset.n_actions();
  header["gamma"] = dataset.gamma();
  header["seed"] = dataset.source_seed();
  header["n"] = dataset.size();
  out << header.dump() << '\n';
  for (const Transition& t : dataset.transitions()) {
    json line;
    line["s"] = t.s;
    line["a"] = t.a;
    line["r"] = t.r;
    line["c"] = t.c;
    line["sn"] = t.s_next;
    out << line.dump() << '\n';
  }
}

Dataset read_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("dataset file: missing header line");
  try {
    const json header = json::parse(line);
    const auto n_s = header.at("n_states").get<Index>();
    const auto n_a = header.at("n_actions").get<Index>();
    const auto gamma = header.at("gamma").get<double>();
    const auto seed = header.at("seed").get<std::uint64_t>();
    const auto n = header.at("n").get<std::size_t>();
    std::vector<Transition> transitions;
    transitions.reserve(n);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json row = json::parse(line);
      transitions.push_back(Transition{row.at("s").get<Index>(), row.at("a").get<Index>(),
                                       row.at("r").get<double>(), row.at("c").get<double>(),
                                       row.at("sn").get<Index>()});
    }
    if (transitions.size() != n) {
      std::ostringstream msg;
      msg << "dataset file: header announces " << n << " transitions, found " << transitions.size();
      throw ConfigError(msg.str());
    }
    return Dataset(std::move(transitions), n_s, n_a, gamma, seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("dataset file: ") + e.what());
  }
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_dataset(dataset, out);
}

Dataset load_dataset(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_dataset(in);
}

json policy_to_json(const Policy& policy) {
  json doc;
  doc["n_states"] = policy.n_states();
  doc["n_actions"] = policy.n_actions();
  doc["probs"] = table_to_json(policy.probs());
  return doc;
}

Policy policy_from_json(const json& doc) {
  try {
    const auto n_s = doc.at("n_states").get<Index>();
    const auto n_a = doc.at("n_actions").get<Index>();
    return Policy(table_from_json(doc.at("probs"), n_s, n_a, "probs"));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("policy document: ") + e.what());
  }
}

json mixture_to_json(const MixturePolicy& mix) {
  json doc;
  doc["members"] = json::array();
  for (const auto& m : mix.members()) doc["members"].push_back(policy_to_json(m));
  return doc;
}

MixturePolicy mixture_from_json(const json& doc) {
  if (!doc.contains("members") || !doc["members"].is_array()) {
    throw ConfigError("mixture document: missing members array");
  }
  std::vector<Policy> members;
  for (const auto& m : doc["members"]) members.push_back(policy_from_json(m));
  return MixturePolicy(std::move(members));
}

}  // namespace wsac
