#include "wsac/experiments.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "wsac/log.hpp"
#include "wsac/rng.hpp"
#include "wsac/svg.hpp"

namespace wsac {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Spec parsing

WsacConfig ExperimentSpec::default_wsac() {
  WsacConfig cfg;
  cfg.k = 1000;
  cfg.critic_cfg.max_iters = 300;
  return cfg;
}

void ExperimentSpec::validate() const {
  generator.validate();
  wsac.validate();
  for (auto n : data.n_samples) {
    if (n == 0) throw ConfigError("spec: n_samples entries must be positive");
  }
  if (data.n_instances < 0) throw ConfigError("spec: n_instances must be >= 0");
  for (double b : sweep.beta) {
    if (!(b >= 0.0) || !std::isfinite(b)) throw ConfigError("spec: beta grid entries must be >= 0");
  }
  for (const auto& r : sweep.lambda_ranges) {
    if (!(r.lo >= 0.0) || !(r.hi >= r.lo) || !(r.hi > 0.0) || !std::isfinite(r.hi)) {
      throw ConfigError("spec: lambda ranges need 0 <= lo <= hi, hi > 0");
    }
  }
  for (double p : sweep.mix_p) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("spec: mixture p must lie in [0,1]");
  }
  if (!(tolerance >= 0.0) || !std::isfinite(tolerance)) throw ConfigError("spec: tolerance must be >= 0");
}

namespace {

template <class T>
std::vector<T> nonempty_list(const json& node, const char* name) {
  if (!node.is_array()) throw ConfigError(std::string("spec: '") + name + "' must be an array");
  if (node.empty()) throw ConfigError(std::string("spec: grid '") + name + "' is empty");
  return node.get<std::vector<T>>();
}

void check_keys(const json& node, std::initializer_list<const char*> allowed, const char* where) {
  if (!node.is_object()) throw ConfigError(std::string("spec: '") + where + "' must be an object");
  for (const auto& item : node.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) { return item.key() == k; }) ==
        allowed.end()) {
      throw ConfigError(std::string("spec: unknown key '") + item.key() + "' in " + where);
    }
  }
}

LambdaSchedule schedule_from_json(const json& node) {
  if (!node.is_array() || node.size() != 2) throw ConfigError("spec: lambda range must be [lo, hi]");
  return LambdaSchedule{node[0].get<double>(), node[1].get<double>()};
}

ReferenceKind reference_from_string(const std::string& name) {
  if (name == "bc" || name == "behavior_clone") return ReferenceKind::kBehaviorClone;
  if (name == "behavior") return ReferenceKind::kBehavior;
  if (name == "optimal" || name == "optimal_safe") return ReferenceKind::kOptimalSafe;
  throw ConfigError("spec: unknown reference '" + name + "' (expected bc, behavior or optimal)");
}

void apply_wsac(const json& node, WsacConfig& cfg) {
  check_keys(node,
             {"beta", "lambda", "lambda_range", "k", "eta", "weight_class", "critic", "warm_start", "mode",
              "actor", "payoff"},
             "wsac");
  if (node.contains("beta")) cfg.beta = node["beta"].get<double>();
  if (node.contains("lambda")) cfg.lambda = node["lambda"].get<double>();
  if (node.contains("lambda_range")) cfg.lambda_schedule = schedule_from_json(node["lambda_range"]);
  if (node.contains("k")) cfg.k = node["k"].get<int>();
  if (node.contains("eta")) cfg.eta = node["eta"].get<double>();
  if (node.contains("warm_start")) cfg.warm_start_critics = node["warm_start"].get<bool>();
  if (node.contains("weight_class")) {
    const auto& wc = node["weight_class"];
    check_keys(wc, {"kind", "bound"}, "wsac.weight_class");
    const auto kind = wc.value("kind", std::string("box"));
    const double bound = wc.at("bound").get<double>();
    if (kind == "box") {
      cfg.weight_class = WeightClass::box(bound);
    } else if (kind == "two_point") {
      cfg.weight_class = WeightClass::two_point(bound);
    } else {
      throw ConfigError("spec: weight_class.kind must be box or two_point");
    }
  }
  if (node.contains("critic")) {
    const auto& c = node["critic"];
    check_keys(c, {"max_iters", "step_size", "tol", "init", "step_rule"}, "wsac.critic");
    auto& cc = cfg.critic_cfg;
    if (c.contains("max_iters")) cc.max_iters = c["max_iters"].get<int>();
    if (c.contains("step_size")) cc.step_size = c["step_size"].get<double>();
    if (c.contains("tol")) cc.tol = c["tol"].get<double>();
    if (c.contains("init")) {
      const auto v = c["init"].get<std::string>();
      if (v == "zero") {
        cc.init = CriticInit::kZero;
      } else if (v == "midpoint") {
        cc.init = CriticInit::kMidpoint;
      } else {
        throw ConfigError("spec: critic.init must be zero or midpoint");
      }
    }
    if (c.contains("step_rule")) {
      const auto v = c["step_rule"].get<std::string>();
      if (v == "diminishing") {
        cc.step_rule = StepRule::kDiminishing;
      } else if (v == "adaptive") {
        cc.step_rule = StepRule::kAdaptive;
      } else {
        throw ConfigError("spec: critic.step_rule must be diminishing or adaptive");
      }
    }
  }
  if (node.contains("mode")) {
    const auto v = node["mode"].get<std::string>();
    if (v == "empirical") {
      cfg.mode = RunMode::kEmpirical;
    } else if (v == "exact") {
      cfg.mode = RunMode::kExact;
    } else {
      throw ConfigError("spec: wsac.mode must be empirical or exact");
    }
  }
  if (node.contains("actor")) {
    const auto v = node["actor"].get<std::string>();
    if (v == "exponentiated_weights") {
      cfg.actor = ActorUpdate::kExponentiatedWeights;
    } else if (v == "greedy") {
      cfg.actor = ActorUpdate::kGreedy;
    } else {
      throw ConfigError("spec: wsac.actor must be exponentiated_weights or greedy");
    }
  }
  if (node.contains("payoff")) {
    const auto v = node["payoff"].get<std::string>();
    if (v == "aggression_limited") {
      cfg.payoff_rule = PayoffRule::kAggressionLimited;
    } else if (v == "lagrangian") {
      cfg.payoff_rule = PayoffRule::kLagrangian;
    } else {
      throw ConfigError("spec: wsac.payoff must be aggression_limited or lagrangian");
    }
  }
}

}  // namespace

ExperimentSpec spec_from_json(const json& doc) {
  ExperimentSpec spec;
  try {
    check_keys(doc, {"generator", "data", "wsac", "sweep", "paths", "reference", "outputs", "tolerance", "timing"},
               "spec");
    if (doc.contains("generator")) {
      const auto& g = doc["generator"];
      check_keys(g,
                 {"n_states", "n_actions", "gamma", "cost_threshold", "seed", "transition_concentration",
                  "cost_density"},
                 "generator");
      auto& gs = spec.generator;
      if (g.contains("n_states")) gs.n_states = g["n_states"].get<Index>();
      if (g.contains("n_actions")) gs.n_actions = g["n_actions"].get<Index>();
      if (g.contains("gamma")) gs.gamma = g["gamma"].get<double>();
      if (g.contains("cost_threshold")) gs.kappa = g["cost_threshold"].get<double>();
      if (g.contains("seed")) gs.seed = g["seed"].get<std::uint64_t>();
      if (g.contains("transition_concentration")) {
        gs.transition_concentration = g["transition_concentration"].get<double>();
      }
      if (g.contains("cost_density")) gs.cost_density = g["cost_density"].get<double>();
    }
    if (doc.contains("data")) {
      const auto& d = doc["data"];
      check_keys(d, {"n_samples", "seeds", "n_instances"}, "data");
      if (d.contains("n_samples")) spec.data.n_samples = nonempty_list<std::size_t>(d["n_samples"], "n_samples");
      if (d.contains("seeds")) spec.data.seeds = nonempty_list<std::uint64_t>(d["seeds"], "seeds");
      if (d.contains("n_instances")) spec.data.n_instances = d["n_instances"].get<int>();
    }
    if (doc.contains("wsac")) apply_wsac(doc["wsac"], spec.wsac);
    if (doc.contains("sweep")) {
      const auto& s = doc["sweep"];
      check_keys(s, {"beta", "lambda_ranges", "mix_p"}, "sweep");
      if (s.contains("beta")) spec.sweep.beta = nonempty_list<double>(s["beta"], "beta");
      if (s.contains("lambda_ranges")) {
        if (!s["lambda_ranges"].is_array() || s["lambda_ranges"].empty()) {
          throw ConfigError("spec: grid 'lambda_ranges' is empty");
        }
        for (const auto& r : s["lambda_ranges"]) spec.sweep.lambda_ranges.push_back(schedule_from_json(r));
      }
      if (s.contains("mix_p")) spec.sweep.mix_p = nonempty_list<double>(s["mix_p"], "mix_p");
    }
    if (doc.contains("paths")) {
      const auto& p = doc["paths"];
      check_keys(p, {"cmdp", "dataset", "policy", "behavior"}, "paths");
      if (p.contains("cmdp")) spec.paths.cmdp = p["cmdp"].get<std::string>();
      if (p.contains("dataset")) spec.paths.dataset = p["dataset"].get<std::string>();
      if (p.contains("policy")) spec.paths.policy = p["policy"].get<std::string>();
      if (p.contains("behavior")) spec.paths.behavior = p["behavior"].get<std::string>();
    }
    if (doc.contains("reference")) spec.reference = reference_from_string(doc["reference"].get<std::string>());
    if (doc.contains("outputs")) spec.outputs = doc["outputs"].get<std::string>();
    if (doc.contains("tolerance")) spec.tolerance = doc["tolerance"].get<double>();
    if (doc.contains("timing")) spec.timing = doc["timing"].get<bool>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

ExperimentSpec load_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("spec: cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("spec: " + path.string() + ": " + e.what());
  }
  return spec_from_json(doc);
}

// ---------------------------------------------------------------------------
// Rows

void write_rows_csv(const std::vector<ResultRow>& rows, std::ostream& out) {
  out << kResultHeader << '\n';
  const auto old = out.precision(17);
  for (const auto& r : rows) {
    for (double v : {r.beta, r.lambda_lo, r.lambda_hi, r.mix_p, r.j_r_behavior, r.j_c_behavior, r.j_r_wsac,
                     r.j_c_wsac, r.c_l2_ref, r.regret_audit, r.wall_ms}) {
      if (!std::isfinite(v)) throw NumericalError("result row " + r.run_id + " has a non-finite value");
    }
    out << r.run_id << ',' << r.seed << ',' << r.n << ',' << r.beta << ',' << r.lambda_lo << ',' << r.lambda_hi
        << ',' << r.mix_p << ',' << r.j_r_behavior << ',' << r.j_c_behavior << ',' << r.j_r_wsac << ','
        << r.j_c_wsac << ',' << r.c_l2_ref << ',' << r.regret_audit << ',' << r.wall_ms << '\n';
  }
  out.precision(old);
}

void write_rows_csv(const std::vector<ResultRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  write_rows_csv(rows, out);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Instances and cells

double Instance::normalized_reward(double j_r) const {
  const double span = r_max - r_min;
  return span > 1e-12 ? (j_r - r_min) / span : 0.0;
}

double Instance::normalized_cost(double j_c) const {
  // Stored costs are shifted by kappa; J of the constant kappa is kappa.
  const double raw = j_c + kappa;
  return kappa > 0.0 ? raw / kappa : raw;
}

Instance make_instance(const GeneratorSpec& base, int index) {
  GeneratorSpec g = base;
  g.seed = base.seed + static_cast<std::uint64_t>(index);
  GeneratedInstance gen = generate_feasible(g);
  const double r_min = optimal_unconstrained_j(gen.cmdp, Signal::kReward, false);
  const double r_max = optimal_unconstrained_j(gen.cmdp, Signal::kReward, true);
  return Instance{index, std::move(gen.cmdp), std::move(gen.optimal_safe), gen.seed_used, r_min, r_max, base.kappa};
}

Instance instance_from_cmdp(Cmdp cmdp) {
  Policy opt = solve_optimal_safe(cmdp);
  const double r_min = optimal_unconstrained_j(cmdp, Signal::kReward, false);
  const double r_max = optimal_unconstrained_j(cmdp, Signal::kReward, true);
  const double kappa = cmdp.metadata().kappa.value_or(0.0);
  const std::uint64_t seed = cmdp.metadata().seed.value_or(0);
  return Instance{0, std::move(cmdp), std::move(opt), seed, r_min, r_max, kappa};
}

std::uint64_t dataset_seed(std::uint64_t instance_seed, std::uint64_t data_seed, std::size_t n) {
  std::uint64_t h = CounterRng::mix(instance_seed + CounterRng::kGolden);
  h = CounterRng::mix(h ^ (data_seed + 2 * CounterRng::kGolden));
  return CounterRng::mix(h ^ (static_cast<std::uint64_t>(n) + 3 * CounterRng::kGolden));
}

CellResult run_cell(const Instance& inst, const Cell& cell, bool timing) {
  const auto t0 = std::chrono::steady_clock::now();
  const Cmdp& cmdp = inst.cmdp;
  const Policy behavior =
      mixture_behavior(inst.optimal_safe, Policy::uniform(cmdp.n_states(), cmdp.n_actions()), cell.mix_p);
  const ValueBundle v_mu = policy_eval(cmdp, behavior);

  WsacConfig cfg = cell.cfg;
  cfg.seed = cell.data_seed;
  std::optional<Dataset> data;
  if (cfg.mode == RunMode::kEmpirical) {
    data = sample_dataset(cmdp, behavior, cell.n, dataset_seed(inst.seed_used, cell.data_seed, cell.n));
  }

  Policy pi_ref = behavior;
  switch (cell.reference) {
    case ReferenceKind::kBehaviorClone:
      if (!data) throw ConfigError("run_cell: a behavior-cloned reference needs empirical mode");
      pi_ref = behavior_clone(*data, cmdp.n_states(), cmdp.n_actions());
      break;
    case ReferenceKind::kBehavior:
      break;
    case ReferenceKind::kOptimalSafe:
      pi_ref = inst.optimal_safe;
      break;
  }

  WsacResult result = data ? run_wsac(*data, pi_ref, cfg) : run_wsac_exact(cmdp, behavior, pi_ref, cfg);
  if (!result.trace.coverage_warning.empty()) log::info() << cell.run_id << ": " << result.trace.coverage_warning << '\n';

  CellResult out;
  const auto& members = result.policy.members();
  out.iterate_j_r.reserve(members.size());
  out.iterate_j_c.reserve(members.size());
  double sum_r = 0.0;
  double sum_c = 0.0;
  for (const auto& m : members) {
    const ValueBundle v = policy_eval(cmdp, m);
    out.iterate_j_r.push_back(v.j_r);
    out.iterate_j_c.push_back(v.j_c);
    sum_r += v.j_r;
    sum_c += v.j_c;
  }
  const double count = static_cast<double>(members.size());
  const ValueBundle v_ref = policy_eval(cmdp, pi_ref);
  out.j_r_ref = v_ref.j_r;
  out.j_c_ref = v_ref.j_c;

  const Occupancy occ_mu = occupancy(cmdp, behavior);
  const Occupancy occ_ref = occupancy(cmdp, pi_ref);
  double c_l2 = -1.0;
  try {
    c_l2 = concentrability(occ_ref, occ_mu);
  } catch (const CoverageError&) {
  }

  ResultRow& row = out.row;
  row.run_id = cell.run_id;
  row.seed = cell.data_seed;
  row.n = data ? cell.n : 0;
  row.beta = cfg.beta;
  row.lambda_lo = cfg.lambda_schedule ? cfg.lambda_schedule->lo : cfg.lambda;
  row.lambda_hi = cfg.lambda_schedule ? cfg.lambda_schedule->hi : cfg.lambda;
  row.mix_p = cell.mix_p;
  row.j_r_behavior = v_mu.j_r;
  row.j_c_behavior = v_mu.j_c;
  row.j_r_wsac = sum_r / count;
  row.j_c_wsac = sum_c / count;
  row.c_l2_ref = c_l2;
  row.regret_audit = regret_audit(result.trace.payoffs, members, pi_ref, occ_ref);
  row.wall_ms =
      timing ? std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count() : 0.0;
  log::debug() << cell.run_id << ": J_r " << row.j_r_wsac << " (behavior " << row.j_r_behavior << "), J_c "
               << row.j_c_wsac << " (behavior " << row.j_c_behavior << ")\n";
  return out;
}

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& f) {
  if (workers < 1) throw ConfigError("workers must be >= 1");
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(workers), std::max<std::size_t>(count, 1));
  if (n_threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace {

std::vector<Instance> make_instances(const GeneratorSpec& generator, int count, int workers) {
  std::vector<std::optional<Instance>> slots(static_cast<std::size_t>(count));
  parallel_for(slots.size(), workers,
               [&](std::size_t i) { slots[i] = make_instance(generator, static_cast<int>(i)); });
  std::vector<Instance> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

std::vector<CellResult> run_cells_on(const std::vector<Instance>& instances, const std::vector<Cell>& cells,
                                     int workers, bool timing) {
  std::vector<CellResult> results(cells.size());
  std::atomic<std::size_t> done{0};
  std::mutex log_mutex;
  parallel_for(cells.size(), workers, [&](std::size_t i) {
    results[i] = run_cell(instances.at(static_cast<std::size_t>(cells[i].instance)), cells[i], timing);
    const auto finished = ++done;
    std::lock_guard<std::mutex> lock(log_mutex);
    log::info() << "[" << finished << "/" << cells.size() << "] " << cells[i].run_id << '\n';
  });
  return results;
}

int max_instance(const std::vector<Cell>& cells) {
  int hi = -1;
  for (const auto& c : cells) hi = std::max(hi, c.instance);
  return hi + 1;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

template <class T>
std::vector<T> or_default(const std::vector<T>& given, std::vector<T> fallback) {
  return given.empty() ? std::move(fallback) : given;
}

int instances_or(const ExperimentSpec& spec, int fallback) {
  return spec.data.n_instances > 0 ? spec.data.n_instances : fallback;
}

std::vector<std::uint64_t> seed_range(std::uint64_t count) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t i = 0; i < count; ++i) out.push_back(i);
  return out;
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {};
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - m) * (x - m);
  // Sample standard deviation; zero for a single observation.
  const double sd = xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0;
  return {m, sd};
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out.precision(17);
  return out;
}

double positive_part(double x) { return std::max(x, 0.0); }

}  // namespace

std::vector<CellResult> run_cells(const GeneratorSpec& generator, const std::vector<Cell>& cells, int workers,
                                  bool timing) {
  const auto instances = make_instances(generator, max_instance(cells), workers);
  return run_cells_on(instances, cells, workers, timing);
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("fit_line: need at least two paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw ConfigError("fit_line: x values are all equal");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (x.size() > 2) {
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double e = y[i] - fit.intercept - fit.slope * x[i];
      sse += e * e;
    }
    fit.slope_se = std::sqrt(sse / (n - 2.0) / sxx);
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Figure 1: behavior quality sweep

Figure1Report run_figure1(const ExperimentSpec& spec, int workers) {
  spec.validate();
  const auto ps = or_default(spec.sweep.mix_p, {0.0, 0.25, 0.5, 0.75, 1.0});
  const auto ns = or_default(spec.data.n_samples, {20000});
  const auto seeds = or_default(spec.data.seeds, {0, 1, 2});
  const auto betas = or_default(spec.sweep.beta, {spec.wsac.beta});
  const int n_inst = instances_or(spec, 5);
  const auto ref = spec.reference.value_or(ReferenceKind::kBehaviorClone);

  std::vector<Cell> cells;
  for (int i = 0; i < n_inst; ++i) {
    for (double p : ps) {
      for (double beta : betas) {
        for (auto n : ns) {
          for (auto seed : seeds) {
            Cell c;
            c.run_id = "figure1/i" + std::to_string(i) + "/p" + fmt(p) + "/b" + fmt(beta) + "/n" + std::to_string(n) +
                       "/s" + std::to_string(seed);
            c.instance = i;
            c.data_seed = seed;
            c.n = n;
            c.mix_p = p;
            c.reference = ref;
            c.cfg = spec.wsac;
            c.cfg.beta = beta;
            cells.push_back(std::move(c));
          }
        }
      }
    }
  }
  Figure1Report report;
  report.instances = make_instances(spec.generator, n_inst, workers);
  report.cells = run_cells_on(report.instances, cells, workers, spec.timing);
  return report;
}

void write_figure1(const Figure1Report& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<ResultRow> rows;
  for (const auto& c : report.cells) rows.push_back(c.row);
  write_rows_csv(rows, dir / "figure1.csv");

  // Mean normalized values per p, averaged over instances and seeds.
  std::map<double, std::vector<std::array<double, 4>>> by_p;
  for (std::size_t i = 0; i < report.cells.size(); ++i) {
    const auto& r = report.cells[i].row;
    const int inst = std::stoi(r.run_id.substr(r.run_id.find("/i") + 2));
    const Instance& in = report.instances.at(static_cast<std::size_t>(inst));
    by_p[r.mix_p].push_back({in.normalized_reward(r.j_r_behavior), in.normalized_reward(r.j_r_wsac),
                             in.normalized_cost(r.j_c_behavior), in.normalized_cost(r.j_c_wsac)});
  }
  auto out = open_csv(dir / "figure1_summary.csv");
  out << "mix_p,reward_behavior,reward_wsac,cost_behavior,cost_wsac,runs\n";
  svg::Series rb{"behavior", {}, {}}, rw{"WSAC", {}, {}}, cb{"behavior", {}, {}}, cw{"WSAC", {}, {}},
      budget{"budget", {}, {}};
  for (const auto& [p, vals] : by_p) {
    std::array<double, 4> m{};
    for (const auto& v : vals) {
      for (int j = 0; j < 4; ++j) m[j] += v[j] / static_cast<double>(vals.size());
    }
    out << p << ',' << m[0] << ',' << m[1] << ',' << m[2] << ',' << m[3] << ',' << vals.size() << '\n';
    for (auto* s : {&rb, &rw, &cb, &cw, &budget}) s->x.push_back(p);
    rb.y.push_back(m[0]);
    rw.y.push_back(m[1]);
    cb.y.push_back(m[2]);
    cw.y.push_back(m[3]);
    budget.y.push_back(1.0);
  }
  svg::write_line_chart(dir / "figure1_reward.svg", {rb, rw},
                        {"Normalized reward vs behavior quality", "mixture p", "normalized reward"});
  svg::write_line_chart(dir / "figure1_cost.svg", {cb, cw, budget},
                        {"Normalized cost vs behavior quality", "mixture p", "cost / budget"});
}

// ---------------------------------------------------------------------------
// Ablation

AblationReport run_ablation(const ExperimentSpec& spec, int workers) {
  spec.validate();
  const auto ns = or_default(spec.data.n_samples, {20000});
  const auto seeds = or_default(spec.data.seeds, {0});
  const double p = spec.sweep.mix_p.empty() ? 0.5 : spec.sweep.mix_p.front();
  const int n_inst = instances_or(spec, 10);
  const auto ref = spec.reference.value_or(ReferenceKind::kBehaviorClone);
  if (static_cast<std::size_t>(n_inst) * seeds.size() * ns.size() < 10) {
    throw ConfigError("ablation: need at least 10 runs per configuration");
  }

  AblationReport report;
  report.configs = {"ALL", "no_oracle", "no_hinge", "beta0"};
  std::vector<Cell> cells;
  for (int i = 0; i < n_inst; ++i) {
    for (const auto& name : report.configs) {
      for (auto n : ns) {
        for (auto seed : seeds) {
          Cell c;
          c.run_id = "ablation/" + name + "/i" + std::to_string(i) + "/n" + std::to_string(n) + "/s" +
                     std::to_string(seed);
          c.instance = i;
          c.data_seed = seed;
          c.n = n;
          c.mix_p = p;
          c.reference = ref;
          c.cfg = spec.wsac;
          if (name == "no_oracle") c.cfg.actor = ActorUpdate::kGreedy;
          if (name == "no_hinge") c.cfg.payoff_rule = PayoffRule::kLagrangian;
          if (name == "beta0") c.cfg.beta = 0.0;
          cells.push_back(std::move(c));
        }
      }
    }
  }
  const auto instances = make_instances(spec.generator, n_inst, workers);
  report.cells = run_cells_on(instances, cells, workers, spec.timing);

  const std::size_t per_config = ns.size() * seeds.size();
  report.instance_cost.assign(static_cast<std::size_t>(n_inst), std::vector<double>(report.configs.size(), 0.0));
  std::vector<std::vector<double>> rewards(report.configs.size()), costs(report.configs.size());
  std::size_t idx = 0;
  for (int i = 0; i < n_inst; ++i) {
    const Instance& inst = instances[static_cast<std::size_t>(i)];
    for (std::size_t c = 0; c < report.configs.size(); ++c) {
      double cost_sum = 0.0;
      for (std::size_t r = 0; r < per_config; ++r, ++idx) {
        const auto& row = report.cells[idx].row;
        rewards[c].push_back(inst.normalized_reward(row.j_r_wsac));
        costs[c].push_back(inst.normalized_cost(row.j_c_wsac));
        cost_sum += costs[c].back();
      }
      report.instance_cost[static_cast<std::size_t>(i)][c] = cost_sum / static_cast<double>(per_config);
    }
    if (report.instance_cost[static_cast<std::size_t>(i)][3] > report.instance_cost[static_cast<std::size_t>(i)][0]) {
      ++report.beta0_costlier;
    }
  }
  for (std::size_t c = 0; c < report.configs.size(); ++c) {
    const auto r = mean_std(rewards[c]);
    const auto k = mean_std(costs[c]);
    report.summary.push_back({report.configs[c], r.mean, r.std, k.mean, k.std, static_cast<int>(rewards[c].size())});
  }
  return report;
}

void write_ablation(const AblationReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<ResultRow> rows;
  for (const auto& c : report.cells) rows.push_back(c.row);
  write_rows_csv(rows, dir / "ablation.csv");
  {
    auto out = open_csv(dir / "ablation_summary.csv");
    out << "config,reward_mean,reward_std,cost_mean,cost_std,runs\n";
    for (const auto& s : report.summary) {
      out << s.config << ',' << s.reward_mean << ',' << s.reward_std << ',' << s.cost_mean << ',' << s.cost_std
          << ',' << s.runs << '\n';
    }
  }
  auto out = open_csv(dir / "ablation_instances.csv");
  out << "instance";
  for (const auto& c : report.configs) out << ",cost_" << c;
  out << ",beta0_costlier\n";
  for (std::size_t i = 0; i < report.instance_cost.size(); ++i) {
    out << i;
    for (double v : report.instance_cost[i]) out << ',' << v;
    out << ',' << (report.instance_cost[i][3] > report.instance_cost[i][0] ? 1 : 0) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Sensitivity

SensitivityReport run_sensitivity(const ExperimentSpec& spec, int workers) {
  spec.validate();
  const auto betas = or_default(spec.sweep.beta, {1.0, 0.5, 0.05});
  const auto ranges = or_default(spec.sweep.lambda_ranges, {{0.0, 1.0}, {0.0, 2.0}, {1.0, 2.0}});
  const auto ns = or_default(spec.data.n_samples, {20000});
  const auto seeds = or_default(spec.data.seeds, {0, 1, 2});
  const double p = spec.sweep.mix_p.empty() ? 1.0 : spec.sweep.mix_p.front();
  const int n_inst = instances_or(spec, 1);
  const auto ref = spec.reference.value_or(ReferenceKind::kBehaviorClone);

  std::vector<Cell> cells;
  std::vector<std::size_t> setting_of;
  SensitivityReport report;
  for (double beta : betas) {
    for (const auto& range : ranges) {
      SensitivitySetting s;
      s.beta = beta;
      s.lambda = range;
      report.settings.push_back(s);
      for (int i = 0; i < n_inst; ++i) {
        for (auto n : ns) {
          for (auto seed : seeds) {
            Cell c;
            c.run_id = "sensitivity/b" + fmt(beta) + "/l" + fmt(range.lo) + "-" + fmt(range.hi) + "/i" +
                       std::to_string(i) + "/n" + std::to_string(n) + "/s" + std::to_string(seed);
            c.instance = i;
            c.data_seed = seed;
            c.n = n;
            c.mix_p = p;
            c.reference = ref;
            c.cfg = spec.wsac;
            c.cfg.beta = beta;
            c.cfg.lambda_schedule = range;
            cells.push_back(std::move(c));
            setting_of.push_back(report.settings.size() - 1);
          }
        }
      }
    }
  }
  const auto instances = make_instances(spec.generator, n_inst, workers);
  report.cells = run_cells_on(instances, cells, workers, spec.timing);

  const double v_max = 1.0 / (1.0 - spec.generator.gamma);
  for (std::size_t j = 0; j < report.cells.size(); ++j) {
    const auto& cell = report.cells[j];
    const auto& row = cell.row;
    const Instance& inst = instances.at(static_cast<std::size_t>(cells[j].instance));
    // Flags use exact values only.
    const bool flag = positive_part(row.j_c_wsac) >
                      positive_part(row.j_c_behavior) + v_max / row.lambda_hi + spec.tolerance;
    report.flags.push_back(flag);
    auto& s = report.settings[setting_of[j]];
    s.reward_mean += inst.normalized_reward(row.j_r_wsac);
    s.cost_mean += inst.normalized_cost(row.j_c_wsac);
    s.flagged += flag ? 1 : 0;
    s.runs += 1;
    const auto k = cell.iterate_j_r.size();
    if (s.reward_curve.empty()) {
      s.reward_curve.assign(k, 0.0);
      s.cost_curve.assign(k, 0.0);
    }
    double run_r = 0.0;
    double run_c = 0.0;
    for (std::size_t t = 0; t < k; ++t) {
      run_r += cell.iterate_j_r[t];
      run_c += cell.iterate_j_c[t];
      const double denom = static_cast<double>(t + 1);
      s.reward_curve[t] += inst.normalized_reward(run_r / denom);
      s.cost_curve[t] += inst.normalized_cost(run_c / denom);
    }
  }
  for (auto& s : report.settings) {
    const double runs = static_cast<double>(std::max(s.runs, 1));
    s.reward_mean /= runs;
    s.cost_mean /= runs;
    for (auto& v : s.reward_curve) v /= runs;
    for (auto& v : s.cost_curve) v /= runs;
  }
  return report;
}

void write_sensitivity(const SensitivityReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<ResultRow> rows;
  for (const auto& c : report.cells) rows.push_back(c.row);
  write_rows_csv(rows, dir / "sensitivity.csv");
  {
    auto out = open_csv(dir / "sensitivity_summary.csv");
    out << "beta,lambda_lo,lambda_hi,reward_mean,cost_mean,flagged,runs\n";
    for (const auto& s : report.settings) {
      out << s.beta << ',' << s.lambda.lo << ',' << s.lambda.hi << ',' << s.reward_mean << ',' << s.cost_mean << ','
          << s.flagged << ',' << s.runs << '\n';
    }
  }
  auto out = open_csv(dir / "sensitivity_curves.csv");
  out << "beta,lambda_lo,lambda_hi,k,reward,cost\n";
  std::vector<svg::Series> reward_series;
  std::vector<svg::Series> cost_series;
  for (const auto& s : report.settings) {
    const std::string name = "b=" + fmt(s.beta) + " l=[" + fmt(s.lambda.lo) + "," + fmt(s.lambda.hi) + "]";
    svg::Series r{name, {}, {}}, c{name, {}, {}};
    for (std::size_t t = 0; t < s.reward_curve.size(); ++t) {
      out << s.beta << ',' << s.lambda.lo << ',' << s.lambda.hi << ',' << t + 1 << ',' << s.reward_curve[t] << ','
          << s.cost_curve[t] << '\n';
      r.x.push_back(static_cast<double>(t + 1));
      r.y.push_back(s.reward_curve[t]);
      c.x.push_back(static_cast<double>(t + 1));
      c.y.push_back(s.cost_curve[t]);
    }
    reward_series.push_back(std::move(r));
    cost_series.push_back(std::move(c));
  }
  svg::write_line_chart(dir / "sensitivity_reward.svg", reward_series,
                        {"Normalized reward of the running mixture", "iteration k", "normalized reward"});
  svg::write_line_chart(dir / "sensitivity_cost.svg", cost_series,
                        {"Normalized cost of the running mixture", "iteration k", "cost / budget"});
}

// ---------------------------------------------------------------------------
// Statistical rate

RateReport run_rate(const ExperimentSpec& spec, int workers) {
  spec.validate();
  const auto ns = or_default(spec.data.n_samples, {500, 2000, 8000, 32000});
  const auto seeds = or_default(spec.data.seeds, seed_range(20));
  const double p = spec.sweep.mix_p.empty() ? 0.5 : spec.sweep.mix_p.front();
  const int n_inst = instances_or(spec, 1);
  const auto ref = spec.reference.value_or(ReferenceKind::kOptimalSafe);
  if (ns.size() < 3) throw ConfigError("rate: need at least 3 sample sizes");
  const auto [lo, hi] = std::minmax_element(ns.begin(), ns.end());
  if (*hi < 16 * *lo) throw ConfigError("rate: the N grid must span at least 16x");
  if (spec.wsac.mode != RunMode::kEmpirical) throw ConfigError("rate: needs empirical mode");

  std::vector<Cell> cells;
  for (auto n : ns) {
    for (int i = 0; i < n_inst; ++i) {
      for (auto seed : seeds) {
        Cell c;
        c.run_id = "rate/n" + std::to_string(n) + "/i" + std::to_string(i) + "/s" + std::to_string(seed);
        c.instance = i;
        c.data_seed = seed;
        c.n = n;
        c.mix_p = p;
        c.reference = ref;
        c.cfg = spec.wsac;
        cells.push_back(std::move(c));
      }
    }
  }
  std::vector<Cell> population;
  for (int i = 0; i < n_inst; ++i) {
    Cell c;
    c.run_id = "rate/population/i" + std::to_string(i);
    c.instance = i;
    c.mix_p = p;
    c.reference = ref == ReferenceKind::kBehaviorClone ? ReferenceKind::kBehavior : ref;
    c.cfg = spec.wsac;
    c.cfg.mode = RunMode::kExact;
    population.push_back(std::move(c));
  }
  const auto instances = make_instances(spec.generator, n_inst, workers);
  RateReport report;
  report.cells = run_cells_on(instances, cells, workers, spec.timing);
  for (const auto& c : run_cells_on(instances, population, workers, spec.timing)) {
    report.population_subopt += (c.j_r_ref - c.row.j_r_wsac) / static_cast<double>(n_inst);
  }

  const std::size_t per_n = static_cast<std::size_t>(n_inst) * seeds.size();
  std::vector<double> log_n;
  std::vector<double> log_s;
  std::vector<double> log_excess;
  bool all_positive = true;
  for (std::size_t j = 0; j < ns.size(); ++j) {
    std::vector<double> subs;
    for (std::size_t r = 0; r < per_n; ++r) {
      const auto& c = report.cells[j * per_n + r];
      subs.push_back(c.j_r_ref - c.row.j_r_wsac);
    }
    const auto ms = mean_std(subs);
    report.points.push_back({ns[j], ms.mean, ms.std, static_cast<int>(subs.size())});
    log_n.push_back(std::log(static_cast<double>(ns[j])));
    if (ms.mean > 0.0) {
      log_s.push_back(std::log(ms.mean));
    } else {
      all_positive = false;
    }
    const double excess = ms.mean - report.population_subopt;
    if (excess > 0.0) log_excess.push_back(std::log(excess));
  }
  if (log_excess.size() == log_n.size()) {
    const auto fit = fit_line(log_n, log_excess);
    report.excess_slope = fit.slope;
    report.excess_slope_se = fit.slope_se;
  } else {
    report.excess_slope = report.excess_slope_se = std::nan("");
  }
  if (all_positive) {
    const auto fit = fit_line(log_n, log_s);
    report.slope = fit.slope;
    report.intercept = fit.intercept;
    report.slope_se = fit.slope_se;
  } else {
    log::error() << "rate: mean suboptimality is not positive at every N; slope undefined\n";
    report.slope = report.intercept = report.slope_se = std::nan("");
  }
  return report;
}

void write_rate(const RateReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<ResultRow> rows;
  for (const auto& c : report.cells) rows.push_back(c.row);
  write_rows_csv(rows, dir / "rate.csv");
  {
    auto out = open_csv(dir / "rate_summary.csv");
    out << "n,subopt_mean,subopt_std,runs\n";
    for (const auto& pt : report.points) {
      out << pt.n << ',' << pt.subopt_mean << ',' << pt.subopt_std << ',' << pt.runs << '\n';
    }
  }
  {
    auto out = open_csv(dir / "rate_fit.csv");
    out << "slope,intercept,slope_se,population_subopt,excess_slope,excess_slope_se\n"
        << report.slope << ',' << report.intercept << ',' << report.slope_se << ',' << report.population_subopt
        << ',' << report.excess_slope << ',' << report.excess_slope_se << '\n';
  }
  svg::Series measured{"mean suboptimality", {}, {}};
  svg::Series fitted{"fit", {}, {}};
  for (const auto& pt : report.points) {
    measured.x.push_back(static_cast<double>(pt.n));
    measured.y.push_back(pt.subopt_mean);
    if (std::isfinite(report.slope)) {
      fitted.x.push_back(static_cast<double>(pt.n));
      fitted.y.push_back(std::exp(report.intercept + report.slope * std::log(static_cast<double>(pt.n))));
    }
  }
  svg::write_line_chart(dir / "rate.svg", {measured, fitted},
                        {"Suboptimality vs dataset size (slope " + fmt(report.slope) + ")", "N",
                         "J_r(pi_ref) - J_r(mixture)", true, true});
}

}  // namespace wsac
