#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "wsac/experiments.hpp"
#include "wsac/log.hpp"
#include "wsac/serialize.hpp"

namespace fs = std::filesystem;
using namespace wsac;

namespace {

struct CommonOptions {
  std::string spec_path;
  std::string out_dir;
  int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::optional<std::uint64_t> seed;
};

struct Context {
  ExperimentSpec spec;
  fs::path out;
  int workers = 1;
};

Context resolve(const CommonOptions& opts) {
  Context ctx;
  ctx.spec = opts.spec_path.empty() ? ExperimentSpec{} : load_spec(opts.spec_path);
  if (opts.seed) ctx.spec.generator.seed = *opts.seed;
  ctx.spec.validate();
  ctx.out = opts.out_dir.empty() ? ctx.spec.outputs : fs::path(opts.out_dir);
  ctx.workers = opts.workers;
  if (ctx.workers < 1) throw ConfigError("--workers must be >= 1");
  fs::create_directories(ctx.out);
  return ctx;
}

Instance load_or_generate(const ExperimentSpec& spec) {
  if (spec.paths.cmdp) return instance_from_cmdp(load_cmdp(*spec.paths.cmdp));
  return make_instance(spec.generator, 0);
}

double first_p(const ExperimentSpec& spec) { return spec.sweep.mix_p.empty() ? 0.5 : spec.sweep.mix_p.front(); }

Policy behavior_of(const ExperimentSpec& spec, const Instance& inst) {
  if (spec.paths.behavior) {
    std::ifstream in(*spec.paths.behavior);
    if (!in) throw ConfigError("cannot open " + spec.paths.behavior->string());
    return policy_from_json(nlohmann::json::parse(in));
  }
  const Cmdp& m = inst.cmdp;
  return mixture_behavior(inst.optimal_safe, Policy::uniform(m.n_states(), m.n_actions()), first_p(spec));
}

void write_json(const fs::path& path, const nlohmann::json& doc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << doc.dump(1) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::size_t first_n(const ExperimentSpec& spec) {
  return spec.data.n_samples.empty() ? 20000 : spec.data.n_samples.front();
}

std::uint64_t first_seed(const ExperimentSpec& spec) {
  return spec.data.seeds.empty() ? 0 : spec.data.seeds.front();
}

void cmd_gen_cmdp(const Context& ctx) {
  const Instance inst = make_instance(ctx.spec.generator, 0);
  save_cmdp(inst.cmdp, ctx.out / "cmdp.json");
  write_json(ctx.out / "optimal_policy.json", policy_to_json(inst.optimal_safe));
  log::info() << "gen-cmdp: seed " << inst.seed_used << " written to " << (ctx.out / "cmdp.json") << '\n';
}

void cmd_gen_data(const Context& ctx) {
  const Instance inst = load_or_generate(ctx.spec);
  const Policy behavior = behavior_of(ctx.spec, inst);
  write_json(ctx.out / "behavior.json", policy_to_json(behavior));
  const auto ns = ctx.spec.data.n_samples.empty() ? std::vector<std::size_t>{20000} : ctx.spec.data.n_samples;
  const auto seeds = ctx.spec.data.seeds.empty() ? std::vector<std::uint64_t>{0} : ctx.spec.data.seeds;
  std::vector<std::pair<std::size_t, std::uint64_t>> jobs;
  for (auto n : ns) {
    for (auto s : seeds) jobs.emplace_back(n, s);
  }
  parallel_for(jobs.size(), ctx.workers, [&](std::size_t i) {
    const auto [n, s] = jobs[i];
    const Dataset data = sample_dataset(inst.cmdp, behavior, n, dataset_seed(inst.seed_used, s, n));
    save_dataset(data, ctx.out / ("data_n" + std::to_string(n) + "_s" + std::to_string(s) + ".jsonl"));
  });
}

void cmd_train(const Context& ctx) {
  const ExperimentSpec& spec = ctx.spec;
  const Instance inst = load_or_generate(spec);
  const Policy behavior = behavior_of(spec, inst);
  if (spec.wsac.mode != RunMode::kEmpirical) throw ConfigError("train: only empirical mode reads a dataset");
  const Dataset data = spec.paths.dataset
                           ? load_dataset(*spec.paths.dataset)
                           : sample_dataset(inst.cmdp, behavior, first_n(spec),
                                            dataset_seed(inst.seed_used, first_seed(spec), first_n(spec)));
  Policy pi_ref = behavior;
  switch (spec.reference.value_or(ReferenceKind::kBehaviorClone)) {
    case ReferenceKind::kBehaviorClone:
      pi_ref = behavior_clone(data, inst.cmdp.n_states(), inst.cmdp.n_actions());
      break;
    case ReferenceKind::kBehavior:
      break;
    case ReferenceKind::kOptimalSafe:
      pi_ref = inst.optimal_safe;
      break;
  }
  WsacConfig cfg = spec.wsac;
  cfg.seed = first_seed(spec);
  const WsacResult result = run_wsac(data, pi_ref, cfg);
  write_json(ctx.out / "policy.json", mixture_to_json(result.policy));
  write_json(ctx.out / "reference_policy.json", policy_to_json(pi_ref));
  std::ofstream trace(ctx.out / "trace.csv");
  if (!trace) throw std::runtime_error("cannot open trace.csv");
  write_trace_csv(result.trace, trace);
  log::info() << "train: " << cfg.k << " iterations on " << data.size() << " transitions\n";
}

void cmd_eval(const Context& ctx) {
  const ExperimentSpec& spec = ctx.spec;
  const Instance inst = load_or_generate(spec);
  const Policy behavior = behavior_of(spec, inst);
  const fs::path policy_path = spec.paths.policy.value_or(ctx.out / "policy.json");
  std::ifstream in(policy_path);
  if (!in) throw ConfigError("eval: cannot open " + policy_path.string());
  const nlohmann::json doc = nlohmann::json::parse(in);
  const MixturePolicy mix = doc.contains("members") ? mixture_from_json(doc)
                                                    : MixturePolicy({policy_from_json(doc)});
  const ValueBundle vb = policy_eval(inst.cmdp, behavior);
  const ValueBundle vm = mixture_eval(inst.cmdp, mix);
  std::ofstream out(ctx.out / "eval.csv");
  if (!out) throw std::runtime_error("cannot open eval.csv");
  out.precision(17);
  out << "policy,j_r,j_c,reward_norm,cost_norm,safe\n";
  for (const auto& [name, v] : {std::pair{"behavior", vb}, std::pair{"wsac", vm}}) {
    out << name << ',' << v.j_r << ',' << v.j_c << ',' << inst.normalized_reward(v.j_r) << ','
        << inst.normalized_cost(v.j_c) << ',' << (v.j_c <= 0.0 ? 1 : 0) << '\n';
  }
  std::cout << "behavior J_r " << vb.j_r << " J_c " << vb.j_c << "\nwsac     J_r " << vm.j_r << " J_c " << vm.j_c
            << '\n';
}

void cmd_figure1(const Context& ctx) { write_figure1(run_figure1(ctx.spec, ctx.workers), ctx.out); }

void cmd_ablation(const Context& ctx) {
  const auto report = run_ablation(ctx.spec, ctx.workers);
  write_ablation(report, ctx.out);
  for (const auto& s : report.summary) {
    std::cout << s.config << ": reward " << s.reward_mean << " +- " << s.reward_std << ", cost " << s.cost_mean
              << " +- " << s.cost_std << " (" << s.runs << " runs)\n";
  }
  std::cout << "beta=0 costlier than ALL on " << report.beta0_costlier << "/" << report.instance_cost.size()
            << " instances\n";
}

void cmd_sensitivity(const Context& ctx) {
  const auto report = run_sensitivity(ctx.spec, ctx.workers);
  write_sensitivity(report, ctx.out);
  for (const auto& s : report.settings) {
    std::cout << "beta " << s.beta << " lambda [" << s.lambda.lo << "," << s.lambda.hi << "]: reward "
              << s.reward_mean << ", cost " << s.cost_mean << ", flagged " << s.flagged << "/" << s.runs << '\n';
  }
}

void cmd_rate(const Context& ctx) {
  const auto report = run_rate(ctx.spec, ctx.workers);
  write_rate(report, ctx.out);
  for (const auto& p : report.points) {
    std::cout << "N " << p.n << ": suboptimality " << p.subopt_mean << " +- " << p.subopt_std << '\n';
  }
  std::cout << "log-log slope " << report.slope << " (se " << report.slope_se << ")\n";
  std::cout << "population suboptimality " << report.population_subopt << ", excess slope " << report.excess_slope
            << " (se " << report.excess_slope_se << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted safe actor-critic for offline constrained MDPs (tabular)"};
  app.require_subcommand(1);
  CommonOptions opts;
  const std::vector<std::pair<std::string, std::pair<std::string, void (*)(const Context&)>>> commands = {
      {"gen-cmdp", {"Generate a random feasible CMDP", cmd_gen_cmdp}},
      {"gen-data", {"Sample offline datasets from a behavior policy", cmd_gen_data}},
      {"train", {"Run WSAC on one dataset", cmd_train}},
      {"eval", {"Evaluate a trained policy exactly", cmd_eval}},
      {"figure1", {"Behavior-quality sweep", cmd_figure1}},
      {"ablation", {"Component ablation", cmd_ablation}},
      {"sensitivity", {"Beta / lambda sensitivity grid", cmd_sensitivity}},
      {"rate", {"Suboptimality vs dataset size", cmd_rate}},
  };
  void (*selected)(const Context&) = nullptr;
  for (const auto& [name, entry] : commands) {
    auto* sub = app.add_subcommand(name, entry.first);
    sub->add_option("--spec", opts.spec_path, "Experiment spec (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--out", opts.out_dir, "Output directory");
    sub->add_option("--workers", opts.workers, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--seed", opts.seed, "Base generator seed (overrides the spec)");
    auto fn = entry.second;
    sub->callback([&selected, fn] { selected = fn; });
  }
  CLI11_PARSE(app, argc, argv);
  try {
    const Context ctx = resolve(opts);
    selected(ctx);
  } catch (const std::exception& e) {
    log::error() << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
