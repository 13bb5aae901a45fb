// Command-line front end. Exit codes: 0 ok, 1 usage / configuration / IO
// error, 2 an invariant or check failed.

#include "twochoice/adversaries.hpp"
#include "twochoice/engine.hpp"
#include "twochoice/errors.hpp"
#include "twochoice/experiment.hpp"
#include "twochoice/marble.hpp"
#include "twochoice/reinsertion.hpp"
#include "twochoice/rng.hpp"
#include "twochoice/script.hpp"
#include "twochoice/stats.hpp"
#include "twochoice/stonegame.hpp"
#include "twochoice/strategies.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>

using namespace twochoice;
using nlohmann::json;

namespace {

constexpr int kInvariantFailed = 2;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  return out;
}

int cmd_run(const std::string& config_path, const std::string& output_dir, bool sweep,
            const std::vector<std::int64_t>& ms, const std::vector<std::size_t>& ns) {
  ExperimentConfig cfg = ExperimentConfig::load(config_path);
  if (!output_dir.empty()) cfg.output_dir = output_dir;
  if (!ms.empty()) cfg.m = ms;
  if (!ns.empty()) cfg.n = ns;
  if (!sweep && sweep_points(cfg).size() != 1)
    throw ConfigError("run takes a single (n, m) point; use sweep for lists");
  const SummaryStats s = run_experiment(cfg);
  std::cout << summary_to_json(s).dump(2) << '\n';
  return 0;
}

struct CoupleArgs {
  std::size_t n = 8;
  std::int64_t m = 4096;
  std::string variant = "fixed";
  std::uint64_t scripts = 1;
  std::uint64_t ops = 100'000;
  double insert_prob = 0.55;
  std::uint64_t seed = 1;
  double c = 4.0;
  double epsilon = 0.25;
  std::size_t enumeration_every = 1000;
  std::string csv;
};

int cmd_couple(const CoupleArgs& a) {
  CouplingConfig cfg;
  cfg.n = a.n;
  cfg.m = a.m;
  cfg.variant = a.variant == "generalized" ? StoneVariant::Generalized : StoneVariant::Fixed;
  if (a.variant != "fixed" && a.variant != "generalized") throw ConfigError("variant is fixed or generalized");
  cfg.modulated.c = a.c;
  cfg.generalized.c = a.c;
  cfg.generalized.epsilon = a.epsilon;
  cfg.enumeration_every = a.enumeration_every;
  cfg.record_trace = !a.csv.empty();
  std::uint64_t violations = 0;
  json rows = json::array();
  for (std::uint64_t i = 0; i < a.scripts; ++i) {
    Rng srng = Rng::derive(a.seed, StreamRole::Script, i);
    const auto script = mixed_random(a.m, a.ops, a.insert_prob, srng);
    const CouplingReport rep = coupled_run(script, cfg, a.seed + i);
    violations += rep.violations;
    rows.push_back({{"script", i},
                    {"steps", rep.steps},
                    {"violations", rep.violations},
                    {"first_violation", rep.first_violation_message},
                    {"halted", rep.halted},
                    {"corruptions", rep.corruptions},
                    {"distribution_checks", rep.distribution_checks},
                    {"enumeration_checks", rep.enumeration_checks},
                    {"final_batches", rep.final_batches}});
    if (!a.csv.empty() && i == 0) {
      auto out = open_out(a.csv);
      write_coupled_csv(out, rep, a.n);
    }
  }
  std::cout << json{{"runs", rows}, {"violations", violations}}.dump(2) << '\n';
  return violations == 0 ? 0 : kInvariantFailed;
}

struct GreedyArgs {
  std::string mode = "warmup_quarter";
  std::string strategy = "greedy";
  std::vector<std::int64_t> m{4096};
  std::uint64_t trials = 10;
  std::uint64_t seed = 1;
  double eps1 = 0.125;
  std::int64_t phases = 0;
  std::int64_t finisher_k = 0;
  std::size_t parallelism = 1;
  std::string out_dir;
};

int cmd_attack_greedy(const GreedyArgs& a) {
  ExperimentConfig cfg;
  cfg.name = "attack-greedy";
  cfg.strategy.name = a.strategy;
  cfg.adversary.generator = "greedy_attack";
  cfg.adversary.params = {{"mode", a.mode}, {"eps1", a.eps1}};
  if (a.phases > 0) cfg.adversary.params["phases"] = a.phases;
  if (a.finisher_k > 0) cfg.adversary.params["finisher_k"] = a.finisher_k;
  cfg.n = {4};
  cfg.m = a.m;
  cfg.trials = a.trials;
  cfg.seed = a.seed;
  cfg.parallelism = a.parallelism;
  cfg.output_dir = a.out_dir;
  cfg.validate();
  const SummaryStats s = run_experiment(cfg);
  std::cout << summary_to_json(s).dump(2) << '\n';
  return 0;
}

struct ReinsertionArgs {
  std::int64_t k = 64;
  double c_t = 1.5;
  double tolerance = 1.0;
  std::int64_t m = 0;
  std::int64_t alice_c = 1;
  std::uint64_t seed = 1;
  std::uint64_t block_trials = 0;
  std::int64_t block_m = 0;
  bool rejection = false;
};

int cmd_attack_reinsertion(const ReinsertionArgs& a) {
  ReinsertionAttackParams p;
  p.k = a.k;
  p.c_t = a.c_t;
  p.e_tolerance = a.tolerance;
  p.m = a.m;
  p.alice_c = a.alice_c;
  json out;
  out["event_probability"] = event_probability(p);
  const EventWindow w = event_window(p);
  out["window"] = {{"a12", {w.a12_lo, w.a12_hi}}, {"a34", {w.a34_lo, w.a34_hi}}};
  if (a.rejection) {
    Rng rng = Rng::derive(a.seed, StreamRole::Hash, 7);
    const auto h = sample_AB_rejection(p, rng);
    out["rejection"] = {{"tries", h.tries}, {"a12", h.a12}, {"a34", h.a34}};
  }
  if (a.block_trials > 0) {
    const std::int64_t m = a.block_m > 0 ? a.block_m : 16 * a.k;
    GeneralizedParams gp;
    gp.M = m;
    json trials = json::array();
    double sum = 0.0;
    for (std::uint64_t i = 0; i < a.block_trials; ++i) {
      GeneralizedModulatedGreedyPolicy pol(gp);
      const BlockTrial t = single_block_trial(p, m, pol, a.seed + i);
      sum += static_cast<double>(t.vA - t.vB);
      trials.push_back({{"vA", t.vA}, {"vB", t.vB}, {"vY", t.vY}, {"vZ", t.vZ}, {"a12", t.a12}, {"a34", t.a34}});
    }
    out["block"] = {{"m", m}, {"t", p.t()}, {"mean_gap", sum / static_cast<double>(a.block_trials)},
                    {"trials", trials}};
    std::cout << out.dump(2) << '\n';
    return 0;
  }
  Rng srng = Rng::derive(a.seed, StreamRole::Script);
  const ReinsertionAttack at = build_reinsertion_attack(p, srng);
  GeneralizedParams gp;
  gp.M = p.resolved_m();
  GeneralizedModulatedGreedyPolicy pol(gp);
  const ReinsertionRunReport rep = run_reinsertion_attack(at, pol, a.seed);
  const bool ok = rep.hash_mismatches == 0 && rep.value_bounds_ok && rep.ops == at.script.size();
  out["attack"] = {{"ops", rep.ops},
                   {"predicted_ops", reinsertion_predicted_length(p)},
                   {"splits", at.splits.size()},
                   {"reinsertions", rep.reinsertions},
                   {"hash_mismatches", rep.hash_mismatches},
                   {"value_bounds_ok", rep.value_bounds_ok},
                   {"max_overload", rep.max_overload},
                   {"phase_max_overload", rep.phase_max_overload},
                   {"phase_value_spread", rep.phase_value_spread},
                   {"a12", rep.hashes.a12},
                   {"a34", rep.hashes.a34}};
  std::cout << out.dump(2) << '\n';
  return ok ? 0 : kInvariantFailed;
}

int cmd_marble(std::int64_t R, std::int64_t c, double initial, const std::string& csv) {
  MinimalSlackBob bob(static_cast<double>(R), initial);
  const MarbleReplayReport rep = replay_alice(R, c, bob, !csv.empty());
  if (!csv.empty()) {
    auto out = open_out(csv);
    write_marble_csv(out, rep);
  }
  std::cout << json{{"inserts", rep.inserts},
                    {"splits", rep.splits},
                    {"expected_inserts", alice_insert_count(R, c)},
                    {"expected_splits", alice_split_count(R, c)},
                    {"max_value", rep.max_value},
                    {"first_exceed_step", rep.first_exceed_step ? json(*rep.first_exceed_step) : json(nullptr)},
                    {"final_potential", rep.final_potential},
                    {"min_split_delta", rep.min_split_delta},
                    {"max_bag", rep.max_bag}}
                   .dump(2)
            << '\n';
  return 0;
}

int cmd_dist_check(std::uint64_t samples, const std::vector<std::size_t>& ns, std::uint64_t seed, double c) {
  ModulatedParams params;
  params.c = c;
  const DistCheckReport rep = dist_check(samples, ns, seed, params);
  std::cout << json{{"samples", rep.samples}, {"mismatches", rep.mismatches}, {"bad_sums", rep.bad_sums}}.dump(2)
            << '\n';
  return rep.mismatches == 0 && rep.bad_sums == 0 ? 0 : kInvariantFailed;
}

json quantiles(std::vector<double> xs) {
  return {{"p10", stats::quantile(xs, 0.1)}, {"p50", stats::quantile(xs, 0.5)}, {"p90", stats::quantile(xs, 0.9)},
          {"p99", stats::quantile(xs, 0.99)}, {"max", stats::quantile(xs, 1.0)}};
}

int cmd_gap_overload(std::int64_t k, std::int64_t m, std::uint64_t trials, std::uint64_t seed) {
  std::vector<double> scaled;
  for (std::uint64_t i = 0; i < trials; ++i)
    scaled.push_back(gap_to_overload_trial(k, m, Rng::derive(seed, StreamRole::Game, i).next()).best() /
                     std::sqrt(static_cast<double>(k)));
  std::cout << json{{"k", k}, {"m", m}, {"trials", trials}, {"overload_over_sqrt_k", quantiles(scaled)}}.dump(2)
            << '\n';
  return 0;
}

int cmd_equalize(std::int64_t k, std::int64_t c, std::uint64_t trials, std::uint64_t seed) {
  std::vector<double> scaled;
  std::uint64_t equal = 0;
  for (std::uint64_t i = 0; i < trials; ++i) {
    const auto r = equalization_probe(k, c, Rng::derive(seed, StreamRole::Game, i).next());
    scaled.push_back(static_cast<double>(r.final_spread) / std::log(static_cast<double>(k)));
    equal += r.equal_instant ? 1 : 0;
  }
  std::cout << json{{"k", k}, {"c", c}, {"trials", trials}, {"equal_instant", equal},
                    {"spread_over_ln_k", quantiles(scaled)}}
                   .dump(2)
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic two-choice balls-and-bins laboratory"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  std::string config_path;
  std::string output_dir;
  std::vector<std::int64_t> sweep_m;
  std::vector<std::size_t> sweep_n;
  auto* run = app.add_subcommand("run", "Run one experiment from a JSON config");
  run->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--output-dir", output_dir, "Override output_dir");
  auto* sweep = app.add_subcommand("sweep", "Run an n x m sweep from a JSON config");
  sweep->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  sweep->add_option("-o,--output-dir", output_dir, "Override output_dir");
  sweep->add_option("--m", sweep_m, "Override the m list");
  sweep->add_option("--n", sweep_n, "Override the n list");

  CoupleArgs ca;
  auto* couple = app.add_subcommand("couple", "Verify the stone-game coupling on random scripts");
  couple->add_option("--n", ca.n, "Bins");
  couple->add_option("--m", ca.m, "Capacity (fixed) or bound M (generalized)");
  couple->add_option("--variant", ca.variant, "Stone game variant")->check(CLI::IsMember({"fixed", "generalized"}));
  couple->add_option("--scripts", ca.scripts, "Random scripts");
  couple->add_option("--ops", ca.ops, "Operations per script");
  couple->add_option("--insert-prob", ca.insert_prob, "Insert probability of the mixed scripts");
  couple->add_option("--seed", ca.seed, "Root seed");
  couple->add_option("--c", ca.c, "Slack constant c");
  couple->add_option("--epsilon", ca.epsilon, "Corruption tolerance (generalized)");
  couple->add_option("--enumeration-every", ca.enumeration_every, "Brute-force enumeration period, in inserts");
  couple->add_option("--csv", ca.csv, "Coupled trace of the first script");

  GreedyArgs ga;
  auto* greedy = app.add_subcommand("attack-greedy", "Oblivious attack on Greedy over 4 bins");
  greedy->add_option("--mode", ga.mode, "Construction")->check(CLI::IsMember({"warmup_quarter", "full_half", "general_n"}));
  greedy->add_option("--strategy", ga.strategy, "Strategy under attack");
  greedy->add_option("--m", ga.m, "Capacities to sweep");
  greedy->add_option("--trials", ga.trials, "Trials per m");
  greedy->add_option("--seed", ga.seed, "Root seed");
  greedy->add_option("--eps1", ga.eps1, "Gadget size as a fraction of m");
  greedy->add_option("--phases", ga.phases, "full_half phases (0: derived)");
  greedy->add_option("--finisher-k", ga.finisher_k, "Finisher size k (0: mode default)");
  greedy->add_option("-j,--parallelism", ga.parallelism, "Worker threads");
  greedy->add_option("-o,--output-dir", ga.out_dir, "Write trials.csv and summary.json here");

  ReinsertionArgs ra;
  auto* reins = app.add_subcommand("attack-reinsertion", "Reinsertion-model attack on the modulated strategy");
  reins->add_option("--k", ra.k, "Size of A and B");
  reins->add_option("--c-t", ra.c_t, "t = c_t * sqrt(k)");
  reins->add_option("--tolerance", ra.tolerance, "Event window half-width in units of sqrt(k)");
  reins->add_option("--m", ra.m, "Capacity (0: 2^17)");
  reins->add_option("--alice-c", ra.alice_c, "Schedule constant c of the marble game");
  reins->add_option("--seed", ra.seed, "Root seed");
  reins->add_option("--block-trials", ra.block_trials, "Run single splitting blocks instead of the full attack");
  reins->add_option("--block-m", ra.block_m, "Capacity for --block-trials (0: 16 k)");
  reins->add_flag("--rejection", ra.rejection, "Also draw A's hashes by rejection");

  std::int64_t R = 8;
  std::int64_t mc = 2;
  double initial = 0.0;
  std::string marble_csv;
  auto* marble = app.add_subcommand("marble", "Replay Alice against the minimal-slack Bob");
  marble->add_option("--R", R, "Split separation 2/R");
  marble->add_option("--c", mc, "Phases are c * R");
  marble->add_option("--initial", initial, "Value of inserted marbles");
  marble->add_option("--csv", marble_csv, "Per-step replay rows");

  std::uint64_t samples = 500;
  std::vector<std::size_t> dist_n{2, 4, 8, 16};
  std::uint64_t dist_seed = 1;
  double dist_c = 4.0;
  auto* dist = app.add_subcommand("dist-check", "Exact selection-law oracle on random load vectors");
  dist->add_option("--samples", samples, "Random load vectors");
  dist->add_option("--n", dist_n, "Bin counts to draw from");
  dist->add_option("--seed", dist_seed, "Root seed");
  dist->add_option("--c", dist_c, "Slack constant c");

  std::int64_t gap_k = 4096;
  std::int64_t gap_m = 65536;
  std::uint64_t gap_trials = 100;
  std::uint64_t gap_seed = 1;
  auto* gap = app.add_subcommand("gap-overload", "Greedy from an engineered k + 1 gap through the finisher");
  gap->add_option("--k", gap_k, "Finisher size");
  gap->add_option("--m", gap_m, "Capacity");
  gap->add_option("--trials", gap_trials, "Trials");
  gap->add_option("--seed", gap_seed, "Root seed");

  std::int64_t eq_k = 10'000;
  std::int64_t eq_c = 8;
  std::uint64_t eq_trials = 100;
  std::uint64_t eq_seed = 1;
  auto* eq = app.add_subcommand("equalize", "Greedy from loads (0, k, k, k)");
  eq->add_option("--k", eq_k, "Start gap");
  eq->add_option("--c", eq_c, "Insertions are c * k");
  eq->add_option("--trials", eq_trials, "Trials");
  eq->add_option("--seed", eq_seed, "Root seed");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(config_path, output_dir, false, {}, {});
    if (*sweep) return cmd_run(config_path, output_dir, true, sweep_m, sweep_n);
    if (*couple) return cmd_couple(ca);
    if (*greedy) return cmd_attack_greedy(ga);
    if (*reins) return cmd_attack_reinsertion(ra);
    if (*marble) return cmd_marble(R, mc, initial, marble_csv);
    if (*gap) return cmd_gap_overload(gap_k, gap_m, gap_trials, gap_seed);
    if (*eq) return cmd_equalize(eq_k, eq_c, eq_trials, eq_seed);
    if (*dist) return cmd_dist_check(samples, dist_n, dist_seed, dist_c);
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violated: " << e.what() << '\n';
    return kInvariantFailed;
  } catch (const ScriptError& e) {
    std::cerr << "illegal script: " << e.what() << '\n';
    return kInvariantFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
