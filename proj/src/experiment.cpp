#include "twochoice/experiment.hpp"

#include "twochoice/adversaries.hpp"
#include "twochoice/errors.hpp"
#include "twochoice/graph.hpp"
#include "twochoice/rng.hpp"
#include "twochoice/script.hpp"
#include "twochoice/strategies.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

namespace twochoice {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <typename T>
std::vector<T> scalar_or_list(const json& j, const std::string& key) {
  try {
    if (j.is_array()) return j.get<std::vector<T>>();
    return {j.get<T>()};
  } catch (const json::exception& e) {
    throw ConfigError("bad value for '" + key + "': " + e.what());
  }
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for '" + key + "': " + e.what());
  }
}

std::string mode_name(InsertionModel mode) {
  return mode == InsertionModel::InsertionDeletion ? "insertion" : "reinsertion";
}

InsertionModel parse_insertion_mode(const std::string& s) {
  if (s == "insertion") return InsertionModel::InsertionDeletion;
  if (s == "reinsertion") return InsertionModel::ReinsertionDeletion;
  throw ConfigError("unknown insertion mode '" + s + "'");
}

DeletionOrder parse_order(const std::string& s) {
  if (s == "newest") return DeletionOrder::Newest;
  if (s == "oldest") return DeletionOrder::Oldest;
  if (s == "random") return DeletionOrder::Random;
  throw ConfigError("unknown deletion order '" + s + "'");
}

// Shortest text that round-trips, so CSVs are byte-stable.
std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string hash_model_name(HashModel model) {
  switch (model) {
    case HashModel::IndependentPair: return "independent";
    case HashModel::DistinctOrdered: return "distinct_ordered";
    case HashModel::Graphical: return "graphical";
  }
  return "?";
}

HashModel parse_hash_model(const std::string& name) {
  if (name == "independent") return HashModel::IndependentPair;
  if (name == "distinct_ordered") return HashModel::DistinctOrdered;
  if (name == "graphical") return HashModel::Graphical;
  throw ConfigError("unknown hash model '" + name + "'");
}

std::string trace_mode_name(TraceMode mode) {
  switch (mode) {
    case TraceMode::Full: return "full";
    case TraceMode::OverloadOnly: return "overload_only";
    case TraceMode::Final: return "final";
  }
  return "?";
}

TraceMode parse_trace_mode(const std::string& name) {
  if (name == "full") return TraceMode::Full;
  if (name == "overload_only") return TraceMode::OverloadOnly;
  if (name == "final") return TraceMode::Final;
  throw ConfigError("unknown trace mode '" + name + "'");
}

StrategySpec StrategySpec::from_json(const json& j) {
  if (j.is_string()) {
    StrategySpec s;
    s.name = j.get<std::string>();
    return s;
  }
  check_keys(j, {"name", "c", "epsilon", "M", "beta", "log_base", "integral_slack", "graph"}, "strategy");
  StrategySpec s;
  s.name = get_or<std::string>(j, "name", s.name);
  s.c = get_or(j, "c", s.c);
  s.epsilon = get_or(j, "epsilon", s.epsilon);
  s.M = get_or(j, "M", s.M);
  s.beta = get_or(j, "beta", s.beta);
  s.log_base = get_or(j, "log_base", s.log_base);
  s.integral_slack = get_or(j, "integral_slack", s.integral_slack);
  s.graph = get_or<std::string>(j, "graph", s.graph);
  return s;
}

json StrategySpec::to_json() const {
  json j = {{"name", name}, {"c", c}, {"epsilon", epsilon}, {"M", M}, {"beta", beta}, {"log_base", log_base},
            {"integral_slack", integral_slack}};
  if (!graph.empty()) j["graph"] = graph;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  check_keys(j,
             {"name", "strategy", "adversary", "n", "m", "hash_model", "mode", "trials", "seed", "trace_mode",
              "parallelism", "output_dir", "seed_scheme"},
             "experiment config");
  ExperimentConfig c;
  c.name = get_or<std::string>(j, "name", c.name);
  if (j.contains("strategy")) c.strategy = StrategySpec::from_json(j.at("strategy"));
  if (j.contains("adversary")) {
    const json& a = j.at("adversary");
    if (a.is_string()) {
      c.adversary.generator = a.get<std::string>();
    } else {
      if (!a.is_object() || !a.contains("generator")) throw ConfigError("adversary needs a generator");
      c.adversary.generator = a.at("generator").get<std::string>();
      c.adversary.params = a;
      c.adversary.params.erase("generator");
    }
  }
  if (j.contains("n")) c.n = scalar_or_list<std::size_t>(j.at("n"), "n");
  if (j.contains("m")) c.m = scalar_or_list<std::int64_t>(j.at("m"), "m");
  if (j.contains("hash_model")) c.hash_model = parse_hash_model(j.at("hash_model").get<std::string>());
  if (j.contains("mode")) c.mode = parse_insertion_mode(j.at("mode").get<std::string>());
  c.trials = get_or(j, "trials", c.trials);
  c.seed = get_or(j, "seed", c.seed);
  if (j.contains("trace_mode")) c.trace_mode = parse_trace_mode(j.at("trace_mode").get<std::string>());
  c.parallelism = get_or(j, "parallelism", c.parallelism);
  c.output_dir = get_or<std::string>(j, "output_dir", c.output_dir);
  if (!c.strategy.graph.empty()) c.hash_model = HashModel::Graphical;
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

json ExperimentConfig::to_json() const {
  json adv = adversary.params;
  adv["generator"] = adversary.generator;
  return {{"name", name},
          {"strategy", strategy.to_json()},
          {"adversary", adv},
          {"n", n},
          {"m", m},
          {"hash_model", hash_model_name(hash_model)},
          {"mode", mode_name(mode)},
          {"trials", trials},
          {"seed", seed},
          {"trace_mode", trace_mode_name(trace_mode)},
          {"parallelism", parallelism},
          {"output_dir", output_dir},
          {"seed_scheme", "mt19937_64(seed_seq{seed_lo, seed_hi, role, index_lo, index_hi}); "
                          "roles script=1 hash=2 strategy=3; index = point * trials + trial"}};
}

void ExperimentConfig::validate() const {
  require(!n.empty() && !m.empty(), "n and m need at least one value");
  for (std::size_t v : n) require(v >= 1, "n must be positive");
  for (std::int64_t v : m) require(v >= 1, "m must be positive");
  require(trials >= 1, "trials must be positive");
  require(parallelism >= 1, "parallelism must be positive");
  static const std::set<std::string> strategies{"single", "greedy", "modulated", "generalized", "one_plus_beta"};
  if (!strategies.contains(strategy.name)) throw ConfigError("unknown strategy '" + strategy.name + "'");
  if (hash_model == HashModel::Graphical && strategy.graph.empty())
    throw ConfigError("graphical hashing needs strategy.graph");
  static const std::set<std::string> generators{"insert_only",      "random_deletion_warmup", "sawtooth",
                                                "mixed_random",     "tightness_epochs",       "greedy_attack",
                                                "file"};
  if (!generators.contains(adversary.generator))
    throw ConfigError("unknown adversary generator '" + adversary.generator + "'");
}

std::vector<SweepPoint> sweep_points(const ExperimentConfig& config) {
  std::vector<SweepPoint> out;
  for (std::size_t n : config.n)
    for (std::int64_t m : config.m) out.push_back({out.size(), n, m});
  return out;
}

std::uint64_t trial_stream_index(const ExperimentConfig& config, const SweepPoint& point, std::uint64_t trial) {
  return static_cast<std::uint64_t>(point.index) * config.trials + trial;
}

std::unique_ptr<PlacementPolicy> make_policy(const StrategySpec& spec, std::size_t n, std::int64_t m) {
  (void)n;
  GeneralizedParams gp{spec.c, spec.epsilon, spec.M > 0 ? spec.M : m, spec.log_base};
  if (spec.name == "single") return std::make_unique<SingleChoicePolicy>();
  if (spec.name == "greedy") return std::make_unique<GreedyPolicy>();
  if (spec.name == "modulated")
    return std::make_unique<ModulatedGreedyPolicy>(ModulatedParams{spec.c, spec.log_base, spec.integral_slack});
  if (spec.name == "generalized") return std::make_unique<GeneralizedModulatedGreedyPolicy>(gp);
  if (spec.name == "one_plus_beta") return std::make_unique<OnePlusBetaPolicy>(spec.beta, gp);
  throw ConfigError("unknown strategy '" + spec.name + "'");
}

SystemConfig make_system_config(const ExperimentConfig& config, const SweepPoint& point) {
  SystemConfig sc;
  sc.n = point.n;
  sc.m_cap = point.m;
  sc.hash_model = config.hash_model;
  sc.mode = config.mode;
  if (config.hash_model == HashModel::Graphical) {
    auto g = std::make_shared<const GraphModel>(GraphModel::load(config.strategy.graph));
    if (g->vertices() != point.n) throw ConfigError("graph vertex count differs from n");
    sc.graph = std::move(g);
  }
  return sc;
}

AdversaryScript make_script(const AdversarySpec& spec, std::size_t n, std::int64_t m, Rng& rng) {
  const json& p = spec.params;
  const std::string& g = spec.generator;
  if (g == "insert_only") {
    check_keys(p, {"count"}, "insert_only");
    const auto count = get_or<std::int64_t>(p, "count", m);
    ScriptBuilder b(m, "insert_only", {{"count", count}});
    b.insert_fresh(static_cast<std::size_t>(count));
    return b.finish();
  }
  if (g == "random_deletion_warmup") {
    check_keys(p, {"deletion_prob"}, g);
    return random_deletion_warmup(m, get_or(p, "deletion_prob", 0.5), rng);
  }
  if (g == "sawtooth") {
    check_keys(p, {"ops", "low_fraction", "order"}, g);
    return sawtooth(m, get_or<std::uint64_t>(p, "ops", 1'000'000), get_or(p, "low_fraction", 0.5),
                    parse_order(get_or<std::string>(p, "order", "random")), rng);
  }
  if (g == "mixed_random") {
    check_keys(p, {"ops", "insert_prob"}, g);
    return mixed_random(m, get_or<std::uint64_t>(p, "ops", 1'000'000), get_or(p, "insert_prob", 0.5), rng);
  }
  if (g == "tightness_epochs") {
    check_keys(p, {"epochs"}, g);
    return tightness_epochs(m, get_or<std::uint64_t>(p, "epochs", 4));
  }
  if (g == "greedy_attack") {
    check_keys(p, {"mode", "eps1", "eps2", "eps3", "deletion_prob", "phases", "placements_per_phase", "finisher_k"},
               g);
    GreedyAttackParams ap;
    ap.m = m;
    ap.n = n;
    ap.mode = parse_mode(get_or<std::string>(p, "mode", "warmup_quarter"));
    ap.eps1 = get_or(p, "eps1", ap.eps1);
    ap.eps2 = get_or(p, "eps2", ap.eps2);
    ap.eps3 = get_or(p, "eps3", ap.eps3);
    ap.deletion_prob = get_or(p, "deletion_prob", ap.deletion_prob);
    ap.phases = get_or(p, "phases", ap.phases);
    ap.placements_per_phase = get_or(p, "placements_per_phase", ap.placements_per_phase);
    ap.finisher_k = get_or(p, "finisher_k", ap.finisher_k);
    return greedy_attack_full(ap, rng);
  }
  if (g == "file") {
    check_keys(p, {"path"}, g);
    if (!p.contains("path")) throw ConfigError("file adversary needs a path");
    const auto path = p.at("path").get<std::string>();
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open script " + path);
    return read_script(in);
  }
  throw ConfigError("unknown adversary generator '" + g + "'");
}

TrialRecord run_trial(const ExperimentConfig& config, const SweepPoint& point, std::uint64_t trial,
                      Trace* trace_out) {
  const std::uint64_t idx = trial_stream_index(config, point, trial);
  Rng script_rng = Rng::derive(config.seed, StreamRole::Script, idx);
  const AdversaryScript script = make_script(config.adversary, point.n, point.m, script_rng);
  System sys(make_system_config(config, point));
  auto policy = make_policy(config.strategy, point.n, point.m);
  RunStreams streams = RunStreams::derive(config.seed, idx);
  TrialRecord r;
  std::map<std::size_t, std::vector<std::string>> at;
  for (const auto& [name, pos] : script.checkpoints) at[pos].push_back(name);
  auto record = [&](const System& s) {
    if (auto it = at.find(static_cast<std::size_t>(s.op_count())); it != at.end())
      for (const auto& name : it->second) r.checkpoint_overload[name] = s.overload_vs_cap();
  };
  record(sys);
  StepObserver observer;
  if (!at.empty()) observer = [&](const System& s, const StepRecord&, std::size_t) { record(s); };
  Trace trace = run(sys, script, *policy, streams, config.trace_mode, observer);
  trace.summary.seed = idx;

  r.point = point.index;
  r.n = point.n;
  r.m = point.m;
  r.trial = trial;
  r.stream_index = idx;
  r.ops = sys.op_count();
  r.max_overload = trace.summary.max_overload;
  r.max_overload_vs_cap = trace.summary.max_overload_vs_cap;
  r.final_overload = sys.overload();
  r.max_load = trace.summary.max_load;
  r.final_spread = sys.max_load() - sys.min_load();
  r.halted = trace.summary.halted;
  r.halt_op = trace.summary.halt_op;
  r.corruptions = trace.summary.corruptions;
  r.p_min = trace.summary.p_min;
  r.p_max = trace.summary.p_max;
  if (trace_out) *trace_out = std::move(trace);
  return r;
}

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mu;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i; !failed && (i = next.fetch_add(1)) < count;) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mu);
            if (!error) error = std::current_exception();
            failed = true;
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

SummaryStats summarize(const ExperimentConfig& config, std::vector<TrialRecord> trials) {
  std::sort(trials.begin(), trials.end(),
            [](const TrialRecord& a, const TrialRecord& b) { return a.stream_index < b.stream_index; });
  SummaryStats s;
  const auto points = sweep_points(config);
  std::map<std::size_t, std::pair<std::vector<double>, std::vector<double>>> per_n;  // m, median
  for (const SweepPoint& pt : points) {
    PointSummary ps;
    ps.point = pt;
    std::vector<double> over;
    std::map<std::string, std::vector<double>> cps;
    for (const TrialRecord& r : trials) {
      if (r.point != pt.index) continue;
      for (const auto& [name, v] : r.checkpoint_overload) cps[name].push_back(v);
      over.push_back(r.max_overload);
      ps.halts += r.halted ? 1 : 0;
      ps.corruptions += r.corruptions;
    }
    ps.trials = over.size();
    if (!over.empty()) {
      ps.p50 = stats::quantile(over, 0.5);
      ps.p90 = stats::quantile(over, 0.9);
      ps.p99 = stats::quantile(over, 0.99);
      ps.mean = stats::mean(over);
      for (auto& [name, vs] : cps) ps.checkpoint_p50[name] = stats::median(std::move(vs));
      per_n[pt.n].first.push_back(static_cast<double>(pt.m));
      per_n[pt.n].second.push_back(ps.p50);
    }
    s.points.push_back(ps);
  }
  for (auto& [n, xy] : per_n) {
    std::optional<stats::PowerFit> fit;
    try {
      if (xy.first.size() >= 3) fit = stats::fit_exponent(xy.first, xy.second);
    } catch (const ConfigError&) {
      // Too few positive medians: reported as not fittable.
    }
    s.fits.emplace_back(n, fit);
  }
  s.trials = std::move(trials);
  return s;
}

json summary_to_json(const SummaryStats& s) {
  json points = json::array();
  for (const PointSummary& p : s.points)
    points.push_back({{"n", p.point.n},
                      {"m", p.point.m},
                      {"trials", p.trials},
                      {"p50", p.p50},
                      {"p90", p.p90},
                      {"p99", p.p99},
                      {"mean", p.mean},
                      {"halts", p.halts},
                      {"corruptions", p.corruptions},
                      {"checkpoint_p50", p.checkpoint_p50}});
  json fits = json::array();
  for (const auto& [n, fit] : s.fits) {
    if (fit)
      fits.push_back({{"n", n}, {"exponent", fit->exponent}, {"stderr", fit->stderr_exponent}, {"points", fit->points}});
    else
      fits.push_back({{"n", n}, {"fittable", false}});
  }
  json per_trial = json::array();
  for (const TrialRecord& r : s.trials) per_trial.push_back(r.max_overload);
  return {{"points", points}, {"fits", fits}, {"max_overload", per_trial}};
}

void write_trials_csv(std::ostream& out, const std::vector<TrialRecord>& trials) {
  out << "point,n,m,trial,stream_index,ops,max_overload,max_overload_vs_cap,final_overload,max_load,final_spread,"
         "halted,halt_op,corruptions,p_min,p_max,checkpoints\n";
  out.precision(17);
  for (const TrialRecord& r : trials)
    out << r.point << ',' << r.n << ',' << r.m << ',' << r.trial << ',' << r.stream_index << ',' << r.ops << ','
        << r.max_overload << ',' << r.max_overload_vs_cap << ',' << r.final_overload << ',' << r.max_load << ','
        << r.final_spread << ',' << (r.halted ? 1 : 0) << ',' << r.halt_op << ',' << r.corruptions << ',' << r.p_min
        << ',' << r.p_max << ',' << [&] {
             std::string cp;
             for (const auto& [name, v] : r.checkpoint_overload)
               cp += (cp.empty() ? "" : ";") + name + '=' + format_double(v);
             return cp;
           }() << '\n';
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
  out << "op_index,op_kind,bin,color,corrupted,max_load,overload\n";
  out.precision(17);
  for (const StepRecord& r : trace.steps)
    out << r.op_index << ',' << (r.halted ? "halt" : kind_name(r.op.kind)) << ',' << r.bin << ',' << r.color << ','
        << (r.corrupted ? 1 : 0) << ',' << r.max_load << ',' << r.overload << '\n';
}

json trace_summary_json(const TraceSummary& s) {
  return {{"final_loads", s.final_loads},
          {"final_color_loads", s.final_color_loads},
          {"max_overload", s.max_overload},
          {"max_overload_vs_cap", s.max_overload_vs_cap},
          {"max_load", s.max_load},
          {"halted", s.halted},
          {"halt_op", s.halt_op},
          {"corruptions", s.corruptions},
          {"inserts", s.inserts},
          {"deletes", s.deletes},
          {"seed", s.seed}};
}

std::vector<std::int64_t> random_feasible_loads(std::size_t n, std::int64_t m, const ModulatedParams& params,
                                                Rng& rng) {
  const auto slack = static_cast<std::int64_t>(std::floor(params.slack(m)));
  const std::int64_t base_hi = std::max<std::int64_t>(0, m / static_cast<std::int64_t>(n) - slack);
  const auto b = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(base_hi) + 1));
  std::vector<std::int64_t> loads(n);
  for (auto& l : loads) l = b + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(slack) + 1));
  return loads;
}

DistCheckReport dist_check(std::uint64_t samples, const std::vector<std::size_t>& ns, std::uint64_t seed,
                           const ModulatedParams& params) {
  require(!ns.empty(), "need at least one n");
  Rng rng = Rng::derive(seed, StreamRole::Game);
  DistCheckReport rep;
  for (std::uint64_t i = 0; i < samples; ++i) {
    const std::size_t n = ns[rng.below(ns.size())];
    const auto m = static_cast<std::int64_t>(n * (1 + rng.below(512)));
    const auto loads = random_feasible_loads(n, m, params, rng);
    const Rational T = threshold(loads, modulated_headroom(m, n, params));
    const auto closed = selection_closed_form(loads, T);
    const auto brute = selection_by_enumeration(loads, T);
    Rational sum = 0;
    for (const auto& p : closed) sum += p;
    ++rep.samples;
    if (sum != 1) ++rep.bad_sums;
    if (closed != brute) {
      ++rep.mismatches;
      if (!rep.first_mismatch) rep.first_mismatch = loads;
    }
  }
  return rep;
}

SummaryStats run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto points = sweep_points(config);
  const std::size_t total = points.size() * config.trials;
  std::vector<TrialRecord> records(total);
  const bool keep_traces = !config.output_dir.empty() && config.trace_mode != TraceMode::Final;
  std::filesystem::path dir(config.output_dir);
  if (!config.output_dir.empty()) std::filesystem::create_directories(keep_traces ? dir / "traces" : dir);
  parallel_for(total, config.parallelism, [&](std::size_t i) {
    const SweepPoint& pt = points[i / config.trials];
    const std::uint64_t trial = i % config.trials;
    Trace trace;
    records[i] = run_trial(config, pt, trial, keep_traces ? &trace : nullptr);
    if (keep_traces) {
      const std::string stem = "trial_" + std::to_string(records[i].stream_index);
      std::ofstream csv(dir / "traces" / (stem + ".csv"));
      write_trace_csv(csv, trace);
      std::ofstream js(dir / "traces" / (stem + ".json"));
      js << trace_summary_json(trace.summary).dump(2) << '\n';
      if (!csv || !js) throw std::runtime_error("failed writing trace " + stem);
    }
  });
  SummaryStats s = summarize(config, std::move(records));
  if (!config.output_dir.empty()) {
    std::ofstream csv(dir / "trials.csv");
    write_trials_csv(csv, s.trials);
    std::ofstream sj(dir / "summary.json");
    sj << summary_to_json(s).dump(2) << '\n';
    std::ofstream cj(dir / "config.json");
    cj << config.to_json().dump(2) << '\n';
    if (!csv || !sj || !cj) throw std::runtime_error("failed writing outputs to " + dir.string());
  }
  return s;
}

}  // namespace twochoice
