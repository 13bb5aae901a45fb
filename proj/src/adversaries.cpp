#include "twochoice/adversaries.hpp"

#include "twochoice/engine.hpp"
#include "twochoice/errors.hpp"
#include "twochoice/rng.hpp"
#include "twochoice/strategies.hpp"

#include <algorithm>
#include <cmath>

namespace twochoice {

AdversaryScript random_deletion_warmup(std::int64_t m, double deletion_prob, Rng& script_rng) {
  require(m >= 1, "m must be positive");
  require(deletion_prob >= 0.0 && deletion_prob <= 1.0, "deletion probability outside [0, 1]");
  ScriptBuilder b(m, "random_deletion_warmup", {{"m", m}, {"deletion_prob", deletion_prob}});
  b.reserve(static_cast<std::size_t>(2 * m));
  const auto labels = b.insert_fresh(static_cast<std::size_t>(m));
  for (BallLabel l : labels)
    if (script_rng.bernoulli(deletion_prob)) b.erase(l);
  b.checkpoint("warmup");
  return b.finish();
}

AdversaryScript sawtooth(std::int64_t m, std::uint64_t ops, double low_fraction, DeletionOrder order,
                         Rng& script_rng) {
  require(m >= 2, "m must be at least 2");
  require(low_fraction >= 0.0 && low_fraction < 1.0, "low fraction outside [0, 1)");
  const auto low = static_cast<std::int64_t>(std::floor(low_fraction * static_cast<double>(m)));
  ScriptBuilder b(m, "sawtooth", {{"m", m}, {"ops", ops}, {"low_fraction", low_fraction}});
  b.reserve(ops);
  bool filling = true;
  while (b.size() < ops) {
    if (filling) {
      b.insert();
      if (b.present() == m) filling = false;
    } else {
      const auto present = static_cast<std::size_t>(b.present());
      switch (order) {
        case DeletionOrder::Newest: b.erase_rank(1); break;
        case DeletionOrder::Oldest: b.erase_rank(present); break;
        case DeletionOrder::Random: b.erase_rank(1 + script_rng.below(present)); break;
      }
      if (b.present() <= low) filling = true;
    }
  }
  return b.finish();
}

AdversaryScript mixed_random(std::int64_t m, std::uint64_t ops, double insert_prob, Rng& script_rng) {
  require(m >= 1, "m must be positive");
  ScriptBuilder b(m, "mixed_random", {{"m", m}, {"ops", ops}, {"insert_prob", insert_prob}});
  b.reserve(ops);
  while (b.size() < ops) {
    const bool ins = b.present() == 0 || (b.present() < m && script_rng.bernoulli(insert_prob));
    if (ins)
      b.insert();
    else
      b.erase_rank(1 + script_rng.below(static_cast<std::uint64_t>(b.present())));
  }
  return b.finish();
}

AdversaryScript tightness_epochs(std::int64_t m, std::uint64_t epochs) {
  ScriptBuilder b(m, "tightness_epochs", {{"m", m}, {"epochs", epochs}});
  for (std::uint64_t e = 0; e < epochs; ++e) {
    const auto labels = b.insert_fresh(static_cast<std::size_t>(m));
    b.checkpoint("epoch" + std::to_string(e));
    b.erase_all(labels);
  }
  return b.finish();
}

void append_gap_to_overload(ScriptBuilder& b, std::int64_t k) {
  require(k >= 0, "k must be non-negative");
  if (b.present() + k > b.m_cap()) throw ConfigError("start census leaves no room for k balls");
  auto x = b.insert_fresh(static_cast<std::size_t>(k));
  b.checkpoint("X1");
  auto y = b.insert_fresh(static_cast<std::size_t>(b.m_cap() - b.present()));
  b.checkpoint("X2");
  b.erase_all(x);
  auto z = b.insert_fresh(static_cast<std::size_t>(k));
  b.checkpoint("X3");
  b.label_set("x", std::move(x));
  b.label_set("y", std::move(y));
  b.label_set("z", std::move(z));
}

AdversaryScript gap_to_overload_script(std::int64_t k, std::int64_t m, std::int64_t census) {
  require(census >= 0 && census + k <= m, "census inconsistent with k and m");
  // The start-state balls hold labels [0, census) and are seeded, not
  // scripted, so the counting stub sees only the remaining room.
  ScriptBuilder b(m - census, "gap_to_overload", {{"k", k}, {"m", m}, {"census", census}});
  for (std::int64_t i = 0; i < census; ++i) b.fresh();
  append_gap_to_overload(b, k);
  return b.finish();
}

BallLabel append_uniform_placement(ScriptBuilder& b, std::int64_t size) {
  require(size >= 1, "gadget size must be positive");
  const auto xs = b.insert_fresh(static_cast<std::size_t>(size));
  b.erase_all(std::span(xs).first(xs.size() - 1));
  return xs.back();
}

void append_load_reduction(ScriptBuilder& b, std::int64_t size) {
  require(size >= 1, "gadget size must be positive");
  for (int round = 0; round < 2; ++round) {
    const auto old = b.present_oldest_first();
    b.insert_fresh(static_cast<std::size_t>(size));
    b.erase_all(old);
  }
}

std::string mode_name(GreedyAttackMode mode) {
  switch (mode) {
    case GreedyAttackMode::WarmupQuarter: return "warmup_quarter";
    case GreedyAttackMode::FullHalf: return "full_half";
    case GreedyAttackMode::GeneralN: return "general_n";
  }
  return "?";
}

GreedyAttackMode parse_mode(const std::string& name) {
  if (name == "warmup_quarter") return GreedyAttackMode::WarmupQuarter;
  if (name == "full_half") return GreedyAttackMode::FullHalf;
  if (name == "general_n") return GreedyAttackMode::GeneralN;
  throw ConfigError("unknown greedy attack mode '" + name + "'");
}

void GreedyAttackParams::resolve() {
  require(m >= 16, "m must be at least 16");
  require(n >= 2, "n must be at least 2");
  require(eps1 > 0.0 && eps1 < 0.5, "eps1 must lie in (0, 1/2)");
  if (eps2 == 0.0 && eps3 == 0.0) eps2 = eps1 / 4.0;
  if (eps3 == 0.0) eps3 = eps2 * eps2 * eps2 / 2.0;
  if (eps2 == 0.0) eps2 = std::cbrt(2.0 * eps3);
  require(eps1 > eps2 && eps2 > eps3 && eps3 > 0.0, "need eps1 > eps2 > eps3 > 0");
  if (mode == GreedyAttackMode::FullHalf)
    require(std::abs(eps2 - std::cbrt(2.0 * eps3)) <= 1e-12 * eps2, "full_half needs eps2 = (2 eps3)^(1/3)");
  require(deletion_prob >= 0.0 && deletion_prob <= 1.0, "deletion probability outside [0, 1]");
  require(phases >= 0 && placements_per_phase >= 0 && finisher_k >= 0, "counts must be non-negative");
}

std::int64_t GreedyAttackParams::gadget_size() const {
  return std::max<std::int64_t>(1, std::llround(eps1 * static_cast<double>(m)));
}

std::int64_t GreedyAttackParams::resolved_phases() const {
  return phases > 0 ? phases : std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(eps3 * static_cast<double>(m))));
}

std::int64_t GreedyAttackParams::resolved_placements() const {
  return placements_per_phase > 0 ? placements_per_phase : m - 2 * gadget_size();
}

std::int64_t GreedyAttackParams::resolved_finisher_k() const {
  if (finisher_k > 0) return finisher_k;
  switch (mode) {
    case GreedyAttackMode::WarmupQuarter:
      return std::llround(std::sqrt(static_cast<double>(m)));
    case GreedyAttackMode::GeneralN: {
      const double nd = static_cast<double>(n);
      const double k = std::sqrt(static_cast<double>(m) / (nd * std::log(nd)));
      return std::max<std::int64_t>(1, std::llround(std::ceil(k * nd / 100.0)));
    }
    case GreedyAttackMode::FullHalf:
      return std::llround(
          2.0 * std::sqrt(static_cast<double>(resolved_phases()) * static_cast<double>(resolved_placements())));
  }
  return 1;
}

std::uint64_t full_half_phase_ops(const GreedyAttackParams& p) {
  const auto s = static_cast<std::uint64_t>(p.gadget_size());
  const auto G = static_cast<std::uint64_t>(p.resolved_placements());
  const auto P = static_cast<std::uint64_t>(p.resolved_phases());
  // Per phase: G gadgets of 2s - 1 ops, then two reduction rounds: s inserts
  // plus deletion of everything older. Round one deletes p0 + G balls (p0 = 0
  // in the first phase, s afterwards), round two deletes s.
  return P * (G * (2 * s - 1) + s + G + 2 * s) + (P - 1) * s;
}

AdversaryScript greedy_attack_full(GreedyAttackParams p, Rng& script_rng) {
  p.resolve();
  const std::int64_t k = p.resolved_finisher_k();
  nlohmann::json params = {{"m", p.m},          {"n", p.n},        {"eps1", p.eps1},
                           {"eps2", p.eps2},    {"eps3", p.eps3},  {"mode", mode_name(p.mode)},
                           {"finisher_k", k}};
  ScriptBuilder b(p.m, "greedy_attack_full", params);
  switch (p.mode) {
    case GreedyAttackMode::WarmupQuarter:
    case GreedyAttackMode::GeneralN: {
      require(p.mode == GreedyAttackMode::GeneralN || p.n == 4, "warmup_quarter is a 4-bin construction");
      const auto labels = b.insert_fresh(static_cast<std::size_t>(p.m));
      for (BallLabel l : labels)
        if (script_rng.bernoulli(p.deletion_prob)) b.erase(l);
      b.checkpoint("warmup");
      if (b.present() + k > p.m) throw ConfigError("warmup left no room for the finisher");
      break;
    }
    case GreedyAttackMode::FullHalf: {
      require(p.n == 4, "full_half is a 4-bin construction");
      const std::int64_t s = p.gadget_size();
      const std::int64_t G = p.resolved_placements();
      require(G + 2 * s <= p.m, "placements per phase exceed capacity");
      const std::int64_t P = p.resolved_phases();
      b.reserve(full_half_phase_ops(p) + static_cast<std::size_t>(p.m + 2 * k));
      for (std::int64_t a = 0; a < P; ++a) {
        for (std::int64_t g = 0; g < G; ++g) append_uniform_placement(b, s);
        append_load_reduction(b, s);
      }
      b.checkpoint("phases_done");
      params["placements_per_phase"] = G;
      params["phases"] = P;
      params["phase_ops"] = full_half_phase_ops(p);
      if (b.present() + k > p.m) throw ConfigError("finisher k too large for the post-phase census");
      break;
    }
  }
  b.params() = params;
  append_gap_to_overload(b, k);
  return b.finish();
}

GapTrial gap_to_overload_trial(std::int64_t k, std::int64_t m, std::uint64_t seed, double fill) {
  require(m % 4 == 0, "m must be a multiple of 4");
  require(fill > 0.0 && fill < 1.0, "fill outside (0, 1)");
  const auto target = static_cast<std::int64_t>(std::llround(fill * static_cast<double>(m)));
  const std::int64_t high = (target + k + 1 + 3) / 4;
  const std::int64_t low = high - k - 1;
  const std::int64_t census = 3 * high + low;
  require(low >= 0 && census + k <= m, "k and fill inconsistent with m");
  const AdversaryScript script = gap_to_overload_script(k, m, census);
  System sys = System::create(4, m);
  BallLabel label = 0;
  for (Bin b = 0; b < 4; ++b)
    for (std::int64_t i = 0; i < (b == 0 ? low : high); ++i) sys.seed_ball(label++, b);
  GapTrial out;
  out.start_gap = high - low;
  const std::size_t x2 = script.checkpoints.at("X2");
  const std::size_t x3 = script.checkpoints.at("X3");
  GreedyPolicy greedy;
  RunStreams streams = RunStreams::derive(seed, 0);
  run(sys, script, greedy, streams, TraceMode::Final, [&](const System& s, const StepRecord&, std::size_t pos) {
    if (pos + 1 == x2) out.x2_overload = s.overload_vs_cap();
    if (pos + 1 == x3) out.x3_overload = s.overload_vs_cap();
  });
  return out;
}

EqualizationReport equalization_probe(std::int64_t k, std::int64_t c, std::uint64_t seed) {
  require(k >= 0 && c >= 0, "k and c must be non-negative");
  EqualizationReport r;
  r.start_loads = {0, k, k, k};
  const std::int64_t inserts = c * k;
  System sys = System::create(4, std::max<std::int64_t>(4, 3 * k + inserts));
  BallLabel label = 0;
  for (Bin b = 1; b < 4; ++b)
    for (std::int64_t i = 0; i < k; ++i) sys.seed_ball(label++, b);
  GreedyPolicy greedy;
  RunStreams streams = RunStreams::derive(seed, 0);
  auto all_equal = [&] {
    const auto l = sys.loads();
    return l[0] == l[1] && l[1] == l[2] && l[2] == l[3];
  };
  if (all_equal()) {
    r.equal_instant = true;
    r.first_equal_step = 0;
  }
  for (std::int64_t t = 1; t <= inserts; ++t) {
    sys.apply(Operation::insert(label++), greedy, streams);
    if (!r.equal_instant && all_equal()) {
      r.equal_instant = true;
      r.first_equal_step = t;
    }
  }
  r.final_loads.assign(sys.loads().begin(), sys.loads().end());
  r.final_spread = sys.max_load() - sys.min_load();
  return r;
}

}  // namespace twochoice
