#include "twochoice/stonegame.hpp"

#include "twochoice/engine.hpp"
#include "twochoice/errors.hpp"
#include "twochoice/rng.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <numeric>

namespace twochoice {

StoneGame::StoneGame(std::size_t n, StoneVariant variant, std::int64_t batches, std::int64_t delta)
    : n_(n), variant_(variant), batches_(0), delta_(delta), inactive_counts_(n, 0), active_counts_(n, 0) {
  require(n >= 1, "stone game needs at least one color");
  require(batches >= 1, "stone game needs at least one batch");
  for (std::int64_t q = 0; q < batches; ++q) add_batch();
}

StoneGame StoneGame::fixed(std::size_t n, std::int64_t Q) { return StoneGame(n, StoneVariant::Fixed, Q, 0); }

StoneGame StoneGame::generalized(std::size_t n, std::int64_t delta) {
  return StoneGame(n, StoneVariant::Generalized, delta, delta);
}

StoneGame StoneGame::from_bags(std::size_t n, StoneVariant variant, std::int64_t batches, std::int64_t delta,
                               std::vector<Stone> inactive, std::vector<Stone> active_oldest_first) {
  require(inactive.size() + active_oldest_first.size() == static_cast<std::size_t>(batches) * n,
          "bags must hold batches * n stones");
  StoneGame g(n, variant, 1, delta);
  g.batches_ = batches;
  g.inactive_ = std::move(inactive);
  std::fill(g.inactive_counts_.begin(), g.inactive_counts_.end(), 0);
  std::vector<std::int64_t> per_color(n, 0);
  for (const Stone& s : g.inactive_) {
    require(s.color < n, "stone color out of range");
    ++g.inactive_counts_[s.color];
    ++per_color[s.color];
  }
  for (const Stone& s : active_oldest_first) {
    require(s.color < n, "stone color out of range");
    g.active_.push_back(s);
    ++g.active_counts_[s.color];
    ++per_color[s.color];
  }
  for (auto c : per_color) require(c == batches, "every color needs one stone per batch");
  return g;
}

void StoneGame::add_batch() {
  for (Bin k = 0; k < n_; ++k) {
    inactive_.push_back(Stone{k, static_cast<std::uint32_t>(batches_)});
    ++inactive_counts_[k];
  }
  ++batches_;
}

Stone StoneGame::activate(Rng& rng) {
  if (inactive_.empty()) throw OperationError("no inactive stone to activate");
  return activate_index(rng.below(inactive_.size()));
}

Stone StoneGame::activate_index(std::size_t index) {
  if (index >= inactive_.size()) throw OperationError("inactive index out of range");
  const Stone s = inactive_[index];
  inactive_[index] = inactive_.back();
  inactive_.pop_back();
  --inactive_counts_[s.color];
  active_.push_back(s);
  ++active_counts_[s.color];
  if (variant_ == StoneVariant::Generalized &&
      static_cast<std::int64_t>(inactive_.size()) < delta_ * static_cast<std::int64_t>(n_))
    add_batch();
  return s;
}

Stone StoneGame::deactivate(std::size_t rank) {
  if (rank < 1 || rank > active_.size())
    throw OperationError("rank " + std::to_string(rank) + " out of range for " + std::to_string(active_.size()) +
                         " active stones");
  const Stone s = active_.erase(active_.handle_at_rank(rank));
  --active_counts_[s.color];
  inactive_.push_back(s);
  ++inactive_counts_[s.color];
  return s;
}

std::vector<Stone> StoneGame::active_oldest_first() const {
  std::vector<Stone> out;
  out.reserve(active_.size());
  active_.for_each([&](auto, const Stone& s) { out.push_back(s); });
  return out;
}

StoneGame StoneGame::relabeled(const std::vector<Bin>& perm) const {
  require(perm.size() == n_, "permutation size must equal n");
  auto map = [&](std::vector<Stone> v) {
    for (Stone& s : v) s.color = perm[s.color];
    return v;
  };
  return from_bags(n_, variant_, batches_, delta_, map(inactive_), map(active_oldest_first()));
}

// ---------------------------------------------------------------------------
// Coupling
// ---------------------------------------------------------------------------

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return a <= 0 ? 0 : (a + b - 1) / b; }

// Samples a pair and decision consistent with the bias rule having chosen k.
StrategyDecision realize_choice(Bin k, std::span<const std::int64_t> loads, double nT, Rng& rng, HashPair& pair) {
  const std::size_t n = loads.size();
  std::vector<double> w;
  w.reserve(2 * n);
  auto p_first = [&](Bin i, Bin j) {
    return 0.5 + static_cast<double>(n) * static_cast<double>(loads[j] - loads[i]) / (2.0 * nT);
  };
  // Candidates: (k, j) with k first for every j, then (i, k) with k second, i != k.
  double total = 0.0;
  for (Bin j = 0; j < n; ++j) {
    w.push_back(j == k ? 1.0 : p_first(k, j));
    total += w.back();
  }
  for (Bin i = 0; i < n; ++i) {
    w.push_back(i == k ? 0.0 : 1.0 - p_first(i, k));
    total += w.back();
  }
  double u = rng.canonical() * total;
  std::size_t idx = 0;
  for (; idx + 1 < w.size(); ++idx) {
    if (u < w[idx]) break;
    u -= w[idx];
  }
  if (w[idx] <= 0.0) {  // rounding landed on an impossible candidate
    idx = static_cast<std::size_t>(std::find_if(w.begin(), w.end(), [](double x) { return x > 0.0; }) - w.begin());
    ensure(idx < w.size(), "no pair can produce the drawn color");
  }
  if (idx < n) {
    pair = {k, static_cast<Bin>(idx)};
    return {k, k, false, idx == k ? 1.0 : p_first(k, static_cast<Bin>(idx))};
  }
  const auto i = static_cast<Bin>(idx - n);
  pair = {i, k};
  return {k, k, false, 1.0 - p_first(i, k)};
}

class NoPolicy final : public PlacementPolicy {
 public:
  Placement place(const HashPair&, const LoadView&, Rng&) override {
    throw InvariantViolation("coupled run consulted a policy");
  }
  [[nodiscard]] std::string_view name() const override { return "none"; }
};

}  // namespace

CouplingReport coupled_run(const AdversaryScript& script, const CouplingConfig& config, std::uint64_t seed) {
  const std::size_t n = config.n;
  const auto nn = static_cast<std::int64_t>(n);
  const bool fixed = config.variant == StoneVariant::Fixed;

  GeneralizedParams gp = config.generalized;
  gp.M = config.m;
  std::int64_t Q = 0;
  std::int64_t delta = 0;
  if (fixed) {
    require(config.m % nn == 0, "fixed coupling needs n to divide m");
    const Rational H = modulated_headroom(config.m, n, config.modulated);
    require(denominator(H) == 1, "fixed coupling needs an integral slack");
    Q = numerator(H).convert_to<std::int64_t>();
  } else {
    gp.validate();
    delta = gp.delta();
  }

  System system(SystemConfig{n, config.m, HashModel::IndependentPair, InsertionModel::InsertionDeletion, nullptr});
  StoneGame game = fixed ? StoneGame::fixed(n, Q) : StoneGame::generalized(n, delta);
  Rng rng = Rng::derive(seed, StreamRole::Game, 0);
  RunStreams unused = RunStreams::derive(seed, 0);
  NoPolicy no_policy;

  CouplingReport report;
  std::uint64_t inserts = 0;
  auto violate = [&](std::uint64_t step, const std::string& what) {
    if (!report.first_violation) {
      report.first_violation = step;
      report.first_violation_message = what;
    }
    ++report.violations;
  };

  for (std::size_t pos = 0; pos < script.ops.size(); ++pos) {
    const Operation& op = script.ops[pos];
    const std::uint64_t step = pos;
    const std::uint64_t violations_before = report.violations;
    Bin color = 0;
    try {
      if (op.is_insert()) {
        const auto loads = system.color_loads();
        const std::int64_t sum = system.present();
        const auto [lo_it, hi_it] = std::minmax_element(loads.begin(), loads.end());
        const std::int64_t gap = *hi_it - *lo_it;
        const std::int64_t H = fixed ? Q : ceil_div(system.m_seen(), nn) + delta;
        const std::int64_t nT = nn * H - sum;
        const auto& s_k = game.inactive_color_counts();
        const auto s = static_cast<std::int64_t>(game.inactive_size());
        const auto [slo, shi] = std::minmax_element(s_k.begin(), s_k.end());
        if (s != nT) violate(step, "inactive stones differ from n*T");

        bool irregular = false;  // halt (fixed) or corruption (generalized)
        if (fixed) {
          const bool balls_halt = gap * nn > nT;
          const bool stones_halt = (*shi - *slo) * nn > s;
          if (balls_halt != stones_halt) violate(step, "halting conditions disagree");
          if (balls_halt) {
            report.halted = true;
            report.halt_step = step;
            break;
          }
        } else {
          const Rational eps = exact_rational(gp.epsilon);
          const bool balls_corrupt = Rational(gap * nn) > eps * nT;
          const bool stones_corrupt = Rational((*shi - *slo) * nn) > eps * s;
          if (balls_corrupt != stones_corrupt) violate(step, "corruption conditions disagree");
          irregular = balls_corrupt;
        }

        // The strategy's color law against the stone proportions, exactly.
        const Rational T = threshold(loads, Rational(H));
        const auto law = selection_closed_form(loads, T);
        for (std::size_t k = 0; k < n; ++k)
          if (law[k] != Rational(s_k[k], s)) {
            violate(step, "color law differs from stone proportions at color " + std::to_string(k));
            break;
          }
        ++report.distribution_checks;
        if (!irregular && config.enumeration_every > 0 && inserts % config.enumeration_every == 0) {
          if (selection_by_enumeration(loads, T) != law) violate(step, "enumeration differs from closed form");
          ++report.enumeration_checks;
        }

        const std::int64_t batches_before = game.batches();
        const Stone stone = game.activate(rng);
        if (game.batches() != batches_before) ++report.batch_additions;
        color = stone.color;
        HashPair pair;
        StrategyDecision d;
        if (irregular) {
          pair = {static_cast<Bin>(rng.below(n)), static_cast<Bin>(rng.below(n))};
          d = {rng.coin() ? pair.first : pair.second, color, true, pair.first == pair.second ? 1.0 : 0.5};
          ++report.corruptions;
        } else {
          d = realize_choice(color, loads, static_cast<double>(nT), rng, pair);
        }
        system.insert_decided(op.value, pair, d);
        ++inserts;
      } else {
        const BallLabel label = op.kind == Operation::Kind::Delete ? op.value : system.label_at_rank(op.value);
        const std::size_t rank = system.rank_of(label);
        color = system.ball(label).color;
        const Stone stone = game.deactivate(rank);
        if (stone.color != color) violate(step, "deactivated stone color differs from deleted ball color");
        system.apply(Operation::erase(label), no_policy, unused);
      }
    } catch (const OperationError& e) {
      throw ScriptError(pos, e.what());
    }

    const auto loads = system.color_loads();
    const auto& active = game.active_color_counts();
    if (!std::equal(loads.begin(), loads.end(), active.begin())) violate(step, "balls per color != active stones");
    const std::int64_t expected_total =
        fixed ? nn * Q : nn * (ceil_div(system.m_seen(), nn) + delta);
    if (game.total_stones() != expected_total) violate(step, "total stone count off");

    ++report.steps;
    if (config.record_trace) {
      CoupledStep cs;
      cs.step = step;
      cs.op = op.kind;
      cs.color = color;
      cs.balls_per_color.assign(loads.begin(), loads.end());
      cs.stones_per_color = active;
      cs.violation = report.violations != violations_before;
      report.trace.push_back(std::move(cs));
    }
  }
  report.final_batches = game.batches();
  return report;
}

void write_coupled_csv(std::ostream& out, const CouplingReport& report, std::size_t n) {
  out << "step,op,color";
  for (std::size_t k = 0; k < n; ++k) out << ",balls_" << k;
  for (std::size_t k = 0; k < n; ++k) out << ",stones_" << k;
  out << ",violation\n";
  for (const auto& s : report.trace) {
    out << s.step << ',' << kind_name(s.op) << ',' << s.color;
    for (auto v : s.balls_per_color) out << ',' << v;
    for (auto v : s.stones_per_color) out << ',' << v;
    out << ',' << (s.violation ? 1 : 0) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Uniform active-set check
// ---------------------------------------------------------------------------

SubsetReport uniform_subset_test(const AdversaryScript& script, std::size_t n, std::int64_t Q, std::uint64_t trials,
                                 Rng& rng) {
  const std::size_t stones = n * static_cast<std::size_t>(Q);
  if (stones > 12) throw ConfigError("subset test needs n * Q <= 12");
  if (script.ops.size() > 10) throw ConfigError("subset test needs at most 10 operations");
  require(trials > 0, "subset test needs trials");

  std::map<std::uint32_t, std::uint64_t> tally;
  std::size_t inactive_size = 0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    StoneGame game = StoneGame::fixed(n, Q);
    std::vector<BallLabel> order;  // activation labels, oldest first
    for (std::size_t pos = 0; pos < script.ops.size(); ++pos) {
      const Operation& op = script.ops[pos];
      try {
        if (op.is_insert()) {
          game.activate(rng);
          order.push_back(op.value);
        } else {
          std::size_t rank = op.value;
          if (op.kind == Operation::Kind::Delete) {
            auto it = std::find(order.begin(), order.end(), op.value);
            if (it == order.end()) throw OperationError("label not active");
            rank = static_cast<std::size_t>(order.end() - it);
          }
          if (rank < 1 || rank > order.size()) throw OperationError("rank out of range");
          game.deactivate(rank);
          order.erase(order.end() - static_cast<std::ptrdiff_t>(rank));
        }
      } catch (const OperationError& e) {
        throw ScriptError(pos, e.what());
      }
    }
    std::uint32_t mask = 0;
    for (const Stone& s : game.inactive()) mask |= 1u << (s.color * static_cast<std::uint32_t>(Q) + s.batch);
    ++tally[mask];
    inactive_size = game.inactive_size();
  }

  SubsetReport report;
  report.stones = stones;
  report.inactive_size = inactive_size;
  report.trials = trials;
  std::vector<std::uint64_t> counts;
  for (std::uint32_t mask = 0; mask < (1u << stones); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) != inactive_size) continue;
    const auto it = tally.find(mask);
    const std::uint64_t c = it == tally.end() ? 0 : it->second;
    report.tallies.emplace_back(mask, c);
    counts.push_back(c);
  }
  if (counts.size() == 1) {
    report.degenerate = true;
    return report;
  }
  report.chi = stats::chi_square_uniform(counts);
  return report;
}

}  // namespace twochoice
