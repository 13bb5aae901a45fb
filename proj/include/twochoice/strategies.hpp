#pragma once

#include "twochoice/policy.hpp"
#include "twochoice/rational.hpp"

#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace twochoice {

class Rng;

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

/// Modulated rule knobs. The slack added to m/n is c * log(m) in the configured
/// base (0 means natural log). With integral_slack the slack is rounded up to
/// an integer, which makes m/n + slack a whole number of stones per color when
/// n divides m, as the stone-game coupling requires.
struct ModulatedParams {
  double c = 4.0;
  double log_base = 0.0;
  bool integral_slack = false;

  [[nodiscard]] double slack(std::int64_t m) const;
};

/// Generalized rule knobs. Delta = ceil(c * epsilon^-2 * log M), an integer so that
/// the coupled stone game holds whole batches.
struct GeneralizedParams {
  double c = 4.0;
  double epsilon = 0.25;
  std::int64_t M = 0;
  double log_base = 0.0;

  [[nodiscard]] std::int64_t delta() const;
  void validate() const;
};

double log_in_base(double x, double base);

// ---------------------------------------------------------------------------
// Runtime decisions
// ---------------------------------------------------------------------------

StrategyDecision single_choice(const HashPair& pair);

/// Less loaded of the two bins; ties broken by a fair coin.
StrategyDecision greedy(const HashPair& pair, const LoadView& view, Rng& rng);

/// The modulated rule against m = view.m_cap. Halts when max - min > T.
Placement modulated_greedy(const HashPair& pair, const LoadView& view, const ModulatedParams& params, Rng& rng);

/// The generalized rule against m = view.m_seen. Never halts; corrupts instead.
StrategyDecision generalized_modulated_greedy(const HashPair& pair, const LoadView& view,
                                              const GeneralizedParams& params, Rng& rng);

struct OneBin {
  Bin bin = 0;
};
struct TwoBins {
  HashPair pair;
};
using Offer = std::variant<OneBin, TwoBins>;

struct AdapterDecision {
  StrategyDecision decision;
  double residual = 0.5;  // q, meaningful for TwoBins offers
};

/// (1+beta)-choice placement realised through the generalized rule with epsilon = beta/2.
/// A two-bin offer picks pair.first with q = (p - (1-beta)/2) / beta where p is
/// the generalized rule's probability for pair.first. Throws InvariantViolation when q
/// leaves [0, 1].
AdapterDecision one_plus_beta_adapter(const Offer& offer, const LoadView& view, double beta,
                                      const GeneralizedParams& params, Rng& rng);

// ---------------------------------------------------------------------------
// Exact layer
// ---------------------------------------------------------------------------

/// m/n + slack for the modulated rule, exact (the double slack is converted exactly).
Rational modulated_headroom(std::int64_t m, std::size_t n, const ModulatedParams& params);

/// ceil(m/n) + Delta for the generalized rule.
Rational generalized_headroom(std::int64_t m_seen, std::size_t n, const GeneralizedParams& params);

/// T = headroom - mean load.
Rational threshold(std::span<const std::int64_t> loads, const Rational& headroom);

/// Probability the modulated bias rule puts the ball in pair.first.
Rational first_choice_probability(std::span<const std::int64_t> loads, const Rational& T, const HashPair& pair);

/// (T + mean - l_k) / (n T) for every bin.
std::vector<Rational> selection_closed_form(std::span<const std::int64_t> loads, const Rational& T);

/// Sum over all n^2 equally likely pairs of the bias rule's outcome.
std::vector<Rational> selection_by_enumeration(std::span<const std::int64_t> loads, const Rational& T);

/// Both of the above, asserted equal. Throws std::domain_error unless every
/// pairwise load difference is at most T.
std::vector<Rational> selection_distribution(std::span<const std::int64_t> loads, const Rational& T);

/// Color distribution of the generalized rule (corrupted or not): (H - l_k) / (n T).
std::vector<Rational> generalized_color_distribution(std::span<const std::int64_t> color_loads,
                                                     std::int64_t m_seen, const GeneralizedParams& params);

/// Bin marginal of the generalized rule over a uniformly random pair.
std::vector<Rational> generalized_bin_marginal(std::span<const std::int64_t> color_loads, std::int64_t m_seen,
                                               const GeneralizedParams& params);

/// Residual q for a two-bin offer, exact.
Rational one_plus_beta_residual(std::span<const std::int64_t> color_loads, std::int64_t m_seen,
                                const GeneralizedParams& params, const Rational& beta, const HashPair& pair);

/// Bin marginal of the (1+beta) offer process driven by the adapter.
std::vector<Rational> one_plus_beta_marginal(std::span<const std::int64_t> color_loads, std::int64_t m_seen,
                                             const GeneralizedParams& params, const Rational& beta);

// ---------------------------------------------------------------------------
// Policies for the engine
// ---------------------------------------------------------------------------

class SingleChoicePolicy final : public PlacementPolicy {
 public:
  Placement place(const HashPair& pair, const LoadView&, Rng&) override { return single_choice(pair); }
  [[nodiscard]] std::string_view name() const override { return "single"; }
};

class GreedyPolicy final : public PlacementPolicy {
 public:
  Placement place(const HashPair& pair, const LoadView& view, Rng& rng) override { return greedy(pair, view, rng); }
  [[nodiscard]] std::string_view name() const override { return "greedy"; }
};

class ModulatedGreedyPolicy final : public PlacementPolicy {
 public:
  explicit ModulatedGreedyPolicy(ModulatedParams params) : params_(params) {}
  Placement place(const HashPair& pair, const LoadView& view, Rng& rng) override {
    return modulated_greedy(pair, view, params_, rng);
  }
  [[nodiscard]] std::string_view name() const override { return "modulated"; }
  [[nodiscard]] const ModulatedParams& params() const noexcept { return params_; }

 private:
  ModulatedParams params_;
};

class GeneralizedModulatedGreedyPolicy final : public PlacementPolicy {
 public:
  explicit GeneralizedModulatedGreedyPolicy(GeneralizedParams params) : params_(params) { params_.validate(); }
  Placement place(const HashPair& pair, const LoadView& view, Rng& rng) override {
    return generalized_modulated_greedy(pair, view, params_, rng);
  }
  [[nodiscard]] std::string_view name() const override { return "generalized"; }
  [[nodiscard]] const GeneralizedParams& params() const noexcept { return params_; }

 private:
  GeneralizedParams params_;
};

/// The (1+beta)-choice process: with probability 1 - beta the ball is offered
/// only pair.first, otherwise both bins, and the adapter decides.
class OnePlusBetaPolicy final : public PlacementPolicy {
 public:
  OnePlusBetaPolicy(double beta, GeneralizedParams params);
  Placement place(const HashPair& pair, const LoadView& view, Rng& rng) override;
  [[nodiscard]] std::string_view name() const override { return "one_plus_beta"; }

  [[nodiscard]] double beta() const noexcept { return beta_; }
  [[nodiscard]] const GeneralizedParams& params() const noexcept { return params_; }
  [[nodiscard]] double residual_min() const noexcept { return q_min_; }
  [[nodiscard]] double residual_max() const noexcept { return q_max_; }
  [[nodiscard]] std::uint64_t two_bin_offers() const noexcept { return two_bin_offers_; }

 private:
  double beta_;
  GeneralizedParams params_;
  double q_min_ = std::numeric_limits<double>::infinity();
  double q_max_ = -std::numeric_limits<double>::infinity();
  std::uint64_t two_bin_offers_ = 0;
};

}  // namespace twochoice
