#include "twochoice/strategies.hpp"

#include "twochoice/errors.hpp"
#include "twochoice/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace twochoice {

namespace {

std::int64_t sum_of(std::span<const std::int64_t> loads) {
  return std::accumulate(loads.begin(), loads.end(), std::int64_t{0});
}

std::pair<std::int64_t, std::int64_t> min_max(std::span<const std::int64_t> loads) {
  auto [lo, hi] = std::minmax_element(loads.begin(), loads.end());
  return {*lo, *hi};
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return a <= 0 ? 0 : (a + b - 1) / b; }

// Bias rule for pair (i, j) given n*T (positive). Returns the probability of i.
double first_probability(std::int64_t li, std::int64_t lj, double nT, std::size_t n) {
  return 0.5 + static_cast<double>(n) * static_cast<double>(lj - li) / (2.0 * nT);
}

StrategyDecision biased_pick(const HashPair& pair, double p, Rng& rng) {
  if (pair.first == pair.second) return {pair.first, pair.first, false, 1.0};
  ensure(p >= 0.0 && p <= 1.0, "bias probability " + std::to_string(p) + " outside [0, 1]");
  if (rng.canonical() < p) return {pair.first, pair.first, false, p};
  return {pair.second, pair.second, false, 1.0 - p};
}

}  // namespace

double log_in_base(double x, double base) {
  if (base == 0.0) return std::log(x);
  return std::log(x) / std::log(base);
}

double ModulatedParams::slack(std::int64_t m) const {
  const double s = c * log_in_base(static_cast<double>(std::max<std::int64_t>(m, 2)), log_base);
  return integral_slack ? std::ceil(s) : s;
}

std::int64_t GeneralizedParams::delta() const {
  return static_cast<std::int64_t>(
      std::ceil(c / (epsilon * epsilon) * log_in_base(static_cast<double>(std::max<std::int64_t>(M, 2)), log_base)));
}

void GeneralizedParams::validate() const {
  require(c > 0.0, "c must be positive");
  require(epsilon > 0.0 && epsilon <= 1.0, "epsilon must lie in (0, 1]");
  require(M >= 2, "M must be at least 2");
  require(log_base == 0.0 || log_base > 1.0, "log base must exceed 1");
}

StrategyDecision single_choice(const HashPair& pair) { return {pair.first, pair.first, false, 1.0}; }

StrategyDecision greedy(const HashPair& pair, const LoadView& view, Rng& rng) {
  if (pair.first == pair.second) return {pair.first, pair.first, false, 1.0};
  const auto li = view.color_loads[pair.first];
  const auto lj = view.color_loads[pair.second];
  if (li < lj) return {pair.first, pair.first, false, 1.0};
  if (lj < li) return {pair.second, pair.second, false, 1.0};
  const Bin b = rng.coin() ? pair.first : pair.second;
  return {b, b, false, 0.5};
}

Placement modulated_greedy(const HashPair& pair, const LoadView& view, const ModulatedParams& params, Rng& rng) {
  const std::size_t n = view.n();
  const auto [lo, hi] = min_max(view.color_loads);
  // n*T = n*(m/n + slack) - sum of loads.
  const double nT = static_cast<double>(view.m_cap) + static_cast<double>(n) * params.slack(view.m_cap) -
                    static_cast<double>(view.present);
  if (static_cast<double>(hi - lo) * static_cast<double>(n) > nT) return Halt{};
  return biased_pick(pair, first_probability(view.color_loads[pair.first], view.color_loads[pair.second], nT, n),
                     rng);
}

StrategyDecision generalized_modulated_greedy(const HashPair& pair, const LoadView& view,
                                              const GeneralizedParams& params, Rng& rng) {
  const std::size_t n = view.n();
  const auto nn = static_cast<std::int64_t>(n);
  const std::int64_t H = ceil_div(view.m_seen, nn) + params.delta();
  const std::int64_t nT = nn * H - view.present;  // n*T, integral
  const auto [lo, hi] = min_max(view.color_loads);
  if (static_cast<double>(hi - lo) * static_cast<double>(n) <= params.epsilon * static_cast<double>(nT))
    return biased_pick(pair,
                       first_probability(view.color_loads[pair.first], view.color_loads[pair.second],
                                         static_cast<double>(nT), n),
                       rng);
  // Corrupted: uniform bin from the pair, color drawn with weight H - l_k.
  Bin bin = pair.first;
  double p = 1.0;
  if (pair.first != pair.second) {
    bin = rng.coin() ? pair.first : pair.second;
    p = 0.5;
  }
  auto u = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(nT)));
  Bin color = 0;
  for (;; ++color) {
    const std::int64_t w = H - view.color_loads[color];
    ensure(w >= 0, "negative color weight");
    if (u < w) break;
    u -= w;
  }
  return {bin, color, true, p};
}

AdapterDecision one_plus_beta_adapter(const Offer& offer, const LoadView& view, double beta,
                                      const GeneralizedParams& params, Rng& rng) {
  if (const auto* one = std::get_if<OneBin>(&offer)) return {{one->bin, one->bin, false, 1.0}, 0.5};
  const HashPair pair = std::get<TwoBins>(offer).pair;
  if (pair.first == pair.second) return {{pair.first, pair.first, false, 1.0}, 0.5};
  const std::size_t n = view.n();
  const auto nn = static_cast<std::int64_t>(n);
  const std::int64_t H = ceil_div(view.m_seen, nn) + params.delta();
  const std::int64_t nT = nn * H - view.present;
  const auto [lo, hi] = min_max(view.color_loads);
  double p = 0.5;
  if (static_cast<double>(hi - lo) * static_cast<double>(n) <= params.epsilon * static_cast<double>(nT))
    p = first_probability(view.color_loads[pair.first], view.color_loads[pair.second], static_cast<double>(nT), n);
  const double q = (p - (1.0 - beta) / 2.0) / beta;
  // Allow rounding noise only.
  ensure(q >= -1e-12 && q <= 1.0 + 1e-12, "adapter residual " + std::to_string(q) + " outside [0, 1]");
  const double qc = std::clamp(q, 0.0, 1.0);
  if (rng.canonical() < qc) return {{pair.first, pair.first, false, qc}, q};
  return {{pair.second, pair.second, false, 1.0 - qc}, q};
}

OnePlusBetaPolicy::OnePlusBetaPolicy(double beta, GeneralizedParams params) : beta_(beta), params_(params) {
  require(beta > 0.0 && beta <= 1.0, "beta must lie in (0, 1]");
  params_.epsilon = beta / 2.0;
  params_.validate();
}

Placement OnePlusBetaPolicy::place(const HashPair& pair, const LoadView& view, Rng& rng) {
  const bool two = rng.canonical() < beta_;
  const Offer offer = two ? Offer{TwoBins{pair}} : Offer{OneBin{pair.first}};
  const AdapterDecision d = one_plus_beta_adapter(offer, view, beta_, params_, rng);
  if (two && pair.first != pair.second) {
    ++two_bin_offers_;
    q_min_ = std::min(q_min_, d.residual);
    q_max_ = std::max(q_max_, d.residual);
  }
  return d.decision;
}

// ---------------------------------------------------------------------------
// Exact layer
// ---------------------------------------------------------------------------

Rational modulated_headroom(std::int64_t m, std::size_t n, const ModulatedParams& params) {
  return Rational(m, static_cast<std::int64_t>(n)) + exact_rational(params.slack(m));
}

Rational generalized_headroom(std::int64_t m_seen, std::size_t n, const GeneralizedParams& params) {
  return Rational(ceil_div(m_seen, static_cast<std::int64_t>(n)) + params.delta());
}

Rational threshold(std::span<const std::int64_t> loads, const Rational& headroom) {
  return headroom - Rational(sum_of(loads), static_cast<std::int64_t>(loads.size()));
}

Rational first_choice_probability(std::span<const std::int64_t> loads, const Rational& T, const HashPair& pair) {
  if (pair.first == pair.second) return Rational(1);
  return Rational(1, 2) + Rational(loads[pair.second] - loads[pair.first]) / (2 * T);
}

std::vector<Rational> selection_closed_form(std::span<const std::int64_t> loads, const Rational& T) {
  const auto n = static_cast<std::int64_t>(loads.size());
  const Rational mean(sum_of(loads), n);
  std::vector<Rational> out;
  out.reserve(loads.size());
  for (auto l : loads) out.push_back((T + mean - l) / (n * T));
  return out;
}

std::vector<Rational> selection_by_enumeration(std::span<const std::int64_t> loads, const Rational& T) {
  const std::size_t n = loads.size();
  const Rational w(1, static_cast<std::int64_t>(n * n));
  std::vector<Rational> out(n, Rational(0));
  for (Bin i = 0; i < n; ++i)
    for (Bin j = 0; j < n; ++j) {
      const Rational p = first_choice_probability(loads, T, {i, j});
      out[i] += w * p;
      if (i != j) out[j] += w * (1 - p);
    }
  return out;
}

std::vector<Rational> selection_distribution(std::span<const std::int64_t> loads, const Rational& T) {
  if (loads.size() < 2) throw std::domain_error("need at least two bins");
  const auto [lo, hi] = min_max(loads);
  if (T <= 0 || Rational(hi - lo) > T) throw std::domain_error("load gap exceeds threshold");
  auto closed = selection_closed_form(loads, T);
  ensure(closed == selection_by_enumeration(loads, T), "closed form disagrees with enumeration");
  return closed;
}

std::vector<Rational> generalized_color_distribution(std::span<const std::int64_t> color_loads,
                                                     std::int64_t m_seen, const GeneralizedParams& params) {
  const Rational H = generalized_headroom(m_seen, color_loads.size(), params);
  return selection_closed_form(color_loads, threshold(color_loads, H));
}

namespace {

bool generalized_uncorrupted(std::span<const std::int64_t> loads, const Rational& T, double epsilon) {
  const auto [lo, hi] = min_max(loads);
  return Rational(hi - lo) <= exact_rational(epsilon) * T;
}

}  // namespace

std::vector<Rational> generalized_bin_marginal(std::span<const std::int64_t> color_loads, std::int64_t m_seen,
                                               const GeneralizedParams& params) {
  const Rational T = threshold(color_loads, generalized_headroom(m_seen, color_loads.size(), params));
  if (generalized_uncorrupted(color_loads, T, params.epsilon)) return selection_distribution(color_loads, T);
  return std::vector<Rational>(color_loads.size(), Rational(1, static_cast<std::int64_t>(color_loads.size())));
}

Rational one_plus_beta_residual(std::span<const std::int64_t> color_loads, std::int64_t m_seen,
                                const GeneralizedParams& params, const Rational& beta, const HashPair& pair) {
  GeneralizedParams g = params;
  g.epsilon = to_double(beta) / 2.0;
  const Rational T = threshold(color_loads, generalized_headroom(m_seen, color_loads.size(), g));
  Rational p(1, 2);
  if (pair.first != pair.second && generalized_uncorrupted(color_loads, T, g.epsilon))
    p = first_choice_probability(color_loads, T, pair);
  return (p - (1 - beta) / 2) / beta;
}

std::vector<Rational> one_plus_beta_marginal(std::span<const std::int64_t> color_loads, std::int64_t m_seen,
                                             const GeneralizedParams& params, const Rational& beta) {
  const std::size_t n = color_loads.size();
  const auto nn = static_cast<std::int64_t>(n);
  std::vector<Rational> out(n, Rational(0));
  const Rational w(1, nn * nn);
  for (Bin i = 0; i < n; ++i) {
    // One-bin offer of pair.first = i happens for n pairs, total weight 1/n.
    out[i] += (1 - beta) * Rational(1, nn);
    for (Bin j = 0; j < n; ++j) {
      if (i == j) {
        out[i] += beta * w;
        continue;
      }
      const Rational q = one_plus_beta_residual(color_loads, m_seen, params, beta, {i, j});
      out[i] += beta * w * q;
      out[j] += beta * w * (1 - q);
    }
  }
  return out;
}

}  // namespace twochoice
