#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "probmarket/config.hpp"
#include "probmarket/economy.hpp"

namespace probmarket {

/// Market clearing accepts a price once the good's excess demand is within
/// this of zero.
inline constexpr double kClearingTolerance = 1e-9;

struct ConvergenceReport {
  bool converged = false;
  int rounds_used = 0;
  double final_max_delta = std::numeric_limits<double>::infinity();
  /// Geometric extrapolation of the remaining distance to the fixed point,
  /// from the trailing contraction ratio of per-round deltas.
  double error_estimate = std::numeric_limits<double>::infinity();
  std::vector<std::string> warnings;

  struct RoundSnapshot {
    int round = 0;
    std::vector<double> prices;
  };
  /// Last few rounds of prices, oldest first.
  std::deque<RoundSnapshot> trajectory;
  static constexpr std::size_t kTrajectoryCapacity = 8;

  void add_warning(std::string msg) {
    if (warnings.size() < 200) warnings.push_back(std::move(msg));
  }
};

/// Per-clearing observer: committed price and residual excess demand.
using TraceSink =
    std::function<void(int round, GoodId good, double price, double excess)>;

/// Price in the bracket at which the good's market clears, everything else
/// held fixed. Excess demand is strictly decreasing in own price, so the
/// zero is found by bisection on its sign. If the sign never changes across
/// the bracket, the endpoint on the excess-demand side is returned and a
/// warning recorded.
inline double clear_price(const Economy& econ, GoodId g, const PriceVector& prices,
                          const SolverConfig& config,
                          std::vector<std::string>* warnings = nullptr,
                          EvalDiagnostics* diag = nullptr) {
  if (g == econ.numeraire()) throw Error("the numeraire price is pinned at 1");
  PriceVector trial = prices;
  auto excess_at = [&](double p) {
    trial[g] = p;
    return aggregate_excess_demand(econ, g, trial, diag);
  };
  auto warn = [&](const std::string& msg) {
    if (warnings) warnings->push_back("good " + econ.good_name(g) + ": " + msg);
  };

  double lo = config.bracket.lo;
  double hi = config.bracket.hi;
  const double z_lo = excess_at(lo);
  if (std::abs(z_lo) <= kClearingTolerance) return lo;
  if (z_lo < 0.0) {
    warn("excess supply across the whole bracket, pinned at lower bound");
    return lo;
  }
  const double z_hi = excess_at(hi);
  if (std::abs(z_hi) <= kClearingTolerance) return hi;
  if (z_hi > 0.0) {
    warn("excess demand across the whole bracket, pinned at upper bound");
    return hi;
  }

  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    const double z = excess_at(mid);
    if (std::abs(z) <= kClearingTolerance) return mid;
    if (z > 0.0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * mid) break;
  }
  warn("bisection exhausted the bracket without meeting the clearing tolerance");
  return mid;
}

namespace detail {

// Clear one good for the round, auto-expanding a default-height bracket once
// if demand is still positive at 1 (a price above 1 means the claim would be
// worth more than sure money — a diagnostic for miscompiled economies).
inline double clear_with_expansion(const Economy& econ, GoodId g, const PriceVector& prices,
                                   const SolverConfig& config, ConvergenceReport& report,
                                   EvalDiagnostics* diag) {
  std::vector<std::string> local;
  double p = clear_price(econ, g, prices, config, &local, diag);
  if (p == config.bracket.hi && config.bracket.hi <= 1.0 && !local.empty()) {
    SolverConfig widened = config;
    widened.bracket.hi = 2.0;
    report.add_warning("good " + econ.good_name(g) +
                       ": positive excess demand at price 1, bracket expanded to 2");
    local.clear();
    p = clear_price(econ, g, prices, widened, &local, diag);
  }
  for (auto& msg : local) report.add_warning(std::move(msg));
  return p;
}

}  // namespace detail

/// One auction round: every non-numeraire good is cleared once, in good id
/// order (creation order, root claims first). Sequential mode commits each
/// price immediately; snapshot mode clears every good against the round
/// start and then commits a damped step toward the clearing prices.
/// Returns the largest absolute price change.
inline double run_round(const Economy& econ, PriceVector& prices, const SolverConfig& config,
                        ConvergenceReport& report, int round_index = 0,
                        const TraceSink& trace = {}, EvalDiagnostics* diag = nullptr) {
  double max_delta = 0.0;
  const GoodId numeraire = econ.numeraire();

  if (config.mode == SweepMode::Sequential) {
    for (GoodId g = 0; g < econ.good_count(); ++g) {
      if (g == numeraire) continue;
      const double p = detail::clear_with_expansion(econ, g, prices, config, report, diag);
      max_delta = std::max(max_delta, std::abs(p - prices[g]));
      prices[g] = p;
    }
  } else {
    const PriceVector snapshot = prices;
    std::vector<double> cleared(econ.good_count());
    for (GoodId g = 0; g < econ.good_count(); ++g) {
      if (g == numeraire) continue;
      cleared[g] = detail::clear_with_expansion(econ, g, snapshot, config, report, diag);
    }
    for (GoodId g = 0; g < econ.good_count(); ++g) {
      if (g == numeraire) continue;
      const double p = prices[g] + config.snapshot_damping * (cleared[g] - prices[g]);
      max_delta = std::max(max_delta, std::abs(p - prices[g]));
      prices[g] = p;
    }
  }

  if (trace) {
    for (GoodId g = 0; g < econ.good_count(); ++g) {
      if (g == numeraire) continue;
      trace(round_index, g, prices[g], aggregate_excess_demand(econ, g, prices));
    }
  }
  return max_delta;
}

/// Tatonnement from an explicit starting point. Rounds repeat until the
/// largest per-round price change falls below tol -- with the extra demand
/// that the geometric tail of the delta sequence also projects below tol,
/// since a slowly contracting sweep can satisfy a raw delta test while far
/// from the fixed point. Non-convergence is reported, not thrown.
inline std::pair<PriceVector, ConvergenceReport> solve_from(const Economy& econ,
                                                            const SolverConfig& config,
                                                            PriceVector prices,
                                                            const TraceSink& trace = {}) {
  config.validate();
  if (prices.size() != econ.good_count())
    throw Error("initial price vector size does not match the economy");
  ConvergenceReport report;
  prices[econ.numeraire()] = 1.0;

  EvalDiagnostics diag;
  double d1 = std::numeric_limits<double>::infinity();  // latest delta
  double d2 = std::numeric_limits<double>::infinity();
  double d3 = std::numeric_limits<double>::infinity();

  for (int round = 1; round <= config.max_rounds; ++round) {
    const double delta = run_round(econ, prices, config, report, round, trace, &diag);
    report.rounds_used = round;
    report.final_max_delta = delta;

    report.trajectory.push_back({round, prices.values()});
    if (report.trajectory.size() > ConvergenceReport::kTrajectoryCapacity)
      report.trajectory.pop_front();

    d3 = d2;
    d2 = d1;
    d1 = delta;
    double ratio = 0.0;
    if (std::isfinite(d3) && d3 > 0.0 && d2 > 0.0 && d1 > 0.0)
      ratio = std::max({d1 / d2, d2 / d3});
    report.error_estimate =
        (ratio > 0.0 && ratio < 1.0) ? delta * ratio / (1.0 - ratio)
                                     : std::numeric_limits<double>::infinity();

    if (delta < config.tol &&
        (delta <= 0.01 * config.tol || report.error_estimate <= 0.25 * config.tol)) {
      report.converged = true;
      break;
    }
  }

  if (diag.price_floor_hits > 0)
    report.add_warning("price floor engaged " + std::to_string(diag.price_floor_hits) +
                       " time(s) during demand evaluation");
  return {std::move(prices), std::move(report)};
}

/// Tatonnement from a flat start at config.init_price.
inline std::pair<PriceVector, ConvergenceReport> solve(const Economy& econ,
                                                       const SolverConfig& config = {},
                                                       const TraceSink& trace = {}) {
  return solve_from(econ, config, econ.initial_prices(config.init_price), trace);
}

// ---------------------------------------------------------------------------
// Equilibrium audit

struct EquilibriumReport {
  struct GoodEntry {
    GoodId good = 0;
    double excess = 0.0;
  };
  struct ProducerEntry {
    std::size_t producer = 0;
    double unit_profit = 0.0;
  };
  struct ConsumerEntry {
    std::size_t consumer = 0;
    double ratio_residual = 0.0;  // |p_hi - alpha * p_lo|
  };

  std::vector<GoodEntry> goods;
  std::vector<ProducerEntry> producers;
  std::vector<ConsumerEntry> consumers;
  double max_excess = 0.0;
  double max_unit_profit = 0.0;
  double max_ratio_residual = 0.0;
  double tol = 0.0;
  bool pass = false;
};

/// Residuals of all three equilibrium conditions: material balance per good,
/// zero profit per producer, and the price ratio each consumer enforces.
inline EquilibriumReport check_equilibrium(const Economy& econ, const PriceVector& prices,
                                           double tol) {
  EquilibriumReport r;
  r.tol = tol;
  for (GoodId g = 0; g < econ.good_count(); ++g) {
    if (g == econ.numeraire()) continue;
    const double z = aggregate_excess_demand(econ, g, prices);
    r.goods.push_back({g, z});
    r.max_excess = std::max(r.max_excess, std::abs(z));
  }
  for (std::size_t i = 0; i < econ.producers().size(); ++i) {
    const double profit = producer_unit_profit(econ.producers()[i], prices);
    r.producers.push_back({i, profit});
    r.max_unit_profit = std::max(r.max_unit_profit, std::abs(profit));
  }
  for (std::size_t i = 0; i < econ.consumers().size(); ++i) {
    const CesConsumer& c = econ.consumers()[i];
    const double resid = std::abs(prices[c.good_hi] - c.alpha * prices[c.good_lo]);
    r.consumers.push_back({i, resid});
    r.max_ratio_residual = std::max(r.max_ratio_residual, resid);
  }
  r.pass = r.max_excess <= tol && r.max_unit_profit <= tol && r.max_ratio_residual <= tol;
  return r;
}

}  // namespace probmarket
