#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "probmarket/network.hpp"

namespace probmarket {

/// A conjunction of literals over distinct nodes, kept sorted by node index.
/// The empty conjunction is the distinguished constant TRUE. Construction
/// rejects a literal together with its complement.
class Proposition {
 public:
  Proposition() = default;  // TRUE

  explicit Proposition(std::vector<Literal> lits) {
    std::sort(lits.begin(), lits.end(), [](const Literal& a, const Literal& b) {
      return a.node < b.node || (a.node == b.node && a.positive && !b.positive);
    });
    for (std::size_t i = 0; i + 1 < lits.size(); ++i) {
      if (lits[i].node == lits[i + 1].node) {
        if (lits[i].positive != lits[i + 1].positive)
          throw Error("contradictory proposition: a node appears with both polarities");
        lits.erase(lits.begin() + static_cast<std::ptrdiff_t>(i + 1));
        --i;
      }
    }
    lits_ = std::move(lits);
  }

  static Proposition truth() { return Proposition(); }

  static Proposition single(NodeIndex node, bool positive) {
    return Proposition({Literal{node, positive}});
  }

  bool is_true() const { return lits_.empty(); }
  const std::vector<Literal>& literals() const { return lits_; }

  bool matches(const Assignment& omega) const {
    for (const Literal& lit : lits_)
      if (!omega.satisfies(lit)) return false;
    return true;
  }

  /// Conjunction of two propositions; throws if they contradict.
  Proposition conjoin(const Proposition& other) const {
    std::vector<Literal> all = lits_;
    all.insert(all.end(), other.lits_.begin(), other.lits_.end());
    return Proposition(std::move(all));
  }

  std::optional<bool> polarity_of(NodeIndex node) const {
    for (const Literal& lit : lits_)
      if (lit.node == node) return lit.positive;
    return std::nullopt;
  }

  // Canonical order: literal node indices lexicographically, then polarity
  // patterns with positive before negative. Gives goods the listing order
  // <a1 a2>, <a1 !a2>, <!a1 a2>, <!a1 !a2>.
  friend std::strong_ordering operator<=>(const Proposition& a, const Proposition& b) {
    const std::size_t n = std::min(a.lits_.size(), b.lits_.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (a.lits_[i].node != b.lits_[i].node)
        return a.lits_[i].node <=> b.lits_[i].node;
    }
    if (a.lits_.size() != b.lits_.size()) return a.lits_.size() <=> b.lits_.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (a.lits_[i].positive != b.lits_[i].positive)
        return a.lits_[i].positive ? std::strong_ordering::less : std::strong_ordering::greater;
    }
    return std::strong_ordering::equal;
  }
  friend bool operator==(const Proposition& a, const Proposition& b) {
    return (a <=> b) == std::strong_ordering::equal;
  }

 private:
  std::vector<Literal> lits_;
};

/// Render as "<a1 !a2>" using the given node names; TRUE renders as "<T>".
inline std::string to_string(const Proposition& prop, const std::vector<std::string>& names) {
  if (prop.is_true()) return "<T>";
  std::string out = "<";
  bool first = true;
  for (const Literal& lit : prop.literals()) {
    if (!first) out += ' ';
    first = false;
    if (!lit.positive) out += '!';
    out += lit.node < names.size() ? names[lit.node] : "#" + std::to_string(lit.node);
  }
  return out + ">";
}

using GoodId = std::uint32_t;

/// A contingent claim: one numeraire unit if the proposition holds.
struct Good {
  GoodId id = 0;
  Proposition prop;
  bool is_numeraire = false;
};

/// Prices indexed by GoodId, in numeraire units per unit claim.
class PriceVector {
 public:
  PriceVector() = default;
  explicit PriceVector(std::size_t n, double value = 0.0) : v_(n, value) {}

  double& operator[](GoodId g) { return v_.at(g); }
  double operator[](GoodId g) const { return v_.at(g); }
  std::size_t size() const { return v_.size(); }
  void push_back(double p) { v_.push_back(p); }

  const std::vector<double>& values() const { return v_; }

  friend bool operator==(const PriceVector&, const PriceVector&) = default;

 private:
  std::vector<double> v_;
};

/// Two-good CES consumer. good_hi is the conjunction-with-child claim and
/// carries coefficient alpha; good_lo is the conditioning claim with
/// implicit coefficient 1. Endowed with `endowment` units of each.
struct CesConsumer {
  GoodId good_hi = 0;
  GoodId good_lo = 0;
  double alpha = 0.5;
  double sigma = 50.0;
  double endowment = 10.0;
};

/// Constant-returns arbitrageur between one claim and an equivalent bundle.
/// Activity y > 0 consumes `lhs` and produces one unit of every `rhs` good;
/// y < 0 runs the transform backwards.
struct ArbitrageProducer {
  GoodId lhs = 0;
  std::vector<GoodId> rhs;
  double activity_cap = 1e4;      // |y| never exceeds this
  double responsiveness = 100.0;  // y per unit profit, before the cap
};

/// Where an agent came from: which CPT row or which bundle identity.
struct Provenance {
  enum class Kind {
    ConditionalDirect,      // consumer for Pr(node | pattern)
    ConditionalComplement,  // consumer for the complementary row
    Identity,               // producer tying a parent claim to its refinements
    Query,                  // producer added for an ad-hoc query good
  };
  Kind kind = Kind::ConditionalDirect;
  NodeIndex node = 0;
  RowMask row = 0;
};

inline const char* to_string(Provenance::Kind k) {
  switch (k) {
    case Provenance::Kind::ConditionalDirect: return "direct";
    case Provenance::Kind::ConditionalComplement: return "complement";
    case Provenance::Kind::Identity: return "identity";
    case Provenance::Kind::Query: return "query";
  }
  return "?";
}

/// The full market: goods, agents, and their provenance. Immutable in use;
/// built by the compiler (or loaded from a dump) and then only read.
class Economy {
 public:
  GoodId add_good(Proposition prop, bool numeraire = false) {
    GoodId id = static_cast<GoodId>(goods_.size());
    if (numeraire) {
      if (!prop.is_true()) throw Error("numeraire good must be the TRUE claim");
      if (has_numeraire_) throw Error("economy already has a numeraire");
      has_numeraire_ = true;
      numeraire_ = id;
    }
    auto [it, inserted] = by_prop_.emplace(prop, id);
    if (!inserted) throw Error("duplicate good for one proposition");
    goods_.push_back(Good{id, std::move(prop), numeraire});
    return id;
  }

  void add_consumer(CesConsumer c, Provenance src) {
    check_good(c.good_hi);
    check_good(c.good_lo);
    if (c.good_hi == c.good_lo) throw Error("consumer must pair two distinct goods");
    consumers_.push_back(c);
    consumer_src_.push_back(src);
  }

  void add_producer(ArbitrageProducer p, Provenance src) {
    check_good(p.lhs);
    if (p.rhs.empty()) throw Error("producer needs at least one output good");
    for (GoodId g : p.rhs) check_good(g);
    producers_.push_back(std::move(p));
    producer_src_.push_back(src);
  }

  const std::vector<Good>& goods() const { return goods_; }
  const Good& good(GoodId g) const { return goods_.at(g); }
  std::size_t good_count() const { return goods_.size(); }
  GoodId numeraire() const {
    if (!has_numeraire_) throw Error("economy has no numeraire");
    return numeraire_;
  }

  std::optional<GoodId> find_good(const Proposition& prop) const {
    auto it = by_prop_.find(prop);
    if (it == by_prop_.end()) return std::nullopt;
    return it->second;
  }

  const std::vector<CesConsumer>& consumers() const { return consumers_; }
  const std::vector<ArbitrageProducer>& producers() const { return producers_; }
  const Provenance& consumer_provenance(std::size_t i) const { return consumer_src_.at(i); }
  const Provenance& producer_provenance(std::size_t i) const { return producer_src_.at(i); }

  /// Node names captured at compile time, for display and dumps.
  const std::vector<std::string>& node_names() const { return node_names_; }
  void set_node_names(std::vector<std::string> names) { node_names_ = std::move(names); }

  std::string good_name(GoodId g) const { return to_string(good(g).prop, node_names_); }

  const std::vector<std::string>& notices() const { return notices_; }
  void add_notice(std::string msg) { notices_.push_back(std::move(msg)); }

  PriceVector initial_prices(double init_price) const {
    PriceVector p(good_count(), init_price);
    p[numeraire()] = 1.0;
    return p;
  }

 private:
  void check_good(GoodId g) const {
    if (g >= goods_.size()) throw Error("agent references unknown good");
  }

  std::vector<Good> goods_;
  std::vector<CesConsumer> consumers_;
  std::vector<ArbitrageProducer> producers_;
  std::vector<Provenance> consumer_src_;
  std::vector<Provenance> producer_src_;
  std::map<Proposition, GoodId> by_prop_;
  std::vector<std::string> node_names_;
  std::vector<std::string> notices_;
  GoodId numeraire_ = 0;
  bool has_numeraire_ = false;
};

// ---------------------------------------------------------------------------
// Agent behavior

/// Counters for numerical guardrails that fired during evaluation.
struct EvalDiagnostics {
  long price_floor_hits = 0;
};

/// Prices below this are lifted before demand evaluation; the demand
/// formulas are singular at zero price.
inline constexpr double kPriceFloor = 1e-9;

inline double ces_utility(const CesConsumer& c, double x_hi, double x_lo) {
  if (x_hi < 0.0 || x_lo < 0.0) throw Error("negative consumption quantity");
  if (c.sigma == 1.0) throw Error("CES utility undefined at sigma = 1");
  const double rho = (c.sigma - 1.0) / c.sigma;
  const double inner = c.alpha * std::pow(x_hi, rho) + std::pow(x_lo, rho);
  return std::pow(inner, 1.0 / rho);
}

struct Demand {
  double hi = 0.0;
  double lo = 0.0;
};

/// Utility-maximizing bundle on the budget line. Evaluated in a form that
/// telescopes: with R = alpha * p_lo / p_hi and whichever of R^sigma or
/// R^-sigma is <= 1, both demands share one denominator, so no intermediate
/// can overflow and the budget identity holds to rounding.
inline Demand ces_demand(const CesConsumer& c, double p_hi, double p_lo,
                         EvalDiagnostics* diag = nullptr) {
  if (!(p_hi > 0.0) || !(p_lo > 0.0)) throw Error("demand is unbounded at non-positive price");
  if (p_hi < kPriceFloor) {
    p_hi = kPriceFloor;
    if (diag) ++diag->price_floor_hits;
  }
  if (p_lo < kPriceFloor) {
    p_lo = kPriceFloor;
    if (diag) ++diag->price_floor_hits;
  }
  const double income = p_hi * c.endowment + p_lo * c.endowment;
  const double ratio = c.alpha * p_lo / p_hi;
  if (ratio <= 1.0) {
    const double w = std::pow(ratio, c.sigma);  // x_hi / x_lo
    const double denom = p_lo + p_hi * w;
    return {income * w / denom, income / denom};
  }
  const double v = std::pow(1.0 / ratio, c.sigma);  // x_lo / x_hi
  const double denom = p_hi + p_lo * v;
  return {income / denom, income * v / denom};
}

/// Net demand (demand minus endowment) per good; both components vanish
/// exactly when p_hi = alpha * p_lo.
inline std::pair<double, double> consumer_excess_demand(const CesConsumer& c,
                                                        const PriceVector& prices,
                                                        EvalDiagnostics* diag = nullptr) {
  Demand d = ces_demand(c, prices[c.good_hi], prices[c.good_lo], diag);
  return {d.hi - c.endowment, d.lo - c.endowment};
}

/// Value of turning one lhs unit into the rhs bundle at current prices.
inline double producer_unit_profit(const ArbitrageProducer& p, const PriceVector& prices) {
  double s = 0.0;
  for (GoodId g : p.rhs) s += prices[g];
  return s - prices[p.lhs];
}

/// Activity level: linear in unit profit, capped at +-activity_cap. Zero
/// exactly when the bundle identity prices out even.
inline double producer_response(const ArbitrageProducer& p, const PriceVector& prices) {
  const double y = p.responsiveness * producer_unit_profit(p, prices);
  return std::clamp(y, -p.activity_cap, p.activity_cap);
}

/// Total net demand for one good across every agent: consumer net demands
/// plus producer input demand (+y on lhs, -y per rhs occurrence). Zero for
/// every good is the material-balance condition.
inline double aggregate_excess_demand(const Economy& econ, GoodId g, const PriceVector& prices,
                                      EvalDiagnostics* diag = nullptr) {
  double z = 0.0;
  for (const CesConsumer& c : econ.consumers()) {
    if (c.good_hi != g && c.good_lo != g) continue;
    auto [zhi, zlo] = consumer_excess_demand(c, prices, diag);
    if (c.good_hi == g) z += zhi;
    if (c.good_lo == g) z += zlo;
  }
  for (const ArbitrageProducer& p : econ.producers()) {
    bool touches = p.lhs == g;
    for (GoodId r : p.rhs) touches = touches || r == g;
    if (!touches) continue;
    const double y = producer_response(p, prices);
    if (p.lhs == g) z += y;
    for (GoodId r : p.rhs)
      if (r == g) z -= y;
  }
  return z;
}

}  // namespace probmarket
