#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "probmarket/compiler.hpp"
#include "probmarket/oracle.hpp"
#include "test_support.hpp"

using namespace probmarket;
using testsupport::four_node_example;
using testsupport::random_moral_net;

namespace {

std::vector<std::string> names_of(const std::vector<Proposition>& props,
                                  const std::vector<std::string>& node_names) {
  std::vector<std::string> out;
  for (const auto& p : props) out.push_back(to_string(p, node_names));
  return out;
}

}  // namespace

TEST_CASE("per-node goods of the example") {
  const BayesNet net = four_node_example();
  const std::vector<std::string> nm = {"a1", "a2", "a3", "a4"};

  CHECK(names_of(goods_for_node(net, 0), nm) == std::vector<std::string>{"<a1>", "<!a1>"});

  CHECK(names_of(goods_for_node(net, 1), nm) ==
        std::vector<std::string>{"<a1 a2>", "<a1 !a2>", "<!a1 a2>", "<!a1 !a2>"});

  // a3 introduces only the eight triples; the pair claims already exist.
  const auto g3 = goods_for_node(net, 2);
  REQUIRE(g3.size() == 8);
  for (const auto& p : g3) CHECK(p.literals().size() == 3);

  // a4 introduces its four pairs plus the parent-only claims <a3>, <!a3>.
  CHECK(names_of(goods_for_node(net, 3), nm) ==
        std::vector<std::string>{"<a3>", "<!a3>", "<a3 a4>", "<a3 !a4>", "<!a3 a4>",
                                 "<!a3 !a4>"});
}

TEST_CASE("root consumers pit the node claims against sure money") {
  const BayesNet net = four_node_example();
  const auto specs = consumers_for_node(net, 0);
  REQUIRE(specs.size() == 2);
  CHECK(specs[0].hi == Proposition::single(0, true));
  CHECK(specs[0].lo == Proposition::truth());
  CHECK(specs[0].alpha == Catch::Approx(0.4));
  CHECK(specs[1].hi == Proposition::single(0, false));
  CHECK(specs[1].lo == Proposition::truth());
  CHECK(specs[1].alpha == Catch::Approx(0.6));
}

TEST_CASE("the a3 consumers carry the CPT rows and their complements") {
  const BayesNet net = four_node_example();
  const auto specs = consumers_for_node(net, 2);
  REQUIRE(specs.size() == 8);
  std::vector<double> alphas;
  for (const auto& s : specs) alphas.push_back(s.alpha);
  std::sort(alphas.begin(), alphas.end());
  const std::vector<double> expected{0.11, 0.22, 0.33, 0.44, 0.56, 0.67, 0.78, 0.89};
  REQUIRE(alphas.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i)
    CHECK(alphas[i] == Catch::Approx(expected[i]).margin(1e-12));
  // Each direct/complement pair shares its conditioning claim.
  for (std::size_t i = 0; i + 1 < specs.size(); i += 2) {
    CHECK(specs[i].lo == specs[i + 1].lo);
    CHECK(specs[i].alpha + specs[i + 1].alpha == Catch::Approx(1.0));
  }
}

TEST_CASE("deterministic CPT rows are clamped with a notice") {
  BayesNet net;
  net.add_node("a", {}, {1.0});
  const auto specs = consumers_for_node(net, 0);
  REQUIRE(specs.size() == 2);
  CHECK(specs[0].alpha == Catch::Approx(1.0 - 1e-6));
  CHECK(specs[0].clamped);
  CHECK(specs[1].alpha == Catch::Approx(1e-6));
  CHECK(specs[1].clamped);

  const CompileResult r = compile(net);
  bool noticed = false;
  for (const auto& n : r.economy.notices()) noticed = noticed || n.find("clamp") == 0;
  CHECK(noticed);
}

TEST_CASE("W sets of the example") {
  const BayesNet net = four_node_example();
  CHECK(w_set(net, 0).empty());
  CHECK(w_set(net, 1).empty());  // parent a1 is a root
  CHECK(w_set(net, 2).empty());  // parents {a1, a2}; a2's parent a1 is shared
  CHECK(w_set(net, 3) == std::vector<NodeIndex>{0, 1});
}

TEST_CASE("complete graphs need no producers") {
  // A complete DAG on four nodes: every earlier node is a parent.
  std::mt19937 rng(73);
  std::uniform_real_distribution<double> k(0.05, 0.95);
  BayesNet net;
  std::vector<std::string> parent_names;
  for (int i = 0; i < 4; ++i) {
    std::vector<double> rows(std::size_t{1} << i);
    for (double& r : rows) r = k(rng);
    net.add_node("n" + std::to_string(i), parent_names, rows);
    parent_names.push_back("n" + std::to_string(i));
  }
  REQUIRE(is_moral(net));
  for (NodeIndex i = 0; i < 4; ++i) {
    CHECK(w_set(net, i).empty());
    CHECK(producers_for_node(net, i).empty());
  }
}

TEST_CASE("chains tie each interior claim to its refinements") {
  // In a -> b -> c, the claims <b>, <!b> first appear as c's conditioning
  // goods; nothing else prices them, so the identities <b> = <a b> + <!a b>
  // and its complement are required. A two-node chain needs none.
  BayesNet net;
  net.add_node("a", {}, {0.3});
  net.add_node("b", {"a"}, {0.2, 0.7});
  net.add_node("c", {"b"}, {0.6, 0.1});
  CHECK(w_set(net, 1).empty());
  CHECK(w_set(net, 2) == std::vector<NodeIndex>{0});
  const Economy econ = compile(net).economy;
  REQUIRE(econ.producers().size() == 2);
  for (const ArbitrageProducer& p : econ.producers()) {
    CHECK(econ.good(p.lhs).prop.literals().size() == 1);
    CHECK(p.rhs.size() == 2);
  }

  BayesNet two;
  two.add_node("a", {}, {0.3});
  two.add_node("b", {"a"}, {0.2, 0.7});
  CHECK(compile(two).economy.producers().empty());
}

TEST_CASE("the example yields exactly the two parent-claim identities") {
  const BayesNet net = four_node_example();
  const std::vector<std::string> nm = {"a1", "a2", "a3", "a4"};
  for (NodeIndex i = 0; i < 3; ++i) CHECK(producers_for_node(net, i).empty());

  const auto specs = producers_for_node(net, 3);
  REQUIRE(specs.size() == 2);
  CHECK(to_string(specs[0].lhs, nm) == "<!a3>");
  CHECK(names_of(specs[0].rhs, nm) ==
        std::vector<std::string>{"<!a1 !a2 !a3>", "<a1 !a2 !a3>", "<!a1 a2 !a3>",
                                 "<a1 a2 !a3>"});
  CHECK(to_string(specs[1].lhs, nm) == "<a3>");
  CHECK(names_of(specs[1].rhs, nm) ==
        std::vector<std::string>{"<!a1 !a2 a3>", "<a1 !a2 a3>", "<!a1 a2 a3>", "<a1 a2 a3>"});
}

TEST_CASE("compiling the example matches the published structure") {
  const CompileResult r = compile(four_node_example());
  const Economy& econ = r.economy;
  CHECK_FALSE(r.moralized);
  CHECK(econ.good_count() == 21);
  CHECK(econ.consumers().size() == 18);
  CHECK(econ.producers().size() == 2);
  CHECK(econ.good(econ.numeraire()).prop.is_true());
  CHECK(econ.good_name(0) == "<T>");
  // Spot-check the good listing order: root claims first, then pairs,
  // triples, the a4 pairs, and finally the late parent claims.
  CHECK(econ.good_name(1) == "<a1>");
  CHECK(econ.good_name(2) == "<!a1>");
  CHECK(econ.good_name(3) == "<a1 a2>");
  CHECK(econ.good_name(7) == "<a1 a2 a3>");
  CHECK(econ.good_name(15) == "<a3>");
  CHECK(econ.good_name(16) == "<!a3>");
  CHECK(econ.good_name(17) == "<a3 a4>");
  CHECK(econ.good_name(20) == "<!a3 !a4>");
}

TEST_CASE("the smallest economy: one root node") {
  BayesNet net;
  net.add_node("a", {}, {0.4});
  const Economy econ = compile(net).economy;
  CHECK(econ.good_count() == 3);
  CHECK(econ.consumers().size() == 2);
  CHECK(econ.producers().empty());
}

TEST_CASE("agent counts follow the structural formulas") {
  std::mt19937 rng(79);
  for (int t = 0; t < 30; ++t) {
    const BayesNet net = random_moral_net(rng);
    const Economy econ = compile(net).economy;
    std::size_t good_bound = 1, consumers = 0, producers = 0;
    for (NodeIndex i = 0; i < net.node_count(); ++i) {
      const std::uint32_t q = net.node(i).cpt.parent_count();
      good_bound += (std::size_t{1} << (q + 1)) + (std::size_t{1} << q);
      consumers += std::size_t{2} << q;
      if (!w_set(net, i).empty()) producers += std::size_t{1} << q;
    }
    CHECK(econ.good_count() <= good_bound);
    CHECK(econ.consumers().size() == consumers);
    CHECK(econ.producers().size() == producers);
  }
}

TEST_CASE("producer bundles partition their left-hand claim") {
  std::mt19937 rng(83);
  for (int t = 0; t < 30; ++t) {
    const BayesNet net = random_moral_net(rng);
    const Economy econ = compile(net).economy;
    for (const ArbitrageProducer& p : econ.producers()) {
      const Proposition& lhs = econ.good(p.lhs).prop;
      // Enumerate all assignments of the mentioned nodes: exactly one rhs
      // claim must hold whenever the lhs claim holds, none otherwise.
      const std::uint32_t n = net.node_count();
      for (std::uint32_t bits = 0; bits < (1u << n); ++bits) {
        const Assignment omega(n, bits);
        int live = 0;
        for (GoodId r : p.rhs)
          if (econ.good(r).prop.matches(omega)) ++live;
        CHECK(live == (lhs.matches(omega) ? 1 : 0));
      }
    }
  }
}

TEST_CASE("provenance pairs every CPT row with two consumers and every identity with one producer") {
  std::mt19937 rng(89);
  for (int t = 0; t < 20; ++t) {
    const BayesNet net = random_moral_net(rng);
    const Economy econ = compile(net).economy;

    std::map<std::pair<NodeIndex, RowMask>, std::pair<int, int>> row_hits;
    for (std::size_t i = 0; i < econ.consumers().size(); ++i) {
      const Provenance& src = econ.consumer_provenance(i);
      auto& [direct, complement] = row_hits[{src.node, src.row}];
      if (src.kind == Provenance::Kind::ConditionalDirect) ++direct;
      if (src.kind == Provenance::Kind::ConditionalComplement) ++complement;
    }
    std::size_t rows = 0;
    for (NodeIndex i = 0; i < net.node_count(); ++i) rows += net.node(i).cpt.rows.size();
    REQUIRE(row_hits.size() == rows);
    for (const auto& [key, hits] : row_hits) {
      CHECK(hits.first == 1);
      CHECK(hits.second == 1);
    }

    std::set<std::pair<NodeIndex, RowMask>> identities;
    for (std::size_t i = 0; i < econ.producers().size(); ++i) {
      const Provenance& src = econ.producer_provenance(i);
      CHECK(src.kind == Provenance::Kind::Identity);
      CHECK(identities.insert({src.node, src.row}).second);
    }
    CHECK(identities.size() == econ.producers().size());
  }
}

TEST_CASE("oracle prices balance every market of random moral economies") {
  std::mt19937 rng(97);
  for (int t = 0; t < 25; ++t) {
    const BayesNet net = random_moral_net(rng);
    const Economy econ = compile(net).economy;
    const PriceVector truth = testsupport::oracle_prices(econ, net);
    for (const Good& g : econ.goods()) {
      if (g.is_numeraire) continue;
      CHECK(std::abs(aggregate_excess_demand(econ, g.id, truth)) < 1e-9);
    }
  }
}

TEST_CASE("compile rejects systems above the configured caps") {
  SolverConfig config;
  config.max_nodes = 2;
  BayesNet net;
  net.add_node("a", {}, {0.5});
  net.add_node("b", {}, {0.5});
  net.add_node("c", {}, {0.5});
  CHECK_THROWS_WITH(compile(net, config), Catch::Matchers::ContainsSubstring("cap"));
}

TEST_CASE("compile moralizes non-moral inputs and says so") {
  std::mt19937 rng(101);
  const BayesNet net = testsupport::diamond(rng);
  const CompileResult r = compile(net);
  CHECK(r.moralized);
  REQUIRE_FALSE(r.economy.notices().empty());
  CHECK(r.economy.notices()[0].find("moraliz") != std::string::npos);
  CHECK(is_moral(r.network));
  // The compiled economy balances at the original network's probabilities.
  const PriceVector truth = testsupport::oracle_prices(r.economy, net);
  for (const Good& g : r.economy.goods()) {
    if (g.is_numeraire) continue;
    CHECK(std::abs(aggregate_excess_demand(r.economy, g.id, truth)) < 1e-9);
  }
}

TEST_CASE("auto-moralization can be declined") {
  std::mt19937 rng(103);
  SolverConfig config;
  config.auto_moralize = false;
  CHECK_THROWS_WITH(compile(testsupport::diamond(rng), config),
                    Catch::Matchers::ContainsSubstring("moral"));
}

TEST_CASE("compile validates its input") {
  BayesNet net;
  net.add_node("a", {}, {1.5});
  CHECK_THROWS_AS(compile(net), Error);
}

TEST_CASE("consumer claims pair each refined claim with its conditioning claim") {
  const Economy econ = compile(four_node_example()).economy;
  for (std::size_t i = 0; i < econ.consumers().size(); ++i) {
    const CesConsumer& c = econ.consumers()[i];
    const Proposition& hi = econ.good(c.good_hi).prop;
    const Proposition& lo = econ.good(c.good_lo).prop;
    CHECK(hi.literals().size() == lo.literals().size() + 1);
    for (const Literal& lit : lo.literals()) {
      auto pol = hi.polarity_of(lit.node);
      REQUIRE(pol.has_value());
      CHECK(*pol == lit.positive);
    }
  }
}
