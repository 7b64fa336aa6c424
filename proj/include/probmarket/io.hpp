#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "probmarket/economy.hpp"
#include "probmarket/network.hpp"

namespace probmarket {

// Network file format: {"nodes": [{"name": ..., "parents": [...],
// "cpt": {"<pattern>": probability}}]}. A pattern key is the row mask in
// binary, one character per listed parent, most significant bit first, so
// bit j (the 2^j digit, rightmost end) is the polarity of the j-th parent.
// Roots use the single key "". Unknown fields are rejected.

namespace detail {

inline RowMask parse_pattern_key(const std::string& key, std::size_t parent_count,
                                 const std::string& node) {
  if (key.size() != parent_count)
    throw Error("node '" + node + "': cpt key \"" + key + "\" must have exactly " +
                std::to_string(parent_count) + " binary digit(s)");
  RowMask mask = 0;
  for (char c : key) {
    if (c != '0' && c != '1')
      throw Error("node '" + node + "': cpt key \"" + key + "\" must contain only 0 and 1");
    mask = (mask << 1) | static_cast<RowMask>(c - '0');
  }
  return mask;
}

inline std::string pattern_key(RowMask mask, std::size_t parent_count) {
  std::string key(parent_count, '0');
  for (std::size_t j = 0; j < parent_count; ++j)
    if ((mask >> j) & 1u) key[parent_count - 1 - j] = '1';
  return key;
}

inline void reject_unknown_fields(const nlohmann::json& obj,
                                  const std::vector<std::string>& allowed,
                                  const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const auto& a : allowed) ok = ok || it.key() == a;
    if (!ok) throw Error(where + ": unknown field \"" + it.key() + "\"");
  }
}

}  // namespace detail

/// Parse a network from JSON text. Nodes may appear in any order; the
/// result is relabeled into the canonical topological order (ties broken by
/// name), with CPT row masks permuted to match the sorted parent lists.
/// Cyclic inputs are rejected here; everything else structural that can be
/// represented is left for validate() to report.
inline BayesNet parse_network(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("network file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error("network file: top level must be an object");
  detail::reject_unknown_fields(doc, {"nodes"}, "network file");
  if (!doc.contains("nodes") || !doc["nodes"].is_array())
    throw Error("network file: required field \"nodes\" (array) is missing");

  struct RawNode {
    std::string name;
    std::vector<std::string> parents;
    std::map<RowMask, double> rows;
  };
  std::vector<RawNode> raw;
  for (const auto& jn : doc["nodes"]) {
    if (!jn.is_object()) throw Error("network file: each node must be an object");
    detail::reject_unknown_fields(jn, {"name", "parents", "cpt"}, "node entry");
    RawNode rn;
    if (!jn.contains("name") || !jn["name"].is_string())
      throw Error("node entry: required field \"name\" (string) is missing");
    rn.name = jn["name"].get<std::string>();
    if (jn.contains("parents")) {
      if (!jn["parents"].is_array())
        throw Error("node '" + rn.name + "': \"parents\" must be an array of names");
      for (const auto& jp : jn["parents"]) {
        if (!jp.is_string())
          throw Error("node '" + rn.name + "': parent entries must be strings");
        rn.parents.push_back(jp.get<std::string>());
      }
    }
    if (!jn.contains("cpt") || !jn["cpt"].is_object())
      throw Error("node '" + rn.name + "': required field \"cpt\" (object) is missing");
    for (auto it = jn["cpt"].begin(); it != jn["cpt"].end(); ++it) {
      if (!it.value().is_number())
        throw Error("node '" + rn.name + "': cpt value for \"" + it.key() +
                    "\" must be a number");
      rn.rows[detail::parse_pattern_key(it.key(), rn.parents.size(), rn.name)] =
          it.value().get<double>();
    }
    raw.push_back(std::move(rn));
  }

  std::map<std::string, NodeIndex> by_name;
  for (NodeIndex i = 0; i < raw.size(); ++i) {
    if (!by_name.emplace(raw[i].name, i).second)
      throw Error("duplicate node name '" + raw[i].name + "'");
  }

  // Assemble in file order first.
  BayesNet file_order;
  for (const auto& rn : raw) file_order.add_node(rn.name);
  for (NodeIndex i = 0; i < raw.size(); ++i) {
    std::vector<NodeIndex> ps;
    for (const auto& pn : raw[i].parents) {
      auto it = by_name.find(pn);
      if (it == by_name.end())
        throw Error("node '" + raw[i].name + "': unknown parent \"" + pn + "\"");
      if (it->second == i)
        throw Error("node '" + raw[i].name + "': listed as its own parent");
      ps.push_back(it->second);
    }
    file_order.set_cpt(i, std::move(ps), raw[i].rows);
  }

  const std::vector<NodeIndex> order = topological_order(file_order);  // throws on cycle
  std::vector<NodeIndex> new_index(order.size());
  for (NodeIndex pos = 0; pos < order.size(); ++pos) new_index[order[pos]] = pos;

  BayesNet net;
  for (NodeIndex pos = 0; pos < order.size(); ++pos) net.add_node(raw[order[pos]].name);
  for (NodeIndex pos = 0; pos < order.size(); ++pos) {
    const Cpt& old = file_order.node(order[pos]).cpt;
    // Relabel parents, then sort ascending; permute each row mask to match.
    std::vector<std::pair<NodeIndex, std::size_t>> relabeled;  // (new index, old bit)
    for (std::size_t j = 0; j < old.parents.size(); ++j)
      relabeled.emplace_back(new_index[old.parents[j]], j);
    std::sort(relabeled.begin(), relabeled.end());
    std::vector<NodeIndex> parents;
    for (const auto& [idx, oldbit] : relabeled) parents.push_back(idx);
    std::map<RowMask, double> rows;
    for (const auto& [mask, k] : old.rows) {
      RowMask nm = 0;
      for (std::size_t newbit = 0; newbit < relabeled.size(); ++newbit)
        if ((mask >> relabeled[newbit].second) & 1u) nm |= RowMask{1} << newbit;
      rows[nm] = k;
    }
    net.set_cpt(pos, std::move(parents), std::move(rows));
  }
  return net;
}

inline BayesNet load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open network file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_network(buf.str());
}

inline nlohmann::json network_to_json(const BayesNet& net) {
  nlohmann::json nodes = nlohmann::json::array();
  for (NodeIndex i = 0; i < net.node_count(); ++i) {
    const Node& nd = net.node(i);
    nlohmann::json jn;
    jn["name"] = nd.name;
    nlohmann::json parents = nlohmann::json::array();
    for (NodeIndex p : nd.cpt.parents) parents.push_back(net.name(p));
    jn["parents"] = std::move(parents);
    nlohmann::json cpt = nlohmann::json::object();
    for (const auto& [mask, k] : nd.cpt.rows)
      cpt[detail::pattern_key(mask, nd.cpt.parents.size())] = k;
    jn["cpt"] = std::move(cpt);
    nodes.push_back(std::move(jn));
  }
  return nlohmann::json{{"nodes", std::move(nodes)}};
}

// ---------------------------------------------------------------------------
// Economy dump: everything needed to re-solve without the source network.

inline constexpr const char* kEconomyFormatTag = "probmarket-economy-v1";

inline nlohmann::json dump_economy(const Economy& econ) {
  nlohmann::json doc;
  doc["format"] = kEconomyFormatTag;
  doc["nodes"] = econ.node_names();

  nlohmann::json goods = nlohmann::json::array();
  for (const Good& g : econ.goods()) {
    nlohmann::json jg;
    jg["id"] = g.id;
    jg["name"] = econ.good_name(g.id);
    if (g.is_numeraire) jg["numeraire"] = true;
    nlohmann::json lits = nlohmann::json::array();
    for (const Literal& lit : g.prop.literals())
      lits.push_back({{"node", econ.node_names().at(lit.node)}, {"positive", lit.positive}});
    jg["literals"] = std::move(lits);
    goods.push_back(std::move(jg));
  }
  doc["goods"] = std::move(goods);

  auto provenance_json = [&](const Provenance& src) {
    nlohmann::json j;
    j["kind"] = to_string(src.kind);
    if (src.kind != Provenance::Kind::Query) {
      j["node"] = econ.node_names().at(src.node);
      j["row"] = src.row;
    }
    return j;
  };

  nlohmann::json consumers = nlohmann::json::array();
  for (std::size_t i = 0; i < econ.consumers().size(); ++i) {
    const CesConsumer& c = econ.consumers()[i];
    consumers.push_back({{"good_hi", c.good_hi},
                         {"good_lo", c.good_lo},
                         {"alpha", c.alpha},
                         {"sigma", c.sigma},
                         {"endowment", c.endowment},
                         {"provenance", provenance_json(econ.consumer_provenance(i))}});
  }
  doc["consumers"] = std::move(consumers);

  nlohmann::json producers = nlohmann::json::array();
  for (std::size_t i = 0; i < econ.producers().size(); ++i) {
    const ArbitrageProducer& p = econ.producers()[i];
    producers.push_back({{"lhs", p.lhs},
                         {"rhs", p.rhs},
                         {"beta", p.responsiveness},
                         {"y_max", p.activity_cap},
                         {"provenance", provenance_json(econ.producer_provenance(i))}});
  }
  doc["producers"] = std::move(producers);
  doc["notices"] = econ.notices();
  return doc;
}

inline Economy load_economy(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("format") || doc["format"] != kEconomyFormatTag)
    throw Error("economy dump: missing or unsupported format tag");

  Economy econ;
  std::vector<std::string> names = doc.at("nodes").get<std::vector<std::string>>();
  std::map<std::string, NodeIndex> by_name;
  for (NodeIndex i = 0; i < names.size(); ++i) by_name[names[i]] = i;
  econ.set_node_names(std::move(names));

  auto parse_provenance = [&](const nlohmann::json& j) {
    Provenance src;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "direct") src.kind = Provenance::Kind::ConditionalDirect;
    else if (kind == "complement") src.kind = Provenance::Kind::ConditionalComplement;
    else if (kind == "identity") src.kind = Provenance::Kind::Identity;
    else if (kind == "query") src.kind = Provenance::Kind::Query;
    else throw Error("economy dump: unknown provenance kind \"" + kind + "\"");
    if (src.kind != Provenance::Kind::Query) {
      src.node = by_name.at(j.at("node").get<std::string>());
      src.row = j.at("row").get<RowMask>();
    }
    return src;
  };

  for (const auto& jg : doc.at("goods")) {
    std::vector<Literal> lits;
    for (const auto& jl : jg.at("literals")) {
      auto it = by_name.find(jl.at("node").get<std::string>());
      if (it == by_name.end()) throw Error("economy dump: good literal names unknown node");
      lits.push_back(Literal{it->second, jl.at("positive").get<bool>()});
    }
    const bool numeraire = jg.value("numeraire", false);
    const GoodId id = econ.add_good(Proposition(std::move(lits)), numeraire);
    if (id != jg.at("id").get<GoodId>())
      throw Error("economy dump: good ids must be dense and ascending");
  }

  for (const auto& jc : doc.at("consumers")) {
    CesConsumer c;
    c.good_hi = jc.at("good_hi").get<GoodId>();
    c.good_lo = jc.at("good_lo").get<GoodId>();
    c.alpha = jc.at("alpha").get<double>();
    c.sigma = jc.at("sigma").get<double>();
    c.endowment = jc.at("endowment").get<double>();
    econ.add_consumer(c, parse_provenance(jc.at("provenance")));
  }
  for (const auto& jp : doc.at("producers")) {
    ArbitrageProducer p;
    p.lhs = jp.at("lhs").get<GoodId>();
    p.rhs = jp.at("rhs").get<std::vector<GoodId>>();
    p.responsiveness = jp.at("beta").get<double>();
    p.activity_cap = jp.at("y_max").get<double>();
    econ.add_producer(std::move(p), parse_provenance(jp.at("provenance")));
  }
  if (doc.contains("notices"))
    for (const auto& n : doc.at("notices")) econ.add_notice(n.get<std::string>());
  econ.numeraire();  // throws if the dump carried none
  return econ;
}

inline Economy load_economy_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open economy file '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("economy file is not valid JSON: ") + e.what());
  }
  return load_economy(doc);
}

/// Read prices from the JSON report emitted by the solve command, matching
/// goods by rendered name.
inline PriceVector load_prices(const nlohmann::json& doc, const Economy& econ) {
  if (!doc.is_object() || !doc.contains("prices"))
    throw Error("prices file: expected an object with a \"prices\" array");
  std::map<std::string, double> by_name;
  for (const auto& jp : doc.at("prices"))
    by_name[jp.at("good").get<std::string>()] = jp.at("price").get<double>();
  PriceVector prices(econ.good_count(), 0.0);
  for (const Good& g : econ.goods()) {
    auto it = by_name.find(econ.good_name(g.id));
    if (it == by_name.end())
      throw Error("prices file: no entry for good " + econ.good_name(g.id));
    prices[g.id] = it->second;
  }
  return prices;
}

}  // namespace probmarket
