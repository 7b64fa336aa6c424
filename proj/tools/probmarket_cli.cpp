// Command-line surface: parse -> compile -> solve -> verify/query, with
// machine-parsable output. Exit codes are a contract: 0 success, 1
// non-convergence or verification failure, 2 input error.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "probmarket/probmarket.hpp"

namespace pm = probmarket;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNotConverged = 1;
constexpr int kExitInputError = 2;

struct CommonOptions {
  pm::SolverConfig config;
  std::string mode = "sequential";
  std::string format = "text";
  std::string trace_path;
  long seed = 0;  // reserved for randomized tooling; the solver is deterministic
};

void add_solver_flags(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--sigma", opt.config.sigma, "CES substitution parameter");
  cmd->add_option("--endowment", opt.config.endowment, "per-good consumer endowment");
  cmd->add_option("--beta", opt.config.beta, "producer responsiveness per unit profit");
  cmd->add_option("--y-max", opt.config.y_max, "producer activity cap");
  cmd->add_option("--tol", opt.config.tol, "convergence tolerance on per-round price change");
  cmd->add_option("--max-rounds", opt.config.max_rounds, "auction round limit");
  cmd->add_option("--init-price", opt.config.init_price, "starting price for non-numeraire goods");
  cmd->add_option("--mode", opt.mode, "price sweep mode")
      ->check(CLI::IsMember({"sequential", "snapshot-parallel"}));
  cmd->add_option("--trace", opt.trace_path, "write a per-round CSV trace to this path");
  cmd->add_option("--seed", opt.seed,
                  "reserved for randomized test tooling; solver runs are deterministic");
  cmd->add_option("--format", opt.format, "output format")
      ->check(CLI::IsMember({"text", "csv", "json"}));
}

pm::SolverConfig finalize_config(const CommonOptions& opt) {
  pm::SolverConfig c = opt.config;
  c.mode = opt.mode == "snapshot-parallel" ? pm::SweepMode::SnapshotParallel
                                           : pm::SweepMode::Sequential;
  c.validate();
  return c;
}

struct TraceFile {
  std::ofstream out;
  explicit TraceFile(const std::string& path) {
    if (path.empty()) return;
    out.open(path);
    if (!out) throw pm::Error("cannot open trace file '" + path + "'");
    out << "round,good,price,excess\n";
  }
  pm::TraceSink sink(const pm::Economy& econ) {
    if (!out.is_open()) return {};
    return [this, &econ](int round, pm::GoodId g, double price, double excess) {
      out << round << ',' << econ.good_name(g) << ',' << std::setprecision(17) << price << ','
          << excess << '\n';
    };
  }
};

void print_report_summary(std::ostream& os, const pm::ConvergenceReport& report) {
  os << "converged " << (report.converged ? "yes" : "no") << "  rounds " << report.rounds_used
     << "  max_delta " << std::scientific << std::setprecision(3) << report.final_max_delta
     << "  error_estimate " << report.error_estimate << std::defaultfloat;
  if (!report.warnings.empty()) os << "  warnings " << report.warnings.size();
  os << '\n';
}

std::size_t name_column_width(const pm::Economy& econ) {
  std::size_t w = 4;
  for (const pm::Good& g : econ.goods()) w = std::max(w, econ.good_name(g.id).size());
  return w;
}

json report_json(const pm::ConvergenceReport& report) {
  return json{{"converged", report.converged},
              {"rounds", report.rounds_used},
              {"max_delta", report.final_max_delta},
              {"error_estimate", report.error_estimate},
              {"warnings", report.warnings}};
}

int cmd_solve(const std::string& file, bool economy_input, const CommonOptions& opt) {
  const pm::SolverConfig config = finalize_config(opt);
  pm::Economy econ;
  if (economy_input) {
    econ = pm::load_economy_file(file);
  } else {
    econ = pm::compile(pm::load_network(file), config).economy;
  }

  TraceFile trace(opt.trace_path);
  auto [prices, report] = pm::solve(econ, config, trace.sink(econ));

  if (opt.format == "json") {
    json doc = report_json(report);
    doc["command"] = "solve";
    json rows = json::array();
    for (const pm::Good& g : econ.goods())
      rows.push_back({{"good", econ.good_name(g.id)}, {"price", prices[g.id]}});
    doc["prices"] = std::move(rows);
    std::cout << doc.dump(2) << '\n';
  } else if (opt.format == "csv") {
    std::cout << "good,price\n";
    for (const pm::Good& g : econ.goods())
      std::cout << econ.good_name(g.id) << ',' << std::setprecision(17) << prices[g.id] << '\n';
    print_report_summary(std::cerr, report);
  } else {
    const std::size_t w = name_column_width(econ);
    std::cout << std::left << std::setw(static_cast<int>(w)) << "good" << "  price\n";
    for (const pm::Good& g : econ.goods())
      std::cout << std::left << std::setw(static_cast<int>(w)) << econ.good_name(g.id) << "  "
                << std::fixed << std::setprecision(9) << prices[g.id] << std::defaultfloat
                << '\n';
    print_report_summary(std::cout, report);
  }
  return report.converged ? kExitOk : kExitNotConverged;
}

int cmd_verify(const std::string& file, double threshold, const CommonOptions& opt) {
  const pm::SolverConfig config = finalize_config(opt);
  const pm::BayesNet net = pm::load_network(file);
  if (net.node_count() > 20)
    throw pm::Error("network has " + std::to_string(net.node_count()) +
                    " nodes, above the exact-inference cap of 20");
  const pm::CompileResult compiled = pm::compile(net, config);
  const pm::Economy& econ = compiled.economy;

  TraceFile trace(opt.trace_path);
  auto [prices, report] = pm::solve(econ, config, trace.sink(econ));

  struct Row {
    std::string name;
    double price, truth, error;
  };
  std::vector<Row> rows;
  double max_error = 0.0;
  for (const pm::Good& g : econ.goods()) {
    // The original network is the reference even when compilation moralized.
    const double truth = pm::conjunction_probability(net, g.prop);
    const double err = std::abs(prices[g.id] - truth);
    max_error = std::max(max_error, err);
    rows.push_back({econ.good_name(g.id), prices[g.id], truth, err});
  }
  const bool pass = report.converged && max_error <= threshold;

  if (opt.format == "json") {
    json doc = report_json(report);
    doc["command"] = "verify";
    doc["threshold"] = threshold;
    doc["max_error"] = max_error;
    doc["pass"] = pass;
    json table = json::array();
    for (const Row& r : rows)
      table.push_back({{"good", r.name}, {"price", r.price}, {"oracle", r.truth},
                       {"abs_error", r.error}});
    doc["goods"] = std::move(table);
    std::cout << doc.dump(2) << '\n';
  } else if (opt.format == "csv") {
    std::cout << "good,price,oracle,abs_error\n";
    for (const Row& r : rows)
      std::cout << r.name << ',' << std::setprecision(17) << r.price << ',' << r.truth << ','
                << r.error << '\n';
    std::cerr << "max_error " << std::scientific << std::setprecision(3) << max_error
              << "  threshold " << threshold << "  " << (pass ? "pass" : "fail") << '\n';
  } else {
    const std::size_t w = name_column_width(econ);
    std::cout << std::left << std::setw(static_cast<int>(w)) << "good"
              << "  price        oracle       abs_error\n";
    for (const Row& r : rows)
      std::cout << std::left << std::setw(static_cast<int>(w)) << r.name << "  " << std::fixed
                << std::setprecision(9) << r.price << "  " << r.truth << "  " << std::scientific
                << std::setprecision(3) << r.error << std::defaultfloat << '\n';
    print_report_summary(std::cout, report);
    std::cout << "max_error " << std::scientific << std::setprecision(3) << max_error
              << "  threshold " << threshold << "  " << (pass ? "pass" : "fail")
              << std::defaultfloat << '\n';
  }
  return pass ? kExitOk : kExitNotConverged;
}

int cmd_query(const std::string& file, const std::string& expression,
              const std::string& prices_path, const CommonOptions& opt) {
  const pm::SolverConfig config = finalize_config(opt);
  const pm::CompileResult compiled = pm::compile(pm::load_network(file), config);
  const pm::Economy& econ = compiled.economy;
  const pm::ParsedQuery q = pm::parse_query(expression, compiled.network);

  pm::PriceVector prices;
  pm::ConvergenceReport report;
  if (!prices_path.empty()) {
    std::ifstream in(prices_path);
    if (!in) throw pm::Error("cannot open prices file '" + prices_path + "'");
    json doc;
    try {
      in >> doc;
    } catch (const json::exception& e) {
      throw pm::Error(std::string("prices file is not valid JSON: ") + e.what());
    }
    prices = pm::load_prices(doc, econ);
    report.converged = true;
  } else {
    TraceFile trace(opt.trace_path);
    std::tie(prices, report) = pm::solve(econ, config, trace.sink(econ));
    if (!report.converged) {
      std::cerr << "solver did not converge; no price system to query\n";
      return kExitNotConverged;
    }
  }

  const double value = pm::evaluate_query(econ, prices, compiled.network, q);
  if (opt.format == "json") {
    std::cout << json{{"command", "query"}, {"expression", expression}, {"value", value}}.dump(2)
              << '\n';
  } else {
    std::cout << std::fixed << std::setprecision(9) << value << std::defaultfloat << '\n';
  }
  return kExitOk;
}

int cmd_compile(const std::string& file, bool stats, const std::string& output,
                const CommonOptions& opt) {
  const pm::SolverConfig config = finalize_config(opt);
  const pm::CompileResult compiled = pm::compile(pm::load_network(file), config);
  const pm::Economy& econ = compiled.economy;

  if (stats) {
    std::cout << "goods " << econ.good_count() << '\n'
              << "consumers " << econ.consumers().size() << '\n'
              << "producers " << econ.producers().size() << '\n';
    for (const std::string& n : econ.notices()) std::cout << "notice: " << n << '\n';
    return kExitOk;
  }

  const json doc = pm::dump_economy(econ);
  if (output.empty()) {
    std::cout << doc.dump(2) << '\n';
  } else {
    std::ofstream out(output);
    if (!out) throw pm::Error("cannot open output file '" + output + "'");
    out << doc.dump(2) << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"belief-network economies: equilibrium prices as probabilities"};
  app.require_subcommand(1);

  CommonOptions solve_opt, verify_opt, query_opt, compile_opt;
  std::string solve_file, verify_file, query_file, compile_file;
  std::string query_expression, query_prices, compile_output;
  bool solve_economy_input = false;
  bool compile_stats = false;
  double verify_threshold = 1e-3;

  CLI::App* solve = app.add_subcommand("solve", "solve a network's economy for prices");
  solve->add_option("file", solve_file, "network JSON file (or economy dump with --economy)")
      ->required();
  solve->add_flag("--economy", solve_economy_input,
                  "treat the input as an economy dump instead of a network");
  add_solver_flags(solve, solve_opt);

  CLI::App* verify = app.add_subcommand("verify", "compare equilibrium prices to exact inference");
  verify->add_option("file", verify_file, "network JSON file")->required();
  verify->add_option("--threshold", verify_threshold, "max tolerated |price - probability|");
  add_solver_flags(verify, verify_opt);

  CLI::App* query = app.add_subcommand("query", "evaluate a probability expression at equilibrium");
  query->add_option("file", query_file, "network JSON file")->required();
  query->add_option("expression", query_expression, "e.g. \"!a1 & a3\" or \"a2 | a1\"")
      ->required();
  query->add_option("--prices", query_prices, "reuse prices from a solve --format json report");
  add_solver_flags(query, query_opt);

  CLI::App* compile = app.add_subcommand("compile", "emit the compiled economy as JSON");
  compile->add_option("file", compile_file, "network JSON file")->required();
  compile->add_flag("--stats", compile_stats, "print good/consumer/producer counts instead");
  compile->add_option("--output", compile_output, "write the dump here instead of stdout");
  add_solver_flags(compile, compile_opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInputError;
  }

  try {
    if (solve->parsed()) return cmd_solve(solve_file, solve_economy_input, solve_opt);
    if (verify->parsed()) return cmd_verify(verify_file, verify_threshold, verify_opt);
    if (query->parsed()) return cmd_query(query_file, query_expression, query_prices, query_opt);
    if (compile->parsed()) return cmd_compile(compile_file, compile_stats, compile_output,
                                              compile_opt);
  } catch (const pm::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInputError;
  }
  return kExitInputError;
}
