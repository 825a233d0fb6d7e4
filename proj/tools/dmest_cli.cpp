// dmest: simulate protocol risks, tabulate rate bounds, run inequality suites.
//
// Exit status: 0 success, 1 inequality violation, 2 usage or config error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "dmest/csv.hpp"
#include "dmest/experiment.hpp"

namespace {

constexpr int kUsage = 2;

// Output is assembled in memory and written only once the command succeeded.
int emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return 0;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::cerr << "dmest: cannot write " << path << "\n";
    return kUsage;
  }
  out << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed mean estimation under communication constraints"};
  app.require_subcommand(1);
  std::string out_path;
  bool hints = false;

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo risk sweep from a config file");
  std::string config_path;
  simulate->add_option("config", config_path, "key = value config file")->required();

  auto* bounds = app.add_subcommand("bounds", "Evaluate rate formulas for a query CSV");
  std::string query_path;
  bounds->add_option("queries", query_path, "query CSV with a header row")->required();

  auto* verify = app.add_subcommand("verify", "Run randomized inequality suites");
  std::string suite_list;
  int count = 1000;
  std::uint64_t seed = 1;
  verify->add_option("suites", suite_list, "comma-separated suite names")->required();
  verify->add_option("--count", count, "instances per suite");
  verify->add_option("--seed", seed, "master seed");

  for (auto* sub : {simulate, bounds, verify}) {
    sub->add_option("--out", out_path, "output path (default: standard output)");
    sub->add_flag("--gnuplot-hints", hints, "print suggested gnuplot commands to standard error");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }

  try {
    std::ostringstream buffer;
    int status = 0;
    std::string name;
    if (simulate->parsed()) {
      name = "simulate";
      const auto config = dmest::parse_config_file(config_path);
      dmest::run_simulate(config, buffer);
    } else if (bounds->parsed()) {
      name = "bounds";
      std::ifstream in(query_path);
      if (!in) throw dmest::ConfigError(0, "cannot open query file " + query_path);
      dmest::run_bounds(in, buffer);
    } else {
      name = "verify";
      std::vector<std::string> suites;
      for (const auto& s : dmest::csv::split(suite_list)) suites.push_back(dmest::csv::trim(s));
      try {
        if (dmest::run_verify(suites, count, seed, buffer) > 0) status = 1;
      } catch (const std::invalid_argument& e) {
        std::cerr << "dmest: " << e.what() << "\n";
        return kUsage;
      }
    }
    if (hints) std::cerr << dmest::gnuplot_hints(name);
    const int rc = emit(out_path, buffer.str());
    return rc != 0 ? rc : status;
  } catch (const dmest::ConfigError& e) {
    std::cerr << "dmest: config error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "dmest: " << e.what() << "\n";
    return kUsage;
  }
}
