#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nitsche/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Finite-element convergence studies for convex energy minimization"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run the study described by a JSON config");
  run->add_option("config", config_path, "Path to the study config")->required();

  app.add_subcommand("list-problems", "List the built-in problems");

  std::string rates_path;
  std::optional<int> order;
  auto* plot = app.add_subcommand("plot", "Write gnuplot data and script from rates.csv");
  plot->add_option("rates", rates_path, "Path to rates.csv")->required();
  plot->add_option("--order", order, "Element order for the reference slopes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : nitsche::cli::config_error;
  }

  if (*run) return nitsche::cli::run(config_path, std::cout, std::cerr);
  if (*plot) return nitsche::cli::plot(rates_path, order, std::cout, std::cerr);
  std::cout << nitsche::cli::list_problems();
  return 0;
}
