#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "odts/config.hpp"

int main(int argc, char** argv) {
  CLI::App app{"observation-driven count time series: simulate, verify, fit"};
  app.require_subcommand(1);

  struct Args {
    std::string config;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
  };

  std::vector<std::pair<odts::Command, CLI::App*>> subs;
  for (odts::Command cmd :
       {odts::Command::simulate, odts::Command::verify, odts::Command::fit,
        odts::Command::consistency, odts::Command::misspec}) {
    CLI::App* sub = app.add_subcommand(odts::command_name(cmd));
    sub->add_option("--config", "experiment config file")->required();
    sub->add_option("--out", "output directory (overrides io.out)");
    sub->add_option("--seed", "seed override (u64)");
    subs.emplace_back(cmd, sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help exits clean; usage errors are validation
  }

  for (const auto& [cmd, sub] : subs) {
    if (!sub->parsed()) continue;
    Args args;
    args.config = sub->get_option("--config")->as<std::string>();
    if (sub->get_option("--out")->count() > 0) {
      args.out = sub->get_option("--out")->as<std::string>();
    }
    if (sub->get_option("--seed")->count() > 0) {
      args.seed = sub->get_option("--seed")->as<std::uint64_t>();
    }
    try {
      const auto cfg = odts::load_config(args.config, cmd, args.seed, args.out);
      return odts::run_experiment(cfg);
    } catch (const odts::ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return 2;
    } catch (const std::invalid_argument& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return 2;
    } catch (const std::domain_error& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    }
  }
  return 2;
}
