#include <unistd.h>

#include <iostream>

#include "CLI11.hpp"
#include "ecmtt/cli.hpp"
#include "ecmtt/eval.hpp"

int main(int argc, char** argv) {
  using ecmtt::CliConfig;
  CLI::App app{"ecmtt: typechecker and interpreter"};
  app.require_subcommand(1);
  CliConfig config;
  config.max_steps = ecmtt::default_fuel();
  bool json = false;

  auto* check = app.add_subcommand("check", "print the type of a program");
  check->add_option("FILE", config.input_path)->required();

  auto* run = app.add_subcommand("run", "evaluate a program");
  run->add_option("FILE", config.input_path)->required();
  run->add_option("--max-steps", config.max_steps, "step budget");
  run->add_flag("--json", json, "JSON output");

  auto* trace = app.add_subcommand("trace", "print every reduction step");
  trace->add_option("FILE", config.input_path)->required();
  trace->add_option("--max-steps", config.max_steps, "step budget");
  trace->add_flag("--explain", config.explain, "show the modal substitution behind beta-letbox");

  auto* repl = app.add_subcommand("repl", "interactive session");
  auto* corpus = app.add_subcommand("corpus", "run the embedded corpus");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : ecmtt::kExitIoError;
  }
  if (json) config.format = CliConfig::Format::Json;
  if (*check) config.command = CliConfig::Command::Check;
  if (*run) config.command = CliConfig::Command::Run;
  if (*trace) config.command = CliConfig::Command::Trace;
  if (*corpus) config.command = CliConfig::Command::Corpus;
  if (*repl) return ecmtt::cmd_repl(std::cin, std::cout, isatty(0) != 0);
  return ecmtt::run_cli(config, std::cin, std::cout, std::cerr);
}
