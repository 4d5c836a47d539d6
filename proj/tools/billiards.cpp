// Copyright (c) 2026 The billiards developers
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: spectra, wavefunctions, approximants and superscar
// diagnostics of staircase billiards, driven by a key = value configuration
// file with flag overrides.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mrb/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Fourier mode-matching quantization of staircase billiards"};
  app.require_subcommand(1);

  const std::vector<std::string> commands = {"spectrum",    "wavefunction", "superscar",
                                             "approximate", "validate",     "poc-residuals"};
  struct Args {
    std::string config;
    std::vector<std::string> sets;
    std::string out;
  };
  std::vector<Args> args(commands.size());
  for (std::size_t i = 0; i < commands.size(); ++i) {
    CLI::App* sub = app.add_subcommand(commands[i]);
    sub->add_option("--config", args[i].config, "configuration file (key = value lines)");
    sub->add_option("--set", args[i].sets, "override a configuration key, e.g. --set m_modes=40");
    sub->add_option("--out", args[i].out, "output directory");
  }

  CLI11_PARSE(app, argc, argv);

  for (std::size_t i = 0; i < commands.size(); ++i) {
    if (!app.get_subcommand(commands[i])->parsed()) continue;
    try {
      mrb::io::KeyValueFile config = args[i].config.empty()
                                         ? mrb::io::KeyValueFile()
                                         : mrb::io::KeyValueFile::from_file(args[i].config);
      for (const auto& kv : args[i].sets) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos) {
          std::cerr << "--set expects key=value, got '" << kv << "'\n";
          return mrb::cli::kConfigError;
        }
        config.set(kv.substr(0, eq), kv.substr(eq + 1));
      }
      return mrb::cli::run_command(commands[i], config, args[i].out);
    } catch (const mrb::io::ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return mrb::cli::kConfigError;
    }
  }
  return mrb::cli::kConfigError;
}
