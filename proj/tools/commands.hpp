#pragma once

#include <CLI11.hpp>

namespace locus::cli {

/// Registers every subcommand on `app`. After a successful parse, exactly one
/// of them has a callback ready to run via run_selected().
void register_commands(CLI::App& app);

/// Runs the parsed subcommand. Throws on runtime failures.
void run_selected(CLI::App& app);

}  // namespace locus::cli
