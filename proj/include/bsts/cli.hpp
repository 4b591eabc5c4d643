#pragma once

// Command implementations behind the `bsts` executable. Every command writes
// manifest.json into its output directory before computing anything; `rerun`
// replays a manifest.

#include "bsts/config.hpp"

#include <exception>
#include <filesystem>
#include <optional>
#include <string>

namespace bsts {

enum class Command { Estimate, Nowcast, Simulate, Evaluate };

std::string to_string(Command c);
Command parse_command(const std::string& name);

struct Invocation {
  Command command = Command::Estimate;
  RunConfig config;
  std::filesystem::path config_path;  // informational
  std::filesystem::path out_dir;
  std::optional<int> vintage;  // nowcast
  bool all_vintages = false;   // nowcast
};

// Exit codes: 0 success, 2 config, 3 data or dimension, 4 numerical.
int exit_code_for(const std::exception& e);

void execute(const Invocation& inv);

std::string manifest_json(const Invocation& inv);
// Rebuilds the invocation from a manifest, checking that input files still
// hash to the recorded values. `out_dir` replaces the recorded directory.
Invocation invocation_from_manifest(const std::filesystem::path& manifest,
                                    const std::filesystem::path& out_dir);

std::string fnv1a64_file(const std::filesystem::path& path);

// Writes monthly.csv, quarterly.csv, calendar.json and config.json for a
// synthetic dataset with the built-in calendar.
void write_synthetic_dataset(const std::filesystem::path& dir, std::uint64_t seed, Index quarters);

}  // namespace bsts
