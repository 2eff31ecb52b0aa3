#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "agility/cli/run_config.hpp"

namespace agility::cli {

/// Writes `text` to `path` through a temporary sibling and a rename, so a
/// reader never sees a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

/// Validates `cfg`, then runs its command in `cfg.out`, writing config.json
/// (resolved), report.json and the command's CSV curves. Returns the report.
/// Progress lines go to `log`.
///
/// report.json: command, run_id, seed, config_hash, metrics (finite scalars
/// reproducible from config and seed), curves (name -> CSV file), timing
/// (wall clock and latency statistics, exempt from reproducibility), plus a
/// command-specific "details" object.
nlohmann::json run_command(const RunConfig& cfg, std::ostream& log);

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

}  // namespace agility::cli
