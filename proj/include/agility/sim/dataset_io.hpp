#pragma once

#include <filesystem>
#include <iosfwd>

#include "agility/sim/types.hpp"

namespace agility::sim {

inline constexpr const char* kDatasetSchema = "agility.proprio_frame";
inline constexpr int kDatasetVersion = 1;

/// JSONL: a header line {"schema", "version", "episodes", "dt"} followed by
/// one frame object per line. Doubles are written with round-trip precision,
/// so write followed by read is exact.
void write_dataset(const Dataset& ds, std::ostream& out);
void write_dataset(const Dataset& ds, const std::filesystem::path& path);

/// Frames are regrouped into trajectories by their `episode` field, in order
/// of first appearance. Throws ParseError carrying the 1-based line of the
/// first malformed line, and on a schema or version mismatch.
Dataset read_dataset(std::istream& in);
Dataset read_dataset(const std::filesystem::path& path);

}  // namespace agility::sim
