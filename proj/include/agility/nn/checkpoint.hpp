#pragma once

#include <filesystem>

#include <json.hpp>

#include "agility/nn/layers.hpp"

namespace agility::nn {

// Checkpoints are flat JSON objects: {"name": {"shape": [...], "data": [...]}}.
// Doubles are written with round-trip precision.

nlohmann::json to_checkpoint(const ParamList& params);

/// Loads every entry of `params` from `doc`; names and shapes must match.
void from_checkpoint(const nlohmann::json& doc, const ParamList& params);

void save_checkpoint(const ParamList& params, const std::filesystem::path& path);
void load_checkpoint(const std::filesystem::path& path, const ParamList& params);

}  // namespace agility::nn
