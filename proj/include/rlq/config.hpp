#pragma once

#include <filesystem>
#include <string_view>

#include <json.hpp>

#include "rlq/model.hpp"

namespace rlq {

/// Parses a model configuration object.
///
/// Required keys: `mode` ("state_dep" | "ctrl_dep"), `T`, `x0`, `G`, `nu`,
/// `mu1`, `xi`, `A`, `B`, `D`. Optional: `steps` (2000), `d` (inferred from B,
/// else 1), `C`, `Q`, `R` (0). A coefficient is a number, `{"table": [[t, v],
/// ...]}`, or for B, C, D an array of d such entries. A scalar B, C or D is
/// broadcast to every driver.
///
/// Throws ValidationError naming the offending key.
ModelSpec parse_model(const nlohmann::json& config);

ModelSpec load_model(const std::filesystem::path& path);

nlohmann::json to_json(const ModelSpec& spec);

}  // namespace rlq
