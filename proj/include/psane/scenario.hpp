#pragma once

// Scenario files: JSON (de)serialization with strict key checking, dotted
// key=value overrides, built-in presets and batch manifests.

#include "psane/sim.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace psane::scenario {

/* Every field is written, including derived ones left empty (as null). */
std::string to_json(const sim::ScenarioConfig& config);

/* Missing keys take their defaults; unknown keys and ill-typed values throw
 * ConfigError naming the dotted key. The result is validated. */
sim::ScenarioConfig from_json(const std::string& text);

/* Throws IoError when the file cannot be read. */
sim::ScenarioConfig load(const std::filesystem::path& path);

/* `key=value` with a dotted key such as `robot.speed` or `environment.seed`.
 * The value is parsed as JSON when possible and as a bare string otherwise. */
void apply_override(sim::ScenarioConfig& config, const std::string& assignment);

std::vector<std::string> preset_names();
/* Throws ConfigError for unknown names. */
sim::ScenarioConfig preset(const std::string& name);

struct Manifest {
    sim::BatchSpec batch;
};

/* Batch manifest: {"environments": [{"name", "preset" | "scenario",
 * "overrides"}], "seeds": [...], "strategies": [...], "workers": n}.
 * Relative scenario paths resolve against `base_dir`. */
Manifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir);
Manifest load_manifest(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);

}  // namespace psane::scenario
