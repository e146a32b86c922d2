#pragma once

#include <filesystem>

#include <nlohmann/json_fwd.hpp>

#include "planloc/scene.hpp"

namespace planloc {

// Plan files are JSON: {id, ceiling_height, camera_height, rooms, furniture,
// level, seed}. Coordinates are meters and round-trip exactly.
nlohmann::json scene_to_json(const FurnishedScene& scene);
FurnishedScene scene_from_json(const nlohmann::json& j);

void save_scene(const FurnishedScene& scene, const std::filesystem::path& path);
FurnishedScene load_scene(const std::filesystem::path& path);

// Bare-plan convenience wrappers (empty furniture, seed 0).
void save_plan(const FloorPlan& plan, const std::filesystem::path& path);
FloorPlan load_plan(const std::filesystem::path& path);

}  // namespace planloc
