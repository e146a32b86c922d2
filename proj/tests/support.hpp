#pragma once

// Shared fixtures: canonical rooms with known closed-form geometry, plus a
// scratch-directory helper for IO tests.

#include <cstdlib>
#include <filesystem>
#include <string>

#include "planloc/scene.hpp"

namespace planloc::testing {

/// Axis-aligned rectangular room [0,w] x [0,d].
inline FloorPlan box_room(double w, double d, double ceiling = 2.6, double camera = 1.6) {
    FloorPlan plan;
    plan.id = "test-box";
    plan.rooms.push_back(
        Polygon{Vec2{0.0, 0.0}, Vec2{w, 0.0}, Vec2{w, d}, Vec2{0.0, d}});
    plan.ceiling_height = ceiling;
    plan.camera_height = camera;
    return plan;
}

/// Two identical rooms side by side sharing a wall at x = w.
inline FloorPlan twin_rooms(double w, double d) {
    FloorPlan plan;
    plan.id = "test-twin";
    plan.rooms.push_back(
        Polygon{Vec2{0.0, 0.0}, Vec2{w, 0.0}, Vec2{w, d}, Vec2{0.0, d}});
    plan.rooms.push_back(
        Polygon{Vec2{w, 0.0}, Vec2{2.0 * w, 0.0}, Vec2{2.0 * w, d}, Vec2{w, d}});
    return plan;
}

class ScratchDir {
  public:
    explicit ScratchDir(const std::string& tag) {
        base_ = std::filesystem::temp_directory_path() /
                ("planloc-test-" + tag + "-" + std::to_string(std::rand()));
        std::filesystem::create_directories(base_);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(base_, ec);
    }
    std::filesystem::path path(const std::string& name) const { return base_ / name; }
    const std::filesystem::path& root() const { return base_; }

  private:
    std::filesystem::path base_;
};

}  // namespace planloc::testing
