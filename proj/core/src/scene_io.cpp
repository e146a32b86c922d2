#include "planloc/scene_io.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "planloc/error.hpp"

namespace planloc {

namespace {

using nlohmann::ordered_json;

const nlohmann::json& require(const nlohmann::json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end()) throw ParseError(std::string("plan file: missing field '") + key + "'");
    return *it;
}

double require_number(const nlohmann::json& j, const char* key) {
    const nlohmann::json& v = require(j, key);
    if (!v.is_number()) throw ParseError(std::string("plan file: field '") + key + "' is not a number");
    return v.get<double>();
}

Vec2 parse_point(const nlohmann::json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
        throw ParseError("plan file: " + where + " is not an [x, y] pair");
    }
    return Vec2{v[0].get<double>(), v[1].get<double>()};
}

}  // namespace

nlohmann::json scene_to_json(const FurnishedScene& scene) {
    ordered_json j;
    j["id"] = scene.plan.id;
    j["ceiling_height"] = scene.plan.ceiling_height;
    j["camera_height"] = scene.plan.camera_height;
    ordered_json rooms = ordered_json::array();
    for (const Polygon& room : scene.plan.rooms) {
        ordered_json poly = ordered_json::array();
        for (const Vec2& v : room) poly.push_back({v.x, v.y});
        rooms.push_back(std::move(poly));
    }
    j["rooms"] = std::move(rooms);
    ordered_json furniture = ordered_json::array();
    for (const Box& box : scene.furniture) {
        const Rect& f = box.footprint;
        ordered_json b;
        b["footprint"] = {{f.lo.x, f.lo.y}, {f.hi.x, f.lo.y}, {f.hi.x, f.hi.y}, {f.lo.x, f.hi.y}};
        b["height"] = box.height;
        furniture.push_back(std::move(b));
    }
    j["furniture"] = std::move(furniture);
    j["level"] = to_string(scene.level);
    j["seed"] = scene.seed;
    return j;
}

FurnishedScene scene_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ParseError("plan file: top level is not a JSON object");
    FurnishedScene scene;

    const nlohmann::json& id = require(j, "id");
    if (!id.is_string()) throw ParseError("plan file: field 'id' is not a string");
    scene.plan.id = id.get<std::string>();
    scene.plan.ceiling_height = require_number(j, "ceiling_height");
    scene.plan.camera_height = require_number(j, "camera_height");

    const nlohmann::json& rooms = require(j, "rooms");
    if (!rooms.is_array()) throw ParseError("plan file: field 'rooms' is not an array");
    for (std::size_t r = 0; r < rooms.size(); ++r) {
        const nlohmann::json& poly = rooms[r];
        const std::string where = "rooms[" + std::to_string(r) + "]";
        if (!poly.is_array()) throw ParseError("plan file: " + where + " is not an array");
        Polygon room;
        for (std::size_t i = 0; i < poly.size(); ++i) {
            room.push_back(parse_point(poly[i], where + "[" + std::to_string(i) + "]"));
        }
        scene.plan.rooms.push_back(std::move(room));
    }

    const nlohmann::json& furniture = require(j, "furniture");
    if (!furniture.is_array()) throw ParseError("plan file: field 'furniture' is not an array");
    for (std::size_t k = 0; k < furniture.size(); ++k) {
        const nlohmann::json& b = furniture[k];
        const std::string where = "furniture[" + std::to_string(k) + "]";
        if (!b.is_object()) throw ParseError("plan file: " + where + " is not an object");
        const nlohmann::json& fp = require(b, "footprint");
        if (!fp.is_array() || fp.size() != 4) {
            throw ParseError("plan file: " + where + ".footprint is not a 4-corner array");
        }
        Rect rect{{std::numeric_limits<double>::max(), std::numeric_limits<double>::max()},
                  {std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()}};
        for (std::size_t i = 0; i < 4; ++i) {
            const Vec2 p = parse_point(fp[i], where + ".footprint[" + std::to_string(i) + "]");
            rect.lo.x = std::min(rect.lo.x, p.x);
            rect.lo.y = std::min(rect.lo.y, p.y);
            rect.hi.x = std::max(rect.hi.x, p.x);
            rect.hi.y = std::max(rect.hi.y, p.y);
        }
        Box box;
        box.footprint = rect;
        box.height = require_number(b, "height");
        scene.furniture.push_back(box);
    }

    const nlohmann::json& level = require(j, "level");
    if (!level.is_string()) throw ParseError("plan file: field 'level' is not a string");
    scene.level = furniture_level_from_string(level.get<std::string>());

    const nlohmann::json& seed = require(j, "seed");
    if (!seed.is_number_integer() && !seed.is_number_unsigned()) {
        throw ParseError("plan file: field 'seed' is not an integer");
    }
    scene.seed = seed.get<std::uint64_t>();

    validate(scene);
    return scene;
}

void save_scene(const FurnishedScene& scene, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << scene_to_json(scene).dump(2) << '\n';
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

FurnishedScene load_scene(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path.string() + "' for reading");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("plan file '" + path.string() + "': " + e.what());
    }
    try {
        return scene_from_json(j);
    } catch (const ParseError& e) {
        throw ParseError(std::string(e.what()) + " (in '" + path.string() + "')");
    }
}

void save_plan(const FloorPlan& plan, const std::filesystem::path& path) {
    FurnishedScene scene;
    scene.plan = plan;
    scene.level = FurnitureLevel::Empty;
    scene.seed = 0;
    save_scene(scene, path);
}

FloorPlan load_plan(const std::filesystem::path& path) {
    return load_scene(path).plan;
}

}  // namespace planloc
