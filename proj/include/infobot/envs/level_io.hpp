#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "infobot/envs/level.hpp"

namespace infobot::env {

// Text legend, one char per cell:
//   #  wall        .  empty      G  goal
//   D  closed door d  open door
//   k  key         b  ball       x  box
// Door and object colours live in the metadata record.

inline char cell_char(const Cell& c)
{
    switch (c.object) {
    case Object::empty: return '.';
    case Object::wall: return '#';
    case Object::door: return c.door_open ? 'd' : 'D';
    case Object::key: return 'k';
    case Object::ball: return 'b';
    case Object::box: return 'x';
    case Object::goal: return 'G';
    case Object::unseen: return '?';
    }
    return '?';
}

inline std::string render_level(const Level& lvl)
{
    std::string out;
    out.reserve(static_cast<std::size_t>((lvl.width + 1) * lvl.height));
    for (int y = 0; y < lvl.height; ++y) {
        for (int x = 0; x < lvl.width; ++x) out += cell_char(lvl.at({x, y}));
        out += '\n';
    }
    return out;
}

inline nlohmann::json level_metadata(const Level& lvl)
{
    nlohmann::json j;
    j["family"] = to_string(lvl.family);
    j["seed"] = lvl.seed;
    j["width"] = lvl.width;
    j["height"] = lvl.height;
    j["param_a"] = lvl.param_a;
    j["param_b"] = lvl.param_b;
    j["view_size"] = lvl.view_size;
    j["max_steps"] = lvl.max_steps;
    j["start"] = {lvl.agent_start.x, lvl.agent_start.y, static_cast<int>(lvl.start_dir)};
    j["goal"] = {lvl.goal_pos.x, lvl.goal_pos.y};
    if (lvl.goal_object)
        j["goal_object"] = {static_cast<int>(lvl.goal_object->object), static_cast<int>(lvl.goal_object->color)};
    else
        j["goal_object"] = nullptr;
    auto colored = nlohmann::json::array();
    for (int y = 0; y < lvl.height; ++y)
        for (int x = 0; x < lvl.width; ++x) {
            const Cell& c = lvl.at({x, y});
            if (c.object == Object::door || c.object == Object::key || c.object == Object::ball || c.object == Object::box)
                colored.push_back({x, y, static_cast<int>(c.color)});
        }
    j["colors"] = colored;
    return j;
}

/// Plain-text level file: the metadata as a single JSON line, then the grid.
inline std::string serialize_level(const Level& lvl) { return level_metadata(lvl).dump() + "\n" + render_level(lvl); }

inline Level parse_level(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("level file: missing metadata line");
    const auto j = nlohmann::json::parse(line);
    Level lvl;
    lvl.family = family_from_string(j.at("family").get<std::string>());
    lvl.seed = j.at("seed").get<std::uint64_t>();
    lvl.width = j.at("width").get<int>();
    lvl.height = j.at("height").get<int>();
    lvl.param_a = j.at("param_a").get<int>();
    lvl.param_b = j.at("param_b").get<int>();
    lvl.view_size = j.at("view_size").get<int>();
    lvl.max_steps = j.at("max_steps").get<int>();
    lvl.agent_start = {j.at("start")[0].get<int>(), j.at("start")[1].get<int>()};
    lvl.start_dir = static_cast<Direction>(j.at("start")[2].get<int>());
    lvl.goal_pos = {j.at("goal")[0].get<int>(), j.at("goal")[1].get<int>()};
    if (!j.at("goal_object").is_null())
        lvl.goal_object = ObjectDescriptor{static_cast<Object>(j["goal_object"][0].get<int>()),
                                           static_cast<Color>(j["goal_object"][1].get<int>())};
    lvl.grid.assign(static_cast<std::size_t>(lvl.width * lvl.height), Cell{});
    for (int y = 0; y < lvl.height; ++y) {
        if (!std::getline(in, line) || static_cast<int>(line.size()) != lvl.width)
            throw std::invalid_argument("level file: grid row " + std::to_string(y) + " malformed");
        for (int x = 0; x < lvl.width; ++x) {
            Cell c;
            switch (line[static_cast<std::size_t>(x)]) {
            case '.': break;
            case '#': c = Cell::wall(); break;
            case 'G': c = Cell::goal(); break;
            case 'D': c = Cell::door(Color::red, false); break;
            case 'd': c = Cell::door(Color::red, true); break;
            case 'k': c.object = Object::key; break;
            case 'b': c.object = Object::ball; break;
            case 'x': c.object = Object::box; break;
            default: throw std::invalid_argument(std::string("level file: unknown cell char '") + line[static_cast<std::size_t>(x)] + "'");
            }
            lvl.at({x, y}) = c;
        }
    }
    for (const auto& e : j.at("colors")) lvl.at({e[0].get<int>(), e[1].get<int>()}).color = static_cast<Color>(e[2].get<int>());
    return lvl;
}

}  // namespace infobot::env
