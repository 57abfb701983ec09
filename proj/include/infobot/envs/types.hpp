#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace infobot::env {

enum class Object : std::uint8_t { empty = 0, wall = 1, door = 2, key = 3, ball = 4, box = 5, goal = 6, unseen = 7 };
enum class Color : std::uint8_t { red = 0, green = 1, blue = 2, purple = 3, yellow = 4, grey = 5 };

inline constexpr int kObjectCount = 8;
inline constexpr int kColorCount = 6;

/// Headings in MiniGrid order; turning right adds one.
enum class Direction : std::uint8_t { east = 0, south = 1, west = 2, north = 3 };

enum class Action : std::uint8_t { turn_left = 0, turn_right = 1, forward = 2, pickup = 3, drop = 4, toggle = 5, done = 6 };
inline constexpr int kActionCount = 7;

enum class Family : std::uint8_t { multiroom, findobj, minipacman };

class generation_error : public std::runtime_error {
public:
    generation_error(const std::string& what, std::uint64_t seed)
      : std::runtime_error(what + " (seed " + std::to_string(seed) + ")"),
        seed_(seed)
    { }
    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
};

struct Pos {
    int x = 0;
    int y = 0;
    friend bool operator==(const Pos&, const Pos&) = default;
    Pos operator+(const Pos& o) const { return {x + o.x, y + o.y}; }
    Pos operator-(const Pos& o) const { return {x - o.x, y - o.y}; }
    Pos operator*(int k) const { return {x * k, y * k}; }
};

inline Pos dir_vec(Direction d)
{
    static constexpr std::array<Pos, 4> table{{{1, 0}, {0, 1}, {-1, 0}, {0, -1}}};
    return table[static_cast<int>(d)];
}

inline Direction turn_left(Direction d) { return static_cast<Direction>((static_cast<int>(d) + 3) % 4); }
inline Direction turn_right(Direction d) { return static_cast<Direction>((static_cast<int>(d) + 1) % 4); }

struct Cell {
    Object object = Object::empty;
    Color color = Color::red;
    bool door_open = false;
    friend bool operator==(const Cell&, const Cell&) = default;

    static Cell wall() { return {Object::wall, Color::grey, false}; }
    static Cell goal() { return {Object::goal, Color::green, false}; }
    static Cell door(Color c, bool open) { return {Object::door, c, open}; }
};

struct ObjectDescriptor {
    Object object;
    Color color;
    friend bool operator==(const ObjectDescriptor&, const ObjectDescriptor&) = default;
};

inline std::string to_string(Family f)
{
    switch (f) {
    case Family::multiroom: return "multiroom";
    case Family::findobj: return "findobj";
    case Family::minipacman: return "minipacman";
    }
    return "?";
}

inline Family family_from_string(const std::string& s)
{
    if (s == "multiroom") return Family::multiroom;
    if (s == "findobj") return Family::findobj;
    if (s == "minipacman") return Family::minipacman;
    throw std::invalid_argument("unknown environment family '" + s + "'");
}

}  // namespace infobot::env
