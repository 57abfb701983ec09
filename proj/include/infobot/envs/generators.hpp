#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "infobot/envs/level.hpp"

namespace infobot::env {

namespace detail {

/// MiniGrid-style helpers: rand_int is half-open [lo, hi).
class GenRng {
public:
    explicit GenRng(std::uint64_t seed)
      : engine_(seed)
    { }

    int rand_int(int lo, int hi)
    {
        std::uniform_int_distribution<int> d(lo, hi - 1);
        return d(engine_);
    }

    template <class T>
    const T& rand_elem(const std::vector<T>& xs)
    {
        return xs[static_cast<std::size_t>(rand_int(0, static_cast<int>(xs.size())))];
    }

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

private:
    std::mt19937_64 engine_;
};

inline constexpr int kGenerationRetries = 1000;

inline Level blank_level(Family family, std::uint64_t seed, int width, int height, Cell fill)
{
    Level lvl;
    lvl.family = family;
    lvl.seed = seed;
    lvl.width = width;
    lvl.height = height;
    lvl.grid.assign(static_cast<std::size_t>(width * height), fill);
    return lvl;
}

/// Uniform empty cell inside [top, top + size), rejection sampled.
inline Pos place_in_rect(const Level& lvl, GenRng& rng, Pos top, Pos size, std::uint64_t seed,
                         const std::vector<Pos>& taken = {})
{
    for (int attempt = 0; attempt < 10 * kGenerationRetries; ++attempt) {
        const Pos p{rng.rand_int(top.x, std::min(top.x + size.x, lvl.width)),
                    rng.rand_int(top.y, std::min(top.y + size.y, lvl.height))};
        if (lvl.at(p).object != Object::empty) continue;
        if (std::find(taken.begin(), taken.end(), p) != taken.end()) continue;
        return p;
    }
    throw generation_error("could not place object in room", seed);
}

struct Room {
    Pos top;
    Pos size;
    Pos entry_door;
};

// Recursive room chaining, following MiniGrid's MultiRoomEnv._placeRoom.
// Walls: 0 = right, 1 = south, 2 = left, 3 = north.
inline bool place_room(GenRng& rng, int width, int height, int num_left, std::vector<Room>& rooms, int min_size,
                       int max_size, int entry_wall, Pos entry_door)
{
    const int size_x = rng.rand_int(min_size, max_size + 1);
    const int size_y = rng.rand_int(min_size, max_size + 1);
    int top_x = 0, top_y = 0;
    if (rooms.empty()) {
        top_x = entry_door.x;
        top_y = entry_door.y;
    } else if (entry_wall == 0) {
        top_x = entry_door.x - size_x + 1;
        top_y = rng.rand_int(entry_door.y - size_y + 2, entry_door.y);
    } else if (entry_wall == 1) {
        top_x = rng.rand_int(entry_door.x - size_x + 2, entry_door.x);
        top_y = entry_door.y - size_y + 1;
    } else if (entry_wall == 2) {
        top_x = entry_door.x;
        top_y = rng.rand_int(entry_door.y - size_y + 2, entry_door.y);
    } else {
        top_x = rng.rand_int(entry_door.x - size_x + 2, entry_door.x);
        top_y = entry_door.y;
    }
    if (top_x < 0 || top_y < 0) return false;
    if (top_x + size_x > width || top_y + size_y >= height) return false;
    // the previous room shares the entry wall, so it is exempt from the overlap test
    for (std::size_t i = 0; i + 1 < rooms.size(); ++i) {
        const Room& r = rooms[i];
        const bool non_overlap = top_x + size_x < r.top.x || r.top.x + r.size.x <= top_x
                                 || top_y + size_y < r.top.y || r.top.y + r.size.y <= top_y;
        if (!non_overlap) return false;
    }
    rooms.push_back({{top_x, top_y}, {size_x, size_y}, entry_door});
    if (num_left == 1) return true;
    for (int i = 0; i < 8; ++i) {
        std::vector<int> walls;
        for (int w = 0; w < 4; ++w)
            if (w != entry_wall) walls.push_back(w);
        const int exit_wall = rng.rand_elem(walls);
        const int next_entry_wall = (exit_wall + 2) % 4;
        Pos exit_door;
        if (exit_wall == 0)
            exit_door = {top_x + size_x - 1, top_y + rng.rand_int(1, size_y - 1)};
        else if (exit_wall == 1)
            exit_door = {top_x + rng.rand_int(1, size_x - 1), top_y + size_y - 1};
        else if (exit_wall == 2)
            exit_door = {top_x, top_y + rng.rand_int(1, size_y - 1)};
        else
            exit_door = {top_x + rng.rand_int(1, size_x - 1), top_y};
        if (place_room(rng, width, height, num_left - 1, rooms, min_size, max_size, next_entry_wall, exit_door)) break;
    }
    return true;
}

}  // namespace detail

inline constexpr int kMultiRoomGridSize = 25;

/// X rooms of side at most Y (walls included) chained through closed doors.
/// Everything outside the rooms is wall.
inline Level generate_multiroom(int num_rooms, int max_room_size, std::uint64_t seed)
{
    if (num_rooms < 2) throw std::invalid_argument("multiroom: need at least 2 rooms");
    if (max_room_size < 4 || max_room_size > 10) throw std::invalid_argument("multiroom: room size must be in [4, 10]");
    const int size = kMultiRoomGridSize;
    detail::GenRng rng(seed);

    std::vector<detail::Room> rooms;
    int attempts = 0;
    while (static_cast<int>(rooms.size()) < num_rooms) {
        if (++attempts > detail::kGenerationRetries) throw generation_error("multiroom layout retry budget exhausted", seed);
        std::vector<detail::Room> candidate;
        const Pos entry{rng.rand_int(0, size - 2), rng.rand_int(0, size - 2)};
        detail::place_room(rng, size, size, num_rooms, candidate, 4, max_room_size, 2, entry);
        if (candidate.size() > rooms.size()) rooms = std::move(candidate);
    }

    Level lvl = detail::blank_level(Family::multiroom, seed, size, size, Cell::wall());
    lvl.param_a = num_rooms;
    lvl.param_b = max_room_size;
    lvl.view_size = 3;
    lvl.max_steps = 20 * num_rooms * max_room_size;

    for (const auto& r : rooms)
        for (int y = r.top.y + 1; y < r.top.y + r.size.y - 1; ++y)
            for (int x = r.top.x + 1; x < r.top.x + r.size.x - 1; ++x) lvl.at({x, y}) = Cell{};

    std::vector<Color> all_colors{Color::red, Color::green, Color::blue, Color::purple, Color::yellow, Color::grey};
    std::optional<Color> prev;
    for (std::size_t i = 1; i < rooms.size(); ++i) {
        std::vector<Color> choices;
        for (Color c : all_colors)
            if (!prev || c != *prev) choices.push_back(c);
        const Color c = rng.rand_elem(choices);
        lvl.at(rooms[i].entry_door) = Cell::door(c, false);
        prev = c;
    }

    const auto& first = rooms.front();
    lvl.agent_start = detail::place_in_rect(lvl, rng, first.top, first.size, seed);
    lvl.start_dir = static_cast<Direction>(rng.rand_int(0, 4));
    const auto& last = rooms.back();
    lvl.goal_pos = detail::place_in_rect(lvl, rng, last.top, last.size, seed, {lvl.agent_start});
    lvl.at(lvl.goal_pos) = Cell::goal();

    if (!goal_reachable(lvl)) throw generation_error("multiroom goal unreachable", seed);
    return lvl;
}

/// 3x3 grid of rooms of side Y (walls included) joined by open doors; the
/// agent starts in the centre room, one target object sits in an outer room.
inline Level generate_findobj(int room_size, std::uint64_t seed)
{
    if (room_size != 5 && room_size != 6 && room_size != 7 && room_size != 10)
        throw std::invalid_argument("findobj: room size must be one of 5, 6, 7, 10");
    const int side = (room_size - 1) * 3 + 1;
    detail::GenRng rng(seed);
    Level lvl = detail::blank_level(Family::findobj, seed, side, side, Cell{});
    lvl.param_a = room_size;
    lvl.view_size = 7;
    lvl.max_steps = 9 * room_size * room_size;

    const int step = room_size - 1;
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x)
            if (x % step == 0 || y % step == 0) lvl.at({x, y}) = Cell::wall();

    auto random_color = [&] { return static_cast<Color>(rng.rand_int(0, kColorCount)); };
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 3; ++i) {
            if (i < 2) {  // door on the right wall
                const Pos d{(i + 1) * step, j * step + rng.rand_int(1, step)};
                lvl.at(d) = Cell::door(random_color(), true);
            }
            if (j < 2) {  // door on the south wall
                const Pos d{i * step + rng.rand_int(1, step), (j + 1) * step};
                lvl.at(d) = Cell::door(random_color(), true);
            }
        }

    const Pos center_top{step, step};
    const Pos room_extent{room_size, room_size};
    lvl.agent_start = detail::place_in_rect(lvl, rng, center_top, room_extent, seed);
    lvl.start_dir = static_cast<Direction>(rng.rand_int(0, 4));

    static constexpr std::array<Pos, 8> outer{{{0, 0}, {1, 0}, {2, 0}, {0, 1}, {2, 1}, {0, 2}, {1, 2}, {2, 2}}};
    const Pos room = outer[static_cast<std::size_t>(rng.rand_int(0, 8))];
    const Pos top{room.x * step, room.y * step};
    lvl.goal_pos = detail::place_in_rect(lvl, rng, top, room_extent, seed);
    const Object kind = rng.rand_int(0, 2) == 0 ? Object::ball : Object::box;
    const Color color = random_color();
    lvl.at(lvl.goal_pos) = Cell{kind, color, false};
    lvl.goal_object = ObjectDescriptor{kind, color};

    if (!goal_reachable(lvl)) throw generation_error("findobj target unreachable", seed);
    return lvl;
}

/// Which of the 3x3 rooms (0..8, row major) contains p.
inline int findobj_room_of(const Level& lvl, Pos p)
{
    const int step = lvl.param_a - 1;
    return (p.y / step) * 3 + (p.x / step);
}

/// Number of open 4-neighbours of an open cell.
inline int open_degree(const Level& lvl, Pos p)
{
    int deg = 0;
    for (int d = 0; d < 4; ++d)
        if (traversable(lvl.get(p + dir_vec(static_cast<Direction>(d))))) ++deg;
    return deg;
}

/// Depth-first-carved maze on odd coordinates with ~10% of the remaining
/// interior walls between cells knocked out to form loops.
inline Level generate_minipacman(int width, int height, std::uint64_t seed)
{
    if ((width != 6 && width != 11) || (height != 6 && height != 11))
        throw std::invalid_argument("minipacman: width and height must be 6 or 11");
    detail::GenRng rng(seed);
    const int cells_x = (width - 1) / 2, cells_y = (height - 1) / 2;
    for (int attempt = 0; attempt < detail::kGenerationRetries; ++attempt) {
        Level lvl = detail::blank_level(Family::minipacman, seed, width, height, Cell::wall());
        lvl.view_size = 7;
        lvl.max_steps = 4 * width * height;
        auto cell_pos = [](int cx, int cy) { return Pos{2 * cx + 1, 2 * cy + 1}; };

        std::vector<char> visited(static_cast<std::size_t>(cells_x * cells_y), 0);
        std::vector<std::pair<int, int>> stack;
        const int sx = rng.rand_int(0, cells_x), sy = rng.rand_int(0, cells_y);
        stack.emplace_back(sx, sy);
        visited[static_cast<std::size_t>(sy * cells_x + sx)] = 1;
        lvl.at(cell_pos(sx, sy)) = Cell{};
        while (!stack.empty()) {
            const auto [cx, cy] = stack.back();
            std::vector<int> options;
            for (int d = 0; d < 4; ++d) {
                const Pos v = dir_vec(static_cast<Direction>(d));
                const int nx = cx + v.x, ny = cy + v.y;
                if (nx < 0 || ny < 0 || nx >= cells_x || ny >= cells_y) continue;
                if (!visited[static_cast<std::size_t>(ny * cells_x + nx)]) options.push_back(d);
            }
            if (options.empty()) {
                stack.pop_back();
                continue;
            }
            const Pos v = dir_vec(static_cast<Direction>(rng.rand_elem(options)));
            const int nx = cx + v.x, ny = cy + v.y;
            visited[static_cast<std::size_t>(ny * cells_x + nx)] = 1;
            lvl.at(cell_pos(cx, cy) + v) = Cell{};
            lvl.at(cell_pos(nx, ny)) = Cell{};
            stack.emplace_back(nx, ny);
        }

        std::vector<Pos> closed;
        for (int cy = 0; cy < cells_y; ++cy)
            for (int cx = 0; cx < cells_x; ++cx) {
                if (cx + 1 < cells_x && lvl.at(cell_pos(cx, cy) + Pos{1, 0}).object == Object::wall)
                    closed.push_back(cell_pos(cx, cy) + Pos{1, 0});
                if (cy + 1 < cells_y && lvl.at(cell_pos(cx, cy) + Pos{0, 1}).object == Object::wall)
                    closed.push_back(cell_pos(cx, cy) + Pos{0, 1});
            }
        const int to_open = static_cast<int>(std::lround(0.1 * static_cast<double>(closed.size())));
        for (int k = 0; k < to_open && !closed.empty(); ++k) {
            const int i = rng.rand_int(0, static_cast<int>(closed.size()));
            lvl.at(closed[static_cast<std::size_t>(i)]) = Cell{};
            closed.erase(closed.begin() + i);
        }

        std::vector<Pos> open;
        bool dead_end = false;
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                if (lvl.at({x, y}).object == Object::empty) {
                    open.push_back({x, y});
                    if (open_degree(lvl, {x, y}) == 1) dead_end = true;
                }
        if (!dead_end || open.size() < 2) continue;

        lvl.agent_start = rng.rand_elem(open);
        lvl.start_dir = static_cast<Direction>(rng.rand_int(0, 4));
        bool placed = false;
        for (int tries = 0; tries < 64 && !placed; ++tries) {
            const Pos g = rng.rand_elem(open);
            if (g == lvl.agent_start) continue;
            const auto path = shortest_path(lvl, lvl.agent_start, g);
            if (path.size() >= 5) {  // at least 4 moves apart
                lvl.goal_pos = g;
                placed = true;
            }
        }
        if (!placed) continue;
        lvl.at(lvl.goal_pos) = Cell::goal();
        return lvl;
    }
    throw generation_error("minipacman retry budget exhausted", seed);
}

struct LevelSpec {
    Family family = Family::multiroom;
    int a = 2;  // rooms / room size / width
    int b = 4;  // max room size / unused / height
};

inline Level generate(const LevelSpec& spec, std::uint64_t seed)
{
    switch (spec.family) {
    case Family::multiroom: return generate_multiroom(spec.a, spec.b, seed);
    case Family::findobj: return generate_findobj(spec.a, seed);
    case Family::minipacman: return generate_minipacman(spec.a, spec.b, seed);
    }
    throw std::invalid_argument("unknown family");
}

}  // namespace infobot::env
