#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "infobot/envs/types.hpp"

namespace infobot::env {

/// Immutable generated map. Door cells carry their initial open flag.
struct Level {
    Family family = Family::multiroom;
    std::uint64_t seed = 0;
    int width = 0;
    int height = 0;
    int param_a = 0;  // rooms (multiroom) / room size (findobj) / 0
    int param_b = 0;  // max room size (multiroom) / 0
    int view_size = 3;
    int max_steps = 0;
    std::vector<Cell> grid;
    Pos agent_start;
    Direction start_dir = Direction::east;
    Pos goal_pos;
    std::optional<ObjectDescriptor> goal_object;

    bool in_bounds(Pos p) const { return p.x >= 0 && p.y >= 0 && p.x < width && p.y < height; }
    std::size_t index(Pos p) const { return static_cast<std::size_t>(p.y) * width + p.x; }
    const Cell& at(Pos p) const { return grid[index(p)]; }
    Cell& at(Pos p) { return grid[index(p)]; }

    /// Out-of-bounds positions read as wall.
    Cell get(Pos p) const { return in_bounds(p) ? at(p) : Cell::wall(); }

    /// Stable identity used in visitation keys.
    std::string token() const
    {
        std::string t = to_string(family);
        switch (family) {
        case Family::multiroom: t += "-n" + std::to_string(param_a) + "-s" + std::to_string(param_b); break;
        case Family::findobj: t += "-s" + std::to_string(param_a); break;
        case Family::minipacman: t += "-" + std::to_string(width) + "x" + std::to_string(height); break;
        }
        return t + "-seed" + std::to_string(seed);
    }

    friend bool operator==(const Level&, const Level&) = default;
};

/// Cells an agent may stand on, ignoring door state.
inline bool traversable(const Cell& c) { return c.object != Object::wall; }

/// BFS shortest path start -> goal treating every door as passable. Empty
/// when unreachable; otherwise includes both endpoints.
inline std::vector<Pos> shortest_path(const Level& level, Pos start, Pos goal)
{
    std::vector<int> parent(level.grid.size(), -1);
    std::vector<char> seen(level.grid.size(), 0);
    std::deque<Pos> frontier{start};
    seen[level.index(start)] = 1;
    while (!frontier.empty()) {
        const Pos p = frontier.front();
        frontier.pop_front();
        if (p == goal) break;
        for (int d = 0; d < 4; ++d) {
            const Pos q = p + dir_vec(static_cast<Direction>(d));
            if (!level.in_bounds(q) || seen[level.index(q)] || !traversable(level.at(q))) continue;
            seen[level.index(q)] = 1;
            parent[level.index(q)] = static_cast<int>(level.index(p));
            frontier.push_back(q);
        }
    }
    if (!seen[level.index(goal)]) return {};
    std::vector<Pos> path{goal};
    for (int i = parent[level.index(goal)]; i >= 0; i = parent[static_cast<std::size_t>(i)])
        path.push_back({i % level.width, i / level.width});
    return {path.rbegin(), path.rend()};
}

inline bool goal_reachable(const Level& level) { return !shortest_path(level, level.agent_start, level.goal_pos).empty(); }

/// Every cell reachable from the agent start (doors passable).
inline std::vector<char> reachable_mask(const Level& level)
{
    std::vector<char> seen(level.grid.size(), 0);
    std::deque<Pos> frontier{level.agent_start};
    seen[level.index(level.agent_start)] = 1;
    while (!frontier.empty()) {
        const Pos p = frontier.front();
        frontier.pop_front();
        for (int d = 0; d < 4; ++d) {
            const Pos q = p + dir_vec(static_cast<Direction>(d));
            if (!level.in_bounds(q) || seen[level.index(q)] || !traversable(level.at(q))) continue;
            seen[level.index(q)] = 1;
            frontier.push_back(q);
        }
    }
    return seen;
}

}  // namespace infobot::env
