#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "infobot/envs/level.hpp"
#include "infobot/envs/simulator.hpp"
#include "infobot/train/task.hpp"
#include "infobot/transfer/transfer.hpp"

namespace infobot::harness {

inline constexpr double kUnreachable = -1.0;

/// Per-cell values laid out like the level's text rendering (row = y).
struct GridMap {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    double at(int x, int y) const { return values[static_cast<std::size_t>(y * width + x)]; }
    double& at(int x, int y) { return values[static_cast<std::size_t>(y * width + x)]; }

    std::string to_csv() const
    {
        std::ostringstream os;
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                if (x) os << ',';
                os << train::format_real(at(x, y));
            }
            os << '\n';
        }
        return os.str();
    }

    /// Plain (P2) grayscale image; lighter is larger, sentinel cells are black.
    std::string to_pgm(int scale = 8) const
    {
        double hi = 0.0;
        for (double v : values) hi = std::max(hi, v);
        std::ostringstream os;
        os << "P2\n" << width * scale << ' ' << height * scale << "\n255\n";
        for (int y = 0; y < height * scale; ++y) {
            for (int x = 0; x < width * scale; ++x) {
                const double v = at(x / scale, y / scale);
                const int g = v < 0.0 ? 0 : (hi > 0.0 ? 40 + static_cast<int>(std::lround(215.0 * v / hi)) : 40);
                os << g << (x + 1 < width * scale ? ' ' : '\n');
            }
        }
        return os.str();
    }
};

/// Cells the agent can stand on: reachable from the start, not the goal.
inline std::vector<char> standable_mask(const env::Level& level)
{
    auto m = env::reachable_mask(level);
    if (level.in_bounds(level.goal_pos) && level.at(level.goal_pos).object == env::Object::goal) m[level.index(level.goal_pos)] = 0;
    return m;
}

/// KL[p_enc(Z | s, g) || q(Z)] for every standable pose, reconstructed with
/// doors in their initial state and a blank recurrent memory; the cell value
/// is the max over the four headings. goal overrides the level's own goal.
inline GridMap export_kl_heatmap(const transfer::FrozenBonusModel& model, const env::Level& level,
                                 const std::optional<std::vector<double>>& goal = std::nullopt)
{
    const auto lvl = std::make_shared<const env::Level>(level);
    if (model.config().obs_width != policy::observation_width(level.view_size))
        throw std::invalid_argument("heatmap: model observation width does not match the level");
    if (goal && goal->size() != model.config().goal_width) throw std::invalid_argument("heatmap: goal width mismatch");
    GridMap map{level.width, level.height, std::vector<double>(level.grid.size(), kUnreachable)};
    const auto mask = standable_mask(level);
    env::EnvState state(lvl);
    for (int y = 0; y < level.height; ++y)
        for (int x = 0; x < level.width; ++x) {
            if (!mask[level.index({x, y})]) continue;
            double best = 0.0;
            for (int d = 0; d < 4; ++d) {
                state.set_pose({x, y}, static_cast<env::Direction>(d));
                const auto obs = policy::observation_features(env::observe(state));
                std::vector<double> g;
                if (goal) {
                    g = *goal;
                } else {
                    const auto gv = env::goal_vector(env::goal_of(state));
                    g.assign(gv.begin(), gv.end());
                }
                best = std::max(best, model.kl(obs, g, model.initial_memory()).kl);
            }
            map.at(x, y) = best;
        }
    return map;
}

/// 1 + visits recorded for this level at the cell, summed over headings
/// (so an untouched cell reads 1, the table's initialisation).
inline GridMap export_visitation_map(const transfer::VisitationTable& table, const env::Level& level)
{
    GridMap map{level.width, level.height, std::vector<double>(level.grid.size(), kUnreachable)};
    const auto mask = env::reachable_mask(level);
    const std::string token = level.token();
    for (int y = 0; y < level.height; ++y)
        for (int x = 0; x < level.width; ++x) {
            if (!mask[level.index({x, y})]) continue;
            std::uint64_t increments = 0;
            for (int d = 0; d < 4; ++d) increments += table.count(train::StateKey{token, x, y, d}.str()) - 1;
            map.at(x, y) = 1.0 + static_cast<double>(increments);
        }
    return map;
}

enum class CellKind { other, doorway, corridor };

/// Doorway: a door cell the agent can stand in. Corridor: any other
/// standable cell.
inline std::vector<CellKind> classify_cells(const env::Level& level)
{
    std::vector<CellKind> kinds(level.grid.size(), CellKind::other);
    const auto mask = standable_mask(level);
    for (std::size_t i = 0; i < kinds.size(); ++i)
        if (mask[i]) kinds[i] = level.grid[i].object == env::Object::door ? CellKind::doorway : CellKind::corridor;
    return kinds;
}

struct DoorwayContrast {
    double doorway_mean = 0.0;
    double corridor_mean = 0.0;
    std::size_t doorway_cells = 0;
    std::size_t corridor_cells = 0;

    /// doorway_mean / corridor_mean (infinite when the corridor mean is 0).
    double ratio() const
    {
        if (corridor_mean > 0.0) return doorway_mean / corridor_mean;
        return doorway_mean > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    }
};

inline DoorwayContrast doorway_contrast(const GridMap& heat, const env::Level& level)
{
    const auto kinds = classify_cells(level);
    DoorwayContrast c;
    double ds = 0.0, cs = 0.0;
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        if (kinds[i] == CellKind::doorway) {
            ds += heat.values[i];
            ++c.doorway_cells;
        } else if (kinds[i] == CellKind::corridor) {
            cs += heat.values[i];
            ++c.corridor_cells;
        }
    }
    if (!c.doorway_cells || !c.corridor_cells) throw std::invalid_argument("doorway contrast: level has no doorway or no corridor cells");
    c.doorway_mean = ds / static_cast<double>(c.doorway_cells);
    c.corridor_mean = cs / static_cast<double>(c.corridor_cells);
    return c;
}

}  // namespace infobot::harness
