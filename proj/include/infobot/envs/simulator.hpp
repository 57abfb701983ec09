#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <variant>
#include <vector>

#include "infobot/envs/level.hpp"

namespace infobot::env {

/// Egocentric V x V x 3 view (object, color, door_open), agent at the
/// bottom-centre cell facing up.
struct Observation {
    int view = 0;
    std::vector<std::uint8_t> data;
    Direction agent_dir = Direction::east;

    std::uint8_t at(int col, int row, int channel) const
    {
        return data[static_cast<std::size_t>((row * view + col) * 3 + channel)];
    }
    friend bool operator==(const Observation&, const Observation&) = default;
};

struct Displacement {
    double dx = 0.0;
    double dy = 0.0;
    friend bool operator==(const Displacement&, const Displacement&) = default;
};

struct GoalSpec {
    std::variant<Displacement, ObjectDescriptor> value;
    friend bool operator==(const GoalSpec&, const GoalSpec&) = default;
};

inline constexpr std::size_t kGoalWidth = 8;

/// Fixed-width goal vector: [dx, dy, 0...] or one-hot(ball, box) ++ one-hot(color).
inline std::array<double, kGoalWidth> goal_vector(const GoalSpec& g)
{
    std::array<double, kGoalWidth> v{};
    if (const auto* d = std::get_if<Displacement>(&g.value)) {
        v[0] = d->dx;
        v[1] = d->dy;
    } else {
        const auto& o = std::get<ObjectDescriptor>(g.value);
        if (o.object != Object::ball && o.object != Object::box)
            throw std::invalid_argument("goal descriptor must name a ball or a box");
        v[o.object == Object::ball ? 0 : 1] = 1.0;
        v[2 + static_cast<std::size_t>(o.color)] = 1.0;
    }
    return v;
}

struct StepResult {
    double reward = 0.0;
    bool done = false;
};

struct EnvOptions {
    /// MiniGrid's 1 - 0.9 * t / T success reward instead of a flat 1.
    bool time_discounted_reward = false;
};

class EnvState {
public:
    explicit EnvState(std::shared_ptr<const Level> level, EnvOptions options = {})
      : level_(std::move(level)),
        options_(options),
        pos_(level_->agent_start),
        dir_(level_->start_dir),
        max_steps_(level_->max_steps)
    {
        door_open_.reserve(level_->grid.size());
        for (const auto& c : level_->grid) door_open_.push_back(c.object == Object::door && c.door_open);
    }

    const Level& level() const { return *level_; }
    std::shared_ptr<const Level> level_ptr() const { return level_; }
    Pos agent_pos() const { return pos_; }
    Direction agent_dir() const { return dir_; }
    int step_count() const { return step_count_; }
    int max_steps() const { return max_steps_; }
    bool done() const { return done_; }
    bool door_open(Pos p) const { return door_open_[level_->index(p)] != 0; }

    /// Current cell contents including door state.
    Cell cell(Pos p) const
    {
        Cell c = level_->get(p);
        if (c.object == Object::door) c.door_open = door_open(p);
        return c;
    }

    /// Places the agent directly (fixtures, heatmaps). Must be a non-wall cell.
    void set_pose(Pos p, Direction d)
    {
        if (!level_->in_bounds(p) || !traversable(level_->at(p))) throw std::invalid_argument("set_pose: not a free cell");
        pos_ = p;
        dir_ = d;
    }

    StepResult step(Action action)
    {
        if (done_) throw std::logic_error("step called on a finished episode");
        ++step_count_;
        StepResult r;
        const Pos ahead = pos_ + dir_vec(dir_);
        switch (action) {
        case Action::turn_left: dir_ = turn_left(dir_); break;
        case Action::turn_right: dir_ = turn_right(dir_); break;
        case Action::forward: {
            const Cell c = cell(ahead);
            const bool is_target = level_->in_bounds(ahead) && ahead == level_->goal_pos;
            if (c.object == Object::empty || (c.object == Object::door && c.door_open) || is_target) {
                pos_ = ahead;
                if (is_target) {
                    r.reward = options_.time_discounted_reward
                                   ? 1.0 - 0.9 * static_cast<double>(step_count_) / static_cast<double>(max_steps_)
                                   : 1.0;
                    r.done = true;
                }
            }
            break;
        }
        case Action::toggle:
            if (level_->in_bounds(ahead) && level_->at(ahead).object == Object::door) door_open_[level_->index(ahead)] = 1;
            break;
        case Action::pickup:
        case Action::drop:
        case Action::done: break;
        }
        if (!r.done && step_count_ >= max_steps_) r.done = true;
        done_ = r.done;
        return r;
    }

    friend bool operator==(const EnvState& a, const EnvState& b)
    {
        return *a.level_ == *b.level_ && a.pos_ == b.pos_ && a.dir_ == b.dir_ && a.door_open_ == b.door_open_
               && a.step_count_ == b.step_count_ && a.done_ == b.done_;
    }

private:
    std::shared_ptr<const Level> level_;
    EnvOptions options_;
    Pos pos_;
    Direction dir_;
    std::vector<std::uint8_t> door_open_;
    int step_count_ = 0;
    int max_steps_ = 0;
    bool done_ = false;
};

namespace detail {

inline bool see_behind(const Cell& c)
{
    if (c.object == Object::wall) return false;
    if (c.object == Object::door && !c.door_open) return false;
    return true;
}

}  // namespace detail

/// Egocentric partial view with MiniGrid's visibility propagation.
inline Observation observe(const EnvState& s)
{
    const int v = s.level().view_size;
    const Pos fwd = dir_vec(s.agent_dir());
    const Pos right{-fwd.y, fwd.x};
    std::vector<Cell> view(static_cast<std::size_t>(v * v));
    for (int row = 0; row < v; ++row)
        for (int col = 0; col < v; ++col) {
            const Pos world = s.agent_pos() + fwd * (v - 1 - row) + right * (col - v / 2);
            view[static_cast<std::size_t>(row * v + col)] = s.cell(world);
        }
    // the agent's own cell renders as empty
    view[static_cast<std::size_t>((v - 1) * v + v / 2)] = Cell{};

    std::vector<char> mask(view.size(), 0);
    auto m = [&](int col, int row) -> char& { return mask[static_cast<std::size_t>(row * v + col)]; };
    auto c = [&](int col, int row) -> const Cell& { return view[static_cast<std::size_t>(row * v + col)]; };
    m(v / 2, v - 1) = 1;
    for (int row = v - 1; row >= 0; --row) {
        for (int col = 0; col < v - 1; ++col) {
            if (!m(col, row) || !detail::see_behind(c(col, row))) continue;
            m(col + 1, row) = 1;
            if (row > 0) {
                m(col + 1, row - 1) = 1;
                m(col, row - 1) = 1;
            }
        }
        for (int col = v - 1; col > 0; --col) {
            if (!m(col, row) || !detail::see_behind(c(col, row))) continue;
            m(col - 1, row) = 1;
            if (row > 0) {
                m(col - 1, row - 1) = 1;
                m(col, row - 1) = 1;
            }
        }
    }

    Observation obs;
    obs.view = v;
    obs.agent_dir = s.agent_dir();
    obs.data.resize(static_cast<std::size_t>(v * v * 3));
    for (int i = 0; i < v * v; ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (!mask[k]) {
            obs.data[k * 3] = static_cast<std::uint8_t>(Object::unseen);
            continue;
        }
        obs.data[k * 3] = static_cast<std::uint8_t>(view[k].object);
        obs.data[k * 3 + 1] = view[k].object == Object::empty ? 0 : static_cast<std::uint8_t>(view[k].color);
        obs.data[k * 3 + 2] = (view[k].object == Object::door && view[k].door_open) ? 1 : 0;
    }
    return obs;
}

inline GoalSpec goal_of(const EnvState& s)
{
    const Level& lvl = s.level();
    if (lvl.goal_object) return GoalSpec{*lvl.goal_object};
    const double scale = 1.0 / static_cast<double>(std::max(lvl.width, lvl.height));
    return GoalSpec{Displacement{(lvl.goal_pos.x - s.agent_pos().x) * scale, (lvl.goal_pos.y - s.agent_pos().y) * scale}};
}

}  // namespace infobot::env
