#include <map>
#include <memory>
#include <random>

#include <gtest/gtest.h>

#include "infobot/envs/generators.hpp"
#include "infobot/envs/level_io.hpp"
#include "infobot/envs/simulator.hpp"

using namespace infobot::env;

namespace {

// Builds a level from rows of legend characters; doors start closed unless 'd'.
Level fixture(const std::vector<std::string>& rows, Pos start, Direction dir, int max_steps = 100)
{
    Level lvl;
    lvl.family = Family::minipacman;
    lvl.width = static_cast<int>(rows[0].size());
    lvl.height = static_cast<int>(rows.size());
    lvl.view_size = 3;
    lvl.max_steps = max_steps;
    lvl.grid.resize(static_cast<std::size_t>(lvl.width * lvl.height));
    for (int y = 0; y < lvl.height; ++y)
        for (int x = 0; x < lvl.width; ++x) {
            Cell c;
            switch (rows[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)]) {
            case '#': c = Cell::wall(); break;
            case 'G': c = Cell::goal(); lvl.goal_pos = {x, y}; break;
            case 'D': c = Cell::door(Color::blue, false); break;
            case 'd': c = Cell::door(Color::blue, true); break;
            default: break;
            }
            lvl.at({x, y}) = c;
        }
    lvl.agent_start = start;
    lvl.start_dir = dir;
    return lvl;
}

EnvState state_of(const Level& lvl) { return EnvState(std::make_shared<const Level>(lvl)); }

int doors_on_path(const Level& lvl)
{
    int doors = 0;
    for (Pos p : shortest_path(lvl, lvl.agent_start, lvl.goal_pos)) doors += lvl.at(p).object == Object::door;
    return doors;
}

void check_common_invariants(const Level& lvl)
{
    ASSERT_TRUE(goal_reachable(lvl)) << lvl.token();
    for (int x = 0; x < lvl.width; ++x) {
        EXPECT_TRUE(lvl.at({x, 0}).object == Object::wall);
        EXPECT_TRUE(lvl.at({x, lvl.height - 1}).object == Object::wall);
    }
    for (int y = 0; y < lvl.height; ++y) {
        EXPECT_TRUE(lvl.at({0, y}).object == Object::wall);
        EXPECT_TRUE(lvl.at({lvl.width - 1, y}).object == Object::wall);
    }
    int goals = 0;
    for (const Cell& c : lvl.grid) {
        if (c.object == Object::wall) EXPECT_EQ(c.color, Color::grey);
        if (c.object == Object::goal) {
            EXPECT_EQ(c.color, Color::green);
            ++goals;
        }
    }
    if (lvl.goal_object) {
        EXPECT_EQ(goals, 0);
        int targets = 0;
        for (const Cell& c : lvl.grid) targets += c.object == lvl.goal_object->object && c.color == lvl.goal_object->color;
        EXPECT_EQ(targets, 1);
    } else {
        EXPECT_EQ(goals, 1);
    }
    EXPECT_TRUE(traversable(lvl.at(lvl.agent_start)));
}

}  // namespace

TEST(MultiRoom, TwoRoomsCrossExactlyOneDoor)
{
    const Level lvl = generate_multiroom(2, 4, 7);
    check_common_invariants(lvl);
    EXPECT_EQ(doors_on_path(lvl), 1);
}

TEST(MultiRoom, Deterministic) { EXPECT_EQ(generate_multiroom(2, 4, 7), generate_multiroom(2, 4, 7)); }

TEST(MultiRoom, DifferentSeedsDiffer) { EXPECT_NE(generate_multiroom(2, 4, 7).grid, generate_multiroom(2, 4, 8).grid); }

TEST(MultiRoom, FourRoomsCrossThreeDoors)
{
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        const Level lvl = generate_multiroom(4, 4, seed);
        check_common_invariants(lvl);
        EXPECT_EQ(doors_on_path(lvl), 3) << "seed " << seed;
    }
}

TEST(MultiRoom, DoorsStartClosedAndAdjacentColorsDiffer)
{
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const Level lvl = generate_multiroom(6, 6, seed);
        check_common_invariants(lvl);
        const auto path = shortest_path(lvl, lvl.agent_start, lvl.goal_pos);
        std::vector<Color> colors;
        for (Pos p : path)
            if (lvl.at(p).object == Object::door) {
                EXPECT_FALSE(lvl.at(p).door_open);
                colors.push_back(lvl.at(p).color);
            }
        ASSERT_EQ(colors.size(), 5u);
        for (std::size_t i = 1; i < colors.size(); ++i) EXPECT_NE(colors[i], colors[i - 1]);
    }
}

TEST(MultiRoom, RejectsBadParameters)
{
    EXPECT_THROW(generate_multiroom(1, 4, 0), std::invalid_argument);
    EXPECT_THROW(generate_multiroom(2, 3, 0), std::invalid_argument);
    EXPECT_THROW(generate_multiroom(2, 11, 0), std::invalid_argument);
}

TEST(MultiRoom, MaxStepsDefault) { EXPECT_EQ(generate_multiroom(3, 5, 1).max_steps, 20 * 3 * 5); }

TEST(FindObj, TargetOutsideCenterRoom)
{
    const Level lvl = generate_findobj(5, 3);
    check_common_invariants(lvl);
    EXPECT_NE(findobj_room_of(lvl, lvl.goal_pos), 4);
    EXPECT_EQ(findobj_room_of(lvl, lvl.agent_start), 4);
    ASSERT_TRUE(lvl.goal_object.has_value());
}

TEST(FindObj, Deterministic) { EXPECT_EQ(generate_findobj(7, 11), generate_findobj(7, 11)); }

TEST(FindObj, OuterRoomFrequencies)
{
    // 1000 draws put one room about 3 sd low on seeds [0, 1000); 10^4 keeps the check meaningful
    const int n = 10000;
    std::map<int, int> counts;
    for (std::uint64_t seed = 0; seed < n; ++seed) {
        const Level lvl = generate_findobj(5, seed);
        ++counts[findobj_room_of(lvl, lvl.goal_pos)];
    }
    EXPECT_EQ(counts.count(4), 0u);
    EXPECT_EQ(counts.size(), 8u);
    for (const auto& [room, c] : counts) EXPECT_NEAR(c / static_cast<double>(n), 0.125, 0.03) << "room " << room;
}

TEST(FindObj, AllSizesValid)
{
    for (int y : {5, 6, 7, 10}) {
        const Level lvl = generate_findobj(y, 5);
        EXPECT_EQ(lvl.width, 3 * (y - 1) + 1);
        EXPECT_EQ(lvl.view_size, 7);
        EXPECT_EQ(lvl.max_steps, 9 * y * y);
        check_common_invariants(lvl);
    }
    EXPECT_THROW(generate_findobj(8, 0), std::invalid_argument);
}

TEST(MiniPacMan, SmallMazeHasDeadEnd)
{
    const Level lvl = generate_minipacman(6, 6, 1);
    check_common_invariants(lvl);
    bool dead_end = false;
    for (int y = 0; y < lvl.height; ++y)
        for (int x = 0; x < lvl.width; ++x)
            if (traversable(lvl.at({x, y})) && open_degree(lvl, {x, y}) == 1) dead_end = true;
    EXPECT_TRUE(dead_end);
}

TEST(MiniPacMan, Deterministic) { EXPECT_EQ(generate_minipacman(11, 11, 4), generate_minipacman(11, 11, 4)); }

TEST(MiniPacMan, StartGoalAtLeastFourApart)
{
    for (std::uint64_t seed = 0; seed < 500; ++seed) {
        const Level lvl = generate_minipacman(11, 11, seed);
        const auto path = shortest_path(lvl, lvl.agent_start, lvl.goal_pos);
        ASSERT_FALSE(path.empty());
        EXPECT_GE(path.size() - 1, 4u) << "seed " << seed;
    }
}

TEST(MiniPacMan, AllOpenCellsConnected)
{
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const Level lvl = generate_minipacman(11, 6, seed);
        const auto mask = reachable_mask(lvl);
        for (std::size_t i = 0; i < lvl.grid.size(); ++i)
            if (traversable(lvl.grid[i])) EXPECT_TRUE(mask[i]) << "seed " << seed;
    }
}

TEST(MiniPacMan, RejectsBadSizes) { EXPECT_THROW(generate_minipacman(7, 6, 0), std::invalid_argument); }

TEST(GenerationProperty, ReachabilityOverManySeeds)
{
    for (std::uint64_t seed = 0; seed < 2000; ++seed) {
        ASSERT_TRUE(goal_reachable(generate_multiroom(4, 5, seed))) << seed;
        ASSERT_TRUE(goal_reachable(generate_findobj(6, seed))) << seed;
        ASSERT_TRUE(goal_reachable(generate_minipacman(6, 11, seed))) << seed;
    }
}

TEST(Step, ForwardIntoWallLeavesPosition)
{
    auto s = state_of(fixture({"#####", "#...#", "#...#", "#..G#", "#####"}, {1, 1}, Direction::north));
    const auto r = s.step(Action::forward);
    EXPECT_EQ(s.agent_pos(), (Pos{1, 1}));
    EXPECT_EQ(r.reward, 0.0);
    EXPECT_FALSE(r.done);
}

TEST(Step, ForwardOntoGoalPaysOne)
{
    auto s = state_of(fixture({"#####", "#...#", "#...#", "#..G#", "#####"}, {3, 2}, Direction::south));
    const auto r = s.step(Action::forward);
    EXPECT_EQ(r.reward, 1.0);
    EXPECT_TRUE(r.done);
    EXPECT_EQ(s.agent_pos(), (Pos{3, 3}));
}

TEST(Step, ToggleOpensDoorThenForwardEnters)
{
    auto s = state_of(fixture({"#####", "#.D.#", "#####"}, {1, 1}, Direction::east));
    s.step(Action::forward);
    EXPECT_EQ(s.agent_pos(), (Pos{1, 1}));
    EXPECT_FALSE(s.door_open({2, 1}));
    s.step(Action::toggle);
    EXPECT_TRUE(s.door_open({2, 1}));
    s.step(Action::forward);
    EXPECT_EQ(s.agent_pos(), (Pos{2, 1}));
    // doors stay open once toggled
    s.step(Action::toggle);
    EXPECT_TRUE(s.door_open({2, 1}));
}

TEST(Step, TimeoutEndsWithZeroReward)
{
    auto s = state_of(fixture({"#####", "#...#", "#..G#", "#####"}, {1, 1}, Direction::north, 3));
    EXPECT_FALSE(s.step(Action::turn_left).done);
    EXPECT_FALSE(s.step(Action::turn_left).done);
    const auto r = s.step(Action::turn_left);
    EXPECT_TRUE(r.done);
    EXPECT_EQ(r.reward, 0.0);
    EXPECT_EQ(s.step_count(), 3);
    EXPECT_THROW(s.step(Action::forward), std::logic_error);
}

TEST(Step, NoOpActionsLeaveWorld)
{
    auto s = state_of(fixture({"#####", "#...#", "#..G#", "#####"}, {1, 1}, Direction::east));
    for (Action a : {Action::pickup, Action::drop, Action::done}) {
        s.step(a);
        EXPECT_EQ(s.agent_pos(), (Pos{1, 1}));
        EXPECT_EQ(s.agent_dir(), Direction::east);
    }
}

TEST(Step, TimeDiscountedRewardBehindFlag)
{
    auto lvl = std::make_shared<const Level>(fixture({"####", "#.G#", "####"}, {1, 1}, Direction::east, 10));
    EnvState s(lvl, EnvOptions{true});
    EXPECT_DOUBLE_EQ(s.step(Action::forward).reward, 1.0 - 0.9 * 1.0 / 10.0);
}

TEST(StepProperty, RandomWalksNeverEnterWallsOrClosedDoors)
{
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> act(0, kActionCount - 1);
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        const Level lvl = seed % 3 == 0 ? generate_multiroom(3, 5, seed)
                          : seed % 3 == 1 ? generate_findobj(5, seed)
                                          : generate_minipacman(11, 11, seed);
        EnvState s(std::make_shared<const Level>(lvl));
        double total = 0.0;
        while (!s.done()) {
            const Pos before = s.agent_pos();
            const Cell ahead = s.cell(before + dir_vec(s.agent_dir()));
            const auto r = s.step(static_cast<Action>(act(rng)));
            total += r.reward;
            const Cell here = s.cell(s.agent_pos());
            EXPECT_NE(here.object, Object::wall);
            if (here.object == Object::door) EXPECT_TRUE(here.door_open);
            if (s.agent_pos() != before) EXPECT_TRUE(ahead.object != Object::wall);
            EXPECT_LE(s.step_count(), s.max_steps());
        }
        EXPECT_TRUE(total == 0.0 || total == 1.0);
    }
}

TEST(StepProperty, ReplayIsIdentical)
{
    auto run = [] {
        std::mt19937_64 rng(5);
        std::uniform_int_distribution<int> act(0, kActionCount - 1);
        EnvState s(std::make_shared<const Level>(generate_multiroom(3, 4, 99)));
        std::vector<Observation> trace;
        while (!s.done()) {
            s.step(static_cast<Action>(act(rng)));
            trace.push_back(observe(s));
        }
        return trace;
    };
    EXPECT_EQ(run(), run());
}

TEST(Observe, WallAheadShowsInRowAhead)
{
    // agent at (2,2) facing north; the row above it is wall
    Level lvl = fixture({"#####", "#####", "#...#", "#..G#", "#####"}, {2, 2}, Direction::north);
    const Observation o = observe(state_of(lvl));
    ASSERT_EQ(o.view, 3);
    for (int col = 0; col < 3; ++col) EXPECT_EQ(o.at(col, 1, 0), static_cast<int>(Object::wall));
    // cells beyond the wall are occluded
    for (int col = 0; col < 3; ++col) EXPECT_EQ(o.at(col, 0, 0), static_cast<int>(Object::unseen));
    // the agent cell renders as empty
    EXPECT_EQ(o.at(1, 2, 0), static_cast<int>(Object::empty));
}

TEST(Observe, RightHandSideIsRightColumn)
{
    // agent faces east at (1,1): its right hand points south, toward the goal
    Level lvl = fixture({"#####", "#...#", "#G..#", "#####"}, {1, 1}, Direction::east);
    const Observation o = observe(state_of(lvl));
    EXPECT_EQ(o.at(2, 2, 0), static_cast<int>(Object::goal));
    EXPECT_EQ(o.at(0, 2, 0), static_cast<int>(Object::wall));
}

TEST(Observe, RotationChangesOnlyOrientation)
{
    auto s = state_of(generate_findobj(5, 2));
    const Level before = s.level();
    const Pos pos = s.agent_pos();
    const Observation o1 = observe(s);
    s.step(Action::turn_right);
    const Observation o2 = observe(s);
    EXPECT_EQ(s.agent_pos(), pos);
    EXPECT_EQ(s.level(), before);
    EXPECT_EQ(o2.agent_dir, turn_right(o1.agent_dir));
    s.step(Action::turn_left);
    EXPECT_EQ(observe(s), o1);
}

TEST(Observe, Deterministic)
{
    const auto s = state_of(generate_minipacman(11, 11, 3));
    EXPECT_EQ(observe(s), observe(s));
}

TEST(ObserveProperty, ValuesWithinEnumRanges)
{
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> act(0, kActionCount - 1);
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        EnvState s(std::make_shared<const Level>(seed % 2 ? generate_findobj(7, seed) : generate_multiroom(2, 6, seed)));
        while (!s.done()) {
            const Observation o = observe(s);
            ASSERT_EQ(o.data.size(), static_cast<std::size_t>(o.view * o.view * 3));
            for (std::size_t i = 0; i < o.data.size(); i += 3) {
                EXPECT_LT(o.data[i], kObjectCount);
                EXPECT_LT(o.data[i + 1], kColorCount);
                EXPECT_LE(o.data[i + 2], 1);
            }
            s.step(static_cast<Action>(act(rng)));
        }
    }
}

TEST(GoalOf, OnGoalIsZero)
{
    auto s = state_of(fixture({"#####", "#...#", "#..G#", "#####"}, {3, 2}, Direction::east));
    const auto g = std::get<Displacement>(goal_of(s).value);
    EXPECT_EQ(g.dx, 0.0);
    EXPECT_EQ(g.dy, 0.0);
}

TEST(GoalOf, ScaledDisplacement)
{
    std::vector<std::string> rows(10, "#........#");
    rows.front() = rows.back() = "##########";
    rows[6][5] = 'G';
    auto s = state_of(fixture(rows, {2, 2}, Direction::east));
    const auto g = std::get<Displacement>(goal_of(s).value);
    EXPECT_DOUBLE_EQ(g.dx, 0.3);
    EXPECT_DOUBLE_EQ(g.dy, 0.4);
    const auto v = goal_vector(goal_of(s));
    EXPECT_DOUBLE_EQ(v[0], 0.3);
    EXPECT_DOUBLE_EQ(v[1], 0.4);
    for (std::size_t i = 2; i < kGoalWidth; ++i) EXPECT_EQ(v[i], 0.0);
}

TEST(GoalOf, YellowBallDescriptor)
{
    const GoalSpec g{ObjectDescriptor{Object::ball, Color::yellow}};
    const auto v = goal_vector(g);
    const std::array<double, kGoalWidth> expect{1, 0, 0, 0, 0, 0, 1, 0};
    EXPECT_EQ(v, expect);
}

TEST(GoalOf, FindObjReturnsTargetDescriptor)
{
    const Level lvl = generate_findobj(6, 21);
    const auto g = goal_of(state_of(lvl));
    EXPECT_EQ(std::get<ObjectDescriptor>(g.value), *lvl.goal_object);
}

TEST(LevelIo, RoundTripAllFamilies)
{
    for (const Level& lvl : {generate_multiroom(3, 6, 4), generate_findobj(7, 4), generate_minipacman(11, 6, 4)}) {
        const std::string text = serialize_level(lvl);
        EXPECT_EQ(parse_level(text), lvl);
        EXPECT_EQ(serialize_level(parse_level(text)), text);
    }
}

TEST(LevelIo, RenderLegend)
{
    const Level lvl = fixture({"#####", "#.D.#", "#.dG#", "#####"}, {1, 1}, Direction::east);
    EXPECT_EQ(render_level(lvl), "#####\n#.D.#\n#.dG#\n#####\n");
}

TEST(LevelIo, MalformedRowRejected)
{
    std::string text = serialize_level(generate_minipacman(6, 6, 0));
    text.pop_back();
    text.pop_back();
    EXPECT_THROW(parse_level(text), std::invalid_argument);
}
