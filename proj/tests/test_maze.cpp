#include "doctest.h"

#include <array>

#include "interwhen/maze.hpp"

using namespace interwhen;

namespace {

const MazeGrid kBend{{
    "#####",
    "#S###",
    "#*###",
    "#**E#",
    "#####",
}};

}  // namespace

TEST_CASE("grid parsing pulls the longest run of grid lines") {
    MazeGrid g = parse_grid("Here is the maze:\n\n#####\n#S*E#\n#####\n\nSolve it.");
    REQUIRE(g.height() == 3);
    CHECK(g.width() == 5);
    CHECK(find_cell(g, 'S') == GridPos{1, 1});
    CHECK(find_cell(g, 'E') == GridPos{1, 3});
    CHECK(g.open({1, 2}));
    CHECK(!g.open({0, 0}));
    CHECK(!g.open({-1, 2}));
    CHECK(g.cell({99, 99}) == '#');
}

TEST_CASE("movement deltas use screen coordinates") {
    CHECK(moved({3, 5}, Direction::Up) == GridPos{2, 5});
    CHECK(moved({3, 5}, Direction::Down) == GridPos{4, 5});
    CHECK(moved({3, 5}, Direction::Left) == GridPos{3, 4});
    CHECK(moved({3, 5}, Direction::Right) == GridPos{3, 6});
}

TEST_CASE("relative position covers the full case split") {
    CHECK(relpos_of({3, 5}, {1, 1}) == RelPos::TopLeft);
    CHECK(relpos_of({3, 5}, {1, 7}) == RelPos::TopRight);
    CHECK(relpos_of({3, 5}, {6, 1}) == RelPos::BottomLeft);
    CHECK(relpos_of({3, 5}, {6, 7}) == RelPos::BottomRight);
    CHECK(relpos_of({3, 5}, {3, 1}) == RelPos::DirectlyLeft);
    CHECK(relpos_of({3, 5}, {3, 9}) == RelPos::DirectlyRight);
    CHECK(relpos_of({3, 5}, {1, 5}) == RelPos::DirectlyAbove);
    CHECK(relpos_of({3, 5}, {8, 5}) == RelPos::DirectlyBelow);
}

TEST_CASE("turn table matches the cross-product classification everywhere") {
    const std::array<Direction, 4> all{Direction::Up, Direction::Down, Direction::Left,
                                       Direction::Right};
    for (Direction a : all)
        for (Direction b : all) CHECK(classify_turn(a, b) == classify_turn_cross(a, b));

    CHECK(classify_turn(Direction::Up, Direction::Right) == TurnType::RightTurn);
    CHECK(classify_turn(Direction::Up, Direction::Left) == TurnType::LeftTurn);
    CHECK(classify_turn(Direction::Up, Direction::Down) == TurnType::Reversal);
    CHECK(classify_turn(Direction::Down, Direction::Right) == TurnType::LeftTurn);
    CHECK(classify_turn(Direction::Left, Direction::Left) == TurnType::Straight);
}

TEST_CASE("turn counting ignores straights and reversals") {
    // L: Down->Right, R: Right->Down, R: Down->Left, L: Left->Down
    std::vector<Direction> dirs{Direction::Down, Direction::Right, Direction::Down,
                                Direction::Left, Direction::Down};
    TurnCounts c = count_turns(dirs);
    CHECK(c == TurnCounts{2, 2});
    CHECK(count_turns_cross(dirs) == c);

    std::vector<Direction> rev{Direction::Up, Direction::Down, Direction::Down};
    CHECK(count_turns(rev) == TurnCounts{0, 0});
    CHECK(count_turns({}) == TurnCounts{0, 0});
    CHECK(count_turns({Direction::Left}) == TurnCounts{0, 0});
}

TEST_CASE("walk_path follows a simple corridor") {
    auto path = walk_path(kBend);
    REQUIRE(path.has_value());
    REQUIRE(path->cells.size() == 5);
    CHECK(path->cells.front() == GridPos{1, 1});
    CHECK(path->cells.back() == GridPos{3, 3});
    CHECK(path->dirs == std::vector<Direction>{Direction::Down, Direction::Down, Direction::Right,
                                               Direction::Right});
    CHECK(count_turns(path->dirs) == TurnCounts{0, 1});
}

TEST_CASE("walk_path rejects branching corridors") {
    MazeGrid fork{{
        "#####",
        "#*S*#",
        "#####",
    }};
    std::string err;
    CHECK(!walk_path(fork, &err).has_value());
    CHECK(!err.empty());
}

TEST_CASE("verify_locate checks both endpoints") {
    MazeLocatePayload p;
    p.s_pos = GridPos{1, 1};
    p.e_pos = GridPos{3, 3};
    CHECK(verify_locate(kBend, p).pass);

    p.e_pos = GridPos{3, 2};
    Verdict v = verify_locate(kBend, p);
    CHECK(!v.pass);
    CHECK(v.feedback.has_value());

    MazeLocatePayload partial;
    partial.s_pos = GridPos{1, 1};
    CHECK(!verify_locate(kBend, partial).pass);
}

static MazeStepPayload step(int i, Direction d, GridPos from, GridPos to) {
    MazeStepPayload p;
    p.index = i;
    p.move_dir = d;
    p.from_pos = from;
    p.to_pos = to;
    return p;
}

TEST_CASE("verify_step accepts the gold walk and advances") {
    MazeWalkState walk;
    walk.at = {1, 1};

    MazeStepPayload s1 = step(1, Direction::Down, {1, 1}, {2, 1});
    s1.cur_dir = Direction::Down;
    s1.claimed_turn = TurnType::Straight;
    s1.counts = MazeStepPayload::Counts{0, 0, 0};
    CHECK(verify_step(kBend, walk, s1).pass);
    walk = advance_walk(walk, s1);
    CHECK(walk.at == GridPos{2, 1});
    CHECK(walk.steps == 1);

    MazeStepPayload s2 = step(2, Direction::Down, {2, 1}, {3, 1});
    s2.prev_dir_line = true;
    s2.prev_dir = Direction::Down;
    CHECK(verify_step(kBend, walk, s2).pass);
    walk = advance_walk(walk, s2);

    MazeStepPayload s3 = step(3, Direction::Right, {3, 1}, {3, 2});
    s3.claimed_turn = TurnType::LeftTurn;
    s3.counts = MazeStepPayload::Counts{0, 1, {}};
    CHECK(verify_step(kBend, walk, s3).pass);
    walk = advance_walk(walk, s3);
    CHECK(walk.left == 1);
    CHECK(walk.right == 0);
}

TEST_CASE("verify_step rejects each kind of corruption with feedback") {
    MazeWalkState walk;
    walk.at = {2, 1};
    walk.last_dir = Direction::Down;
    walk.steps = 1;

    auto expect_fail = [&](const MazeStepPayload& p) {
        Verdict v = verify_step(kBend, walk, p);
        CHECK(!v.pass);
        CHECK(v.feedback.has_value());
    };

    expect_fail(step(3, Direction::Down, {2, 1}, {3, 1}));            // wrong index
    expect_fail(step(2, Direction::Down, {1, 1}, {2, 1}));            // discontinuous
    expect_fail(step(2, Direction::Down, {2, 1}, {3, 2}));            // motion arithmetic
    expect_fail(step(2, Direction::Right, {2, 1}, {2, 2}));           // wall
    {
        MazeStepPayload p = step(2, Direction::Down, {2, 1}, {3, 1});
        p.current_pos = GridPos{3, 2};
        expect_fail(p);  // report line disagrees
    }
    {
        MazeStepPayload p = step(2, Direction::Down, {2, 1}, {3, 1});
        p.prev_dir_line = true;
        p.prev_dir = Direction::Left;
        expect_fail(p);  // wrong previous direction
    }
    {
        MazeStepPayload p = step(2, Direction::Down, {2, 1}, {3, 1});
        p.cur_dir = Direction::Up;
        expect_fail(p);  // current-direction line contradicts the move
    }
    {
        MazeStepPayload p = step(2, Direction::Down, {2, 1}, {3, 1});
        p.claimed_turn = TurnType::RightTurn;
        expect_fail(p);  // straight continuation called a turn
    }
    {
        MazeStepPayload p = step(2, Direction::Down, {2, 1}, {3, 1});
        p.counts = MazeStepPayload::Counts{1, 0, {}};
        expect_fail(p);  // running count drifts
    }

    MazeStepPayload fine = step(2, Direction::Down, {2, 1}, {3, 1});
    CHECK(verify_step(kBend, walk, fine).pass);
}

TEST_CASE("incomplete step blocks are rejected, not guessed at") {
    MazeWalkState walk;
    walk.at = {1, 1};
    MazeStepPayload p;
    p.index = 1;
    p.move_dir = Direction::Down;
    Verdict v = verify_step(kBend, walk, p);
    CHECK(!v.pass);
    CHECK(v.feedback.has_value());
}
