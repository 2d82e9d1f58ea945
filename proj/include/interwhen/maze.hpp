#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "interwhen/domain.hpp"
#include "interwhen/extraction.hpp"
#include "interwhen/trace.hpp"
#include "interwhen/verifier.hpp"

namespace interwhen {

// Rectangular character grid. '#' cells are walls; '*' cells form the
// corridor; 'S' and 'E' mark the endpoints.
struct MazeGrid {
    std::vector<std::string> rows;

    int height() const { return static_cast<int>(rows.size()); }
    int width() const { return rows.empty() ? 0 : static_cast<int>(rows[0].size()); }
    bool in_bounds(GridPos p) const;
    char cell(GridPos p) const;  // '#' when out of bounds
    bool open(GridPos p) const;  // in bounds and not a wall
};

// Pulls the longest run of consecutive grid lines out of surrounding text.
MazeGrid parse_grid(std::string_view text);

std::optional<GridPos> find_cell(const MazeGrid& grid, char marker);

GridPos delta(Direction d);
GridPos moved(GridPos from, Direction d);

// Where `e` sits relative to `s`, as seen on screen (row grows downward).
RelPos relpos_of(GridPos s, GridPos e);

// Turn classification by explicit table; REVERSAL for opposite directions.
TurnType classify_turn(Direction prev, Direction cur);

// Independent classification from the sign of the 2D cross product of the
// two movement vectors (negative in screen coordinates means a right turn).
TurnType classify_turn_cross(Direction prev, Direction cur);

struct TurnCounts {
    int right = 0;
    int left = 0;
    bool operator==(const TurnCounts&) const = default;
};

// Turns along a direction sequence. Reversals and straight segments do not
// count. The `cross` variant recounts with classify_turn_cross.
TurnCounts count_turns(const std::vector<Direction>& dirs);
TurnCounts count_turns_cross(const std::vector<Direction>& dirs);

struct MazePath {
    std::vector<GridPos> cells;  // S first, E last
    std::vector<Direction> dirs;
};

// Follows the corridor from S to E. The corridor must be a simple path: a
// cell with more than one unvisited '*' neighbour is an error, and E is
// entered only once no '*' cells remain ahead.
std::optional<MazePath> walk_path(const MazeGrid& grid, std::string* error = nullptr);

// Progress of a verified walk, updated as step states pass.
struct MazeWalkState {
    GridPos at;
    std::optional<Direction> last_dir;
    int right = 0;
    int left = 0;
    int steps = 0;
};

Verdict verify_locate(const MazeGrid& grid, const MazeLocatePayload& p);

// Checks a step block against the grid and the walk so far: step numbering,
// continuity with the previous position, motion arithmetic, wall collisions,
// and every report line the block carries (position, directions, turn type,
// running counts). Does not advance the walk.
Verdict verify_step(const MazeGrid& grid, const MazeWalkState& walk, const MazeStepPayload& p);

MazeWalkState advance_walk(const MazeWalkState& walk, const MazeStepPayload& p);

// VerifierBinding that tracks a walk over the given grid.
std::unique_ptr<VerifierBinding> make_maze_binding(MazeGrid grid);

}  // namespace interwhen
