#include "interwhen/maze.hpp"

#include <algorithm>

namespace interwhen {

bool MazeGrid::in_bounds(GridPos p) const {
    return p.row >= 0 && p.row < height() && p.col >= 0 &&
           p.col < static_cast<int>(rows[p.row].size());
}

char MazeGrid::cell(GridPos p) const { return in_bounds(p) ? rows[p.row][p.col] : '#'; }

bool MazeGrid::open(GridPos p) const {
    char c = cell(p);
    return c == '*' || c == 'S' || c == 'E';
}

MazeGrid parse_grid(std::string_view text) {
    auto is_grid_line = [](std::string_view line) {
        if (line.empty()) return false;
        bool has_structure = false;
        for (char c : line) {
            if (c == '#' || c == '*' || c == 'S' || c == 'E')
                has_structure = true;
            else
                return false;
        }
        return has_structure;
    };
    std::vector<std::string> best;
    std::vector<std::string> run;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string_view line =
            nl == std::string_view::npos ? text.substr(pos) : text.substr(pos, nl - pos);
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
        if (is_grid_line(line)) {
            run.emplace_back(line);
        } else {
            if (run.size() > best.size()) best = run;
            run.clear();
        }
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    if (run.size() > best.size()) best = run;
    return MazeGrid{std::move(best)};
}

std::optional<GridPos> find_cell(const MazeGrid& grid, char marker) {
    std::optional<GridPos> found;
    for (int r = 0; r < grid.height(); ++r)
        for (int c = 0; c < static_cast<int>(grid.rows[r].size()); ++c)
            if (grid.rows[r][c] == marker) {
                if (found) return std::nullopt;  // duplicate marker
                found = GridPos{r, c};
            }
    return found;
}

GridPos delta(Direction d) {
    switch (d) {
        case Direction::Up: return {-1, 0};
        case Direction::Down: return {1, 0};
        case Direction::Left: return {0, -1};
        case Direction::Right: return {0, 1};
    }
    return {0, 0};
}

GridPos moved(GridPos from, Direction d) {
    GridPos dd = delta(d);
    return {from.row + dd.row, from.col + dd.col};
}

RelPos relpos_of(GridPos s, GridPos e) {
    if (e.row == s.row) return e.col < s.col ? RelPos::DirectlyLeft : RelPos::DirectlyRight;
    if (e.col == s.col) return e.row < s.row ? RelPos::DirectlyAbove : RelPos::DirectlyBelow;
    if (e.row < s.row) return e.col < s.col ? RelPos::TopLeft : RelPos::TopRight;
    return e.col < s.col ? RelPos::BottomLeft : RelPos::BottomRight;
}

TurnType classify_turn(Direction prev, Direction cur) {
    if (prev == cur) return TurnType::Straight;
    switch (prev) {
        case Direction::Down:
            if (cur == Direction::Left) return TurnType::RightTurn;
            if (cur == Direction::Right) return TurnType::LeftTurn;
            return TurnType::Reversal;
        case Direction::Left:
            if (cur == Direction::Up) return TurnType::RightTurn;
            if (cur == Direction::Down) return TurnType::LeftTurn;
            return TurnType::Reversal;
        case Direction::Up:
            if (cur == Direction::Right) return TurnType::RightTurn;
            if (cur == Direction::Left) return TurnType::LeftTurn;
            return TurnType::Reversal;
        case Direction::Right:
            if (cur == Direction::Down) return TurnType::RightTurn;
            if (cur == Direction::Up) return TurnType::LeftTurn;
            return TurnType::Reversal;
    }
    return TurnType::Straight;
}

TurnType classify_turn_cross(Direction prev, Direction cur) {
    GridPos a = delta(prev);
    GridPos b = delta(cur);
    int cross = a.row * b.col - a.col * b.row;
    if (cross < 0) return TurnType::RightTurn;
    if (cross > 0) return TurnType::LeftTurn;
    int dot = a.row * b.row + a.col * b.col;
    return dot > 0 ? TurnType::Straight : TurnType::Reversal;
}

namespace {

TurnCounts count_with(const std::vector<Direction>& dirs,
                      TurnType (*classify)(Direction, Direction)) {
    TurnCounts out;
    for (std::size_t i = 1; i < dirs.size(); ++i) {
        switch (classify(dirs[i - 1], dirs[i])) {
            case TurnType::RightTurn: ++out.right; break;
            case TurnType::LeftTurn: ++out.left; break;
            default: break;
        }
    }
    return out;
}

}  // namespace

TurnCounts count_turns(const std::vector<Direction>& dirs) {
    return count_with(dirs, classify_turn);
}

TurnCounts count_turns_cross(const std::vector<Direction>& dirs) {
    return count_with(dirs, classify_turn_cross);
}

std::optional<MazePath> walk_path(const MazeGrid& grid, std::string* error) {
    auto fail = [&](std::string msg) -> std::optional<MazePath> {
        if (error) *error = std::move(msg);
        return std::nullopt;
    };
    auto s = find_cell(grid, 'S');
    auto e = find_cell(grid, 'E');
    if (!s) return fail("grid has no unique S marker");
    if (!e) return fail("grid has no unique E marker");
    MazePath path;
    path.cells.push_back(*s);
    std::vector<std::vector<char>> visited(grid.height());
    for (int r = 0; r < grid.height(); ++r) visited[r].assign(grid.rows[r].size(), 0);
    visited[s->row][s->col] = 1;
    GridPos at = *s;
    const Direction dirs4[] = {Direction::Up, Direction::Down, Direction::Left, Direction::Right};
    while (!(at == *e)) {
        std::optional<Direction> step;
        std::optional<Direction> exit_step;
        int corridor_choices = 0;
        for (Direction d : dirs4) {
            GridPos n = moved(at, d);
            if (!grid.in_bounds(n) || visited[n.row][n.col]) continue;
            char c = grid.cell(n);
            if (c == '*') {
                ++corridor_choices;
                step = d;
            } else if (c == 'E') {
                exit_step = d;
            }
        }
        if (corridor_choices > 1) return fail("corridor branches at " + to_string(at));
        if (corridor_choices == 0) {
            if (!exit_step) return fail("corridor dead-ends at " + to_string(at));
            step = exit_step;
        }
        at = moved(at, *step);
        visited[at.row][at.col] = 1;
        path.cells.push_back(at);
        path.dirs.push_back(*step);
    }
    return path;
}

Verdict verify_locate(const MazeGrid& grid, const MazeLocatePayload& p) {
    Verdict v;
    auto s = find_cell(grid, 'S');
    auto e = find_cell(grid, 'E');
    if (!s || !e) {
        v.pass = false;
        v.feedback = "the grid does not contain unique S and E markers";
        return v;
    }
    if (!p.s_pos || !(*p.s_pos == *s)) {
        v.pass = false;
        v.feedback = "the S marker is at " + to_string(*s) +
                     (p.s_pos ? ", not " + to_string(*p.s_pos) : "");
        return v;
    }
    if (!p.e_pos || !(*p.e_pos == *e)) {
        v.pass = false;
        v.feedback = "the E marker is at " + to_string(*e) +
                     (p.e_pos ? ", not " + to_string(*p.e_pos) : "");
        return v;
    }
    v.pass = true;
    return v;
}

Verdict verify_step(const MazeGrid& grid, const MazeWalkState& walk, const MazeStepPayload& p) {
    Verdict v;
    v.pass = false;
    if (!p.index || !p.move_dir || !p.from_pos || !p.to_pos) {
        v.feedback = "the step block is incomplete and could not be checked";
        return v;
    }
    int expected_index = walk.steps + 1;
    if (*p.index != expected_index) {
        v.feedback = "this should be step " + std::to_string(expected_index) + ", not step " +
                     std::to_string(*p.index);
        return v;
    }
    if (!(*p.from_pos == walk.at)) {
        v.feedback = "the walk is currently at " + to_string(walk.at) + ", not at " +
                     to_string(*p.from_pos);
        return v;
    }
    GridPos target = moved(*p.from_pos, *p.move_dir);
    if (!(*p.to_pos == target)) {
        v.feedback = "moving " + std::string(direction_name(*p.move_dir)) + " from " +
                     to_string(*p.from_pos) + " leads to " + to_string(target) + ", not " +
                     to_string(*p.to_pos);
        return v;
    }
    if (!grid.in_bounds(target)) {
        v.feedback = "the cell at " + to_string(target) + " is outside the grid";
        return v;
    }
    if (!grid.open(target)) {
        v.feedback = "the cell at " + to_string(target) + " is a wall";
        return v;
    }
    if (p.current_pos && !(*p.current_pos == *p.to_pos)) {
        v.feedback = "after this move the current position is " + to_string(*p.to_pos) + ", not " +
                     to_string(*p.current_pos);
        return v;
    }
    if (p.prev_dir_line) {
        if (p.prev_dir && !walk.last_dir) {
            v.feedback = "this is the first move, so there is no previous direction";
            return v;
        }
        if (walk.last_dir && (!p.prev_dir || *p.prev_dir != *walk.last_dir)) {
            v.feedback = "the previous direction was " +
                         std::string(direction_name(*walk.last_dir));
            return v;
        }
    }
    if (p.cur_dir && *p.cur_dir != *p.move_dir) {
        v.feedback = "the current direction of this move is " +
                     std::string(direction_name(*p.move_dir));
        return v;
    }
    TurnType expected_turn =
        walk.last_dir ? classify_turn(*walk.last_dir, *p.move_dir) : TurnType::Straight;
    if (p.claimed_turn && *p.claimed_turn != expected_turn) {
        if (walk.last_dir) {
            v.feedback = "moving from " + std::string(direction_name(*walk.last_dir)) + " to " +
                         std::string(direction_name(*p.move_dir)) + " is a " +
                         std::string(turn_name(expected_turn)) + ", not a " +
                         std::string(turn_name(*p.claimed_turn));
        } else {
            v.feedback = "the first move has no turn; the turn type should be STRAIGHT";
        }
        return v;
    }
    if (p.counts) {
        int right = walk.right + (expected_turn == TurnType::RightTurn ? 1 : 0);
        int left = walk.left + (expected_turn == TurnType::LeftTurn ? 1 : 0);
        if (p.counts->right != right || p.counts->left != left ||
            (p.counts->total && *p.counts->total != right + left)) {
            v.feedback = "after this step the running count is Right=" + std::to_string(right) +
                         ", Left=" + std::to_string(left);
            return v;
        }
    }
    v.pass = true;
    return v;
}

MazeWalkState advance_walk(const MazeWalkState& walk, const MazeStepPayload& p) {
    MazeWalkState next = walk;
    TurnType turn = walk.last_dir ? classify_turn(*walk.last_dir, *p.move_dir) : TurnType::Straight;
    if (turn == TurnType::RightTurn) ++next.right;
    if (turn == TurnType::LeftTurn) ++next.left;
    next.at = *p.to_pos;
    next.last_dir = *p.move_dir;
    ++next.steps;
    return next;
}

namespace {

class MazeBinding final : public VerifierBinding {
public:
    explicit MazeBinding(MazeGrid grid)
        : grid_(std::move(grid)), extractor_(make_maze_extractor()) {
        reset();
    }

    std::string id() const override { return "maze"; }
    const Extractor& extractor() const override { return *extractor_; }

    Verdict check(const ExtractedState& state) override {
        if (state.parse_failed) {
            Verdict v;
            v.pass = false;
            v.feedback = "the block could not be read (" + state.parse_error + ")";
            v.state_span = state.span;
            return v;
        }
        Verdict v;
        if (state.kind == StateKind::MazeLocate) {
            v = verify_locate(grid_, std::get<MazeLocatePayload>(state.payload));
        } else if (state.kind == StateKind::MazeStep) {
            const auto& p = std::get<MazeStepPayload>(state.payload);
            v = verify_step(grid_, walk_, p);
            if (v.pass) walk_ = advance_walk(walk_, p);
        } else {
            v.pass = true;
        }
        v.state_span = state.span;
        return v;
    }

    void reset() override {
        walk_ = MazeWalkState{};
        if (auto s = find_cell(grid_, 'S')) walk_.at = *s;
    }

private:
    MazeGrid grid_;
    std::unique_ptr<Extractor> extractor_;
    MazeWalkState walk_;
};

}  // namespace

std::unique_ptr<VerifierBinding> make_maze_binding(MazeGrid grid) {
    return std::make_unique<MazeBinding>(std::move(grid));
}

}  // namespace interwhen
