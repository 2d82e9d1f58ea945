#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace interwhen {

struct GridPos {
    int row = 0;
    int col = 0;
    bool operator==(const GridPos&) const = default;
};

// Screen coordinates: UP decreases row, DOWN increases row,
// LEFT decreases col, RIGHT increases col.
enum class Direction { Up, Down, Left, Right };

enum class TurnType { RightTurn, LeftTurn, Straight, Reversal };

// Where E sits relative to S, as an exact case split on (row, col) comparison.
enum class RelPos {
    DirectlyLeft,
    DirectlyRight,
    DirectlyAbove,
    DirectlyBelow,
    TopLeft,
    TopRight,
    BottomLeft,
    BottomRight,
};

// Diagonal compass directions; the relation vocabulary of the spatial maps.
enum class Diag { NW, NE, SW, SE };

// Diagonals plus cardinals; conclusions may claim any of the eight.
enum class Dir8 { NW, NE, SW, SE, N, S, E, W };

struct DiagRelation {
    std::string subject;
    Diag dir = Diag::NW;
    std::string object;
    bool operator==(const DiagRelation&) const = default;
};

std::string_view direction_name(Direction d);
std::optional<Direction> parse_direction(std::string_view word);

std::string_view turn_name(TurnType t);
std::optional<TurnType> parse_turn(std::string_view word);

std::string_view relpos_name(RelPos p);
std::optional<RelPos> parse_relpos(std::string_view phrase);

std::string_view diag_name(Diag d);       // "Northwest" etc.
std::string_view diag_abbrev(Diag d);     // "NW" etc.
std::optional<Diag> parse_diag(std::string_view word);
Diag opposite(Diag d);

std::string_view dir8_name(Dir8 d);
std::optional<Dir8> parse_dir8(std::string_view word);
bool is_diagonal(Dir8 d);
Diag to_diag(Dir8 d);  // precondition: is_diagonal(d)
Dir8 to_dir8(Diag d);

std::string to_string(GridPos p);  // "(row,col)"

}  // namespace interwhen
