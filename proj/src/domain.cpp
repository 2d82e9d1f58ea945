#include "interwhen/domain.hpp"

#include <array>
#include <cctype>

namespace interwhen {

namespace {

std::string lower_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

}  // namespace

std::string_view direction_name(Direction d) {
    switch (d) {
        case Direction::Up: return "UP";
        case Direction::Down: return "DOWN";
        case Direction::Left: return "LEFT";
        case Direction::Right: return "RIGHT";
    }
    return "";
}

std::optional<Direction> parse_direction(std::string_view word) {
    std::string w = lower_ascii(word);
    if (w == "up") return Direction::Up;
    if (w == "down") return Direction::Down;
    if (w == "left") return Direction::Left;
    if (w == "right") return Direction::Right;
    return std::nullopt;
}

std::string_view turn_name(TurnType t) {
    switch (t) {
        case TurnType::RightTurn: return "RIGHT_TURN";
        case TurnType::LeftTurn: return "LEFT_TURN";
        case TurnType::Straight: return "STRAIGHT";
        case TurnType::Reversal: return "REVERSAL";
    }
    return "";
}

std::optional<TurnType> parse_turn(std::string_view word) {
    std::string w = lower_ascii(word);
    for (char& c : w)
        if (c == '-' || c == ' ') c = '_';
    if (w == "right_turn" || w == "right") return TurnType::RightTurn;
    if (w == "left_turn" || w == "left") return TurnType::LeftTurn;
    if (w == "straight" || w == "none") return TurnType::Straight;
    if (w == "reversal" || w == "u_turn" || w == "uturn") return TurnType::Reversal;
    return std::nullopt;
}

std::string_view relpos_name(RelPos p) {
    switch (p) {
        case RelPos::DirectlyLeft: return "directly left";
        case RelPos::DirectlyRight: return "directly right";
        case RelPos::DirectlyAbove: return "directly above";
        case RelPos::DirectlyBelow: return "directly below";
        case RelPos::TopLeft: return "top-left";
        case RelPos::TopRight: return "top-right";
        case RelPos::BottomLeft: return "bottom-left";
        case RelPos::BottomRight: return "bottom-right";
    }
    return "";
}

std::optional<RelPos> parse_relpos(std::string_view phrase) {
    std::string w = lower_ascii(phrase);
    for (char& c : w)
        if (c == '_' || c == ' ') c = '-';
    if (w == "directly-left" || w == "left") return RelPos::DirectlyLeft;
    if (w == "directly-right" || w == "right") return RelPos::DirectlyRight;
    if (w == "directly-above" || w == "above") return RelPos::DirectlyAbove;
    if (w == "directly-below" || w == "below") return RelPos::DirectlyBelow;
    if (w == "top-left" || w == "upper-left") return RelPos::TopLeft;
    if (w == "top-right" || w == "upper-right") return RelPos::TopRight;
    if (w == "bottom-left" || w == "lower-left") return RelPos::BottomLeft;
    if (w == "bottom-right" || w == "lower-right") return RelPos::BottomRight;
    return std::nullopt;
}

std::string_view diag_name(Diag d) {
    switch (d) {
        case Diag::NW: return "Northwest";
        case Diag::NE: return "Northeast";
        case Diag::SW: return "Southwest";
        case Diag::SE: return "Southeast";
    }
    return "";
}

std::string_view diag_abbrev(Diag d) {
    switch (d) {
        case Diag::NW: return "NW";
        case Diag::NE: return "NE";
        case Diag::SW: return "SW";
        case Diag::SE: return "SE";
    }
    return "";
}

std::optional<Diag> parse_diag(std::string_view word) {
    auto d8 = parse_dir8(word);
    if (d8 && is_diagonal(*d8)) return to_diag(*d8);
    return std::nullopt;
}

Diag opposite(Diag d) {
    switch (d) {
        case Diag::NW: return Diag::SE;
        case Diag::NE: return Diag::SW;
        case Diag::SW: return Diag::NE;
        case Diag::SE: return Diag::NW;
    }
    return Diag::NW;
}

std::string_view dir8_name(Dir8 d) {
    switch (d) {
        case Dir8::NW: return "Northwest";
        case Dir8::NE: return "Northeast";
        case Dir8::SW: return "Southwest";
        case Dir8::SE: return "Southeast";
        case Dir8::N: return "North";
        case Dir8::S: return "South";
        case Dir8::E: return "East";
        case Dir8::W: return "West";
    }
    return "";
}

std::optional<Dir8> parse_dir8(std::string_view word) {
    std::string w = lower_ascii(word);
    std::string cleaned;
    for (char c : w)
        if (c != '-' && c != ' ') cleaned += c;
    if (cleaned == "northwest") return Dir8::NW;
    if (cleaned == "northeast") return Dir8::NE;
    if (cleaned == "southwest") return Dir8::SW;
    if (cleaned == "southeast") return Dir8::SE;
    if (cleaned == "north") return Dir8::N;
    if (cleaned == "south") return Dir8::S;
    if (cleaned == "east") return Dir8::E;
    if (cleaned == "west") return Dir8::W;
    return std::nullopt;
}

bool is_diagonal(Dir8 d) {
    return d == Dir8::NW || d == Dir8::NE || d == Dir8::SW || d == Dir8::SE;
}

Diag to_diag(Dir8 d) {
    switch (d) {
        case Dir8::NW: return Diag::NW;
        case Dir8::NE: return Diag::NE;
        case Dir8::SW: return Diag::SW;
        case Dir8::SE: return Diag::SE;
        default: return Diag::NW;
    }
}

Dir8 to_dir8(Diag d) {
    switch (d) {
        case Diag::NW: return Dir8::NW;
        case Diag::NE: return Dir8::NE;
        case Diag::SW: return Dir8::SW;
        case Diag::SE: return Dir8::SE;
    }
    return Dir8::NW;
}

std::string to_string(GridPos p) {
    return "(" + std::to_string(p.row) + "," + std::to_string(p.col) + ")";
}

}  // namespace interwhen
