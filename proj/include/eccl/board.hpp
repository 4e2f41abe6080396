// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace eccl {

enum class TileType : std::uint8_t { Neutral = 0, Slow, Block, Home, Source, Defender };

inline constexpr int kTileTypeCount = 6;

char tile_char(TileType t);
std::optional<TileType> tile_from_char(char c);

struct Coord {
    int x = 0;
    int y = 0;
    auto operator<=>(const Coord&) const = default;
};

/// Static map layout. A Board may hold any grid (the evolutionary generator
/// works on invalid ones); validate_board states whether it is playable.
class Board {
public:
    Board() = default;
    Board(int width, int height, TileType fill = TileType::Neutral);

    int width() const { return width_; }
    int height() const { return height_; }
    int cell_count() const { return width_ * height_; }

    bool in_bounds(Coord c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
    int index(Coord c) const { return c.y * width_ + c.x; }
    Coord coord(int index) const { return {index % width_, index / width_}; }

    TileType at(Coord c) const { return tiles_[static_cast<std::size_t>(index(c))]; }
    TileType at(int index) const { return tiles_[static_cast<std::size_t>(index)]; }
    void set(Coord c, TileType t) { tiles_[static_cast<std::size_t>(index(c))] = t; }
    void set(int index, TileType t) { tiles_[static_cast<std::size_t>(index)] = t; }

    const std::vector<TileType>& tiles() const { return tiles_; }

    int count(TileType t) const;
    std::vector<Coord> find_all(TileType t) const;

    bool operator==(const Board&) const = default;
    auto operator<=>(const Board&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<TileType> tiles_;
};

inline constexpr int kMinBoardSide = 6;
inline constexpr int kMaxSources = 4;

/// Board text format: "W H" then H rows of W characters from ".s#HSD".
Board parse_board(std::string_view text);
std::string board_to_string(const Board& board);

/// Reads consecutive boards (blank lines between them are skipped). Throws on malformed input.
std::vector<Board> read_boards(std::istream& in);

/// First violated playability rule, or nullopt if the board is playable:
/// dims >= 6, exactly one Home, 1-4 Sources, every Source connected to Home.
std::optional<std::string> validate_board(const Board& board);

inline constexpr int kUnreachable = std::numeric_limits<int>::max();

/// Tiles attackers may stand on.
inline bool passable(TileType t) {
    return t == TileType::Neutral || t == TileType::Slow || t == TileType::Source || t == TileType::Home;
}

/// BFS step distance to the Home tile over 4-connected passable tiles
/// (row-major). Impassable or disconnected tiles are kUnreachable; with no or
/// several Home tiles, every Home is a target.
std::vector<int> distance_field(const Board& board);

}  // namespace eccl
