// SPDX-License-Identifier: Apache-2.0
#include "eccl/board.hpp"

#include <algorithm>
#include <charconv>
#include <deque>
#include <sstream>
#include <stdexcept>

namespace eccl {

char tile_char(TileType t) {
    switch (t) {
        case TileType::Neutral: return '.';
        case TileType::Slow: return 's';
        case TileType::Block: return '#';
        case TileType::Home: return 'H';
        case TileType::Source: return 'S';
        case TileType::Defender: return 'D';
    }
    return '?';
}

std::optional<TileType> tile_from_char(char c) {
    switch (c) {
        case '.': return TileType::Neutral;
        case 's': return TileType::Slow;
        case '#': return TileType::Block;
        case 'H': return TileType::Home;
        case 'S': return TileType::Source;
        case 'D': return TileType::Defender;
        default: return std::nullopt;
    }
}

Board::Board(int width, int height, TileType fill) : width_(width), height_(height) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("board dimensions must be positive");
    tiles_.assign(static_cast<std::size_t>(width) * height, fill);
}

int Board::count(TileType t) const {
    return static_cast<int>(std::count(tiles_.begin(), tiles_.end(), t));
}

std::vector<Coord> Board::find_all(TileType t) const {
    std::vector<Coord> out;
    for (int i = 0; i < cell_count(); ++i) {
        if (at(i) == t) out.push_back(coord(i));
    }
    return out;
}

namespace {

int parse_dim(std::string_view s, const char* what) {
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || v <= 0) {
        throw std::invalid_argument(std::string("board header: invalid ") + what + " '" + std::string(s) + "'");
    }
    return v;
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> parts;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        if (j > i) parts.push_back(line.substr(i, j - i));
        i = j;
    }
    return parts;
}

Board parse_lines(const std::vector<std::string>& lines) {
    if (lines.empty()) throw std::invalid_argument("empty board text");
    const auto header = split_ws(lines[0]);
    if (header.size() != 2) throw std::invalid_argument("board header must be 'W H', got '" + lines[0] + "'");
    const int w = parse_dim(header[0], "width");
    const int h = parse_dim(header[1], "height");
    if (static_cast<int>(lines.size()) - 1 != h) {
        throw std::invalid_argument("board expects " + std::to_string(h) + " rows, got " + std::to_string(lines.size() - 1));
    }
    Board b(w, h);
    for (int y = 0; y < h; ++y) {
        std::string_view row = lines[static_cast<std::size_t>(y) + 1];
        if (!row.empty() && row.back() == '\r') row.remove_suffix(1);
        if (static_cast<int>(row.size()) != w) {
            throw std::invalid_argument("board row " + std::to_string(y) + " has " + std::to_string(row.size()) +
                                        " tiles, expected " + std::to_string(w));
        }
        for (int x = 0; x < w; ++x) {
            auto t = tile_from_char(row[static_cast<std::size_t>(x)]);
            if (!t) {
                throw std::invalid_argument("board row " + std::to_string(y) + ": unknown tile '" +
                                            std::string(1, row[static_cast<std::size_t>(x)]) + "'");
            }
            b.set({x, y}, *t);
        }
    }
    return b;
}

}  // namespace

Board parse_board(std::string_view text) {
    std::vector<std::string> lines;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        if (lines.empty() && split_ws(line).empty()) continue;
        lines.push_back(line);
    }
    while (!lines.empty() && split_ws(lines.back()).empty()) lines.pop_back();
    return parse_lines(lines);
}

std::string board_to_string(const Board& board) {
    std::string out = std::to_string(board.width()) + " " + std::to_string(board.height()) + "\n";
    for (int y = 0; y < board.height(); ++y) {
        for (int x = 0; x < board.width(); ++x) out += tile_char(board.at({x, y}));
        out += '\n';
    }
    return out;
}

std::vector<Board> read_boards(std::istream& in) {
    std::vector<Board> out;
    std::string line;
    while (std::getline(in, line)) {
        const auto header = split_ws(line);
        if (header.empty()) continue;
        if (header.size() != 2) throw std::invalid_argument("board header must be 'W H', got '" + line + "'");
        const int h = parse_dim(header[1], "height");
        std::vector<std::string> lines{line};
        for (int y = 0; y < h; ++y) {
            if (!std::getline(in, line)) throw std::invalid_argument("unexpected end of input inside board");
            lines.push_back(line);
        }
        out.push_back(parse_lines(lines));
    }
    return out;
}

std::vector<int> distance_field(const Board& board) {
    std::vector<int> dist(static_cast<std::size_t>(board.cell_count()), kUnreachable);
    std::deque<int> queue;
    for (int i = 0; i < board.cell_count(); ++i) {
        if (board.at(i) == TileType::Home) {
            dist[static_cast<std::size_t>(i)] = 0;
            queue.push_back(i);
        }
    }
    constexpr int dx[4] = {0, 1, 0, -1};
    constexpr int dy[4] = {-1, 0, 1, 0};
    while (!queue.empty()) {
        const int cur = queue.front();
        queue.pop_front();
        const Coord c = board.coord(cur);
        for (int d = 0; d < 4; ++d) {
            const Coord n{c.x + dx[d], c.y + dy[d]};
            if (!board.in_bounds(n)) continue;
            const int ni = board.index(n);
            if (!passable(board.at(ni)) || dist[static_cast<std::size_t>(ni)] != kUnreachable) continue;
            dist[static_cast<std::size_t>(ni)] = dist[static_cast<std::size_t>(cur)] + 1;
            queue.push_back(ni);
        }
    }
    return dist;
}

std::optional<std::string> validate_board(const Board& board) {
    if (board.width() < kMinBoardSide || board.height() < kMinBoardSide) {
        return "board must be at least " + std::to_string(kMinBoardSide) + "x" + std::to_string(kMinBoardSide);
    }
    const int homes = board.count(TileType::Home);
    if (homes == 0) return std::string("missing home tile");
    if (homes > 1) return std::string("multiple home tiles");
    const int sources = board.count(TileType::Source);
    if (sources == 0) return std::string("no source tiles");
    if (sources > kMaxSources) return std::string("too many source tiles");
    const auto dist = distance_field(board);
    for (Coord s : board.find_all(TileType::Source)) {
        if (dist[static_cast<std::size_t>(board.index(s))] == kUnreachable) return std::string("source disconnected");
    }
    return std::nullopt;
}

}  // namespace eccl
