// SPDX-License-Identifier: Apache-2.0
#include "reference_sim.hpp"

#include <algorithm>
#include <cstdlib>
#include <tuple>

namespace refsim {

namespace {

bool walkable(char c) { return c == '.' || c == 's' || c == 'S' || c == 'H'; }

}  // namespace

std::vector<std::vector<int>> distances(const std::vector<std::string>& rows) {
    const int h = static_cast<int>(rows.size());
    const int w = static_cast<int>(rows[0].size());
    std::vector<std::vector<int>> d(h, std::vector<int>(w, kFar));
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (rows[y][x] == 'H') d[y][x] = 0;
    bool changed = true;
    while (changed) {
        changed = false;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                if (!walkable(rows[y][x])) continue;
                int best = d[y][x];
                if (y > 0 && d[y - 1][x] + 1 < best) best = d[y - 1][x] + 1;
                if (y + 1 < h && d[y + 1][x] + 1 < best) best = d[y + 1][x] + 1;
                if (x > 0 && d[y][x - 1] + 1 < best) best = d[y][x - 1] + 1;
                if (x + 1 < w && d[y][x + 1] + 1 < best) best = d[y][x + 1] + 1;
                if (best < d[y][x]) {
                    d[y][x] = best;
                    changed = true;
                }
            }
        }
    }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (!walkable(rows[y][x])) d[y][x] = kFar;
    return d;
}

bool legal(const World& w, const Rules& r, int entity, int x, int y) {
    if (w.breached || w.turn >= r.max_turns) return false;
    if (y < 0 || y >= static_cast<int>(w.rows.size()) || x < 0 || x >= static_cast<int>(w.rows[0].size())) return false;
    if (w.rows[y][x] != '.') return false;
    for (const Unit& u : w.units)
        if (u.x == x && u.y == y) return false;
    if (entity == 1) return true;
    std::vector<std::string> after = w.rows;
    after[y][x] = '#';
    const auto d = distances(after);
    for (int yy = 0; yy < static_cast<int>(after.size()); ++yy)
        for (int xx = 0; xx < static_cast<int>(after[0].size()); ++xx)
            if (after[yy][xx] == 'S' && d[yy][xx] >= kFar) return false;
    for (const Unit& u : w.units)
        if (d[u.y][u.x] >= kFar) return false;
    return true;
}

int play_turn(World& w, const Rules& r, int entity, int x, int y) {
    if (!legal(w, r, entity, x, y)) return -1;
    w.rows[y][x] = entity == 0 ? 'D' : entity == 1 ? 's' : '#';

    if (w.turn % r.spawn_period == 0) {
        for (int yy = 0; yy < static_cast<int>(w.rows.size()); ++yy)
            for (int xx = 0; xx < static_cast<int>(w.rows[0].size()); ++xx)
                if (w.rows[yy][xx] == 'S') w.units.push_back({xx, yy, r.base_hp + w.turn / r.hp_growth_interval, 0});
    }

    const auto d = distances(w.rows);
    const int h = static_cast<int>(w.rows.size());
    const int wd = static_cast<int>(w.rows[0].size());
    for (Unit& u : w.units) {
        if (u.wait > 0) {
            u.wait -= 1;
            continue;
        }
        int bx = u.x, by = u.y, bd = d[u.y][u.x];
        // north, east, south, west; only a strictly smaller distance wins
        if (u.y > 0 && d[u.y - 1][u.x] < bd) { bx = u.x; by = u.y - 1; bd = d[by][bx]; }
        if (u.x + 1 < wd && d[u.y][u.x + 1] < bd) { bx = u.x + 1; by = u.y; bd = d[by][bx]; }
        if (u.y + 1 < h && d[u.y + 1][u.x] < bd) { bx = u.x; by = u.y + 1; bd = d[by][bx]; }
        if (u.x > 0 && d[u.y][u.x - 1] < bd) { bx = u.x - 1; by = u.y; bd = d[by][bx]; }
        if (bx != u.x || by != u.y) {
            u.x = bx;
            u.y = by;
            if (w.rows[by][bx] == 's') u.wait = 1;
        }
    }

    int killed = 0;
    std::vector<Unit> alive;
    for (Unit u : w.units) {
        for (int yy = 0; yy < h; ++yy)
            for (int xx = 0; xx < wd; ++xx)
                if (w.rows[yy][xx] == 'D' && std::abs(xx - u.x) <= r.defender_range && std::abs(yy - u.y) <= r.defender_range)
                    u.hp -= r.defender_damage;
        if (u.hp <= 0)
            ++killed;
        else
            alive.push_back(u);
    }
    w.units = alive;
    w.slain += killed;
    for (const Unit& u : w.units)
        if (w.rows[u.y][u.x] == 'H') w.breached = true;
    w.turn += 1;
    return killed;
}

std::vector<Unit> sorted_units(std::vector<Unit> units) {
    std::sort(units.begin(), units.end(), [](const Unit& a, const Unit& b) {
        return std::tie(a.y, a.x, a.hp, a.wait) < std::tie(b.y, b.x, b.hp, b.wait);
    });
    return units;
}

}  // namespace refsim
