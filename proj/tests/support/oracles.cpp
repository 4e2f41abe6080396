// SPDX-License-Identifier: Apache-2.0
#include "oracles.hpp"

#include <algorithm>
#include <cmath>

namespace oracle {

std::vector<double> conv2d(const std::vector<double>& in, int c, int h, int w, const std::vector<double>& kernel, int f,
                           int k, const std::vector<double>& bias) {
    std::vector<double> out(static_cast<std::size_t>(f * h * w), 0.0);
    const int r = k / 2;
    for (int o = 0; o < f; ++o)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double acc = bias[o];
                for (int ch = 0; ch < c; ++ch)
                    for (int ky = 0; ky < k; ++ky)
                        for (int kx = 0; kx < k; ++kx) {
                            const int iy = y + ky - r, ix = x + kx - r;
                            if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                            acc += in[(ch * h + iy) * w + ix] * kernel[((o * c + ch) * k + ky) * k + kx];
                        }
                out[(o * h + y) * w + x] = acc;
            }
    return out;
}

std::vector<int> floyd_distance_to_home(const eccl::Board& b) {
    const int n = b.cell_count();
    const int inf = 1 << 28;
    std::vector<int> d(static_cast<std::size_t>(n * n), inf);
    for (int i = 0; i < n; ++i) {
        if (!eccl::passable(b.at(i))) continue;
        d[i * n + i] = 0;
        const eccl::Coord c = b.coord(i);
        const eccl::Coord nb[4] = {{c.x, c.y - 1}, {c.x + 1, c.y}, {c.x, c.y + 1}, {c.x - 1, c.y}};
        for (auto q : nb)
            if (b.in_bounds(q) && eccl::passable(b.at(q))) d[i * n + b.index(q)] = 1;
    }
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) d[i * n + j] = std::min(d[i * n + j], d[i * n + k] + d[k * n + j]);
    std::vector<int> out(static_cast<std::size_t>(n), eccl::kUnreachable);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (b.at(j) == eccl::TileType::Home && d[i * n + j] < inf) out[i] = std::min(out[i], d[i * n + j]);
    return out;
}

double linear_sum(const std::vector<double>& values) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
}

double max_grad_rel_error(const ScalarFn& fn, const std::vector<eccl::Tensor64>& inputs, double eps) {
    eccl::Graph64 g;
    std::vector<eccl::Graph64::Var> vars;
    for (const auto& t : inputs) vars.push_back(g.variable(t));
    auto loss = fn(g, vars);
    g.backward(loss);
    std::vector<eccl::Tensor64> analytic;
    for (auto v : vars) analytic.push_back(g.grad(v));

    const auto eval = [&](const std::vector<eccl::Tensor64>& xs) {
        eccl::Graph64 h(false);
        std::vector<eccl::Graph64::Var> vs;
        for (const auto& t : xs) vs.push_back(h.constant(t));
        return h.value(fn(h, vs))[0];
    };
    double worst = 0.0;
    std::vector<eccl::Tensor64> probe = inputs;
    for (std::size_t t = 0; t < inputs.size(); ++t) {
        for (std::size_t i = 0; i < inputs[t].size(); ++i) {
            const double x0 = inputs[t][i];
            probe[t][i] = x0 + eps;
            const double up = eval(probe);
            probe[t][i] = x0 - eps;
            const double down = eval(probe);
            probe[t][i] = x0;
            const double numeric = (up - down) / (2.0 * eps);
            const double a = analytic[t][i];
            const double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
            worst = std::max(worst, err);
        }
    }
    return worst;
}

eccl::Tensor64 random_tensor(const eccl::Shape& shape, std::mt19937_64& rng, double lo, double hi) {
    eccl::Tensor64 t(shape);
    std::uniform_real_distribution<double> u(lo, hi);
    for (double& v : t.data()) v = u(rng);
    return t;
}

eccl::Board random_playable_board(int w, int h, std::mt19937_64& rng) {
    while (true) {
        eccl::Board b(w, h);
        std::uniform_int_distribution<int> cell(0, w * h - 1);
        b.set(cell(rng), eccl::TileType::Home);
        const int sources = std::uniform_int_distribution<int>(1, 4)(rng);
        for (int placed = 0; placed < sources;) {
            const int i = cell(rng);
            if (b.at(i) != eccl::TileType::Neutral) continue;
            b.set(i, eccl::TileType::Source);
            ++placed;
        }
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int i = 0; i < w * h; ++i) {
            if (b.at(i) != eccl::TileType::Neutral) continue;
            const double r = u(rng);
            if (r < 0.15) b.set(i, eccl::TileType::Slow);
            else if (r < 0.30) b.set(i, eccl::TileType::Block);
        }
        if (!eccl::validate_board(b)) return b;
    }
}

refsim::World to_world(const eccl::GameState& s) {
    refsim::World w;
    for (int y = 0; y < s.board.height(); ++y) {
        std::string row;
        for (int x = 0; x < s.board.width(); ++x) row += eccl::tile_char(s.board.at({x, y}));
        w.rows.push_back(row);
    }
    for (const auto& a : s.attackers) w.units.push_back({a.pos.x, a.pos.y, a.hp, a.slow_delay});
    w.turn = s.turn;
    w.slain = s.slain;
    w.breached = s.breached;
    return w;
}

refsim::Rules to_rules(const eccl::GameConfig& c) {
    return {c.base_hp, c.hp_growth_interval, c.spawn_period, c.defender_damage, c.defender_range, c.max_turns};
}

bool same_state(const eccl::GameState& s, const refsim::World& w) {
    const refsim::World e = to_world(s);
    if (e.rows != w.rows || e.turn != w.turn || e.slain != w.slain || e.breached != w.breached) return false;
    const auto a = refsim::sorted_units(e.units);
    const auto b = refsim::sorted_units(w.units);
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].x != b[i].x || a[i].y != b[i].y || a[i].hp != b[i].hp || a[i].wait != b[i].wait) return false;
    }
    return true;
}

EquivalenceReport engine_equivalence(int episodes, std::uint64_t seed, int max_turns) {
    EquivalenceReport rep;
    std::mt19937_64 rng(seed);
    for (int ep = 0; ep < episodes; ++ep) {
        const int w = std::uniform_int_distribution<int>(6, 8)(rng);
        const int h = std::uniform_int_distribution<int>(6, 8)(rng);
        eccl::GameConfig cfg;
        cfg.base_hp = std::uniform_int_distribution<int>(1, 4)(rng);
        cfg.hp_growth_interval = std::uniform_int_distribution<int>(2, 10)(rng);
        cfg.spawn_period = std::uniform_int_distribution<int>(1, 4)(rng);
        cfg.defender_damage = std::uniform_int_distribution<int>(1, 2)(rng);
        cfg.defender_range = std::uniform_int_distribution<int>(1, 2)(rng);
        cfg.max_turns = max_turns;
        const eccl::Board board = random_playable_board(w, h, rng);
        eccl::GameState s = eccl::new_game(board, cfg, rng());
        refsim::World world = to_world(s);
        const refsim::Rules rules = to_rules(cfg);
        ++rep.episodes;
        const auto fail = [&](const std::string& what) {
            if (rep.mismatches++ == 0) {
                rep.first_mismatch = "episode " + std::to_string(ep) + " turn " + std::to_string(s.turn) + ": " + what +
                                     "\n" + eccl::board_to_string(s.board);
            }
        };
        while (true) {
            const auto mask = eccl::legal_actions(s, cfg);
            const int cells = w * h;
            std::vector<int> legal;
            bool mask_ok = true;
            for (int a = 0; a < 3 * cells; ++a) {
                const bool ref = refsim::legal(world, rules, a / cells, (a % cells) % w, (a % cells) / w);
                if (ref != (mask[static_cast<std::size_t>(a)] != 0)) mask_ok = false;
                if (ref) legal.push_back(a);
            }
            if (!mask_ok) {
                fail("legal action masks differ");
                break;
            }
            if (legal.empty()) break;
            const int a = legal[std::uniform_int_distribution<std::size_t>(0, legal.size() - 1)(rng)];
            const int cell = a % cells;
            const eccl::Action act{static_cast<eccl::Entity>(a / cells), {cell % w, cell / w}};
            const int r_engine = eccl::advance(s, act, cfg);
            const int r_ref = refsim::play_turn(world, rules, a / cells, cell % w, cell / w);
            ++rep.turns;
            if (r_engine != r_ref) {
                fail("rewards differ");
                break;
            }
            if (!same_state(s, world)) {
                fail("states differ");
                break;
            }
        }
    }
    return rep;
}

}  // namespace oracle
