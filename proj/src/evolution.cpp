// SPDX-License-Identifier: Apache-2.0
#include "eccl/evolution.hpp"

#include <algorithm>
#include <memory>
#include <numeric>
#include <set>
#include <stdexcept>

#include "eccl/constraints.hpp"
#include "eccl/loss_net.hpp"
#include "eccl/seeding.hpp"

namespace eccl {

LossOracle snapshot_oracle(const LossPredictor& net) {
    auto snap = std::make_shared<const LossPredictor>(net);
    return [snap](std::span<const Board> boards) { return snap->predict_batch(boards); };
}

LossOracle constant_oracle(double value) {
    return [value](std::span<const Board> boards) { return std::vector<double>(boards.size(), value); };
}

std::optional<std::string> validate(const EvoConfig& c) {
    if (c.pop_size_feasible < 1) return "pop_size_feasible: must be positive";
    if (c.pop_size_infeasible < 1) return "pop_size_infeasible: must be positive";
    if (c.generations < 0) return "generations: must be >= 0";
    if (c.tournament_size < 1) return "tournament_size: must be positive";
    if (c.elitism < 0 || c.elitism >= std::min(c.pop_size_feasible, c.pop_size_infeasible)) {
        return "elitism: must be >= 0 and below both population sizes";
    }
    if (c.min_mutations < 1 || c.min_mutations > c.max_mutations) return "min_mutations/max_mutations: need 1 <= min <= max";
    return std::nullopt;
}

double feasible_fitness(const Board& grid, const LossOracle& oracle) {
    if (!is_feasible(grid)) throw std::invalid_argument("feasible_fitness called on an infeasible grid");
    return std::max(0.0, oracle(std::span<const Board>(&grid, 1)).at(0));
}

Board crossover_rect(const Board& p1, const Board& p2, int x0, int y0, int w, int h) {
    if (p1.width() != p2.width() || p1.height() != p2.height()) throw std::invalid_argument("crossover: parent sizes differ");
    if (x0 < 0 || y0 < 0 || w < 1 || h < 1 || x0 + w > p1.width() || y0 + h > p1.height()) {
        throw std::out_of_range("crossover: rectangle outside the board");
    }
    Board child = p1;
    for (int y = y0; y < y0 + h; ++y) {
        for (int x = x0; x < x0 + w; ++x) child.set({x, y}, p2.at({x, y}));
    }
    return child;
}

Board crossover(const Board& p1, const Board& p2, std::mt19937_64& rng) {
    const int w = std::uniform_int_distribution<int>(1, p1.width())(rng);
    const int h = std::uniform_int_distribution<int>(1, p1.height())(rng);
    const int x0 = std::uniform_int_distribution<int>(0, p1.width() - w)(rng);
    const int y0 = std::uniform_int_distribution<int>(0, p1.height() - h)(rng);
    return crossover_rect(p1, p2, x0, y0, w, h);
}

Board mutate_cells(const Board& grid, int k, std::mt19937_64& rng) {
    Board out = grid;
    if (k < 0 || k > grid.cell_count()) throw std::invalid_argument("mutate_cells: k out of range");
    constexpr int kAlphabet = static_cast<int>(std::size(kMutationTiles));
    // k distinct cells by partial Fisher-Yates
    std::vector<int> cells(static_cast<std::size_t>(grid.cell_count()));
    std::iota(cells.begin(), cells.end(), 0);
    for (int i = 0; i < k; ++i) {
        const int j = std::uniform_int_distribution<int>(i, grid.cell_count() - 1)(rng);
        std::swap(cells[static_cast<std::size_t>(i)], cells[static_cast<std::size_t>(j)]);
        const int c = cells[static_cast<std::size_t>(i)];
        const TileType old = out.at(c);
        const bool in_alphabet = std::find(std::begin(kMutationTiles), std::end(kMutationTiles), old) != std::end(kMutationTiles);
        // draw among the alphabet minus the current type
        const int choices = in_alphabet ? kAlphabet - 1 : kAlphabet;
        int pick = std::uniform_int_distribution<int>(0, choices - 1)(rng);
        for (TileType t : kMutationTiles) {
            if (t == old) continue;
            if (pick-- == 0) {
                out.set(c, t);
                break;
            }
        }
    }
    return out;
}

Board mutate(const Board& grid, const EvoConfig& cfg, std::mt19937_64& rng) {
    return mutate_cells(grid, std::uniform_int_distribution<int>(cfg.min_mutations, cfg.max_mutations)(rng), rng);
}

std::size_t tournament(std::span<const double> fitness, int size, std::mt19937_64& rng) {
    if (fitness.empty()) throw std::invalid_argument("tournament over an empty population");
    std::uniform_int_distribution<std::size_t> pick(0, fitness.size() - 1);
    std::size_t best = pick(rng);
    for (int i = 1; i < size; ++i) {
        const std::size_t c = pick(rng);
        if (fitness[c] > fitness[best]) best = c;
    }
    return best;
}

namespace {

using Population = std::vector<Chromosome>;

double selection_fitness(const Chromosome& c) { return c.is_feasible() ? c.feasible : c.constrained; }

void score(std::vector<Chromosome>& batch, const LossOracle& oracle) {
    std::vector<Board> feasible;
    std::vector<std::size_t> where;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        batch[i].constrained = constrained_fitness(batch[i].grid);
        batch[i].feasible = 0.0;
        if (batch[i].is_feasible()) {
            feasible.push_back(batch[i].grid);
            where.push_back(i);
        }
    }
    if (feasible.empty()) return;
    const auto pred = oracle(feasible);
    if (pred.size() != feasible.size()) throw std::runtime_error("loss oracle returned the wrong number of values");
    for (std::size_t j = 0; j < where.size(); ++j) batch[where[j]].feasible = std::max(0.0, pred[j]);
}

void sort_desc(Population& pop) {
    std::stable_sort(pop.begin(), pop.end(),
                     [](const Chromosome& a, const Chromosome& b) { return selection_fitness(a) > selection_fitness(b); });
}

// elites (already sorted population) plus bred children
void breed(const Population& pop, int size, const EvoConfig& cfg, std::mt19937_64& rng, Population& elites,
           Population& children) {
    if (pop.empty()) return;
    for (int i = 0; i < std::min<int>(cfg.elitism, static_cast<int>(pop.size())); ++i) elites.push_back(pop[static_cast<std::size_t>(i)]);
    std::vector<double> fit;
    fit.reserve(pop.size());
    for (const auto& c : pop) fit.push_back(selection_fitness(c));
    for (int i = cfg.elitism; i < size; ++i) {
        const Board& a = pop[tournament(fit, cfg.tournament_size, rng)].grid;
        const Board& b = pop[tournament(fit, cfg.tournament_size, rng)].grid;
        children.push_back({mutate(crossover(a, b, rng), cfg, rng)});
    }
}

void resize(Population& pop, std::size_t target, const EvoConfig& cfg, std::mt19937_64& rng,
            const std::function<Chromosome()>& fresh) {
    sort_desc(pop);
    if (pop.size() > target) {
        pop.resize(target);
        return;
    }
    if (pop.empty()) {
        while (pop.size() < target) pop.push_back(fresh());
        sort_desc(pop);
        return;
    }
    std::vector<double> fit;
    for (const auto& c : pop) fit.push_back(selection_fitness(c));
    const std::size_t n = pop.size();
    while (pop.size() < target) pop.push_back(pop[tournament(std::span<const double>(fit.data(), n), cfg.tournament_size, rng)]);
    sort_desc(pop);
}

GenerationStats stats_for(int generation, const Population& feas, const Population& infeas, int feasible_count) {
    GenerationStats s;
    s.generation = generation;
    s.feasible_count = feasible_count;
    if (!feas.empty()) {
        double sum = 0.0;
        for (const auto& c : feas) {
            s.best_feasible = std::max(s.best_feasible, c.feasible);
            sum += c.feasible;
        }
        s.mean_feasible = sum / static_cast<double>(feas.size());
    }
    for (const auto& c : infeas) s.best_constrained = std::max(s.best_constrained, c.constrained);
    return s;
}

}  // namespace

EvolveResult evolve(int request_count, const LossOracle& oracle, std::uint64_t seed, const EvoConfig& evo,
                    const GenConfig& gen) {
    if (request_count < 1) throw std::invalid_argument("evolve: request_count must be >= 1");
    if (auto err = validate(evo)) throw std::invalid_argument("evo config " + *err);
    if (auto err = validate(gen)) throw std::invalid_argument("gen config " + *err);
    std::mt19937_64 rng(seed);
    std::mt19937_64 fresh_rng(derive_seed(seed, 1));

    Population feas;
    for (auto& b : generate(evo.pop_size_feasible, derive_seed(seed, 2), gen)) feas.push_back({std::move(b)});
    Population infeas;
    for (int i = 0; i < evo.pop_size_infeasible; ++i) infeas.push_back({propose_board(gen, fresh_rng)});
    Population all;
    all.insert(all.end(), feas.begin(), feas.end());
    all.insert(all.end(), infeas.begin(), infeas.end());
    score(all, oracle);

    const auto fresh_infeasible = [&]() {
        Chromosome c{propose_board(gen, fresh_rng)};
        if (is_feasible(c.grid)) {
            for (int i = 0; i < c.grid.cell_count(); ++i) {
                if (c.grid.at(i) == TileType::Home) c.grid.set(i, TileType::Neutral);
            }
        }
        c.constrained = constrained_fitness(c.grid);
        return c;
    };
    const auto fresh_feasible = [&]() {
        Population one{{generate_board(gen, fresh_rng)}};
        score(one, oracle);
        return one.front();
    };

    const auto partition = [&](Population& pool, int generation) {
        feas.clear();
        infeas.clear();
        for (auto& c : pool) (c.is_feasible() ? feas : infeas).push_back(std::move(c));
        const int feasible_count = static_cast<int>(feas.size());
        resize(feas, static_cast<std::size_t>(evo.pop_size_feasible), evo, rng, fresh_feasible);
        resize(infeas, static_cast<std::size_t>(evo.pop_size_infeasible), evo, rng, fresh_infeasible);
        return stats_for(generation, feas, infeas, feasible_count);
    };

    // every distinct feasible grid scored during the run
    Population archive;
    std::set<Board> archived;
    const auto remember = [&](const Population& batch) {
        for (const auto& c : batch)
            if (c.is_feasible() && archived.insert(c.grid).second) archive.push_back(c);
    };
    remember(all);

    EvolveResult result;
    result.generations.push_back(partition(all, 0));
    for (int g = 1; g <= evo.generations; ++g) {
        Population elites, children;
        breed(feas, evo.pop_size_feasible, evo, rng, elites, children);
        breed(infeas, evo.pop_size_infeasible, evo, rng, elites, children);
        score(children, oracle);
        remember(children);
        Population pool = std::move(elites);
        pool.insert(pool.end(), std::make_move_iterator(children.begin()), std::make_move_iterator(children.end()));
        result.generations.push_back(partition(pool, g));
    }

    std::stable_sort(archive.begin(), archive.end(),
                     [](const Chromosome& a, const Chromosome& b) { return a.feasible > b.feasible; });
    for (const auto& c : archive) {
        if (static_cast<int>(result.boards.size()) == request_count) break;
        result.boards.push_back(c.grid);
        result.fitness.push_back(c.feasible);
    }
    while (static_cast<int>(result.boards.size()) < request_count) {
        result.fallback = true;
        Chromosome c = fresh_feasible();
        if (std::find(result.boards.begin(), result.boards.end(), c.grid) != result.boards.end()) continue;
        result.boards.push_back(c.grid);
        result.fitness.push_back(c.feasible);
    }
    result.feasible_population = std::move(feas);
    result.infeasible_population = std::move(infeas);
    return result;
}

}  // namespace eccl
