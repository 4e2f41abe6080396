// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eccl/agent.hpp"
#include "eccl/evolution.hpp"
#include "eccl/game.hpp"
#include "eccl/generator.hpp"
#include "eccl/loss_net.hpp"

namespace eccl {

enum class ScheduleKind { ConstructiveOnly, EvolvedOnly, Mixed50 };

/// "constructive", "evolved", "mixed"
std::string_view schedule_name(ScheduleKind kind);
std::optional<ScheduleKind> parse_schedule(std::string_view name);

struct ScheduleConfig {
    ScheduleKind kind = ScheduleKind::ConstructiveOnly;
    int bootstrap_count = 50;
    int eval_every_maps = 200;
    int eval_set_size = 100;
    int patience_cycles = 2;  // 0 disables early stopping
    int max_maps = 1500;
    bool eval_baseline = true;  // score the untrained agent before any training
    bool eval_at_end = true;    // evaluate at max_maps even off the cadence

    bool operator==(const ScheduleConfig&) const = default;
};

struct PlayResult {
    std::vector<Experience> experiences;
    int score = 0;
    int turns = 0;
};

/// One episode: epsilon-greedy on the online net until breach, the turn limit,
/// or no legal placement. One Experience per turn, tagged with map_id.
PlayResult play_map(const Agent& agent, const Board& board, const GameConfig& game, double epsilon,
                    std::mt19937_64& rng, std::uint64_t game_seed, int map_id = -1);

/// Greedy policy, mean slain over the boards. Episode i uses game seed derive_seed(eval_seed, i).
double evaluate(const Agent& agent, std::span<const Board> boards, const GameConfig& game, std::uint64_t eval_seed);
std::vector<int> evaluate_scores(const Agent& agent, std::span<const Board> boards, const GameConfig& game,
                                 std::uint64_t eval_seed);

/// Early stopping: stop once `patience` consecutive evaluations fail to
/// strictly beat the best score so far.
class StopRule {
public:
    explicit StopRule(int patience) : patience_(patience) {}
    /// Returns true when training should stop after this evaluation.
    bool observe(double score);
    double best() const { return best_; }
    int stale() const { return stale_; }

private:
    int patience_;
    double best_ = -std::numeric_limits<double>::infinity();
    int stale_ = 0;
};

enum class MapOrigin { Bootstrap, Constructive, Evolved };
std::string_view origin_name(MapOrigin origin);

struct MapBatch {
    std::vector<Board> boards;
    MapOrigin origin = MapOrigin::Bootstrap;
    bool fallback = false;
    std::vector<GenerationStats> evolution;
};

struct MapSources {
    std::function<std::vector<Board>(int n, std::uint64_t seed)> constructive;
    std::function<EvolveResult(int n, std::uint64_t seed)> evolved;
};

/// Bootstrap maps while maps_played < bootstrap_count, then per schedule kind.
/// Mixed50 alternates whole batches, constructive first.
MapBatch next_maps(const ScheduleConfig& schedule, int maps_played, std::span<const Board> bootstrap, int n,
                   std::uint64_t master_seed, const MapSources& sources);

struct ExperimentConfig {
    GameConfig game;
    AgentConfig agent;
    LossNetConfig lossnet;
    GenConfig gen;
    EvoConfig evo;
    ScheduleConfig schedule;
    std::uint64_t master_seed = 1;
    std::string output_dir = "out";
    bool record_wall_time = true;

    bool operator==(const ExperimentConfig&) const = default;
};

/// First violated constraint as "section.field: reason".
std::optional<std::string> validate(const ExperimentConfig& cfg);

/// Seed streams under a master seed.
enum class SeedStream : std::uint64_t {
    Bootstrap = 1,
    EvalSet = 2,
    EvalGames = 3,
    AgentInit = 4,
    LossNetInit = 5,
    Play = 6,
    GameSeed = 7,
    Constructive = 8,
    Evolve = 9,
    Train = 10,
};
std::uint64_t stream_seed(std::uint64_t master, SeedStream stream, std::uint64_t index = 0);

std::vector<Board> bootstrap_maps(const ExperimentConfig& cfg, std::uint64_t master_seed);
std::vector<Board> eval_maps(const ExperimentConfig& cfg, std::uint64_t master_seed);

struct MetricRow {
    int maps_played = 0;
    std::string phase;  // baseline, train, eval, error
    std::optional<double> mean_cycle_loss;
    std::optional<double> eval_score;
    double wall_ms = 0.0;
    int batches = 0;
    int batch_size = 0;
    double beta = 0.0;
    double epsilon = 0.0;
    std::optional<double> lossnet_mse;
    std::string origin;
    std::string message;
};

struct RunMetrics {
    std::string schedule;
    std::uint64_t seed = 0;
    std::vector<MetricRow> rows;
    std::vector<double> cycle_losses;
    std::vector<std::pair<int, double>> eval_scores;  // (maps_played, score), baseline excluded
    std::optional<double> baseline_score;
    int maps_played = 0;
    int cycles = 0;
    std::string stop_reason;
    double peak_score = 0.0;
    int maps_to_peak = 0;
    double play_ms = 0.0, train_ms = 0.0, lossnet_ms = 0.0, eval_ms = 0.0, generate_ms = 0.0;
};

struct RunHooks {
    std::function<void(const MapBatch&, int maps_played)> on_maps;
    std::function<void(const CycleReport&, int maps_played)> on_cycle;
    std::function<void(double score, int maps_played)> on_eval;
    /// Called at each evaluation, after scoring; used to write checkpoints.
    std::function<void(const Agent&, const LossPredictor&, int maps_played)> on_checkpoint;
};

struct RunResult {
    RunMetrics metrics;
    std::unique_ptr<Agent> agent;
    std::unique_ptr<LossPredictor> loss_net;
};

/// The training loop: fetch maps, play them into the replay bank, run a
/// training cycle, train the loss net on per-map realized losses, evaluate on
/// the cadence, stop on patience or max_maps. The schedule kind in cfg is used.
RunResult run_schedule(const ExperimentConfig& cfg, std::uint64_t master_seed, const RunHooks& hooks = {});

/// Columns: maps_played,phase,mean_cycle_loss,eval_score,schedule,seed,wall_ms,
/// then batches,batch_size,beta,epsilon,lossnet_mse,origin,message.
void write_metrics_header(std::ostream& out);
void write_metrics_rows(std::ostream& out, const RunMetrics& metrics);
std::string summary_json(const RunMetrics& metrics);

/// Shortest round-trip decimal form.
std::string format_number(double v);

}  // namespace eccl
