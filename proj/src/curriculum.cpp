// SPDX-License-Identifier: Apache-2.0
#include "eccl/curriculum.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <map>
#include <stdexcept>

#include "json.hpp"

#include "eccl/codec.hpp"
#include "eccl/seeding.hpp"

namespace eccl {

std::string_view schedule_name(ScheduleKind kind) {
    switch (kind) {
        case ScheduleKind::ConstructiveOnly: return "constructive";
        case ScheduleKind::EvolvedOnly: return "evolved";
        case ScheduleKind::Mixed50: return "mixed";
    }
    return "unknown";
}

std::optional<ScheduleKind> parse_schedule(std::string_view name) {
    if (name == "constructive") return ScheduleKind::ConstructiveOnly;
    if (name == "evolved") return ScheduleKind::EvolvedOnly;
    if (name == "mixed") return ScheduleKind::Mixed50;
    return std::nullopt;
}

std::string_view origin_name(MapOrigin origin) {
    switch (origin) {
        case MapOrigin::Bootstrap: return "bootstrap";
        case MapOrigin::Constructive: return "constructive";
        case MapOrigin::Evolved: return "evolved";
    }
    return "unknown";
}

std::uint64_t stream_seed(std::uint64_t master, SeedStream stream, std::uint64_t index) {
    return derive_seed(master, static_cast<std::uint64_t>(stream), index);
}

PlayResult play_map(const Agent& agent, const Board& board, const GameConfig& game, double epsilon,
                    std::mt19937_64& rng, std::uint64_t game_seed, int map_id) {
    PlayResult out;
    GameState state = new_game(board, game, game_seed);
    ActionMask legal = legal_actions(state, game);
    Tensor encoded = encode_state(state, game);
    const int w = board.width(), h = board.height();
    while (!is_terminal(state, game, legal)) {
        const Tensor q = q_forward(agent.online(), agent.net(), encoded);
        const int a = select_action(q.data(), legal, epsilon, rng);
        const int reward = advance(state, index_to_action(a, w, h), game);
        ActionMask next_legal = legal_actions(state, game);
        Tensor next = encode_state(state, game);
        Experience e;
        e.state = std::move(encoded);
        e.action = a;
        e.reward = reward;
        e.next_state = next;
        e.terminal = is_terminal(state, game, next_legal);
        if (!e.terminal) e.next_legal = next_legal;
        e.map_id = map_id;
        out.experiences.push_back(std::move(e));
        encoded = std::move(next);
        legal = std::move(next_legal);
    }
    out.score = score(state);
    out.turns = state.turn;
    return out;
}

std::vector<int> evaluate_scores(const Agent& agent, std::span<const Board> boards, const GameConfig& game,
                                 std::uint64_t eval_seed) {
    std::vector<int> scores;
    scores.reserve(boards.size());
    std::mt19937_64 unused(0);
    for (std::size_t i = 0; i < boards.size(); ++i) {
        GameState state = new_game(boards[i], game, derive_seed(eval_seed, i));
        ActionMask legal = legal_actions(state, game);
        while (!is_terminal(state, game, legal)) {
            const Tensor q = q_forward(agent.online(), agent.net(), encode_state(state, game));
            const int a = select_action(q.data(), legal, 0.0, unused);
            advance(state, index_to_action(a, boards[i].width(), boards[i].height()), game);
            legal = legal_actions(state, game);
        }
        scores.push_back(score(state));
    }
    return scores;
}

double evaluate(const Agent& agent, std::span<const Board> boards, const GameConfig& game, std::uint64_t eval_seed) {
    if (boards.empty()) throw std::invalid_argument("evaluate: no boards");
    const auto scores = evaluate_scores(agent, boards, game, eval_seed);
    double sum = 0.0;
    for (int s : scores) sum += s;
    return sum / static_cast<double>(scores.size());
}

bool StopRule::observe(double score) {
    if (score > best_) {
        best_ = score;
        stale_ = 0;
    } else {
        ++stale_;
    }
    return patience_ > 0 && stale_ >= patience_;
}

MapBatch next_maps(const ScheduleConfig& schedule, int maps_played, std::span<const Board> bootstrap, int n,
                   std::uint64_t master_seed, const MapSources& sources) {
    if (n < 1) throw std::invalid_argument("next_maps: n must be >= 1");
    MapBatch batch;
    if (maps_played < schedule.bootstrap_count) {
        if (maps_played + n > static_cast<int>(bootstrap.size())) {
            throw std::invalid_argument("next_maps: bootstrap list too short for maps_played " + std::to_string(maps_played));
        }
        batch.boards.assign(bootstrap.begin() + maps_played, bootstrap.begin() + maps_played + n);
        return batch;
    }
    const int index = (maps_played - schedule.bootstrap_count) / n;
    bool evolved = schedule.kind == ScheduleKind::EvolvedOnly;
    if (schedule.kind == ScheduleKind::Mixed50) evolved = index % 2 == 1;
    try {
        if (evolved) {
            EvolveResult r = sources.evolved(n, stream_seed(master_seed, SeedStream::Evolve, static_cast<std::uint64_t>(index)));
            batch.boards = std::move(r.boards);
            batch.fallback = r.fallback;
            batch.evolution = std::move(r.generations);
            batch.origin = MapOrigin::Evolved;
        } else {
            batch.boards = sources.constructive(n, stream_seed(master_seed, SeedStream::Constructive, static_cast<std::uint64_t>(index)));
            batch.origin = MapOrigin::Constructive;
        }
    } catch (const std::exception& e) {
        throw std::runtime_error("schedule " + std::string(schedule_name(schedule.kind)) + " at maps_played " +
                                 std::to_string(maps_played) + ": " + e.what());
    }
    return batch;
}

std::optional<std::string> validate(const ExperimentConfig& cfg) {
    if (auto e = validate(cfg.game)) return "game." + *e;
    if (auto e = validate(cfg.agent)) return "agent." + *e;
    if (auto e = validate(cfg.lossnet)) return "lossnet." + *e;
    if (auto e = validate(cfg.gen)) return "gen." + *e;
    if (auto e = validate(cfg.evo)) return "evo." + *e;
    const auto& s = cfg.schedule;
    const int n = cfg.agent.maps_per_cycle;
    if (s.bootstrap_count < 0 || s.bootstrap_count % n != 0) {
        return "schedule.bootstrap_count: must be a non-negative multiple of agent.maps_per_cycle";
    }
    if (s.eval_every_maps <= 0) return "schedule.eval_every_maps: must be positive";
    if (s.eval_set_size <= 0) return "schedule.eval_set_size: must be positive";
    if (s.patience_cycles < 0) return "schedule.patience_cycles: must be >= 0";
    if (s.max_maps < s.bootstrap_count) return "schedule.max_maps: must be >= bootstrap_count";
    if (cfg.output_dir.empty()) return "experiment.output_dir: must not be empty";
    return std::nullopt;
}

std::vector<Board> bootstrap_maps(const ExperimentConfig& cfg, std::uint64_t master_seed) {
    if (cfg.schedule.bootstrap_count == 0) return {};
    return generate(cfg.schedule.bootstrap_count, stream_seed(master_seed, SeedStream::Bootstrap), cfg.gen);
}

std::vector<Board> eval_maps(const ExperimentConfig& cfg, std::uint64_t master_seed) {
    return generate(cfg.schedule.eval_set_size, stream_seed(master_seed, SeedStream::EvalSet), cfg.gen);
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace

RunResult run_schedule(const ExperimentConfig& cfg, std::uint64_t master_seed, const RunHooks& hooks) {
    if (auto err = validate(cfg)) throw std::invalid_argument("config " + *err);
    const auto run_start = Clock::now();
    RunResult result;
    RunMetrics& m = result.metrics;
    m.schedule = std::string(schedule_name(cfg.schedule.kind));
    m.seed = master_seed;

    result.agent = std::make_unique<Agent>(cfg.agent, cfg.gen.width, cfg.gen.height,
                                           stream_seed(master_seed, SeedStream::AgentInit));
    result.loss_net = std::make_unique<LossPredictor>(cfg.lossnet, cfg.gen.width, cfg.gen.height,
                                                      stream_seed(master_seed, SeedStream::LossNetInit));
    Agent& agent = *result.agent;
    LossPredictor& loss_net = *result.loss_net;
    ReplayBank bank(static_cast<std::size_t>(cfg.agent.replay_capacity), cfg.agent.alpha, cfg.agent.priority_epsilon);
    std::mt19937_64 play_rng(stream_seed(master_seed, SeedStream::Play));
    std::mt19937_64 train_rng(stream_seed(master_seed, SeedStream::Train));
    const std::uint64_t eval_seed = stream_seed(master_seed, SeedStream::EvalGames);

    auto t0 = Clock::now();
    std::vector<Board> bootstrap, eval_set;

    MapSources sources;
    sources.constructive = [&](int n, std::uint64_t seed) { return generate(n, seed, cfg.gen); };
    sources.evolved = [&](int n, std::uint64_t seed) {
        return evolve(n, snapshot_oracle(loss_net), seed, cfg.evo, cfg.gen);
    };

    const auto wall = [&]() { return cfg.record_wall_time ? ms_since(run_start) : 0.0; };
    StopRule stop(cfg.schedule.patience_cycles);
    int last_eval_at = -1;

    const auto run_eval = [&](bool baseline) {
        const auto te = Clock::now();
        const double s = evaluate(agent, eval_set, cfg.game, eval_seed);
        m.eval_ms += ms_since(te);
        MetricRow row;
        row.maps_played = m.maps_played;
        row.phase = baseline ? "baseline" : "eval";
        row.eval_score = s;
        row.wall_ms = wall();
        m.rows.push_back(row);
        if (baseline) {
            m.baseline_score = s;
        } else {
            m.eval_scores.emplace_back(m.maps_played, s);
            if (m.eval_scores.size() == 1 || s > m.peak_score) {
                m.peak_score = s;
                m.maps_to_peak = m.maps_played;
            }
            last_eval_at = m.maps_played;
        }
        if (hooks.on_eval) hooks.on_eval(s, m.maps_played);
        if (hooks.on_checkpoint) hooks.on_checkpoint(agent, loss_net, m.maps_played);
        return baseline ? false : stop.observe(s);
    };

    std::vector<Board> played;
    try {
        bootstrap = bootstrap_maps(cfg, master_seed);
        eval_set = eval_maps(cfg, master_seed);
        m.generate_ms += ms_since(t0);
        if (cfg.schedule.eval_baseline) run_eval(true);
        const int n = cfg.agent.maps_per_cycle;
        while (true) {
            if (m.maps_played + n > cfg.schedule.max_maps) {
                m.stop_reason = "max_maps";
                break;
            }
            t0 = Clock::now();
            MapBatch batch = next_maps(cfg.schedule, m.maps_played, bootstrap, n, master_seed, sources);
            m.generate_ms += ms_since(t0);
            if (hooks.on_maps) hooks.on_maps(batch, m.maps_played);

            t0 = Clock::now();
            const double epsilon = epsilon_schedule(m.maps_played, cfg.agent);
            for (const Board& board : batch.boards) {
                const int map_id = static_cast<int>(played.size());
                PlayResult r = play_map(agent, board, cfg.game, epsilon, play_rng,
                                        stream_seed(master_seed, SeedStream::GameSeed, static_cast<std::uint64_t>(map_id)),
                                        map_id);
                for (auto& e : r.experiences) bank.insert(std::move(e));
                played.push_back(board);
                ++m.maps_played;
            }
            m.play_ms += ms_since(t0);

            t0 = Clock::now();
            const double beta = beta_schedule(m.maps_played, cfg.agent);
            const CycleReport report = train_cycle(agent, bank, beta, train_rng);
            m.train_ms += ms_since(t0);

            MetricRow row;
            row.maps_played = m.maps_played;
            row.phase = "train";
            row.batches = report.batches;
            row.batch_size = report.batch_size;
            row.beta = beta;
            row.epsilon = epsilon;
            row.origin = std::string(origin_name(batch.origin));
            if (batch.fallback) row.message = "evolution fell back to constructive maps";
            if (report.underfull) {
                row.message = "replay bank underfull; cycle skipped";
            } else {
                ++m.cycles;
                row.mean_cycle_loss = report.mean_loss;
                m.cycle_losses.push_back(report.mean_loss);
                t0 = Clock::now();
                std::vector<MapLossRecord> records;
                for (const MapLoss& ml : group_map_losses(report.per_experience)) {
                    records.push_back({played.at(static_cast<std::size_t>(ml.map_id)), ml.mean_loss});
                }
                if (!records.empty()) row.lossnet_mse = loss_net.train(records, train_rng).mse;
                m.lossnet_ms += ms_since(t0);
            }
            if (hooks.on_cycle) hooks.on_cycle(report, m.maps_played);
            row.wall_ms = wall();
            m.rows.push_back(std::move(row));

            if (m.maps_played % cfg.schedule.eval_every_maps == 0 && run_eval(false)) {
                m.stop_reason = "patience";
                break;
            }
        }
        if (cfg.schedule.eval_at_end && last_eval_at != m.maps_played) run_eval(false);
    } catch (const std::exception& e) {
        MetricRow row;
        row.maps_played = m.maps_played;
        row.phase = "error";
        row.message = e.what();
        row.wall_ms = wall();
        m.rows.push_back(std::move(row));
        m.stop_reason = std::string("error: ") + e.what();
    }
    return result;
}

std::string format_number(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw std::runtime_error("number formatting failed");
    return std::string(buf, end);
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

std::string opt(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

}  // namespace

void write_metrics_header(std::ostream& out) {
    out << "maps_played,phase,mean_cycle_loss,eval_score,schedule,seed,wall_ms,"
           "batches,batch_size,beta,epsilon,lossnet_mse,origin,message\n";
}

void write_metrics_rows(std::ostream& out, const RunMetrics& m) {
    for (const auto& r : m.rows) {
        out << r.maps_played << ',' << r.phase << ',' << opt(r.mean_cycle_loss) << ',' << opt(r.eval_score) << ','
            << m.schedule << ',' << m.seed << ',' << format_number(r.wall_ms) << ',' << r.batches << ','
            << r.batch_size << ',' << format_number(r.beta) << ',' << format_number(r.epsilon) << ','
            << opt(r.lossnet_mse) << ',' << r.origin << ',' << csv_field(r.message) << '\n';
    }
}

std::string summary_json(const RunMetrics& m) {
    nlohmann::ordered_json j;
    j["schedule"] = m.schedule;
    j["seed"] = m.seed;
    j["maps_played"] = m.maps_played;
    j["cycles"] = m.cycles;
    j["evaluations"] = m.eval_scores.size();
    j["baseline_score"] = m.baseline_score ? nlohmann::ordered_json(*m.baseline_score) : nlohmann::ordered_json();
    j["peak_score"] = m.eval_scores.empty() ? nlohmann::ordered_json() : nlohmann::ordered_json(m.peak_score);
    j["maps_to_peak"] = m.eval_scores.empty() ? nlohmann::ordered_json() : nlohmann::ordered_json(m.maps_to_peak);
    j["final_score"] = m.eval_scores.empty() ? nlohmann::ordered_json() : nlohmann::ordered_json(m.eval_scores.back().second);
    auto scores = nlohmann::ordered_json::array();
    for (const auto& [maps, s] : m.eval_scores) scores.push_back({{"maps_played", maps}, {"score", s}});
    j["eval_scores"] = scores;
    j["stop_reason"] = m.stop_reason;
    return j.dump(2);
}

}  // namespace eccl
