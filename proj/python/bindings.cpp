// SPDX-License-Identifier: Apache-2.0
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>
#include <sstream>

#include "eccl/agent.hpp"
#include "eccl/board.hpp"
#include "eccl/codec.hpp"
#include "eccl/config.hpp"
#include "eccl/constraints.hpp"
#include "eccl/curriculum.hpp"
#include "eccl/evolution.hpp"
#include "eccl/game.hpp"
#include "eccl/generator.hpp"
#include "eccl/loss_net.hpp"
#include "eccl/seeding.hpp"

#ifdef ECCL_HAVE_CLI
#include "eccl_cli.hpp"
#endif

namespace py = pybind11;
using namespace eccl;

namespace {

py::array_t<float> to_numpy(const Tensor& t) {
    std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
    py::array_t<float> out(shape);
    std::copy(t.data().begin(), t.data().end(), out.mutable_data());
    return out;
}

Tensor from_numpy(const py::array_t<float, py::array::c_style | py::array::forcecast>& a) {
    Shape shape(a.shape(), a.shape() + a.ndim());
    return Tensor(shape, std::vector<float>(a.data(), a.data() + a.size()));
}

TileType tile_arg(const std::string& s) {
    if (s.size() != 1) throw py::value_error("tile must be a single character");
    auto t = tile_from_char(s[0]);
    if (!t) throw py::value_error("unknown tile '" + s + "'");
    return *t;
}

void check_cell(const Board& b, int x, int y) {
    if (!b.in_bounds({x, y})) throw py::index_error("cell outside the board");
}

py::dict stats_dict(const GenerationStats& s) {
    py::dict d;
    d["generation"] = s.generation;
    d["best_feasible"] = s.best_feasible;
    d["mean_feasible"] = s.mean_feasible;
    d["best_constrained"] = s.best_constrained;
    d["feasible_count"] = s.feasible_count;
    return d;
}

LossOracle python_oracle(py::function fn) {
    return [fn](std::span<const Board> boards) {
        py::gil_scoped_acquire gil;
        py::list arg;
        for (const auto& b : boards) arg.append(b);
        return fn(arg).cast<std::vector<double>>();
    };
}

struct PyRun {
    RunMetrics metrics;
    std::shared_ptr<Agent> agent;
    std::shared_ptr<LossPredictor> loss_net;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Tower-defense curriculum learning core";

    py::register_exception<InvalidBoard>(m, "InvalidBoard", PyExc_ValueError);
    py::register_exception<IllegalAction>(m, "IllegalAction", PyExc_ValueError);
    py::register_exception<GenerationError>(m, "GenerationError", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    m.def("derive_seed", &derive_seed, py::arg("master"), py::arg("stream"), py::arg("index") = 0);

    py::class_<Board>(m, "Board")
        .def(py::init<int, int>(), py::arg("width"), py::arg("height"))
        .def_property_readonly("width", &Board::width)
        .def_property_readonly("height", &Board::height)
        .def("at", [](const Board& b, int x, int y) {
            check_cell(b, x, y);
            return std::string(1, tile_char(b.at(Coord{x, y})));
        })
        .def("set", [](Board& b, int x, int y, const std::string& tile) {
            check_cell(b, x, y);
            b.set(Coord{x, y}, tile_arg(tile));
        })
        .def("count", [](const Board& b, const std::string& tile) { return b.count(tile_arg(tile)); })
        .def("rows", [](const Board& b) {
            std::vector<std::string> rows;
            for (int y = 0; y < b.height(); ++y) {
                std::string r;
                for (int x = 0; x < b.width(); ++x) r += tile_char(b.at(Coord{x, y}));
                rows.push_back(r);
            }
            return rows;
        })
        .def("distance_field", [](const Board& b) {
            auto d = distance_field(b);
            py::array_t<long long> out({b.height(), b.width()});
            for (std::size_t i = 0; i < d.size(); ++i) out.mutable_data()[i] = d[i] == kUnreachable ? -1 : d[i];
            return out;
        })
        .def("__str__", &board_to_string)
        .def("__repr__", [](const Board& b) {
            return "<Board " + std::to_string(b.width()) + "x" + std::to_string(b.height()) + ">";
        })
        .def(py::self == py::self)
        .def(py::pickle([](const Board& b) { return board_to_string(b); },
                        [](const std::string& s) { return parse_board(s); }));

    m.def("parse_board", &parse_board, py::arg("text"));
    m.def("board_to_string", &board_to_string, py::arg("board"));
    m.def("read_boards", [](const std::string& text) {
        std::istringstream in(text);
        return read_boards(in);
    }, py::arg("text"));
    m.def("validate_board", &validate_board, py::arg("board"));

    m.def("constraint_factors", [](const Board& b) {
        auto f = constraint_factors(b);
        py::dict d;
        d["separate_quads"] = f.separate_quads;
        d["home_paths"] = f.home_paths;
        d["home_center"] = f.home_center;
        d["home_blocks"] = f.home_blocks;
        return d;
    }, py::arg("board"));
    m.def("constrained_fitness", &constrained_fitness, py::arg("board"));
    m.def("is_feasible", &is_feasible, py::arg("board"));

    py::class_<GameConfig>(m, "GameConfig")
        .def(py::init<>())
        .def_readwrite("base_hp", &GameConfig::base_hp)
        .def_readwrite("hp_growth_interval", &GameConfig::hp_growth_interval)
        .def_readwrite("spawn_period", &GameConfig::spawn_period)
        .def_readwrite("defender_damage", &GameConfig::defender_damage)
        .def_readwrite("defender_range", &GameConfig::defender_range)
        .def_readwrite("max_turns", &GameConfig::max_turns)
        .def_readwrite("stochastic_spawn", &GameConfig::stochastic_spawn);

    py::class_<GenConfig>(m, "GenConfig")
        .def(py::init<>())
        .def_readwrite("width", &GenConfig::width)
        .def_readwrite("height", &GenConfig::height)
        .def_readwrite("min_sources", &GenConfig::min_sources)
        .def_readwrite("max_sources", &GenConfig::max_sources)
        .def_readwrite("slow_density", &GenConfig::slow_density)
        .def_readwrite("block_density", &GenConfig::block_density)
        .def_readwrite("max_rejects", &GenConfig::max_rejects);

    py::class_<EvoConfig>(m, "EvoConfig")
        .def(py::init<>())
        .def_readwrite("pop_size_feasible", &EvoConfig::pop_size_feasible)
        .def_readwrite("pop_size_infeasible", &EvoConfig::pop_size_infeasible)
        .def_readwrite("generations", &EvoConfig::generations)
        .def_readwrite("tournament_size", &EvoConfig::tournament_size)
        .def_readwrite("elitism", &EvoConfig::elitism)
        .def_readwrite("min_mutations", &EvoConfig::min_mutations)
        .def_readwrite("max_mutations", &EvoConfig::max_mutations);

    py::class_<ExperimentConfig>(m, "ExperimentConfig")
        .def(py::init<>())
        .def_readwrite("game", &ExperimentConfig::game)
        .def_readwrite("gen", &ExperimentConfig::gen)
        .def_readwrite("evo", &ExperimentConfig::evo)
        .def_readwrite("master_seed", &ExperimentConfig::master_seed)
        .def_readwrite("record_wall_time", &ExperimentConfig::record_wall_time)
        .def_property("schedule",
                      [](const ExperimentConfig& c) { return std::string(schedule_name(c.schedule.kind)); },
                      [](ExperimentConfig& c, const std::string& name) {
                          auto k = parse_schedule(name);
                          if (!k) throw py::value_error("unknown schedule '" + name + "'");
                          c.schedule.kind = *k;
                      })
        .def_property(
            "max_maps", [](const ExperimentConfig& c) { return c.schedule.max_maps; },
            [](ExperimentConfig& c, int v) { c.schedule.max_maps = v; })
        .def("__str__", &format_config);

    m.def("parse_config", &parse_config, py::arg("text"));
    m.def("load_config", &load_config, py::arg("path"));
    m.def("format_config", &format_config, py::arg("config"));

    m.def("generate", &generate, py::arg("count"), py::arg("seed"), py::arg("config") = GenConfig{},
          py::call_guard<py::gil_scoped_release>());

    py::class_<LossPredictor, std::shared_ptr<LossPredictor>>(m, "LossPredictor")
        .def("predict", &LossPredictor::predict_loss, py::arg("board"))
        .def("predict_batch", [](const LossPredictor& n, const std::vector<Board>& boards) {
            return n.predict_batch(boards);
        }, py::arg("boards"))
        .def("save", [](const LossPredictor& n, const std::filesystem::path& p) { save_loss_net(n, p); });
    m.def("load_loss_net", [](const std::filesystem::path& p) { return std::make_shared<LossPredictor>(load_loss_net(p)); },
          py::arg("path"));

    m.def(
        "evolve",
        [](int count, std::uint64_t seed, const EvoConfig& evo, const GenConfig& gen, py::object oracle) {
            LossOracle fn;
            bool release = true;
            if (oracle.is_none()) {
                fn = constant_oracle(1.0);
            } else if (py::isinstance<py::float_>(oracle) || py::isinstance<py::int_>(oracle)) {
                fn = constant_oracle(oracle.cast<double>());
            } else if (py::isinstance<LossPredictor>(oracle)) {
                fn = snapshot_oracle(*oracle.cast<std::shared_ptr<LossPredictor>>());
            } else if (py::isinstance<py::function>(oracle)) {
                fn = python_oracle(oracle.cast<py::function>());
                release = false;
            } else {
                throw py::type_error("oracle must be None, a number, a LossPredictor or a callable");
            }
            EvolveResult r;
            if (release) {
                py::gil_scoped_release nogil;
                r = evolve(count, fn, seed, evo, gen);
            } else {
                r = evolve(count, fn, seed, evo, gen);
            }
            py::dict d;
            d["boards"] = r.boards;
            d["fitness"] = r.fitness;
            d["fallback"] = r.fallback;
            py::list gens;
            for (const auto& s : r.generations) gens.append(stats_dict(s));
            d["generations"] = gens;
            return d;
        },
        py::arg("count"), py::arg("seed"), py::arg("evo") = EvoConfig{}, py::arg("gen") = GenConfig{},
        py::arg("oracle") = py::none());

    py::class_<GameState>(m, "GameState")
        .def_readonly("board", &GameState::board)
        .def_readonly("turn", &GameState::turn)
        .def_readonly("slain", &GameState::slain)
        .def_readonly("breached", &GameState::breached)
        .def_property_readonly("attackers", [](const GameState& s) {
            py::list out;
            for (const auto& a : s.attackers) out.append(py::make_tuple(a.pos.x, a.pos.y, a.hp, a.slow_delay));
            return out;
        })
        .def("copy", [](const GameState& s) { return s; });

    m.def("new_game", &new_game, py::arg("board"), py::arg("config") = GameConfig{}, py::arg("seed") = 0);
    m.def("legal_actions", [](const GameState& s, const GameConfig& cfg) {
        auto mask = legal_actions(s, cfg);
        py::array_t<bool> out(static_cast<py::ssize_t>(mask.size()));
        for (std::size_t i = 0; i < mask.size(); ++i) out.mutable_data()[i] = mask[i] != 0;
        return out;
    }, py::arg("state"), py::arg("config") = GameConfig{});
    m.def("action_count", &action_count, py::arg("width"), py::arg("height"));
    m.def("decode_action", [](int index, int w, int h) {
        Action a = index_to_action(index, w, h);
        static const char* names[] = {"defender", "slow", "block"};
        return py::make_tuple(names[static_cast<int>(a.entity)], a.pos.x, a.pos.y);
    }, py::arg("index"), py::arg("width"), py::arg("height"));
    m.def("step", [](const GameState& s, int index, const GameConfig& cfg) {
        StepResult r = step(s, index_to_action(index, s.board.width(), s.board.height()), cfg);
        return py::make_tuple(std::move(r.state), r.reward);
    }, py::arg("state"), py::arg("action"), py::arg("config") = GameConfig{});
    m.def("is_terminal", [](const GameState& s, const GameConfig& cfg) { return is_terminal(s, cfg); },
          py::arg("state"), py::arg("config") = GameConfig{});
    m.def("score", &score, py::arg("state"));

    m.def("encode_state", [](const GameState& s, const GameConfig& cfg) { return to_numpy(encode_state(s, cfg)); },
          py::arg("state"), py::arg("config") = GameConfig{});
    m.def("encode_initial", [](const Board& b, const GameConfig& cfg) { return to_numpy(encode_initial(b, cfg)); },
          py::arg("board"), py::arg("config") = GameConfig{});

    py::class_<Agent, std::shared_ptr<Agent>>(m, "Agent")
        .def_property_readonly("num_actions", [](const Agent& a) { return a.net().num_actions; })
        .def_property_readonly("board_width", [](const Agent& a) { return a.net().trunk.width; })
        .def_property_readonly("board_height", [](const Agent& a) { return a.net().trunk.height; })
        .def_property_readonly("cycles_completed", &Agent::cycles_completed)
        .def("q_forward", [](const Agent& a, const py::array_t<float, py::array::c_style | py::array::forcecast>& x) {
            return to_numpy(q_forward(a.online(), a.net(), from_numpy(x)));
        }, py::arg("encoded"))
        .def("q_values", [](const Agent& a, const GameState& s, const GameConfig& cfg) {
            return to_numpy(q_forward(a.online(), a.net(), encode_state(s, cfg)));
        }, py::arg("state"), py::arg("config") = GameConfig{})
        .def("greedy_action", [](const Agent& a, const GameState& s, const GameConfig& cfg) {
            Tensor q = q_forward(a.online(), a.net(), encode_state(s, cfg));
            return masked_argmax(q.data(), legal_actions(s, cfg));
        }, py::arg("state"), py::arg("config") = GameConfig{})
        .def("evaluate", [](const Agent& a, const std::vector<Board>& boards, const GameConfig& cfg, std::uint64_t seed) {
            py::gil_scoped_release nogil;
            return evaluate(a, boards, cfg, seed);
        }, py::arg("boards"), py::arg("config") = GameConfig{}, py::arg("seed") = 0)
        .def("save", [](const Agent& a, const std::filesystem::path& p) { save_checkpoint(a, p); });
    m.def("load_checkpoint", [](const std::filesystem::path& p) { return std::make_shared<Agent>(load_checkpoint(p)); },
          py::arg("path"));

    py::class_<PyRun>(m, "RunResult")
        .def_property_readonly("agent", [](const PyRun& r) { return r.agent; })
        .def_property_readonly("loss_net", [](const PyRun& r) { return r.loss_net; })
        .def_property_readonly("schedule", [](const PyRun& r) { return r.metrics.schedule; })
        .def_property_readonly("maps_played", [](const PyRun& r) { return r.metrics.maps_played; })
        .def_property_readonly("cycles", [](const PyRun& r) { return r.metrics.cycles; })
        .def_property_readonly("stop_reason", [](const PyRun& r) { return r.metrics.stop_reason; })
        .def_property_readonly("cycle_losses", [](const PyRun& r) { return r.metrics.cycle_losses; })
        .def_property_readonly("eval_scores", [](const PyRun& r) { return r.metrics.eval_scores; })
        .def_property_readonly("baseline_score", [](const PyRun& r) { return r.metrics.baseline_score; })
        .def_property_readonly("metrics_csv", [](const PyRun& r) {
            std::ostringstream out;
            write_metrics_header(out);
            write_metrics_rows(out, r.metrics);
            return out.str();
        })
        .def_property_readonly("summary_json", [](const PyRun& r) { return summary_json(r.metrics); });

    m.def("run_schedule", [](const ExperimentConfig& cfg, std::uint64_t seed) {
        RunResult r;
        {
            py::gil_scoped_release nogil;
            r = run_schedule(cfg, seed);
        }
        return PyRun{std::move(r.metrics), std::shared_ptr<Agent>(std::move(r.agent)),
                     std::shared_ptr<LossPredictor>(std::move(r.loss_net))};
    }, py::arg("config"), py::arg("seed"));

#ifdef ECCL_HAVE_CLI
    m.def("run_cli", [](const std::vector<std::string>& args) {
        std::vector<const char*> argv{"eccl"};
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        int code;
        {
            py::gil_scoped_release nogil;
            code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
    }, py::arg("args"));
#endif
}
