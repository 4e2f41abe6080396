// SPDX-License-Identifier: Apache-2.0
#include "eccl_cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "eccl/agent.hpp"
#include "eccl/board.hpp"
#include "eccl/config.hpp"
#include "eccl/constraints.hpp"
#include "eccl/curriculum.hpp"
#include "eccl/evolution.hpp"
#include "eccl/generator.hpp"
#include "eccl/loss_net.hpp"

namespace eccl::cli {

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

ExperimentConfig load_or_default(const std::string& path) {
    return path.empty() ? ExperimentConfig{} : load_config(path);
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

void print_boards(std::ostream& out, const std::vector<Board>& boards) {
    for (std::size_t i = 0; i < boards.size(); ++i) {
        if (i) out << '\n';
        out << board_to_string(boards[i]);
    }
}

// ---- run ----

struct RunOptions {
    std::string config;
    std::string schedule;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool quiet = false;
};

int cmd_run(const RunOptions& o, std::ostream& out, std::ostream& err) {
    ExperimentConfig cfg = load_or_default(o.config);
    if (!o.schedule.empty()) {
        auto kind = parse_schedule(o.schedule);
        if (!kind) throw UsageError("unknown schedule '" + o.schedule + "' (expected constructive, evolved or mixed)");
        cfg.schedule.kind = *kind;
    }
    if (o.seed) cfg.master_seed = *o.seed;
    if (!o.out.empty()) cfg.output_dir = o.out;
    if (auto e = validate(cfg)) throw ConfigError(*e);

    const fs::path dir = cfg.output_dir;
    fs::create_directories(dir / "checkpoints");
    write_file(dir / "config.cfg", format_config(cfg));

    RunHooks hooks;
    hooks.on_checkpoint = [&](const Agent& agent, const LossPredictor& net, int maps) {
        save_checkpoint(agent, dir / "checkpoints" / ("agent_" + std::to_string(maps) + ".ckpt"));
        save_loss_net(net, dir / "checkpoints" / ("lossnet_" + std::to_string(maps) + ".ckpt"));
    };
    if (!o.quiet) {
        hooks.on_eval = [&](double score, int maps) { err << "maps " << maps << ": eval score " << score << '\n'; };
    }
    const RunResult r = run_schedule(cfg, cfg.master_seed, hooks);

    std::ostringstream csv;
    write_metrics_header(csv);
    write_metrics_rows(csv, r.metrics);
    write_file(dir / "metrics.csv", csv.str());
    write_file(dir / "summary.json", summary_json(r.metrics) + "\n");
    save_checkpoint(*r.agent, dir / "agent.ckpt");
    save_loss_net(*r.loss_net, dir / "lossnet.ckpt");

    out << "schedule " << r.metrics.schedule << " seed " << cfg.master_seed << ": " << r.metrics.maps_played
        << " maps, stop " << r.metrics.stop_reason << '\n';
    if (!r.metrics.eval_scores.empty()) {
        out << "peak " << format_number(r.metrics.peak_score) << " at " << r.metrics.maps_to_peak << " maps\n";
    }
    out << "wrote " << (dir / "metrics.csv").string() << " and " << (dir / "summary.json").string() << '\n';
    if (r.metrics.stop_reason.rfind("error", 0) == 0) {
        err << "run failed: " << r.metrics.rows.back().message << '\n';
        return kExitFailure;
    }
    return kExitOk;
}

// ---- gen / evolve ----

struct GenOptions {
    std::string config;
    int count = 1;
    std::uint64_t seed = 1;
    std::string out;
};

int cmd_gen(const GenOptions& o, std::ostream& out) {
    const ExperimentConfig cfg = load_or_default(o.config);
    const auto boards = generate(o.count, o.seed, cfg.gen);
    if (o.out.empty()) {
        print_boards(out, boards);
    } else {
        std::ostringstream s;
        print_boards(s, boards);
        write_file(o.out, s.str());
    }
    return kExitOk;
}

struct EvolveOptions {
    GenOptions gen;
    std::string checkpoint;
    std::string fitness_csv = "fitness.csv";
};

int cmd_evolve(const EvolveOptions& o, std::ostream& out, std::ostream& err) {
    const ExperimentConfig cfg = load_or_default(o.gen.config);
    std::optional<LossPredictor> net;
    if (o.checkpoint.empty()) {
        err << "warning: no loss-net checkpoint given; using a zero network, so every feasible board has fitness 0\n";
        net.emplace(cfg.lossnet, cfg.gen.width, cfg.gen.height, 0);
        for (std::size_t i = 0; i < net->params().size(); ++i) net->params().entry(i).value.fill(0.0f);
    } else {
        net.emplace(load_loss_net(o.checkpoint));
        const auto& t = net->arch().trunk;
        if (t.width != cfg.gen.width || t.height != cfg.gen.height) {
            throw std::runtime_error("checkpoint board size " + std::to_string(t.width) + "x" + std::to_string(t.height) +
                                     " does not match config " + std::to_string(cfg.gen.width) + "x" +
                                     std::to_string(cfg.gen.height));
        }
    }
    const EvolveResult r = evolve(o.gen.count, snapshot_oracle(*net), o.gen.seed, cfg.evo, cfg.gen);
    if (r.fallback) err << "warning: evolution fell back to constructive boards\n";

    std::ostringstream csv;
    csv << "generation,best_feasible,mean_feasible,best_constrained,feasible_count\n";
    for (const auto& g : r.generations) {
        csv << g.generation << ',' << format_number(g.best_feasible) << ',' << format_number(g.mean_feasible) << ','
            << format_number(g.best_constrained) << ',' << g.feasible_count << '\n';
    }
    write_file(o.fitness_csv, csv.str());

    if (o.gen.out.empty()) {
        print_boards(out, r.boards);
    } else {
        std::ostringstream s;
        print_boards(s, r.boards);
        write_file(o.gen.out, s.str());
    }
    return kExitOk;
}

// ---- eval ----

struct EvalOptions {
    std::string config;
    std::string checkpoint;
    std::uint64_t seed = 1;
    int count = 0;
    std::string csv;
};

int cmd_eval(const EvalOptions& o, std::ostream& out) {
    const ExperimentConfig cfg = load_or_default(o.config);
    const Agent agent = load_checkpoint(o.checkpoint, agent_network(cfg.agent, cfg.gen.width, cfg.gen.height));
    const int n = o.count > 0 ? o.count : cfg.schedule.eval_set_size;
    const auto boards = generate(n, stream_seed(o.seed, SeedStream::EvalSet), cfg.gen);
    const double score = evaluate(agent, boards, cfg.game, stream_seed(o.seed, SeedStream::EvalGames));

    std::ostringstream row;
    row << o.checkpoint << ',' << o.seed << ',' << n << ',' << format_number(score) << '\n';
    const std::string header = "checkpoint,eval_seed,n_maps,mean_score\n";
    out << header << row.str();
    if (!o.csv.empty()) {
        const bool fresh = !fs::exists(o.csv) || fs::file_size(o.csv) == 0;
        std::ofstream f(o.csv, std::ios::app);
        if (!f) throw std::runtime_error("cannot write " + o.csv);
        if (fresh) f << header;
        f << row.str();
    }
    return kExitOk;
}

// ---- export ----

std::vector<std::string> split_csv_line(const std::string& line, const std::string& where) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                fields.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                fields.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else {
            fields.back() += c;
        }
    }
    if (quoted) throw std::runtime_error(where + ": unterminated quote");
    return fields;
}

bool parse_double(const std::string& s, double& v) {
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    return ec == std::errc() && p == s.data() + s.size();
}

struct Point {
    int maps = 0;
    std::string seed;
    std::string value;  // verbatim
};

// (schedule, metric) -> points in file order
using SeriesMap = std::map<std::pair<std::string, std::string>, std::vector<Point>>;

void read_metrics(const std::string& path, SeriesMap& series) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    int lineno = 0;
    std::vector<std::string> header;
    std::map<std::string, std::size_t> col;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string where = path + ":" + std::to_string(lineno);
        if (header.empty()) {
            if (line.empty()) break;
            header = split_csv_line(line, where);
            for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
            for (const char* need : {"maps_played", "phase", "mean_cycle_loss", "eval_score", "schedule", "seed"}) {
                if (!col.count(need)) throw std::runtime_error(where + ": missing column " + need);
            }
            continue;
        }
        if (line.empty()) continue;
        const auto f = split_csv_line(line, where);
        if (f.size() != header.size()) {
            throw std::runtime_error(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                                     std::to_string(f.size()));
        }
        int maps = 0;
        const std::string& m = f[col["maps_played"]];
        const auto [p, ec] = std::from_chars(m.data(), m.data() + m.size(), maps);
        if (ec != std::errc() || p != m.data() + m.size()) throw std::runtime_error(where + ": bad maps_played '" + m + "'");
        const std::string& phase = f[col["phase"]];
        const std::string& schedule = f[col["schedule"]];
        const auto add = [&](const char* metric, const std::string& column) {
            const std::string& v = f[col[column]];
            double d = 0.0;
            if (!parse_double(v, d)) throw std::runtime_error(where + ": bad " + column + " '" + v + "'");
            series[{schedule, metric}].push_back({maps, f[col["seed"]], v});
        };
        if (phase == "train") {
            if (!f[col["mean_cycle_loss"]].empty()) add("loss", "mean_cycle_loss");
        } else if (phase == "eval" || phase == "baseline") {
            add("score", "eval_score");
        } else if (phase != "error") {
            throw std::runtime_error(where + ": unknown phase '" + phase + "'");
        }
    }
    if (header.empty()) throw std::runtime_error(path + ": empty metrics file");
}

std::string svg_chart(const std::string& title, const SeriesMap& series, const std::string& metric) {
    const double w = 640, h = 400, pad = 50;
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    std::map<std::string, std::vector<std::pair<double, double>>> lines;
    for (const auto& [key, pts] : series) {
        if (key.second != metric) continue;
        for (const auto& p : pts) {
            double v = 0.0;
            parse_double(p.value, v);
            lines[key.first + " seed " + p.seed].emplace_back(p.maps, v);
            x0 = std::min(x0, double(p.maps)), x1 = std::max(x1, double(p.maps));
            y0 = std::min(y0, v), y1 = std::max(y1, v);
        }
    }
    if (lines.empty()) return {};
    if (x1 <= x0) x1 = x0 + 1;
    if (y1 <= y0) y1 = y0 + 1;
    const auto sx = [&](double x) { return pad + (x - x0) / (x1 - x0) * (w - 2 * pad); };
    const auto sy = [&](double y) { return h - pad - (y - y0) / (y1 - y0) * (h - 2 * pad); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title << "</text>\n"
      << "<line x1=\"" << pad << "\" y1=\"" << h - pad << "\" x2=\"" << w - pad << "\" y2=\"" << h - pad
      << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\"" << h - pad << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << pad << "\" y=\"" << h - pad + 16 << "\">" << format_number(x0) << "</text>\n"
      << "<text x=\"" << w - pad << "\" y=\"" << h - pad + 16 << "\" text-anchor=\"end\">" << format_number(x1)
      << " maps</text>\n"
      << "<text x=\"" << pad - 4 << "\" y=\"" << h - pad << "\" text-anchor=\"end\">" << format_number(y0) << "</text>\n"
      << "<text x=\"" << pad - 4 << "\" y=\"" << pad + 4 << "\" text-anchor=\"end\">" << format_number(y1) << "</text>\n";
    int k = 0;
    for (const auto& [name, pts] : lines) {
        const char* color = colors[k % 7];
        s << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
        for (const auto& [x, y] : pts) s << sx(x) << ',' << sy(y) << ' ';
        s << "\"/>\n<text x=\"" << w - pad + 4 << "\" y=\"" << pad + 14 * k << "\" font-size=\"10\" fill=\"" << color
          << "\">" << name << "</text>\n";
        ++k;
    }
    s << "</svg>\n";
    return s.str();
}

struct ExportOptions {
    std::vector<std::string> inputs;
    std::string out = "series";
    bool svg = false;
};

int cmd_export(const ExportOptions& o, std::ostream& out) {
    SeriesMap series;
    for (const auto& path : o.inputs) read_metrics(path, series);
    if (series.empty()) throw std::runtime_error("no score or loss rows in the input");
    const fs::path dir = o.out;
    fs::create_directories(dir);
    for (const auto& [key, pts] : series) {
        const auto& [schedule, metric] = key;
        std::ostringstream s;
        s << "maps_played,seed," << (metric == "loss" ? "mean_cycle_loss" : "eval_score") << '\n';
        for (const auto& p : pts) s << p.maps << ',' << p.seed << ',' << p.value << '\n';
        const fs::path file = dir / (schedule + "_" + metric + ".csv");
        write_file(file, s.str());
        out << file.string() << '\n';
    }
    if (o.svg) {
        for (const auto& [metric, title] : {std::pair{"score", "eval score vs maps"}, {"loss", "cycle loss vs maps"}}) {
            const std::string svg = svg_chart(title, series, metric);
            if (svg.empty()) continue;
            write_file(dir / (std::string(metric) + ".svg"), svg);
            out << (dir / (std::string(metric) + ".svg")).string() << '\n';
        }
    }
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Curriculum training for a tower-defense DQN agent with evolved maps"};
    app.name("eccl");
    app.require_subcommand(1);

    RunOptions run;
    auto* run_cmd = app.add_subcommand("run", "Train one schedule and write metrics, summary and checkpoints");
    run_cmd->add_option("--config", run.config, "Experiment config file");
    run_cmd->add_option("--schedule", run.schedule, "constructive, evolved or mixed");
    run_cmd->add_option("--seed", run.seed, "Master seed (overrides the config)");
    run_cmd->add_option("--out", run.out, "Output directory (overrides the config)");
    run_cmd->add_flag("--quiet", run.quiet, "No progress on stderr");

    GenOptions gen;
    auto* gen_cmd = app.add_subcommand("gen", "Constructive boards");
    gen_cmd->add_option("--config", gen.config, "Experiment config file");
    gen_cmd->add_option("-n", gen.count, "Number of boards")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--seed", gen.seed, "Seed");
    gen_cmd->add_option("--out", gen.out, "Write boards here instead of stdout");

    EvolveOptions evo;
    auto* evo_cmd = app.add_subcommand("evolve", "Evolved boards scored by a loss-net checkpoint");
    evo_cmd->add_option("--config", evo.gen.config, "Experiment config file");
    evo_cmd->add_option("-n", evo.gen.count, "Number of boards")->check(CLI::PositiveNumber);
    evo_cmd->add_option("--seed", evo.gen.seed, "Seed");
    evo_cmd->add_option("--out", evo.gen.out, "Write boards here instead of stdout");
    evo_cmd->add_option("--checkpoint", evo.checkpoint, "Loss-net checkpoint (zero network if omitted)");
    evo_cmd->add_option("--fitness-csv", evo.fitness_csv, "Per-generation fitness CSV path");

    EvalOptions eval;
    auto* eval_cmd = app.add_subcommand("eval", "Greedy evaluation of an agent checkpoint");
    eval_cmd->add_option("--config", eval.config, "Experiment config file");
    eval_cmd->add_option("--checkpoint", eval.checkpoint, "Agent checkpoint")->required();
    eval_cmd->add_option("--seed", eval.seed, "Eval seed");
    eval_cmd->add_option("-n", eval.count, "Number of eval boards (default: schedule.eval_set_size)")
        ->check(CLI::PositiveNumber);
    eval_cmd->add_option("--csv", eval.csv, "Append the result row to this CSV");

    ExportOptions exp;
    auto* exp_cmd = app.add_subcommand("export", "Plot-ready series from metrics CSV files");
    exp_cmd->add_option("metrics", exp.inputs, "metrics.csv files")->required();
    exp_cmd->add_option("--out", exp.out, "Output directory");
    exp_cmd->add_flag("--svg", exp.svg, "Also write SVG line charts");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*run_cmd) return cmd_run(run, out, err);
        if (*gen_cmd) return cmd_gen(gen, out);
        if (*evo_cmd) return cmd_evolve(evo, out, err);
        if (*eval_cmd) return cmd_eval(eval, out);
        if (*exp_cmd) return cmd_export(exp, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace eccl::cli
