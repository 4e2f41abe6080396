// SPDX-License-Identifier: Apache-2.0
#include "eccl/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

namespace eccl {

namespace {

struct Field {
    std::string section;
    std::string key;
    std::function<void(ExperimentConfig&, std::string_view)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

template <typename T>
T parse_number(std::string_view v) {
    T out{};
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) throw std::invalid_argument("not a number: '" + std::string(v) + "'");
    return out;
}

bool parse_bool(std::string_view v) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw std::invalid_argument("expected true or false, got '" + std::string(v) + "'");
}

std::string unquote(std::string_view v) {
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return std::string(v.substr(1, v.size() - 2));
    return std::string(v);
}

#define ECCL_INT(sec, member, name) \
    Field{sec, name, [](ExperimentConfig& c, std::string_view v) { c.member = parse_number<int>(v); }, \
          [](const ExperimentConfig& c) { return std::to_string(c.member); }}
#define ECCL_DOUBLE(sec, member, name) \
    Field{sec, name, [](ExperimentConfig& c, std::string_view v) { c.member = parse_number<double>(v); }, \
          [](const ExperimentConfig& c) { return format_number(c.member); }}
#define ECCL_BOOL(sec, member, name) \
    Field{sec, name, [](ExperimentConfig& c, std::string_view v) { c.member = parse_bool(v); }, \
          [](const ExperimentConfig& c) { return std::string(c.member ? "true" : "false"); }}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = {
        ECCL_INT("game", game.base_hp, "base_hp"),
        ECCL_INT("game", game.hp_growth_interval, "hp_growth_interval"),
        ECCL_INT("game", game.spawn_period, "spawn_period"),
        ECCL_INT("game", game.defender_damage, "defender_damage"),
        ECCL_INT("game", game.defender_range, "defender_range"),
        ECCL_INT("game", game.max_turns, "max_turns"),
        ECCL_BOOL("game", game.stochastic_spawn, "stochastic_spawn"),

        ECCL_DOUBLE("agent", agent.gamma, "gamma"),
        ECCL_INT("agent", agent.replay_capacity, "replay_capacity"),
        ECCL_DOUBLE("agent", agent.alpha, "alpha"),
        ECCL_DOUBLE("agent", agent.beta0, "beta0"),
        ECCL_DOUBLE("agent", agent.beta_final, "beta_final"),
        ECCL_INT("agent", agent.beta_anneal_games, "beta_anneal_games"),
        ECCL_INT("agent", agent.batch_size, "batch_size"),
        ECCL_INT("agent", agent.batches_per_cycle, "batches_per_cycle"),
        ECCL_INT("agent", agent.maps_per_cycle, "maps_per_cycle"),
        ECCL_DOUBLE("agent", agent.priority_epsilon, "priority_epsilon"),
        ECCL_INT("agent", agent.target_sync_cycles, "target_sync_cycles"),
        ECCL_DOUBLE("agent", agent.epsilon_start, "epsilon_start"),
        ECCL_DOUBLE("agent", agent.epsilon_end, "epsilon_end"),
        ECCL_INT("agent", agent.epsilon_anneal_games, "epsilon_anneal_games"),
        ECCL_INT("agent", agent.residual_blocks, "residual_blocks"),
        ECCL_INT("agent", agent.conv_filters, "conv_filters"),
        ECCL_INT("agent", agent.value_hidden, "value_hidden"),
        ECCL_INT("agent", agent.advantage_hidden, "advantage_hidden"),
        ECCL_DOUBLE("agent", agent.lr, "lr"),
        ECCL_DOUBLE("agent", agent.huber_kappa, "huber_kappa"),

        ECCL_INT("lossnet", lossnet.residual_blocks, "residual_blocks"),
        ECCL_INT("lossnet", lossnet.conv_filters, "conv_filters"),
        ECCL_INT("lossnet", lossnet.head_hidden, "head_hidden"),
        ECCL_DOUBLE("lossnet", lossnet.lr, "lr"),
        ECCL_INT("lossnet", lossnet.epochs, "epochs"),
        ECCL_INT("lossnet", lossnet.batch_size, "batch_size"),

        ECCL_INT("gen", gen.width, "width"),
        ECCL_INT("gen", gen.height, "height"),
        ECCL_INT("gen", gen.min_sources, "min_sources"),
        ECCL_INT("gen", gen.max_sources, "max_sources"),
        ECCL_DOUBLE("gen", gen.slow_density, "slow_density"),
        ECCL_DOUBLE("gen", gen.block_density, "block_density"),
        ECCL_INT("gen", gen.max_rejects, "max_rejects"),

        ECCL_INT("evo", evo.pop_size_feasible, "pop_size_feasible"),
        ECCL_INT("evo", evo.pop_size_infeasible, "pop_size_infeasible"),
        ECCL_INT("evo", evo.generations, "generations"),
        ECCL_INT("evo", evo.tournament_size, "tournament_size"),
        ECCL_INT("evo", evo.elitism, "elitism"),
        ECCL_INT("evo", evo.min_mutations, "min_mutations"),
        ECCL_INT("evo", evo.max_mutations, "max_mutations"),

        Field{"schedule", "kind",
              [](ExperimentConfig& c, std::string_view v) {
                  auto k = parse_schedule(unquote(v));
                  if (!k) throw std::invalid_argument("expected constructive, evolved or mixed, got '" + std::string(v) + "'");
                  c.schedule.kind = *k;
              },
              [](const ExperimentConfig& c) { return std::string(schedule_name(c.schedule.kind)); }},
        ECCL_INT("schedule", schedule.bootstrap_count, "bootstrap_count"),
        ECCL_INT("schedule", schedule.eval_every_maps, "eval_every_maps"),
        ECCL_INT("schedule", schedule.eval_set_size, "eval_set_size"),
        ECCL_INT("schedule", schedule.patience_cycles, "patience_cycles"),
        ECCL_INT("schedule", schedule.max_maps, "max_maps"),
        ECCL_BOOL("schedule", schedule.eval_baseline, "eval_baseline"),
        ECCL_BOOL("schedule", schedule.eval_at_end, "eval_at_end"),

        Field{"experiment", "master_seed",
              [](ExperimentConfig& c, std::string_view v) { c.master_seed = parse_number<std::uint64_t>(v); },
              [](const ExperimentConfig& c) { return std::to_string(c.master_seed); }},
        Field{"experiment", "output_dir", [](ExperimentConfig& c, std::string_view v) { c.output_dir = unquote(v); },
              [](const ExperimentConfig& c) { return "\"" + c.output_dir + "\""; }},
        ECCL_BOOL("experiment", record_wall_time, "record_wall_time"),
    };
    return table;
}

#undef ECCL_INT
#undef ECCL_DOUBLE
#undef ECCL_BOOL

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string_view strip_comment(std::string_view line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
    ExperimentConfig cfg;
    std::string section;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        const std::string_view line = trim(strip_comment(raw));
        if (line.empty()) continue;
        const std::string where = "line " + std::to_string(line_no) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + "unterminated section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            bool known = false;
            for (const auto& f : fields()) known = known || f.section == section;
            if (!known) throw ConfigError(where + "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(where + "expected key = value");
        if (section.empty()) throw ConfigError(where + "key outside any section");
        const std::string key(trim(line.substr(0, eq)));
        const std::string_view value = trim(line.substr(eq + 1));
        const Field* field = nullptr;
        for (const auto& f : fields()) {
            if (f.section == section && f.key == key) field = &f;
        }
        if (!field) throw ConfigError(where + "unknown key " + section + "." + key);
        try {
            field->set(cfg, value);
        } catch (const std::exception& e) {
            throw ConfigError(where + section + "." + key + ": " + e.what());
        }
    }
    if (auto err = validate(cfg)) throw ConfigError(*err);
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string format_config(const ExperimentConfig& cfg) {
    std::string out;
    std::string section;
    for (const auto& f : fields()) {
        if (f.section != section) {
            if (!section.empty()) out += '\n';
            section = f.section;
            out += "[" + section + "]\n";
        }
        out += f.key + " = " + f.get(cfg) + "\n";
    }
    return out;
}

}  // namespace eccl
