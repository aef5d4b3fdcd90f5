#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "wph/analysis.hpp"
#include "wph/diagram_io.hpp"
#include "wph/error.hpp"
#include "wph/hash.hpp"
#include "wph/vectorizer.hpp"

namespace wph {

struct RunConfig {
    ChannelParams channels;
    std::filesystem::path input;
    std::filesystem::path output;
    std::uint64_t seed = 0;
    AggregateMode embedding_aggregate = AggregateMode::mean;
    AggregateMode score_aggregate = AggregateMode::max;
    bool concat = false;        // also write the 9-channel [X | T(X)] tensor
    bool dump_pyramid = false;  // write every subband of every level
    int workers = 1;

    void validate() const {
        channels.validate();
        if (workers < 1) throw ConfigError("workers must be at least 1");
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    std::istringstream in(value);
    T out{};
    in >> out;
    if (!in || !(in >> std::ws).eof()) throw ConfigError("invalid value '" + value + "' for " + key);
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "on" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "off" || value == "no") return false;
    throw ConfigError("invalid boolean '" + value + "' for " + key);
}

}  // namespace detail

/// Keys accepted in config files and by `set_config_value`.
inline const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "family", "depth", "h1_pct", "epsilon", "max_side", "side", "mask", "h1_order", "diagram_source",
        "input", "output", "seed", "aggregate", "score_aggregate", "concat", "dump_pyramid", "workers"};
    return keys;
}

inline void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
    auto& g = cfg.channels.gating;
    if (key == "family") {
        g.family = parse_wavelet_family(value);
    } else if (key == "depth") {
        g.depth = detail::parse_number<int>(key, value);
    } else if (key == "h1_pct") {
        g.h1_pct = detail::parse_number<double>(key, value);
    } else if (key == "epsilon") {
        g.epsilon = detail::parse_number<double>(key, value);
    } else if (key == "h1_order") {
        g.h1_order = parse_h1_order(value);
    } else if (key == "max_side") {
        cfg.channels.max_side = detail::parse_number<int>(key, value);
    } else if (key == "side") {
        cfg.channels.side = detail::parse_number<int>(key, value);
    } else if (key == "mask") {
        cfg.channels.apply_mask = detail::parse_bool(key, value);
    } else if (key == "diagram_source") {
        cfg.channels.diagram_source = parse_diagram_source(value);
    } else if (key == "input") {
        cfg.input = value;
    } else if (key == "output") {
        cfg.output = value;
    } else if (key == "seed") {
        cfg.seed = detail::parse_number<std::uint64_t>(key, value);
    } else if (key == "aggregate") {
        cfg.embedding_aggregate = parse_aggregate_mode(value);
    } else if (key == "score_aggregate") {
        cfg.score_aggregate = parse_aggregate_mode(value);
    } else if (key == "concat") {
        cfg.concat = detail::parse_bool(key, value);
    } else if (key == "dump_pyramid") {
        cfg.dump_pyramid = detail::parse_bool(key, value);
    } else if (key == "workers") {
        cfg.workers = detail::parse_number<int>(key, value);
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

/// Flat `key = value` text; `#` starts a comment.
inline void apply_config_text(RunConfig& cfg, const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        set_config_value(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    }
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    RunConfig cfg;
    apply_config_text(cfg, buf.str());
    return cfg;
}

/// Everything that can change extracted outputs, one `key = value` per line in
/// a fixed order. Paths and the worker count are excluded so that a rerun
/// elsewhere produces the same snapshot.
inline std::string canonical_config(const RunConfig& cfg) {
    const auto& c = cfg.channels;
    const auto& g = c.gating;
    std::ostringstream out;
    out << "family = " << to_string(g.family) << '\n'
        << "depth = " << g.depth << '\n'
        << "h1_pct = " << format_real(g.h1_pct) << '\n'
        << "epsilon = " << format_real(g.epsilon) << '\n'
        << "max_side = " << c.max_side << '\n'
        << "side = " << c.side << '\n'
        << "mask = " << (c.apply_mask ? "true" : "false") << '\n'
        << "h1_order = " << to_string(g.h1_order) << '\n'
        << "diagram_source = " << to_string(c.diagram_source) << '\n'
        << "seed = " << cfg.seed << '\n'
        << "aggregate = " << to_string(cfg.embedding_aggregate) << '\n'
        << "score_aggregate = " << to_string(cfg.score_aggregate) << '\n'
        << "concat = " << (cfg.concat ? "true" : "false") << '\n'
        << "dump_pyramid = " << (cfg.dump_pyramid ? "true" : "false") << '\n';
    return out.str();
}

inline std::string config_hash(const RunConfig& cfg) { return sha256_hex(canonical_config(cfg)); }

}  // namespace wph
