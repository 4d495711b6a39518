#pragma once

// Flat key=value training configuration files. Unknown keys are rejected
// by name; '#' lines and blank lines are ignored.

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <type_traits>

#include "arta/data.hpp"
#include "arta/training.hpp"

namespace arta {

inline std::map<std::string, std::string> parse_config_text(const std::string& text,
                                                            const std::string& origin) {
    std::map<std::string, std::string> kv;
    std::size_t start = 0;
    int lineno = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        std::string line = detail::trim(text.substr(start, end - start));
        start = end + 1;
        ++lineno;
        if (line.empty() || line[0] == '#') {
            if (start > text.size()) break;
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ": line " + std::to_string(lineno) + " is not key=value");
        kv[detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
        if (start > text.size()) break;
    }
    return kv;
}

inline std::map<std::string, std::string> load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config_text(text, path);
}

namespace detail {

inline bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "1" || v == "true") return true;
    if (v == "0" || v == "false") return false;
    throw ConfigError("config key '" + key + "' expects a boolean, got '" + v + "'");
}

template <typename T>
inline T parse_num(const std::string& v, const std::string& key) {
    try {
        if constexpr (std::is_same_v<T, int>) return std::stoi(v);
        else if constexpr (std::is_same_v<T, double>) return std::stod(v);
        else return static_cast<T>(std::stoull(v));
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' has invalid value '" + v + "'");
    }
}

}  // namespace detail

inline void apply_config(TrainConfig& cfg, const std::map<std::string, std::string>& kv) {
    for (const auto& [key, value] : kv) {
        if (key == "window") cfg.window = detail::parse_num<int>(value, key);
        else if (key == "hidden") cfg.hidden = detail::parse_num<int>(value, key);
        else if (key == "warmup_epochs") cfg.warmup_epochs = detail::parse_num<int>(value, key);
        else if (key == "joint_epochs") cfg.joint_epochs = detail::parse_num<int>(value, key);
        else if (key == "lambda_sp") cfg.lambda_sp = detail::parse_num<double>(value, key);
        else if (key == "gamma_rob") cfg.gamma_rob = detail::parse_num<double>(value, key);
        else if (key == "lr") cfg.lr = detail::parse_num<double>(value, key);
        else if (key == "batch") cfg.batch = detail::parse_num<int>(value, key);
        else if (key == "seed") cfg.seed = detail::parse_num<std::uint64_t>(value, key);
        else if (key == "aggregator") cfg.aggregator = aggregator_from_string(value);
        else if (key == "split_fraction") cfg.split_fraction = detail::parse_num<double>(value, key);
        else if (key == "stride") cfg.stride = detail::parse_num<int>(value, key);
        else if (key == "no_generator") cfg.no_generator = detail::parse_bool(value, key);
        else if (key == "no_adversarial") cfg.no_adversarial = detail::parse_bool(value, key);
        else if (key == "no_sparsity") cfg.no_sparsity = detail::parse_bool(value, key);
        else if (key == "no_baseline") cfg.no_baseline = detail::parse_bool(value, key);
        else throw ConfigError("unknown config key: " + key);
    }
    cfg.validate();
}

inline void apply_ablation(TrainConfig& cfg, const std::string& name) {
    if (name == "no_generator") cfg.no_generator = true;
    else if (name == "no_adversarial") cfg.no_adversarial = true;
    else if (name == "no_sparsity") cfg.no_sparsity = true;
    else if (name == "no_baseline") cfg.no_baseline = true;
    else throw ConfigError("unknown ablation: " + name);
}

}  // namespace arta
