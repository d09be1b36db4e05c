#pragma once

// Plain-text key-value configuration for power studies.
//
//   # Table 1, first row
//   n        = 100
//   k        = 20            # change locations for every n
//   k@150    = 30, 45        # change locations for one n (overrides k)
//   phi_pre  = 0.1
//   phi_post = 0.5
//   noise    = gaussian, exponential, chisq4, t4
//   reps     = 1000
//   alpha    = 0.05
//   seed     = 20240601
//   burn_in  = 500
//   sigma2   = shared        # or separate

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "elcp/errors.hpp"
#include "elcp/random.hpp"
#include "elcp/simulate.hpp"

namespace elcp {

class ConfigError : public InputError {
public:
    ConfigError(const std::string& what, std::size_t line)
        : InputError("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

namespace detail {

inline std::string trim_ws(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim_ws(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <typename T>
T parse_number(const std::string& s, std::size_t line, const std::string& key) {
    try {
        std::size_t used = 0;
        T v{};
        if constexpr (std::is_floating_point_v<T>) {
            v = static_cast<T>(std::stod(s, &used));
        } else {
            if (!s.empty() && s[0] == '-') throw std::invalid_argument("negative");
            v = static_cast<T>(std::stoull(s, &used));
        }
        if (used != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("invalid value '" + s + "' for " + key, line);
    }
}

template <typename T>
std::vector<T> parse_numbers(const std::string& v, std::size_t line, const std::string& key) {
    std::vector<T> out;
    for (const auto& item : split_list(v)) out.push_back(parse_number<T>(item, line, key));
    if (out.empty()) throw ConfigError("empty list for " + key, line);
    return out;
}

}  // namespace detail

/// Parses the key-value format above. Unknown keys and malformed values raise ConfigError.
inline PowerStudyConfig parse_power_config(std::istream& in) {
    PowerStudyConfig cfg;
    cfg.n_values.clear();
    std::optional<std::vector<std::size_t>> k_all;
    std::map<std::size_t, std::pair<std::vector<std::size_t>, std::size_t>> k_per_n;
    std::set<std::string> seen;
    std::size_t n_line = 0;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        const std::string text = detail::trim_ws(raw);
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line);
        const std::string key = detail::trim_ws(std::string_view(text).substr(0, eq));
        const std::string value = detail::trim_ws(std::string_view(text).substr(eq + 1));
        if (key.empty()) throw ConfigError("missing key", line);
        if (!seen.insert(key).second) throw ConfigError("duplicate key '" + key + "'", line);

        if (key == "n") {
            cfg.n_values = detail::parse_numbers<std::size_t>(value, line, key);
            n_line = line;
        } else if (key == "k") {
            k_all = detail::parse_numbers<std::size_t>(value, line, key);
        } else if (key.rfind("k@", 0) == 0) {
            const auto n = detail::parse_number<std::size_t>(key.substr(2), line, key);
            k_per_n[n] = {detail::parse_numbers<std::size_t>(value, line, key), line};
        } else if (key == "phi_pre") {
            cfg.phi_pre = detail::parse_numbers<double>(value, line, key);
        } else if (key == "phi_post") {
            cfg.phi_post = detail::parse_numbers<double>(value, line, key);
        } else if (key == "noise") {
            cfg.noises.clear();
            for (const auto& item : detail::split_list(value)) {
                const auto kind = parse_noise(item);
                if (!kind) throw ConfigError("unknown noise model '" + item + "'", line);
                cfg.noises.push_back(*kind);
            }
            if (cfg.noises.empty()) throw ConfigError("empty list for noise", line);
        } else if (key == "reps") {
            cfg.reps = detail::parse_number<std::size_t>(value, line, key);
            if (cfg.reps < 1) throw ConfigError("reps must be >= 1", line);
        } else if (key == "alpha") {
            cfg.alpha = detail::parse_number<double>(value, line, key);
            if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)", line);
        } else if (key == "seed") {
            cfg.seed = detail::parse_number<std::uint64_t>(value, line, key);
        } else if (key == "burn_in") {
            cfg.burn_in = detail::parse_number<std::size_t>(value, line, key);
        } else if (key == "sigma2") {
            if (value == "shared") cfg.solver.shared_sigma2 = true;
            else if (value == "separate") cfg.solver.shared_sigma2 = false;
            else throw ConfigError("sigma2 must be 'shared' or 'separate'", line);
        } else {
            throw ConfigError("unknown key '" + key + "'", line);
        }
    }
    if (cfg.n_values.empty()) throw ConfigError("missing required key 'n'", line + 1);
    if (cfg.phi_pre.size() != cfg.phi_post.size())
        throw ConfigError("phi_pre and phi_post must have the same length", line + 1);
    for (const auto& [n, entry] : k_per_n)
        if (std::find(cfg.n_values.begin(), cfg.n_values.end(), n) == cfg.n_values.end())
            throw ConfigError("k@" + std::to_string(n) + " names an n that is not listed", entry.second);
    for (std::size_t n : cfg.n_values) {
        if (const auto it = k_per_n.find(n); it != k_per_n.end()) cfg.k_values[n] = it->second.first;
        else if (k_all) cfg.k_values[n] = *k_all;
        else throw ConfigError("no change locations for n = " + std::to_string(n), n_line);
    }
    try {
        cfg.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const InputError& e) {
        throw ConfigError(e.what(), n_line);
    }
    return cfg;
}

inline PowerStudyConfig load_power_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file '" + path + "'");
    return parse_power_config(in);
}

}  // namespace elcp
