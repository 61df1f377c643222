#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sumprod/error.hpp"

namespace sumprod {

struct ExperimentConfig {
    std::optional<std::string> family;
    std::vector<std::string> extra_families;
    double eta = 0.3;
    std::vector<int> delta_levels{12};
    double sigma = 0.05;
    int guard = 6;
    double budget_cells = 1e8;
    std::uint64_t seed = 1;
    int trials = 1000;
    std::string output_path;

    /// Families named by --family (first) and any repeats, in order.
    std::vector<std::string> families() const
    {
        std::vector<std::string> out;
        if (family) out.push_back(*family);
        out.insert(out.end(), extra_families.begin(), extra_families.end());
        return out;
    }
};

namespace detail {

inline std::string_view trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(std::string_view text, const std::string& field, int line)
{
    T value{};
    const auto t = trim(text);
    const auto* end = t.data() + t.size();
    auto [ptr, ec] = std::from_chars(t.data(), end, value);
    if (t.empty() || ec != std::errc{} || ptr != end) throw ConfigError(field + ": cannot parse '" + std::string(t) + "'", line);
    return value;
}

} // namespace detail

/// Comma-separated list of integer levels, e.g. "10,12,14".
inline std::vector<int> parse_levels(std::string_view text, int line = 0)
{
    std::vector<int> out;
    while (true) {
        const auto comma = text.find(',');
        out.push_back(detail::parse_number<int>(text.substr(0, comma), "levels", line));
        if (comma == std::string_view::npos) break;
        text.remove_prefix(comma + 1);
    }
    return out;
}

inline void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value, int line = 0)
{
    using detail::parse_number;
    const std::string k(detail::trim(key));
    const auto v = detail::trim(value);
    if (k == "family") {
        if (v.empty()) throw ConfigError("family: empty value", line);
        cfg.family = std::string(v);
    } else if (k == "eta") {
        cfg.eta = parse_number<double>(v, k, line);
    } else if (k == "levels") {
        cfg.delta_levels = parse_levels(v, line);
    } else if (k == "sigma") {
        cfg.sigma = parse_number<double>(v, k, line);
    } else if (k == "guard") {
        cfg.guard = parse_number<int>(v, k, line);
    } else if (k == "budget_cells" || k == "budget-cells") {
        cfg.budget_cells = parse_number<double>(v, "budget_cells", line);
    } else if (k == "seed") {
        cfg.seed = parse_number<std::uint64_t>(v, k, line);
    } else if (k == "trials") {
        cfg.trials = parse_number<int>(v, k, line);
    } else if (k == "out" || k == "output_path") {
        cfg.output_path = std::string(v);
    } else {
        throw ConfigError("unknown key '" + k + "'", line);
    }
}

/// Range checks, each naming the offending field.
inline void validate(const ExperimentConfig& cfg)
{
    if (cfg.delta_levels.empty()) throw ConfigError("levels: at least one level is required");
    for (int j : cfg.delta_levels) {
        if (j < 4 || j > 24) throw ConfigError("levels: " + std::to_string(j) + " outside [4, 24]");
    }
    if (!(cfg.eta > 0.0 && cfg.eta < 1.0)) throw ConfigError("eta: must lie in (0, 1)");
    if (cfg.guard < 4) throw ConfigError("guard: must be at least 4");
    if (!(cfg.sigma >= 0.0 && cfg.sigma < 1.0)) throw ConfigError("sigma: must lie in [0, 1)");
    if (!(cfg.budget_cells >= 1.0)) throw ConfigError("budget_cells: must be at least 1");
    if (cfg.trials < 1) throw ConfigError("trials: must be at least 1");
}

inline const std::string& require_family(const ExperimentConfig& cfg)
{
    if (!cfg.family) throw ConfigError("family: required");
    return *cfg.family;
}

/// key=value lines; '#' starts a comment; blank lines are ignored. No range checks.
inline ExperimentConfig parse_config_entries(std::string_view text)
{
    ExperimentConfig cfg;
    int line = 0;
    while (!text.empty()) {
        ++line;
        const auto nl = text.find('\n');
        std::string_view raw = text.substr(0, nl);
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
        if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
        raw = detail::trim(raw);
        if (raw.empty()) continue;
        const auto eq = raw.find('=');
        if (eq == std::string_view::npos) throw ConfigError("expected key=value", line);
        apply_setting(cfg, raw.substr(0, eq), raw.substr(eq + 1), line);
    }
    return cfg;
}

inline ExperimentConfig parse_config(std::string_view text)
{
    ExperimentConfig cfg = parse_config_entries(text);
    validate(cfg);
    return cfg;
}

} // namespace sumprod
