#include "twrn/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

namespace twrn {

namespace {

double parse_double(const std::string& value, const std::string& where) {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0')
        throw ConfigError(where + ": '" + value + "' is not a number");
    return v;
}

long long parse_int(const std::string& value, const std::string& where) {
    char* end = nullptr;
    const long long v = std::strtoll(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0')
        throw ConfigError(where + ": '" + value + "' is not an integer");
    return v;
}

double parse_prob(const std::string& value, const std::string& where,
                  const std::string& key) {
    const double v = parse_double(value, where);
    if (!(v >= 0.0 && v <= 1.0))
        throw ConfigError(where + ": " + key + " out of [0,1]");
    return v;
}

double parse_rate(const std::string& value, const std::string& where,
                  const std::string& key) {
    const double v = parse_double(value, where);
    if (!(v >= 0.0 && v < 1.0))
        throw ConfigError(where + ": " + key + " out of [0,1)");
    return v;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

void apply_setting(ExperimentConfig& cfg, const std::string& section,
                   const std::string& key, const std::string& value,
                   const std::string& where) {
    auto is = [&](const char* s, const char* k) { return section == s && key == k; };

    if (is("params", "mode")) {
        try {
            cfg.mode = mode_from_string(value);
        } catch (const ValidationError& e) {
            throw ConfigError(where + ": " + e.what());
        }
    } else if (is("params", "g1")) {
        cfg.g1 = parse_prob(value, where, key);
    } else if (is("params", "g2")) {
        cfg.g2 = parse_prob(value, where, key);
    } else if (is("params", "k")) {
        const double v = parse_double(value, where);
        if (!(v > 0)) throw ConfigError(where + ": k must be positive");
        cfg.k = v;
    } else if (is("params", "q")) {
        cfg.q = parse_prob(value, where, key);
    } else if (is("params", "q1")) {
        cfg.q1 = parse_prob(value, where, key);
    } else if (is("params", "q2")) {
        cfg.q2 = parse_prob(value, where, key);
    } else if (is("arrivals", "lam1")) {
        cfg.lam1 = parse_rate(value, where, key);
    } else if (is("arrivals", "lam2")) {
        cfg.lam2 = parse_rate(value, where, key);
    } else if (is("sweep", "variable")) {
        static const std::set<std::string> known{"g1", "g2", "q",    "q1",
                                                 "q2", "q12", "lam", "lam1",
                                                 "lam2"};
        if (!known.count(value))
            throw ConfigError(where + ": unknown sweep variable '" + value + "'");
        if (!cfg.sweep) cfg.sweep.emplace();
        cfg.sweep->variable = value;
    } else if (is("sweep", "start") || is("sweep", "stop") || is("sweep", "step")) {
        if (!cfg.sweep) cfg.sweep.emplace();
        const double v = parse_double(value, where);
        if (key == "start") cfg.sweep->start = v;
        if (key == "stop") cfg.sweep->stop = v;
        if (key == "step") {
            if (!(v > 0)) throw ConfigError(where + ": step must be positive");
            cfg.sweep->step = v;
        }
    } else if (is("solver", "m")) {
        const long long v = parse_int(value, where);
        if (v < 2) throw ConfigError(where + ": m must be at least 2");
        cfg.solver.m = static_cast<int>(v);
    } else if (is("solver", "tol")) {
        const double v = parse_double(value, where);
        if (!(v > 0)) throw ConfigError(where + ": tol must be positive");
        cfg.solver.tol = v;
    } else if (is("solver", "max_iter")) {
        const long long v = parse_int(value, where);
        if (v < 1) throw ConfigError(where + ": max_iter must be positive");
        cfg.solver.max_iter = static_cast<int>(v);
    } else if (is("solver", "epsilon")) {
        const double v = parse_double(value, where);
        if (!(v > 0 && v < 1)) throw ConfigError(where + ": epsilon out of (0,1)");
        cfg.solver.epsilon = v;
    } else if (is("sim", "horizon")) {
        const long long v = parse_int(value, where);
        if (v < 1) throw ConfigError(where + ": horizon must be positive");
        cfg.sim.horizon = v;
    } else if (is("sim", "warmup")) {
        cfg.sim.warmup = parse_int(value, where);
    } else if (is("sim", "seed")) {
        cfg.sim.seed = static_cast<std::uint64_t>(parse_int(value, where));
    } else if (is("sim", "replications")) {
        const long long v = parse_int(value, where);
        if (v < 1) throw ConfigError(where + ": replications must be positive");
        cfg.sim.replications = static_cast<int>(v);
    } else if (is("stability", "lam1_start")) {
        cfg.stability.lam1_start = parse_rate(value, where, key);
    } else if (is("stability", "lam1_step") || is("stability", "lam2_step")) {
        const double v = parse_double(value, where);
        if (!(v > 0)) throw ConfigError(where + ": " + key + " must be positive");
        (key == "lam1_step" ? cfg.stability.lam1_step : cfg.stability.lam2_step) = v;
    } else if (is("stability", "lam1_max")) {
        cfg.stability.lam1_max = parse_rate(value, where, key);
    } else if (is("output", "path")) {
        cfg.out_path = value;
    } else if (is("run", "threads")) {
        const long long v = parse_int(value, where);
        if (v < 0) throw ConfigError(where + ": threads must be nonnegative");
        cfg.threads = static_cast<int>(v);
    } else {
        throw ConfigError(where + ": unknown key '" + section + "." + key + "'");
    }
}

void load_config_file(ExperimentConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::string line;
    std::string section = "params";
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string where = path + ":" + std::to_string(lineno);
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw ConfigError(where + ": malformed section header");
            section = trim(s.substr(1, s.size() - 2));
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError(where + ": expected 'key = value'");
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError(where + ": expected 'key = value'");
        apply_setting(cfg, section, key, value, where);
    }
}

}  // namespace twrn
