#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "../asymptotics.hpp"
#include "../exactprob.hpp"

namespace heavytail::harness {

enum class NRule { Absolute, Power, Scale };

inline std::string to_string(NRule r) {
    switch (r) {
    case NRule::Absolute: return "absolute";
    case NRule::Power: return "power";
    case NRule::Scale: return "scale";
    }
    return "?";
}

struct ExperimentConfig {
    // model
    std::string family = "stretched";
    double parameter = 0.5;
    double tail_eps = 1e-14;
    int cumulant_order = max_cumulant_order;

    // grid: N = values | A n^theta (log n)^gamma | A N_star (or N_2star)
    std::vector<long long> n_list;
    NRule rule = NRule::Scale;
    std::vector<double> N_values;
    std::vector<double> A{1.0};
    std::vector<double> theta{0.5};
    std::vector<double> gamma{0.0};
    std::string scale = "N_star";

    std::optional<int> r;  // empty means automatic
    EstimateConfig estimate;

    bool oracle = false;
    long long m_max = 200'000;

    std::string csv = "results.csv";
    std::string manifest = "manifest.json";
};

namespace detail {

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size() || !std::isfinite(x)) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
}

inline long long parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        long long x = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        // allow 1e6-style integers
        const double d = parse_real(key, v);
        if (d != std::floor(d) || std::abs(d) > 9e15) throw ConfigError(key + ": expected an integer, got '" + v + "'");
        return static_cast<long long>(d);
    }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "off" || v == "no" || v == "0") return false;
    throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <class T>
std::string join(const std::vector<T>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ",";
        if constexpr (std::is_floating_point_v<T>)
            out += format_double(xs[i]);
        else
            out += std::to_string(xs[i]);
    }
    return out;
}

struct Field {
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

inline Regime parse_regime(const std::string& key, const std::string& v) {
    if (v == "moderate") return Regime::Moderate;
    if (v == "critical") return Regime::Critical;
    if (v == "bigjump") return Regime::BigJump;
    throw ConfigError(key + ": unknown regime '" + v + "'");
}

#define HT_REAL(key, member)                                                                  \
    {                                                                                         \
        key, {[](ExperimentConfig& c, const std::string& v) { c.member = parse_real(key, v); }, \
              [](const ExperimentConfig& c) { return format_double(c.member); } }             \
    }

inline const std::map<std::string, Field>& fields() {
    static const std::map<std::string, Field> table = {
        {"model.family",
         {[](ExperimentConfig& c, const std::string& v) { c.family = v; },
          [](const ExperimentConfig& c) { return c.family; }}},
        HT_REAL("model.parameter", parameter),
        HT_REAL("model.tail_eps", tail_eps),
        {"model.cumulant_order",
         {[](ExperimentConfig& c, const std::string& v) {
              c.cumulant_order = static_cast<int>(parse_int("model.cumulant_order", v));
          },
          [](const ExperimentConfig& c) { return std::to_string(c.cumulant_order); }}},
        {"grid.n",
         {[](ExperimentConfig& c, const std::string& v) {
              c.n_list.clear();
              for (const auto& s : split_list(v)) c.n_list.push_back(parse_int("grid.n", s));
          },
          [](const ExperimentConfig& c) { return join(c.n_list); }}},
        {"grid.rule",
         {[](ExperimentConfig& c, const std::string& v) {
              if (v == "absolute") c.rule = NRule::Absolute;
              else if (v == "power") c.rule = NRule::Power;
              else if (v == "scale") c.rule = NRule::Scale;
              else throw ConfigError("grid.rule: expected absolute, power or scale, got '" + v + "'");
          },
          [](const ExperimentConfig& c) { return to_string(c.rule); }}},
        {"grid.N",
         {[](ExperimentConfig& c, const std::string& v) {
              c.N_values.clear();
              for (const auto& s : split_list(v)) c.N_values.push_back(parse_real("grid.N", s));
          },
          [](const ExperimentConfig& c) { return join(c.N_values); }}},
        {"grid.A",
         {[](ExperimentConfig& c, const std::string& v) {
              c.A.clear();
              for (const auto& s : split_list(v)) c.A.push_back(parse_real("grid.A", s));
          },
          [](const ExperimentConfig& c) { return join(c.A); }}},
        {"grid.theta",
         {[](ExperimentConfig& c, const std::string& v) {
              c.theta.clear();
              for (const auto& s : split_list(v)) c.theta.push_back(parse_real("grid.theta", s));
          },
          [](const ExperimentConfig& c) { return join(c.theta); }}},
        {"grid.gamma",
         {[](ExperimentConfig& c, const std::string& v) {
              c.gamma.clear();
              for (const auto& s : split_list(v)) c.gamma.push_back(parse_real("grid.gamma", s));
          },
          [](const ExperimentConfig& c) { return join(c.gamma); }}},
        {"grid.scale",
         {[](ExperimentConfig& c, const std::string& v) {
              if (v != "N_star" && v != "N_2star")
                  throw ConfigError("grid.scale: expected N_star or N_2star, got '" + v + "'");
              c.scale = v;
          },
          [](const ExperimentConfig& c) { return c.scale; }}},
        {"estimate.r",
         {[](ExperimentConfig& c, const std::string& v) {
              if (v == "auto") c.r.reset();
              else c.r = static_cast<int>(parse_int("estimate.r", v));
          },
          [](const ExperimentConfig& c) { return c.r ? std::to_string(*c.r) : std::string("auto"); }}},
        HT_REAL("estimate.r_threshold", estimate.r_threshold),
        {"estimate.r_max",
         {[](ExperimentConfig& c, const std::string& v) {
              c.estimate.r_max = static_cast<int>(parse_int("estimate.r_max", v));
          },
          [](const ExperimentConfig& c) { return std::to_string(c.estimate.r_max); }}},
        {"estimate.regime",
         {[](ExperimentConfig& c, const std::string& v) {
              if (v == "auto") c.estimate.force.reset();
              else c.estimate.force = parse_regime("estimate.regime", v);
          },
          [](const ExperimentConfig& c) {
              return c.estimate.force ? heavytail::to_string(*c.estimate.force) : std::string("auto");
          }}},
        {"estimate.saddle",
         {[](ExperimentConfig& c, const std::string& v) {
              c.estimate.with_saddle = parse_bool("estimate.saddle", v);
          },
          [](const ExperimentConfig& c) { return std::string(c.estimate.with_saddle ? "true" : "false"); }}},
        HT_REAL("thresholds.eps1", estimate.thresholds.eps1),
        HT_REAL("thresholds.eps2", estimate.thresholds.eps2),
        HT_REAL("thresholds.clt_floor", estimate.thresholds.clt_floor),
        HT_REAL("truncated.min_ratio", estimate.truncated.min_ratio),
        HT_REAL("truncated.bound_K", estimate.truncated.bound_K),
        HT_REAL("truncated.delta", estimate.truncated.delta),
        HT_REAL("contour.delta_cutoff", estimate.contour.delta_cutoff),
        HT_REAL("contour.inner_rel_tol", estimate.contour.inner_rel_tol),
        HT_REAL("contour.outer_rel_tol", estimate.contour.outer_rel_tol),
        {"oracle.enabled",
         {[](ExperimentConfig& c, const std::string& v) { c.oracle = parse_bool("oracle.enabled", v); },
          [](const ExperimentConfig& c) { return std::string(c.oracle ? "true" : "false"); }}},
        {"oracle.m_max",
         {[](ExperimentConfig& c, const std::string& v) { c.m_max = parse_int("oracle.m_max", v); },
          [](const ExperimentConfig& c) { return std::to_string(c.m_max); }}},
        {"output.csv",
         {[](ExperimentConfig& c, const std::string& v) { c.csv = v; },
          [](const ExperimentConfig& c) { return c.csv; }}},
        {"output.manifest",
         {[](ExperimentConfig& c, const std::string& v) { c.manifest = v; },
          [](const ExperimentConfig& c) { return c.manifest; }}},
    };
    return table;
}

#undef HT_REAL

} // namespace detail

inline void set_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    const auto& f = detail::fields();
    auto it = f.find(key);
    if (it == f.end()) throw ConfigError("unknown key '" + key + "'");
    it->second.set(cfg, detail::trim(value));
}

// "section.key=value"
inline void apply_override(ExperimentConfig& cfg, const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + kv + "' is not key=value");
    set_key(cfg, detail::trim(kv.substr(0, eq)), kv.substr(eq + 1));
}

// Every key with its current value, sorted; used for hashing and the manifest.
inline std::vector<std::pair<std::string, std::string>> settings(const ExperimentConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [k, f] : detail::fields()) out.emplace_back(k, f.get(cfg));
    return out;
}

inline std::string canonical_text(const ExperimentConfig& cfg) {
    std::string s;
    for (const auto& [k, v] : settings(cfg)) s += k + "=" + v + "\n";
    return s;
}

// 64-bit FNV-1a
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string config_hash(const ExperimentConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical_text(cfg))));
    return buf;
}

inline void validate(const ExperimentConfig& c) {
    if (c.family != "stretched" && c.family != "loghazard" && c.family != "geometric")
        throw ConfigError("model.family: expected stretched, loghazard or geometric, got '" + c.family + "'");
    if (c.n_list.empty()) throw ConfigError("grid.n: empty n list");
    for (long long n : c.n_list)
        if (n < 1) throw ConfigError("grid.n: entries must be positive");
    if (c.rule == NRule::Absolute && c.N_values.empty()) throw ConfigError("grid.N: empty for the absolute rule");
    if (c.rule != NRule::Absolute && c.A.empty()) throw ConfigError("grid.A: empty");
    if (c.rule == NRule::Power && (c.theta.empty() || c.gamma.empty()))
        throw ConfigError("grid.theta, grid.gamma: empty");
    if (c.cumulant_order < 2 || c.cumulant_order > max_cumulant_order)
        throw ConfigError("model.cumulant_order: must lie in [2, " + std::to_string(max_cumulant_order) + "]");
    if (c.r && (*c.r < 0 || *c.r + 2 > c.cumulant_order))
        throw ConfigError("estimate.r: needs cumulants through r + 2");
    if (c.m_max < 1) throw ConfigError("oracle.m_max: must be positive");
}

// INI text with sections [model], [grid], ...; overrides applied afterwards.
inline ExperimentConfig parse_config(std::istream& in, const std::vector<std::string>& overrides = {}) {
    ExperimentConfig cfg;
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty())
            throw ConfigError("key '" + section + "' outside a section");
        for (const auto& [key, value] : body) set_key(cfg, section + "." + key, value.data());
    }
    for (const auto& kv : overrides) apply_override(cfg, kv);
    validate(cfg);
    return cfg;
}

// path "-" reads standard input
inline ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
    if (path == "-") return parse_config(std::cin, overrides);
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config '" + path + "'");
    return parse_config(f, overrides);
}

inline WeightModel build_model(const ExperimentConfig& c) {
    try {
        if (c.family == "stretched") return make_stretched(c.parameter);
        if (c.family == "loghazard") return make_loghazard(c.parameter);
        return make_geometric_half();
    } catch (const ParameterError& e) {
        throw ConfigError(std::string("model.parameter: ") + e.what());
    }
}

inline Law build_law(const ExperimentConfig& c) {
    return make_law(build_model(c), c.cumulant_order, c.tail_eps);
}

} // namespace heavytail::harness
