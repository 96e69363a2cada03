#include "zsl/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "zsl/error.hpp"

namespace zsl {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && (s[a] == ' ' || s[a] == '\t')) ++a;
    while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
    return s.substr(a, b - a);
}

double parse_real(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size() || !std::isfinite(v)) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: key " + key + " expects a real number, got \"" + value +
                          "\"");
    }
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        if (!value.empty() && value[0] == '-') throw std::invalid_argument(value);
        const unsigned long long v = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: key " + key + " expects an unsigned integer, got \"" +
                          value + "\"");
    }
}

bool parse_flag(const std::string& key, const std::string& value) {
    if (value == "1" || value == "true") return true;
    if (value == "0" || value == "false") return false;
    throw ConfigError("config: key " + key + " expects 0/1/true/false, got \"" + value + "\"");
}

std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& value) {
    std::vector<std::size_t> out;
    std::size_t start = 0;
    while (start <= value.size()) {
        const std::size_t comma = value.find(',', start);
        out.push_back(parse_unsigned(key, trim(value.substr(start, comma - start))));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& schema() {
    static const std::map<std::string, Setter> table = {
        {"data.seed", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.seed = parse_unsigned(k, v);
             c.data.seed = c.seed;
         }},
        {"data.m_seen", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.data.m_seen = parse_unsigned(k, v);
         }},
        {"data.v_unseen", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.data.v_unseen = parse_unsigned(k, v);
         }},
        {"data.d", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.data.d = parse_unsigned(k, v);
         }},
        {"data.n", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.data.n = parse_unsigned(k, v);
         }},
        {"data.examples_per_class", [](RunConfig& c, const std::string& k,
                                       const std::string& v) {
             c.data.examples_per_class = parse_unsigned(k, v);
         }},
        {"data.noise_sigma", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.data.noise_sigma = parse_real(k, v);
         }},
        {"data.cosine_reject", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.data.cosine_reject = parse_real(k, v);
         }},
        {"data.normalize", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.normalize_features = parse_flag(k, v);
         }},
        {"data.graphs", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.synth_graphs = parse_flag(k, v);
         }},
        {"data.graph_parts", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.graph_parts = parse_unsigned(k, v);
         }},
        {"data.graph_part_dim", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.graph_part_dim = parse_unsigned(k, v);
         }},

        {"rectify.alpha", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.rectify.alpha = parse_real(k, v);
         }},
        {"rectify.beta", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.rectify.beta = parse_real(k, v);
         }},
        {"rectify.lambda1", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.rectify.lambda1 = parse_real(k, v);
             c.rectify.gamma1 = 1.0 - c.rectify.lambda1;
         }},
        {"rectify.gamma1", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.rectify.gamma1 = parse_real(k, v);
         }},
        {"rectify.lambda2", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.rectify.lambda2 = parse_real(k, v);
             c.rectify.gamma2 = 1.0 - c.rectify.lambda2;
         }},
        {"rectify.gamma2", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.rectify.gamma2 = parse_real(k, v);
         }},
        {"rectify.k_neighbors", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.rectify.k_neighbors = parse_unsigned(k, v);
         }},
        {"rectify.max_epochs", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.rectify.max_epochs = parse_unsigned(k, v);
         }},
        {"rectify.conv_tol", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.rectify.conv_tol = parse_real(k, v);
         }},

        {"amssfe.k", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.amssfe.k = parse_unsigned(k, v);
         }},
        {"amssfe.alpha", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.amssfe.alpha = parse_real(k, v);
         }},
        {"amssfe.beta", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.amssfe.beta = parse_real(k, v);
         }},
        {"amssfe.g", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.amssfe.g = parse_unsigned(k, v);
         }},
        {"amssfe.epochs", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.amssfe.epochs = parse_unsigned(k, v);
         }},
        {"amssfe.hidden", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.amssfe.hidden = parse_unsigned(k, v);
         }},
        {"amssfe.lr", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.amssfe.lr = parse_real(k, v);
         }},
        {"amssfe.map_epochs", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.mapping.epochs = parse_unsigned(k, v);
         }},
        {"amssfe.map_lr", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.mapping.lr = parse_real(k, v);
         }},
        {"amssfe.prototype_weight", [](RunConfig& c, const std::string& k,
                                       const std::string& v) {
             c.mapping.prototype_weight = parse_real(k, v);
         }},

        {"graphzsl.layers", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.graphzsl.layers = parse_unsigned(k, v);
         }},
        {"graphzsl.hidden", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.graphzsl.hidden = parse_unsigned(k, v);
         }},
        {"graphzsl.head_hidden", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.graphzsl.head_hidden = parse_size_list(k, v);
         }},
        {"graphzsl.epochs", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.graphzsl.epochs = parse_unsigned(k, v);
         }},
        {"graphzsl.lr", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.graphzsl.lr = parse_real(k, v);
         }},
        {"graphzsl.epsilon", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.graph_epsilon = parse_real(k, v);
         }},
        {"graphzsl.target_edges", [](RunConfig& c, const std::string& k,
                                     const std::string& v) {
             c.graph_target_edges = parse_unsigned(k, v);
         }},
        {"graphzsl.classifier_epochs", [](RunConfig& c, const std::string& k,
                                          const std::string& v) {
             c.classifier_epochs = parse_unsigned(k, v);
         }},
        {"graphzsl.classifier_lr", [](RunConfig& c, const std::string& k,
                                      const std::string& v) {
             c.classifier_lr = parse_real(k, v);
         }},
    };
    return table;
}

void check_ranges(const RunConfig& cfg) {
    validate_synthetic_spec(cfg.data);
    if (cfg.rectify.conv_tol <= 0) throw ConfigError("config: rectify.conv_tol must be > 0");
    if (cfg.rectify.alpha < 0 || cfg.rectify.beta < 0)
        throw ConfigError("config: rectify weights must be nonnegative");
    if (std::fabs(cfg.rectify.lambda1 + cfg.rectify.gamma1 - 1.0) > 1e-12 ||
        std::fabs(cfg.rectify.lambda2 + cfg.rectify.gamma2 - 1.0) > 1e-12)
        throw ConfigError("config: rectify mixing weights must sum to 1");
    if (cfg.amssfe.alpha < 0 || cfg.amssfe.beta < 0)
        throw ConfigError("config: amssfe weights must be nonnegative");
    if (cfg.amssfe.epochs == 0 || cfg.mapping.epochs == 0)
        throw ConfigError("config: epoch counts must be >= 1");
    if (cfg.graphzsl.layers == 0 || cfg.graphzsl.hidden == 0)
        throw ConfigError("config: graphzsl layer spec must be nonzero");
    if (cfg.graph_parts < 2) throw ConfigError("config: data.graph_parts must be >= 2");
}

}  // namespace

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    RunConfig cfg;
    std::string line, section;
    bool seed_seen = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = t.substr(1, t.size() - 2);
            if (section != "data" && section != "rectify" && section != "amssfe" &&
                section != "graphzsl" && section != "eval")
                throw ConfigError("config: unknown section [" + section + "] at line " +
                                  std::to_string(line_no));
            continue;
        }
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: malformed line " + std::to_string(line_no) + ": \"" + t +
                              "\"");
        if (section.empty())
            throw ConfigError("config: key outside any section at line " +
                              std::to_string(line_no));
        const std::string key = section + "." + trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        const auto it = schema().find(key);
        if (it == schema().end())
            throw ConfigError("config: unknown key " + key + " at line " +
                              std::to_string(line_no));
        it->second(cfg, key, value);
        if (key == "data.seed") seed_seen = true;
    }
    if (!seed_seen) throw ConfigError("config: mandatory key data.seed is missing");
    // derived seeds keep the pipelines decoupled but reproducible
    cfg.amssfe.seed = cfg.seed + 1;
    cfg.mapping.seed = cfg.seed + 2;
    cfg.graphzsl.seed = cfg.seed + 3;
    check_ranges(cfg);
    return cfg;
}

GridSpec load_grid(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("grid: cannot open " + path.string());
    GridSpec grid;
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = t.substr(1, t.size() - 2);
            continue;
        }
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos || section.empty())
            throw ConfigError("grid: malformed line " + std::to_string(line_no));
        const std::string key = section + "." + trim(t.substr(0, eq));
        if (schema().find(key) == schema().end())
            throw ConfigError("grid: unknown key " + key + " at line " +
                              std::to_string(line_no));
        std::vector<std::string> values;
        const std::string rhs = trim(t.substr(eq + 1));
        std::size_t start = 0;
        while (start <= rhs.size()) {
            const std::size_t comma = rhs.find(',', start);
            values.push_back(trim(rhs.substr(start, comma - start)));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (values.empty()) throw ConfigError("grid: empty value list for " + key);
        grid[key] = values;
    }
    if (grid.empty()) throw ConfigError("grid: no grid points defined");
    return grid;
}

GridSpec preset_grid(const std::string& name) {
    if (name == "amssfe-paper") {
        // alpha in [1,10] step 1; beta covers [1,110] on an 11-wide lattice
        GridSpec grid;
        for (int a = 1; a <= 10; ++a) grid["amssfe.alpha"].push_back(std::to_string(a));
        grid["amssfe.beta"].push_back("1");
        for (int b = 11; b <= 110; b += 11) grid["amssfe.beta"].push_back(std::to_string(b));
        return grid;
    }
    throw ConfigError("unknown grid preset \"" + name + "\"");
}

void apply_config_override(RunConfig& cfg, const std::string& dotted_key,
                           const std::string& value) {
    const auto it = schema().find(dotted_key);
    if (it == schema().end()) throw ConfigError("config: unknown key " + dotted_key);
    it->second(cfg, dotted_key, value);
    check_ranges(cfg);
}

}  // namespace zsl
