#pragma once

#include <cctype>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "harness.hpp"

namespace latsum {

namespace detail {

// Minimal TOML reader covering the experiment configs: top-level and
// [section] scopes, key = value with strings, numbers, booleans and
// (nested) arrays.  Anything fancier belongs in a JSON config.
class TomlSubsetParser {
public:
    explicit TomlSubsetParser(std::istream& in) : in_(in) {}

    nlohmann::ordered_json parse() {
        nlohmann::ordered_json root = nlohmann::ordered_json::object();
        nlohmann::ordered_json* scope = &root;
        std::string line;
        int lineno = 0;
        while (std::getline(in_, line)) {
            ++lineno;
            std::string s = strip(line);
            if (s.empty() || s[0] == '#') continue;
            if (s.front() == '[') {
                if (s.back() != ']') fail(lineno, "unterminated section header");
                std::string name = strip(s.substr(1, s.size() - 2));
                if (name.empty()) fail(lineno, "empty section name");
                root[name] = nlohmann::ordered_json::object();
                scope = &root[name];
                continue;
            }
            auto eq = find_top_level_eq(s);
            if (eq == std::string::npos) fail(lineno, "expected key = value");
            std::string key = strip(s.substr(0, eq));
            std::string val = strip(s.substr(eq + 1));
            if (key.empty() || val.empty()) fail(lineno, "expected key = value");
            size_t pos = 0;
            (*scope)[key] = parse_value(val, pos, lineno);
            if (strip(val.substr(pos)).size() > 0 && strip(val.substr(pos))[0] != '#')
                fail(lineno, "trailing characters after value");
        }
        return root;
    }

private:
    std::istream& in_;

    [[noreturn]] static void fail(int line, const std::string& what) {
        throw std::invalid_argument("config parse error at line " + std::to_string(line) + ": " +
                                    what);
    }

    static std::string strip(const std::string& s) {
        size_t a = s.find_first_not_of(" \t\r\n");
        if (a == std::string::npos) return "";
        size_t b = s.find_last_not_of(" \t\r\n");
        return s.substr(a, b - a + 1);
    }

    static size_t find_top_level_eq(const std::string& s) {
        bool in_str = false;
        for (size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '"') in_str = !in_str;
            if (!in_str && s[i] == '=') return i;
        }
        return std::string::npos;
    }

    nlohmann::ordered_json parse_value(const std::string& s, size_t& pos, int lineno) {
        while (pos < s.size() && std::isspace((unsigned char)s[pos])) ++pos;
        if (pos >= s.size()) fail(lineno, "missing value");
        char c = s[pos];
        if (c == '"') {
            std::string out;
            ++pos;
            while (pos < s.size() && s[pos] != '"') out.push_back(s[pos++]);
            if (pos >= s.size()) fail(lineno, "unterminated string");
            ++pos;
            return out;
        }
        if (c == '[') {
            nlohmann::ordered_json arr = nlohmann::ordered_json::array();
            ++pos;
            while (true) {
                while (pos < s.size() && (std::isspace((unsigned char)s[pos]) || s[pos] == ','))
                    ++pos;
                if (pos >= s.size()) fail(lineno, "unterminated array");
                if (s[pos] == ']') {
                    ++pos;
                    return arr;
                }
                arr.push_back(parse_value(s, pos, lineno));
            }
        }
        // bare token: bool or number
        size_t start = pos;
        while (pos < s.size() && s[pos] != ',' && s[pos] != ']' && s[pos] != '#' &&
               !std::isspace((unsigned char)s[pos]))
            ++pos;
        std::string tok = s.substr(start, pos - start);
        if (tok == "true") return true;
        if (tok == "false") return false;
        try {
            if (tok.find('.') == std::string::npos && tok.find('e') == std::string::npos &&
                tok.find('E') == std::string::npos) {
                if (!tok.empty() && tok[0] == '-') return std::stoll(tok);
                return std::stoull(tok);
            }
            return std::stod(tok);
        } catch (...) {
            fail(lineno, "cannot parse value token '" + tok + "'");
        }
    }
};

} // namespace detail

inline nlohmann::ordered_json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".json")
        return nlohmann::ordered_json::parse(in);
    detail::TomlSubsetParser parser(in);
    return parser.parse();
}

inline ExperimentSpec experiment_spec_from_json(const nlohmann::ordered_json& j) {
    ExperimentSpec spec;
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).template get<std::decay_t<decltype(field)>>();
    };
    if (!j.contains("theorem")) throw std::invalid_argument("config needs a 'theorem' field");
    spec.theorem = j.at("theorem").get<std::string>();
    get("form", spec.form_literal);
    get("s", spec.s);
    get("P_list", spec.P_list);
    get("z", spec.z);
    get("schedule", spec.schedule);
    get("k", spec.k_param);
    get("m", spec.m_param);
    get("series_cap", spec.series_cap);
    get("budget", spec.budget);
    get("census_budget", spec.census_budget);
    get("threads", spec.threads);
    get("seed", spec.seed);
    get("x_list", spec.x_list);
    get("q", spec.conv_q);
    get("a", spec.conv_a);
    get("set", spec.set_name);
    get("cache_dir", spec.cache_dir);
    if (j.contains("box") && j.at("box").is_array()) {
        spec.box_intervals.clear();
        for (auto& iv : j.at("box")) {
            std::vector<std::string> pair;
            for (auto& v : iv) pair.push_back(v.is_string() ? v.get<std::string>() : v.dump());
            spec.box_intervals.push_back(std::move(pair));
        }
    }
    if (j.contains("quadrature")) {
        auto& q = j.at("quadrature");
        auto getq = [&](const char* key, auto& field) {
            if (q.contains(key)) field = q.at(key).template get<std::decay_t<decltype(field)>>();
        };
        getq("grid_per_axis", spec.quad.grid_per_axis);
        getq("gamma_cutoff", spec.quad.gamma_cutoff);
        getq("gamma_step", spec.quad.gamma_step);
        getq("tolerance", spec.quad.tolerance);
        getq("tensor_budget", spec.quad.tensor_budget);
        getq("mc_samples", spec.quad.mc_samples);
    }
    spec.quad.seed = spec.seed;
    if (j.contains("tolerance")) {
        auto& t = j.at("tolerance");
        if (t.contains("ratio_lo")) spec.ratio_lo = t.at("ratio_lo").get<double>();
        if (t.contains("ratio_hi")) spec.ratio_hi = t.at("ratio_hi").get<double>();
        if (t.contains("abs")) spec.abs_tolerance = t.at("abs").get<double>();
    }
    return spec;
}

inline ExperimentSpec load_experiment_spec(const std::string& path) {
    return experiment_spec_from_json(load_config_file(path));
}

} // namespace latsum
