#pragma once

#include <yaml-cpp/yaml.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "angle.hpp"
#include "errors.hpp"
#include "ifs.hpp"
#include "polygon.hpp"

namespace fraccurv {

struct IfsConfig {
    std::string name;
    std::string path;
    IFS ifs;
    std::map<std::string, std::string> parameters;
    std::optional<double> eps0;
    std::optional<double> delta;
};

namespace detail {

class ConfigReader {
public:
    ConfigReader(std::string path, std::map<std::string, std::string> params)
        : path_(std::move(path)), params_(std::move(params)) {}

    [[noreturn]] void fail(const YAML::Node& n, const std::string& field, const std::string& msg) const {
        std::ostringstream os;
        os << path_;
        if (n.IsDefined() && n.Mark().line >= 0) os << ":" << n.Mark().line + 1 << ":" << n.Mark().column + 1;
        os << ": field '" << field << "': " << msg;
        throw InputError(os.str());
    }

    /// Scalar text after `$name` substitution.
    std::string text(const YAML::Node& n, const std::string& field) const {
        if (!n.IsDefined() || n.IsNull()) fail(n, field, "missing");
        if (!n.IsScalar()) fail(n, field, "expected a scalar");
        std::string s = n.Scalar();
        if (!s.empty() && s[0] == '$') {
            auto it = params_.find(s.substr(1));
            if (it == params_.end()) fail(n, field, "unknown parameter " + s);
            s = it->second;
        }
        return s;
    }

    /// Real number, also accepting "p/q".
    double real(const YAML::Node& n, const std::string& field) const {
        const std::string s = text(n, field);
        if (auto r = parse_ratio(s)) return static_cast<double>(r->first) / static_cast<double>(r->second);
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (end == s.c_str() || *end != '\0') fail(n, field, "not a number: '" + s + "'");
        return v;
    }

    Vec2 point(const YAML::Node& n, const std::string& field) const {
        if (!n.IsSequence() || n.size() != 2) fail(n, field, "expected [x, y]");
        return {real(n[0], field + "[0]"), real(n[1], field + "[1]")};
    }

    Angle angle(const YAML::Node& m, const std::string& field) const {
        bool exact = true;
        if (m["angle_exact"]) {
            const std::string e = text(m["angle_exact"], field + ".angle_exact");
            if (e == "true") exact = true;
            else if (e == "false") exact = false;
            else fail(m["angle_exact"], field + ".angle_exact", "expected true or false");
        }
        const bool has_turns = static_cast<bool>(m["angle_turns"]);
        const bool has_rad = static_cast<bool>(m["angle_rad"]);
        if (has_turns && has_rad) fail(m, field, "give angle_turns or angle_rad, not both");
        if (!has_turns && !has_rad) return Angle::exact(0, 1);
        if (has_rad) {
            if (m["angle_exact"] && exact)
                fail(m["angle_exact"], field + ".angle_exact", "exact angles must be given as rational angle_turns");
            return Angle::inexact(real(m["angle_rad"], field + ".angle_rad"));
        }
        const std::string s = text(m["angle_turns"], field + ".angle_turns");
        if (exact) {
            if (auto r = parse_ratio(s)) return Angle::exact(r->first, r->second);
            // Integers and terminating decimals are rational too.
            if (auto r = parse_decimal(s)) return Angle::exact(r->first, r->second);
            fail(m["angle_turns"], field + ".angle_turns", "expected p/q or a decimal number of turns");
        }
        return Angle::inexact(kTwoPi * real(m["angle_turns"], field + ".angle_turns"));
    }

    static std::optional<std::pair<std::int64_t, std::int64_t>> parse_ratio(const std::string& s) {
        const auto slash = s.find('/');
        if (slash == std::string::npos) return std::nullopt;
        try {
            std::size_t a = 0, b = 0;
            const std::string ns = s.substr(0, slash), ds = s.substr(slash + 1);
            const long long num = std::stoll(ns, &a);
            const long long den = std::stoll(ds, &b);
            if (a != ns.size() || b != ds.size() || den == 0) return std::nullopt;
            return std::make_pair(static_cast<std::int64_t>(num), static_cast<std::int64_t>(den));
        } catch (...) {
            return std::nullopt;
        }
    }

    static std::optional<std::pair<std::int64_t, std::int64_t>> parse_decimal(const std::string& s) {
        std::size_t i = 0;
        bool neg = false;
        if (i < s.size() && (s[i] == '-' || s[i] == '+')) { neg = s[i] == '-'; ++i; }
        std::int64_t num = 0, den = 1;
        bool digits = false, dot = false;
        for (; i < s.size(); ++i) {
            if (s[i] == '.' && !dot) { dot = true; continue; }
            if (s[i] < '0' || s[i] > '9') return std::nullopt;
            if (num > (std::int64_t{1} << 50)) return std::nullopt;
            num = num * 10 + (s[i] - '0');
            if (dot) den *= 10;
            digits = true;
        }
        if (!digits) return std::nullopt;
        return std::make_pair(neg ? -num : num, den);
    }

private:
    std::string path_;
    std::map<std::string, std::string> params_;
};

}  // namespace detail

/// Parses an IFS config from YAML text. `overrides` replace entries of the `parameters` map.
inline IfsConfig parse_ifs_config(const std::string& yaml_text, const std::string& path = "<config>",
                                  const std::map<std::string, std::string>& overrides = {}) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        throw InputError(path + ":" + std::to_string(e.mark.line + 1) + ":" + std::to_string(e.mark.column + 1) +
                         ": " + e.msg);
    }
    std::map<std::string, std::string> params;
    if (root["parameters"]) {
        if (!root["parameters"].IsMap()) throw InputError(path + ": field 'parameters': expected a map");
        for (const auto& kv : root["parameters"]) params[kv.first.as<std::string>()] = kv.second.as<std::string>();
    }
    for (const auto& [k, v] : overrides) {
        if (!params.count(k)) throw InputError(path + ": --param " + k + " is not a parameter of this config");
        params[k] = v;
    }
    detail::ConfigReader rd(path, params);

    const YAML::Node maps = root["maps"];
    if (!maps || !maps.IsSequence()) rd.fail(maps, "maps", "expected a list of maps");
    std::vector<Similarity> sims;
    for (std::size_t i = 0; i < maps.size(); ++i) {
        const YAML::Node m = maps[i];
        const std::string f = "maps[" + std::to_string(i) + "]";
        if (!m.IsMap()) rd.fail(m, f, "expected a map");
        const double r = rd.real(m["ratio"], f + ".ratio");
        if (!(r > 0.0 && r < 1.0)) rd.fail(m["ratio"], f + ".ratio", "ratio must lie in (0,1)");
        const Angle a = rd.angle(m, f);
        Vec2 t;
        if (m["translation"] && m["fixed_point"]) rd.fail(m, f, "give translation or fixed_point, not both");
        if (m["fixed_point"]) {
            const Vec2 p = rd.point(m["fixed_point"], f + ".fixed_point");
            t = p - Similarity(r, a, {}).linear(p);
        } else {
            t = rd.point(m["translation"], f + ".translation");
        }
        sims.emplace_back(r, a, t);
    }
    const YAML::Node fs = root["feasible_set"];
    if (!fs || !fs.IsSequence()) rd.fail(fs, "feasible_set", "expected a vertex list");
    std::vector<Vec2> verts;
    for (std::size_t i = 0; i < fs.size(); ++i) verts.push_back(rd.point(fs[i], "feasible_set[" + std::to_string(i) + "]"));

    IfsConfig cfg{root["name"] ? root["name"].as<std::string>() : path, path,
                  [&] {
                      try {
                          return IFS(sims, ConvexPolygon(verts));
                      } catch (const InputError& e) {
                          rd.fail(fs, "feasible_set", e.what());
                      }
                  }(),
                  params, std::nullopt, std::nullopt};
    if (root["eps0"]) cfg.eps0 = rd.real(root["eps0"], "eps0");
    if (root["delta"]) cfg.delta = rd.real(root["delta"], "delta");
    return cfg;
}

inline IfsConfig load_ifs_config(const std::string& path, const std::map<std::string, std::string>& overrides = {}) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_ifs_config(ss.str(), path, overrides);
}

#ifdef FRACCURV_CONFIG_DIR
inline std::string bundled_config(const std::string& name) { return std::string(FRACCURV_CONFIG_DIR) + "/" + name; }
#endif

}  // namespace fraccurv
