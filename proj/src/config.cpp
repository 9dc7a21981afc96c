#include "esfem/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace esfem {

namespace {

const std::vector<std::string> k_surfaces{"disk", "ex32", "tent", "heleshaw-disk", "annulus", "eccentric-annulus"};
const std::vector<std::string> k_velocities{"zero", "ex21", "ex31", "ex5", "star"};

std::string join(const std::vector<std::string>& items)
{
    std::string out;
    for (const auto& s : items) {
        if (!out.empty()) out += ", ";
        out += s;
    }
    return out;
}

std::string bad_value(std::string_view key, std::string_view value)
{
    return "invalid value '" + std::string(value) + "' for key '" + std::string(key) + "'";
}

double parse_double(std::string_view key, std::string_view value)
{
    double x = 0.0;
    const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), x);
    if (ec != std::errc() || end != value.data() + value.size() || !std::isfinite(x)) throw ConfigError(bad_value(key, value));
    return x;
}

int parse_int(std::string_view key, std::string_view value)
{
    int x = 0;
    const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), x);
    if (ec != std::errc() || end != value.data() + value.size()) throw ConfigError(bad_value(key, value));
    return x;
}

bool parse_bool(std::string_view key, std::string_view value)
{
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    throw ConfigError(bad_value(key, value));
}

std::string parse_choice(std::string_view key, std::string_view value, const std::vector<std::string>& allowed)
{
    if (std::find(allowed.begin(), allowed.end(), value) == allowed.end())
        throw ConfigError(bad_value(key, value) + " (expected one of: " + join(allowed) + ")");
    return std::string(value);
}

using Setter = std::function<void(RunConfig&, std::string_view)>;

struct Key {
    std::string name;
    Setter set;
    std::function<std::string(const RunConfig&)> get;
};

std::string fmt(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string fmt(bool b) { return b ? "true" : "false"; }

const std::vector<Key>& key_table()
{
    static const std::vector<Key> keys = [] {
        std::vector<Key> k;
        auto dbl = [&k](const char* name, double RunConfig::*m) {
            k.push_back({name,
                         [=](RunConfig& c, std::string_view v) { c.*m = parse_double(name, v); },
                         [=](const RunConfig& c) { return fmt(c.*m); }});
        };
        auto integer = [&k](const char* name, int RunConfig::*m) {
            k.push_back({name,
                         [=](RunConfig& c, std::string_view v) { c.*m = parse_int(name, v); },
                         [=](const RunConfig& c) { return std::to_string(c.*m); }});
        };
        auto flag = [&k](const char* name, bool RunConfig::*m) {
            k.push_back({name,
                         [=](RunConfig& c, std::string_view v) { c.*m = parse_bool(name, v); },
                         [=](const RunConfig& c) { return fmt(c.*m); }});
        };
        auto choice = [&k](const char* name, std::string RunConfig::*m, const std::vector<std::string>* allowed) {
            k.push_back({name,
                         [=](RunConfig& c, std::string_view v) { c.*m = parse_choice(name, v, *allowed); },
                         [=](const RunConfig& c) { return c.*m; }});
        };
        integer("level", &RunConfig::level);
        dbl("c_tau", &RunConfig::c_tau);
        dbl("alpha", &RunConfig::alpha);
        dbl("t_adapt", &RunConfig::t_adapt);
        dbl("epsilon", &RunConfig::epsilon);
        dbl("sigma", &RunConfig::sigma);
        dbl("D", &RunConfig::diffusivity);
        dbl("t_start", &RunConfig::t_start);
        dbl("T", &RunConfig::t_end);
        flag("deturck", &RunConfig::deturck);
        flag("adapt", &RunConfig::adapt);
        flag("consistency", &RunConfig::geometric_consistency);
        k.push_back({"output",
                     [](RunConfig& c, std::string_view v) {
                         if (v.empty()) throw ConfigError(bad_value("output", v));
                         c.output_dir = std::string(v);
                     },
                     [](const RunConfig& c) { return c.output_dir; }});
        integer("snapshots", &RunConfig::snapshots);
        flag("write_meshes", &RunConfig::write_meshes);
        dbl("sigma_ceiling", &RunConfig::sigma_ceiling);
        dbl("rel_tol", &RunConfig::rel_tol);
        choice("surface", &RunConfig::surface, &k_surfaces);
        choice("velocity", &RunConfig::velocity, &k_velocities);
        dbl("star_amplitude", &RunConfig::star_amplitude);
        integer("star_k", &RunConfig::star_k);
        dbl("tent_height", &RunConfig::tent_height);
        flag("exact_flux", &RunConfig::exact_flux);
        return k;
    }();
    return keys;
}

bool is_annulus(const std::string& s) { return s == "annulus" || s == "eccentric-annulus"; }

}  // namespace

void RunConfig::validate() const
{
    auto fail = [](const char* key, const char* what) { throw ConfigError(std::string(key) + ": " + what); };
    canonical_example(example);
    if (level < 0 || level > 9) fail("level", "must lie in [0, 9]");
    if (!(c_tau > 0.0)) fail("c_tau", "must be positive");
    if (!(alpha > 0.0)) fail("alpha", "must be positive");
    if (!(t_adapt > 0.0)) fail("t_adapt", "must be positive");
    if (!(epsilon >= 0.0)) fail("epsilon", "must be non-negative");
    if (!(sigma > 0.0)) fail("sigma", "must be positive");
    if (!(diffusivity > 0.0)) fail("D", "must be positive");
    if (!(t_start <= 0.0)) fail("t_start", "must not be positive");
    if (t_start < 0.0 && example != "ex1") fail("t_start", "a deformation phase exists only for ex1");
    if (!(t_end > 0.0)) fail("T", "must be positive");
    if (snapshots < 1) fail("snapshots", "must be at least 1");
    if (!(sigma_ceiling > 0.0)) fail("sigma_ceiling", "must be positive");
    if (!(rel_tol > 0.0 && rel_tol < 1.0)) fail("rel_tol", "must lie in (0, 1)");
    if (star_k < 1) fail("star_k", "must be at least 1");
    if (!(tent_height > 0.0)) fail("tent_height", "must be positive");

    const bool two_loops = example == "ex22" || example == "ex5-ale";
    if (two_loops && !is_annulus(surface)) fail("surface", "this example needs an annulus");
    if (!two_loops && is_annulus(surface) && example != "custom") fail("surface", "this example needs a disk-like surface");
    if (example == "ex4-heleshaw" && surface != "disk" && surface != "heleshaw-disk")
        fail("surface", "Hele-Shaw flow needs a planar disk");
    if (velocity != "zero" && example != "custom") fail("velocity", "only the custom example takes a velocity");
}

const std::vector<std::string>& example_ids()
{
    static const std::vector<std::string> ids{"ex1", "ex21", "ex22", "ex31", "ex32-mcf", "ex4-heleshaw", "ex5-ale", "custom"};
    return ids;
}

std::string canonical_example(std::string_view id)
{
    if (id == "ex4") return "ex4-heleshaw";
    if (id == "ex5") return "ex5-ale";
    if (id == "ex32") return "ex32-mcf";
    for (const auto& s : example_ids())
        if (s == id) return s;
    if (id.empty()) throw ConfigError("missing example (valid ids: " + join(example_ids()) + ")");
    throw ConfigError("unknown example '" + std::string(id) + "' (valid ids: " + join(example_ids()) + ")");
}

RunConfig example_defaults(std::string_view id)
{
    RunConfig c;
    c.example = canonical_example(id);
    const std::string& e = c.example;
    if (e == "ex1") {
        c.c_tau = 0.005, c.alpha = 1.0, c.t_adapt = 1e-3, c.t_start = -0.02, c.t_end = 0.2;
    } else if (e == "ex21") {
        c.c_tau = 0.02, c.alpha = 1.0, c.t_adapt = 0.01, c.t_end = 1.0;
    } else if (e == "ex22") {
        c.c_tau = 0.001, c.alpha = 0.1, c.t_adapt = 1e-3, c.t_end = 1.0, c.surface = "eccentric-annulus";
    } else if (e == "ex31") {
        c.c_tau = 0.02, c.alpha = 1.0, c.t_adapt = 1e-3, c.t_end = 0.8;
    } else if (e == "ex32-mcf") {
        c.c_tau = 0.01, c.alpha = 1.0, c.t_adapt = 1e-3, c.t_end = 1.0, c.surface = "ex32";
    } else if (e == "ex4-heleshaw") {
        c.c_tau = 0.005, c.alpha = 1.0, c.t_adapt = 0.01, c.sigma = 1e-3, c.t_end = 5.34, c.surface = "heleshaw-disk";
    } else if (e == "ex5-ale") {
        c.c_tau = 0.001, c.alpha = 0.1, c.t_adapt = 1e-3, c.diffusivity = 2.0, c.t_end = 1.0, c.surface = "annulus";
    }
    return c;
}

const std::vector<std::string>& config_keys()
{
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n{"example"};
        for (const auto& k : key_table()) n.push_back(k.name);
        return n;
    }();
    return names;
}

void apply_setting(RunConfig& config, std::string_view key, std::string_view value)
{
    for (const auto& k : key_table()) {
        if (k.name == key) {
            k.set(config, value);
            return;
        }
    }
    if (key == "example") throw ConfigError("the example key must be resolved before other settings");
    throw ConfigError("unknown key '" + std::string(key) + "'");
}

RunConfig parse_config(std::string_view text, const std::vector<Setting>& overrides)
{
    std::vector<Setting> settings;
    std::istringstream lines{std::string(text)};
    std::string line;
    while (std::getline(lines, line)) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream tokens(line);
        std::string tok;
        while (tokens >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos || eq == 0) throw ConfigError("expected key=value, got '" + tok + "'");
            Setting s{tok.substr(0, eq), tok.substr(eq + 1)};
            for (const auto& prev : settings)
                if (prev.first == s.first) throw ConfigError("duplicate key '" + s.first + "'");
            settings.push_back(std::move(s));
        }
    }
    settings.insert(settings.end(), overrides.begin(), overrides.end());

    std::string example;
    for (const auto& [k, v] : settings)
        if (k == "example") example = v;
    RunConfig config = example_defaults(example);
    for (const auto& [k, v] : settings)
        if (k != "example") apply_setting(config, k, v);
    config.validate();
    return config;
}

RunConfig parse_config_file(const std::string& path, const std::vector<Setting>& overrides)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), overrides);
}

std::string format_config(const RunConfig& config)
{
    std::string out = "example=" + config.example + "\n";
    for (const auto& k : key_table()) out += k.name + "=" + k.get(config) + "\n";
    return out;
}

}  // namespace esfem
