#include "psane/scenario.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace psane::scenario {

namespace {

using nlohmann::json;
using sim::ScenarioConfig;

json vec(Vec2 v) { return json::array({v.x, v.y}); }

json optional_vec(const std::optional<Vec2>& v) { return v ? vec(*v) : json(nullptr); }

json optional_num(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json params_json(const terrain::FieldParams& p)
{
    json bumps = json::array();
    for (const auto& b : p.bumps) bumps.push_back({{"center", vec(b.center)}, {"sigma", b.sigma}, {"peak", b.peak}});
    json patches = json::array();
    for (const auto& q : p.patches)
        patches.push_back({{"a", vec(q.a)},
                           {"b", vec(q.b)},
                           {"radius", q.radius},
                           {"edge_width", q.edge_width},
                           {"peak", q.peak}});
    json keep = json::array();
    for (const auto& k : p.keep_out) keep.push_back({{"center", vec(k.center)}, {"radius", k.radius}});
    return {{"base", p.base},
            {"amplitude", p.amplitude},
            {"bumps", bumps},
            {"random_bumps", p.random_bumps},
            {"bump_sigma_min", p.bump_sigma_min},
            {"bump_sigma_max", p.bump_sigma_max},
            {"bump_peak_min", p.bump_peak_min},
            {"bump_peak_max", p.bump_peak_max},
            {"patches", patches},
            {"random_patches", p.random_patches},
            {"patch_radius_min", p.patch_radius_min},
            {"patch_radius_max", p.patch_radius_max},
            {"patch_peak_min", p.patch_peak_min},
            {"patch_peak_max", p.patch_peak_max},
            {"patch_edge_width", p.patch_edge_width},
            {"jitter", vec(p.jitter)},
            {"keep_out", keep},
            {"mean", p.mean},
            {"signal_std", p.signal_std},
            {"length_scale", p.length_scale}};
}

json config_json(const ScenarioConfig& c)
{
    json schedule = json::array();
    for (auto o : c.pgh_schedule) schedule.push_back(frontier::to_string(o));
    return {
        {"name", c.name},
        {"workspace",
         {{"width_m", c.workspace.width_m},
          {"height_m", c.workspace.height_m},
          {"resolution", c.workspace.resolution},
          {"origin", vec(c.workspace.origin)}}},
        {"environment",
         {{"kind", terrain::to_string(c.environment.kind)},
          {"seed", c.environment.seed},
          {"params", params_json(c.environment.params)}}},
        {"start", vec(c.start)},
        {"goal", optional_vec(c.goal)},
        {"h", c.h},
        {"beta", c.beta},
        {"lipschitz", optional_num(c.lipschitz)},
        {"lipschitz_scale", c.lipschitz_scale},
        {"k_e", c.k_e},
        {"k_g", c.k_g},
        {"gp",
         {{"signal_std", c.gp.signal_std},
          {"length_scale", c.gp.length_scale},
          {"noise_std", c.gp.noise_std},
          {"prior_mean", c.prior_mean}}},
        {"strategy", frontier::to_string(c.strategy)},
        {"pgh_schedule", schedule},
        {"margin", optional_num(c.margin)},
        {"r0", c.r0},
        {"robot",
         {{"radius", c.robot_radius},
          {"speed", c.robot.speed},
          {"turn_rate", c.robot.turn_rate},
          {"dt", c.robot.dt},
          {"s_stuck", c.robot.s_stuck},
          {"t_stuck", c.robot.t_stuck},
          {"arrival_tolerance", c.robot.arrival_tolerance},
          {"sample_spacing", c.robot.sample_spacing}}},
        {"goal_tolerance", c.goal_tolerance},
        {"epoch_max_travel", c.epoch_max_travel},
        {"dwell_time", c.dwell_time},
        {"exclude_stalled", c.exclude_stalled},
        {"time_budget", c.time_budget},
        {"rng_seed", c.rng_seed},
        {"log_candidates", c.log_candidates},
        {"snapshot_interval", c.snapshot_interval},
    };
}

/* Keys whose default is null or whose value is a list of objects accept any
 * shape; everything else must already exist in the defaults. */
void merge_strict(json& target, const json& patch, const std::string& prefix)
{
    if (!patch.is_object()) throw ConfigError("expected an object", prefix.empty() ? "<root>" : prefix);
    for (auto it = patch.begin(); it != patch.end(); ++it) {
        const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (!target.contains(it.key())) throw ConfigError("unknown key", key);
        json& slot = target[it.key()];
        if (slot.is_object() && it.value().is_object()) merge_strict(slot, it.value(), key);
        else if (slot.is_object()) throw ConfigError("expected an object", key);
        else slot = it.value();
    }
}

class Reader {
public:
    explicit Reader(const json& root) : root_(root) {}

    const json& at(const std::string& path) const
    {
        const json* node = &root_;
        std::size_t pos = 0;
        while (pos <= path.size()) {
            const std::size_t dot = path.find('.', pos);
            const std::string part = path.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
            node = &node->at(part);
            if (dot == std::string::npos) break;
            pos = dot + 1;
        }
        return *node;
    }

    double num(const std::string& path) const { return num_of(at(path), path); }

    static double num_of(const json& j, const std::string& path)
    {
        if (!j.is_number()) throw ConfigError("expected a number", path);
        return j.get<double>();
    }

    static std::int64_t integer_of(const json& j, const std::string& path)
    {
        if (j.is_number_integer()) return j.get<std::int64_t>();
        if (j.is_number_float()) {
            const double d = j.get<double>();
            if (d == std::floor(d) && std::abs(d) < 9.0e15) return static_cast<std::int64_t>(d);
        }
        throw ConfigError("expected an integer", path);
    }

    int integer(const std::string& path) const { return static_cast<int>(integer_of(at(path), path)); }

    std::uint64_t seed(const std::string& path) const
    {
        const json& j = at(path);
        if (j.is_number_unsigned()) return j.get<std::uint64_t>();
        const std::int64_t v = integer_of(j, path);
        if (v < 0) throw ConfigError("must be >= 0", path);
        return static_cast<std::uint64_t>(v);
    }

    std::string str(const std::string& path) const
    {
        const json& j = at(path);
        if (!j.is_string()) throw ConfigError("expected a string", path);
        return j.get<std::string>();
    }

    bool boolean(const std::string& path) const
    {
        const json& j = at(path);
        if (!j.is_boolean()) throw ConfigError("expected true or false", path);
        return j.get<bool>();
    }

    static Vec2 vec_of(const json& j, const std::string& path)
    {
        if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
            throw ConfigError("expected [x, y]", path);
        return {j[0].get<double>(), j[1].get<double>()};
    }

    Vec2 vec(const std::string& path) const { return vec_of(at(path), path); }

    std::optional<Vec2> optional_vec(const std::string& path) const
    {
        const json& j = at(path);
        if (j.is_null()) return std::nullopt;
        return vec_of(j, path);
    }

    std::optional<double> optional_num(const std::string& path) const
    {
        const json& j = at(path);
        if (j.is_null()) return std::nullopt;
        return num_of(j, path);
    }

private:
    const json& root_;
};

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& path)
{
    if (!obj.is_object()) throw ConfigError("expected an object", path);
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) throw ConfigError("unknown key", path + "." + it.key());
    }
}

terrain::FieldParams read_params(const Reader& r)
{
    const std::string p = "environment.params.";
    terrain::FieldParams f;
    f.base = r.num(p + "base");
    f.amplitude = r.num(p + "amplitude");
    f.random_bumps = r.integer(p + "random_bumps");
    f.bump_sigma_min = r.num(p + "bump_sigma_min");
    f.bump_sigma_max = r.num(p + "bump_sigma_max");
    f.bump_peak_min = r.num(p + "bump_peak_min");
    f.bump_peak_max = r.num(p + "bump_peak_max");
    f.random_patches = r.integer(p + "random_patches");
    f.patch_radius_min = r.num(p + "patch_radius_min");
    f.patch_radius_max = r.num(p + "patch_radius_max");
    f.patch_peak_min = r.num(p + "patch_peak_min");
    f.patch_peak_max = r.num(p + "patch_peak_max");
    f.patch_edge_width = r.num(p + "patch_edge_width");
    f.jitter = r.vec(p + "jitter");
    f.mean = r.num(p + "mean");
    f.signal_std = r.num(p + "signal_std");
    f.length_scale = r.num(p + "length_scale");

    auto list = [&](const std::string& key) -> const json& {
        const json& j = r.at(p + key);
        if (!j.is_array()) throw ConfigError("expected a list", p + key);
        return j;
    };
    const terrain::Bump bump_defaults;
    for (std::size_t i = 0; i < list("bumps").size(); ++i) {
        const json& j = list("bumps")[i];
        const std::string at = p + "bumps[" + std::to_string(i) + "]";
        check_keys(j, {"center", "sigma", "peak"}, at);
        terrain::Bump b;
        b.center = Reader::vec_of(j.value("center", json(nullptr)), at + ".center");
        b.sigma = j.contains("sigma") ? Reader::num_of(j["sigma"], at + ".sigma") : bump_defaults.sigma;
        b.peak = j.contains("peak") ? Reader::num_of(j["peak"], at + ".peak") : bump_defaults.peak;
        f.bumps.push_back(b);
    }
    const terrain::Patch patch_defaults;
    for (std::size_t i = 0; i < list("patches").size(); ++i) {
        const json& j = list("patches")[i];
        const std::string at = p + "patches[" + std::to_string(i) + "]";
        check_keys(j, {"a", "b", "radius", "edge_width", "peak"}, at);
        terrain::Patch q;
        q.a = Reader::vec_of(j.value("a", json(nullptr)), at + ".a");
        q.b = j.contains("b") ? Reader::vec_of(j["b"], at + ".b") : q.a;
        q.radius = j.contains("radius") ? Reader::num_of(j["radius"], at + ".radius") : patch_defaults.radius;
        q.edge_width =
            j.contains("edge_width") ? Reader::num_of(j["edge_width"], at + ".edge_width") : patch_defaults.edge_width;
        q.peak = j.contains("peak") ? Reader::num_of(j["peak"], at + ".peak") : patch_defaults.peak;
        f.patches.push_back(q);
    }
    for (std::size_t i = 0; i < list("keep_out").size(); ++i) {
        const json& j = list("keep_out")[i];
        const std::string at = p + "keep_out[" + std::to_string(i) + "]";
        check_keys(j, {"center", "radius"}, at);
        terrain::KeepOut k;
        k.center = Reader::vec_of(j.value("center", json(nullptr)), at + ".center");
        k.radius = Reader::num_of(j.value("radius", json(nullptr)), at + ".radius");
        f.keep_out.push_back(k);
    }
    return f;
}

ScenarioConfig config_from(const json& merged)
{
    const Reader r(merged);
    ScenarioConfig c;
    c.name = r.str("name");
    c.workspace.width_m = r.num("workspace.width_m");
    c.workspace.height_m = r.num("workspace.height_m");
    c.workspace.resolution = r.num("workspace.resolution");
    c.workspace.origin = r.vec("workspace.origin");
    c.environment.kind = terrain::field_kind_from_string(r.str("environment.kind"));
    c.environment.seed = r.seed("environment.seed");
    c.environment.params = read_params(r);
    c.start = r.vec("start");
    c.goal = r.optional_vec("goal");
    c.h = r.num("h");
    c.beta = r.num("beta");
    c.lipschitz = r.optional_num("lipschitz");
    c.lipschitz_scale = r.num("lipschitz_scale");
    c.k_e = r.num("k_e");
    c.k_g = r.num("k_g");
    c.gp.signal_std = r.num("gp.signal_std");
    c.gp.length_scale = r.num("gp.length_scale");
    c.gp.noise_std = r.num("gp.noise_std");
    c.prior_mean = r.num("gp.prior_mean");
    c.strategy = frontier::strategy_from_string(r.str("strategy"));
    const json& schedule = r.at("pgh_schedule");
    if (!schedule.is_array()) throw ConfigError("expected a list", "pgh_schedule");
    c.pgh_schedule.clear();
    for (const auto& s : schedule) {
        if (!s.is_string()) throw ConfigError("expected objective names", "pgh_schedule");
        c.pgh_schedule.push_back(frontier::objective_from_string(s.get<std::string>()));
    }
    c.margin = r.optional_num("margin");
    c.r0 = r.num("r0");
    c.robot_radius = r.num("robot.radius");
    c.robot.speed = r.num("robot.speed");
    c.robot.turn_rate = r.num("robot.turn_rate");
    c.robot.dt = r.num("robot.dt");
    c.robot.s_stuck = r.num("robot.s_stuck");
    c.robot.t_stuck = r.num("robot.t_stuck");
    c.robot.arrival_tolerance = r.num("robot.arrival_tolerance");
    c.robot.sample_spacing = r.num("robot.sample_spacing");
    c.goal_tolerance = r.num("goal_tolerance");
    c.epoch_max_travel = r.num("epoch_max_travel");
    c.dwell_time = r.num("dwell_time");
    c.exclude_stalled = r.boolean("exclude_stalled");
    c.time_budget = r.num("time_budget");
    c.rng_seed = r.seed("rng_seed");
    c.log_candidates = r.boolean("log_candidates");
    c.snapshot_interval = r.integer("snapshot_interval");
    c.validate();
    return c;
}

json parse(const std::string& text, const std::string& what)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what(), what);
    }
}

json parse_value(const std::string& text)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error&) {
        return json(text);
    }
}

/* Shared shape of the built-in scenarios: a 16 m x 10 m desk at 0.5 m cells,
 * crossing from the left edge to the right edge. */
ScenarioConfig desk()
{
    ScenarioConfig c;
    c.workspace = WorkspaceSpec{};
    c.start = {2.25, 4.75};
    c.goal = Vec2{13.75, 4.75};
    c.h = 0.8;
    c.beta = 4.0;
    c.k_e = 0.1;
    c.k_g = 0.1;
    c.gp.signal_std = 0.25;
    c.gp.length_scale = 1.5;
    c.gp.noise_std = 0.02;
    c.prior_mean = 0.5;
    c.r0 = 1.5;
    c.margin = 0.5;
    c.time_budget = 1500.0;
    c.environment.params.keep_out = {{c.start, 2.0}, {*c.goal, 2.0}};
    return c;
}

ScenarioConfig env1()
{
    ScenarioConfig c = desk();
    c.name = "env1";
    c.environment.kind = terrain::FieldKind::Smooth;
    auto& p = c.environment.params;
    p.base = 0.12;
    p.bumps = {{{8.0, 4.75}, 1.8, 1.0}};
    p.jitter = {0.8, 1.4};
    p.random_bumps = 3;
    p.bump_sigma_min = 1.0;
    p.bump_sigma_max = 1.8;
    p.bump_peak_min = 0.05;
    p.bump_peak_max = 0.35;
    return c;
}

ScenarioConfig env2()
{
    ScenarioConfig c = desk();
    c.name = "env2";
    c.environment.kind = terrain::FieldKind::Heterogeneous;
    auto& p = c.environment.params;
    p.base = 0.12;
    p.patches = {{{8.0, 3.0}, {8.0, 11.0}, 0.7, 0.35, 0.95}};
    p.jitter = {0.8, 0.5};
    p.random_bumps = 2;
    p.bump_sigma_min = 1.0;
    p.bump_sigma_max = 1.8;
    p.bump_peak_min = 0.05;
    p.bump_peak_max = 0.3;
    p.random_patches = 2;
    p.patch_radius_min = 0.4;
    p.patch_radius_max = 0.8;
    p.patch_peak_min = 0.3;
    p.patch_peak_max = 0.6;
    p.patch_edge_width = 0.35;
    p.keep_out.push_back({{8.0, 0.75}, 1.5});
    return c;
}

ScenarioConfig env2_explore()
{
    ScenarioConfig c = env2();
    c.name = "env2_explore";
    c.goal.reset();
    c.environment.params.keep_out = {{c.start, 2.0}, {{8.0, 0.75}, 1.5}};
    c.time_budget = 1000.0;
    c.robot.speed = 0.1;
    c.robot.sample_spacing = 0.25;
    return c;
}

ScenarioConfig gp_prior()
{
    ScenarioConfig c = desk();
    c.name = "gp_prior";
    c.goal.reset();
    c.environment.kind = terrain::FieldKind::GpPrior;
    auto& p = c.environment.params;
    p.keep_out.clear();
    p.mean = 0.45;
    p.signal_std = 0.2;
    p.length_scale = 2.0;
    c.gp.signal_std = p.signal_std;
    c.gp.length_scale = p.length_scale;
    c.prior_mean = p.mean;
    c.time_budget = 200.0;
    return c;
}

}  // namespace

std::string to_json(const sim::ScenarioConfig& config)
{
    return config_json(config).dump(2) + "\n";
}

sim::ScenarioConfig from_json(const std::string& text)
{
    const json patch = parse(text, "<scenario>");
    json merged = config_json(ScenarioConfig{});
    merge_strict(merged, patch, "");
    return config_from(merged);
}

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

sim::ScenarioConfig load(const std::filesystem::path& path)
{
    return from_json(read_text(path));
}

void apply_override(sim::ScenarioConfig& config, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("expected key=value", assignment);
    const std::string key = assignment.substr(0, eq);
    const json value = parse_value(assignment.substr(eq + 1));

    json merged = config_json(config);
    json* node = &merged;
    std::size_t pos = 0;
    while (true) {
        const std::size_t dot = key.find('.', pos);
        const std::string part = key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
        if (!node->is_object() || !node->contains(part)) throw ConfigError("unknown key", key);
        node = &(*node)[part];
        if (dot == std::string::npos) break;
        pos = dot + 1;
    }
    if (node->is_object()) {
        if (!value.is_object()) throw ConfigError("expected an object", key);
        merge_strict(*node, value, key);
    } else {
        *node = value;
    }
    config = config_from(merged);
}

std::vector<std::string> preset_names()
{
    return {"env1", "env2", "env2_explore", "gp_prior"};
}

sim::ScenarioConfig preset(const std::string& name)
{
    if (name == "env1") return env1();
    if (name == "env2") return env2();
    if (name == "env2_explore") return env2_explore();
    if (name == "gp_prior") return gp_prior();
    throw ConfigError("unknown preset '" + name + "'", "preset");
}

Manifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir)
{
    const json j = parse(text, "<manifest>");
    check_keys(j, {"environments", "seeds", "strategies", "workers"}, "manifest");
    Manifest m;

    if (!j.contains("environments") || !j["environments"].is_array() || j["environments"].empty())
        throw ConfigError("must be a non-empty list", "environments");
    for (std::size_t i = 0; i < j["environments"].size(); ++i) {
        const json& e = j["environments"][i];
        const std::string at = "environments[" + std::to_string(i) + "]";
        check_keys(e, {"name", "preset", "scenario", "overrides"}, at);
        sim::ScenarioConfig config;
        if (e.contains("preset") == e.contains("scenario"))
            throw ConfigError("give exactly one of preset or scenario", at);
        if (e.contains("preset")) {
            if (!e["preset"].is_string()) throw ConfigError("expected a string", at + ".preset");
            config = preset(e["preset"].get<std::string>());
        } else {
            if (!e["scenario"].is_string()) throw ConfigError("expected a string", at + ".scenario");
            std::filesystem::path p = e["scenario"].get<std::string>();
            if (p.is_relative()) p = base_dir / p;
            config = load(p);
        }
        if (e.contains("overrides")) {
            if (!e["overrides"].is_array()) throw ConfigError("expected a list of key=value", at + ".overrides");
            for (const auto& o : e["overrides"]) {
                if (!o.is_string()) throw ConfigError("expected a list of key=value", at + ".overrides");
                apply_override(config, o.get<std::string>());
            }
        }
        std::string name = config.name;
        if (e.contains("name")) {
            if (!e["name"].is_string() || e["name"].get<std::string>().empty())
                throw ConfigError("expected a non-empty string", at + ".name");
            name = e["name"].get<std::string>();
        }
        for (const auto& prev : m.batch.environments)
            if (prev.environment == name) throw ConfigError("duplicate environment name '" + name + "'", at + ".name");
        m.batch.environments.push_back({name, config});
    }

    if (!j.contains("seeds") || !j["seeds"].is_array() || j["seeds"].empty())
        throw ConfigError("must be a non-empty list", "seeds");
    for (const auto& s : j["seeds"]) {
        if (!s.is_number_integer() || (s.is_number_integer() && !s.is_number_unsigned() && s.get<std::int64_t>() < 0))
            throw ConfigError("expected non-negative integers", "seeds");
        m.batch.seeds.push_back(s.get<std::uint64_t>());
    }

    if (j.contains("strategies")) {
        if (!j["strategies"].is_array() || j["strategies"].empty())
            throw ConfigError("must be a non-empty list", "strategies");
        for (const auto& s : j["strategies"]) {
            if (!s.is_string()) throw ConfigError("expected strategy names", "strategies");
            m.batch.strategies.push_back(frontier::strategy_from_string(s.get<std::string>()));
        }
    } else {
        m.batch.strategies = {frontier::StrategyKind::NGH, frontier::StrategyKind::SGH, frontier::StrategyKind::PGH,
                              frontier::StrategyKind::PSANE};
    }
    if (j.contains("workers")) {
        if (!j["workers"].is_number_integer() || j["workers"].get<int>() < 1)
            throw ConfigError("must be a positive integer", "workers");
        m.batch.workers = j["workers"].get<int>();
    }
    return m;
}

Manifest load_manifest(const std::filesystem::path& path)
{
    return parse_manifest(read_text(path), path.parent_path());
}

}  // namespace psane::scenario
