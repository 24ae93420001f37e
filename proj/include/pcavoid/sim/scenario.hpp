#pragma once

// Scenario files are YAML. Top-level sections:
//
//   name, seed, start, goal, sensor, map, planner, sim, obstacles, compare
//
// Every section is optional except start, goal and obstacles; unknown keys are
// rejected so typos surface as errors. See scenarios/README.md for the schema.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "pcavoid/core/types.hpp"
#include "pcavoid/gridmap/occupancy_grid.hpp"
#include "pcavoid/planner/config.hpp"
#include "pcavoid/sim/environment.hpp"
#include "pcavoid/sim/lidar.hpp"
#include "pcavoid/spatial/temporal_map.hpp"

namespace pcavoid::sim {

class ScenarioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SimSettings {
    double timeout = 30.0;
    double collision_radius = 0.1;  // ground-truth distance below this ends the run as a collision
    double tracking_lag = 0.0;      // first-order lag time constant; 0 = exact tracking
    int failure_patience = 50;      // consecutive failed frames before giving up
    double unseen_cell = 0.5;       // coarse grid for "plan crosses never-scanned space" logging
};

struct CompareSettings {
    int frames = 50;
    std::string bar = "bar";
    std::vector<double> resolutions = {0.3, 0.2, 0.1, 0.05};
    gridmap::OccupancyParams grid;
};

struct Scenario {
    std::string name = "unnamed";
    std::uint64_t seed = 1;
    UavState start;
    std::optional<double> start_yaw;
    Point3 goal = Point3::Zero();
    SensorModel sensor;
    MapConfig map;
    PlannerConfig planner;
    SimSettings sim;
    Environment env;
    CompareSettings compare;

    void validate() const {
        sensor.validate();
        map.validate();
        planner.validate();
        compare.grid.validate();
        if (!start.finite() || !is_finite(goal)) {
            throw ScenarioError("start and goal must be finite");
        }
        if (!(sim.timeout > 0.0) || !(sim.collision_radius >= 0.0) || sim.failure_patience < 1 ||
            !(sim.unseen_cell > 0.0)) {
            throw ScenarioError("sim: invalid timeout, collision radius, failure patience or unseen cell");
        }
        if (compare.frames < 1 || compare.resolutions.empty()) {
            throw ScenarioError("compare: frames and resolutions must be non-empty");
        }
        for (double r : compare.resolutions) {
            if (!(r > 0.0)) {
                throw ScenarioError("compare: resolutions must be positive");
            }
        }
    }
};

namespace detail {

inline std::string where(const YAML::Node& node) {
    const YAML::Mark m = node.Mark();
    if (m.line < 0) {
        return "";
    }
    return "line " + std::to_string(m.line + 1) + ": ";
}

[[noreturn]] inline void fail(const YAML::Node& node, const std::string& msg) {
    throw ScenarioError(where(node) + msg);
}

inline void check_keys(const YAML::Node& node, const std::string& section, std::initializer_list<const char*> allowed) {
    if (!node.IsMap()) {
        fail(node, section + " must be a mapping");
    }
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& kv : node) {
        const std::string key = kv.first.as<std::string>();
        if (!ok.count(key)) {
            fail(kv.first, "unknown key '" + key + "' in " + section);
        }
    }
}

template <class T>
T scalar(const YAML::Node& node, const std::string& what) {
    if (!node.IsScalar()) {
        fail(node, what + " must be a scalar");
    }
    try {
        return node.as<T>();
    } catch (const YAML::Exception&) {
        fail(node, "cannot parse " + what + " from '" + node.Scalar() + "'");
    }
}

template <class T>
void read(const YAML::Node& parent, const char* key, T& out, const std::string& section) {
    if (const YAML::Node n = parent[key]) {
        out = scalar<T>(n, section + "." + key);
    }
}

inline Vec3 vec3(const YAML::Node& node, const std::string& what) {
    if (!node.IsSequence() || node.size() != 3) {
        fail(node, what + " must be a list of three numbers");
    }
    Vec3 v;
    for (std::size_t i = 0; i < 3; ++i) {
        v[static_cast<int>(i)] = scalar<double>(node[i], what);
    }
    if (!is_finite(v)) {
        fail(node, what + " must be finite");
    }
    return v;
}

inline double positive(const YAML::Node& node, const std::string& what) {
    const double v = scalar<double>(node, what);
    if (!(v > 0.0)) {
        fail(node, what + " must be positive");
    }
    return v;
}

inline Obstacle parse_obstacle(const YAML::Node& n, std::size_t index) {
    const std::string ctx = "obstacles[" + std::to_string(index) + "]";
    check_keys(n, ctx, {"name", "type", "center", "radius", "p0", "p1", "min", "max", "motion", "background"});
    Obstacle ob;
    ob.name = n["name"] ? scalar<std::string>(n["name"], ctx + ".name") : "obstacle_" + std::to_string(index);
    if (!n["type"]) {
        fail(n, ctx + " needs a type (sphere, capsule, box)");
    }
    const std::string type = scalar<std::string>(n["type"], ctx + ".type");
    auto need = [&](const char* key) {
        if (!n[key]) {
            fail(n, ctx + " (" + type + ") needs '" + key + "'");
        }
        return n[key];
    };
    if (type == "sphere") {
        ob.shape = Sphere{vec3(need("center"), ctx + ".center"), positive(need("radius"), ctx + ".radius")};
    } else if (type == "capsule") {
        ob.shape = Capsule{vec3(need("p0"), ctx + ".p0"), vec3(need("p1"), ctx + ".p1"),
                           positive(need("radius"), ctx + ".radius")};
    } else if (type == "box") {
        AlignedBox box{vec3(need("min"), ctx + ".min"), vec3(need("max"), ctx + ".max")};
        if (!((box.max.array() > box.min.array()).all())) {
            fail(n, ctx + ": box max must exceed min on every axis");
        }
        ob.shape = box;
    } else {
        fail(n["type"], "unknown obstacle type '" + type + "'");
    }
    read(n, "background", ob.background, ctx);
    if (const YAML::Node m = n["motion"]) {
        check_keys(m, ctx + ".motion", {"pivot", "keyframes"});
        MotionSchedule sched;
        if (m["pivot"]) {
            sched.pivot = vec3(m["pivot"], ctx + ".motion.pivot");
        }
        const YAML::Node kfs = m["keyframes"];
        if (!kfs || !kfs.IsSequence() || kfs.size() == 0) {
            fail(m, ctx + ".motion needs a non-empty keyframes list");
        }
        for (std::size_t k = 0; k < kfs.size(); ++k) {
            const YAML::Node kf = kfs[k];
            const std::string kctx = ctx + ".motion.keyframes[" + std::to_string(k) + "]";
            check_keys(kf, kctx, {"t", "translation", "rotation_deg"});
            Keyframe key;
            if (!kf["t"]) {
                fail(kf, kctx + " needs t");
            }
            key.t = scalar<double>(kf["t"], kctx + ".t");
            if (kf["translation"]) {
                key.translation = vec3(kf["translation"], kctx + ".translation");
            }
            if (kf["rotation_deg"]) {
                key.rotation = vec3(kf["rotation_deg"], kctx + ".rotation_deg") * (std::numbers::pi / 180.0);
            }
            if (!sched.keyframes.empty() && !(key.t > sched.keyframes.back().t)) {
                fail(kf, kctx + ": keyframe times must be strictly increasing");
            }
            sched.keyframes.push_back(key);
        }
        ob.motion = sched;
    }
    return ob;
}

}  // namespace detail

/// Builds a validated scenario from a YAML document.
inline Scenario parse_scenario(const YAML::Node& root) {
    using namespace detail;
    if (!root || !root.IsMap()) {
        throw ScenarioError("scenario must be a YAML mapping");
    }
    check_keys(root, "scenario",
               {"name", "description", "seed", "start", "goal", "sensor", "map", "planner", "sim", "obstacles",
                "compare"});
    Scenario sc;
    read(root, "name", sc.name, "scenario");
    read(root, "seed", sc.seed, "scenario");

    if (!root["start"]) {
        fail(root, "missing 'start'");
    }
    const YAML::Node start = root["start"];
    check_keys(start, "start", {"position", "velocity", "yaw_deg"});
    if (!start["position"]) {
        fail(start, "start needs a position");
    }
    sc.start.p = vec3(start["position"], "start.position");
    if (start["velocity"]) {
        sc.start.v = vec3(start["velocity"], "start.velocity");
    }
    if (start["yaw_deg"]) {
        sc.start_yaw = scalar<double>(start["yaw_deg"], "start.yaw_deg") * std::numbers::pi / 180.0;
    }
    if (!root["goal"]) {
        fail(root, "missing 'goal'");
    }
    sc.goal = vec3(root["goal"], "goal");

    if (const YAML::Node s = root["sensor"]) {
        check_keys(s, "sensor",
                   {"fov_h_deg", "fov_v_deg", "points_per_second", "frame_rate", "max_range", "range_noise_sigma",
                    "pattern", "heads", "rosette_f1_hz", "rosette_ratio"});
        read(s, "fov_h_deg", sc.sensor.fov_h_deg, "sensor");
        read(s, "fov_v_deg", sc.sensor.fov_v_deg, "sensor");
        read(s, "points_per_second", sc.sensor.points_per_second, "sensor");
        read(s, "frame_rate", sc.sensor.frame_rate, "sensor");
        read(s, "max_range", sc.sensor.max_range, "sensor");
        read(s, "range_noise_sigma", sc.sensor.range_noise_sigma, "sensor");
        read(s, "heads", sc.sensor.heads, "sensor");
        read(s, "rosette_f1_hz", sc.sensor.rosette_f1_hz, "sensor");
        read(s, "rosette_ratio", sc.sensor.rosette_ratio, "sensor");
        if (s["pattern"]) {
            const std::string p = scalar<std::string>(s["pattern"], "sensor.pattern");
            if (p == "rosette") {
                sc.sensor.pattern = ScanPattern::Rosette;
            } else if (p == "uniform_random") {
                sc.sensor.pattern = ScanPattern::UniformRandom;
            } else {
                fail(s["pattern"], "sensor.pattern must be rosette or uniform_random");
            }
        }
    }

    if (const YAML::Node m = root["map"]) {
        check_keys(m, "map", {"scans_per_tree", "tree_count", "resolution", "clearance"});
        read(m, "scans_per_tree", sc.map.scans_per_tree, "map");
        read(m, "tree_count", sc.map.tree_count, "map");
        read(m, "resolution", sc.map.resolution, "map");
        read(m, "clearance", sc.map.clearance, "map");
    }
    sc.planner.clearance = sc.map.clearance;
    sc.planner.prune_cell = 0.5 * sc.map.clearance;

    if (const YAML::Node p = root["planner"]) {
        check_keys(p, "planner",
                   {"v_max", "a_max", "primitive_duration", "goal_tolerance", "prune_cell", "time_weight",
                    "max_expansions", "velocity_limit", "plan_budget", "collision_margin",
                    "analytic_trigger_distance", "min_relaxed_clearance", "relax_on_start_collision", "bounds"});
        read(p, "v_max", sc.planner.limits.v_max, "planner");
        read(p, "a_max", sc.planner.limits.a_max, "planner");
        read(p, "primitive_duration", sc.planner.limits.primitive_duration, "planner");
        read(p, "goal_tolerance", sc.planner.goal_tolerance, "planner");
        read(p, "prune_cell", sc.planner.prune_cell, "planner");
        read(p, "time_weight", sc.planner.time_weight, "planner");
        read(p, "max_expansions", sc.planner.max_expansions, "planner");
        read(p, "plan_budget", sc.planner.plan_budget, "planner");
        read(p, "collision_margin", sc.planner.collision_margin, "planner");
        read(p, "analytic_trigger_distance", sc.planner.analytic_trigger_distance, "planner");
        read(p, "min_relaxed_clearance", sc.planner.min_relaxed_clearance, "planner");
        read(p, "relax_on_start_collision", sc.planner.relax_on_start_collision, "planner");
        if (p["velocity_limit"]) {
            const std::string v = scalar<std::string>(p["velocity_limit"], "planner.velocity_limit");
            if (v == "per_axis") {
                sc.planner.velocity_limit = VelocityLimitMode::PerAxis;
            } else if (v == "norm") {
                sc.planner.velocity_limit = VelocityLimitMode::Norm;
            } else {
                fail(p["velocity_limit"], "planner.velocity_limit must be per_axis or norm");
            }
        }
        if (const YAML::Node b = p["bounds"]) {
            check_keys(b, "planner.bounds", {"min", "max"});
            Box box;
            if (b["min"]) {
                box.min = vec3(b["min"], "planner.bounds.min");
            }
            if (b["max"]) {
                box.max = vec3(b["max"], "planner.bounds.max");
            }
            sc.planner.bounds = box;
        }
    }

    if (const YAML::Node s = root["sim"]) {
        check_keys(s, "sim", {"timeout", "collision_radius", "tracking_lag", "failure_patience", "unseen_cell"});
        read(s, "timeout", sc.sim.timeout, "sim");
        read(s, "collision_radius", sc.sim.collision_radius, "sim");
        read(s, "tracking_lag", sc.sim.tracking_lag, "sim");
        read(s, "failure_patience", sc.sim.failure_patience, "sim");
        read(s, "unseen_cell", sc.sim.unseen_cell, "sim");
    }

    const YAML::Node obs = root["obstacles"];
    if (!obs) {
        fail(root, "missing 'obstacles' (use [] for an empty world)");
    }
    if (!obs.IsSequence()) {
        fail(obs, "obstacles must be a list");
    }
    for (std::size_t i = 0; i < obs.size(); ++i) {
        sc.env.obstacles.push_back(parse_obstacle(obs[i], i));
    }

    if (const YAML::Node c = root["compare"]) {
        check_keys(c, "compare",
                   {"frames", "bar", "resolutions", "hit", "miss", "occupied_probability", "clamp_min", "clamp_max"});
        read(c, "frames", sc.compare.frames, "compare");
        read(c, "bar", sc.compare.bar, "compare");
        read(c, "hit", sc.compare.grid.hit, "compare");
        read(c, "miss", sc.compare.grid.miss, "compare");
        read(c, "occupied_probability", sc.compare.grid.occupied_probability, "compare");
        read(c, "clamp_min", sc.compare.grid.clamp_min, "compare");
        read(c, "clamp_max", sc.compare.grid.clamp_max, "compare");
        if (const YAML::Node r = c["resolutions"]) {
            if (!r.IsSequence()) {
                fail(r, "compare.resolutions must be a list");
            }
            sc.compare.resolutions.clear();
            for (std::size_t i = 0; i < r.size(); ++i) {
                sc.compare.resolutions.push_back(positive(r[i], "compare.resolutions"));
            }
        }
    }

    try {
        sc.validate();
    } catch (const std::invalid_argument& e) {
        throw ScenarioError(e.what());
    }
    return sc;
}

/// Replaces the value at a dotted path ("planner.v_max", "obstacles.2.radius") with
/// `value` parsed as YAML. Intermediate mappings are created as needed.
inline void apply_override(YAML::Node& root, const std::string& dotted, const std::string& value) {
    std::vector<std::string> parts;
    std::stringstream ss(dotted);
    for (std::string part; std::getline(ss, part, '.');) {
        if (part.empty()) {
            throw ScenarioError("override '" + dotted + "': empty path component");
        }
        parts.push_back(part);
    }
    if (parts.empty()) {
        throw ScenarioError("override path is empty");
    }
    YAML::Node parsed;
    try {
        parsed = YAML::Load(value);
    } catch (const YAML::Exception& e) {
        throw ScenarioError("override '" + dotted + "': cannot parse value '" + value + "'");
    }
    // yaml-cpp node handles alias on assignment, so walk with fresh handles.
    std::vector<YAML::Node> chain{root};
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        YAML::Node cur = chain.back();
        YAML::Node next;
        if (cur.IsSequence()) {
            std::size_t idx = 0;
            try {
                idx = std::stoul(parts[i]);
            } catch (const std::exception&) {
                throw ScenarioError("override '" + dotted + "': '" + parts[i] + "' is not a list index");
            }
            if (idx >= cur.size()) {
                throw ScenarioError("override '" + dotted + "': index " + parts[i] + " out of range");
            }
            next = cur[idx];
        } else {
            if (!cur[parts[i]]) {
                cur[parts[i]] = YAML::Node(YAML::NodeType::Map);
            }
            next = cur[parts[i]];
        }
        chain.push_back(next);
    }
    YAML::Node parent = chain.back();
    const std::string& leaf = parts.back();
    if (parent.IsSequence()) {
        const std::size_t idx = std::stoul(leaf);
        if (idx >= parent.size()) {
            throw ScenarioError("override '" + dotted + "': index out of range");
        }
        parent[idx] = parsed;
    } else {
        parent[leaf] = parsed;
    }
}

inline YAML::Node load_scenario_yaml(const std::string& path) {
    try {
        return YAML::LoadFile(path);
    } catch (const YAML::BadFile&) {
        throw ScenarioError("cannot open scenario file '" + path + "'");
    } catch (const YAML::ParserException& e) {
        throw ScenarioError("line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
}

inline Scenario load_scenario(const std::string& path, const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
    YAML::Node root = load_scenario_yaml(path);
    for (const auto& [key, value] : overrides) {
        apply_override(root, key, value);
    }
    return parse_scenario(root);
}

inline Scenario scenario_from_string(const std::string& text) {
    try {
        return parse_scenario(YAML::Load(text));
    } catch (const YAML::ParserException& e) {
        throw ScenarioError("line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
}

}  // namespace pcavoid::sim
