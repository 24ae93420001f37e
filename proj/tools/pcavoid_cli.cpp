// pcavoid: scenario runner, benchmark harness and map comparison driver.
//
//   pcavoid SCENARIO [--seed N] [--out DIR] [--set key=value ...]
//   pcavoid SCENARIO --bench N [--out DIR]
//   pcavoid SCENARIO --compare-maps [--out DIR]
//
// Exit codes: 0 goal reached, 1 usage or scenario error, 2 collision,
// 3 planner failure, 4 timeout.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pcavoid/core/cloud_io.hpp"
#include "pcavoid/gridmap/thin_object.hpp"
#include "pcavoid/sim/run_io.hpp"
#include "pcavoid/sim/scenario.hpp"
#include "pcavoid/sim/simulator.hpp"

namespace fs = std::filesystem;
using namespace pcavoid;

namespace {

enum ExitCode { kGoal = 0, kUsage = 1, kCollision = 2, kPlannerFailure = 3, kTimeout = 4 };

int exit_code(sim::Outcome o) {
    switch (o) {
        case sim::Outcome::GoalReached:
            return kGoal;
        case sim::Outcome::Collision:
            return kCollision;
        case sim::Outcome::PlannerFailure:
            return kPlannerFailure;
        case sim::Outcome::Timeout:
            return kTimeout;
    }
    return kUsage;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream os(p);
    if (!os) {
        throw std::runtime_error("cannot write " + p.string());
    }
    return os;
}

int do_run(const sim::Scenario& sc, const fs::path& out) {
    sim::Simulator simulator(sc, sim::SimOptions{.keep_snapshots = true});
    const sim::RunLog log = simulator.run();
    fs::create_directories(out / "map");
    {
        auto os = open_out(out / "events.log");
        sim::write_events(os, log);
    }
    {
        auto os = open_out(out / "frames.csv");
        sim::write_frames_csv(os, log);
    }
    {
        auto os = open_out(out / "trajectory.csv");
        if (log.final_trajectory) {
            sim::write_trajectory_csv(os, *log.final_trajectory);
        }
    }
    {
        auto os = open_out(out / "report.json");
        os << sim::run_report(log).dump(2) << '\n';
    }
    {
        auto os = open_out(out / "timing.csv");
        sim::write_timing_csv(os, log.timing);
    }
    for (const auto& snap : log.snapshots) {
        const fs::path dir = out / "snapshots" / ("frame_" + std::to_string(snap.frame));
        fs::create_directories(dir);
        for (std::size_t i = 0; i < snap.trees.size(); ++i) {
            save_cloud((dir / ("tree_" + std::to_string(i) + ".txt")).string(), snap.trees[i]);
        }
    }
    simulator.map().dump((out / "map").string(), log.flight_duration);

    std::cout << "outcome " << sim::to_string(log.outcome) << "\nreplans " << log.replan_count << "\nplans "
              << log.plan_count << "\nmin_gt_clearance " << log.min_gt_clearance << "\npath_length "
              << log.path_length << "\nflight_duration " << log.flight_duration << "\noutput " << out.string()
              << '\n';
    return exit_code(log.outcome);
}

int do_bench(const sim::Scenario& sc, int repetitions, const std::optional<fs::path>& out) {
    sim::StageTiming all;
    for (int r = 0; r < repetitions; ++r) {
        sim::RunLog log = sim::simulate(sc);
        auto append = [](std::vector<double>& dst, const std::vector<double>& src) {
            dst.insert(dst.end(), src.begin(), src.end());
        };
        append(all.map_update_ms, log.timing.map_update_ms);
        append(all.tree_build_ms, log.timing.tree_build_ms);
        append(all.plan_ms, log.timing.plan_ms);
        std::cerr << "repetition " << r + 1 << "/" << repetitions << ": " << sim::to_string(log.outcome) << '\n';
    }
    std::ostringstream table;
    table << "stage,count,min_ms,mean_ms,p95_ms,max_ms\n";
    auto row = [&](const char* name, const std::vector<double>& v) {
        const sim::StageStats s = sim::stage_stats(v);
        table << name << ',' << s.count << ',' << sim::detail::fmt(s.min, 4) << ',' << sim::detail::fmt(s.mean, 4)
              << ',' << sim::detail::fmt(s.p95, 4) << ',' << sim::detail::fmt(s.max, 4) << '\n';
    };
    row("map_update", all.map_update_ms);
    row("tree_build", all.tree_build_ms);
    row("plan", all.plan_ms);
    std::cout << table.str();
    if (out) {
        fs::create_directories(*out);
        auto os = open_out(*out / "bench.csv");
        os << table.str();
        auto ts = open_out(*out / "timing.csv");
        sim::write_timing_csv(ts, all);
    }
    return 0;
}

int do_compare(const sim::Scenario& sc, const std::optional<fs::path>& out) {
    const gridmap::ThinObjectReport rep = gridmap::thin_object_experiment(sc);
    nlohmann::ordered_json j;
    j["scenario"] = sc.name;
    j["frames"] = rep.frames;
    j["raw_points"] = rep.raw_points;
    j["pointcloud_points"] = rep.pointcloud_points;
    j["pointcloud_bar_points"] = rep.pointcloud_bar_points;
    j["bar_cell_occupied_fraction"] = rep.bar_cell_occupied_fraction();
    auto res_json = [](const gridmap::ResolutionResult& r) {
        nlohmann::ordered_json e;
        e["resolution"] = r.resolution;
        e["bar_cells"] = r.bar_cells;
        e["occupied_bar_cells"] = r.occupied_bar_cells;
        e["occupied_fraction"] = r.occupied_fraction;
        e["cell_updates"] = r.cell_updates;
        return e;
    };
    nlohmann::ordered_json sweep = nlohmann::ordered_json::array();
    for (const auto& r : rep.with_background) {
        sweep.push_back(res_json(r));
    }
    j["resolution_sweep"] = sweep;
    j["without_background"] = res_json(rep.without_background);
    std::cout << j.dump(2) << '\n';

    if (out) {
        fs::create_directories(*out);
        auto os = open_out(*out / "compare_report.json");
        os << j.dump(2) << '\n';
        // Horizontal slices through the sensor height, one file per resolution.
        const double yaw = sc.start_yaw ? *sc.start_yaw
                                        : std::atan2(sc.goal.y() - sc.start.p.y(), sc.goal.x() - sc.start.p.x());
        const auto pose = sim::SensorPose::level(sc.start.p, yaw);
        sim::ScanPatternGenerator pattern(sc.sensor, sc.seed);
        std::vector<PointCloud> scans;
        for (int k = 0; k < sc.compare.frames; ++k) {
            scans.push_back(sim::generate_scan(sc.env, sc.sensor, pose, k * sc.sensor.frame_period(), pattern));
        }
        for (double res : sc.compare.resolutions) {
            gridmap::OccupancyParams params = sc.compare.grid;
            params.resolution = res;
            gridmap::OccupancyGrid grid(params);
            for (const auto& s : scans) {
                grid.integrate_scan(pose.position, s);
            }
            auto gs = open_out(*out / ("grid_slice_" + format_double(res, 3) + ".txt"));
            grid.export_rows(gs, grid.cell(pose.position).z);
        }
        PointCloud all;
        for (const auto& s : scans) {
            all.points.insert(all.points.end(), s.points.begin(), s.points.end());
        }
        save_cloud((*out / "pointcloud.txt").string(), all);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Point-cloud kinodynamic planning simulator"};
    std::string scenario_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::vector<std::string> overrides;
    int bench = 0;
    bool compare = false;
    app.add_option("scenario", scenario_path, "Scenario YAML file")->required();
    app.add_option("--seed", seed, "Random seed (overrides the scenario's)");
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--set", overrides, "Config override, dotted.path=value (repeatable)");
    app.add_option("--bench", bench, "Run N repetitions and report per-stage timing")->check(CLI::PositiveNumber);
    app.add_flag("--compare-maps", compare, "Occupancy grid vs point-cloud map thin-object comparison");
    CLI11_PARSE(app, argc, argv);

    sim::Scenario sc;
    try {
        std::vector<std::pair<std::string, std::string>> kv;
        for (const auto& o : overrides) {
            const auto eq = o.find('=');
            if (eq == std::string::npos || eq == 0) {
                throw sim::ScenarioError("override '" + o + "' must look like key=value");
            }
            kv.emplace_back(o.substr(0, eq), o.substr(eq + 1));
        }
        sc = sim::load_scenario(scenario_path, kv);
        if (seed) {
            sc.seed = *seed;
        }
    } catch (const std::exception& e) {
        std::cerr << scenario_path << ": " << e.what() << '\n';
        return kUsage;
    }

    try {
        const std::optional<fs::path> out = out_dir.empty() ? std::nullopt : std::optional<fs::path>(out_dir);
        if (compare) {
            return do_compare(sc, out);
        }
        if (bench > 0) {
            return do_bench(sc, bench, out);
        }
        return do_run(sc, out ? *out : fs::path("runs") / (sc.name + "_seed" + std::to_string(sc.seed)));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
}
