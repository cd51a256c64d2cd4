#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "zest/camera.hpp"
#include "zest/controller.hpp"
#include "zest/image.hpp"
#include "zest/llm_client.hpp"
#include "zest/oracle.hpp"
#include "zest/planner.hpp"
#include "zest/world.hpp"

namespace zest {

enum class OracleBackend { Mock, Llm };

struct EpisodeLimits {
    double timeout_s = 400.0;           // sim time budget
    double replan_period_s = 6.0;       // periodic replan even if the path stays valid
    double query_min_interval_s = 2.0;  // floor between oracle dispatches
    double query_period_s = 4.0;        // fallback dispatch timer away from the frontier
    double frontier_distance_m = 3.0;   // dispatch when unobserved ground is this close along the path
    double stall_window_s = 120.0;      // give up after this long without progress
    double stall_min_progress_m = 0.3;  // what counts as progress toward the goal
    double scan_omega_rad_s = 0.4;      // pathless look-around rate (0 = hold still)
};

struct PipelineConfig {
    CameraConfig camera;
    int slic_regions = 48;
    double slic_compactness = 10.0;
    int slic_iters = 10;

    double map_resolution = 0.25;
    NigPrior prior;
    double risk_level = 0.1;

    // Per frame, a voxel absorbs at most this many of its region's pixels as
    // observations (0 = uncapped). Forces corroboration across several frames
    // before a cell can validate, so one far view of a coarse region cannot
    // clear ground a closer look would reveal as an obstacle.
    int fusion_pixel_cap = 8;
    double z_min = -0.5;  // pillar compression band
    double z_max = 0.5;

    RobotDescription robot;
    LatencyConfig latency;
    double prior_mean = 0.5;  // mock oracle answer for uncovered regions

    // The forward camera cannot see the ground the robot stands on, so each
    // episode starts by trusting the occupied patch: cells within this radius
    // of the start get this many pseudo-observations of their class mean.
    double start_seed_radius_m = 0.5;
    int start_seed_samples = 40;

    RobotDims dims;
    PlannerParams planner;
    MppiParams controller;
    EpisodeLimits limits;

    OracleBackend backend = OracleBackend::Mock;
    LlmConfig llm;

    // Episodes replan every few seconds, so each search gets a smaller budget
    // than a one-shot plan would. The validity bar sits above the planner
    // default: region values blur across class boundaries, and a mostly-grass
    // region brushing an obstacle can reach CVaR just past 0.25 with enough
    // corroboration, so the pipeline keeps such cells out of bounds.
    PipelineConfig() {
        planner.max_iters = 2000;
        planner.validity_threshold = 0.3;
    }
};

struct QueryRecord {
    double dispatch_t = 0.0;
    double arrival_t = 0.0;
    double latency = 0.0;
    int n_regions = 0;
};

enum class EpisodeReason { Goal, Timeout, Stalled };

const char* reason_name(EpisodeReason reason);

struct EpisodeResult {
    bool success = false;
    EpisodeReason reason = EpisodeReason::Timeout;
    double elapsed_s = 0.0;
    double path_length_m = 0.0;
    double min_traversability = 1.0;  // ground truth under the robot, worst tick
    int query_count = 0;
    std::string trace_path;
    std::vector<QueryRecord> queries;
};

// Synthetic forward camera frame: each terrain class in its display color with
// seeded per-pixel grain, sky above the horizon, dark void beyond the world
// edge. Shares the ray model with project_regions, so rendered classes and
// projected voxels agree.
Image render_view(const World& world, const PoseSE2& pose, const CameraConfig& cam);

// One navigation episode at a 10 Hz control rate in simulated time: dispatch
// render->segment->query when the frontier nears, fuse replies after their
// drawn latency, recompress the risk grid, replan on degradation or period,
// and drive with the sampling controller. Deterministic given (world, config,
// seed); writes a JSON-lines trace (one record per tick) when trace_path is
// non-empty.
EpisodeResult run_episode(const World& world, const PipelineConfig& config, std::uint64_t seed,
                          const std::string& trace_path = "");

struct SuiteEntry {
    std::string world_name;
    int successes = 0;
    std::vector<EpisodeResult> episodes;
};

struct SuiteSummary {
    std::vector<std::uint64_t> seeds;
    std::vector<SuiteEntry> entries;
};

SuiteSummary run_suite(const std::vector<World>& worlds, const std::vector<std::uint64_t>& seeds,
                       const PipelineConfig& config, const std::string& trace_dir = "");

std::string episode_to_json(const EpisodeResult& result);
std::string suite_to_json(const SuiteSummary& summary);
std::string suite_table(const SuiteSummary& summary);

}  // namespace zest
