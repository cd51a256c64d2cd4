#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "zest/camera.hpp"
#include "zest/image.hpp"
#include "zest/rng.hpp"
#include "zest/segmentation.hpp"
#include "zest/voxel_map.hpp"
#include "zest/world.hpp"

namespace zest {

struct RobotDescription {
    double width = 0.4;
    double length = 0.6;
    double height = 0.3;
    std::string locomotion = "four-wheel differential drive, no suspension";
    // (terrain name, reference traversability in [0,1]); at least two entries
    std::vector<std::pair<std::string, double>> references = {
        {"short grass", 0.9},
        {"flat pavement", 0.95},
        {"large rocks or walls", 0.05},
    };
};

struct OracleQuery {
    Image annotated;
    int n_regions = 0;
    std::string prompt;
};

struct OracleReply {
    std::vector<double> values;          // one per region, ascending region id
    double latency = 0.0;                // seconds
    std::vector<int> uncovered_regions;  // diagnostics: ids answered with the prior mean
};

struct RegionObservation {
    int region_id = 0;
    double value = 0.5;
    std::vector<VoxelKey> voxels;
};

// Ground coverage of one image region: sorted, deduplicated voxels plus their
// ground-plane centers (used by the mock oracle as the region's world footprint).
// pixel_counts[i] is the number of pixel rays binned into voxels[i], so fusion
// can weight each voxel by how much of the image actually looked at it.
struct RegionProjection {
    int region_id = 0;
    std::vector<VoxelKey> voxels;
    std::vector<std::array<double, 2>> points;
    std::vector<int> pixel_counts;
};

struct LatencyConfig {
    double mu = 0.458;     // lognormal location: ~80% of draws in 1..2.5 s
    double sigma = 0.3575; // lognormal shape
    double min_s = 0.2;
    double max_s = 5.0;
    bool zero = false;     // draw nothing, report 0 (unit tests, offline tools)
};

double draw_latency(const LatencyConfig& cfg, Rng& rng);

std::string build_prompt(const RobotDescription& robot, int n_regions);

// Extracts the first bracketed comma-separated numeric list from free-form
// text and clamps each value to [0, 1]. The list length must equal n_regions.
std::vector<double> parse_reply(const std::string& text, int n_regions, int* clamped = nullptr);

// Casts a ray through every pixel, intersects it with the ground plane, and
// bins hits within the camera range into the map's voxel grid, grouped by the
// pixel's region label. Regions the ground never reaches come back empty.
std::vector<RegionProjection> project_regions(const LabelMap& labels, const CameraConfig& cam,
                                              const PoseSE2& pose, const VoxelMap& geometry);

// Ground-truth-backed stand-in for the vision oracle: per region, one draw
// from N(mbar, sbar^2) where (mbar, sbar) average the terrain classes under the
// region's footprint, clamped to [0, 1]. Uncovered regions get prior_mean and
// are flagged. Values are drawn before latency so the value stream does not
// depend on the latency mode.
OracleReply mock_query(const World& world, const std::vector<RegionProjection>& regions,
                       const LatencyConfig& latency, Rng& rng, double prior_mean = 0.5);

std::vector<RegionObservation> to_observations(const std::vector<RegionProjection>& regions,
                                               const OracleReply& reply);

}  // namespace zest
