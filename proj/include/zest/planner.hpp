#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "zest/pose.hpp"
#include "zest/voxel_map.hpp"

namespace zest {

struct RobotDims {
    double length = 0.6;  // along heading, meters
    double width = 0.4;
};

struct PlannerParams {
    double w1 = 2.0;        // CVaR weight
    double w2 = 1.0;        // confidence weight
    double kappa_b = 3.0;   // confidence bias
    int max_iters = 5000;
    double step = 0.5;            // steer distance, meters
    double rewire_radius = 1.5;   // meters
    double goal_tolerance = 0.3;  // meters
    double validity_threshold = 0.25;  // minimum footprint CVaR
    std::uint64_t seed = 1;
};

struct Bounds {
    double min_x = 0.0;
    double min_y = 0.0;
    double max_x = 0.0;
    double max_y = 0.0;

    bool contains(double x, double y) const {
        return x >= min_x && x <= max_x && y >= min_y && y <= max_y;
    }
};

struct Path {
    std::vector<PoseSE2> poses;
    double total_cost = 0.0;
};

struct PlanResult {
    Path path;
    bool reached_goal = false;
    std::vector<double> best_cost_series;  // best goal-path cost after each iteration
    int nodes = 0;
};

// Grid cells (global indices) whose centers fall inside the oriented footprint
// rectangle: dimensions (length/2 x width/2) centered at the pose. Falls back
// to the cell containing the pose when the rectangle captures no center.
std::vector<std::array<int, 2>> footprint_cells(const PoseSE2& pose, const RobotDims& dims,
                                                double resolution, double origin_x, double origin_y);

struct FootprintStats {
    double cvar = 0.0;
    double count = 0.0;
};

// Means over the footprint cells, computed in one rasterization pass.
FootprintStats footprint_stats(const RiskGrid& grid, const PoseSE2& pose, const RobotDims& dims);

double footprint_cvar(const RiskGrid& grid, const PoseSE2& pose, const RobotDims& dims);
double footprint_count(const RiskGrid& grid, const PoseSE2& pose, const RobotDims& dims);

bool is_valid(const RiskGrid& grid, const PoseSE2& pose, const RobotDims& dims,
              const PlannerParams& params);

// Mean over sub-poses (spacing <= resolution/2) of
//   exp(-w1 * footprint_cvar) + w2 * exp(kappa_b - footprint_count),
// multiplied by the edge length. Sub-pose headings follow the segment.
double edge_cost(const RiskGrid& grid, const PoseSE2& a, const PoseSE2& b,
                 const RobotDims& dims, const PlannerParams& params);

PlanResult rrt_star(const PoseSE2& start, const PoseSE2& goal, const Bounds& bounds,
                    const RiskGrid& grid, const RobotDims& dims, const PlannerParams& params);

std::string path_to_json(const PlanResult& result);

}  // namespace zest
