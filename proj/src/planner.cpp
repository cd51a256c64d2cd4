#include "zest/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "zest/errors.hpp"
#include "zest/rng.hpp"

namespace zest {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = 3.14159265358979323846;

void check_params(const PlannerParams& p) {
    if (!(p.w1 > 0.0) || !(p.w2 > 0.0) || !(p.kappa_b > 0.0)) {
        throw ValidationError("planner params: weights must be positive");
    }
    if (p.max_iters < 1) throw ValidationError("planner params: max_iters must be positive");
    if (!(p.step > 0.0) || !(p.rewire_radius > 0.0) || !(p.goal_tolerance > 0.0)) {
        throw ValidationError("planner params: distances must be positive");
    }
    if (p.validity_threshold < 0.0) {
        throw ValidationError("planner params: validity threshold must be >= 0");
    }
    if (!(p.goal_tolerance < p.rewire_radius)) {
        throw ValidationError("planner params: goal tolerance must be below the rewire radius");
    }
}

double se2_distance(const PoseSE2& a, const PoseSE2& b) {
    return position_distance(a, b) + 0.5 * std::abs(heading_difference(a, b));
}

struct Node {
    PoseSE2 pose;
    int parent = -1;
    double cost = 0.0;
    std::vector<int> children;
};

// Sub-pose count for an edge: spacing at most resolution/2, and a multiple of
// the path densification intervals so every densified pose is a checked pose.
int edge_intervals(double length, double resolution, double step) {
    if (length <= 0.0) return 1;
    const int coarse = std::max(1, static_cast<int>(std::ceil(length / step)));
    const int fine = std::max(1, static_cast<int>(std::ceil(length / (resolution / 2.0))));
    return coarse * ((fine + coarse - 1) / coarse);
}

struct EdgeEval {
    bool valid = false;
    double cost = kInf;
};

// One pass over the edge's sub-poses: accumulates the cost integrand and
// checks bounds + footprint validity at every sub-pose.
EdgeEval evaluate_edge(const RiskGrid& grid, const PoseSE2& a, const PoseSE2& b,
                       const Bounds& bounds, const RobotDims& dims, const PlannerParams& params) {
    EdgeEval eval;
    const double length = position_distance(a, b);
    const double heading = length > 1e-12 ? std::atan2(b.y - a.y, b.x - a.x) : b.psi;
    const int intervals = edge_intervals(length, grid.resolution(), params.step);
    double sum = 0.0;
    for (int i = 0; i <= intervals; ++i) {
        const double t = static_cast<double>(i) / intervals;
        PoseSE2 sub{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), heading};
        if (!bounds.contains(sub.x, sub.y)) return eval;
        const FootprintStats stats = footprint_stats(grid, sub, dims);
        if (stats.cvar < params.validity_threshold) return eval;
        sum += std::exp(-params.w1 * stats.cvar) +
               params.w2 * std::exp(params.kappa_b - stats.count);
    }
    eval.valid = true;
    eval.cost = sum / (intervals + 1) * length;
    return eval;
}

}  // namespace

std::vector<std::array<int, 2>> footprint_cells(const PoseSE2& pose, const RobotDims& dims,
                                                double resolution, double origin_x,
                                                double origin_y) {
    if (!(dims.length > 0.0) || !(dims.width > 0.0)) {
        throw ValidationError("footprint: robot dimensions must be positive");
    }
    if (!(resolution > 0.0)) throw ValidationError("footprint: resolution must be positive");

    const double hx = dims.length / 4.0;  // half-extents of the half-size rectangle
    const double hy = dims.width / 4.0;
    const double c = std::cos(pose.psi);
    const double s = std::sin(pose.psi);

    const double reach = std::sqrt(hx * hx + hy * hy);
    const int ix_lo = static_cast<int>(std::floor((pose.x - reach - origin_x) / resolution));
    const int ix_hi = static_cast<int>(std::floor((pose.x + reach - origin_x) / resolution));
    const int iy_lo = static_cast<int>(std::floor((pose.y - reach - origin_y) / resolution));
    const int iy_hi = static_cast<int>(std::floor((pose.y + reach - origin_y) / resolution));

    std::vector<std::array<int, 2>> cells;
    for (int iy = iy_lo; iy <= iy_hi; ++iy) {
        for (int ix = ix_lo; ix <= ix_hi; ++ix) {
            const double wx = origin_x + (ix + 0.5) * resolution - pose.x;
            const double wy = origin_y + (iy + 0.5) * resolution - pose.y;
            const double lx = c * wx + s * wy;
            const double ly = -s * wx + c * wy;
            if (std::abs(lx) <= hx && std::abs(ly) <= hy) cells.push_back({ix, iy});
        }
    }
    if (cells.empty()) {
        cells.push_back({static_cast<int>(std::floor((pose.x - origin_x) / resolution)),
                         static_cast<int>(std::floor((pose.y - origin_y) / resolution))});
    }
    return cells;
}

FootprintStats footprint_stats(const RiskGrid& grid, const PoseSE2& pose, const RobotDims& dims) {
    const auto cells = footprint_cells(pose, dims, grid.resolution(), grid.origin_x(), grid.origin_y());
    FootprintStats stats;
    stats.count = std::numeric_limits<double>::infinity();
    for (const auto& cell : cells) {
        const RiskCell& rc = grid.at_index(cell[0], cell[1]);
        stats.cvar += rc.cvar;
        // the footprint is only as trusted as its least-observed cell
        stats.count = std::min(stats.count, static_cast<double>(rc.count));
    }
    stats.cvar /= static_cast<double>(cells.size());
    return stats;
}

double footprint_cvar(const RiskGrid& grid, const PoseSE2& pose, const RobotDims& dims) {
    return footprint_stats(grid, pose, dims).cvar;
}

double footprint_count(const RiskGrid& grid, const PoseSE2& pose, const RobotDims& dims) {
    return footprint_stats(grid, pose, dims).count;
}

bool is_valid(const RiskGrid& grid, const PoseSE2& pose, const RobotDims& dims,
              const PlannerParams& params) {
    return footprint_cvar(grid, pose, dims) >= params.validity_threshold;
}

double edge_cost(const RiskGrid& grid, const PoseSE2& a, const PoseSE2& b, const RobotDims& dims,
                 const PlannerParams& params) {
    const double length = position_distance(a, b);
    if (length <= 1e-12) return 0.0;
    const double heading = std::atan2(b.y - a.y, b.x - a.x);
    const int intervals = edge_intervals(length, grid.resolution(), params.step);
    double sum = 0.0;
    for (int i = 0; i <= intervals; ++i) {
        const double t = static_cast<double>(i) / intervals;
        PoseSE2 sub{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), heading};
        const FootprintStats stats = footprint_stats(grid, sub, dims);
        sum += std::exp(-params.w1 * stats.cvar) +
               params.w2 * std::exp(params.kappa_b - stats.count);
    }
    return sum / (intervals + 1) * length;
}

PlanResult rrt_star(const PoseSE2& start, const PoseSE2& goal, const Bounds& bounds,
                    const RiskGrid& grid, const RobotDims& dims, const PlannerParams& params) {
    check_params(params);
    if (!(bounds.max_x > bounds.min_x) || !(bounds.max_y > bounds.min_y)) {
        throw ValidationError("rrt: degenerate bounds");
    }
    if (!bounds.contains(start.x, start.y) || !bounds.contains(goal.x, goal.y)) {
        throw ValidationError("rrt: start and goal must lie within bounds");
    }
    if (!is_valid(grid, start, dims, params)) {
        throw PlanningError("rrt: start pose fails the footprint validity check");
    }

    PlanResult result;
    if (position_distance(start, goal) <= params.goal_tolerance) {
        result.path.poses = {start};
        result.path.total_cost = 0.0;
        result.reached_goal = true;
        result.best_cost_series = {0.0};
        result.nodes = 1;
        return result;
    }

    Rng rng(params.seed);
    std::vector<Node> nodes;
    nodes.push_back({start, -1, 0.0, {}});
    std::vector<int> goal_nodes;

    auto densify = [&](int leaf) {
        std::vector<int> chain;
        for (int i = leaf; i >= 0; i = nodes[i].parent) chain.push_back(i);
        std::reverse(chain.begin(), chain.end());
        Path path;
        path.total_cost = nodes[leaf].cost;
        path.poses.push_back(nodes[chain[0]].pose);
        for (std::size_t e = 1; e < chain.size(); ++e) {
            const PoseSE2& a = nodes[chain[e - 1]].pose;
            const PoseSE2& b = nodes[chain[e]].pose;
            const double length = position_distance(a, b);
            const double heading = length > 1e-12 ? std::atan2(b.y - a.y, b.x - a.x) : b.psi;
            const int pieces = std::max(1, static_cast<int>(std::ceil(length / params.step)));
            for (int i = 1; i <= pieces; ++i) {
                const double t = static_cast<double>(i) / pieces;
                path.poses.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), heading});
            }
        }
        return path;
    };

    for (int iter = 0; iter < params.max_iters; ++iter) {
        // goal-biased uniform sampling
        PoseSE2 sample;
        if (rng.uniform() < 0.05) {
            sample = goal;
        } else {
            sample.x = rng.uniform(bounds.min_x, bounds.max_x);
            sample.y = rng.uniform(bounds.min_y, bounds.max_y);
            sample.psi = normalize_angle(rng.uniform(-kPi, kPi));
        }

        int nearest = 0;
        double nearest_dist = kInf;
        for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
            const double d = se2_distance(nodes[i].pose, sample);
            if (d < nearest_dist) {
                nearest_dist = d;
                nearest = i;
            }
        }

        // steer from nearest toward the sample by at most one step
        const PoseSE2& from = nodes[nearest].pose;
        const double dist = position_distance(from, sample);
        PoseSE2 fresh;
        if (dist <= 1e-9) {
            fresh = {from.x, from.y, sample.psi};  // in-place rotation
        } else {
            const double frac = std::min(1.0, params.step / dist);
            fresh.x = from.x + frac * (sample.x - from.x);
            fresh.y = from.y + frac * (sample.y - from.y);
            fresh.psi = std::atan2(sample.y - from.y, sample.x - from.x);
        }
        if (!bounds.contains(fresh.x, fresh.y) || !is_valid(grid, fresh, dims, params)) {
            result.best_cost_series.push_back(goal_nodes.empty() ? kInf
                                                                 : result.best_cost_series.back());
            continue;
        }

        // candidate parents: the near set, with nearest as fallback
        std::vector<int> near;
        for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
            if (se2_distance(nodes[i].pose, fresh) <= params.rewire_radius) near.push_back(i);
        }
        if (near.empty()) near.push_back(nearest);

        int parent = -1;
        double best_cost = kInf;
        PoseSE2 best_pose = fresh;
        for (int cand : near) {
            PoseSE2 arrived = fresh;
            const double seg = position_distance(nodes[cand].pose, fresh);
            arrived.psi = seg > 1e-12 ? std::atan2(fresh.y - nodes[cand].pose.y,
                                                   fresh.x - nodes[cand].pose.x)
                                      : fresh.psi;
            const EdgeEval eval = evaluate_edge(grid, nodes[cand].pose, arrived, bounds, dims, params);
            if (!eval.valid) continue;
            const double total = nodes[cand].cost + eval.cost;
            if (total < best_cost) {
                best_cost = total;
                parent = cand;
                best_pose = arrived;
            }
        }
        if (parent < 0) {
            result.best_cost_series.push_back(goal_nodes.empty() ? kInf
                                                                 : result.best_cost_series.back());
            continue;
        }

        const int fresh_index = static_cast<int>(nodes.size());
        nodes.push_back({best_pose, parent, best_cost, {}});
        nodes[parent].children.push_back(fresh_index);
        if (position_distance(best_pose, goal) <= params.goal_tolerance) {
            goal_nodes.push_back(fresh_index);
        }

        // rewire: adopt near nodes whose cost-to-come drops through the new node
        for (int cand : near) {
            if (cand == parent) continue;
            PoseSE2 moved = nodes[cand].pose;
            const double seg = position_distance(best_pose, moved);
            if (seg > 1e-12) moved.psi = std::atan2(moved.y - best_pose.y, moved.x - best_pose.x);
            const EdgeEval eval = evaluate_edge(grid, best_pose, moved, bounds, dims, params);
            if (!eval.valid) continue;
            const double through = best_cost + eval.cost;
            if (through < nodes[cand].cost - 1e-12) {
                auto& old_children = nodes[nodes[cand].parent].children;
                old_children.erase(std::find(old_children.begin(), old_children.end(), cand));
                const double delta = through - nodes[cand].cost;
                nodes[cand].parent = fresh_index;
                nodes[cand].pose = moved;
                nodes[fresh_index].children.push_back(cand);
                // costs of whole subtrees shift by the same delta
                std::vector<int> stack{cand};
                while (!stack.empty()) {
                    const int idx = stack.back();
                    stack.pop_back();
                    nodes[idx].cost += delta;
                    for (int child : nodes[idx].children) stack.push_back(child);
                }
            }
        }

        double best_goal = kInf;
        for (int idx : goal_nodes) best_goal = std::min(best_goal, nodes[idx].cost);
        result.best_cost_series.push_back(best_goal);
    }

    result.nodes = static_cast<int>(nodes.size());
    if (!goal_nodes.empty()) {
        int best = goal_nodes.front();
        for (int idx : goal_nodes) {
            if (nodes[idx].cost < nodes[best].cost) best = idx;
        }
        result.path = densify(best);
        result.reached_goal = true;
    } else {
        int best = 0;
        double best_dist = position_distance(nodes[0].pose, goal);
        for (int i = 1; i < static_cast<int>(nodes.size()); ++i) {
            const double d = position_distance(nodes[i].pose, goal);
            if (d < best_dist) {
                best_dist = d;
                best = i;
            }
        }
        result.path = densify(best);
        result.reached_goal = false;
    }
    return result;
}

std::string path_to_json(const PlanResult& result) {
    nlohmann::json poses = nlohmann::json::array();
    for (const auto& p : result.path.poses) {
        poses.push_back({{"x", p.x}, {"y", p.y}, {"psi", p.psi}});
    }
    nlohmann::json root{{"format", "path"},
                        {"reached_goal", result.reached_goal},
                        {"total_cost", result.path.total_cost},
                        {"poses", poses}};
    return root.dump(2) + "\n";
}

}  // namespace zest
