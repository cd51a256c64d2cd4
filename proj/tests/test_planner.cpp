#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include <doctest.h>

#include "zest/errors.hpp"
#include "zest/planner.hpp"
#include "zest/rng.hpp"

using namespace zest;

namespace {

constexpr double kPi = 3.14159265358979323846;

using CellSet = std::set<std::array<int, 2>>;

CellSet as_set(const std::vector<std::array<int, 2>>& cells) {
    return CellSet(cells.begin(), cells.end());
}

// Independent rasterizer: scan a generous fixed window and test each center
// against the rotated rectangle directly.
CellSet brute_footprint(const PoseSE2& pose, const RobotDims& dims, double res) {
    const double hx = dims.length / 4.0;
    const double hy = dims.width / 4.0;
    const double c = std::cos(pose.psi);
    const double s = std::sin(pose.psi);
    CellSet cells;
    const int span = static_cast<int>(std::ceil((hx + hy) / res)) + 3;
    const int cx = static_cast<int>(std::floor(pose.x / res));
    const int cy = static_cast<int>(std::floor(pose.y / res));
    for (int iy = cy - span; iy <= cy + span; ++iy) {
        for (int ix = cx - span; ix <= cx + span; ++ix) {
            const double wx = (ix + 0.5) * res - pose.x;
            const double wy = (iy + 0.5) * res - pose.y;
            const double lx = c * wx + s * wy;
            const double ly = -s * wx + c * wy;
            if (std::abs(lx) <= hx && std::abs(ly) <= hy) cells.insert({ix, iy});
        }
    }
    if (cells.empty()) cells.insert({cx, cy});
    return cells;
}

RiskGrid uniform_grid(int nx, int ny, double res, double cvar, std::uint64_t count) {
    RiskCell prior{cvar, count, true};
    RiskGrid grid(res, 0.0, 0.0, 0, 0, nx, ny, prior, 1);
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix) grid.set_index(ix, iy, {cvar, count, true});
    return grid;
}

// 12 x 9 m corridor analog: a low-CVaR wall across x in [5.5, 6.5] with one
// high-CVaR gap at y in [4, 5].
RiskGrid corridor_grid() {
    RiskGrid grid = uniform_grid(48, 36, 0.25, 0.85, 12);
    for (int iy = 0; iy < 36; ++iy) {
        for (int ix = 22; ix < 26; ++ix) {
            const double y = (iy + 0.5) * 0.25;
            if (y < 4.0 || y > 5.0) grid.set_index(ix, iy, {0.02, 12, true});
        }
    }
    return grid;
}

double path_length(const Path& path) {
    double len = 0.0;
    for (std::size_t i = 1; i < path.poses.size(); ++i) {
        len += position_distance(path.poses[i - 1], path.poses[i]);
    }
    return len;
}

}  // namespace

TEST_CASE("axis-aligned half-rectangle covers the expected 2x2 block") {
    RobotDims dims{0.4, 0.4};  // half-size rectangle 0.2 x 0.2
    auto cells = footprint_cells({0.2, 0.2, 0.0}, dims, 0.1, 0.0, 0.0);
    CellSet expected{{1, 1}, {1, 2}, {2, 1}, {2, 2}};
    CHECK(as_set(cells) == expected);
}

TEST_CASE("quarter-turn of a square footprint keeps the cell set") {
    RobotDims dims{0.5, 0.5};
    PoseSE2 a{1.03, 0.74, 0.0};
    PoseSE2 b{1.03, 0.74, kPi / 2.0};
    CHECK(as_set(footprint_cells(a, dims, 0.1, 0.0, 0.0)) ==
          as_set(footprint_cells(b, dims, 0.1, 0.0, 0.0)));
}

TEST_CASE("sub-cell footprint falls back to the containing cell") {
    RobotDims dims{0.2, 0.2};  // half-rect 0.1 x 0.1
    auto cells = footprint_cells({1.6, 2.1, 0.3}, dims, 0.25, 0.0, 0.0);
    REQUIRE(cells.size() == 1);
    CHECK(cells[0][0] == 6);
    CHECK(cells[0][1] == 8);
}

TEST_CASE("footprint matches a brute-force rasterization") {
    Rng rng(31);
    for (int trial = 0; trial < 60; ++trial) {
        RobotDims dims{rng.uniform(0.2, 1.4), rng.uniform(0.2, 1.2)};
        const double res = rng.uniform(0.05, 0.4);
        PoseSE2 pose{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0), rng.uniform(-kPi, kPi)};
        CHECK(as_set(footprint_cells(pose, dims, res, 0.0, 0.0)) == brute_footprint(pose, dims, res));
    }
}

TEST_CASE("footprint cvar averages covered cells, prior filling the gaps") {
    RobotDims dims{0.8, 0.8};
    RiskGrid grid = uniform_grid(20, 20, 0.1, 0.6, 5);
    CHECK(footprint_cvar(grid, {1.0, 1.0, 0.0}, dims) == doctest::Approx(0.6).epsilon(1e-12));

    // half the footprint at 0.8, the other half at 0.2
    for (int iy = 0; iy < 20; ++iy)
        for (int ix = 0; ix < 20; ++ix)
            grid.set_index(ix, iy, {iy < 10 ? 0.2 : 0.8, 5, true});
    // pose centered on the y=1.0 boundary, footprint 0.4 x 0.4
    CHECK(footprint_cvar(grid, {1.0, 1.0, 0.0}, dims) == doctest::Approx(0.5).epsilon(1e-12));

    // straddling the observed window edge: recompute directly
    RiskGrid small(0.1, 0.0, 0.0, 0, 0, 4, 4, {-2.0, 1, false}, 1);
    for (int iy = 0; iy < 4; ++iy)
        for (int ix = 0; ix < 4; ++ix) small.set_index(ix, iy, {0.9, 7, true});
    PoseSE2 edge{0.4, 0.2, 0.0};
    const auto cells = footprint_cells(edge, dims, 0.1, 0.0, 0.0);
    double expect = 0.0;
    for (const auto& cell : cells) expect += small.at_index(cell[0], cell[1]).cvar;
    expect /= static_cast<double>(cells.size());
    CHECK(footprint_cvar(small, edge, dims) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(expect < 0.9);  // prior actually contributed
}

TEST_CASE("edge cost reduces to 2x length when both exponents vanish") {
    PlannerParams params;
    params.w1 = 2.0;
    params.w2 = 1.0;
    params.kappa_b = 3.0;
    RobotDims dims{0.4, 0.4};
    RiskGrid grid = uniform_grid(60, 20, 0.25, 0.0, 3);  // cvar 0, count = kappa_b
    const double cost = edge_cost(grid, {2.0, 2.0, 0.0}, {3.0, 2.0, 0.0}, dims, params);
    CHECK(cost == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("raising cvar strictly lowers edge cost") {
    PlannerParams params;
    RobotDims dims{0.4, 0.4};
    RiskGrid low = uniform_grid(60, 20, 0.25, 0.1, 5);
    RiskGrid high = uniform_grid(60, 20, 0.25, 0.9, 5);
    PoseSE2 a{2.0, 2.0, 0.0}, b{6.0, 3.0, 0.0};
    CHECK(edge_cost(high, a, b, dims, params) < edge_cost(low, a, b, dims, params));
}

TEST_CASE("equal-length corridors: the safer one costs less") {
    PlannerParams params;
    RobotDims dims{0.4, 0.4};
    RiskGrid grid = uniform_grid(40, 40, 0.25, 0.5, 5);
    // corridor A along y=2 is risky, corridor B along y=7 is safe
    for (int ix = 0; ix < 40; ++ix) {
        for (int iy = 4; iy <= 11; ++iy) grid.set_index(ix, iy, {0.15, 5, true});
        for (int iy = 24; iy <= 31; ++iy) grid.set_index(ix, iy, {0.9, 5, true});
    }
    const double risky = edge_cost(grid, {2.0, 2.0, 0.0}, {8.0, 2.0, 0.0}, dims, params);
    const double safe = edge_cost(grid, {2.0, 7.0, 0.0}, {8.0, 7.0, 0.0}, dims, params);
    CHECK(safe < risky);
}

TEST_CASE("uniform field makes edge cost proportional to length") {
    PlannerParams params;
    RobotDims dims{0.4, 0.4};
    RiskGrid grid = uniform_grid(80, 20, 0.25, 0.7, 9);
    const double one = edge_cost(grid, {2.0, 2.0, 0.0}, {5.0, 2.0, 0.0}, dims, params);
    const double two = edge_cost(grid, {2.0, 2.0, 0.0}, {8.0, 2.0, 0.0}, dims, params);
    CHECK(two == doctest::Approx(2.0 * one).epsilon(1e-12));
}

TEST_CASE("validity compares footprint cvar against the threshold") {
    PlannerParams params;
    params.validity_threshold = 0.3;
    RobotDims dims{0.4, 0.4};
    CHECK(is_valid(uniform_grid(10, 10, 0.25, 0.9, 5), {1.0, 1.0, 0.0}, dims, params));
    CHECK_FALSE(is_valid(uniform_grid(10, 10, 0.25, 0.0, 5), {1.0, 1.0, 0.0}, dims, params));
    params.validity_threshold = 0.0;
    CHECK(is_valid(uniform_grid(10, 10, 0.25, 0.0, 5), {1.0, 1.0, 0.0}, dims, params));
}

TEST_CASE("open uniform world: planned length near the straight line") {
    RobotDims dims;
    RiskGrid grid = uniform_grid(40, 40, 0.25, 0.9, 12);
    Bounds bounds{0.0, 0.0, 10.0, 10.0};
    PoseSE2 start{1.0, 1.0, 0.0};
    PoseSE2 goal{9.0, 9.0, 0.0};
    const double straight = position_distance(start, goal);
    int ok = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        PlannerParams params;
        params.seed = seed;
        auto result = rrt_star(start, goal, bounds, grid, dims, params);
        REQUIRE(result.reached_goal);
        // allow the goal-tolerance shortfall on top of the 10% length margin
        if (path_length(result.path) <= 1.10 * straight) ++ok;
        REQUIRE(std::is_sorted(result.best_cost_series.rbegin(), result.best_cost_series.rend()));
    }
    CHECK(ok == 20);
}

TEST_CASE("goal at start returns the trivial path") {
    RobotDims dims;
    PlannerParams params;
    RiskGrid grid = uniform_grid(20, 20, 0.25, 0.9, 5);
    Bounds bounds{0.0, 0.0, 5.0, 5.0};
    auto result = rrt_star({2.0, 2.0, 0.3}, {2.1, 2.0, 0.0}, bounds, grid, dims, params);
    CHECK(result.reached_goal);
    REQUIRE(result.path.poses.size() == 1);
    CHECK(result.path.total_cost == 0.0);
}

TEST_CASE("corridor world: paths use the only viable gap") {
    RobotDims dims;
    RiskGrid grid = corridor_grid();
    Bounds bounds{0.0, 0.0, 12.0, 9.0};
    PoseSE2 start{2.0, 4.5, 0.0};
    PoseSE2 goal{10.0, 4.5, 0.0};
    int through_gap = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        PlannerParams params;
        params.seed = seed;
        auto result = rrt_star(start, goal, bounds, grid, dims, params);
        REQUIRE(std::is_sorted(result.best_cost_series.rbegin(), result.best_cost_series.rend()));
        if (!result.reached_goal) continue;
        bool in_gap = true;
        bool crossed = false;
        for (const auto& pose : result.path.poses) {
            if (pose.x > 5.4 && pose.x < 6.6) {
                crossed = true;
                if (pose.y < 3.8 || pose.y > 5.2) in_gap = false;
            }
        }
        if (crossed && in_gap) ++through_gap;

        // extracted paths obey the step bound and stay valid
        for (std::size_t i = 1; i < result.path.poses.size(); ++i) {
            CHECK(position_distance(result.path.poses[i - 1], result.path.poses[i]) <=
                  params.step + 1e-9);
        }
        for (const auto& pose : result.path.poses) {
            CHECK(is_valid(grid, pose, dims, params));
        }
    }
    CHECK(through_gap >= 19);
}

TEST_CASE("planner is deterministic for a fixed seed") {
    RobotDims dims;
    RiskGrid grid = corridor_grid();
    Bounds bounds{0.0, 0.0, 12.0, 9.0};
    PlannerParams params;
    params.seed = 424242;
    auto a = rrt_star({2.0, 4.5, 0.0}, {10.0, 4.5, 0.0}, bounds, grid, dims, params);
    auto b = rrt_star({2.0, 4.5, 0.0}, {10.0, 4.5, 0.0}, bounds, grid, dims, params);
    REQUIRE(a.path.poses.size() == b.path.poses.size());
    for (std::size_t i = 0; i < a.path.poses.size(); ++i) {
        CHECK(a.path.poses[i].x == b.path.poses[i].x);
        CHECK(a.path.poses[i].y == b.path.poses[i].y);
        CHECK(a.path.poses[i].psi == b.path.poses[i].psi);
    }
    CHECK(a.path.total_cost == b.path.total_cost);
    CHECK(a.best_cost_series == b.best_cost_series);
}

TEST_CASE("invalid start and out-of-bounds inputs are rejected") {
    RobotDims dims;
    PlannerParams params;
    RiskGrid bad = uniform_grid(20, 20, 0.25, 0.05, 5);
    Bounds bounds{0.0, 0.0, 5.0, 5.0};
    CHECK_THROWS_AS(rrt_star({1.0, 1.0, 0.0}, {4.0, 4.0, 0.0}, bounds, bad, dims, params),
                    PlanningError);
    RiskGrid good = uniform_grid(20, 20, 0.25, 0.9, 5);
    CHECK_THROWS_AS(rrt_star({1.0, 1.0, 0.0}, {7.0, 4.0, 0.0}, bounds, good, dims, params),
                    ValidationError);
    PlannerParams loose = params;
    loose.goal_tolerance = 2.0;  // must stay below the rewire radius
    CHECK_THROWS_AS(rrt_star({1.0, 1.0, 0.0}, {4.0, 4.0, 0.0}, bounds, good, dims, loose),
                    ValidationError);
}

TEST_CASE("unreachable goal yields a flagged best-effort path") {
    RobotDims dims;
    RiskGrid grid = uniform_grid(40, 40, 0.25, 0.9, 8);
    // wall the right half off completely
    for (int iy = 0; iy < 40; ++iy)
        for (int ix = 24; ix < 40; ++ix) grid.set_index(ix, iy, {0.02, 8, true});
    Bounds bounds{0.0, 0.0, 10.0, 10.0};
    PlannerParams params;
    params.max_iters = 1500;
    auto result = rrt_star({1.0, 5.0, 0.0}, {9.0, 5.0, 0.0}, bounds, grid, dims, params);
    CHECK_FALSE(result.reached_goal);
    REQUIRE(!result.path.poses.empty());
    // best-effort endpoint approaches the wall but cannot pass x = 6
    CHECK(result.path.poses.back().x < 6.2);
    CHECK(result.path.poses.back().x > 3.0);
    for (double c : result.best_cost_series) CHECK(c == std::numeric_limits<double>::infinity());
}

TEST_CASE("path json lists poses with cost and goal flag") {
    PlanResult result;
    result.reached_goal = true;
    result.path.total_cost = 1.5;
    result.path.poses = {{0.0, 0.0, 0.0}, {0.5, 0.0, 0.1}};
    const std::string text = path_to_json(result);
    CHECK(text.find("\"format\": \"path\"") != std::string::npos);
    CHECK(text.find("\"reached_goal\": true") != std::string::npos);
    CHECK(text.find("\"total_cost\": 1.5") != std::string::npos);
    CHECK(text.find("\"psi\": 0.1") != std::string::npos);
}
