#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "zest/planner.hpp"
#include "zest/pose.hpp"
#include "zest/rng.hpp"
#include "zest/voxel_map.hpp"

namespace zest {

struct ControlInput {
    double v = 0.0;      // m/s
    double omega = 0.0;  // rad/s
};

struct MppiParams {
    int horizon = 30;   // steps
    int samples = 512;  // rollouts per step
    double dt = 0.1;    // seconds
    double lambda = 0.5;

    std::array<double, 3> q{1.0, 1.0, 0.1};     // stage tracking weights (x, y, psi)
    std::array<double, 3> qn{5.0, 5.0, 0.5};    // terminal tracking weights
    std::array<double, 2> r{1.0, 0.05};         // input tracking weights (v, omega)

    double w1 = 1.0;    // CVaR reward weight
    double w2 = 0.2;    // uncertainty-speed rate
    double n0 = 1.0;    // observation-count baseline

    double noise_v = 0.3;      // sampling std, m/s
    double noise_omega = 0.5;  // sampling std, rad/s
    double u_ref = 0.8;        // reference speed, m/s
    double v_max = 1.0;
    double omega_max = 1.5;
};

struct Trajectory {
    std::vector<PoseSE2> states;       // horizon+1 entries
    std::vector<ControlInput> inputs;  // horizon entries
    double cost = 0.0;
};

struct MppiDiagnostics {
    double best_cost = 0.0;
    double weight_entropy = 0.0;
    double count_at_state = 0.0;   // footprint observation count under the robot
    double ahead_min_count = 0.0;  // lowest footprint count along the committed rollout
    bool stalled = false;
};

// Optional per-step introspection for tests and traces.
struct RolloutStats {
    std::vector<double> weights;      // one per rollout, sums to 1
    std::vector<double> mean_x;       // per-rollout mean position
    std::vector<double> mean_y;
};

PoseSE2 dynamics_step(const PoseSE2& state, const ControlInput& u, double dt);

// Speed scaling factor (1 - e^{(n0-n) w2}): 0 at n = n0, rising toward 1.
double speed_factor(double count, double n0, double w2);

// Softmin weights w_k proportional to exp(-(cost_k - min cost)/lambda);
// infinite-cost entries get zero weight. Log-sum-exp stabilized.
std::vector<double> softmin_weights(const std::vector<double>& costs, double lambda);

// Reference states: project the current state onto the path polyline, then
// resample forward at u_ref*dt arc-length spacing (horizon+1 poses, the final
// path pose repeated past the end).
std::vector<PoseSE2> build_references(const PoseSE2& state, const std::vector<PoseSE2>& path,
                                      const MppiParams& params);

double trajectory_cost(const Trajectory& traj, const std::vector<PoseSE2>& refs,
                       const RiskGrid& grid, const RobotDims& dims, const MppiParams& params);

class MppiController {
  public:
    MppiController(MppiParams params, RobotDims dims);

    // One control tick: sample K input sequences around the shifted previous
    // solution, roll out, weight by softmin of trajectory cost, and return the
    // first input of the weighted mean (clamped). Rollouts leaving `bounds`
    // are discarded; if none survive the input is zero and `stalled` is set.
    std::pair<ControlInput, MppiDiagnostics> step(const PoseSE2& state,
                                                  const std::vector<PoseSE2>& path,
                                                  const RiskGrid& grid, const Bounds& bounds,
                                                  Rng& rng, RolloutStats* stats = nullptr);

    void reset();  // drop the warm start (e.g. after a replan)

  private:
    MppiParams params_;
    RobotDims dims_;
    std::vector<ControlInput> warm_;
};

}  // namespace zest
