#include "zest/controller.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "zest/errors.hpp"

namespace zest {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_params(const MppiParams& p) {
    if (p.horizon < 1 || p.samples < 1) {
        throw ValidationError("mppi params: horizon and sample count must be positive");
    }
    if (!(p.dt > 0.0) || !(p.lambda > 0.0)) {
        throw ValidationError("mppi params: dt and lambda must be positive");
    }
    for (double w : p.q)
        if (w < 0.0) throw ValidationError("mppi params: Q weights must be >= 0");
    for (double w : p.qn)
        if (w < 0.0) throw ValidationError("mppi params: terminal weights must be >= 0");
    for (double w : p.r)
        if (w < 0.0) throw ValidationError("mppi params: R weights must be >= 0");
    if (p.w1 < 0.0 || !(p.w2 > 0.0)) throw ValidationError("mppi params: w1 >= 0 and w2 > 0 required");
    if (!(p.noise_v > 0.0) || !(p.noise_omega > 0.0)) {
        throw ValidationError("mppi params: sampling noise must be positive");
    }
    if (!(p.u_ref > 0.0) || !(p.v_max > 0.0) || !(p.omega_max > 0.0)) {
        throw ValidationError("mppi params: speeds must be positive");
    }
}

ControlInput clamp_input(const ControlInput& u, const MppiParams& p) {
    return {std::clamp(u.v, -p.v_max, p.v_max), std::clamp(u.omega, -p.omega_max, p.omega_max)};
}

}  // namespace

PoseSE2 dynamics_step(const PoseSE2& state, const ControlInput& u, double dt) {
    if (!(dt > 0.0)) throw ValidationError("dynamics_step: dt must be positive");
    PoseSE2 next;
    next.x = state.x + u.v * std::cos(state.psi) * dt;
    next.y = state.y + u.v * std::sin(state.psi) * dt;
    next.psi = normalize_angle(state.psi + u.omega * dt);
    return next;
}

double speed_factor(double count, double n0, double w2) {
    return 1.0 - std::exp((n0 - count) * w2);
}

std::vector<double> softmin_weights(const std::vector<double>& costs, double lambda) {
    if (costs.empty()) throw ValidationError("softmin: empty cost set");
    if (!(lambda > 0.0)) throw ValidationError("softmin: lambda must be positive");
    double lowest = kInf;
    for (double c : costs) lowest = std::min(lowest, c);
    std::vector<double> weights(costs.size(), 0.0);
    if (lowest == kInf) return weights;  // caller handles the all-invalid case
    double total = 0.0;
    for (std::size_t i = 0; i < costs.size(); ++i) {
        if (costs[i] == kInf) continue;
        weights[i] = std::exp(-(costs[i] - lowest) / lambda);
        total += weights[i];
    }
    for (double& w : weights) w /= total;
    return weights;
}

std::vector<PoseSE2> build_references(const PoseSE2& state, const std::vector<PoseSE2>& path,
                                      const MppiParams& params) {
    check_params(params);
    if (path.empty()) throw ValidationError("build_references: empty path");

    // project the state onto the polyline: nearest point over all segments
    std::size_t seg = 0;
    double seg_t = 0.0;
    double best = kInf;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        const double ax = path[i].x, ay = path[i].y;
        const double bx = path[i + 1].x, by = path[i + 1].y;
        const double dx = bx - ax, dy = by - ay;
        const double len2 = dx * dx + dy * dy;
        double t = len2 > 0.0 ? ((state.x - ax) * dx + (state.y - ay) * dy) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        const double px = ax + t * dx, py = ay + t * dy;
        const double d2 = (state.x - px) * (state.x - px) + (state.y - py) * (state.y - py);
        if (d2 < best) {
            best = d2;
            seg = i;
            seg_t = t;
        }
    }
    if (path.size() == 1) {
        return std::vector<PoseSE2>(static_cast<std::size_t>(params.horizon) + 1, path[0]);
    }

    const double spacing = params.u_ref * params.dt;
    std::vector<PoseSE2> refs;
    refs.reserve(static_cast<std::size_t>(params.horizon) + 1);
    std::size_t i = seg;
    double t = seg_t;
    double carry = 0.0;  // arc length still to consume before the next ref
    for (int k = 0; k <= params.horizon; ++k) {
        // advance `carry` meters along the polyline from (i, t)
        while (carry > 0.0 && i + 1 < path.size()) {
            const double dx = path[i + 1].x - path[i].x;
            const double dy = path[i + 1].y - path[i].y;
            const double seg_len = std::sqrt(dx * dx + dy * dy);
            const double remain = (1.0 - t) * seg_len;
            if (carry < remain || seg_len == 0.0) {
                if (seg_len > 0.0) t += carry / seg_len;
                carry = 0.0;
            } else {
                carry -= remain;
                ++i;
                t = 0.0;
            }
        }
        if (i + 1 >= path.size()) {
            refs.push_back(path.back());
        } else {
            const PoseSE2& a = path[i];
            const PoseSE2& b = path[i + 1];
            const double heading = std::atan2(b.y - a.y, b.x - a.x);
            refs.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), heading});
        }
        carry = spacing;
    }
    return refs;
}

double trajectory_cost(const Trajectory& traj, const std::vector<PoseSE2>& refs,
                       const RiskGrid& grid, const RobotDims& dims, const MppiParams& params) {
    const int n = params.horizon;
    if (static_cast<int>(traj.states.size()) != n + 1 ||
        static_cast<int>(traj.inputs.size()) != n) {
        throw ValidationError("trajectory_cost: trajectory does not match the horizon");
    }
    if (static_cast<int>(refs.size()) != n + 1) {
        throw ValidationError("trajectory_cost: need horizon+1 reference states");
    }

    double cost = 0.0;
    for (int i = 0; i <= n; ++i) {
        const FootprintStats stats = footprint_stats(grid, traj.states[i], dims);
        if (i >= 1) {
            const auto& w = (i == n) ? params.qn : params.q;
            const double ex = traj.states[i].x - refs[i].x;
            const double ey = traj.states[i].y - refs[i].y;
            const double ep = heading_difference(traj.states[i], refs[i]);
            cost += w[0] * ex * ex + w[1] * ey * ey + w[2] * ep * ep;
            cost -= params.w1 * stats.cvar;
        }
        if (i < n) {
            // below the count baseline the raw factor goes negative, which would
            // reward reversing into the unknown; floor the target at a stop
            const double target_v =
                params.u_ref * std::max(0.0, speed_factor(stats.count, params.n0, params.w2));
            const double ev = traj.inputs[i].v - target_v;
            const double ew = traj.inputs[i].omega;
            cost += params.r[0] * ev * ev + params.r[1] * ew * ew;
        }
    }
    return cost;
}

MppiController::MppiController(MppiParams params, RobotDims dims)
    : params_(params), dims_(dims) {
    check_params(params_);
    warm_.assign(static_cast<std::size_t>(params_.horizon), ControlInput{});
}

void MppiController::reset() {
    warm_.assign(static_cast<std::size_t>(params_.horizon), ControlInput{});
}

std::pair<ControlInput, MppiDiagnostics> MppiController::step(const PoseSE2& state,
                                                              const std::vector<PoseSE2>& path,
                                                              const RiskGrid& grid,
                                                              const Bounds& bounds, Rng& rng,
                                                              RolloutStats* stats) {
    const int n = params_.horizon;
    const int k = params_.samples;
    const auto refs = build_references(state, path, params_);

    // shift the previous solution one step, repeating the tail
    std::vector<ControlInput> base(warm_.begin() + 1, warm_.end());
    base.push_back(warm_.back());

    std::vector<std::vector<ControlInput>> inputs(k, std::vector<ControlInput>(n));
    std::vector<double> costs(k, kInf);
    std::vector<double> mean_x(k, 0.0), mean_y(k, 0.0);

    Trajectory traj;
    traj.states.resize(n + 1);
    traj.inputs.resize(n);
    for (int s = 0; s < k; ++s) {
        bool inside = true;
        traj.states[0] = state;
        double sx = 0.0, sy = 0.0;
        for (int i = 0; i < n; ++i) {
            ControlInput u{base[i].v + rng.normal(0.0, params_.noise_v),
                           base[i].omega + rng.normal(0.0, params_.noise_omega)};
            u = clamp_input(u, params_);
            inputs[s][i] = u;
            traj.inputs[i] = u;
            traj.states[i + 1] = dynamics_step(traj.states[i], u, params_.dt);
            if (!bounds.contains(traj.states[i + 1].x, traj.states[i + 1].y)) inside = false;
            sx += traj.states[i + 1].x;
            sy += traj.states[i + 1].y;
        }
        mean_x[s] = sx / n;
        mean_y[s] = sy / n;
        if (inside) costs[s] = trajectory_cost(traj, refs, grid, dims_, params_);
    }

    MppiDiagnostics diag;
    diag.count_at_state = footprint_count(grid, state, dims_);

    const auto weights = softmin_weights(costs, params_.lambda);
    double weight_total = 0.0;
    for (double w : weights) weight_total += w;
    if (weight_total == 0.0) {
        // every rollout left the map: hold position and report the stall
        diag.stalled = true;
        diag.best_cost = kInf;
        reset();
        if (stats) *stats = {weights, mean_x, mean_y};
        return {ControlInput{}, diag};
    }

    std::vector<ControlInput> blended(n);
    for (int s = 0; s < k; ++s) {
        if (weights[s] == 0.0) continue;
        for (int i = 0; i < n; ++i) {
            blended[i].v += weights[s] * inputs[s][i].v;
            blended[i].omega += weights[s] * inputs[s][i].omega;
        }
    }
    warm_ = blended;

    // the epistemic input the controller is responding to: the least-observed
    // ground its committed rollout drives across
    diag.ahead_min_count = kInf;
    PoseSE2 ahead = state;
    for (int i = 0; i < n; ++i) {
        ahead = dynamics_step(ahead, blended[i], params_.dt);
        diag.ahead_min_count =
            std::min(diag.ahead_min_count, footprint_count(grid, ahead, dims_));
    }

    double best = kInf;
    double entropy = 0.0;
    for (int s = 0; s < k; ++s) {
        best = std::min(best, costs[s]);
        if (weights[s] > 0.0) entropy -= weights[s] * std::log(weights[s]);
    }
    diag.best_cost = best;
    diag.weight_entropy = entropy;
    if (stats) *stats = {weights, mean_x, mean_y};
    return {clamp_input(blended[0], params_), diag};
}

}  // namespace zest
