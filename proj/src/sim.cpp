#include "zest/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <utility>

#include <json.hpp>

#include "zest/errors.hpp"
#include "zest/rng.hpp"
#include "zest/segmentation.hpp"
#include "zest/voxel_map.hpp"

namespace zest {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint8_t grain(std::uint8_t base, std::uint64_t h, int lane) {
    const int delta = static_cast<int>((h >> (8 * lane)) % 9) - 4;
    const int value = static_cast<int>(base) + delta;
    return static_cast<std::uint8_t>(std::clamp(value, 0, 255));
}

void check_config(const PipelineConfig& cfg) {
    if (cfg.slic_regions < 2) throw ValidationError("pipeline: need at least 2 regions");
    if (!(cfg.map_resolution > 0.0)) throw ValidationError("pipeline: resolution must be positive");
    if (!(cfg.z_min < cfg.z_max)) throw ValidationError("pipeline: need z_min < z_max");
    if (!(cfg.start_seed_radius_m >= 0.0) || cfg.start_seed_samples < 0) {
        throw ValidationError("pipeline: start seeding must be non-negative");
    }
    if (!(cfg.limits.timeout_s > 0.0) || !(cfg.limits.replan_period_s > 0.0) ||
        !(cfg.limits.query_min_interval_s > 0.0) || !(cfg.limits.query_period_s > 0.0) ||
        !(cfg.limits.frontier_distance_m > 0.0) || !(cfg.limits.stall_window_s > 0.0) ||
        !(cfg.limits.stall_min_progress_m > 0.0)) {
        throw ValidationError("pipeline: episode limits must be positive");
    }
}

struct PendingReply {
    double arrival_t = 0.0;
    std::vector<RegionProjection> projections;
    OracleReply reply;
};

std::size_t nearest_index(const std::vector<PoseSE2>& path, const PoseSE2& pose) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < path.size(); ++i) {
        const double d = position_distance(path[i], pose);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

// True when the remaining path runs out of observed map within max_dist of the
// robot: either an unobserved cell sits on the path or the path itself ends
// (best-effort plans stop at the edge of the trusted region).
bool frontier_within(const std::vector<PoseSE2>& path, const PoseSE2& pose, const RiskGrid& grid,
                     double max_dist) {
    if (path.empty()) return true;
    const std::size_t start = nearest_index(path, pose);
    double acc = 0.0;
    for (std::size_t i = start; i < path.size(); ++i) {
        if (i > start) acc += position_distance(path[i - 1], path[i]);
        if (acc > max_dist) return false;
        if (grid.at_world(path[i].x, path[i].y).count == 0) return true;
    }
    return true;  // path end reached within max_dist
}

double remaining_length(const std::vector<PoseSE2>& path, const PoseSE2& pose) {
    if (path.empty()) return 0.0;
    double acc = position_distance(pose, path[nearest_index(path, pose)]);
    for (std::size_t i = nearest_index(path, pose); i + 1 < path.size(); ++i) {
        acc += position_distance(path[i], path[i + 1]);
    }
    return acc;
}

// Ground the robot has stood on is measured directly (wheels feel it), so the
// map may not talk the planner out of it afterwards: each visited cell keeps a
// CVaR floor just under its experienced traversability. The floor only raises;
// standing on bad ground proves nothing in its favor.
void apply_proven(RiskGrid& grid, const std::map<std::pair<int, int>, double>& proven,
                  std::uint64_t count_floor) {
    for (const auto& [key, m] : proven) {
        const RiskCell& cell = grid.at_index(key.first, key.second);
        const double floor = m - 0.05;
        if (floor <= cell.cvar) continue;
        RiskCell raised = cell;
        raised.cvar = floor;
        raised.count = std::max(raised.count, count_floor);
        raised.observed = true;
        grid.set_index(key.first, key.second, raised);
    }
}

bool path_degraded(const std::vector<PoseSE2>& path, const PoseSE2& pose, const RiskGrid& grid,
                   const RobotDims& dims, const PlannerParams& params) {
    if (path.empty()) return true;
    for (std::size_t i = nearest_index(path, pose); i < path.size(); ++i) {
        if (!is_valid(grid, path[i], dims, params)) return true;
    }
    return false;
}

// One frame through the configured oracle. The mock cannot fail; the live
// backend gets one re-query on an unparsable answer, after which the frame is
// dropped (nullopt) and navigation continues on the current map.
std::optional<OracleReply> query_backend(const PipelineConfig& cfg, const Image& view,
                                         const LabelMap& labels,
                                         const std::vector<RegionProjection>& projections,
                                         const World& world, Rng& oracle_rng) {
    if (cfg.backend == OracleBackend::Mock) {
        return mock_query(world, projections, cfg.latency, oracle_rng, cfg.prior_mean);
    }
    auto [annotated, registry] = number_masks(labels, view);
    (void)registry;
    OracleQuery query;
    query.annotated = std::move(annotated);
    query.n_regions = labels.region_count;
    query.prompt = build_prompt(cfg.robot, labels.region_count);
    for (int attempt = 0; attempt < 2; ++attempt) {
        try {
            return llm_query(cfg.llm, query);
        } catch (const ParseError&) {
        } catch (const LengthError&) {
        }
    }
    return std::nullopt;
}

// The camera never sees the footprint itself, so trust the ground the robot
// is standing on: pseudo-observations of the class mean around the start.
void seed_start_patch(VoxelMap& map, const World& world, const PipelineConfig& cfg) {
    if (cfg.start_seed_samples == 0 || cfg.start_seed_radius_m == 0.0) return;
    const PoseSE2& start = world.start();
    const double res = map.resolution();
    const double r = cfg.start_seed_radius_m;
    std::vector<std::pair<VoxelKey, double>> batch;
    const int span = static_cast<int>(std::ceil(r / res)) + 1;
    const VoxelKey center = map.key_at(start.x, start.y, 0.0);
    for (int dy = -span; dy <= span; ++dy) {
        for (int dx = -span; dx <= span; ++dx) {
            const VoxelKey key{center.ix + dx, center.iy + dy, center.iz};
            const auto c = map.center_of(key);
            if (std::hypot(c[0] - start.x, c[1] - start.y) > r) continue;
            const int cls = world.class_at(c[0], c[1]);
            if (cls < 0) continue;
            const double value = world.terrain(cls).m;
            for (int k = 0; k < cfg.start_seed_samples; ++k) batch.emplace_back(key, value);
        }
    }
    if (!batch.empty()) map.insert_observations(batch);
}

nlohmann::ordered_json episode_json(const EpisodeResult& result) {
    return nlohmann::ordered_json{
        {"format", "episode"},
        {"success", result.success},
        {"reason", reason_name(result.reason)},
        {"elapsed_s", result.elapsed_s},
        {"path_length_m", result.path_length_m},
        {"min_traversability", result.min_traversability},
        {"query_count", result.query_count},
        {"trace", result.trace_path},
    };
}

}  // namespace

const char* reason_name(EpisodeReason reason) {
    switch (reason) {
        case EpisodeReason::Goal: return "goal";
        case EpisodeReason::Timeout: return "timeout";
        case EpisodeReason::Stalled: return "stalled";
    }
    return "unknown";
}

Image render_view(const World& world, const PoseSE2& pose, const CameraConfig& cam) {
    if (!world.inside(pose.x, pose.y)) {
        throw ValidationError("render_view: pose outside the world");
    }
    Image img(cam.width, cam.height);
    for (int v = 0; v < cam.height; ++v) {
        for (int u = 0; u < cam.width; ++u) {
            std::uint8_t r = 174, g = 198, b = 228;  // sky
            const GroundHit hit = pixel_to_ground(cam, pose, u, v);
            if (hit.valid) {
                const int cls = world.class_at(hit.x, hit.y);
                if (cls < 0) {
                    r = g = b = 45;  // beyond the world edge
                } else {
                    const auto& color = world.terrain(cls).color;
                    r = color[0];
                    g = color[1];
                    b = color[2];
                }
            }
            const std::uint64_t h = splitmix(world.seed() ^
                                             (static_cast<std::uint64_t>(u) << 32) ^
                                             static_cast<std::uint64_t>(v));
            img.set(u, v, grain(r, h, 0), grain(g, h, 1), grain(b, h, 2));
        }
    }
    return img;
}

EpisodeResult run_episode(const World& world, const PipelineConfig& config, std::uint64_t seed,
                          const std::string& trace_path) {
    check_config(config);
    const RiskEvaluator risk;
    if (!risk.table().has_level(config.risk_level)) {
        throw ValidationError("pipeline: risk level is not in the quantile table");
    }
    const int start_class = world.class_at(world.start().x, world.start().y);
    if (start_class < 0 ||
        world.terrain(start_class).m <= config.planner.validity_threshold) {
        throw ValidationError("world: start cell class must be traversable above the threshold");
    }
    const PoseSE2 goal_pose{world.goal()[0], world.goal()[1], 0.0};

    Rng oracle_rng(mix_seed(seed, 0xA1));
    Rng control_rng(mix_seed(seed, 0xB2));

    VoxelMap map(config.map_resolution, {0.0, 0.0, 0.0}, config.prior);
    seed_start_patch(map, world, config);
    RiskGrid grid = compress_pillars(map, risk, config.risk_level, config.z_min, config.z_max);
    const Bounds bounds{0.0, 0.0, world.width(), world.height()};
    MppiController controller(config.controller, config.dims);

    std::ofstream trace;
    if (!trace_path.empty()) {
        trace.open(trace_path, std::ios::binary | std::ios::trunc);
        if (!trace) throw ValidationError("run_episode: cannot open trace file: " + trace_path);
    }

    EpisodeResult result;
    result.trace_path = trace_path;

    PoseSE2 pose = world.start();
    std::vector<PoseSE2> path;
    bool have_path = false;
    std::map<std::pair<int, int>, double> proven;
    const auto stand_on = [&](const PoseSE2& p) {
        for (const auto& cell : footprint_cells(p, config.dims, grid.resolution(),
                                                grid.origin_x(), grid.origin_y())) {
            const double cx = (cell[0] + 0.5) * grid.resolution() + grid.origin_x();
            const double cy = (cell[1] + 0.5) * grid.resolution() + grid.origin_y();
            const int cls = world.class_at(cx, cy);
            if (cls < 0) continue;
            proven[{cell[0], cell[1]}] = world.terrain(cls).m;
        }
        apply_proven(grid, proven, static_cast<std::uint64_t>(config.start_seed_samples));
    };
    stand_on(pose);

    const double dt = config.controller.dt;
    const double never = -std::numeric_limits<double>::infinity();
    double last_query_t = never;
    double last_replan_t = never;
    std::uint64_t revision_at_attempt = std::numeric_limits<std::uint64_t>::max();
    std::optional<PendingReply> pending;
    int replan_count = 0;

    double progress_anchor = position_distance(pose, goal_pose);
    double last_progress_t = 0.0;

    double t = 0.0;
    while (true) {
        if (position_distance(pose, goal_pose) <= world.goal_tolerance()) {
            result.success = true;
            result.reason = EpisodeReason::Goal;
            break;
        }
        if (t >= config.limits.timeout_s) {
            result.reason = EpisodeReason::Timeout;
            break;
        }
        if (t - last_progress_t >= config.limits.stall_window_s) {
            result.reason = EpisodeReason::Stalled;
            break;
        }

        // (a) dispatch a query when nothing is in flight and the map is about
        // to run out ahead of the robot (or the fallback timer fires)
        if (!pending && (last_query_t == never ||
                         t - last_query_t >= config.limits.query_min_interval_s)) {
            const bool near_frontier =
                !have_path ||
                frontier_within(path, pose, grid, config.limits.frontier_distance_m);
            if (near_frontier || last_query_t == never ||
                t - last_query_t >= config.limits.query_period_s) {
                const Image view = render_view(world, pose, config.camera);
                LabelMap labels =
                    slic(view, config.slic_regions, config.slic_compactness, config.slic_iters);
                auto projections = project_regions(labels, config.camera, pose, map);
                auto reply = query_backend(config, view, labels, projections, world, oracle_rng);
                last_query_t = t;
                if (reply) {
                    PendingReply entry;
                    entry.arrival_t = t + reply->latency;
                    entry.projections = std::move(projections);
                    entry.reply = std::move(*reply);
                    result.queries.push_back(
                        {t, entry.arrival_t, entry.reply.latency, labels.region_count});
                    ++result.query_count;
                    pending = std::move(entry);
                }
            }
        }

        // (b) fuse a reply once its latency has elapsed, (c) recompress
        if (pending && t >= pending->arrival_t) {
            std::vector<std::pair<VoxelKey, double>> batch;
            const auto& projections = pending->projections;
            for (std::size_t i = 0; i < projections.size(); ++i) {
                const double value = pending->reply.values[i];
                const auto& region = projections[i];
                for (std::size_t j = 0; j < region.voxels.size(); ++j) {
                    int weight = region.pixel_counts[j];
                    if (config.fusion_pixel_cap > 0) {
                        weight = std::min(weight, config.fusion_pixel_cap);
                    }
                    for (int k = 0; k < weight; ++k) {
                        batch.emplace_back(region.voxels[j], value);
                    }
                }
            }
            if (!batch.empty()) {
                map.insert_observations(batch);
                grid = compress_pillars(map, risk, config.risk_level, config.z_min, config.z_max);
                apply_proven(grid, proven,
                             static_cast<std::uint64_t>(config.start_seed_samples));
            }
            pending.reset();
        }

        // (d) replan on new data while pathless, when the path is nearly
        //     consumed and the map has since grown, on degradation, or on period
        const bool periodic = last_replan_t != never &&
                              t - last_replan_t >= config.limits.replan_period_s;
        const bool retry_pathless = !have_path && grid.revision() != revision_at_attempt;
        const double lookahead =
            config.controller.u_ref * config.controller.horizon * config.controller.dt + 1.0;
        const bool starved = have_path && grid.revision() != revision_at_attempt &&
                             remaining_length(path, pose) < lookahead;
        const bool degraded =
            have_path && path_degraded(path, pose, grid, config.dims, config.planner);
        bool replanned = false;
        if (retry_pathless || starved || degraded || periodic) {
            last_replan_t = t;
            revision_at_attempt = grid.revision();
            replanned = true;
            PlannerParams params = config.planner;
            params.seed = mix_seed(seed, 0xC3 + static_cast<std::uint64_t>(replan_count));
            ++replan_count;
            try {
                PlanResult plan = rrt_star(pose, goal_pose, bounds, grid, config.dims, params);
                path = std::move(plan.path.poses);
                have_path = !path.empty();
                controller.reset();
            } catch (const PlanningError&) {
                path.clear();
                have_path = false;  // current footprint not trusted yet; keep observing
            }
        }

        // (e) one control tick; with no path (or a fully consumed one), scan in
        //     place so successive queries see the scene from fresh angles
        //     instead of replaying the same segmentation forever
        ControlInput input;
        MppiDiagnostics diag;
        bool drove = false;
        if (have_path && remaining_length(path, pose) >= 0.3) {
            auto [u, d] = controller.step(pose, path, grid, bounds, control_rng);
            input = u;
            diag = d;
            drove = true;
        } else {
            input.omega = config.limits.scan_omega_rad_s;
        }

        if (trace.is_open()) {
            nlohmann::ordered_json cells = nlohmann::ordered_json::array();
            for (const auto& cell : footprint_cells(pose, config.dims, grid.resolution(),
                                                    grid.origin_x(), grid.origin_y())) {
                cells.push_back(grid.at_index(cell[0], cell[1]).count);
            }
            const RiskCell& here = grid.at_world(pose.x, pose.y);
            nlohmann::ordered_json line{
                {"t", t},
                {"x", pose.x},
                {"y", pose.y},
                {"psi", pose.psi},
                {"v", input.v},
                {"omega", input.omega},
                {"best_cost", drove ? nlohmann::ordered_json(diag.best_cost)
                                    : nlohmann::ordered_json(nullptr)},
                {"count", drove ? nlohmann::ordered_json(diag.count_at_state)
                                : nlohmann::ordered_json(nullptr)},
                {"ahead", drove ? nlohmann::ordered_json(diag.ahead_min_count)
                                : nlohmann::ordered_json(nullptr)},
                {"cvar", here.cvar},
                {"cells", std::move(cells)},
                {"revision", grid.revision()},
            };
            if (replanned) {
                nlohmann::ordered_json verts = nlohmann::ordered_json::array();
                for (const auto& p : path) verts.push_back({p.x, p.y});
                line["path"] = std::move(verts);
            }
            trace << line.dump() << "\n";
        }

        const PoseSE2 next = dynamics_step(pose, input, dt);
        result.path_length_m += position_distance(pose, next);
        pose = next;
        stand_on(pose);

        const int cls = world.class_at(pose.x, pose.y);
        if (cls >= 0) {
            result.min_traversability = std::min(result.min_traversability, world.terrain(cls).m);
        }

        const double goal_dist = position_distance(pose, goal_pose);
        if (progress_anchor - goal_dist >= config.limits.stall_min_progress_m) {
            progress_anchor = goal_dist;
            last_progress_t = t;
        }

        t += dt;
    }

    result.elapsed_s = t;
    return result;
}

SuiteSummary run_suite(const std::vector<World>& worlds, const std::vector<std::uint64_t>& seeds,
                       const PipelineConfig& config, const std::string& trace_dir) {
    SuiteSummary summary;
    summary.seeds = seeds;
    for (const World& world : worlds) {
        SuiteEntry entry;
        entry.world_name = world.name();
        for (std::uint64_t seed : seeds) {
            std::string trace;
            if (!trace_dir.empty()) {
                trace = trace_dir + "/" + world.name() + "_seed" + std::to_string(seed) +
                        ".jsonl";
            }
            EpisodeResult episode = run_episode(world, config, seed, trace);
            entry.successes += episode.success ? 1 : 0;
            entry.episodes.push_back(std::move(episode));
        }
        summary.entries.push_back(std::move(entry));
    }
    return summary;
}

std::string episode_to_json(const EpisodeResult& result) {
    return episode_json(result).dump(2) + "\n";
}

std::string suite_to_json(const SuiteSummary& summary) {
    nlohmann::ordered_json doc{{"format", "suite"}};
    doc["seeds"] = summary.seeds;
    doc["worlds"] = nlohmann::ordered_json::array();
    for (const auto& entry : summary.entries) {
        nlohmann::ordered_json episodes = nlohmann::ordered_json::array();
        for (const auto& episode : entry.episodes) episodes.push_back(episode_json(episode));
        doc["worlds"].push_back(nlohmann::ordered_json{
            {"world", entry.world_name},
            {"runs", entry.episodes.size()},
            {"successes", entry.successes},
            {"episodes", std::move(episodes)},
        });
    }
    return doc.dump(2) + "\n";
}

std::string suite_table(const SuiteSummary& summary) {
    std::string out = "world                runs  success  avg time  avg queries\n";
    char row[128];
    for (const auto& entry : summary.entries) {
        double time_sum = 0.0;
        double query_sum = 0.0;
        for (const auto& episode : entry.episodes) {
            time_sum += episode.elapsed_s;
            query_sum += episode.query_count;
        }
        const double n = entry.episodes.empty() ? 1.0 : static_cast<double>(entry.episodes.size());
        std::snprintf(row, sizeof(row), "%-20s %4zu  %4d/%-2zu  %7.1fs  %9.1f\n",
                      entry.world_name.c_str(), entry.episodes.size(), entry.successes,
                      entry.episodes.size(), time_sum / n, query_sum / n);
        out += row;
    }
    return out;
}

}  // namespace zest
