#include "zest/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "zest/errors.hpp"

namespace zest {

namespace {

std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

void check_robot(const RobotDescription& robot) {
    if (!(robot.width > 0.0) || !(robot.length > 0.0) || !(robot.height > 0.0)) {
        throw ValidationError("robot description: dimensions must be positive");
    }
    if (robot.references.size() < 2) {
        throw ValidationError("robot description: need at least two reference terrains");
    }
    for (const auto& [name, value] : robot.references) {
        if (name.empty() || value < 0.0 || value > 1.0) {
            throw ValidationError("robot description: reference '" + name + "' out of range");
        }
    }
}

// Parse the contents between one '[' ']' pair as a comma-separated list of
// finite numbers. Returns false if anything inside fails to parse.
bool parse_bracket(const std::string& inner, std::vector<double>& out) {
    out.clear();
    std::size_t pos = 0;
    while (true) {
        std::size_t comma = inner.find(',', pos);
        std::string token = inner.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        const char* begin = token.c_str();
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        if (end == begin) return false;
        while (*end == ' ' || *end == '\t' || *end == '\n' || *end == '\r') ++end;
        if (*end != '\0') return false;
        if (!std::isfinite(v)) return false;
        out.push_back(v);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return !out.empty();
}

}  // namespace

double draw_latency(const LatencyConfig& cfg, Rng& rng) {
    if (cfg.zero) return 0.0;
    double v = rng.lognormal(cfg.mu, cfg.sigma);
    return std::clamp(v, cfg.min_s, cfg.max_s);
}

std::string build_prompt(const RobotDescription& robot, int n_regions) {
    check_robot(robot);
    if (n_regions < 1) throw ValidationError("build_prompt: n_regions must be at least 1");

    std::ostringstream out;
    out << "You are assessing terrain for a ground robot.\n";
    out << "Robot: " << format_value(robot.length) << " m long, " << format_value(robot.width)
        << " m wide, " << format_value(robot.height) << " m tall. " << robot.locomotion << "\n";
    out << "Traversability is a value between 0 and 1, where 0 is impassable and 1 is "
           "effortless for this robot.\n";
    out << "Reference terrains:\n";
    for (const auto& [name, value] : robot.references) {
        out << "- " << name << ": " << format_value(value) << "\n";
    }
    out << "The attached image is divided into " << n_regions
        << " regions, each labeled with a white number. Estimate the traversability of the "
           "terrain inside each region for this robot.\n";
    out << "Reply with a list of " << n_regions << " number" << (n_regions == 1 ? "" : "s")
        << " in [0,1], one per numbered region in ascending label order, and nothing else. "
           "Format: [0.8, 0.2, ...]\n";
    return out.str();
}

std::vector<double> parse_reply(const std::string& text, int n_regions, int* clamped) {
    if (clamped) *clamped = 0;
    std::vector<double> values;
    bool found = false;
    std::size_t open = text.find('[');
    while (open != std::string::npos) {
        std::size_t close = text.find(']', open + 1);
        if (close == std::string::npos) break;
        if (parse_bracket(text.substr(open + 1, close - open - 1), values)) {
            found = true;
            break;
        }
        open = text.find('[', open + 1);
    }
    if (!found) throw ParseError("oracle reply: no bracketed numeric list found");
    if (static_cast<int>(values.size()) != n_regions) {
        throw LengthError("oracle reply: expected " + std::to_string(n_regions) + " values, got " +
                          std::to_string(values.size()));
    }
    for (double& v : values) {
        double c = std::clamp(v, 0.0, 1.0);
        if (c != v && clamped) ++*clamped;
        v = c;
    }
    return values;
}

std::vector<RegionProjection> project_regions(const LabelMap& labels, const CameraConfig& cam,
                                              const PoseSE2& pose, const VoxelMap& geometry) {
    if (labels.width != cam.width || labels.height != cam.height) {
        throw ValidationError("project_regions: label map does not match the camera image size");
    }
    std::vector<RegionProjection> regions(labels.region_count);
    for (int i = 0; i < labels.region_count; ++i) regions[i].region_id = i + 1;

    for (int v = 0; v < labels.height; ++v) {
        for (int u = 0; u < labels.width; ++u) {
            GroundHit hit = pixel_to_ground(cam, pose, u, v);
            if (!hit.valid) continue;
            int label = labels.at(u, v);
            regions[label - 1].voxels.push_back(geometry.key_at(hit.x, hit.y, 0.0));
        }
    }
    auto key_less = [](const VoxelKey& a, const VoxelKey& b) {
        if (a.ix != b.ix) return a.ix < b.ix;
        if (a.iy != b.iy) return a.iy < b.iy;
        return a.iz < b.iz;
    };
    for (auto& region : regions) {
        std::sort(region.voxels.begin(), region.voxels.end(), key_less);
        std::vector<VoxelKey> unique_keys;
        for (const VoxelKey& key : region.voxels) {
            if (unique_keys.empty() || !(unique_keys.back() == key)) {
                unique_keys.push_back(key);
                region.pixel_counts.push_back(1);
            } else {
                ++region.pixel_counts.back();
            }
        }
        region.voxels = std::move(unique_keys);
        region.points.reserve(region.voxels.size());
        for (const VoxelKey& key : region.voxels) {
            auto center = geometry.center_of(key);
            region.points.push_back({center[0], center[1]});
        }
    }
    return regions;
}

OracleReply mock_query(const World& world, const std::vector<RegionProjection>& regions,
                       const LatencyConfig& latency, Rng& rng, double prior_mean) {
    OracleReply reply;
    reply.values.reserve(regions.size());
    for (const auto& region : regions) {
        double sum_m = 0.0;
        double sum_sq = 0.0;  // E[x^2] accumulator for the cell mixture
        int covered = 0;
        for (const auto& p : region.points) {
            int cls = world.class_at(p[0], p[1]);
            if (cls < 0) continue;
            const TerrainClass& tc = world.terrain(cls);
            sum_m += tc.m;
            sum_sq += tc.sigma * tc.sigma + tc.m * tc.m;
            ++covered;
        }
        double z = rng.normal(0.0, 1.0);
        if (covered == 0) {
            reply.values.push_back(prior_mean);
            reply.uncovered_regions.push_back(region.region_id);
            continue;
        }
        const double mbar = sum_m / covered;
        // std of the region's ground-truth mixture: a region straddling two
        // terrain classes is genuinely dispersed even if each class is tight
        const double var = std::max(0.0, sum_sq / covered - mbar * mbar);
        reply.values.push_back(std::clamp(mbar + std::sqrt(var) * z, 0.0, 1.0));
    }
    reply.latency = draw_latency(latency, rng);
    return reply;
}

std::vector<RegionObservation> to_observations(const std::vector<RegionProjection>& regions,
                                               const OracleReply& reply) {
    if (reply.values.size() != regions.size()) {
        throw LengthError("to_observations: reply length does not match region count");
    }
    std::vector<RegionObservation> out;
    out.reserve(regions.size());
    for (std::size_t i = 0; i < regions.size(); ++i) {
        if (regions[i].voxels.empty()) continue;
        RegionObservation obs;
        obs.region_id = regions[i].region_id;
        obs.value = reply.values[i];
        obs.voxels = regions[i].voxels;
        out.push_back(std::move(obs));
    }
    return out;
}

}  // namespace zest
