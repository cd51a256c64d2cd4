#pragma once

#include <array>

#include "zest/pose.hpp"

namespace zest {

// Forward-facing pinhole camera mounted on the robot, pitched down toward the
// ground. Frame convention: x right, y down, z forward (optical axis).
struct CameraConfig {
    int width = 128;
    int height = 96;
    double fov_x_deg = 90.0;
    double mount_height = 0.6;   // meters above ground
    double pitch_deg = 25.0;     // downward tilt of the optical axis
    double max_range = 10.0;     // meters, 3D distance from the camera
};

struct GroundHit {
    bool valid = false;  // false: ray points at or above the horizon, or too far
    double x = 0.0;      // world coordinates of the ground intersection
    double y = 0.0;
    double range = 0.0;  // 3D distance from the camera center
};

// World-frame ray direction (not normalized) through pixel center (u, v) for a
// robot at `pose`, and the world-frame camera origin.
std::array<double, 3> camera_origin(const CameraConfig& cam, const PoseSE2& pose);
std::array<double, 3> pixel_ray(const CameraConfig& cam, const PoseSE2& pose, double u, double v);

// Intersect the pixel ray with the ground plane z = 0.
GroundHit pixel_to_ground(const CameraConfig& cam, const PoseSE2& pose, double u, double v);

}  // namespace zest
