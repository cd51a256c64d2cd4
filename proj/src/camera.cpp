#include "zest/camera.hpp"

#include <cmath>

#include "zest/errors.hpp"

namespace zest {

namespace {
constexpr double kPi = 3.14159265358979323846;

void check(const CameraConfig& cam) {
    if (cam.width < 1 || cam.height < 1) throw ValidationError("camera: image dimensions must be positive");
    if (!(cam.fov_x_deg > 0.0) || cam.fov_x_deg >= 180.0) throw ValidationError("camera: fov_x out of range");
    if (!(cam.mount_height > 0.0)) throw ValidationError("camera: mount height must be positive");
    if (!(cam.max_range > 0.0)) throw ValidationError("camera: max range must be positive");
}
}  // namespace

std::array<double, 3> camera_origin(const CameraConfig& cam, const PoseSE2& pose) {
    check(cam);
    return {pose.x, pose.y, cam.mount_height};
}

std::array<double, 3> pixel_ray(const CameraConfig& cam, const PoseSE2& pose, double u, double v) {
    check(cam);
    const double fx = (cam.width / 2.0) / std::tan(cam.fov_x_deg * kPi / 180.0 / 2.0);
    const double fy = fx;
    const double cx = (cam.width - 1) / 2.0;
    const double cy = (cam.height - 1) / 2.0;
    const double dx = (u - cx) / fx;  // right in the image
    const double dy = (v - cy) / fy;  // down in the image

    const double pitch = cam.pitch_deg * kPi / 180.0;
    // Robot-local camera axes (robot heading along +x before yaw):
    //   optical axis z: forward, tilted down by pitch
    //   image x: robot's right (-y local)
    //   image y: down in the image
    const double zl[3] = {std::cos(pitch), 0.0, -std::sin(pitch)};
    const double xl[3] = {0.0, -1.0, 0.0};
    const double yl[3] = {-std::sin(pitch), 0.0, -std::cos(pitch)};

    double local[3];
    for (int i = 0; i < 3; ++i) local[i] = zl[i] + dx * xl[i] + dy * yl[i];

    const double c = std::cos(pose.psi);
    const double s = std::sin(pose.psi);
    return {c * local[0] - s * local[1], s * local[0] + c * local[1], local[2]};
}

GroundHit pixel_to_ground(const CameraConfig& cam, const PoseSE2& pose, double u, double v) {
    const auto origin = camera_origin(cam, pose);
    const auto dir = pixel_ray(cam, pose, u, v);
    GroundHit hit;
    if (dir[2] >= 0.0) return hit;  // at or above the horizon
    const double t = -origin[2] / dir[2];
    const double norm = std::sqrt(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]);
    const double range = t * norm;
    if (range > cam.max_range) return hit;
    hit.valid = true;
    hit.x = origin[0] + t * dir[0];
    hit.y = origin[1] + t * dir[1];
    hit.range = range;
    return hit;
}

}  // namespace zest
