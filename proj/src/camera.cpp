#include "cropforge/camera.hpp"

#include <cmath>
#include <numbers>

#include "cropforge/error.hpp"

namespace cropforge {

namespace {
constexpr double kDeg = std::numbers::pi / 180.0;
}

double CameraIntrinsics::focal_px() const {
    return 0.5 * height_px / std::tan(0.5 * vertical_fov_deg * kDeg);
}

cv::Point2d CameraIntrinsics::principal() const {
    return principal_point.value_or(cv::Point2d(0.5 * width_px, 0.5 * height_px));
}

void CameraIntrinsics::validate() const {
    if (width_px <= 0 || height_px <= 0) throw ValidationError("intrinsics.size", "zero-area image");
    if (!(vertical_fov_deg > 0.0 && vertical_fov_deg < 180.0))
        throw ValidationError("intrinsics.vertical_fov_deg", "must lie in (0, 180)");
    if (principal_point && !(std::isfinite(principal_point->x) && std::isfinite(principal_point->y)))
        throw ValidationError("intrinsics.principal_point", "must be finite");
}

void CameraPose::validate() const {
    if (!(std::isfinite(position.x) && std::isfinite(position.y) && std::isfinite(position.z) &&
          std::isfinite(yaw_deg) && std::isfinite(pitch_deg) && std::isfinite(roll_deg)))
        throw ValidationError("pose", "non-finite component");
}

CameraBasis CameraBasis::from_pose(const CameraPose& pose) {
    const double y = pose.yaw_deg * kDeg;
    const double p = pose.pitch_deg * kDeg;
    const double r = pose.roll_deg * kDeg;
    const cv::Point3d forward(std::cos(p) * std::cos(y), std::cos(p) * std::sin(y), -std::sin(p));
    const cv::Point3d right0(std::sin(y), -std::cos(y), 0.0);
    const cv::Point3d down0 = forward.cross(right0);
    // roll spins the image plane clockwise as seen by the camera
    const cv::Point3d right = right0 * std::cos(r) + down0 * std::sin(r);
    const cv::Point3d down = down0 * std::cos(r) - right0 * std::sin(r);
    return {right, down, forward};
}

Projection project(const cv::Point3d& world, const CameraPose& pose, const CameraIntrinsics& intrinsics) {
    const CameraBasis basis = CameraBasis::from_pose(pose);
    const cv::Point3d c = basis.to_camera(pose, world);
    Projection out;
    out.depth = c.z;
    if (!(c.z > 1e-9)) return out;
    const double f = intrinsics.focal_px();
    const cv::Point2d pp = intrinsics.principal();
    out.in_front = true;
    out.pixel = {pp.x + f * c.x / c.z, pp.y + f * c.y / c.z};
    return out;
}

cv::Point3d pixel_ray(const cv::Point2d& pixel, const CameraPose& pose, const CameraIntrinsics& intrinsics) {
    const CameraBasis basis = CameraBasis::from_pose(pose);
    const double f = intrinsics.focal_px();
    const cv::Point2d pp = intrinsics.principal();
    const cv::Point3d d = basis.right * ((pixel.x - pp.x) / f) + basis.down * ((pixel.y - pp.y) / f) + basis.forward;
    return d / cv::norm(d);
}

}  // namespace cropforge
