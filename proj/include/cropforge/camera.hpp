#pragma once

#include <optional>

#include <opencv2/core.hpp>

namespace cropforge {

// Pinhole intrinsics. Pixel (col, row) covers [col, col+1) x [row, row+1),
// so the default principal point (W/2, H/2) sits on the image centre.
struct CameraIntrinsics {
    int width_px = 512;
    int height_px = 512;
    double vertical_fov_deg = 42.0;
    std::optional<cv::Point2d> principal_point;

    double focal_px() const;
    cv::Point2d principal() const;
    void validate() const;
};

// World frame: x runs along the rows, y across them, z up.
// yaw is measured from +x towards +y; pitch is positive looking down.
struct CameraPose {
    cv::Point3d position;
    double yaw_deg = 0.0;
    double pitch_deg = 0.0;
    double roll_deg = 0.0;

    void validate() const;
};

// Orthonormal camera axes in world coordinates (right, down, forward).
struct CameraBasis {
    cv::Point3d right;
    cv::Point3d down;
    cv::Point3d forward;

    static CameraBasis from_pose(const CameraPose& pose);

    cv::Point3d to_camera(const CameraPose& pose, const cv::Point3d& world) const {
        const cv::Point3d d = world - pose.position;
        return {d.dot(right), d.dot(down), d.dot(forward)};
    }
};

// Outcome of projecting a world point. `in_front == false` is the
// behind-camera sentinel; `pixel` is then meaningless.
struct Projection {
    bool in_front = false;
    cv::Point2d pixel;
    double depth = 0.0;

    bool inside(const CameraIntrinsics& k) const {
        return in_front && pixel.x >= 0.0 && pixel.y >= 0.0 && pixel.x < k.width_px &&
               pixel.y < k.height_px;
    }
};

Projection project(const cv::Point3d& world, const CameraPose& pose, const CameraIntrinsics& intrinsics);

// Ray through a sub-pixel image position, as a unit world direction.
cv::Point3d pixel_ray(const cv::Point2d& pixel, const CameraPose& pose, const CameraIntrinsics& intrinsics);

}  // namespace cropforge
