#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "cropforge/baseline_detector.hpp"
#include "cropforge/camera.hpp"
#include "cropforge/field_model.hpp"

namespace cropforge::support {

// Ground-truth image line of one crop row, from exact centreline projection.
struct RowTruth {
    int row_index = 0;
    double angle_deg = 0.0;  // direction of the projected line, [-180, 180]
    double x_bottom = 0.0;   // column where it crosses the bottom pixel row
};

// Rows whose projected centreline spans at least a third of the image
// height. Pixel coordinates follow the detector (pixel centres at integers).
inline std::vector<RowTruth> visible_rows(const FieldLayout& layout, const CameraPose& pose,
                                          const CameraIntrinsics& k, int samples = 400) {
    std::vector<RowTruth> out;
    const double bottom = k.height_px - 1.0;
    for (const RowCenterline& row : layout.rows) {
        double ymin = 1e300;
        double ymax = -1e300;
        cv::Point2d pmin;
        cv::Point2d pmax;
        const cv::Point3d a = row.polyline.front();
        const cv::Point3d b = row.polyline.back();
        for (int i = 0; i <= samples; ++i) {
            const Projection p = project(a + (b - a) * (static_cast<double>(i) / samples), pose, k);
            if (!p.inside(k)) continue;
            const cv::Point2d q = p.pixel - cv::Point2d(0.5, 0.5);
            if (q.y < ymin) {
                ymin = q.y;
                pmin = q;
            }
            if (q.y > ymax) {
                ymax = q.y;
                pmax = q;
            }
        }
        if (ymax - ymin < k.height_px / 3.0) continue;
        RowTruth t;
        t.row_index = row.row_index;
        t.angle_deg = std::atan2(pmax.y - pmin.y, pmax.x - pmin.x) * 180.0 / std::numbers::pi;
        t.x_bottom = pmin.x + (pmax.x - pmin.x) * (bottom - pmin.y) / (pmax.y - pmin.y);
        out.push_back(t);
    }
    return out;
}

// Angle between the detected line and the truth, folded into [0, 90].
inline double angular_error_deg(const DetectedLine& l, const RowTruth& t) {
    const double th = l.theta_deg * std::numbers::pi / 180.0;
    const double dir = std::atan2(-std::cos(th), std::sin(th)) * 180.0 / std::numbers::pi;
    double d = std::fmod(std::abs(dir - t.angle_deg), 180.0);
    return std::min(d, 180.0 - d);
}

inline bool matches(const DetectedLine& l, const RowTruth& t, int image_height, double max_angle_deg = 5.0,
                    double max_lateral_px = 10.0) {
    const double x = l.x_at(image_height - 1.0);
    return angular_error_deg(l, t) <= max_angle_deg && std::isfinite(x) &&
           std::abs(x - t.x_bottom) <= max_lateral_px;
}

inline bool any_match(const std::vector<DetectedLine>& lines, const RowTruth& t, int image_height) {
    for (const DetectedLine& l : lines)
        if (matches(l, t, image_height)) return true;
    return false;
}

}  // namespace cropforge::support
