#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include <opencv2/core.hpp>

#include "cropforge/camera.hpp"
#include "cropforge/field_model.hpp"

namespace cropforge::support {

// Walks every row centreline in 1 cm steps; each sample that projects into
// the frame must land on a white label pixel. Returns the number that do not.
inline int coregistration_violations(const FieldLayout& layout, const CameraPose& pose, const CameraIntrinsics& k,
                                     const cv::Mat& mask, int* checked = nullptr) {
    int bad = 0;
    for (const RowCenterline& row : layout.rows)
        for (std::size_t i = 0; i + 1 < row.polyline.size(); ++i) {
            const cv::Point3d a = row.polyline[i];
            const cv::Point3d b = row.polyline[i + 1];
            const int steps = std::max(1, static_cast<int>(std::ceil(cv::norm(b - a) / 0.01)));
            for (int s = 0; s <= steps; ++s) {
                const Projection p = project(a + (b - a) * (static_cast<double>(s) / steps), pose, k);
                if (!p.inside(k)) continue;
                if (checked) ++*checked;
                const int col = static_cast<int>(std::floor(p.pixel.x));
                const int r = static_cast<int>(std::floor(p.pixel.y));
                bad += mask.at<std::uint8_t>(r, col) == 255 ? 0 : 1;
            }
        }
    return bad;
}

}  // namespace cropforge::support
