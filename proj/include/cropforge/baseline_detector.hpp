#pragma once

#include <utility>
#include <vector>

#include <json.hpp>
#include <opencv2/core.hpp>

namespace cropforge {

// Classical crop-row detector: excess green -> Otsu -> thinning -> Hough.
// A baseline for exercising the evaluation path, not a learned model.

// Line x*cos(theta) + y*sin(theta) = rho in pixel coordinates
// (x = column, y = row, origin at the top-left pixel centre).
struct DetectedLine {
    double rho = 0.0;
    double theta_deg = 0.0;  // [0, 180)
    int support = 0;
    cv::Point2d p0;  // clipped image-border intersections
    cv::Point2d p1;

    // Column where the line crosses image row y; NaN for horizontal lines.
    double x_at(double y) const;
};

nlohmann::json to_json(const std::vector<DetectedLine>& lines);

// Per-pixel 2G - R - B on channels scaled to [0, 1]; input BGR CV_8UC3.
cv::Mat exg(const cv::Mat& bgr);

struct BinarizeParams {
    int histogram_bins = 256;
    // ExG at or below this never counts as vegetation, whatever Otsu says.
    double min_level = 0.15;
};

// Otsu threshold over the ExG histogram on [-2, 2].
double otsu_level(const cv::Mat& exg_map, int bins = 256);
cv::Mat binarize(const cv::Mat& exg_map, const BinarizeParams& params = {});

// Zhang-Suen thinning (two-subiteration, 8-neighbour). Runs to a fixed point,
// so it is idempotent.
cv::Mat skeletonize(const cv::Mat& binary);

struct HoughParams {
    int angle_bins = 180;
    double rho_resolution_px = 1.0;
    double vote_fraction = 0.3;  // of the accumulator maximum
    int min_votes = 10;
    int max_lines = 8;
    double nms_theta_deg = 5.0;
    double nms_rho_px = 20.0;
    // Skip lines less than this many degrees from horizontal; 0 keeps all.
    double min_angle_from_horizontal_deg = 0.0;
    // After accepting a line, skeleton pixels within this distance of it
    // withdraw their votes; 0 gives plain non-maximum suppression.
    double support_removal_px = 0.0;
};

std::vector<DetectedLine> hough_lines(const cv::Mat& skeleton, const HoughParams& params = {});

struct DetectorParams {
    BinarizeParams binarize;
    HoughParams hough;
    double line_width_px = 6.0;
    // Drop lines closer than this to horizontal; rows seen from a forward
    // camera never are.
    double min_angle_from_horizontal_deg = 15.0;
    // Each Hough line is re-fitted `refine_iterations` times to the
    // vegetation within refine_band_px of it (see refine_line). Thinned
    // rosettes vote for lines a few degrees off the row; the plants
    // themselves sit symmetrically about it. 0 iterations keeps raw peaks.
    double refine_band_px = 12.0;
    int refine_iterations = 10;
};

struct Detection {
    cv::Mat mask;  // CV_8UC1 {0, 255}
    std::vector<DetectedLine> lines;
};

Detection detect_rows(const cv::Mat& bgr, const DetectorParams& params = {});

// Re-fits `line` to the foreground of `binary` within band_px of it:
// per-scanline centroids (image rows for steep lines, columns for shallow
// ones) regressed onto a straight line. Returns false (line untouched) when
// fewer than 20 scanlines carry foreground.
bool refine_line(const cv::Mat& binary, DetectedLine& line, double band_px);

// Pixels within line_width/2 of any line.
cv::Mat rasterize_lines(const std::vector<DetectedLine>& lines, cv::Size size, double line_width_px);

}  // namespace cropforge
