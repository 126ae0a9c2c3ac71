#pragma once

// Internal triangle rasteriser shared by the photo, label and shadow passes.

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include <opencv2/core.hpp>

namespace cropforge::detail {

inline constexpr double kNearPlane = 0.01;

struct Vertex {
    cv::Point3d cam;    // camera frame: x right, y down, z forward
    cv::Point3d world;
    cv::Point2d attr;   // free per-vertex attribute (leaf coordinates)
};

inline Vertex lerp(const Vertex& a, const Vertex& b, double t) {
    return {a.cam + (b.cam - a.cam) * t, a.world + (b.world - a.world) * t, a.attr + (b.attr - a.attr) * t};
}

// Sutherland-Hodgman against z >= kNearPlane. Returns up to 4 vertices.
inline int clip_near(const std::array<Vertex, 3>& in, std::array<Vertex, 4>& out) {
    int n = 0;
    for (int i = 0; i < 3; ++i) {
        const Vertex& a = in[i];
        const Vertex& b = in[(i + 1) % 3];
        const bool a_in = a.cam.z >= kNearPlane;
        const bool b_in = b.cam.z >= kNearPlane;
        if (a_in) out[n++] = a;
        if (a_in != b_in) out[n++] = lerp(a, b, (kNearPlane - a.cam.z) / (b.cam.z - a.cam.z));
    }
    return n;
}

struct Fragment {
    int x = 0;
    int y = 0;
    double depth = 0.0;
    std::array<double, 3> weights{};  // perspective-correct barycentrics
};

// Rasterises a screen-space triangle covering pixel centres. `inv_z` holds
// 1/depth per vertex for perspective-correct interpolation.
template <typename Shade>
void fill_triangle(const std::array<cv::Point2d, 3>& p, const std::array<double, 3>& inv_z, int width, int height,
                   Shade&& shade) {
    const double area = (p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[1].y - p[0].y) * (p[2].x - p[0].x);
    if (std::abs(area) < 1e-12) return;
    const double min_x = std::min({p[0].x, p[1].x, p[2].x});
    const double max_x = std::max({p[0].x, p[1].x, p[2].x});
    const double min_y = std::min({p[0].y, p[1].y, p[2].y});
    const double max_y = std::max({p[0].y, p[1].y, p[2].y});
    auto to_px = [](double v, int n) { return static_cast<int>(std::clamp(v, -1.0, static_cast<double>(n))); };
    const int x0 = std::max(0, to_px(std::floor(min_x - 0.5), width));
    const int x1 = std::min(width - 1, to_px(std::ceil(max_x - 0.5), width));
    const int y0 = std::max(0, to_px(std::floor(min_y - 0.5), height));
    const int y1 = std::min(height - 1, to_px(std::ceil(max_y - 0.5), height));
    if (x0 > x1 || y0 > y1) return;
    const double inv_area = 1.0 / area;
    auto edge = [](const cv::Point2d& a, const cv::Point2d& b, double x, double y) {
        return (b.x - a.x) * (y - a.y) - (b.y - a.y) * (x - a.x);
    };
    for (int y = y0; y <= y1; ++y) {
        const double cy = y + 0.5;
        for (int x = x0; x <= x1; ++x) {
            const double cx = x + 0.5;
            const double b0 = edge(p[1], p[2], cx, cy) * inv_area;
            const double b1 = edge(p[2], p[0], cx, cy) * inv_area;
            const double b2 = edge(p[0], p[1], cx, cy) * inv_area;
            if (b0 < 0.0 || b1 < 0.0 || b2 < 0.0) continue;
            const double w0 = b0 * inv_z[0];
            const double w1 = b1 * inv_z[1];
            const double w2 = b2 * inv_z[2];
            const double sum = w0 + w1 + w2;
            Fragment f;
            f.x = x;
            f.y = y;
            f.depth = 1.0 / sum;
            f.weights = {w0 / sum, w1 / sum, w2 / sum};
            shade(f);
        }
    }
}

struct ScreenMapping {
    double focal = 1.0;
    cv::Point2d principal;
    int width = 0;
    int height = 0;

    cv::Point2d to_screen(const cv::Point3d& cam) const {
        return {principal.x + focal * cam.x / cam.z, principal.y + focal * cam.y / cam.z};
    }
};

// Clips a camera-space triangle to the near plane and rasterises it.
// `shade(fragment, clipped_vertices)` receives weights relative to the
// vertices of the clipped sub-triangle it belongs to.
template <typename Shade>
void draw_triangle(const std::array<Vertex, 3>& tri, const ScreenMapping& view, Shade&& shade) {
    std::array<Vertex, 4> poly;
    const int n = clip_near(tri, poly);
    for (int i = 1; i + 1 < n; ++i) {
        const std::array<Vertex, 3> sub = {poly[0], poly[i], poly[i + 1]};
        const std::array<cv::Point2d, 3> screen = {view.to_screen(sub[0].cam), view.to_screen(sub[1].cam),
                                                   view.to_screen(sub[2].cam)};
        const std::array<double, 3> inv_z = {1.0 / sub[0].cam.z, 1.0 / sub[1].cam.z, 1.0 / sub[2].cam.z};
        fill_triangle(screen, inv_z, view.width, view.height,
                      [&](const Fragment& f) { shade(f, sub); });
    }
}

// Marks every pixel whose square (grown by a tiny epsilon) the segment a-b
// touches. Keeps sub-pixel-wide geometry connected.
template <typename Mark>
void conservative_segment(cv::Point2d a, cv::Point2d b, int width, int height, Mark&& mark) {
    constexpr double kEps = 1e-6;
    if (a.y > b.y) std::swap(a, b);
    auto to_px = [](double v, int n) { return static_cast<int>(std::clamp(v, -1.0, static_cast<double>(n))); };
    const int r0 = std::max(0, to_px(std::floor(a.y - kEps), height));
    const int r1 = std::min(height - 1, to_px(std::floor(b.y + kEps), height));
    const double dy = b.y - a.y;
    for (int r = r0; r <= r1; ++r) {
        const double lo = std::max(a.y, r - kEps);
        const double hi = std::min(b.y, r + 1 + kEps);
        if (lo > hi) continue;
        double xa = a.x;
        double xb = b.x;
        if (dy > 1e-12) {
            xa = a.x + (b.x - a.x) * (lo - a.y) / dy;
            xb = a.x + (b.x - a.x) * (hi - a.y) / dy;
        }
        if (xa > xb) std::swap(xa, xb);
        const int c0 = std::max(0, to_px(std::floor(xa - kEps), width));
        const int c1 = std::min(width - 1, to_px(std::floor(xb + kEps), width));
        for (int c = c0; c <= c1; ++c) mark(c, r);
    }
}

}  // namespace cropforge::detail
