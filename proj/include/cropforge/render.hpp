#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <opencv2/core.hpp>

#include "cropforge/camera.hpp"
#include "cropforge/field_model.hpp"

namespace cropforge {

enum class Domain { sim, real };

std::string_view domain_name(Domain d);
Domain domain_from_name(std::string_view name);

// Appearance of the photo pass. Colours are linear RGB in [0, 1].
// Two presets stand in for the simulated and the real camera domains.
struct SceneStyle {
    std::string style_id = "sim";
    cv::Vec3d soil_rgb{0.46, 0.35, 0.25};
    int soil_octaves = 4;
    double soil_feature_m = 0.08;
    double soil_contrast = 0.35;
    cv::Vec3d leaf_rgb{0.22, 0.50, 0.12};
    double leaf_variation = 0.12;
    double leaf_vein = 0.25;
    // multiplied into leaf_rgb for weed instances
    cv::Vec3d weed_tint{1.25, 0.95, 0.75};
    cv::Vec3d sky_rgb{0.72, 0.80, 0.90};
    double sun_azimuth_deg = 140.0;
    double sun_elevation_deg = 55.0;
    double sun_intensity = 0.70;
    double ambient = 0.45;
    // minimum glare overlay applied to every photo
    double glare_strength = 0.0;

    static SceneStyle sim();
    static SceneStyle real_proxy();
    // "sim" or "real-proxy"
    static SceneStyle from_id(std::string_view id);

    void validate() const;
    cv::Point3d sun_direction() const;
};

struct SamplePair {
    cv::Mat rgb;   // CV_8UC3, OpenCV BGR channel order
    cv::Mat mask;  // CV_8UC1, values {0, 255}
    CameraPose pose;
    std::optional<Category> category;
    Domain domain = Domain::sim;
    std::string base_id;
};

inline constexpr double kDefaultStripeWidthM = 0.05;

struct PhotoBuffers {
    cv::Mat rgb;    // CV_8UC3 BGR
    cv::Mat depth;  // CV_32FC1 camera depth in metres, 0 for sky
};

// Photo pass: textured soil plane, leaf rosettes under a directional sun,
// hard shadows when the layout carries a shadow annotation, glare overlay.
PhotoBuffers render_photo_buffers(const FieldLayout& layout, const CameraPose& pose,
                                  const CameraIntrinsics& intrinsics, const SceneStyle& style);
cv::Mat render_photo(const FieldLayout& layout, const CameraPose& pose, const CameraIntrinsics& intrinsics,
                     const SceneStyle& style);

// Label pass: every centreline becomes an unlit stripe of stripe_width_m on
// the ground. Stripes are never drawn thinner than one pixel, so every
// visible centreline point lands on a white pixel.
cv::Mat render_label(const FieldLayout& layout, const CameraPose& pose, const CameraIntrinsics& intrinsics,
                     double stripe_width_m = kDefaultStripeWidthM);

SamplePair render_pair(const FieldLayout& layout, const CameraPose& pose, const CameraIntrinsics& intrinsics,
                       const SceneStyle& style, double stripe_width_m = kDefaultStripeWidthM);

// Depth buffer debug dump (binary PPM, near = bright).
void write_depth_ppm(const std::filesystem::path& path, const cv::Mat& depth);

}  // namespace cropforge
