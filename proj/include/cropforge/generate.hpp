#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cropforge/camera.hpp"
#include "cropforge/dataset.hpp"
#include "cropforge/field_model.hpp"
#include "cropforge/render.hpp"

namespace cropforge {

// Everything that determines a generated dataset. Worker count is not part
// of it: output is identical for any number of workers.
struct GenerateOptions {
    std::size_t count = 0;
    // Samples are assigned round-robin; empty means no category variation.
    std::vector<Category> categories;
    std::string style_id = "sim";
    std::uint64_t seed = 0;

    FieldSpec field;
    CameraIntrinsics intrinsics;
    double cam_height_m = 0.8;
    double cam_pitch_deg = 25.0;
    double waypoint_step_m = 0.25;
    double stripe_width_m = kDefaultStripeWidthM;
    // Uniform intensity range handed to CategoryVariation::with_intensity.
    double intensity_min = 0.3;
    double intensity_max = 1.0;
    // Uniform pose perturbation bounds.
    double yaw_jitter_deg = 3.0;
    double pitch_jitter_deg = 3.0;
    double height_jitter_m = 0.05;
    // Vary the sun per sample instead of using the style's fixed sun.
    bool randomize_sun = true;
    bool augment = false;
    CropOptions crop;
    // Per-category parameter overrides applied after with_intensity, as
    // JSON objects of CategoryVariation fields.
    std::map<Category, nlohmann::json> variation_overrides;

    void validate() const;
    nlohmann::json to_json() const;
    // Missing keys keep their defaults; unknown keys are rejected.
    static GenerateOptions from_json(const nlohmann::json& j);
};

nlohmann::json to_json(const FieldSpec& spec);
// Overlays the keys present in `j` onto `base`.
FieldSpec field_spec_from_json(const nlohmann::json& j, FieldSpec base = {});
nlohmann::json to_json(const CategoryVariation& v);
CategoryVariation variation_from_json(const nlohmann::json& j, CategoryVariation base);

// The scene and camera for one sample, before rendering.
struct SamplePlan {
    std::size_t index = 0;
    std::string base_id;
    FieldLayout layout;
    CameraPose pose;
    SceneStyle style;
    std::optional<Category> category;
};

SamplePlan plan_sample(const GenerateOptions& options, std::size_t index);
SamplePair render_sample(const GenerateOptions& options, const SamplePlan& plan);

// Called from worker threads, serialised by the caller's lock.
using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

// Renders every sample into <out>/images and <out>/masks with `jobs`
// workers and writes <out>/manifest.json in sample order.
DatasetManifest generate_dataset(const GenerateOptions& options, const std::filesystem::path& out, int jobs = 1,
                                 const ProgressFn& progress = {});

// Runs fn(i) for i in [0, n) on `jobs` threads. The first exception thrown
// stops further work and is rethrown.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace cropforge
