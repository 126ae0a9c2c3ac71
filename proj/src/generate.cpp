#include "cropforge/generate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "cropforge/error.hpp"
#include "cropforge/image_io.hpp"
#include "cropforge/rng.hpp"

namespace cropforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& section) {
    if (!j.is_object()) throw ValidationError(section, "expected a JSON object");
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& [key, _] : j.items())
        if (!keys.count(key)) throw ValidationError(section + "." + key, "unknown key");
}

template <typename T>
void read_opt(const json& j, const char* key, T& out, const std::string& section) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ValidationError(section + "." + key, e.what());
    }
}

std::string sample_id(const std::string& style, std::uint64_t seed, std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06zu", index);
    return style + "-" + std::to_string(seed) + "-" + buf;
}

std::string aug_suffix(int k) { return "_aug" + std::to_string(k); }

}  // namespace

json to_json(const FieldSpec& s) {
    return {{"row_spacing_m", s.row_spacing_m},
            {"seed_spacing_m", s.seed_spacing_m},
            {"plant_base_height_m", s.plant_base_height_m},
            {"plant_height_var_m", s.plant_height_var_m},
            {"plant_yaw_range_deg", s.plant_yaw_range_deg},
            {"row_length_m", s.row_length_m},
            {"row_count", s.row_count},
            {"lateral_jitter_m", s.lateral_jitter_m},
            {"rng_seed", s.rng_seed}};
}

FieldSpec field_spec_from_json(const json& j, FieldSpec s) {
    const std::string sec = "field";
    reject_unknown(j,
                   {"row_spacing_m", "seed_spacing_m", "plant_base_height_m", "plant_height_var_m",
                    "plant_yaw_range_deg", "row_length_m", "row_count", "lateral_jitter_m", "rng_seed"},
                   sec);
    read_opt(j, "row_spacing_m", s.row_spacing_m, sec);
    read_opt(j, "seed_spacing_m", s.seed_spacing_m, sec);
    read_opt(j, "plant_base_height_m", s.plant_base_height_m, sec);
    read_opt(j, "plant_height_var_m", s.plant_height_var_m, sec);
    read_opt(j, "plant_yaw_range_deg", s.plant_yaw_range_deg, sec);
    read_opt(j, "row_length_m", s.row_length_m, sec);
    read_opt(j, "row_count", s.row_count, sec);
    read_opt(j, "lateral_jitter_m", s.lateral_jitter_m, sec);
    read_opt(j, "rng_seed", s.rng_seed, sec);
    return s;
}

json to_json(const CategoryVariation& v) {
    json j = {{"category", std::string(1, to_char(v.category))},
              {"intensity", v.intensity},
              {"shadow_band_width_m", v.shadow_band_width_m},
              {"shadow_band_spacing_m", v.shadow_band_spacing_m},
              {"shadow_caster_height_m", v.shadow_caster_height_m},
              {"curvature_radius_m", v.curvature_radius_m},
              {"slope_grade", v.slope_grade},
              {"removal_probability", v.removal_probability},
              {"robot_sun_elevation_deg", v.robot_sun_elevation_deg},
              {"weed_density_per_m2", v.weed_density_per_m2},
              {"weed_clearance_m", v.weed_clearance_m},
              {"large_fraction", v.large_fraction},
              {"large_scale", v.large_scale},
              {"small_scale", v.small_scale},
              {"glare_strength", v.glare_strength},
              {"tyre_track_width_m", v.tyre_track_width_m}};
    j["tyre_track_offset_m"] = v.tyre_track_offset_m ? json(*v.tyre_track_offset_m) : json(nullptr);
    return j;
}

CategoryVariation variation_from_json(const json& j, CategoryVariation v) {
    const std::string sec = "variation";
    reject_unknown(j,
                   {"category", "intensity", "shadow_band_width_m", "shadow_band_spacing_m", "shadow_caster_height_m",
                    "curvature_radius_m", "slope_grade", "removal_probability", "robot_sun_elevation_deg",
                    "weed_density_per_m2", "weed_clearance_m", "large_fraction", "large_scale", "small_scale",
                    "glare_strength", "tyre_track_offset_m", "tyre_track_width_m"},
                   sec);
    if (j.contains("category")) v.category = category_from_id(j.at("category").get<std::string>());
    read_opt(j, "intensity", v.intensity, sec);
    read_opt(j, "shadow_band_width_m", v.shadow_band_width_m, sec);
    read_opt(j, "shadow_band_spacing_m", v.shadow_band_spacing_m, sec);
    read_opt(j, "shadow_caster_height_m", v.shadow_caster_height_m, sec);
    read_opt(j, "curvature_radius_m", v.curvature_radius_m, sec);
    read_opt(j, "slope_grade", v.slope_grade, sec);
    read_opt(j, "removal_probability", v.removal_probability, sec);
    read_opt(j, "robot_sun_elevation_deg", v.robot_sun_elevation_deg, sec);
    read_opt(j, "weed_density_per_m2", v.weed_density_per_m2, sec);
    read_opt(j, "weed_clearance_m", v.weed_clearance_m, sec);
    read_opt(j, "large_fraction", v.large_fraction, sec);
    read_opt(j, "large_scale", v.large_scale, sec);
    read_opt(j, "small_scale", v.small_scale, sec);
    read_opt(j, "glare_strength", v.glare_strength, sec);
    read_opt(j, "tyre_track_width_m", v.tyre_track_width_m, sec);
    if (j.contains("tyre_track_offset_m")) {
        const json& o = j.at("tyre_track_offset_m");
        v.tyre_track_offset_m = o.is_null() ? std::nullopt : std::optional<double>(o.get<double>());
    }
    return v;
}

void GenerateOptions::validate() const {
    field.validate();
    intrinsics.validate();
    SceneStyle::from_id(style_id).validate();
    if (field.row_count < 2) throw ValidationError("field.row_count", "need at least two rows to drive between");
    if (!(cam_height_m > height_jitter_m)) throw ValidationError("camera.height_m", "must exceed height jitter");
    if (!(waypoint_step_m > 0.0)) throw ValidationError("camera.waypoint_step_m", "must be > 0");
    if (!(stripe_width_m > 0.0)) throw ValidationError("render.stripe_width_m", "must be > 0");
    if (!(intensity_min >= 0.0 && intensity_min <= intensity_max && intensity_max <= 1.0))
        throw ValidationError("variation.intensity_min", "need 0 <= intensity_min <= intensity_max <= 1");
    if (yaw_jitter_deg < 0.0 || pitch_jitter_deg < 0.0 || height_jitter_m < 0.0)
        throw ValidationError("camera.yaw_jitter_deg", "jitter bounds must be >= 0");
    if (augment && (crop.output_size < 1 || !(crop.crop_fraction > 0.0 && crop.crop_fraction <= 1.0)))
        throw ValidationError("augment.crop_fraction", "need output_size >= 1 and crop_fraction in (0, 1]");
    std::set<Category> seen;
    for (Category c : categories)
        if (!seen.insert(c).second)
            throw ValidationError("categories", std::string("category '") + to_char(c) + "' listed twice");
}

json GenerateOptions::to_json() const {
    json cats = json::array();
    for (Category c : categories) cats.push_back(std::string(1, to_char(c)));
    json overrides = json::object();
    for (const auto& [c, o] : variation_overrides) overrides[std::string(1, to_char(c))] = o;
    json field_j = cropforge::to_json(field);
    field_j.erase("rng_seed");
    return {{"schema", 1},
            {"count", count},
            {"categories", cats},
            {"style", style_id},
            {"seed", seed},
            {"field", field_j},
            {"camera",
             {{"width_px", intrinsics.width_px},
              {"height_px", intrinsics.height_px},
              {"vertical_fov_deg", intrinsics.vertical_fov_deg},
              {"height_m", cam_height_m},
              {"pitch_deg", cam_pitch_deg},
              {"waypoint_step_m", waypoint_step_m},
              {"yaw_jitter_deg", yaw_jitter_deg},
              {"pitch_jitter_deg", pitch_jitter_deg},
              {"height_jitter_m", height_jitter_m}}},
            {"render", {{"stripe_width_m", stripe_width_m}, {"randomize_sun", randomize_sun}}},
            {"variation", {{"intensity_min", intensity_min}, {"intensity_max", intensity_max}, {"overrides", overrides}}},
            {"augment",
             {{"enabled", augment}, {"output_size", crop.output_size}, {"crop_fraction", crop.crop_fraction}}}};
}

GenerateOptions GenerateOptions::from_json(const json& j) {
    GenerateOptions o;
    reject_unknown(j, {"schema", "count", "categories", "style", "seed", "field", "camera", "render", "variation", "augment"},
                   "config");
    if (!j.contains("schema") || j.at("schema") != 1)
        throw ValidationError("schema", "config must declare \"schema\": 1");
    read_opt(j, "count", o.count, "config");
    read_opt(j, "style", o.style_id, "config");
    read_opt(j, "seed", o.seed, "config");
    if (j.contains("categories")) {
        const json& cats = j.at("categories");
        if (!cats.is_array()) throw ValidationError("config.categories", "expected an array of ids");
        for (const json& c : cats) o.categories.push_back(category_from_id(c.get<std::string>()));
    }
    if (j.contains("field")) o.field = field_spec_from_json(j.at("field"), o.field);
    if (j.contains("camera")) {
        const json& c = j.at("camera");
        const std::string sec = "camera";
        reject_unknown(c,
                       {"width_px", "height_px", "vertical_fov_deg", "height_m", "pitch_deg", "waypoint_step_m",
                        "yaw_jitter_deg", "pitch_jitter_deg", "height_jitter_m"},
                       sec);
        read_opt(c, "width_px", o.intrinsics.width_px, sec);
        read_opt(c, "height_px", o.intrinsics.height_px, sec);
        read_opt(c, "vertical_fov_deg", o.intrinsics.vertical_fov_deg, sec);
        read_opt(c, "height_m", o.cam_height_m, sec);
        read_opt(c, "pitch_deg", o.cam_pitch_deg, sec);
        read_opt(c, "waypoint_step_m", o.waypoint_step_m, sec);
        read_opt(c, "yaw_jitter_deg", o.yaw_jitter_deg, sec);
        read_opt(c, "pitch_jitter_deg", o.pitch_jitter_deg, sec);
        read_opt(c, "height_jitter_m", o.height_jitter_m, sec);
    }
    if (j.contains("render")) {
        const json& r = j.at("render");
        reject_unknown(r, {"stripe_width_m", "randomize_sun"}, "render");
        read_opt(r, "stripe_width_m", o.stripe_width_m, "render");
        read_opt(r, "randomize_sun", o.randomize_sun, "render");
    }
    if (j.contains("variation")) {
        const json& v = j.at("variation");
        reject_unknown(v, {"intensity_min", "intensity_max", "overrides"}, "variation");
        read_opt(v, "intensity_min", o.intensity_min, "variation");
        read_opt(v, "intensity_max", o.intensity_max, "variation");
        if (v.contains("overrides")) {
            for (const auto& [id, body] : v.at("overrides").items()) {
                const Category c = category_from_id(id);
                // parse once now so typos fail at load time
                variation_from_json(body, CategoryVariation::with_intensity(c, 0.5));
                o.variation_overrides[c] = body;
            }
        }
    }
    if (j.contains("augment")) {
        const json& a = j.at("augment");
        reject_unknown(a, {"enabled", "output_size", "crop_fraction"}, "augment");
        read_opt(a, "enabled", o.augment, "augment");
        read_opt(a, "output_size", o.crop.output_size, "augment");
        read_opt(a, "crop_fraction", o.crop.crop_fraction, "augment");
    }
    o.validate();
    return o;
}

SamplePlan plan_sample(const GenerateOptions& options, std::size_t index) {
    SamplePlan plan;
    plan.index = index;
    plan.base_id = sample_id(options.style_id, options.seed, index);
    if (!options.categories.empty()) plan.category = options.categories[index % options.categories.size()];

    const std::uint64_t sample_seed = derive_key(options.seed, {fnv1a64("sample"), index});
    Stream rng(sample_seed, {fnv1a64("setup")});

    FieldSpec spec = options.field;
    spec.rng_seed = sample_seed;
    plan.layout = generate_field(spec);
    if (plan.category) {
        CategoryVariation v = CategoryVariation::with_intensity(
            *plan.category, rng.uniform(options.intensity_min, options.intensity_max), sample_seed);
        if (auto it = options.variation_overrides.find(*plan.category); it != options.variation_overrides.end())
            v = variation_from_json(it->second, v);
        plan.layout = apply_variation(std::move(plan.layout), v);
    }

    // Drive near the middle of the field so rows fill both sides of the view.
    const int lanes = spec.row_count - 1;
    const int lo = std::max(0, (spec.row_count - 1) / 2 - 2);
    const int hi = std::min(lanes - 1, lo + 3);
    const int lane = lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
    const std::vector<CameraPose> poses =
        generate_waypoints(plan.layout, lane, options.waypoint_step_m, options.cam_height_m, options.cam_pitch_deg);
    // First half only, so the far end of the field stays in view.
    const std::size_t usable = std::max<std::size_t>(1, (poses.size() + 1) / 2);
    CameraPose pose = poses[rng.below(usable)];
    pose.yaw_deg += rng.uniform(-options.yaw_jitter_deg, options.yaw_jitter_deg);
    pose.pitch_deg += rng.uniform(-options.pitch_jitter_deg, options.pitch_jitter_deg);
    pose.position.z += rng.uniform(-options.height_jitter_m, options.height_jitter_m);
    plan.pose = pose;

    plan.style = SceneStyle::from_id(options.style_id);
    if (options.randomize_sun) {
        plan.style.sun_azimuth_deg = rng.uniform(0.0, 360.0);
        plan.style.sun_elevation_deg = rng.uniform(40.0, 70.0);
    }
    return plan;
}

SamplePair render_sample(const GenerateOptions& options, const SamplePlan& plan) {
    SamplePair pair = render_pair(plan.layout, plan.pose, options.intrinsics, plan.style, options.stripe_width_m);
    pair.category = plan.category;
    pair.base_id = plan.base_id;
    return pair;
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    if (jobs < 1) throw ValidationError("jobs", "must be >= 1");
    const auto workers = static_cast<std::size_t>(std::min<std::size_t>(static_cast<std::size_t>(jobs), n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (;;) {
            if (failed.load()) return;
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                failed = true;
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

DatasetManifest generate_dataset(const GenerateOptions& options, const fs::path& out, int jobs,
                                 const ProgressFn& progress) {
    options.validate();
    fs::create_directories(out / "images");
    fs::create_directories(out / "masks");

    const std::size_t per_sample = options.augment ? 4 : 1;
    std::vector<ManifestEntry> entries(options.count * per_sample);
    std::mutex progress_mutex;
    std::size_t done = 0;

    parallel_for(options.count, jobs, [&](std::size_t i) {
        const SamplePlan plan = plan_sample(options, i);
        const SamplePair pair = render_sample(options, plan);
        auto emit = [&](const SamplePair& p, std::size_t slot, std::optional<int> aug) {
            const std::string name = plan.base_id + (aug ? aug_suffix(*aug) : std::string()) + ".png";
            write_png(out / "images" / name, p.rgb);
            write_png(out / "masks" / name, p.mask);
            ManifestEntry& e = entries[slot];
            e.image = "images/" + name;
            e.mask = "masks/" + name;
            e.domain = p.domain;
            e.category = p.category;
            e.base_id = plan.base_id;
            e.augmentation_index = aug;
        };
        if (options.augment) {
            const auto crops = augment_crops(pair, options.crop);
            for (int k = 0; k < 4; ++k) emit(crops[static_cast<std::size_t>(k)], i * 4 + static_cast<std::size_t>(k), k);
        } else {
            emit(pair, i, std::nullopt);
        }
        if (progress) {
            std::lock_guard lock(progress_mutex);
            progress(++done, options.count);
        }
    });

    DatasetManifest manifest;
    manifest.entries = std::move(entries);
    manifest.seed = options.seed;
    manifest.root = out;
    manifest.metadata = {{"generator", "cropforge generate"}, {"options", options.to_json()}};
    write_manifest(manifest, out);
    return manifest;
}

}  // namespace cropforge
