#include "cropforge/field_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cropforge/error.hpp"
#include "cropforge/rng.hpp"

namespace cropforge {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
// Maximum angle subtended by one polyline segment of a bent row.
constexpr double kArcStepRad = 0.004;

int plants_per_row(const FieldSpec& spec) {
    return static_cast<int>(std::floor(spec.row_length_m / spec.seed_spacing_m + 1e-9)) + 1;
}

// Recomputes world geometry (centrelines, instance positions) from frame
// coordinates. Called after anything that changes the frame or ground.
void rebuild_geometry(FieldLayout& layout) {
    const FieldSpec& spec = layout.spec;
    layout.rows.clear();
    layout.rows.reserve(static_cast<std::size_t>(spec.row_count));
    for (int r = 0; r < spec.row_count; ++r) {
        RowCenterline row;
        row.row_index = r;
        row.lateral_m = layout.row_lateral(r);
        int segments = 1;
        if (layout.frame.curved()) {
            const double radius = layout.frame.center_l() - row.lateral_m;
            segments = std::max(1, static_cast<int>(std::ceil(spec.row_length_m / radius / kArcStepRad)));
        }
        row.polyline.reserve(static_cast<std::size_t>(segments) + 1);
        for (int i = 0; i <= segments; ++i) {
            const double s = spec.row_length_m * i / segments;
            row.polyline.push_back(layout.ground.lift(layout.frame.point(s, row.lateral_m)));
        }
        layout.rows.push_back(std::move(row));
    }
    auto place = [&](PlantInstance& p) {
        p.position = layout.ground.lift(layout.frame.point(p.along_m, p.lateral_m));
    };
    std::for_each(layout.plants.begin(), layout.plants.end(), place);
    std::for_each(layout.weeds.begin(), layout.weeds.end(), place);
}

void require(bool ok, const char* field, const char* what) {
    if (!ok) throw ValidationError(field, what);
}

double half_width(const FieldSpec& spec) { return 0.5 * (spec.row_count - 1) * spec.row_spacing_m; }

void scatter_weeds(FieldLayout& layout, const CategoryVariation& v) {
    const FieldSpec& spec = layout.spec;
    Stream rng(spec.rng_seed, {fnv1a64("weeds"), static_cast<std::uint64_t>(to_char(v.category))});
    const std::uint64_t count = rng.poisson(v.weed_density_per_m2 * weed_area_m2(spec));
    const double lo = -0.5 * spec.row_spacing_m;
    const double hi = (spec.row_count - 0.5) * spec.row_spacing_m;
    const double clearance = std::min(v.weed_clearance_m, 0.45 * spec.row_spacing_m);
    layout.weeds.reserve(layout.weeds.size() + count);
    for (std::uint64_t i = 0; i < count; ++i) {
        PlantInstance w;
        w.along_m = rng.uniform(0.0, spec.row_length_m);
        for (;;) {
            w.lateral_m = rng.uniform(lo, hi);
            const double rel = w.lateral_m / spec.row_spacing_m;
            if (std::abs(rel - std::round(rel)) * spec.row_spacing_m >= clearance) break;
        }
        w.height_m = rng.uniform(spec.plant_base_height_m, spec.plant_base_height_m + spec.plant_height_var_m);
        w.yaw_deg = rng.uniform(-180.0, 180.0);
        w.scale = 0.4;
        w.shape_seed = rng.next_u64();
        layout.weeds.push_back(w);
    }
}

}  // namespace

std::string_view category_name(Category c) {
    switch (c) {
        case Category::horizontal_shadow: return "Horizontal Shadow";
        case Category::slope_curve: return "Slope/Curve";
        case Category::discontinuities: return "Discontinuities";
        case Category::front_shadow: return "Front Shadow";
        case Category::dense_weed: return "Dense Weed";
        case Category::large_crops: return "Large Crops";
        case Category::small_crops: return "Small Crops";
        case Category::sunlight: return "Sunlight";
        case Category::tyre_tracks: return "Tyre Tracks";
        case Category::sparse_weed: return "Sparse Weed";
    }
    return "?";
}

std::optional<Category> parse_category(std::string_view id) {
    if (id.size() != 1 || id[0] < 'a' || id[0] > 'j') return std::nullopt;
    return static_cast<Category>(id[0]);
}

Category category_from_id(std::string_view id) {
    if (auto c = parse_category(id)) return *c;
    throw ValidationError("category", "unknown category id '" + std::string(id) + "' (expected a..j)");
}

void FieldSpec::validate() const {
    require(row_spacing_m > 0.0, "row_spacing_m", "must be > 0");
    require(seed_spacing_m > 0.0, "seed_spacing_m", "must be > 0");
    require(row_length_m > 0.0, "row_length_m", "must be > 0");
    require(row_count >= 1, "row_count", "must be >= 1");
    require(plant_base_height_m > 0.0, "plant_base_height_m", "must be > 0");
    require(plant_height_var_m >= 0.0, "plant_height_var_m", "must be >= 0");
    require(plant_yaw_range_deg >= 0.0 && plant_yaw_range_deg <= 180.0, "plant_yaw_range_deg",
            "must lie in [0, 180]");
    require(lateral_jitter_m >= 0.0 && lateral_jitter_m < 0.5 * row_spacing_m, "lateral_jitter_m",
            "must lie in [0, row_spacing_m / 2)");
}

FieldFrame FieldFrame::straight(double along_scale) {
    FieldFrame f;
    f.along_scale_ = along_scale;
    return f;
}

FieldFrame FieldFrame::arc(double center_l) {
    FieldFrame f;
    f.curved_ = true;
    f.center_l_ = center_l;
    return f;
}

cv::Point2d FieldFrame::point(double s, double l) const {
    if (!curved_) return {s * along_scale_, l};
    const double radius = center_l_ - l;
    const double theta = s / radius;
    return {radius * std::sin(theta), center_l_ - radius * std::cos(theta)};
}

double FieldFrame::heading(double s, double l) const {
    if (!curved_) return 0.0;
    return s / (center_l_ - l);
}

std::pair<double, double> FieldFrame::locate(const cv::Point2d& p) const {
    if (!curved_) return {p.x / along_scale_, p.y};
    const double dx = p.x;
    const double dy = p.y - center_l_;
    const double radius = std::hypot(dx, dy);
    const double theta = std::atan2(dx, -dy);
    return {theta * radius, center_l_ - radius};
}

double FieldFrame::shared_length(double l, double l_a, double l_b, double length) const {
    if (!curved_) return length;
    const double theta = std::min(length / (center_l_ - l_a), length / (center_l_ - l_b));
    return theta * (center_l_ - l);
}

cv::Point3d GroundPlane::normal() const {
    const cv::Point3d n(-grade_x, -grade_y, 1.0);
    return n / cv::norm(n);
}

double RowCenterline::arc_length() const {
    double len = 0.0;
    for (std::size_t i = 1; i < polyline.size(); ++i) len += cv::norm(polyline[i] - polyline[i - 1]);
    return len;
}

std::size_t FieldLayout::present_plants() const {
    return static_cast<std::size_t>(
        std::count_if(plants.begin(), plants.end(), [](const PlantInstance& p) { return p.present; }));
}

double weed_area_m2(const FieldSpec& spec) { return spec.row_length_m * spec.row_count * spec.row_spacing_m; }

FieldLayout generate_field(const FieldSpec& spec) {
    spec.validate();
    FieldLayout layout;
    layout.spec = spec;
    const int per_row = plants_per_row(spec);
    layout.plants.reserve(static_cast<std::size_t>(per_row) * spec.row_count);
    const std::uint64_t plant_tag = fnv1a64("plant");
    for (int r = 0; r < spec.row_count; ++r) {
        for (int k = 0; k < per_row; ++k) {
            Stream rng(spec.rng_seed, {plant_tag, static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(k)});
            PlantInstance p;
            p.row_index = r;
            p.slot = k;
            p.height_m = rng.uniform(spec.plant_base_height_m, spec.plant_base_height_m + spec.plant_height_var_m);
            p.yaw_deg = rng.uniform(-spec.plant_yaw_range_deg, spec.plant_yaw_range_deg);
            p.along_m = k * spec.seed_spacing_m;
            p.lateral_m = layout.row_lateral(r) + rng.uniform(-spec.lateral_jitter_m, spec.lateral_jitter_m);
            p.shape_seed = rng.next_u64();
            layout.plants.push_back(p);
        }
    }
    rebuild_geometry(layout);
    return layout;
}

CategoryVariation CategoryVariation::with_intensity(Category category, double intensity, std::uint64_t seed) {
    CategoryVariation v;
    v.category = category;
    v.intensity = intensity;
    const double t = std::clamp(intensity, 0.0, 1.0);
    Stream rng(seed, {fnv1a64("variation"), static_cast<std::uint64_t>(to_char(category))});
    switch (category) {
        case Category::horizontal_shadow:
            v.shadow_band_width_m = 0.3 + 0.9 * t;
            break;
        case Category::slope_curve:
            if (rng.bernoulli(0.5))
                v.curvature_radius_m = 60.0 - 45.0 * t;
            else
                v.slope_grade = (rng.bernoulli(0.5) ? 1.0 : -1.0) * (0.03 + 0.12 * t);
            break;
        case Category::discontinuities:
            v.removal_probability = 0.1 + 0.5 * t;
            break;
        case Category::front_shadow:
            v.robot_sun_elevation_deg = 35.0 - 15.0 * t;
            break;
        case Category::dense_weed:
            v.weed_density_per_m2 = 10.0 + 40.0 * t;
            break;
        case Category::sparse_weed:
            v.weed_density_per_m2 = 1.0 + 3.0 * t;
            break;
        case Category::large_crops:
            v.large_fraction = 0.1 + 0.3 * t;
            v.large_scale = 1.6 + 0.8 * t;
            break;
        case Category::small_crops:
            v.small_scale = 0.7 - 0.35 * t;
            break;
        case Category::sunlight:
            v.glare_strength = 0.4 + 0.6 * t;
            break;
        case Category::tyre_tracks:
            v.tyre_track_width_m = 0.25 + 0.15 * t;
            break;
    }
    return v;
}

void CategoryVariation::validate(const FieldSpec& spec) const {
    const char id = to_char(category);
    require(id >= 'a' && id <= 'j', "category", "unknown category id");
    require(intensity >= 0.0 && intensity <= 1.0, "intensity", "must lie in [0, 1]");
    switch (category) {
        case Category::horizontal_shadow:
            require(shadow_band_width_m > 0.0, "shadow_band_width_m", "must be > 0");
            require(shadow_band_spacing_m > shadow_band_width_m, "shadow_band_spacing_m",
                    "must exceed shadow_band_width_m");
            require(shadow_caster_height_m > 0.0, "shadow_caster_height_m", "must be > 0");
            break;
        case Category::slope_curve:
            require(curvature_radius_m == 0.0 || curvature_radius_m > half_width(spec) + spec.row_spacing_m,
                    "curvature_radius_m", "must be 0 or exceed the field half-width plus one row gap");
            require(std::abs(slope_grade) < 1.0, "slope_grade", "must lie in (-1, 1)");
            require(curvature_radius_m == 0.0 || slope_grade == 0.0, "slope_grade",
                    "cannot combine slope with curvature");
            break;
        case Category::discontinuities:
            require(removal_probability >= 0.0 && removal_probability <= 1.0, "removal_probability",
                    "must lie in [0, 1]");
            break;
        case Category::front_shadow:
            require(robot_sun_elevation_deg > 0.0 && robot_sun_elevation_deg <= 90.0, "robot_sun_elevation_deg",
                    "must lie in (0, 90]");
            break;
        case Category::dense_weed:
        case Category::sparse_weed:
            require(weed_density_per_m2 >= 0.0, "weed_density_per_m2", "must be >= 0");
            require(weed_clearance_m >= 0.0, "weed_clearance_m", "must be >= 0");
            break;
        case Category::large_crops:
            require(large_fraction >= 0.0 && large_fraction <= 1.0, "large_fraction", "must lie in [0, 1]");
            require(large_scale > 0.0, "large_scale", "must be > 0");
            break;
        case Category::small_crops:
            require(small_scale > 0.0, "small_scale", "must be > 0");
            break;
        case Category::sunlight:
            require(glare_strength >= 0.0 && glare_strength <= 1.0, "glare_strength", "must lie in [0, 1]");
            break;
        case Category::tyre_tracks:
            require(tyre_track_width_m > 0.0, "tyre_track_width_m", "must be > 0");
            break;
    }
}

FieldLayout apply_variation(FieldLayout layout, const CategoryVariation& v) {
    layout.spec.validate();
    v.validate(layout.spec);
    const FieldSpec& spec = layout.spec;
    const auto tag = static_cast<std::uint64_t>(to_char(v.category));
    layout.category = v.category;

    switch (v.category) {
        case Category::horizontal_shadow: {
            const double l_mid = half_width(spec);
            for (double s = 0.5 * v.shadow_band_spacing_m - 2.0; s < spec.row_length_m + 2.0;
                 s += v.shadow_band_spacing_m) {
                BoxOccluder box;
                const cv::Point3d base = layout.ground.lift(layout.frame.point(s, l_mid));
                box.center = base + cv::Point3d(0.0, 0.0, v.shadow_caster_height_m);
                box.half_extent = {0.5 * v.shadow_band_width_m, l_mid + 4.0, 0.05};
                box.yaw_deg = layout.frame.heading(s, l_mid) / kDeg;
                layout.annotations.shadow_casters.push_back(box);
            }
            break;
        }
        case Category::slope_curve:
            if (v.curvature_radius_m > 0.0) {
                layout.frame = FieldFrame::arc(half_width(spec) + v.curvature_radius_m);
                layout.ground = GroundPlane{};
            } else {
                layout.frame = FieldFrame::straight(1.0 / std::sqrt(1.0 + v.slope_grade * v.slope_grade));
                layout.ground = GroundPlane{v.slope_grade, 0.0};
            }
            rebuild_geometry(layout);
            break;
        case Category::discontinuities:
            for (PlantInstance& p : layout.plants) {
                Stream rng(spec.rng_seed, {fnv1a64("removal"), tag, static_cast<std::uint64_t>(p.row_index),
                                           static_cast<std::uint64_t>(p.slot)});
                if (rng.uniform() < v.removal_probability) p.present = false;
            }
            break;
        case Category::front_shadow:
            layout.annotations.robot_shadow = true;
            layout.annotations.robot_sun_elevation_deg = v.robot_sun_elevation_deg;
            break;
        case Category::dense_weed:
        case Category::sparse_weed:
            scatter_weeds(layout, v);
            rebuild_geometry(layout);
            break;
        case Category::large_crops:
            for (PlantInstance& p : layout.plants) {
                Stream rng(spec.rng_seed, {fnv1a64("large"), tag, static_cast<std::uint64_t>(p.row_index),
                                           static_cast<std::uint64_t>(p.slot)});
                if (rng.uniform() < v.large_fraction) p.scale *= v.large_scale;
            }
            break;
        case Category::small_crops:
            for (PlantInstance& p : layout.plants) p.scale *= v.small_scale;
            break;
        case Category::sunlight: {
            Stream rng(spec.rng_seed, {fnv1a64("glare"), tag});
            layout.annotations.glare_strength = v.glare_strength;
            layout.annotations.glare_center = {rng.uniform(0.1, 0.9), rng.uniform(0.0, 0.3)};
            break;
        }
        case Category::tyre_tracks: {
            const int centre_lane = std::max(0, (spec.row_count - 1) / 2 - 2);
            const double first = v.tyre_track_offset_m.value_or((centre_lane + 0.5) * spec.row_spacing_m);
            layout.annotations.tyre_tracks.push_back({first, v.tyre_track_width_m});
            layout.annotations.tyre_tracks.push_back({first + 3.0 * spec.row_spacing_m, v.tyre_track_width_m});
            break;
        }
    }
    return layout;
}

std::vector<CameraPose> generate_waypoints(const FieldLayout& layout, int lane_index, double step_m,
                                           double cam_height_m, double cam_pitch_deg) {
    const FieldSpec& spec = layout.spec;
    if (lane_index < 0 || lane_index + 1 >= spec.row_count)
        throw ValidationError("lane_index", "lane " + std::to_string(lane_index) + " is not between two rows");
    require(step_m > 0.0, "step_m", "must be > 0");
    require(cam_height_m > 0.0, "cam_height_m", "must be > 0");
    const double l_a = layout.row_lateral(lane_index);
    const double l_b = layout.row_lateral(lane_index + 1);
    const double l_mid = 0.5 * (l_a + l_b);
    const double length = layout.frame.shared_length(l_mid, l_a, l_b, spec.row_length_m);
    const auto count = static_cast<std::size_t>(std::floor(length / step_m + 1e-9)) + 1;

    std::vector<CameraPose> poses;
    poses.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double s = static_cast<double>(i) * step_m;
        CameraPose pose;
        pose.position = layout.ground.lift(layout.frame.point(s, l_mid)) + cv::Point3d(0.0, 0.0, cam_height_m);
        pose.yaw_deg = layout.frame.heading(s, l_mid) / kDeg;
        pose.pitch_deg = cam_pitch_deg;
        poses.push_back(pose);
    }
    return poses;
}

}  // namespace cropforge
