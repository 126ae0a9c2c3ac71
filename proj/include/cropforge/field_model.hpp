#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <opencv2/core.hpp>

#include "cropforge/camera.hpp"

namespace cropforge {

// Field-condition categories a..j.
enum class Category : char {
    horizontal_shadow = 'a',
    slope_curve = 'b',
    discontinuities = 'c',
    front_shadow = 'd',
    dense_weed = 'e',
    large_crops = 'f',
    small_crops = 'g',
    sunlight = 'h',
    tyre_tracks = 'i',
    sparse_weed = 'j',
};

inline constexpr std::array<Category, 10> kAllCategories = {
    Category::horizontal_shadow, Category::slope_curve, Category::discontinuities, Category::front_shadow,
    Category::dense_weed,        Category::large_crops, Category::small_crops,     Category::sunlight,
    Category::tyre_tracks,       Category::sparse_weed,
};

constexpr char to_char(Category c) { return static_cast<char>(c); }
std::string_view category_name(Category c);
std::optional<Category> parse_category(std::string_view id);
// Like parse_category but throws ValidationError on unknown ids.
Category category_from_id(std::string_view id);

// Field dimensions and plant sampling ranges. Lengths in metres, angles in
// degrees. Defaults reproduce the sugar-beet simulation parameters.
struct FieldSpec {
    double row_spacing_m = 0.60;
    double seed_spacing_m = 0.16;
    double plant_base_height_m = 0.06;
    double plant_height_var_m = 0.03;
    double plant_yaw_range_deg = 145.0;
    double row_length_m = 6.0;
    int row_count = 20;
    // Uniform lateral offset bound around the centreline.
    double lateral_jitter_m = 0.01;
    std::uint64_t rng_seed = 0;

    void validate() const;
};

// Maps field coordinates (s, l) to the ground plane. `l` is the lateral
// offset of a line parallel to the reference line (row 0 sits at l = 0) and
// `s` is arc length measured along that line, so every row has the same
// parametrisation length whether straight or bent.
class FieldFrame {
public:
    // `along_scale` shortens the x extent so that arc length measured on a
    // ground plane rising along x stays equal to s.
    static FieldFrame straight(double along_scale = 1.0);
    // Concentric arcs bending towards +y around the point (0, center_l).
    // Lines with l >= center_l are undefined.
    static FieldFrame arc(double center_l);

    bool curved() const { return curved_; }
    double center_l() const { return center_l_; }

    cv::Point2d point(double s, double l) const;
    // Direction of travel along line l at s, radians from +x.
    double heading(double s, double l) const;
    // Inverse of point(): returns (s, l).
    std::pair<double, double> locate(const cv::Point2d& p) const;
    // Arc length along line `l` that stays alongside lines spanning [0, length] at
    // offsets l_a and l_b.
    double shared_length(double l, double l_a, double l_b, double length) const;

private:
    bool curved_ = false;
    double center_l_ = 0.0;
    double along_scale_ = 1.0;
};

// z = grade_x * x + grade_y * y
struct GroundPlane {
    double grade_x = 0.0;
    double grade_y = 0.0;

    double height(double x, double y) const { return grade_x * x + grade_y * y; }
    cv::Point3d lift(const cv::Point2d& p) const { return {p.x, p.y, height(p.x, p.y)}; }
    cv::Point3d normal() const;
};

struct RowCenterline {
    int row_index = 0;
    double lateral_m = 0.0;
    std::vector<cv::Point3d> polyline;

    double arc_length() const;
};

struct PlantInstance {
    cv::Point3d position;
    double yaw_deg = 0.0;
    double height_m = 0.0;
    bool present = true;
    // Rendering size multiplier (large/small crop variations; weeds use 0.4).
    double scale = 1.0;
    int row_index = -1;  // -1 for weeds
    int slot = 0;        // k in s = k * seed_spacing
    // Field-frame coordinates the position is rebuilt from when rows bend.
    double along_m = 0.0;
    double lateral_m = 0.0;
    std::uint64_t shape_seed = 0;
};

// Axis-aligned (in its own yaw frame) box that only casts shadows.
struct BoxOccluder {
    cv::Point3d center;
    cv::Point3d half_extent;
    double yaw_deg = 0.0;
};

struct TyreTrack {
    double lateral_m = 0.0;
    double width_m = 0.35;
};

// Renderer-facing side effects of a category variation.
struct SceneAnnotations {
    std::vector<BoxOccluder> shadow_casters;  // a
    bool robot_shadow = false;                // d
    double robot_sun_elevation_deg = 25.0;
    double glare_strength = 0.0;  // h
    cv::Point2d glare_center{0.8, 0.15};  // fraction of image width/height
    std::vector<TyreTrack> tyre_tracks;  // i

    bool shadows_active() const { return robot_shadow || !shadow_casters.empty(); }
};

struct FieldLayout {
    FieldSpec spec;
    FieldFrame frame;
    GroundPlane ground;
    std::vector<RowCenterline> rows;
    std::vector<PlantInstance> plants;
    std::vector<PlantInstance> weeds;
    SceneAnnotations annotations;
    std::optional<Category> category;

    double row_lateral(int row) const { return row * spec.row_spacing_m; }
    std::size_t present_plants() const;
};

// One category variation. Parameters that do not belong to `category` are
// ignored. `with_intensity` fills them from a single [0,1] knob.
struct CategoryVariation {
    Category category = Category::discontinuities;
    double intensity = 0.5;

    // a
    double shadow_band_width_m = 0.6;
    double shadow_band_spacing_m = 2.5;
    double shadow_caster_height_m = 2.5;
    // b: curvature_radius_m == 0 keeps rows straight
    double curvature_radius_m = 0.0;
    // rise per metre along the rows; exclusive with curvature
    double slope_grade = 0.0;
    // c
    double removal_probability = 0.3;
    // d
    double robot_sun_elevation_deg = 25.0;
    // e / j, per square metre of field area
    double weed_density_per_m2 = 20.0;
    double weed_clearance_m = 0.05;
    // f
    double large_fraction = 0.25;
    double large_scale = 2.0;
    // g
    double small_scale = 0.5;
    // h
    double glare_strength = 0.7;
    // i: lateral position of the first track (default: the gap two lanes
    // before the field centre); the second sits 3 row gaps further
    std::optional<double> tyre_track_offset_m;
    double tyre_track_width_m = 0.35;

    static CategoryVariation with_intensity(Category category, double intensity, std::uint64_t seed = 0);
    void validate(const FieldSpec& spec) const;
};

// Plants at s = k * seed_spacing for k = 0.. while k * seed_spacing <= row_length,
// attributes drawn from the per-plant stream (rng_seed, "plant", row, k).
FieldLayout generate_field(const FieldSpec& spec);

// Applies one variation. Row centrelines stay the label ground truth: plant
// removals never break them, only category b moves them.
FieldLayout apply_variation(FieldLayout layout, const CategoryVariation& variation);

// Field area used for weed sampling: row_length * row_count * row_spacing.
double weed_area_m2(const FieldSpec& spec);

// Poses along the midline between rows lane_index and lane_index + 1.
std::vector<CameraPose> generate_waypoints(const FieldLayout& layout, int lane_index, double step_m,
                                           double cam_height_m, double cam_pitch_deg);

}  // namespace cropforge
