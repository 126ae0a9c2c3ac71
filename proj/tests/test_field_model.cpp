#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "cropforge/error.hpp"
#include "cropforge/field_model.hpp"

using namespace cropforge;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double polyline_length(const std::vector<cv::Point3d>& pts) {
    double len = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) len += cv::norm(pts[i] - pts[i - 1]);
    return len;
}

bool same_rows(const FieldLayout& a, const FieldLayout& b) {
    if (a.rows.size() != b.rows.size()) return false;
    for (std::size_t r = 0; r < a.rows.size(); ++r) {
        if (a.rows[r].row_index != b.rows[r].row_index || a.rows[r].polyline != b.rows[r].polyline) return false;
    }
    return true;
}

bool same_plant(const PlantInstance& a, const PlantInstance& b) {
    return a.position == b.position && a.yaw_deg == b.yaw_deg && a.height_m == b.height_m &&
           a.present == b.present && a.scale == b.scale && a.shape_seed == b.shape_seed;
}

bool same_plants(const std::vector<PlantInstance>& a, const std::vector<PlantInstance>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!same_plant(a[i], b[i])) return false;
    return true;
}

double wrap_deg(double d) {
    while (d > 180.0) d -= 360.0;
    while (d <= -180.0) d += 360.0;
    return d;
}

CategoryVariation curve(double radius) {
    CategoryVariation v;
    v.category = Category::slope_curve;
    v.curvature_radius_m = radius;
    v.slope_grade = 0.0;
    return v;
}

}  // namespace

TEST(FieldModel, DefaultRowsAreSixtyCentimetresApart) {
    const FieldLayout f = generate_field(FieldSpec{});
    ASSERT_EQ(f.rows.size(), 20u);
    for (std::size_t r = 1; r < f.rows.size(); ++r)
        for (std::size_t i = 0; i < f.rows[r].polyline.size(); ++i)
            EXPECT_NEAR(f.rows[r].polyline[i].y - f.rows[r - 1].polyline[i].y, 0.60, 1e-12);
}

TEST(FieldModel, ThirtyEightPlantsPerDefaultRow) {
    // 37 * 0.16 = 5.92 <= 6.0 < 38 * 0.16
    const FieldLayout f = generate_field(FieldSpec{});
    std::vector<int> per_row(20, 0);
    for (const PlantInstance& p : f.plants) ++per_row[static_cast<std::size_t>(p.row_index)];
    for (int n : per_row) EXPECT_EQ(n, 38);
    EXPECT_EQ(f.plants.size(), 20u * 38u);
}

TEST(FieldModel, ZeroVarianceGivesIdenticalPlants) {
    FieldSpec spec;
    spec.plant_height_var_m = 0.0;
    spec.plant_yaw_range_deg = 0.0;
    spec.rng_seed = 99;
    const FieldLayout f = generate_field(spec);
    for (const PlantInstance& p : f.plants) {
        EXPECT_EQ(p.height_m, 0.06);
        EXPECT_EQ(p.yaw_deg, 0.0);
    }
}

TEST(FieldModel, PlantsSitAtSeedSpacingMultiples) {
    FieldSpec spec;
    spec.rng_seed = 4;
    const FieldLayout f = generate_field(spec);
    for (const PlantInstance& p : f.plants) {
        EXPECT_NEAR(p.position.x, p.slot * spec.seed_spacing_m, 1e-12);
        EXPECT_LE(std::abs(p.position.y - p.row_index * spec.row_spacing_m), spec.lateral_jitter_m + 1e-12);
        EXPECT_EQ(p.position.z, 0.0);
    }
}

TEST(FieldModel, SampledAttributesStayInRange) {
    std::size_t samples = 0;
    for (std::uint64_t seed = 0; samples < 10000; ++seed) {
        FieldSpec spec;
        spec.rng_seed = seed;
        const FieldLayout f = generate_field(spec);
        for (const PlantInstance& p : f.plants) {
            ASSERT_GE(p.height_m, spec.plant_base_height_m);
            ASSERT_LE(p.height_m, spec.plant_base_height_m + spec.plant_height_var_m);
            ASSERT_GE(p.yaw_deg, -spec.plant_yaw_range_deg);
            ASSERT_LE(p.yaw_deg, spec.plant_yaw_range_deg);
            ASSERT_LE(std::abs(p.lateral_m - p.row_index * spec.row_spacing_m), spec.lateral_jitter_m);
        }
        samples += f.plants.size();
    }
}

TEST(FieldModel, GenerationIsDeterministic) {
    FieldSpec spec;
    spec.rng_seed = 1234;
    const FieldLayout a = generate_field(spec);
    const FieldLayout b = generate_field(spec);
    EXPECT_TRUE(same_rows(a, b));
    EXPECT_TRUE(same_plants(a.plants, b.plants));
    spec.rng_seed = 1235;
    EXPECT_FALSE(same_plants(a.plants, generate_field(spec).plants));
}

TEST(FieldModel, RowStreamsAreIndependent) {
    FieldSpec small;
    small.row_count = 3;
    small.rng_seed = 8;
    FieldSpec large = small;
    large.row_count = 5;
    large.row_length_m = 9.0;  // rows gain plants at the far end
    const FieldLayout a = generate_field(small);
    const FieldLayout b = generate_field(large);
    for (const PlantInstance& p : a.plants) {
        const auto it = std::find_if(b.plants.begin(), b.plants.end(), [&](const PlantInstance& q) {
            return q.row_index == p.row_index && q.slot == p.slot;
        });
        ASSERT_NE(it, b.plants.end());
        EXPECT_EQ(it->yaw_deg, p.yaw_deg);
        EXPECT_EQ(it->height_m, p.height_m);
        EXPECT_EQ(it->lateral_m, p.lateral_m);
    }
}

TEST(FieldModel, ArcLengthEqualsRowLength) {
    FieldSpec spec;
    spec.rng_seed = 2;
    std::vector<FieldLayout> layouts = {generate_field(spec), apply_variation(generate_field(spec), curve(15.0))};
    CategoryVariation slope;
    slope.category = Category::slope_curve;
    slope.slope_grade = 0.12;
    layouts.push_back(apply_variation(generate_field(spec), slope));
    for (const FieldLayout& f : layouts)
        for (const RowCenterline& r : f.rows) {
            // a chord approximation of an arc is shorter; the bound covers the polyline step
            EXPECT_NEAR(polyline_length(r.polyline), spec.row_length_m, 1e-6 * spec.row_length_m + 1e-4);
            EXPECT_NEAR(r.arc_length(), spec.row_length_m, 1e-6 * spec.row_length_m);
        }
}

TEST(FieldModel, InvalidSpecNamesTheField) {
    FieldSpec spec;
    spec.row_spacing_m = 0.0;
    try {
        generate_field(spec);
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.field(), "row_spacing_m");
    }
    spec = {};
    spec.row_count = 0;
    EXPECT_THROW(generate_field(spec), ValidationError);
    spec = {};
    spec.plant_height_var_m = -0.01;
    EXPECT_THROW(generate_field(spec), ValidationError);
}

TEST(FieldModel, UnknownCategoryIdThrows) {
    EXPECT_FALSE(parse_category("k").has_value());
    EXPECT_THROW(category_from_id("k"), ValidationError);
    EXPECT_THROW(category_from_id("ab"), ValidationError);
    EXPECT_EQ(category_from_id("e"), Category::dense_weed);
}

TEST(Variation, ZeroRemovalLeavesLayoutUnchanged) {
    FieldSpec spec;
    spec.rng_seed = 5;
    const FieldLayout base = generate_field(spec);
    CategoryVariation v;
    v.category = Category::discontinuities;
    v.removal_probability = 0.0;
    const FieldLayout out = apply_variation(base, v);
    EXPECT_TRUE(same_rows(base, out));
    EXPECT_TRUE(same_plants(base.plants, out.plants));
    EXPECT_EQ(out.present_plants(), base.plants.size());
}

TEST(Variation, FullRemovalKeepsCentrelines) {
    FieldSpec spec;
    spec.rng_seed = 5;
    const FieldLayout base = generate_field(spec);
    CategoryVariation v;
    v.category = Category::discontinuities;
    v.removal_probability = 1.0;
    const FieldLayout out = apply_variation(base, v);
    EXPECT_EQ(out.present_plants(), 0u);
    for (const PlantInstance& p : out.plants) EXPECT_FALSE(p.present);
    EXPECT_TRUE(same_rows(base, out));
}

TEST(Variation, RemovalRateMatchesProbability) {
    std::size_t removed = 0;
    std::size_t total = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        FieldSpec spec;
        spec.rng_seed = seed;
        CategoryVariation v;
        v.category = Category::discontinuities;
        v.removal_probability = 0.3;
        const FieldLayout out = apply_variation(generate_field(spec), v);
        total += out.plants.size();
        removed += out.plants.size() - out.present_plants();
    }
    const double n = static_cast<double>(total);
    EXPECT_NEAR(static_cast<double>(removed), 0.3 * n, 4.0 * std::sqrt(n * 0.3 * 0.7));
}

TEST(Variation, CentrelinesConservedOutsideCurveCategory) {
    FieldSpec spec;
    spec.rng_seed = 21;
    const FieldLayout base = generate_field(spec);
    for (Category c : kAllCategories) {
        if (c == Category::slope_curve) continue;
        for (double t : {0.0, 0.5, 1.0}) {
            const FieldLayout out = apply_variation(base, CategoryVariation::with_intensity(c, t, 3));
            EXPECT_TRUE(same_rows(base, out)) << to_char(c) << " at " << t;
        }
    }
}

TEST(Variation, WeedCountFollowsPoissonLaw) {
    FieldSpec spec;
    spec.row_count = 4;
    spec.row_length_m = 2.0;
    const double density = 20.0;
    const double mean = density * weed_area_m2(spec);
    ASSERT_DOUBLE_EQ(weed_area_m2(spec), 2.0 * 4 * 0.6);
    const double sigma = std::sqrt(mean);
    int within = 0;
    double sum = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        spec.rng_seed = seed;
        CategoryVariation v;
        v.category = Category::dense_weed;
        v.weed_density_per_m2 = density;
        const FieldLayout out = apply_variation(generate_field(spec), v);
        const double n = static_cast<double>(out.weeds.size());
        sum += n;
        within += std::abs(n - mean) <= 3.0 * sigma ? 1 : 0;
        for (const PlantInstance& w : out.weeds) {
            const double rel = w.lateral_m / spec.row_spacing_m;
            EXPECT_GE(std::abs(rel - std::round(rel)) * spec.row_spacing_m, v.weed_clearance_m - 1e-12);
        }
    }
    // 3 sigma holds for 99.7% of draws; the mean of 100 draws is 10x tighter
    EXPECT_GE(within, 97);
    EXPECT_NEAR(sum / 100.0, mean, 3.0 * sigma / 10.0);
}

TEST(Variation, IntensityAndCategoryParametersValidate) {
    for (Category c : kAllCategories)
        for (double t : {0.0, 1.0}) EXPECT_NO_THROW(CategoryVariation::with_intensity(c, t).validate(FieldSpec{}));
    CategoryVariation v;
    v.intensity = 1.5;
    EXPECT_THROW(v.validate(FieldSpec{}), ValidationError);
    v = {};
    v.removal_probability = -0.1;
    EXPECT_THROW(v.validate(FieldSpec{}), ValidationError);
}

TEST(Waypoints, SixMetreLaneAtOneMetreStepsGivesSevenPoses) {
    const FieldLayout f = generate_field(FieldSpec{});
    const auto poses = generate_waypoints(f, 3, 1.0, 0.8, 25.0);
    ASSERT_EQ(poses.size(), 7u);
    for (std::size_t i = 0; i < poses.size(); ++i) {
        EXPECT_NEAR(poses[i].position.x, static_cast<double>(i), 1e-12);
        EXPECT_NEAR(poses[i].position.y, 3.5 * 0.6, 1e-12);
        EXPECT_NEAR(poses[i].position.z, 0.8, 1e-12);
        EXPECT_EQ(poses[i].yaw_deg, 0.0);
        EXPECT_EQ(poses[i].pitch_deg, 25.0);
    }
}

TEST(Waypoints, StepLongerThanLaneGivesOnePose) {
    const FieldLayout f = generate_field(FieldSpec{});
    const auto poses = generate_waypoints(f, 0, 10.0, 0.8, 25.0);
    ASSERT_EQ(poses.size(), 1u);
    EXPECT_NEAR(poses[0].position.x, 0.0, 1e-12);
}

TEST(Waypoints, LaneOutsideFieldThrows) {
    const FieldLayout f = generate_field(FieldSpec{});
    EXPECT_THROW(generate_waypoints(f, -1, 1.0, 0.8, 25.0), ValidationError);
    EXPECT_THROW(generate_waypoints(f, 19, 1.0, 0.8, 25.0), ValidationError);
    EXPECT_THROW(generate_waypoints(f, 0, 0.0, 0.8, 25.0), ValidationError);
}

TEST(Waypoints, CurvedLaneYawFollowsTangent) {
    const FieldLayout f = apply_variation(generate_field(FieldSpec{}), curve(20.0));
    const auto poses = generate_waypoints(f, 4, 0.25, 0.8, 25.0);
    ASSERT_GT(poses.size(), 10u);
    // finite-difference tangent: chord directions between consecutive poses
    std::vector<double> chord;
    for (std::size_t i = 0; i + 1 < poses.size(); ++i) {
        const cv::Point3d d = poses[i + 1].position - poses[i].position;
        chord.push_back(std::atan2(d.y, d.x) / kDeg);
    }
    for (std::size_t i = 0; i + 1 < chord.size(); ++i) {
        const double yaw_change = wrap_deg(poses[i + 2].yaw_deg - poses[i + 1].yaw_deg);
        EXPECT_NEAR(yaw_change, wrap_deg(chord[i + 1] - chord[i]), 1e-6);
        EXPECT_GT(yaw_change, 0.0);  // bends towards +y
    }
}
