#include "cropforge/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <opencv2/imgcodecs.hpp>

#include "cropforge/error.hpp"
#include "cropforge/rng.hpp"
#include "raster.hpp"

namespace cropforge {

namespace {

using detail::draw_triangle;
using detail::Fragment;
using detail::ScreenMapping;
using detail::Vertex;

constexpr double kDeg = std::numbers::pi / 180.0;
// Instances further than this from the camera are neither drawn nor shadowed.
constexpr double kDrawDistanceM = 40.0;
constexpr double kShadowCasterRangeM = 20.0;
constexpr double kShadowTexelM = 0.01;
constexpr int kShadowMaxTexels = 4096;
constexpr double kShadowBiasM = 0.015;

// ---------------------------------------------------------------------------
// procedural texture

double lattice(std::uint64_t seed, std::int64_t ix, std::int64_t iy) {
    const std::uint64_t h = mix64(seed ^ mix64(static_cast<std::uint64_t>(ix) * 0xD1B54A32D192ED03ull +
                                               static_cast<std::uint64_t>(iy) * 0xABC98388FB8FAC03ull));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double value_noise(std::uint64_t seed, double x, double y) {
    const double fx = std::floor(x);
    const double fy = std::floor(y);
    const auto ix = static_cast<std::int64_t>(fx);
    const auto iy = static_cast<std::int64_t>(fy);
    const double tx = x - fx;
    const double ty = y - fy;
    const double sx = tx * tx * (3.0 - 2.0 * tx);
    const double sy = ty * ty * (3.0 - 2.0 * ty);
    const double a = lattice(seed, ix, iy);
    const double b = lattice(seed, ix + 1, iy);
    const double c = lattice(seed, ix, iy + 1);
    const double d = lattice(seed, ix + 1, iy + 1);
    return (a + (b - a) * sx) + ((c + (d - c) * sx) - (a + (b - a) * sx)) * sy;
}

// Fractal noise in [0, 1]. Octaves finer than the pixel footprint fade out
// so distant soil does not alias.
double fbm(std::uint64_t seed, double x, double y, int octaves, double footprint) {
    double sum = 0.0;
    double norm = 0.0;
    double amp = 1.0;
    double freq = 1.0;
    for (int o = 0; o < octaves; ++o) {
        const double fade = std::exp(-footprint * freq);
        sum += amp * (0.5 + fade * (value_noise(seed + static_cast<std::uint64_t>(o), x * freq, y * freq) - 0.5));
        norm += amp;
        amp *= 0.5;
        freq *= 2.0;
    }
    return sum / norm;
}

cv::Vec3d scale(const cv::Vec3d& c, double k) { return {c[0] * k, c[1] * k, c[2] * k}; }
cv::Vec3d mul(const cv::Vec3d& a, const cv::Vec3d& b) { return {a[0] * b[0], a[1] * b[1], a[2] * b[2]}; }

// ---------------------------------------------------------------------------
// geometry helpers

struct WorldTriangle {
    std::array<cv::Point3d, 3> p;
    std::array<cv::Point2d, 3> attr;
    double tint = 1.0;  // per-leaf brightness factor
};

// Rosette of 6-10 elevated, drooping elliptical leaves.
void append_plant_mesh(const PlantInstance& plant, std::vector<WorldTriangle>& out) {
    Stream rng(plant.shape_seed);
    const int leaves = 6 + static_cast<int>(rng.below(5));
    const double size = plant.height_m * plant.scale;
    constexpr int kSegments = 4;
    for (int i = 0; i < leaves; ++i) {
        const double azimuth = (plant.yaw_deg + 360.0 * i / leaves + rng.uniform(-12.0, 12.0)) * kDeg;
        const double length = size * rng.uniform(1.2, 1.7);
        const double width = length * rng.uniform(0.45, 0.6);
        const double elevation = rng.uniform(30.0, 55.0) * kDeg;
        const double droop = rng.uniform(0.15, 0.35);
        const double tint = 1.0 + rng.uniform(-1.0, 1.0);
        const cv::Point3d axis(std::cos(azimuth) * std::cos(elevation), std::sin(azimuth) * std::cos(elevation),
                               std::sin(elevation));
        const cv::Point3d side(-std::sin(azimuth), std::cos(azimuth), 0.0);
        std::array<cv::Point3d, kSegments + 1> left;
        std::array<cv::Point3d, kSegments + 1> right;
        for (int k = 0; k <= kSegments; ++k) {
            const double t = static_cast<double>(k) / kSegments;
            const double half = 0.5 * width * std::pow(std::sin(std::numbers::pi * (0.08 + 0.92 * t)), 0.8);
            const cv::Point3d mid = plant.position + axis * (t * length) - cv::Point3d(0, 0, droop * t * t * length);
            left[k] = mid + side * half;
            right[k] = mid - side * half;
        }
        for (int k = 0; k < kSegments; ++k) {
            const double t0 = static_cast<double>(k) / kSegments;
            const double t1 = static_cast<double>(k + 1) / kSegments;
            out.push_back({{left[k], right[k], right[k + 1]}, {{{t0, 1.0}, {t0, -1.0}, {t1, -1.0}}}, tint});
            out.push_back({{left[k], right[k + 1], left[k + 1]}, {{{t0, 1.0}, {t1, -1.0}, {t1, 1.0}}}, tint});
        }
    }
}

void append_box(const BoxOccluder& box, std::vector<WorldTriangle>& out) {
    const double c = std::cos(box.yaw_deg * kDeg);
    const double s = std::sin(box.yaw_deg * kDeg);
    std::array<cv::Point3d, 8> v;
    for (int i = 0; i < 8; ++i) {
        const double x = (i & 1 ? 1 : -1) * box.half_extent.x;
        const double y = (i & 2 ? 1 : -1) * box.half_extent.y;
        const double z = (i & 4 ? 1 : -1) * box.half_extent.z;
        v[i] = box.center + cv::Point3d(c * x - s * y, s * x + c * y, z);
    }
    static constexpr std::array<std::array<int, 4>, 6> kFaces = {
        {{0, 1, 3, 2}, {4, 5, 7, 6}, {0, 1, 5, 4}, {2, 3, 7, 6}, {0, 2, 6, 4}, {1, 3, 7, 5}}};
    for (const auto& f : kFaces) {
        out.push_back({{v[f[0]], v[f[1]], v[f[2]]}, {}, 1.0});
        out.push_back({{v[f[0]], v[f[2]], v[f[3]]}, {}, 1.0});
    }
}

// Robot body and camera mast, placed behind the camera in its heading frame.
void append_robot(const CameraPose& pose, double ground_z, std::vector<WorldTriangle>& out) {
    const double yaw = pose.yaw_deg * kDeg;
    const cv::Point3d fwd(std::cos(yaw), std::sin(yaw), 0.0);
    const double cam_h = pose.position.z - ground_z;
    BoxOccluder body;
    body.center = pose.position - fwd * 0.45;
    body.center.z = ground_z + 0.30;
    body.half_extent = {0.50, 0.34, 0.20};
    body.yaw_deg = pose.yaw_deg;
    append_box(body, out);
    BoxOccluder mast;
    mast.center = pose.position - fwd * 0.06;
    mast.center.z = ground_z + 0.5 * cam_h;
    mast.half_extent = {0.04, 0.05, 0.5 * cam_h};
    mast.yaw_deg = pose.yaw_deg;
    append_box(mast, out);
}

// Orthographic depth map seen from the sun.
class ShadowMap {
public:
    ShadowMap(const cv::Point3d& to_sun, const std::vector<WorldTriangle>& casters) : light_(to_sun) {
        const cv::Point3d helper = std::abs(light_.z) < 0.9 ? cv::Point3d(0, 0, 1) : cv::Point3d(1, 0, 0);
        u_ = light_.cross(helper);
        u_ /= cv::norm(u_);
        v_ = light_.cross(u_);
        double a0 = std::numeric_limits<double>::max();
        double b0 = a0;
        double a1 = -a0;
        double b1 = -a0;
        for (const auto& t : casters)
            for (const auto& p : t.p) {
                a0 = std::min(a0, p.dot(u_));
                a1 = std::max(a1, p.dot(u_));
                b0 = std::min(b0, p.dot(v_));
                b1 = std::max(b1, p.dot(v_));
            }
        if (casters.empty()) return;
        texel_ = std::max({kShadowTexelM, (a1 - a0) / kShadowMaxTexels, (b1 - b0) / kShadowMaxTexels});
        origin_ = {a0 - texel_, b0 - texel_};
        width_ = static_cast<int>(std::ceil((a1 - a0) / texel_)) + 3;
        height_ = static_cast<int>(std::ceil((b1 - b0) / texel_)) + 3;
        depth_.assign(static_cast<std::size_t>(width_) * height_, -std::numeric_limits<float>::infinity());
        for (const auto& t : casters) add(t);
    }

    bool lit(const cv::Point3d& p) const {
        if (depth_.empty()) return true;
        const int x = static_cast<int>(std::floor((p.dot(u_) - origin_.x) / texel_));
        const int y = static_cast<int>(std::floor((p.dot(v_) - origin_.y) / texel_));
        if (x < 0 || y < 0 || x >= width_ || y >= height_) return true;
        return p.dot(light_) >= depth_[static_cast<std::size_t>(y) * width_ + x] - kShadowBiasM;
    }

private:
    void add(const WorldTriangle& t) {
        std::array<cv::Point2d, 3> screen;
        std::array<double, 3> d;
        for (int i = 0; i < 3; ++i) {
            screen[i] = {(t.p[i].dot(u_) - origin_.x) / texel_, (t.p[i].dot(v_) - origin_.y) / texel_};
            d[i] = t.p[i].dot(light_);
        }
        detail::fill_triangle(screen, {1.0, 1.0, 1.0}, width_, height_, [&](const Fragment& f) {
            const double z = f.weights[0] * d[0] + f.weights[1] * d[1] + f.weights[2] * d[2];
            float& cell = depth_[static_cast<std::size_t>(f.y) * width_ + f.x];
            cell = std::max(cell, static_cast<float>(z));
        });
    }

    cv::Point3d light_;
    cv::Point3d u_;
    cv::Point3d v_;
    cv::Point2d origin_;
    double texel_ = kShadowTexelM;
    int width_ = 0;
    int height_ = 0;
    std::vector<float> depth_;
};

ScreenMapping make_view(const CameraIntrinsics& k) {
    return {k.focal_px(), k.principal(), k.width_px, k.height_px};
}

void check_inputs(const FieldLayout& layout, const CameraPose& pose, const CameraIntrinsics& intrinsics) {
    intrinsics.validate();
    pose.validate();
    if (!(pose.position.z > layout.ground.height(pose.position.x, pose.position.y)))
        throw ValidationError("pose.position", "camera must be above the ground plane");
}

Vertex make_vertex(const CameraBasis& basis, const CameraPose& pose, const cv::Point3d& world,
                   const cv::Point2d& attr = {}) {
    return {basis.to_camera(pose, world), world, attr};
}

bool instance_visible(const cv::Point3d& cam, double radius, const ScreenMapping& view) {
    if (cam.z + radius < detail::kNearPlane || cam.z > kDrawDistanceM) return false;
    if (cam.z <= radius) return true;
    const cv::Point2d px = view.to_screen(cam);
    const double r_px = view.focal * radius / (cam.z - radius) + 2.0;
    return px.x > -r_px && px.y > -r_px && px.x < view.width + r_px && px.y < view.height + r_px;
}

double glare_profile(double x, double y, const cv::Point2d& centre, double diag) {
    const double dx = x - centre.x;
    const double dy = y - centre.y;
    const double r = std::hypot(dx, dy) / diag;
    double g = std::exp(-(r * r) / 0.004) + 0.45 * std::exp(-r / 0.18);
    // six soft streaks
    const double angle = std::atan2(dy, dx);
    const double streak = std::pow(std::abs(std::cos(3.0 * angle)), 40.0);
    g += 0.35 * streak * std::exp(-r / 0.25);
    return g;
}

}  // namespace

std::string_view domain_name(Domain d) { return d == Domain::sim ? "sim" : "real"; }

Domain domain_from_name(std::string_view name) {
    if (name == "sim") return Domain::sim;
    if (name == "real") return Domain::real;
    throw ValidationError("domain", "unknown domain '" + std::string(name) + "' (expected sim|real)");
}

SceneStyle SceneStyle::sim() { return SceneStyle{}; }

SceneStyle SceneStyle::real_proxy() {
    SceneStyle s;
    s.style_id = "real-proxy";
    s.soil_rgb = {0.40, 0.31, 0.25};
    s.soil_octaves = 6;
    s.soil_feature_m = 0.05;
    s.soil_contrast = 0.5;
    s.leaf_rgb = {0.30, 0.53, 0.17};
    s.leaf_variation = 0.2;
    s.leaf_vein = 0.35;
    s.sky_rgb = {0.80, 0.83, 0.86};
    s.sun_azimuth_deg = 215.0;
    s.sun_elevation_deg = 38.0;
    s.sun_intensity = 0.80;
    s.ambient = 0.38;
    s.glare_strength = 0.05;
    return s;
}

SceneStyle SceneStyle::from_id(std::string_view id) {
    if (id == "sim") return sim();
    if (id == "real-proxy" || id == "real") return real_proxy();
    throw ValidationError("style", "unknown style '" + std::string(id) + "' (expected sim|real-proxy)");
}

void SceneStyle::validate() const {
    auto unit = [](const cv::Vec3d& c) {
        return c[0] >= 0.0 && c[0] <= 1.0 && c[1] >= 0.0 && c[1] <= 1.0 && c[2] >= 0.0 && c[2] <= 1.0;
    };
    if (!unit(soil_rgb)) throw ValidationError("style.soil_rgb", "components must lie in [0, 1]");
    if (!unit(leaf_rgb)) throw ValidationError("style.leaf_rgb", "components must lie in [0, 1]");
    if (!unit(sky_rgb)) throw ValidationError("style.sky_rgb", "components must lie in [0, 1]");
    if (weed_tint[0] < 0.0 || weed_tint[1] < 0.0 || weed_tint[2] < 0.0)
        throw ValidationError("style.weed_tint", "must be non-negative");
    if (!(sun_elevation_deg > 0.0 && sun_elevation_deg <= 90.0))
        throw ValidationError("style.sun_elevation_deg", "must lie in (0, 90]");
    if (sun_intensity < 0.0 || ambient < 0.0) throw ValidationError("style.sun_intensity", "must be >= 0");
    if (soil_octaves < 1) throw ValidationError("style.soil_octaves", "must be >= 1");
    if (!(soil_feature_m > 0.0)) throw ValidationError("style.soil_feature_m", "must be > 0");
    if (glare_strength < 0.0 || glare_strength > 1.0)
        throw ValidationError("style.glare_strength", "must lie in [0, 1]");
}

cv::Point3d SceneStyle::sun_direction() const {
    const double az = sun_azimuth_deg * kDeg;
    const double el = sun_elevation_deg * kDeg;
    return {std::cos(az) * std::cos(el), std::sin(az) * std::cos(el), std::sin(el)};
}

PhotoBuffers render_photo_buffers(const FieldLayout& layout, const CameraPose& pose,
                                  const CameraIntrinsics& intrinsics, const SceneStyle& style) {
    check_inputs(layout, pose, intrinsics);
    style.validate();
    const int W = intrinsics.width_px;
    const int H = intrinsics.height_px;
    const ScreenMapping view = make_view(intrinsics);
    const CameraBasis basis = CameraBasis::from_pose(pose);
    const SceneAnnotations& notes = layout.annotations;
    const std::uint64_t tex_seed = derive_key(layout.spec.rng_seed, {fnv1a64(style.style_id)});

    cv::Point3d to_sun = style.sun_direction();
    if (notes.robot_shadow) {
        const double az = (pose.yaw_deg + 180.0) * kDeg;
        const double el = notes.robot_sun_elevation_deg * kDeg;
        to_sun = {std::cos(az) * std::cos(el), std::sin(az) * std::cos(el), std::sin(el)};
    }

    // instances in drawing range, with their meshes
    std::vector<WorldTriangle> plant_tris;
    std::vector<WorldTriangle> weed_tris;
    std::vector<WorldTriangle> casters;
    auto collect = [&](const std::vector<PlantInstance>& instances, std::vector<WorldTriangle>& tris) {
        for (const PlantInstance& p : instances) {
            if (!p.present) continue;
            const double radius = 2.0 * p.height_m * p.scale;
            const cv::Point3d cam = basis.to_camera(pose, p.position);
            const bool visible = instance_visible(cam, radius, view);
            const double dist = std::hypot(p.position.x - pose.position.x, p.position.y - pose.position.y);
            const bool casts = notes.shadows_active() && dist < kShadowCasterRangeM;
            if (!visible && !casts) continue;
            const std::size_t first = tris.size();
            append_plant_mesh(p, tris);
            if (casts) casters.insert(casters.end(), tris.begin() + static_cast<std::ptrdiff_t>(first), tris.end());
            if (!visible) tris.resize(first);
        }
    };
    collect(layout.plants, plant_tris);
    collect(layout.weeds, weed_tris);

    std::optional<ShadowMap> shadows;
    if (notes.shadows_active()) {
        for (const BoxOccluder& b : notes.shadow_casters) append_box(b, casters);
        if (notes.robot_shadow)
            append_robot(pose, layout.ground.height(pose.position.x, pose.position.y), casters);
        shadows.emplace(to_sun, casters);
    }
    auto light = [&](const cv::Point3d& world, double lambert) {
        const bool lit = !shadows || shadows->lit(world);
        return style.ambient + (lit ? style.sun_intensity * lambert : 0.0);
    };

    std::vector<cv::Vec3d> colour(static_cast<std::size_t>(W) * H);
    cv::Mat depth(H, W, CV_32FC1, cv::Scalar(0));
    std::vector<double> zbuf(static_cast<std::size_t>(W) * H, std::numeric_limits<double>::infinity());

    // ground and sky
    const cv::Point3d n_ground = layout.ground.normal();
    const cv::Point3d n_plane(-layout.ground.grade_x, -layout.ground.grade_y, 1.0);
    const double ground_lambert = std::max(0.0, n_ground.dot(to_sun));
    const double f = intrinsics.focal_px();
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * W + x;
            const cv::Point3d ray = pixel_ray({x + 0.5, y + 0.5}, pose, intrinsics);
            const double denom = n_plane.dot(ray);
            const double t = denom < 0.0 ? -n_plane.dot(pose.position) / denom : -1.0;
            if (t <= 0.0) {
                colour[idx] = scale(style.sky_rgb, 0.9 + 0.1 * std::clamp(ray.z, 0.0, 1.0));
                continue;
            }
            const cv::Point3d hit = pose.position + ray * t;
            const double cam_depth = t * ray.dot(basis.forward);
            const double footprint = t / f / style.soil_feature_m;
            const double n = fbm(tex_seed, hit.x / style.soil_feature_m, hit.y / style.soil_feature_m,
                                 style.soil_octaves, footprint);
            const double grain = value_noise(tex_seed ^ 0x5A5Aull, hit.x / 0.008, hit.y / 0.008);
            const double grain_amp = 0.12 * std::exp(-t / f / 0.008);
            cv::Vec3d soil = scale(style.soil_rgb, (1.0 - 0.5 * style.soil_contrast + style.soil_contrast * n) *
                                                       (1.0 - 0.5 * grain_amp + grain_amp * grain));
            if (!notes.tyre_tracks.empty()) {
                const auto [s, l] = layout.frame.locate({hit.x, hit.y});
                for (const TyreTrack& track : notes.tyre_tracks) {
                    if (std::abs(l - track.lateral_m) < 0.5 * track.width_m && s > -2.0 &&
                        s < layout.spec.row_length_m + 2.0) {
                        const double tread = std::sin(2.0 * std::numbers::pi * s / 0.07) > 0.0 ? 1.0 : 0.88;
                        soil = scale(soil, 0.72 * tread);
                    }
                }
            }
            // fade to haze far away
            const double haze = 1.0 - std::exp(-t / 60.0);
            const cv::Vec3d lit = scale(soil, light(hit, ground_lambert));
            colour[idx] = scale(lit, 1.0 - haze) + scale(style.sky_rgb, haze);
            zbuf[idx] = cam_depth;
            depth.at<float>(y, x) = static_cast<float>(cam_depth);
        }
    }

    // leaves
    auto draw_leaves = [&](const std::vector<WorldTriangle>& tris, const cv::Vec3d& base) {
        for (const WorldTriangle& t : tris) {
            cv::Point3d normal = (t.p[1] - t.p[0]).cross(t.p[2] - t.p[0]);
            const double len = cv::norm(normal);
            if (len < 1e-15) continue;
            normal /= len;
            const double lambert = std::abs(normal.dot(to_sun));
            const cv::Vec3d leaf = scale(base, 1.0 + style.leaf_variation * (t.tint - 1.0));
            const std::array<Vertex, 3> tri = {make_vertex(basis, pose, t.p[0], t.attr[0]),
                                               make_vertex(basis, pose, t.p[1], t.attr[1]),
                                               make_vertex(basis, pose, t.p[2], t.attr[2])};
            draw_triangle(tri, view, [&](const Fragment& fr, const std::array<Vertex, 3>& v) {
                const std::size_t idx = static_cast<std::size_t>(fr.y) * W + fr.x;
                if (fr.depth >= zbuf[idx]) return;
                zbuf[idx] = fr.depth;
                depth.at<float>(fr.y, fr.x) = static_cast<float>(fr.depth);
                const auto& w = fr.weights;
                const cv::Point3d world = v[0].world * w[0] + v[1].world * w[1] + v[2].world * w[2];
                const cv::Point2d attr = v[0].attr * w[0] + v[1].attr * w[1] + v[2].attr * w[2];
                const double vein = 1.0 - style.leaf_vein * std::exp(-(attr.y * attr.y) / 0.02);
                const double tip = 0.9 + 0.2 * attr.x;
                colour[idx] = scale(leaf, vein * tip * light(world, lambert));
            });
        }
    };
    draw_leaves(plant_tris, style.leaf_rgb);
    draw_leaves(weed_tris, mul(style.leaf_rgb, style.weed_tint));

    const double glare = std::max(style.glare_strength, notes.glare_strength);
    if (glare > 0.0) {
        const cv::Point2d centre(notes.glare_center.x * W, notes.glare_center.y * H);
        const double diag = std::hypot(W, H);
        const cv::Vec3d tint{1.0, 0.97, 0.85};
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                const double g = glare * glare_profile(x + 0.5, y + 0.5, centre, diag);
                colour[static_cast<std::size_t>(y) * W + x] += scale(tint, g);
            }
    }

    cv::Mat rgb(H, W, CV_8UC3);
    auto to8 = [](double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); };
    for (int y = 0; y < H; ++y) {
        auto* row = rgb.ptr<cv::Vec3b>(y);
        for (int x = 0; x < W; ++x) {
            const cv::Vec3d& c = colour[static_cast<std::size_t>(y) * W + x];
            row[x] = {to8(c[2]), to8(c[1]), to8(c[0])};
        }
    }
    return {rgb, depth};
}

cv::Mat render_photo(const FieldLayout& layout, const CameraPose& pose, const CameraIntrinsics& intrinsics,
                     const SceneStyle& style) {
    return render_photo_buffers(layout, pose, intrinsics, style).rgb;
}

cv::Mat render_label(const FieldLayout& layout, const CameraPose& pose, const CameraIntrinsics& intrinsics,
                     double stripe_width_m) {
    check_inputs(layout, pose, intrinsics);
    if (!(stripe_width_m > 0.0)) throw ValidationError("stripe_width_m", "must be > 0");
    const int W = intrinsics.width_px;
    const int H = intrinsics.height_px;
    const ScreenMapping view = make_view(intrinsics);
    const CameraBasis basis = CameraBasis::from_pose(pose);
    cv::Mat mask(H, W, CV_8UC1, cv::Scalar(0));
    auto mark = [&](int x, int y) { mask.at<std::uint8_t>(y, x) = 255; };
    const double half = 0.5 * stripe_width_m;

    for (const RowCenterline& row : layout.rows) {
        const auto& poly = row.polyline;
        const std::size_t n = poly.size();
        if (n < 2) continue;
        // horizontal unit normals per segment, then mitred per vertex
        std::vector<cv::Point2d> seg_normal(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const cv::Point2d d(poly[i + 1].x - poly[i].x, poly[i + 1].y - poly[i].y);
            seg_normal[i] = cv::Point2d(-d.y, d.x) / cv::norm(d);
        }
        std::vector<cv::Point3d> left(n);
        std::vector<cv::Point3d> right(n);
        for (std::size_t i = 0; i < n; ++i) {
            const cv::Point2d a = seg_normal[i == 0 ? 0 : i - 1];
            const cv::Point2d b = seg_normal[i == n - 1 ? n - 2 : i];
            cv::Point2d m = a + b;
            m /= cv::norm(m);
            const double reach = half / std::max(0.5, m.dot(b));
            const cv::Point2d c(poly[i].x, poly[i].y);
            left[i] = layout.ground.lift(c + m * reach);
            right[i] = layout.ground.lift(c - m * reach);
        }
        auto fill = [&](const Fragment& fr, const std::array<Vertex, 3>&) { mark(fr.x, fr.y); };
        for (std::size_t i = 0; i + 1 < n; ++i) {
            draw_triangle({make_vertex(basis, pose, left[i]), make_vertex(basis, pose, right[i]),
                           make_vertex(basis, pose, right[i + 1])},
                          view, fill);
            draw_triangle({make_vertex(basis, pose, left[i]), make_vertex(basis, pose, right[i + 1]),
                           make_vertex(basis, pose, left[i + 1])},
                          view, fill);
            // centreline itself, conservatively
            Vertex a = make_vertex(basis, pose, poly[i]);
            Vertex b = make_vertex(basis, pose, poly[i + 1]);
            if (a.cam.z < detail::kNearPlane && b.cam.z < detail::kNearPlane) continue;
            if (a.cam.z < detail::kNearPlane)
                a = detail::lerp(a, b, (detail::kNearPlane - a.cam.z) / (b.cam.z - a.cam.z));
            else if (b.cam.z < detail::kNearPlane)
                b = detail::lerp(b, a, (detail::kNearPlane - b.cam.z) / (a.cam.z - b.cam.z));
            detail::conservative_segment(view.to_screen(a.cam), view.to_screen(b.cam), W, H, mark);
        }
    }
    return mask;
}

SamplePair render_pair(const FieldLayout& layout, const CameraPose& pose, const CameraIntrinsics& intrinsics,
                       const SceneStyle& style, double stripe_width_m) {
    SamplePair pair;
    pair.rgb = render_photo(layout, pose, intrinsics, style);
    pair.mask = render_label(layout, pose, intrinsics, stripe_width_m);
    pair.pose = pose;
    pair.category = layout.category;
    pair.domain = style.style_id == "real-proxy" ? Domain::real : Domain::sim;
    return pair;
}

void write_depth_ppm(const std::filesystem::path& path, const cv::Mat& depth) {
    double max_depth = 0.0;
    cv::minMaxLoc(depth, nullptr, &max_depth);
    cv::Mat grey(depth.size(), CV_8UC1, cv::Scalar(0));
    if (max_depth > 0.0) {
        for (int y = 0; y < depth.rows; ++y)
            for (int x = 0; x < depth.cols; ++x) {
                const float d = depth.at<float>(y, x);
                if (d > 0.0f)
                    grey.at<std::uint8_t>(y, x) =
                        static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - 0.9 * d / max_depth)));
            }
    }
    cv::Mat bgr;
    cv::merge(std::vector<cv::Mat>{grey, grey, grey}, bgr);
    if (!cv::imwrite(path.string(), bgr)) throw Error("cannot write " + path.string());
}

}  // namespace cropforge
