#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "cropforge/camera.hpp"
#include "cropforge/error.hpp"
#include "cropforge/rng.hpp"

using namespace cropforge;

namespace {
constexpr double kDeg = std::numbers::pi / 180.0;
}

TEST(Camera, FocalLengthFromVerticalFov) {
    CameraIntrinsics k;
    EXPECT_NEAR(k.focal_px(), 256.0 / std::tan(21.0 * kDeg), 1e-9);
    EXPECT_EQ(k.principal(), cv::Point2d(256.0, 256.0));
}

TEST(Camera, OpticalAxisHitsPrincipalPoint) {
    CameraIntrinsics k;
    CameraPose pose;
    pose.position = {1.0, 2.0, 0.8};
    pose.yaw_deg = 30.0;
    pose.pitch_deg = 25.0;
    const CameraBasis b = CameraBasis::from_pose(pose);
    const Projection p = project(pose.position + 3.0 * b.forward, pose, k);
    ASSERT_TRUE(p.in_front);
    EXPECT_NEAR(p.pixel.x, 256.0, 1e-9);
    EXPECT_NEAR(p.pixel.y, 256.0, 1e-9);
    EXPECT_NEAR(p.depth, 3.0, 1e-12);
}

TEST(Camera, GroundPointAheadMatchesClosedForm) {
    // Camera at height h, pitched down by p, looking along +x. The ground
    // point 1 m ahead has depth cos p + h sin p and sits
    // f (h cos p - sin p) / depth below the principal point.
    CameraIntrinsics k;
    CameraPose pose;
    const double h = 0.8;
    const double pitch = 25.0;
    pose.position = {0.0, 0.0, h};
    pose.pitch_deg = pitch;
    const Projection p = project({1.0, 0.0, 0.0}, pose, k);
    ASSERT_TRUE(p.in_front);
    const double c = std::cos(pitch * kDeg);
    const double s = std::sin(pitch * kDeg);
    const double depth = c + h * s;
    EXPECT_NEAR(p.depth, depth, 1e-12);
    EXPECT_NEAR(p.pixel.x, 256.0, 1e-9);
    EXPECT_NEAR(p.pixel.y, 256.0 + k.focal_px() * (h * c - s) / depth, 1e-9);
}

TEST(Camera, LateralOffsetMovesLeftInImage) {
    // +y is to the left when looking along +x.
    CameraIntrinsics k;
    CameraPose pose;
    pose.position = {0.0, 0.0, 0.8};
    pose.pitch_deg = 25.0;
    EXPECT_LT(project({2.0, 0.3, 0.0}, pose, k).pixel.x, 256.0);
    EXPECT_GT(project({2.0, -0.3, 0.0}, pose, k).pixel.x, 256.0);
}

TEST(Camera, PointBehindCameraIsFlagged) {
    CameraIntrinsics k;
    CameraPose pose;
    pose.position = {0.0, 0.0, 0.8};
    const Projection p = project({-1.0, 0.0, 0.8}, pose, k);
    EXPECT_FALSE(p.in_front);
    EXPECT_FALSE(p.inside(k));
}

TEST(Camera, PixelRayRoundTrips) {
    CameraIntrinsics k;
    Stream rng(5, {fnv1a64("rays")});
    for (int i = 0; i < 200; ++i) {
        CameraPose pose;
        pose.position = {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0.3, 2.0)};
        pose.yaw_deg = rng.uniform(-180, 180);
        pose.pitch_deg = rng.uniform(0, 89);
        pose.roll_deg = rng.uniform(-10, 10);
        const cv::Point2d px(rng.uniform(0, 512), rng.uniform(0, 512));
        const cv::Point3d ray = pixel_ray(px, pose, k);
        EXPECT_NEAR(cv::norm(ray), 1.0, 1e-12);
        const Projection p = project(pose.position + rng.uniform(0.5, 10.0) * ray, pose, k);
        ASSERT_TRUE(p.in_front);
        EXPECT_NEAR(p.pixel.x, px.x, 1e-6);
        EXPECT_NEAR(p.pixel.y, px.y, 1e-6);
    }
}

TEST(Camera, RejectsInvalidIntrinsics) {
    CameraIntrinsics k;
    k.width_px = 0;
    EXPECT_THROW(k.validate(), ValidationError);
    k = {};
    k.vertical_fov_deg = 180.0;
    EXPECT_THROW(k.validate(), ValidationError);
    k = {};
    EXPECT_NO_THROW(k.validate());
}
