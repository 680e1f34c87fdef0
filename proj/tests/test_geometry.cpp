#include "smlct/geometry.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace smlct;

namespace {

ScanGeometry ten_segment() { return make_scan_geometry(15.0, 170.0, 20.0, 768, 0.17, 251, 1); }
ScanGeometry six_segment() { return make_scan_geometry(13.75, 90.5, 30.0, 768, 0.17, 251, 0); }

// Angle from the central axis of the line through the detector edge (d, h)
// that grazes the circle of radius r, found by bisection on the distance.
double tangent_angle_by_bisection(double d, double h, double r)
{
    double lo = 0.0;
    double hi = std::atan(d / h);
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (d * std::cos(mid) - h * std::sin(mid) - r > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

TEST(FovRadius, ReportedGeometries)
{
    EXPECT_NEAR(fov_radius(15.0, 170.0, 20.0, 65.28), 11.88, 0.01);
    EXPECT_NEAR(fov_radius(six_segment()), 12.87, 0.01);
    // Bud-scan geometry; the closed form gives 6.6487 mm.
    EXPECT_NEAR(fov_radius(13.75, 106.5, 17.5, 65.024), 6.6487, 1e-4);
}

TEST(FovRadius, PointDetector)
{
    const double l = 7.0, h = 40.0, s = 9.0;
    EXPECT_DOUBLE_EQ(fov_radius(l, h, s, 0.0), s * h / std::sqrt((l + h) * (l + h) + s * s));
}

TEST(FovRadius, RejectsEmptyFov)
{
    EXPECT_THROW(fov_radius(15.0, 170.0, 1.0, 65.28), Error);
    EXPECT_THROW(fov_radius(10.0, 10.0, 10.0, 10.0), Error); // s h == d l
}

TEST(SegmentLayout, ReportedCounts)
{
    const auto ten = segment_layout(170.0, 65.28, 1);
    EXPECT_EQ(ten.t_segments, 10);
    EXPECT_NEAR(rad2deg(ten.delta_theta), 42.01, 0.01);

    const auto six = segment_layout(90.5, 65.28, 0);
    EXPECT_EQ(six.t_segments, 6);
    EXPECT_NEAR(six.delta_theta, 2.0 * std::atan(65.28 / 90.5), 1e-15);
    EXPECT_NEAR(rad2deg(six.delta_theta), 71.61, 0.01);
}

TEST(SegmentLayout, SquareAspectGivesFour)
{
    const auto l = segment_layout(50.0, 50.0, 0);
    EXPECT_DOUBLE_EQ(l.delta_theta, pi / 2);
    EXPECT_EQ(l.t_segments, 4);
}

TEST(SegmentLayout, BaseCountMayBeOdd)
{
    EXPECT_EQ(base_segment_count(170.0, 65.28), 9);
    EXPECT_EQ(base_segment_count(90.5, 65.28), 6);
}

TEST(SegmentLayout, RejectsOddCount)
{
    EXPECT_THROW(segment_layout(170.0, 65.28, 0), Error); // ceil gives 9
    EXPECT_THROW(segment_layout(50.0, 50.0, 1), Error);
    EXPECT_THROW(segment_layout(-1.0, 50.0, 0), Error);
}

TEST(ScanGeometry, DerivedQuantities)
{
    const auto g = ten_segment();
    EXPECT_DOUBLE_EQ(g.d(), 65.28);
    EXPECT_EQ(g.t_segments, 10);
    EXPECT_DOUBLE_EQ(g.lambda(0), -20.0);
    EXPECT_NEAR(g.lambda(250), 20.0, 1e-12);
    EXPECT_NEAR(g.lambda(125), 0.0, 1e-12);
    EXPECT_DOUBLE_EQ(g.u(0) + g.u(767), 0.0);
    EXPECT_NEAR(g.theta(6) - g.theta(1), pi, 1e-12);
}

TEST(ScanGeometry, ValidateCatchesInconsistency)
{
    auto g = ten_segment();
    g.t_segments = 12;
    EXPECT_THROW(g.validate(), Error);
    g = ten_segment();
    g.r_dir = 0;
    EXPECT_THROW(g.validate(), Error);
    EXPECT_THROW(make_scan_geometry(15.0, 170.0, 20.0, 768, 0.17, 1, 1), Error);
}

TEST(VisibleAngles, MatchesTangentConstruction)
{
    const double r1 = fov_radius(15.0, 170.0, 20.0, 65.28);
    const auto a = visible_angles(15.0, 170.0, 20.0, 65.28, r1);
    EXPECT_NEAR(rad2deg(a.alpha_vis), 17.27, 0.01);
    EXPECT_NEAR(a.alpha_vis, tangent_angle_by_bisection(65.28, 170.0, r1), 1e-10);
    // Steepest ray: trajectory end to the opposite detector edge.
    EXPECT_NEAR(a.vartheta, std::atan2(20.0 + 65.28, 15.0 + 170.0), 1e-12);
    EXPECT_NEAR(rad2deg(a.vartheta), 24.74, 0.02);
}

TEST(VisibleAngles, ZeroRadiusIsHalfSpan)
{
    const auto a = visible_angles(15.0, 170.0, 20.0, 65.28, 0.0);
    EXPECT_NEAR(a.alpha_vis, 0.5 * segment_layout(170.0, 65.28, 1).delta_theta, 1e-12);
}

TEST(VisibleAngles, RejectsDegenerateRadius)
{
    EXPECT_THROW(visible_angles(15.0, 170.0, 20.0, 65.28, 65.28), Error);
}

TEST(VisibleAngles, AlphaBelowVarthetaForRandomGeometries)
{
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    int checked = 0;
    while (checked < 1000) {
        const double l = 5.0 + 50.0 * U(rng);
        const double h = 20.0 + 300.0 * U(rng);
        const double d = 10.0 + 100.0 * U(rng);
        const double s = 5.0 + 100.0 * U(rng);
        if (s * h - d * l <= 0.0)
            continue;
        const double r1 = fov_radius(l, h, s, d);
        if (r1 >= d || r1 >= h)
            continue;
        const auto a = visible_angles(l, h, s, d, r1);
        ASSERT_LT(a.alpha_vis, a.vartheta) << "l=" << l << " h=" << h << " s=" << s << " d=" << d;
        ++checked;
    }
}

TEST(SourcePose, IdealAndBiased)
{
    const auto g = ten_segment();
    const auto p = source_pose(g, 1, 0.0);
    EXPECT_NEAR(p.point.x, 0.0, 1e-15);
    EXPECT_NEAR(p.point.y, -15.0, 1e-15);

    ErrorSet e;
    e.dl = 2.0;
    EXPECT_NEAR(source_pose(g, 1, 0.0, e).point.y, -17.0, 1e-15);
}

TEST(SourcePose, SecondSegmentIsRotated)
{
    const auto g = ten_segment();
    const double th = 2.0 * pi / 10.0;
    // Rotation matrix applied by hand.
    const double x = 20.0 * std::cos(th) - (-15.0) * std::sin(th);
    const double y = 20.0 * std::sin(th) + (-15.0) * std::cos(th);
    const auto p = source_pose(g, 2, 20.0);
    EXPECT_NEAR(p.point.x, x, 1e-12);
    EXPECT_NEAR(p.point.y, y, 1e-12);
    EXPECT_NEAR(norm(p.direction), 1.0, 1e-12);
}

TEST(SourcePose, ReverseDirectionMirrorsAngle)
{
    const auto g = make_scan_geometry(15.0, 170.0, 20.0, 768, 0.17, 251, 1, -1);
    EXPECT_NEAR(g.theta(3), -2.0 * 2.0 * pi / 10.0, 1e-12);
}

TEST(SourcePose, RangeChecks)
{
    const auto g = ten_segment();
    EXPECT_THROW(source_pose(g, 0, 0.0), Error);
    EXPECT_THROW(source_pose(g, 11, 0.0), Error);
    EXPECT_THROW(source_pose(g, 1, 20.5), Error);
}

TEST(SegmentRay, UnitDirectionAndEndpoints)
{
    const auto g = ten_segment();
    ErrorSet e;
    e.dl = 1.3;
    e.ds = -0.4;
    e.dh = 2.0;
    e.du_off = 0.3;
    e.theta_lambda = deg2rad(1.5);
    e.theta_d = deg2rad(-2.0);
    for (int seg : {1, 4, 10})
        for (int view : {0, 100, 250})
            for (int bin : {0, 383, 767}) {
                const Pose r = segment_ray(g, seg, view, bin, e);
                EXPECT_NEAR(norm(r.direction), 1.0, 1e-12);
                const Pose det = detector_bin_pose(g, seg, bin, e);
                const Vec2 to_det = det.point - r.point;
                EXPECT_NEAR(cross(r.direction, to_det), 0.0, 1e-9);
                EXPECT_GT(dot(r.direction, to_det), 0.0);
            }
}

TEST(SegmentRay, TranslatingObjectModeIsEquivalent)
{
    const auto g = six_segment();
    ErrorSet e;
    e.dl = 0.7;
    e.ds = 0.2;
    e.dh = -1.0;
    e.du_off = 0.5;
    e.theta_lambda = deg2rad(0.8);
    e.theta_d = deg2rad(1.1);
    for (int seg = 1; seg <= g.t_segments; ++seg)
        for (int view : {0, 37, 250})
            for (int bin : {0, 500}) {
                const Pose a = segment_ray(g, seg, view, bin, e);
                const Pose b = segment_ray_mode2(g, seg, view, bin, e);
                EXPECT_NEAR(a.point.x, b.point.x, 1e-9);
                EXPECT_NEAR(a.point.y, b.point.y, 1e-9);
                EXPECT_NEAR(a.direction.x, b.direction.x, 1e-12);
                EXPECT_NEAR(a.direction.y, b.direction.y, 1e-12);
            }
}

TEST(ErrorSet, Validation)
{
    ErrorSet e;
    EXPECT_TRUE(e.is_zero());
    EXPECT_NO_THROW(e.validate());
    e.theta_d = 2.0;
    EXPECT_THROW(e.validate(), Error);
    e = {};
    e.dv = 0.1;
    EXPECT_TRUE(e.has_out_of_plane());
}
