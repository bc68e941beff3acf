#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "avsim/geometry.hpp"
#include "avsim/mask_io.hpp"
#include "oracles.hpp"

using namespace avsim;
constexpr double kPi = std::numbers::pi;

TEST(BoxIou, IdenticalAndDisjoint) {
  const BoundingBox a{ObjectClass::Pedestrian, 1.0, 10, 10, 20, 30};
  EXPECT_DOUBLE_EQ(iou_boxes(a, a), 1.0);
  const BoundingBox b{ObjectClass::Pedestrian, 1.0, 20, 10, 30, 30};  // touching edge only
  EXPECT_DOUBLE_EQ(iou_boxes(a, b), 0.0);
}

TEST(BoxIou, HalfOverlapIsOneThird) {
  const BoundingBox a{ObjectClass::Obstacle, 1.0, 0, 0, 2, 1};
  const BoundingBox b{ObjectClass::Obstacle, 1.0, 1, 0, 3, 1};
  EXPECT_DOUBLE_EQ(iou_boxes(a, b), 1.0 / 3.0);
}

TEST(BoxIou, MatchesPixelCountOnRandomBoxes) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> coord(0, 24);
  for (int i = 0; i < 2000; ++i) {
    auto box = [&] {
      int x0 = coord(rng), x1 = coord(rng), y0 = coord(rng), y1 = coord(rng);
      if (x0 == x1) ++x1;
      if (y0 == y1) ++y1;
      return BoundingBox{ObjectClass::Obstacle, 1.0, std::min(x0, x1), std::min(y0, y1), std::max(x0, x1), std::max(y0, y1)};
    };
    const BoundingBox a = box(), b = box();
    const double expect = static_cast<double>(oracle::pixel_intersection(a, b)) / oracle::pixel_union(a, b);
    ASSERT_DOUBLE_EQ(iou_boxes(a, b), expect);
    ASSERT_DOUBLE_EQ(iou_boxes(a, b), iou_boxes(b, a));
  }
}

TEST(DetectionOrder, ScoreDescendingThenTotal) {
  const BoundingBox hi{ObjectClass::Obstacle, 0.9, 0, 0, 1, 1};
  const BoundingBox lo{ObjectClass::Pedestrian, 0.5, 0, 0, 1, 1};
  EXPECT_TRUE(detection_order(hi, lo));
  EXPECT_FALSE(detection_order(lo, hi));
  EXPECT_FALSE(detection_order(hi, hi));
}

TEST(PoseIntegrate, StraightLine) {
  const Pose2D p = pose_integrate({}, {1, 0, 0}, 1.0);
  EXPECT_NEAR(p.x, 1.0, 1e-15);
  EXPECT_NEAR(p.y, 0.0, 1e-15);
  EXPECT_NEAR(p.theta, 0.0, 1e-15);
}

TEST(PoseIntegrate, PureRotationLandsOnPi) {
  const Pose2D p = pose_integrate({}, {0, 0, kPi}, 1.0);
  EXPECT_NEAR(p.x, 0.0, 1e-15);
  EXPECT_NEAR(p.y, 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(p.theta, kPi);
}

TEST(PoseIntegrate, QuarterArcAgainstEuler) {
  const Twist t{1, 0, kPi / 2};
  const Pose2D p = pose_integrate({}, t, 1.0);
  EXPECT_NEAR(p.x, 2 / kPi, 1e-12);
  EXPECT_NEAR(p.y, 2 / kPi, 1e-12);
  EXPECT_NEAR(p.theta, kPi / 2, 1e-12);

  // Midpoint-heading Euler with a million steps.
  const int n = 1'000'000;
  const double h = 1.0 / n;
  double x = 0, y = 0, th = 0;
  for (int i = 0; i < n; ++i) {
    const double mid = th + 0.5 * t.omega * h;
    x += h * t.vx * std::cos(mid);
    y += h * t.vx * std::sin(mid);
    th += h * t.omega;
  }
  EXPECT_NEAR(p.x, x, 1e-9);
  EXPECT_NEAR(p.y, y, 1e-9);
}

TEST(PoseIntegrate, RejectsNonPositiveDt) {
  EXPECT_THROW(pose_integrate({}, {1, 0, 0}, 0.0), std::invalid_argument);
  EXPECT_THROW(pose_integrate({}, {1, 0, 0}, -0.1), std::invalid_argument);
}

TEST(PoseIntegrate, ThetaStaysNormalized) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-10, 10);
  Pose2D p;
  for (int i = 0; i < 10000; ++i) {
    p = pose_integrate(p, {u(rng), u(rng), u(rng)}, 0.37);
    ASSERT_GT(p.theta, -kPi);
    ASSERT_LE(p.theta, kPi);
  }
}

TEST(NormalizeAngle, HalfOpenRange) {
  EXPECT_DOUBLE_EQ(normalize_angle(-kPi), kPi);
  EXPECT_DOUBLE_EQ(normalize_angle(kPi), kPi);
  EXPECT_NEAR(normalize_angle(3 * kPi / 2), -kPi / 2, 1e-15);
  EXPECT_NEAR(normalize_angle(0.25 + 8 * kPi), 0.25, 1e-12);
}

TEST(PoseTransform, InverseRoundTrip) {
  const Pose2D p{0.3, -1.2, 2.1};
  const Vec2 q{0.7, 0.4};
  const Vec2 r = p.inverse_transform(p.transform(q));
  EXPECT_NEAR(r.x, q.x, 1e-14);
  EXPECT_NEAR(r.y, q.y, 1e-14);
}

TEST(ClampTwist, RespectsLimits) {
  const Twist t = clamp_twist({2, -3, 9}, {0.5, 3.0});
  EXPECT_EQ(t, (Twist{0.5, -0.5, 3.0}));
}

TEST(ImageGrid, ShapeAndClassChecks) {
  ImageGrid g(4, 3, 6);
  EXPECT_EQ(g.size(), 12u);
  g.set(3, 2, 5);
  EXPECT_EQ(g.at(3, 2), 5);
  EXPECT_THROW(g.set(0, 0, 6), std::out_of_range);
  EXPECT_THROW(ImageGrid(0, 3, 2), std::invalid_argument);
  EXPECT_TRUE(g.well_formed());
}

TEST(Polygon, PointInsideAndOverlap) {
  const std::vector<Vec2> sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  EXPECT_TRUE(point_in_polygon({0.5, 0.5}, sq));
  EXPECT_FALSE(point_in_polygon({1.5, 0.5}, sq));
  EXPECT_TRUE(convex_polygons_overlap(sq, {{0.9, 0.9}, {2, 0.9}, {2, 2}, {0.9, 2}}));
  EXPECT_FALSE(convex_polygons_overlap(sq, {{1.1, 0}, {2, 0}, {2, 1}, {1.1, 1}}));
  EXPECT_NEAR(point_segment_distance({0.5, 1}, {0, 0}, {1, 0}), 1.0, 1e-15);
}

TEST(MaskIo, PgmRoundTrip) {
  ImageGrid g(7, 5, 6);
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 7; ++c) g.set(c, r, static_cast<std::uint8_t>((r * 7 + c) % 6));
  EXPECT_EQ(decode_pgm(encode_pgm(g), 6), g);
}

TEST(MaskIo, PgmRejectsBadInput) {
  ImageGrid g(3, 2, 6, 5);
  EXPECT_THROW(decode_pgm(encode_pgm(g), 2, "x"), FormatError);  // value exceeds class count
  std::string bytes = encode_pgm(g);
  bytes.pop_back();
  EXPECT_THROW(decode_pgm(bytes, 6), FormatError);
  EXPECT_THROW(decode_pgm("P2\n1 1\n255\n0", 6), FormatError);
}

TEST(MaskIo, DetectionsRoundTrip) {
  const std::vector<BoundingBox> boxes{{ObjectClass::Pedestrian, 0.75, 1, 2, 30, 40},
                                       {ObjectClass::RedLight, 1.0, 100, 5, 110, 25}};
  EXPECT_EQ(decode_detections(encode_detections(boxes)), boxes);
  EXPECT_THROW(decode_detections("1,0.5,1,2,3\n"), FormatError);
}
