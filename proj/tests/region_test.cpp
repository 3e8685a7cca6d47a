#include "gauge_quad/region.hpp"

#include <gtest/gtest.h>

#include <functional>
#include <random>

using namespace gauge_quad;

namespace {

struct Case {
  std::string spec;
  // Independent membership of G°.
  std::function<bool(double, double)> interior;
  double lo, hi;
};

std::vector<Case> cases() {
  return {
      {"open:0..1,0..1", [](double x, double y) { return x > 0 && x < 1 && y > 0 && y < 1; }, -0.5, 1.5},
      {"closed:0..1,0..0.5", [](double x, double y) { return x > 0 && x < 1 && y > 0 && y < 0.5; }, -0.5, 1.5},
      {"predicate:disc2d", [](double x, double y) { return x * x + y * y < 1; }, -1.5, 1.5},
      {"predicate:annulus2d",
       [](double x, double y) {
         const double q = x * x + y * y;
         return q > 0.25 && q < 1;
       },
       -1.5, 1.5},
      {"predicate:square-minus-segment",
       [](double x, double y) { return x > 0 && x < 1 && y > 0 && y < 1 && x != 0.5; }, -0.5, 1.5},
      {"predicate:square-minus-diagonal",
       [](double x, double y) { return x > 0 && x < 1 && y > 0 && y < 1 && x != y; }, -0.5, 1.5},
      {"union:0..1,0..1;1..2,0..1",
       [](double x, double y) { return x > 0 && x < 2 && y > 0 && y < 1; }, -0.5, 2.5},
      {"open:0..inf,0..inf", [](double x, double y) { return x > 0 && y > 0; }, -2.0, 2.0},
  };
}

}  // namespace

TEST(Region, ParseErrors) {
  EXPECT_THROW(parse_region("open"), std::invalid_argument);
  EXPECT_THROW(parse_region("blob:0..1"), std::invalid_argument);
  EXPECT_THROW(parse_region("open:inf..1"), std::invalid_argument);
  EXPECT_THROW(parse_region("predicate:teapot"), std::invalid_argument);
  EXPECT_THROW(parse_region("halfline:0..inf,0..1"), std::invalid_argument);
}

TEST(Region, BoundednessAndMeasure) {
  EXPECT_TRUE(parse_region("open:0..1,0..2").bounded());
  EXPECT_EQ(parse_region("open:0..1,0..2").interior_measure(), 2.0);
  EXPECT_FALSE(parse_region("halfline:0..inf").bounded());
  EXPECT_NEAR(*parse_region("predicate:disc2d").interior_measure(), std::numbers::pi, 1e-15);
}

TEST(Region, OpenAndClosedMembership) {
  const Region open = parse_region("open:0..1");
  const Region closed = parse_region("closed:0..1");
  EXPECT_FALSE(open.contains({0.0}));
  EXPECT_TRUE(closed.contains({0.0}));
  EXPECT_EQ(open.interior_contains({0.0}), Membership::Boundary);
  EXPECT_EQ(closed.interior_contains({1.0}), Membership::Boundary);
  EXPECT_EQ(open.interior_contains({0.5}), Membership::Inside);
  EXPECT_EQ(open.interior_contains({2.0}), Membership::Outside);
}

// Inside cells contain only interior points, Outside cells none.
TEST(RegionProperty, CellClassificationIsSound) {
  std::mt19937_64 rng(21);
  for (const Case& c : cases()) {
    const Region r = parse_region(c.spec);
    std::uniform_int_distribution<int> pos(0, 63);
    std::uniform_int_distribution<int> len(1, 16);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double step = (c.hi - c.lo) / 64;
    int inside = 0, outside = 0;
    for (int i = 0; i < 400; ++i) {
      double lo[2], hi[2];
      for (int j = 0; j < 2; ++j) {
        lo[j] = c.lo + step * pos(rng);
        hi[j] = lo[j] + step * len(rng);
      }
      const CellClass k = r.classify(lo, hi);
      inside += k == CellClass::Inside;
      outside += k == CellClass::Outside;
      for (int s = 0; s < 64 && k != CellClass::Straddle; ++s) {
        const double x = lo[0] + (hi[0] - lo[0]) * u(rng);
        const double y = lo[1] + (hi[1] - lo[1]) * u(rng);
        if (k == CellClass::Inside) {
          ASSERT_TRUE(c.interior(x, y)) << c.spec << " cell at " << lo[0] << "," << lo[1];
        } else {
          ASSERT_FALSE(c.interior(x, y)) << c.spec << " cell at " << lo[0] << "," << lo[1];
        }
      }
      // Corners of an Inside cell are interior too (closed cell inside G°).
      if (k == CellClass::Inside) {
        EXPECT_TRUE(c.interior(lo[0], lo[1]) && c.interior(hi[0], hi[1])) << c.spec;
      }
    }
    EXPECT_GT(inside, 0) << c.spec;
    EXPECT_GT(outside, 0) << c.spec;
  }
}

TEST(RegionProperty, PointMembershipMatchesOracle) {
  std::mt19937_64 rng(22);
  for (const Case& c : cases()) {
    const Region r = parse_region(c.spec);
    std::uniform_real_distribution<double> u(c.lo, c.hi);
    for (int i = 0; i < 2000; ++i) {
      const double x = u(rng), y = u(rng);
      const Membership mb = r.interior_contains({x, y});
      if (mb == Membership::Boundary) continue;
      EXPECT_EQ(mb == Membership::Inside, c.interior(x, y)) << c.spec << " at " << x << "," << y;
    }
  }
}

TEST(RegionProperty, BoundarySamplesAreBoundaryPoints) {
  std::mt19937_64 rng(23);
  for (const char* spec : {"predicate:disc2d", "open:0..1,0..1", "predicate:square-minus-diagonal"}) {
    const Region r = parse_region(spec);
    for (int i = 0; i < 200; ++i) {
      const Point t = r.sample_boundary(rng);
      if (r.kind() == Region::Kind::Predicate && std::string(spec) == "predicate:disc2d") {
        EXPECT_NEAR(std::hypot(t[0], t[1]), 1.0, 1e-12);
      } else {
        EXPECT_EQ(r.interior_contains(t), Membership::Boundary) << spec;
      }
    }
  }
}

TEST(Region, ExhaustionBoxes) {
  const Region q = parse_region("open:0..inf,0..inf");
  EXPECT_EQ(exhaustion_box(q, 0), parse_box("-1..1,-1..1"));
  EXPECT_EQ(exhaustion_box(q, 3), parse_box("-8..8,-8..8"));
  const Region d = parse_region("predicate:disc2d");
  EXPECT_EQ(exhaustion_box(d, 4), parse_box("-1..1,-1..1"));
  EXPECT_EQ(exhaustion_box(parse_region("open:0..0.5"), 2), parse_box("0..0.5"));
}

TEST(Region, AxisBreakpoints) {
  const auto b = parse_region("open-union:0..0.5,0..1;0.5..1,0..1").axis_breakpoints();
  ASSERT_TRUE(b.has_value());
  EXPECT_EQ((*b)[0], (std::vector<double>{0.0, 0.5, 1.0}));
  EXPECT_EQ((*b)[1], (std::vector<double>{0.0, 1.0}));
  EXPECT_FALSE(parse_region("predicate:disc2d").axis_breakpoints().has_value());
}
