#include "gauge_quad/partition.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace gauge_quad;

namespace {

// Plain-double replay of the bisection rule: accept at the center, else at the
// first fine corner, else halve. Returns the deepest accepted level.
int simulate_depth_1d(double lo, double hi, const std::function<double(double)>& delta, int depth) {
  const double c = 0.5 * (lo + hi), r = 0.5 * (hi - lo);
  if (r < delta(c)) return depth;
  if (hi - lo < delta(lo) || hi - lo < delta(hi)) return depth;
  return std::max(simulate_depth_1d(lo, c, delta, depth + 1), simulate_depth_1d(c, hi, delta, depth + 1));
}

// Exact checks written independently of validate_partition.
void expect_sound(const TaggedPartition& p, const Box& J, const Gauge& delta) {
  Dyadic total;
  for (std::size_t a = 0; a < p.cells.size(); ++a) {
    const TaggedCell& c = p.cells[a];
    total += c.box.measure();
    ASSERT_TRUE(J.contains(c.box));
    ASSERT_TRUE(c.box.contains(c.tag));
    ASSERT_LT(fine_radius(c.tag, c.box.lo_point(), c.box.hi_point()), delta(c.tag));
    for (std::size_t b = a + 1; b < p.cells.size(); ++b) {
      bool apart = false;
      for (std::size_t j = 0; j < J.dim() && !apart; ++j) {
        apart = !(c.box.lo(j) < p.cells[b].box.hi(j)) || !(p.cells[b].box.lo(j) < c.box.hi(j));
      }
      ASSERT_TRUE(apart) << c.box.to_string() << " / " << p.cells[b].box.to_string();
    }
  }
  EXPECT_EQ(total, J.measure());
}

}  // namespace

TEST(Gauge, ParseAndEvaluate) {
  EXPECT_DOUBLE_EQ(parse_gauge("const:0.25")({3.0}), 0.25);
  EXPECT_DOUBLE_EQ(parse_gauge("dist-to:0,0,0.5")({0.5, -1.0}), 0.5);
  EXPECT_DOUBLE_EQ(parse_gauge("dist-to:0,0,0.5")({0.0, 0.0}), 0.5);
  EXPECT_DOUBLE_EQ(parse_gauge("min:(const:0.1,dist-to:0,1)")({0.05}), 0.05);
  EXPECT_DOUBLE_EQ(parse_gauge("expr:half-dist0")({0.0}), std::ldexp(1.0, -20));
  EXPECT_THROW(parse_gauge("const:-1"), GaugeError);
  EXPECT_THROW(parse_gauge("const:x"), std::invalid_argument);
  EXPECT_THROW(parse_gauge("expr:nope"), std::invalid_argument);
  EXPECT_THROW(parse_gauge("ball:1"), std::invalid_argument);
  const Gauge g("broken", [](const Point&) { return 0.0; });
  EXPECT_THROW(g({0.0}), GaugeError);
}

TEST(Cousin, ConstantOneIsSingleCell) {
  const TaggedPartition p = cousin_partition(parse_box("0..1"), Gauge::constant(1.0), Kind::HK);
  ASSERT_EQ(p.size(), 1U);
  EXPECT_EQ(p.cells[0].tag, Point{0.5});
  EXPECT_EQ(p.cells[0].box, parse_box("0..1"));
}

TEST(Cousin, ConstantGaugeAcceptsFirstFineLevel) {
  // Side 1/2 has radius 1/4 < 0.3, so the first bisection is already fine.
  const std::function<double(double)> c03 = [](double) { return 0.3; };
  const int depth = simulate_depth_1d(0.0, 1.0, c03, 0);
  const TaggedPartition p = cousin_partition(parse_box("0..1,0..1"), Gauge::constant(0.3), Kind::HK);
  EXPECT_EQ(depth, 1);
  EXPECT_EQ(p.size(), std::size_t{1} << (2 * depth));
  for (const auto& c : p.cells) EXPECT_EQ(c.box.max_side(), Dyadic::pow2(-depth));
}

TEST(Cousin, ShrinkingGaugeDepthMatchesSimulation) {
  const std::function<double(double)> d = [](double t) { return std::max(std::abs(t) / 2.0, std::ldexp(1.0, -20)); };
  const int depth = simulate_depth_1d(0.0, 1.0, d, 0);
  EXPECT_GE(depth, 15);
  EXPECT_LE(depth, 24);
  const Gauge g = builtin_gauges::half_dist0();
  const TaggedPartition p = cousin_partition(parse_box("0..1"), g, Kind::HK, depth);
  Dyadic smallest = Dyadic(1);
  for (const auto& c : p.cells) smallest = min(smallest, c.box.max_side());
  EXPECT_EQ(smallest, Dyadic::pow2(-depth));
  expect_sound(p, parse_box("0..1"), g);
  EXPECT_THROW(cousin_partition(parse_box("0..1"), g, Kind::HK, depth - 1), DepthExceeded);
}

TEST(Cousin, VanishingGaugeOffGridReportsDepth) {
  // δ → 0 at 1/3, which no bisection cell has as center or corner.
  const Gauge g = Gauge::dist_to({1.0 / 3.0}, 0.5);
  try {
    cousin_partition(parse_box("0..1"), g, Kind::HK, 30);
    FAIL() << "expected DepthExceeded";
  } catch (const DepthExceeded& e) {
    EXPECT_LT(e.delta(), std::ldexp(1.0, -28));
    const Box cell = parse_box(e.cell());
    EXPECT_LT(std::abs(cell.center()[0] - 1.0 / 3.0), 4.0 * cell.max_side().to_double());
  }
}

TEST(Cousin, RejectsBadDepthCap) {
  EXPECT_THROW(cousin_partition(parse_box("0..1"), Gauge::constant(1.0), Kind::HK, 0), std::invalid_argument);
}

// Randomized boxes and gauges in m = 1, 2, 3.
TEST(CousinProperty, RandomInstancesAreSound) {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> corner(-16, 16), len(1, 16);
  std::uniform_real_distribution<double> scale(0.05, 1.0);
  for (int i = 0; i < 120; ++i) {
    const std::size_t m = 1 + i % 3;
    std::vector<Dyadic> lo, hi;
    for (std::size_t j = 0; j < m; ++j) {
      const int a = corner(rng);
      lo.push_back(Dyadic(BigInt(a), -3));
      hi.push_back(Dyadic(BigInt(a + len(rng)), -3));
    }
    const Box J(lo, hi);
    // The dist-to point sits on J's bisection grid, where a corner tag rescues it.
    Point p(m);
    for (std::size_t j = 0; j < m; ++j) {
      const double k = static_cast<double>(rng() % 9) / 8.0;
      p[j] = (J.lo(j) + J.side(j) * Dyadic::from_double(k)).to_double();
    }
    const double s = scale(rng);
    const Gauge g = i % 2 ? min(Gauge::constant(s), Gauge::dist_to(p, 0.5)) : Gauge::constant(s * 0.5);
    const TaggedPartition part = cousin_partition(J, g, i % 4 == 0 ? Kind::M : Kind::HK, 30);
    expect_sound(part, J, g);
    EXPECT_TRUE(validate_partition(part, g, J).ok());
  }
}

TEST(Validate, DetectsDefects) {
  const Gauge g = Gauge::constant(1.0);
  TaggedPartition p;
  p.kind = Kind::HK;
  p.cells = {{{0.25}, parse_box("0..0.5")}, {{0.5}, parse_box("0.25..1")}};
  const PartitionCheck c = validate_partition(p, g, parse_box("0..1"));
  EXPECT_FALSE(c.non_overlapping);
  EXPECT_FALSE(c.exact_cover);
  p.cells = {{{0.9}, parse_box("0..0.5")}, {{0.75}, parse_box("0.5..1")}};
  EXPECT_FALSE(validate_partition(p, g).tags_ok);
  p.kind = Kind::M;
  EXPECT_TRUE(validate_partition(p, g, parse_box("0..1")).ok());
  EXPECT_FALSE(validate_partition(p, Gauge::constant(0.3), parse_box("0..1")).fine);
}

TEST(ZTagged, SinglePointHK) {
  const Gauge g = Gauge::constant(0.1);
  const TaggedPartition p = sample_Z_tagged_partition(finite_sampler({{0.0}}), g, parse_box("0..1"), Kind::HK, 1, 5);
  ASSERT_EQ(p.size(), 1U);
  EXPECT_EQ(p.cells[0].tag, Point{0.0});
  EXPECT_EQ(p.cells[0].box.lo(0), Dyadic(0));
  EXPECT_LT(p.cells[0].box.hi(0).to_double(), 0.1);
}

TEST(ZTagged, EmptySampler) {
  EXPECT_TRUE(sample_Z_tagged_partition(finite_sampler({}), Gauge::constant(0.1), parse_box("0..1"), Kind::M, 8, 1).empty());
  EXPECT_TRUE(sample_Z_tagged_partition(nullptr, Gauge::constant(0.1), parse_box("0..1"), Kind::M, 8, 1).empty());
}

// M cells tagged on the boundary of the unit square stay in its δ-collar.
TEST(ZTaggedProperty, BoundaryCollarBound) {
  const double d = std::ldexp(1.0, -4);
  const Box J = parse_box("0..1,0..1");
  const PointSampler boundary = [](std::mt19937_64& rng) -> std::optional<Point> {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double s = u(rng);
    switch (rng() % 4) {
      case 0: return Point{s, 0.0};
      case 1: return Point{s, 1.0};
      case 2: return Point{0.0, s};
      default: return Point{1.0, s};
    }
  };
  const double collar = 1.0 - (1.0 - 2.0 * d) * (1.0 - 2.0 * d);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const TaggedPartition p = sample_Z_tagged_partition(boundary, Gauge::constant(d), J, Kind::M, 200, seed);
    ASSERT_FALSE(p.empty());
    EXPECT_TRUE(validate_partition(p, Gauge::constant(d)).ok());
    for (const auto& c : p.cells) {
      // Every cell point is within d of its boundary tag, hence of ∂J.
      const double dist = std::min({c.box.hi(0).to_double(), c.box.hi(1).to_double(), 1.0 - c.box.lo(0).to_double(),
                                    1.0 - c.box.lo(1).to_double()});
      EXPECT_LT(dist, d);
      EXPECT_TRUE(J.contains(c.box));
    }
    const double total = p.total_measure().to_double();
    EXPECT_LE(total, collar);
    EXPECT_LE(total, 8.0 * d * (1.0 + 2.0 * d));
  }
}

TEST(RiemannSum, TrivialIdentities) {
  const Box J = parse_box("0..1");
  const TaggedPartition p = cousin_partition(J, Gauge::constant(0.1), Kind::HK);
  EXPECT_NEAR(riemann_sum(Integrand::scalar("c", 1, [](const double*) { return 3.0; }), p)[0], 3.0, 1e-15);
  EXPECT_NEAR(riemann_sum(Integrand::scalar("t", 1, [](const double* t) { return t[0]; }), p)[0], 0.5, 1e-15);
  const Integrand v("v", 1, 2, [](const double* t, double* out) {
    out[0] = 1.0;
    out[1] = t[0];
  });
  const VectorValue s = riemann_sum(v, p);
  EXPECT_NEAR(s[0], 1.0, 1e-15);
  EXPECT_NEAR(s[1], 0.5, 1e-15);
}
