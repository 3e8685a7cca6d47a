#include "gauge_quad/integrator.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace gauge_quad;

namespace {

Integrand scalar(const char* name, std::size_t m, std::function<double(const double*)> fn) {
  return Integrand::scalar(name, m, std::move(fn));
}

void expect_cauchy_band(const IntegrationResult& r, double tol) {
  ASSERT_TRUE(r.converged()) << r.note;
  ASSERT_GE(r.trace.size(), 3U);
  const std::size_t k = r.trace.size();
  EXPECT_LT((r.trace[k - 1].sum - r.trace[k - 2].sum).norm(), tol / 2.0);
  EXPECT_LT((r.trace[k - 2].sum - r.trace[k - 3].sum).norm(), tol / 2.0);
}

}  // namespace

TEST(IntegrateBox, SquareOnUnitInterval) {
  const auto r = integrate_box(scalar("x2", 1, [](const double* t) { return t[0] * t[0]; }), parse_box("0..1"),
                               Kind::HK, 1e-6);
  expect_cauchy_band(r, 1e-6);
  EXPECT_NEAR(r.value[0], 1.0 / 3.0, 1e-6);
}

TEST(IntegrateBox, SinSinOnDyadicSquare) {
  const double b = 3.140625;
  const double oracle = (1.0 - std::cos(b)) * (1.0 - std::cos(b));
  for (Kind k : {Kind::HK, Kind::M}) {
    const auto r = integrate_box(scalar("ss", 2, [](const double* t) { return std::sin(t[0]) * std::sin(t[1]); }),
                                 parse_box("0..3.140625,0..3.140625"), k, 1e-4);
    expect_cauchy_band(r, 1e-4);
    EXPECT_NEAR(r.value[0], oracle, 1e-4);
  }
}

TEST(IntegrateBox, PointIndicatorIsNull) {
  const Integrand f = scalar("zero", 1, [](const double*) { return 0.0; }).modified_at({{0.5}}, {1.0});
  for (Kind k : {Kind::HK, Kind::M}) {
    const auto r = integrate_box(f, parse_box("0..1"), k, 1e-6);
    ASSERT_TRUE(r.converged()) << r.note;
    EXPECT_NEAR(r.value[0], 0.0, 1e-6);
  }
}

TEST(IntegrateBox, SingularityAtCorner) {
  const Integrand f = scalar("inv_sqrt", 1, [](const double* t) { return t[0] > 0 ? 1.0 / std::sqrt(t[0]) : 0.0; })
                          .with_singularity(Singularity{{0.0}, 1.0, 3.0, 1.0});
  const auto r = integrate_box(f, parse_box("0..1"), Kind::M, 1e-4);
  ASSERT_TRUE(r.converged()) << r.note;
  EXPECT_NEAR(r.value[0], 2.0, 1e-4);
}

TEST(IntegrateBox, VectorValued) {
  const Integrand f("v", 1, 2, [](const double* t, double* out) {
    out[0] = 1.0;
    out[1] = t[0];
  });
  const auto r = integrate_box(f, parse_box("0..1"), Kind::HK, 1e-8);
  ASSERT_TRUE(r.converged());
  EXPECT_NEAR(r.value[0], 1.0, 1e-12);
  EXPECT_NEAR(r.value[1], 0.5, 1e-12);
}

TEST(IntegrateBox, BreakpointsSplitTheBox) {
  // Step function jumping at 1/3 + 1/1024 (dyadic, off every bisection grid of [0,1.5]).
  const double c = 0.3330078125;
  const Integrand step =
      scalar("step", 1, [c](const double* t) { return t[0] < c ? 0.0 : 1.0; }).with_breakpoints({{c}});
  const auto r = integrate_box(step, parse_box("0..1.5"), Kind::HK, 1e-9);
  ASSERT_TRUE(r.converged());
  EXPECT_NEAR(r.value[0], 1.5 - c, 1e-12);
  EXPECT_EQ(detail::split_at(parse_box("0..1.5,0..1"), {{c, 2.0}, {}}).size(), 2U);
}

TEST(IntegrateBox, Errors) {
  const Integrand f = scalar("one", 1, [](const double*) { return 1.0; });
  EXPECT_THROW(integrate_box(f, parse_box("0..1"), Kind::HK, 0.0), std::invalid_argument);
  EXPECT_THROW(integrate_box(f, parse_box("0..1,0..1"), Kind::HK, 1e-3), DimensionMismatch);
  const Integrand bad = scalar("nan", 1, [](const double*) { return std::nan(""); });
  EXPECT_THROW(integrate_box(bad, parse_box("0..1"), Kind::HK, 1e-3), EvaluationError);
  IntegratorOptions tight;
  tight.max_level = 2;
  const auto r = integrate_box(scalar("x2", 1, [](const double* t) { return t[0] * t[0]; }), parse_box("0..1"),
                               Kind::HK, 1e-9, tight);
  EXPECT_EQ(r.status, Status::NoConvergence);
}

// a.e. insensitivity: changing f on a finite set moves the value by < 2 tol.
TEST(IntegratorProperty, FiniteModificationIsInvisible) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Integrand f = scalar("cos", 2, [](const double* t) { return std::cos(t[0] + 2.0 * t[1]); });
  const Box J = parse_box("0..1,0..1");
  const double tol = 1e-4;
  const auto base = integrate_box(f, J, Kind::M, tol);
  ASSERT_TRUE(base.converged());
  for (int i = 0; i < 4; ++i) {
    std::vector<Point> pts{{0.5, 0.5}, {u(rng), u(rng)}, {0.25, 0.75}};
    const auto mod = integrate_box(f.modified_at(pts, {1e3}), J, Kind::M, tol);
    ASSERT_TRUE(mod.converged()) << mod.note;
    EXPECT_LT(std::abs(mod.value[0] - base.value[0]), 2.0 * tol);
  }
}

// A value changed at a declared singular point: the faster rate governs there.
TEST(IntegratorProperty, ModificationAtSingularPoint) {
  const Singularity slow{{0.0}, 0.5, 1.0, 1.0}, fast{{0.0}, 0.0, 2.0, 1.0};
  for (const auto& sing : {std::vector<Singularity>{slow, fast}, std::vector<Singularity>{fast, slow}}) {
    const GaugeSchedule g(1.0, 5, sing);
    const double at[1] = {0.0};
    EXPECT_EQ(g(at, 1), std::ldexp(1.0, -10));
  }
  const Integrand f = scalar("inv_sqrt", 1, [](const double* t) { return t[0] > 0.0 ? 1.0 / std::sqrt(t[0]) : 0.0; })
                          .with_singularity(slow);
  const auto mod = integrate_box(f.modified_at({{0.0}}, {1e3}), parse_box("0..1"), Kind::M, 1e-4);
  ASSERT_TRUE(mod.converged()) << mod.note;
  EXPECT_NEAR(mod.value[0], 2.0, 2e-4);
}

TEST(IntegratorProperty, Linearity) {
  const Integrand f = scalar("exp", 1, [](const double* t) { return std::exp(t[0]); });
  const Integrand g = scalar("sin", 1, [](const double* t) { return std::sin(3.0 * t[0]); });
  const Box J = parse_box("-1..2");
  const double tol = 1e-6;
  const double a = 2.5, b = -1.25;
  const auto rf = integrate_box(f, J, Kind::HK, tol);
  const auto rg = integrate_box(g, J, Kind::HK, tol);
  const auto rh = integrate_box(combine(a, f, b, g), J, Kind::HK, tol);
  EXPECT_LT(std::abs(rh.value[0] - (a * rf.value[0] + b * rg.value[0])), (1 + std::abs(a) + std::abs(b)) * tol);
  const double oracle = a * (std::exp(2.0) - std::exp(-1.0)) + b * (std::cos(-3.0) - std::cos(6.0)) / 3.0;
  EXPECT_NEAR(rh.value[0], oracle, tol);
}

TEST(IntegratorProperty, ReproducibleWithSeed) {
  const Integrand f = scalar("g", 2, [](const double* t) { return std::exp(-t[0] * t[0] - t[1]); });
  const auto a = integrate_box(f, parse_box("0..1,0..1"), Kind::M, 1e-5);
  const auto b = integrate_box(f, parse_box("0..1,0..1"), Kind::M, 1e-5);
  EXPECT_EQ(a.value[0], b.value[0]);
  EXPECT_EQ(a.tag_spread, b.tag_spread);
  EXPECT_EQ(a.trace.size(), b.trace.size());
}

TEST(LocallyIntegrate, Examples) {
  const Region half = parse_region("halfline:0..inf");
  const Integrand e = scalar("e", 1, [](const double* t) { return std::exp(-t[0]); });
  const auto F = corner_sum_primitive([](const double* t, double* out) { out[0] = -std::exp(-t[0]); }, 1, 1);
  const LocalReport r = locally_integrate(e, half, F, parse_box("1..2"), Kind::M, 1e-6);
  EXPECT_TRUE(r.ok());
  EXPECT_NEAR(r.integral[0], std::exp(-1.0) - std::exp(-2.0), 1e-6);

  const Region unit = parse_region("open:0..1");
  const Integrand zero = scalar("0", 1, [](const double*) { return 0.0; });
  const auto Z = corner_sum_primitive([](const double*, double* out) { out[0] = 0.0; }, 1, 1);
  EXPECT_EQ(locally_integrate(zero, unit, Z, parse_box("0.25..0.5"), Kind::HK, 1e-6).residual, 0.0);

  const Integrand one = scalar("1", 1, [](const double*) { return 1.0; });
  const LocalReport q = locally_integrate(one, unit, measure_function(1), parse_box("0.25..0.5"), Kind::HK, 1e-6);
  EXPECT_TRUE(q.ok());
  EXPECT_DOUBLE_EQ(q.integral[0], 0.25);
  EXPECT_THROW(locally_integrate(one, unit, measure_function(1), parse_box("0..0.5"), Kind::HK, 1e-6),
               std::invalid_argument);
}

TEST(LocallyIntegrate, BatchSweep) {
  const Region W = parse_region("open:0..2,0..1");
  const Integrand f = scalar("xy", 2, [](const double* t) { return t[0] * t[1]; });
  const auto F = corner_sum_primitive([](const double* t, double* out) { out[0] = t[0] * t[0] * t[1] * t[1] / 4.0; }, 2, 1);
  const auto boxes = local_test_boxes(W, {parse_box("0.25..1.75,0.25..0.75"), parse_box("1..2,0..1")}, 12, 3);
  const auto reports = locally_integrate_batch(f, W, F, boxes, Kind::HK, 1e-5);
  ASSERT_FALSE(reports.empty());
  for (const auto& r : reports) EXPECT_TRUE(r.ok()) << r.J.to_string() << " residual " << r.residual;
}
