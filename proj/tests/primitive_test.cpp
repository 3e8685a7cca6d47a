#include "gauge_quad/integrator.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace gauge_quad;

namespace {

// Splits a random dyadic box at a random dyadic point of one axis.
std::tuple<Box, Box, Box> abutting_pair(std::mt19937_64& rng, std::size_t m) {
  std::uniform_int_distribution<int> corner(-32, 31), len(2, 32);
  std::vector<Dyadic> lo, hi;
  for (std::size_t j = 0; j < m; ++j) {
    const int a = corner(rng);
    lo.push_back(Dyadic(BigInt(a), -4));
    hi.push_back(Dyadic(BigInt(a + len(rng)), -4));
  }
  const Box whole(lo, hi);
  const std::size_t axis = rng() % m;
  const long long cells = static_cast<long long>(((whole.side(axis)) * Dyadic(16)).to_double());
  const Dyadic cut = whole.lo(axis) + Dyadic(BigInt(1 + static_cast<long long>(rng() % (cells - 1))), -4);
  std::vector<Dyadic> h1 = hi, l2 = lo;
  h1[axis] = cut;
  l2[axis] = cut;
  return {whole, Box(lo, h1), Box(l2, hi)};
}

}  // namespace

TEST(CornerSum, Examples) {
  const auto sq = corner_sum_primitive([](const double* t, double* out) { out[0] = t[0] * t[0]; }, 1, 1);
  EXPECT_DOUBLE_EQ(sq(parse_box("1..2")).value[0], 3.0);
  EXPECT_DOUBLE_EQ(measure_function(2)(parse_box("0..1,0..1")).value[0], 1.0);
  const auto osc = corner_sum_primitive(
      [](const double* t, double* out) { out[0] = t[0] == 0.0 ? 0.0 : t[0] * t[0] * std::sin(1.0 / (t[0] * t[0])); }, 1,
      1);
  EXPECT_NEAR(osc(parse_box("0..1")).value[0], std::sin(1.0), 1e-15);
  EXPECT_THROW(sq(parse_box("0..1,0..1")), DimensionMismatch);
}

// Exact additivity of corner sums on 1000 abutting dyadic pairs.
TEST(PrimitiveProperty, CornerSumAdditive) {
  std::mt19937_64 rng(51);
  const std::vector<std::pair<std::size_t, Integrand::Kernel>> phis{
      {1, [](const double* t, double* out) { out[0] = std::exp(t[0]) * std::sin(t[0]); }},
      {2, [](const double* t, double* out) { out[0] = std::cos(t[0]) * std::cos(t[1]); }},
      {2, [](const double* t, double* out) { out[0] = std::erf(t[0]) * std::erf(t[1]); }},
      {3, [](const double* t, double* out) { out[0] = t[0] * t[1] * t[2] + t[0] * t[0]; }},
  };
  for (int i = 0; i < 1000; ++i) {
    const auto& [m, phi] = phis[i % phis.size()];
    const auto F = corner_sum_primitive(phi, m, 1);
    const auto [whole, a, b] = abutting_pair(rng, m);
    const IntervalValue w = F(whole), x = F(a), y = F(b);
    const double scale = std::max({1.0, std::abs(w.value[0]), std::abs(x.value[0]), std::abs(y.value[0])});
    EXPECT_LT(std::abs(w.value[0] - x.value[0] - y.value[0]), 1e-12 * scale) << whole.to_string();
    EXPECT_LE(std::abs(w.value[0] - x.value[0] - y.value[0]), w.error + x.error + y.error);
  }
}

TEST(PrimitiveProperty, NumericAdditiveWithinBudget) {
  std::mt19937_64 rng(52);
  const Integrand f = Integrand::scalar("g", 2, [](const double* t) { return std::exp(-t[0] * t[0]) * (1.0 + t[1]); });
  const auto F = numeric_primitive(f, Kind::HK, 1e-5, 1e-8);
  for (int i = 0; i < 40; ++i) {
    const auto [whole, a, b] = abutting_pair(rng, 2);
    const IntervalValue w = F(whole), x = F(a), y = F(b);
    EXPECT_LE((w.value - x.value - y.value).norm(), w.error + x.error + y.error) << whole.to_string();
  }
  EXPECT_TRUE(F.numeric());
  EXPECT_GT(F.cache_size(), 0U);
}

TEST(Primitive, NumericMatchesClosedForm) {
  const Integrand f = Integrand::scalar("cos", 1, [](const double* t) { return std::cos(t[0]); });
  const auto F = numeric_primitive(f, Kind::M, 1e-8, 1e-12);
  const IntervalValue v = F(parse_box("0..1.5"));
  EXPECT_NEAR(v.value[0], std::sin(1.5), v.error);
  EXPECT_LE(v.error, 1.5e-8 + 1e-12);
  const std::size_t cached = F.cache_size();
  F(parse_box("0..1.5"));
  EXPECT_EQ(F.cache_size(), cached);
}

TEST(Primitive, NonConvergenceSurfaces) {
  IntegratorOptions o;
  o.max_level = 1;
  const Integrand f = Integrand::scalar("x2", 1, [](const double* t) { return t[0] * t[0]; });
  const auto F = numeric_primitive(f, Kind::HK, 1e-12, 1e-12, o);
  EXPECT_THROW(F(parse_box("0..1")), EvaluationError);
}
