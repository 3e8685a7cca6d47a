#include "gauge_quad/dyadic.hpp"

#include <gtest/gtest.h>

#include <random>

using gauge_quad::Dyadic;
using gauge_quad::NotDyadicError;

namespace {

// k * 2^-s as an integer scaled by 2^S (S >= s), so sums and products compare exactly.
__int128 scaled(long long k, int s, int S) { return static_cast<__int128>(k) << (S - s); }

}  // namespace

TEST(Dyadic, CanonicalFormIsUnique) {
  EXPECT_EQ(Dyadic(gauge_quad::BigInt(12), -3), Dyadic(gauge_quad::BigInt(3), -1));
  EXPECT_EQ(Dyadic(gauge_quad::BigInt(3), -1).mantissa(), 3);
  EXPECT_EQ(Dyadic(gauge_quad::BigInt(0), 17).exponent(), 0);
  EXPECT_EQ(Dyadic(8).exponent(), 3);
}

TEST(Dyadic, ParseAndPrint) {
  EXPECT_EQ(Dyadic::parse("0.5"), Dyadic::pow2(-1));
  EXPECT_EQ(Dyadic::parse("-3.140625").to_string(), "-3.140625");
  EXPECT_EQ(Dyadic::parse("+0.0078125"), Dyadic::pow2(-7));
  EXPECT_EQ(Dyadic::parse("1024").to_string(), "1024");
  EXPECT_EQ(Dyadic::parse("0").to_string(), "0");
  EXPECT_THROW(Dyadic::parse("0.1"), NotDyadicError);
  EXPECT_THROW(Dyadic::parse("1.2.3"), NotDyadicError);
  EXPECT_THROW(Dyadic::parse(""), NotDyadicError);
  EXPECT_THROW(Dyadic::parse("abc"), NotDyadicError);
}

TEST(Dyadic, DoubleRoundTripIsExact) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 2000; ++i) {
    const double x = u(rng) * std::ldexp(1.0, static_cast<int>(rng() % 80) - 40);
    const Dyadic d = Dyadic::from_double(x);
    EXPECT_TRUE(d.exactly_representable());
    EXPECT_EQ(d.to_double(), x);
  }
  EXPECT_THROW(Dyadic::from_double(std::numeric_limits<double>::infinity()), std::domain_error);
}

TEST(Dyadic, StringRoundTrip) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 500; ++i) {
    const Dyadic d(gauge_quad::BigInt(static_cast<long long>(rng() % 2000001) - 1000000),
                   static_cast<std::int64_t>(rng() % 61) - 30);
    EXPECT_EQ(Dyadic::parse(d.to_string()), d);
  }
}

// Field operations against scaled 128-bit integer arithmetic.
TEST(DyadicProperty, ArithmeticMatchesScaledIntegers) {
  std::mt19937_64 rng(3);
  constexpr int S = 40;
  for (int i = 0; i < 5000; ++i) {
    const long long a = static_cast<long long>(rng() % 200001) - 100000;
    const long long b = static_cast<long long>(rng() % 200001) - 100000;
    const int sa = static_cast<int>(rng() % 20);
    const int sb = static_cast<int>(rng() % 20);
    const Dyadic x(gauge_quad::BigInt(a), -sa);
    const Dyadic y(gauge_quad::BigInt(b), -sb);
    const __int128 X = scaled(a, sa, S), Y = scaled(b, sb, S);
    EXPECT_EQ(x + y, Dyadic(gauge_quad::BigInt(static_cast<long long>(X + Y)), -S));
    EXPECT_EQ(x - y, Dyadic(gauge_quad::BigInt(static_cast<long long>(X - Y)), -S));
    EXPECT_EQ(x * y, Dyadic(gauge_quad::BigInt(static_cast<long long>(a * b)), -(sa + sb)));
    EXPECT_EQ(x < y, X < Y);
    EXPECT_EQ(x == y, X == Y);
    EXPECT_EQ((x + y) - y, x);
    EXPECT_EQ(x.half().ldexp(1), x);
    EXPECT_EQ(gauge_quad::min(x, y) + gauge_quad::max(x, y), x + y);
  }
}

TEST(DyadicProperty, HashAgreesWithEquality) {
  const Dyadic a(gauge_quad::BigInt(6), -2);
  const Dyadic b(gauge_quad::BigInt(3), -1);
  EXPECT_EQ(a, b);
  EXPECT_EQ(std::hash<Dyadic>{}(a), std::hash<Dyadic>{}(b));
}
