#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gauge_quad {

using BigInt = boost::multiprecision::cpp_int;

/// Raised when a decimal literal does not denote a binary rational.
class NotDyadicError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Exact binary rational `mantissa * 2^exponent`.
///
/// Canonical form: the mantissa is odd, or zero with exponent 0. Every finite
/// double is dyadic, so conversion from `double` is exact; conversion back is
/// exact whenever the mantissa fits in 53 bits and the exponent is in range.
class Dyadic {
 public:
  Dyadic() = default;
  Dyadic(BigInt mantissa, std::int64_t exponent)
      : mantissa_(std::move(mantissa)), exponent_(exponent) {
    normalize();
  }
  Dyadic(long long value) : mantissa_(value), exponent_(0) { normalize(); }  // NOLINT
  Dyadic(int value) : Dyadic(static_cast<long long>(value)) {}              // NOLINT

  static Dyadic from_double(double x) {
    if (!std::isfinite(x)) throw std::domain_error("Dyadic::from_double: non-finite value");
    if (x == 0.0) return {};
    int exp2 = 0;
    const double frac = std::frexp(x, &exp2);  // x = frac * 2^exp2, |frac| in [0.5, 1)
    const auto scaled = static_cast<long long>(std::ldexp(frac, 53));
    return Dyadic(BigInt(scaled), static_cast<std::int64_t>(exp2) - 53);
  }

  /// 2^k
  static Dyadic pow2(std::int64_t k) { return Dyadic(BigInt(1), k); }

  /// Parses `[+-]digits[.digits]`; throws NotDyadicError when the decimal is not a
  /// binary rational (e.g. "0.1").
  static Dyadic parse(std::string_view text);

  const BigInt& mantissa() const { return mantissa_; }
  std::int64_t exponent() const { return exponent_; }

  int sign() const { return mantissa_.sign(); }
  bool is_zero() const { return mantissa_.is_zero(); }

  double to_double() const {
    if (is_zero()) return 0.0;
    const auto bits = static_cast<std::int64_t>(boost::multiprecision::msb(abs(mantissa_))) + 1;
    if (bits <= 53) {
      return std::ldexp(mantissa_.convert_to<double>(), static_cast<int>(clamp_exp(exponent_)));
    }
    // Keep 64 leading bits; rounding to double then happens once in convert_to.
    const std::int64_t drop = bits - 64;
    const BigInt top = mantissa_ >> static_cast<unsigned>(drop);
    return std::ldexp(top.convert_to<double>(), static_cast<int>(clamp_exp(exponent_ + drop)));
  }

  /// True when to_double() loses nothing.
  bool exactly_representable() const {
    if (is_zero()) return true;
    const double d = to_double();
    return std::isfinite(d) && from_double(d) == *this;
  }

  /// Exact decimal expansion (dyadics always terminate in base 10).
  std::string to_string() const;

  Dyadic operator-() const { return Dyadic(BigInt(-mantissa_), exponent_); }

  friend Dyadic operator+(const Dyadic& a, const Dyadic& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    if (a.exponent_ <= b.exponent_) {
      BigInt m = b.mantissa_;
      m <<= static_cast<unsigned>(b.exponent_ - a.exponent_);
      return Dyadic(BigInt(a.mantissa_ + m), a.exponent_);
    }
    return b + a;
  }
  friend Dyadic operator-(const Dyadic& a, const Dyadic& b) { return a + (-b); }
  friend Dyadic operator*(const Dyadic& a, const Dyadic& b) {
    return Dyadic(BigInt(a.mantissa_ * b.mantissa_), a.exponent_ + b.exponent_);
  }
  Dyadic& operator+=(const Dyadic& o) { return *this = *this + o; }
  Dyadic& operator-=(const Dyadic& o) { return *this = *this - o; }
  Dyadic& operator*=(const Dyadic& o) { return *this = *this * o; }

  /// this * 2^k, exact.
  Dyadic ldexp(std::int64_t k) const {
    if (is_zero()) return {};
    Dyadic r = *this;
    r.exponent_ += k;
    return r;
  }
  Dyadic half() const { return ldexp(-1); }

  friend bool operator==(const Dyadic& a, const Dyadic& b) {
    return a.exponent_ == b.exponent_ && a.mantissa_ == b.mantissa_;
  }
  friend std::strong_ordering operator<=>(const Dyadic& a, const Dyadic& b) {
    const int sa = a.sign();
    const int sb = b.sign();
    if (sa != sb) return sa <=> sb;
    if (sa == 0) return std::strong_ordering::equal;
    const int c = (a - b).sign();
    return c <=> 0;
  }

  friend std::ostream& operator<<(std::ostream& os, const Dyadic& d) { return os << d.to_string(); }

  std::size_t hash() const {
    std::size_t h = std::hash<std::int64_t>{}(exponent_);
    for (auto it = mantissa_.backend().limbs(), end = it + mantissa_.backend().size(); it != end;
         ++it) {
      h ^= std::hash<std::uint64_t>{}(*it) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h ^ static_cast<std::size_t>(mantissa_.sign() < 0);
  }

 private:
  static std::int64_t clamp_exp(std::int64_t e) {
    return std::clamp<std::int64_t>(e, std::numeric_limits<int>::min() / 2,
                                    std::numeric_limits<int>::max() / 2);
  }

  void normalize() {
    if (mantissa_.is_zero()) {
      exponent_ = 0;
      return;
    }
    const auto shift = boost::multiprecision::lsb(abs(mantissa_));
    if (shift > 0) {
      mantissa_ >>= shift;
      exponent_ += static_cast<std::int64_t>(shift);
    }
  }

  BigInt mantissa_{0};
  std::int64_t exponent_{0};
};

inline Dyadic min(const Dyadic& a, const Dyadic& b) { return b < a ? b : a; }
inline Dyadic max(const Dyadic& a, const Dyadic& b) { return a < b ? b : a; }

inline Dyadic Dyadic::parse(std::string_view text) {
  const std::string original(text);
  auto fail = [&](const char* why) {
    throw NotDyadicError("'" + original + "': " + why);
  };
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (text.empty()) fail("empty number");
  bool negative = false;
  if (text.front() == '+' || text.front() == '-') {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }
  BigInt digits = 0;
  std::int64_t frac_digits = 0;
  bool seen_point = false;
  bool seen_digit = false;
  for (const char c : text) {
    if (c == '.') {
      if (seen_point) fail("more than one decimal point");
      seen_point = true;
    } else if (c >= '0' && c <= '9') {
      digits = digits * 10 + (c - '0');
      seen_digit = true;
      if (seen_point) ++frac_digits;
    } else {
      fail("not a decimal number");
    }
  }
  if (!seen_digit) fail("no digits");
  // value = digits / (2^f * 5^f); dyadic iff 5^f divides digits.
  BigInt five_pow = boost::multiprecision::pow(BigInt(5), static_cast<unsigned>(frac_digits));
  if (digits % five_pow != 0) fail("not a binary rational (denominator is not a power of two)");
  digits /= five_pow;
  if (negative) digits = -digits;
  return Dyadic(std::move(digits), -frac_digits);
}

inline std::string Dyadic::to_string() const {
  if (is_zero()) return "0";
  if (exponent_ >= 0) {
    BigInt v = mantissa_;
    v <<= static_cast<unsigned>(exponent_);
    return v.str();
  }
  // m * 2^-k = m * 5^k / 10^k
  const auto k = static_cast<unsigned>(-exponent_);
  BigInt scaled = abs(mantissa_) * boost::multiprecision::pow(BigInt(5), k);
  std::string s = scaled.str();
  if (s.size() <= k) s.insert(0, k - s.size() + 1, '0');
  s.insert(s.size() - k, ".");
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  return (mantissa_.sign() < 0 ? "-" : "") + s;
}

}  // namespace gauge_quad

template <>
struct std::hash<gauge_quad::Dyadic> {
  std::size_t operator()(const gauge_quad::Dyadic& d) const noexcept { return d.hash(); }
};
