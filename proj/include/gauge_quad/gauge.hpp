#pragma once

#include "gauge_quad/geometry.hpp"

#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gauge_quad {

/// δ(t) was not strictly positive, or t lies outside the gauge's domain.
class GaugeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// δ: Z -> (0, ∞).
class Gauge {
 public:
  using Fn = std::function<double(const Point&)>;

  Gauge(std::string description, Fn fn) : desc_(std::move(description)), fn_(std::move(fn)) {}

  static Gauge constant(double c) {
    if (!(c > 0.0) || !std::isfinite(c)) throw GaugeError("const gauge must be positive");
    return Gauge("const:" + num(c), [c](const Point&) { return c; });
  }

  /// δ(t) = scale · |t - p|_∞, with δ(p) = scale so the gauge stays positive.
  static Gauge dist_to(Point p, double scale) {
    if (!(scale > 0.0)) throw GaugeError("dist-to gauge needs a positive scale");
    std::string d = "dist-to:" + point_to_string(p) + "," + num(scale);
    return Gauge(std::move(d), [p = std::move(p), scale](const Point& t) {
      if (t.size() != p.size()) throw DimensionMismatch("dist-to gauge: dimension mismatch");
      double r = 0.0;
      for (std::size_t j = 0; j < t.size(); ++j) r = std::max(r, std::abs(t[j] - p[j]));
      return r == 0.0 ? scale : scale * r;
    });
  }

  /// (δ₁ ∧ δ₂)(t) = min(δ₁(t), δ₂(t)).
  friend Gauge min(const Gauge& a, const Gauge& b) {
    return Gauge("min:(" + a.desc_ + "," + b.desc_ + ")",
                 [a, b](const Point& t) { return std::min(a(t), b(t)); });
  }

  /// Same gauge, defined only on `domain`.
  Gauge restricted(std::function<bool(const Point&)> domain, const std::string& what) const {
    return Gauge(desc_ + "|" + what, [self = *this, domain = std::move(domain), what](const Point& t) {
      if (!domain(t)) throw GaugeError("gauge evaluated outside its domain " + what);
      return self(t);
    });
  }

  double operator()(const Point& t) const {
    const double d = fn_(t);
    if (!(d > 0.0) || std::isnan(d)) {
      throw GaugeError("gauge " + desc_ + " is not positive at (" + point_to_string(t) + ")");
    }
    return d;
  }

  const std::string& description() const { return desc_; }

 private:
  static std::string num(double x) {
    std::string s = std::to_string(x);
    while (s.size() > 1 && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
  }

  std::string desc_;
  Fn fn_;
};

namespace builtin_gauges {

/// δ(t) = max(|t|_∞ / 2, 2^-20)
inline Gauge half_dist0() {
  return Gauge("expr:half-dist0", [](const Point& t) {
    double r = 0.0;
    for (const double x : t) r = std::max(r, std::abs(x));
    return std::max(r / 2.0, std::ldexp(1.0, -20));
  });
}

/// δ(t) = max(|t|_∞^2, 2^-24): quadratic shrinking toward the origin.
inline Gauge square_dist0() {
  return Gauge("expr:square-dist0", [](const Point& t) {
    double r = 0.0;
    for (const double x : t) r = std::max(r, std::abs(x));
    return std::max(r * r, std::ldexp(1.0, -24));
  });
}

/// δ(t) = 2^-4 · (1 + sin^2(7 t_1)): bounded, oscillating.
inline Gauge wobble() {
  return Gauge("expr:wobble", [](const Point& t) {
    const double s = std::sin(7.0 * t[0]);
    return std::ldexp(1.0 + s * s, -4);
  });
}

}  // namespace builtin_gauges

/// Gauge grammar: "const:C", "dist-to:P1,...,Pm,SCALE", "min:(G1,G2)",
/// "expr:NAME" with NAME in {half-dist0, square-dist0, wobble}.
inline Gauge parse_gauge(std::string_view text) {
  const std::string s(text);
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("gauge '" + s + "': expected KIND:ARGS");
  const std::string kind = s.substr(0, colon);
  const std::string args = s.substr(colon + 1);
  auto number = [&](const std::string& x) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(x, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != x.size() || x.empty()) throw std::invalid_argument("gauge '" + s + "': bad number '" + x + "'");
    return v;
  };
  if (kind == "const") return Gauge::constant(number(args));
  if (kind == "dist-to") {
    std::vector<double> vals;
    std::size_t start = 0;
    while (true) {
      const auto c = args.find(',', start);
      vals.push_back(number(args.substr(start, c == std::string::npos ? std::string::npos : c - start)));
      if (c == std::string::npos) break;
      start = c + 1;
    }
    if (vals.size() < 2) throw std::invalid_argument("gauge '" + s + "': dist-to needs POINT,SCALE");
    const double scale = vals.back();
    vals.pop_back();
    return Gauge::dist_to(std::move(vals), scale);
  }
  if (kind == "min") {
    if (args.size() < 2 || args.front() != '(' || args.back() != ')') {
      throw std::invalid_argument("gauge '" + s + "': min expects (G1,G2)");
    }
    const std::string inner = args.substr(1, args.size() - 2);
    // Split at the top-level comma that starts a new "kind:".
    int depth = 0;
    for (std::size_t i = 0; i < inner.size(); ++i) {
      if (inner[i] == '(') ++depth;
      if (inner[i] == ')') --depth;
      if (inner[i] == ',' && depth == 0) {
        const std::string rest = inner.substr(i + 1);
        const auto k = rest.find(':');
        if (k == std::string::npos) continue;
        const std::string head = rest.substr(0, k);
        if (head == "const" || head == "dist-to" || head == "min" || head == "expr") {
          return min(parse_gauge(inner.substr(0, i)), parse_gauge(rest));
        }
      }
    }
    throw std::invalid_argument("gauge '" + s + "': min expects two gauges");
  }
  if (kind == "expr") {
    if (args == "half-dist0") return builtin_gauges::half_dist0();
    if (args == "square-dist0") return builtin_gauges::square_dist0();
    if (args == "wobble") return builtin_gauges::wobble();
    throw std::invalid_argument("gauge '" + s + "': unknown builtin (half-dist0, square-dist0, wobble)");
  }
  throw std::invalid_argument("gauge '" + s + "': kind must be const, dist-to, min or expr");
}

}  // namespace gauge_quad
