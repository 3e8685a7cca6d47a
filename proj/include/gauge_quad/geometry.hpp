#pragma once

#include "gauge_quad/dyadic.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gauge_quad {

/// A point of R^m in floating coordinates (tags, sample points).
using Point = std::vector<double>;

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Norm { Max, Euclidean };

/// Finite-dimensional stand-in for the Banach-space values of an integrand.
class VectorValue {
 public:
  VectorValue() = default;
  explicit VectorValue(std::size_t dim, double fill = 0.0) : c_(dim, fill) {}
  VectorValue(std::initializer_list<double> init) : c_(init) {}
  explicit VectorValue(std::vector<double> c) : c_(std::move(c)) {}

  std::size_t dim() const { return c_.size(); }
  double operator[](std::size_t i) const { return c_[i]; }
  double& operator[](std::size_t i) { return c_[i]; }
  const std::vector<double>& components() const { return c_; }

  VectorValue& operator+=(const VectorValue& o) {
    check(o);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
  }
  VectorValue& operator-=(const VectorValue& o) {
    check(o);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
  }
  VectorValue& operator*=(double s) {
    for (double& x : c_) x *= s;
    return *this;
  }
  /// this += s * o
  void add_scaled(const VectorValue& o, double s) {
    check(o);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += s * o.c_[i];
  }
  friend VectorValue operator+(VectorValue a, const VectorValue& b) { return a += b; }
  friend VectorValue operator-(VectorValue a, const VectorValue& b) { return a -= b; }
  friend VectorValue operator*(VectorValue a, double s) { return a *= s; }
  friend VectorValue operator*(double s, VectorValue a) { return a *= s; }
  friend bool operator==(const VectorValue&, const VectorValue&) = default;

  double norm(Norm kind = Norm::Max) const {
    double acc = 0.0;
    for (const double x : c_) {
      if (kind == Norm::Max) {
        acc = std::max(acc, std::abs(x));
      } else {
        acc += x * x;
      }
    }
    return kind == Norm::Max ? acc : std::sqrt(acc);
  }
  bool finite() const {
    return std::all_of(c_.begin(), c_.end(), [](double x) { return std::isfinite(x); });
  }

 private:
  void check(const VectorValue& o) const {
    if (o.c_.size() != c_.size()) throw DimensionMismatch("VectorValue dimension mismatch");
  }
  std::vector<double> c_;
};

/// Closed non-degenerate box prod_j [lo_j, hi_j] with exact dyadic endpoints.
class Box {
 public:
  Box() = default;
  Box(std::vector<Dyadic> lo, std::vector<Dyadic> hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
    if (lo_.empty() || lo_.size() != hi_.size()) {
      throw std::invalid_argument("Box: endpoint lists must be non-empty and of equal length");
    }
    for (std::size_t j = 0; j < lo_.size(); ++j) {
      if (!(lo_[j] < hi_[j])) {
        throw std::invalid_argument("Box: degenerate along axis " + std::to_string(j) + " (" +
                                    lo_[j].to_string() + " >= " + hi_[j].to_string() + ")");
      }
    }
  }

  /// [lo, hi]^m
  static Box cube(std::size_t m, const Dyadic& lo, const Dyadic& hi) {
    return Box(std::vector<Dyadic>(m, lo), std::vector<Dyadic>(m, hi));
  }

  std::size_t dim() const { return lo_.size(); }
  const Dyadic& lo(std::size_t j) const { return lo_[j]; }
  const Dyadic& hi(std::size_t j) const { return hi_[j]; }
  const std::vector<Dyadic>& lo() const { return lo_; }
  const std::vector<Dyadic>& hi() const { return hi_; }

  Dyadic side(std::size_t j) const { return hi_[j] - lo_[j]; }
  Dyadic max_side() const {
    Dyadic s = side(0);
    for (std::size_t j = 1; j < dim(); ++j) s = max(s, side(j));
    return s;
  }

  /// Lebesgue measure, exact.
  Dyadic measure() const {
    Dyadic m = side(0);
    for (std::size_t j = 1; j < dim(); ++j) m *= side(j);
    return m;
  }

  Point center() const {
    Point c(dim());
    for (std::size_t j = 0; j < dim(); ++j) c[j] = (lo_[j] + hi_[j]).half().to_double();
    return c;
  }
  Point lo_point() const {
    Point p(dim());
    for (std::size_t j = 0; j < dim(); ++j) p[j] = lo_[j].to_double();
    return p;
  }
  Point hi_point() const {
    Point p(dim());
    for (std::size_t j = 0; j < dim(); ++j) p[j] = hi_[j].to_double();
    return p;
  }

  /// Closed containment of a floating point (compared exactly).
  bool contains(const Point& t) const {
    require_dim(t.size());
    for (std::size_t j = 0; j < dim(); ++j) {
      const Dyadic x = Dyadic::from_double(t[j]);
      if (x < lo_[j] || hi_[j] < x) return false;
    }
    return true;
  }

  /// Closed containment of another box.
  bool contains(const Box& other) const {
    require_dim(other.dim());
    for (std::size_t j = 0; j < dim(); ++j) {
      if (other.lo_[j] < lo_[j] || hi_[j] < other.hi_[j]) return false;
    }
    return true;
  }

  /// The 2^m children obtained by halving every axis. Child c takes the upper
  /// half on axis j iff bit j of c is set.
  std::vector<Box> bisect() const {
    const std::size_t m = dim();
    std::vector<Dyadic> mid(m);
    for (std::size_t j = 0; j < m; ++j) mid[j] = (lo_[j] + hi_[j]).half();
    std::vector<Box> out;
    out.reserve(std::size_t{1} << m);
    for (std::size_t c = 0; c < (std::size_t{1} << m); ++c) {
      std::vector<Dyadic> l(m), h(m);
      for (std::size_t j = 0; j < m; ++j) {
        const bool upper = (c >> j) & 1U;
        l[j] = upper ? mid[j] : lo_[j];
        h[j] = upper ? hi_[j] : mid[j];
      }
      out.emplace_back(std::move(l), std::move(h));
    }
    return out;
  }

  /// "lo..hi,lo..hi" with exact decimal endpoints.
  std::string to_string() const {
    std::string s;
    for (std::size_t j = 0; j < dim(); ++j) {
      if (j) s += ',';
      s += lo_[j].to_string() + ".." + hi_[j].to_string();
    }
    return s;
  }

  friend bool operator==(const Box&, const Box&) = default;
  /// Lexicographic on (lo, hi); used for deterministic ordering and map keys.
  friend bool operator<(const Box& a, const Box& b) {
    if (a.lo_ != b.lo_) return std::lexicographical_compare(a.lo_.begin(), a.lo_.end(),
                                                             b.lo_.begin(), b.lo_.end());
    return std::lexicographical_compare(a.hi_.begin(), a.hi_.end(), b.hi_.begin(), b.hi_.end());
  }

  std::size_t hash() const {
    std::size_t h = 0;
    for (std::size_t j = 0; j < dim(); ++j) {
      h = h * 1000003U ^ lo_[j].hash();
      h = h * 1000003U ^ hi_[j].hash();
    }
    return h;
  }

  void require_dim(std::size_t m) const {
    if (m != dim()) {
      throw DimensionMismatch("dimension mismatch: box has " + std::to_string(dim()) +
                              ", argument has " + std::to_string(m));
    }
  }

 private:
  std::vector<Dyadic> lo_;
  std::vector<Dyadic> hi_;
};

struct BoxHash {
  std::size_t operator()(const Box& b) const noexcept { return b.hash(); }
};

enum class Overlap { NonDegenerate, Degenerate, Empty };

struct BoxIntersection {
  Overlap kind = Overlap::Empty;
  std::optional<Box> box;  // set iff kind == NonDegenerate
};

/// Exact classification of I ∩ J: positive measure, touching on a null face, or disjoint.
inline BoxIntersection intersect(const Box& a, const Box& b) {
  a.require_dim(b.dim());
  const std::size_t m = a.dim();
  std::vector<Dyadic> lo(m), hi(m);
  bool degenerate = false;
  for (std::size_t j = 0; j < m; ++j) {
    lo[j] = max(a.lo(j), b.lo(j));
    hi[j] = min(a.hi(j), b.hi(j));
    if (hi[j] < lo[j]) return {Overlap::Empty, std::nullopt};
    if (hi[j] == lo[j]) degenerate = true;
  }
  if (degenerate) return {Overlap::Degenerate, std::nullopt};
  return {Overlap::NonDegenerate, Box(std::move(lo), std::move(hi))};
}

/// I° ∩ J° = ∅
inline bool non_overlapping(const Box& a, const Box& b) {
  return intersect(a, b).kind != Overlap::NonDegenerate;
}

/// Max-norm radius of the smallest ball around `tag` that contains `box`.
inline double fine_radius(const Point& tag, const Point& lo, const Point& hi) {
  double r = 0.0;
  for (std::size_t j = 0; j < tag.size(); ++j) {
    r = std::max(r, std::max(hi[j] - tag[j], tag[j] - lo[j]));
  }
  return r;
}

/// (tag, box) is δ-fine iff box ⊂ B(tag, δ(tag)) in the max norm (open ball).
inline bool is_fine(const Point& tag, const Box& box, double delta_at_tag) {
  box.require_dim(tag.size());
  if (!(delta_at_tag > 0.0)) throw std::invalid_argument("is_fine: delta must be positive");
  return fine_radius(tag, box.lo_point(), box.hi_point()) < delta_at_tag;
}

/// Parses the box literal "lo..hi,lo..hi" (decimal dyadic endpoints).
inline Box parse_box(std::string_view text) {
  std::vector<Dyadic> lo, hi;
  std::size_t start = 0;
  const std::string s(text);
  while (start <= s.size()) {
    const std::size_t comma = s.find(',', start);
    const std::string axis = s.substr(start, comma == std::string::npos ? std::string::npos
                                                                        : comma - start);
    const std::size_t dots = axis.find("..");
    if (dots == std::string::npos) {
      throw std::invalid_argument("box literal '" + s + "': axis '" + axis +
                                  "' is not of the form lo..hi");
    }
    lo.push_back(Dyadic::parse(axis.substr(0, dots)));
    hi.push_back(Dyadic::parse(axis.substr(dots + 2)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return Box(std::move(lo), std::move(hi));
}

inline std::string point_to_string(const Point& p) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t j = 0; j < p.size(); ++j) os << (j ? "," : "") << p[j];
  return os.str();
}

}  // namespace gauge_quad
