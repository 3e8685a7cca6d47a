#pragma once

#include "gauge_quad/geometry.hpp"

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace gauge_quad {

/// The region's membership or distance oracle produced an unusable answer.
class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Point classification relative to G° and the interior of its complement.
enum class Membership { Inside, Outside, Boundary };

/// Classification of a closed cell: inside G°, interior-disjoint from G°, or neither.
enum class CellClass { Inside, Outside, Straddle };

inline const char* to_string(Membership m) {
  switch (m) {
    case Membership::Inside: return "inside";
    case Membership::Outside: return "outside";
    case Membership::Boundary: return "boundary";
  }
  return "?";
}

/// Axis-aligned open box whose endpoints may be infinite (std::nullopt).
struct ExtendedBox {
  std::vector<std::optional<Dyadic>> lo;
  std::vector<std::optional<Dyadic>> hi;

  static ExtendedBox from(const Box& b) {
    ExtendedBox e;
    for (std::size_t j = 0; j < b.dim(); ++j) {
      e.lo.emplace_back(b.lo(j));
      e.hi.emplace_back(b.hi(j));
    }
    return e;
  }
  std::size_t dim() const { return lo.size(); }
  bool bounded() const {
    for (std::size_t j = 0; j < dim(); ++j) {
      if (!lo[j] || !hi[j]) return false;
    }
    return true;
  }
};

/// Oracle bundle behind a predicate region. E is taken to be the open set G°.
struct PredicateOracle {
  std::string name;
  std::size_t dim = 2;
  /// Point classification (Inside / Outside = interior of complement / Boundary).
  std::function<Membership(const Point&)> classify;
  /// Lower bound on Euclidean distance to the complement (> 0 inside) or, negated,
  /// to G (< 0 outside). Optional; without it cells are certified heuristically.
  std::function<double(const Point&)> signed_distance;
  std::optional<Box> bounding_box;
  std::optional<double> measure;
  /// Uniform-ish samples of ∂G.
  std::function<Point(std::mt19937_64&)> boundary_sampler;
  std::vector<Point> special_points;
};

/// A set E ⊂ R^m with |E \ E°| = 0 (declared, not verified), represented by
/// exact box geometry or by an interior oracle.
class Region {
 public:
  enum class Kind { ClosedBox, OpenBoxes, ClosedUnion, Predicate };

  static Region closed_box(Box b) {
    Region r(Kind::ClosedBox, b.dim());
    r.boxes_.push_back(ExtendedBox::from(b));
    r.finish();
    return r;
  }
  static Region open_box(const Box& b) { return open_boxes({ExtendedBox::from(b)}); }
  /// Union of open boxes; endpoints may be infinite (half-lines, orthants).
  static Region open_boxes(std::vector<ExtendedBox> boxes) {
    if (boxes.empty()) throw std::invalid_argument("Region: empty box list");
    Region r(Kind::OpenBoxes, boxes.front().dim());
    for (const auto& b : boxes) {
      if (b.dim() != r.dim_) throw DimensionMismatch("Region: mixed dimensions in box list");
      for (std::size_t j = 0; j < b.dim(); ++j) {
        if (b.lo[j] && b.hi[j] && !(*b.lo[j] < *b.hi[j])) {
          throw std::invalid_argument("Region: degenerate open box");
        }
      }
    }
    r.boxes_ = std::move(boxes);
    r.finish();
    return r;
  }
  /// Union of closed boxes; its interior may include shared faces.
  static Region closed_union(const std::vector<Box>& boxes) {
    if (boxes.empty()) throw std::invalid_argument("Region: empty box list");
    Region r(Kind::ClosedUnion, boxes.front().dim());
    for (const auto& b : boxes) {
      if (b.dim() != r.dim_) throw DimensionMismatch("Region: mixed dimensions in box list");
      r.boxes_.push_back(ExtendedBox::from(b));
    }
    r.finish();
    return r;
  }
  static Region predicate(PredicateOracle oracle) {
    if (!oracle.classify) throw std::invalid_argument("Region: predicate needs a classify oracle");
    Region r(Kind::Predicate, oracle.dim);
    r.oracle_ = std::make_shared<PredicateOracle>(std::move(oracle));
    r.finish();
    return r;
  }
  /// (lo, +inf) in one dimension.
  static Region half_line(const Dyadic& lo) {
    ExtendedBox e;
    e.lo.emplace_back(lo);
    e.hi.emplace_back(std::nullopt);
    return open_boxes({e});
  }

  Kind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  bool bounded() const { return bbox_.has_value(); }
  const std::optional<Box>& bounding_box() const { return bbox_; }
  const std::vector<ExtendedBox>& boxes() const { return boxes_; }
  const PredicateOracle* oracle() const { return oracle_.get(); }
  /// Cell certification falls back to corner sampling (no distance oracle).
  bool heuristic_certification() const {
    return kind_ == Kind::Predicate && !oracle_->signed_distance;
  }
  const std::string& description() const { return description_; }
  void set_description(std::string d) { description_ = std::move(d); }

  /// Exact |G°| when known.
  std::optional<double> interior_measure() const {
    switch (kind_) {
      case Kind::ClosedBox:
        return bbox_->measure().to_double();
      case Kind::OpenBoxes:
        if (boxes_.size() == 1 && bbox_) return bbox_->measure().to_double();
        return std::nullopt;
      case Kind::ClosedUnion:
        return std::nullopt;
      case Kind::Predicate:
        return oracle_->measure;
    }
    return std::nullopt;
  }

  /// Membership of t in G°, in the interior of the complement, or neither.
  Membership interior_contains(const Point& t) const {
    require(t);
    switch (kind_) {
      case Kind::ClosedBox:
      case Kind::OpenBoxes: {
        bool on_closure = false;
        for (const auto& b : boxes_) {
          const int s = point_vs_open_box(t, b);
          if (s > 0) return Membership::Inside;
          if (s == 0) on_closure = true;
        }
        return on_closure ? Membership::Boundary : Membership::Outside;
      }
      case Kind::ClosedUnion:
        return union_point_class(t);
      case Kind::Predicate: {
        const Membership m = oracle_->classify(t);
        return m;
      }
    }
    return Membership::Boundary;
  }

  /// Membership of t in E itself (closed box includes its faces; open kinds do not).
  bool contains(const Point& t) const {
    require(t);
    switch (kind_) {
      case Kind::ClosedBox:
        return point_vs_open_box(t, boxes_.front()) >= 0;
      case Kind::OpenBoxes:
        for (const auto& b : boxes_) {
          if (point_vs_open_box(t, b) > 0) return true;
        }
        return false;
      case Kind::ClosedUnion:
        for (const auto& b : boxes_) {
          if (point_vs_open_box(t, b) >= 0) return true;
        }
        return false;
      case Kind::Predicate:
        return oracle_->classify(t) == Membership::Inside;
    }
    return false;
  }

  /// Classifies the closed cell [lo, hi] against G°. `lo`/`hi` must be exact
  /// (every double is dyadic, so this is exact for box kinds).
  CellClass classify(const double* lo, const double* hi) const {
    switch (kind_) {
      case Kind::ClosedBox:
      case Kind::OpenBoxes: {
        bool touches = false;
        for (const auto& b : boxes_) {
          const CellClass c = cell_vs_open_box(lo, hi, b);
          if (c == CellClass::Inside) return CellClass::Inside;
          if (c == CellClass::Straddle) touches = true;
        }
        return touches ? CellClass::Straddle : CellClass::Outside;
      }
      case Kind::ClosedUnion:
        return union_cell_class(lo, hi);
      case Kind::Predicate:
        return predicate_cell_class(lo, hi);
    }
    return CellClass::Straddle;
  }

  CellClass classify(const Box& b) const {
    b.require_dim(dim_);
    if (exact_doubles_ && box_is_double_exact(b)) {
      const Point lo = b.lo_point();
      const Point hi = b.hi_point();
      return classify(lo.data(), hi.data());
    }
    return classify_exact(b);
  }

  /// Closed containment of a box in E (test boxes drawn from I_E).
  bool contains_box(const Box& b) const {
    b.require_dim(dim_);
    switch (kind_) {
      case Kind::ClosedBox:
        return bbox_->contains(b);
      case Kind::ClosedUnion: {
        if (classify(b) == CellClass::Inside) return true;
        // Every grid cell meeting b non-degenerately must lie in the union.
        return union_covers(b);
      }
      case Kind::OpenBoxes:
      case Kind::Predicate:
        return classify(b) == CellClass::Inside;
    }
    return false;
  }

  /// Breakpoints per axis for box kinds (cells not touching them classify
  /// uniformly); std::nullopt for predicate regions.
  std::optional<std::vector<std::vector<double>>> axis_breakpoints() const {
    if (kind_ == Kind::Predicate || !exact_doubles_) return std::nullopt;
    std::vector<std::vector<double>> out(dim_);
    for (const auto& b : boxes_) {
      for (std::size_t j = 0; j < dim_; ++j) {
        if (b.lo[j]) out[j].push_back(b.lo[j]->to_double());
        if (b.hi[j]) out[j].push_back(b.hi[j]->to_double());
      }
    }
    for (auto& v : out) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    return out;
  }

  /// A point of ∂G (for Z-tag samplers).
  Point sample_boundary(std::mt19937_64& rng) const {
    if (kind_ == Kind::Predicate) {
      if (!oracle_->boundary_sampler) throw OracleError("predicate region has no boundary sampler");
      return oracle_->boundary_sampler(rng);
    }
    std::uniform_int_distribution<std::size_t> pick_box(0, boxes_.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_axis(0, dim_ - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int attempt = 0; attempt < 256; ++attempt) {
      const ExtendedBox& b = boxes_[pick_box(rng)];
      const std::size_t axis = pick_axis(rng);
      const bool upper = unit(rng) < 0.5;
      const auto& face = upper ? b.hi[axis] : b.lo[axis];
      if (!face) continue;
      Point t(dim_);
      for (std::size_t j = 0; j < dim_; ++j) {
        if (j == axis) {
          t[j] = face->to_double();
          continue;
        }
        const double a = b.lo[j] ? b.lo[j]->to_double() : -std::ldexp(1.0, 4);
        const double c = b.hi[j] ? b.hi[j]->to_double() : a + std::ldexp(1.0, 5);
        t[j] = snap(a + (c - a) * unit(rng));
      }
      if (kind_ == Kind::ClosedUnion && interior_contains(t) == Membership::Inside) continue;
      if (kind_ == Kind::OpenBoxes && boxes_.size() > 1 &&
          interior_contains(t) == Membership::Inside) {
        continue;
      }
      return t;
    }
    throw OracleError("could not sample a boundary point");
  }

  /// Corners and other distinguished points of (G°)^c worth tagging first.
  std::vector<Point> special_points() const {
    if (kind_ == Kind::Predicate) return oracle_->special_points;
    std::vector<Point> out;
    for (const auto& b : boxes_) {
      const std::size_t corners = std::size_t{1} << dim_;
      for (std::size_t c = 0; c < corners; ++c) {
        Point t(dim_);
        bool finite = true;
        for (std::size_t j = 0; j < dim_; ++j) {
          const auto& e = ((c >> j) & 1U) ? b.hi[j] : b.lo[j];
          if (!e) {
            finite = false;
            break;
          }
          t[j] = e->to_double();
        }
        if (finite && interior_contains(t) != Membership::Inside) out.push_back(std::move(t));
      }
    }
    return out;
  }

 private:
  Region(Kind k, std::size_t m) : kind_(k), dim_(m) {
    if (m == 0) throw std::invalid_argument("Region: dimension must be positive");
  }

  static double snap(double x) { return std::ldexp(std::round(std::ldexp(x, 24)), -24); }

  void require(const Point& t) const {
    if (t.size() != dim_) throw DimensionMismatch("Region: point dimension mismatch");
  }

  void finish() {
    exact_doubles_ = true;
    for (const auto& b : boxes_) {
      for (std::size_t j = 0; j < dim_; ++j) {
        if (b.lo[j] && !b.lo[j]->exactly_representable()) exact_doubles_ = false;
        if (b.hi[j] && !b.hi[j]->exactly_representable()) exact_doubles_ = false;
      }
    }
    if (kind_ == Kind::Predicate) {
      bbox_ = oracle_->bounding_box;
    } else {
      bool all_bounded = true;
      for (const auto& b : boxes_) all_bounded = all_bounded && b.bounded();
      if (all_bounded) {
        std::vector<Dyadic> lo(dim_), hi(dim_);
        for (std::size_t j = 0; j < dim_; ++j) {
          lo[j] = *boxes_.front().lo[j];
          hi[j] = *boxes_.front().hi[j];
          for (const auto& b : boxes_) {
            lo[j] = min(lo[j], *b.lo[j]);
            hi[j] = max(hi[j], *b.hi[j]);
          }
        }
        bbox_ = Box(std::move(lo), std::move(hi));
      }
    }
    if (kind_ == Kind::ClosedUnion) {
      if (!exact_doubles_) throw std::invalid_argument("Region: union endpoints must be doubles");
      grid_.assign(dim_, {});
      for (const auto& b : boxes_) {
        for (std::size_t j = 0; j < dim_; ++j) {
          grid_[j].push_back(b.lo[j]->to_double());
          grid_[j].push_back(b.hi[j]->to_double());
        }
      }
      for (auto& g : grid_) {
        std::sort(g.begin(), g.end());
        g.erase(std::unique(g.begin(), g.end()), g.end());
      }
    }
  }

  static bool box_is_double_exact(const Box& b) {
    for (std::size_t j = 0; j < b.dim(); ++j) {
      if (!b.lo(j).exactly_representable() || !b.hi(j).exactly_representable()) return false;
    }
    return true;
  }

  // +1: strictly inside the open box; 0: on its boundary; -1: outside its closure.
  int point_vs_open_box(const Point& t, const ExtendedBox& b) const {
    int result = 1;
    for (std::size_t j = 0; j < dim_; ++j) {
      const int lo = b.lo[j] ? cmp(t[j], *b.lo[j]) : 1;
      const int hi = b.hi[j] ? -cmp(t[j], *b.hi[j]) : 1;
      if (lo < 0 || hi < 0) return -1;
      if (lo == 0 || hi == 0) result = 0;
    }
    return result;
  }

  int cmp(double x, const Dyadic& e) const {
    if (!std::isfinite(x)) throw OracleError("non-finite coordinate");
    if (exact_doubles_) {
      const double d = e.to_double();
      return (x > d) - (x < d);
    }
    const auto c = Dyadic::from_double(x) <=> e;
    return c < 0 ? -1 : (c > 0 ? 1 : 0);
  }

  CellClass cell_vs_open_box(const double* lo, const double* hi, const ExtendedBox& b) const {
    bool inside = true;
    for (std::size_t j = 0; j < dim_; ++j) {
      const double blo = b.lo[j] ? b.lo[j]->to_double() : -INFINITY;
      const double bhi = b.hi[j] ? b.hi[j]->to_double() : INFINITY;
      if (hi[j] <= blo || lo[j] >= bhi) return CellClass::Outside;
      if (!(lo[j] > blo && hi[j] < bhi)) inside = false;
    }
    return inside ? CellClass::Inside : CellClass::Straddle;
  }

  CellClass classify_exact(const Box& c) const {
    if (kind_ == Kind::Predicate) {
      const Point lo = c.lo_point();
      const Point hi = c.hi_point();
      return predicate_cell_class(lo.data(), hi.data());
    }
    if (kind_ == Kind::ClosedUnion) {
      throw std::logic_error("union regions require double-exact boxes");
    }
    bool touches = false;
    for (const auto& b : boxes_) {
      bool inside = true;
      bool outside = false;
      for (std::size_t j = 0; j < dim_ && !outside; ++j) {
        if ((b.lo[j] && c.hi(j) <= *b.lo[j]) || (b.hi[j] && c.lo(j) >= *b.hi[j])) outside = true;
        if ((b.lo[j] && !(c.lo(j) > *b.lo[j])) || (b.hi[j] && !(c.hi(j) < *b.hi[j]))) {
          inside = false;
        }
      }
      if (outside) continue;
      if (inside) return CellClass::Inside;
      touches = true;
    }
    return touches ? CellClass::Straddle : CellClass::Outside;
  }

  // Grid cell index ranges (closed contact) per axis; -1 / size() denote the
  // unbounded outer intervals.
  bool grid_cell_in_union(const std::vector<long>& idx) const {
    std::vector<double> lo(dim_), hi(dim_);
    for (std::size_t j = 0; j < dim_; ++j) {
      if (idx[j] < 0 || idx[j] + 1 >= static_cast<long>(grid_[j].size())) return false;
      lo[j] = grid_[j][idx[j]];
      hi[j] = grid_[j][idx[j] + 1];
    }
    for (const auto& b : boxes_) {
      bool in = true;
      for (std::size_t j = 0; j < dim_ && in; ++j) {
        in = b.lo[j]->to_double() <= lo[j] && hi[j] <= b.hi[j]->to_double();
      }
      if (in) return true;
    }
    return false;
  }

  template <class Fn>
  bool all_grid_cells(const std::vector<std::pair<long, long>>& ranges, Fn&& fn) const {
    std::vector<long> idx(dim_);
    for (std::size_t j = 0; j < dim_; ++j) idx[j] = ranges[j].first;
    while (true) {
      if (!fn(idx)) return false;
      std::size_t j = 0;
      while (j < dim_) {
        if (++idx[j] <= ranges[j].second) break;
        idx[j] = ranges[j].first;
        ++j;
      }
      if (j == dim_) return true;
    }
  }

  // Index i denotes the grid interval [g_i, g_{i+1}]; -1 and g.size()-1 are the outer rays.
  std::pair<long, long> touching_range(std::size_t j, double lo, double hi, bool closed) const {
    const auto& g = grid_[j];
    const long n = static_cast<long>(g.size());
    long first = -1;
    long last = n - 1;
    for (long i = -1; i < n; ++i) {
      const double a = i < 0 ? -INFINITY : g[i];
      const double b = i + 1 >= n ? INFINITY : g[i + 1];
      const bool meets = closed ? (a <= hi && b >= lo) : (a < hi && b > lo);
      if (meets) {
        first = i;
        break;
      }
    }
    for (long i = n - 1; i >= -1; --i) {
      const double a = i < 0 ? -INFINITY : g[i];
      const double b = i + 1 >= n ? INFINITY : g[i + 1];
      const bool meets = closed ? (a <= hi && b >= lo) : (a < hi && b > lo);
      if (meets) {
        last = i;
        break;
      }
    }
    return {first, last};
  }

  CellClass union_cell_class(const double* lo, const double* hi) const {
    bool any_overlap = false;
    for (const auto& b : boxes_) {
      bool overlap = true;
      for (std::size_t j = 0; j < dim_ && overlap; ++j) {
        overlap = hi[j] > b.lo[j]->to_double() && lo[j] < b.hi[j]->to_double();
      }
      any_overlap = any_overlap || overlap;
    }
    if (!any_overlap) return CellClass::Outside;
    std::vector<std::pair<long, long>> ranges(dim_);
    for (std::size_t j = 0; j < dim_; ++j) ranges[j] = touching_range(j, lo[j], hi[j], true);
    const bool inside =
        all_grid_cells(ranges, [&](const std::vector<long>& idx) { return grid_cell_in_union(idx); });
    return inside ? CellClass::Inside : CellClass::Straddle;
  }

  bool union_covers(const Box& b) const {
    const Point lo = b.lo_point();
    const Point hi = b.hi_point();
    std::vector<std::pair<long, long>> ranges(dim_);
    for (std::size_t j = 0; j < dim_; ++j) ranges[j] = touching_range(j, lo[j], hi[j], false);
    return all_grid_cells(ranges,
                          [&](const std::vector<long>& idx) { return grid_cell_in_union(idx); });
  }

  Membership union_point_class(const Point& t) const {
    bool in_some = false;
    for (const auto& b : boxes_) in_some = in_some || point_vs_open_box(t, b) >= 0;
    if (!in_some) return Membership::Outside;
    std::vector<std::pair<long, long>> ranges(dim_);
    for (std::size_t j = 0; j < dim_; ++j) ranges[j] = touching_range(j, t[j], t[j], true);
    const bool interior =
        all_grid_cells(ranges, [&](const std::vector<long>& idx) { return grid_cell_in_union(idx); });
    return interior ? Membership::Inside : Membership::Boundary;
  }

  CellClass predicate_cell_class(const double* lo, const double* hi) const {
    Point c(dim_);
    double r = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) {
      c[j] = 0.5 * (lo[j] + hi[j]);
      r = std::max(r, 0.5 * (hi[j] - lo[j]));
    }
    if (oracle_->signed_distance) {
      const double sd = oracle_->signed_distance(c);
      if (std::isnan(sd)) throw OracleError(oracle_->name + ": distance oracle returned NaN");
      // The max-norm ball of radius r sits inside the Euclidean ball of radius r*sqrt(m).
      const double reach = r * std::sqrt(static_cast<double>(dim_)) * (1.0 + 1e-9);
      if (sd > reach) return CellClass::Inside;
      if (sd < -reach) return CellClass::Outside;
      return CellClass::Straddle;
    }
    // Heuristic: corners, center, and face centers all on one side.
    bool all_in = true;
    bool all_out = true;
    const std::size_t corners = std::size_t{1} << dim_;
    auto visit = [&](const Point& t) {
      const Membership m = oracle_->classify(t);
      all_in = all_in && m == Membership::Inside;
      all_out = all_out && m == Membership::Outside;
    };
    visit(c);
    for (std::size_t k = 0; k < corners; ++k) {
      Point t(dim_);
      for (std::size_t j = 0; j < dim_; ++j) t[j] = ((k >> j) & 1U) ? hi[j] : lo[j];
      visit(t);
    }
    if (all_in) return CellClass::Inside;
    if (all_out) return CellClass::Outside;
    return CellClass::Straddle;
  }

  Kind kind_;
  std::size_t dim_;
  std::vector<ExtendedBox> boxes_;
  std::shared_ptr<const PredicateOracle> oracle_;
  std::optional<Box> bbox_;
  std::vector<std::vector<double>> grid_;
  bool exact_doubles_ = true;
  std::string description_;
};

/// [-2^n, 2^n]^m, clipped to the bounding box of a bounded region.
inline Box exhaustion_box(const Region& r, int n) {
  if (n < 0) throw std::invalid_argument("exhaustion_box: n must be non-negative");
  const Box cube = Box::cube(r.dim(), -Dyadic::pow2(n), Dyadic::pow2(n));
  if (!r.bounded()) return cube;
  const auto clipped = intersect(cube, *r.bounding_box());
  if (clipped.kind == Overlap::NonDegenerate) return *clipped.box;
  return *r.bounding_box();
}

namespace builtin_regions {

inline Region disc2d() {
  PredicateOracle o;
  o.name = "disc2d";
  o.dim = 2;
  o.classify = [](const Point& t) {
    const double q = t[0] * t[0] + t[1] * t[1];
    if (std::isnan(q)) throw OracleError("disc2d: NaN point");
    return q < 1.0 ? Membership::Inside : (q > 1.0 ? Membership::Outside : Membership::Boundary);
  };
  o.signed_distance = [](const Point& t) { return 1.0 - std::hypot(t[0], t[1]); };
  o.bounding_box = Box::cube(2, Dyadic(-1), Dyadic(1));
  o.measure = std::numbers::pi;
  o.boundary_sampler = [](std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
    const double a = u(rng);
    return Point{std::cos(a), std::sin(a)};
  };
  o.special_points = {{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}};
  Region r = Region::predicate(std::move(o));
  r.set_description("predicate:disc2d");
  return r;
}

inline Region annulus2d() {
  PredicateOracle o;
  o.name = "annulus2d";
  o.dim = 2;
  o.classify = [](const Point& t) {
    const double q = t[0] * t[0] + t[1] * t[1];
    if (std::isnan(q)) throw OracleError("annulus2d: NaN point");
    if (q > 0.25 && q < 1.0) return Membership::Inside;
    if (q < 0.25 || q > 1.0) return Membership::Outside;
    return Membership::Boundary;
  };
  o.signed_distance = [](const Point& t) {
    const double r = std::hypot(t[0], t[1]);
    return std::min(r - 0.5, 1.0 - r);
  };
  o.bounding_box = Box::cube(2, Dyadic(-1), Dyadic(1));
  o.measure = 0.75 * std::numbers::pi;
  o.boundary_sampler = [](std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
    const double a = u(rng);
    const double rad = std::bernoulli_distribution(0.5)(rng) ? 1.0 : 0.5;
    return Point{rad * std::cos(a), rad * std::sin(a)};
  };
  o.special_points = {{1.0, 0.0}, {0.5, 0.0}, {0.0, 0.0}};
  Region r = Region::predicate(std::move(o));
  r.set_description("predicate:annulus2d");
  return r;
}

/// (0,1)^2 with the closed diagonal {x = y} removed.
inline Region square_minus_diagonal() {
  PredicateOracle o;
  o.name = "square-minus-diagonal";
  o.dim = 2;
  o.classify = [](const Point& t) {
    const double x = t[0];
    const double y = t[1];
    if (std::isnan(x) || std::isnan(y)) throw OracleError("square-minus-diagonal: NaN point");
    if (x < 0.0 || x > 1.0 || y < 0.0 || y > 1.0) return Membership::Outside;
    if (x == 0.0 || x == 1.0 || y == 0.0 || y == 1.0 || x == y) return Membership::Boundary;
    return Membership::Inside;
  };
  o.signed_distance = [](const Point& t) {
    const double x = t[0];
    const double y = t[1];
    const double inside_square = std::min({x, y, 1.0 - x, 1.0 - y});
    if (inside_square < 0.0) {
      const double dx = std::max({-x, x - 1.0, 0.0});
      const double dy = std::max({-y, y - 1.0, 0.0});
      return -std::hypot(dx, dy);
    }
    // Slight under-estimate keeps the bound conservative against rounding.
    return std::min(inside_square, std::abs(x - y) / std::numbers::sqrt2 * (1.0 - 1e-12));
  };
  o.bounding_box = Box::cube(2, Dyadic(0), Dyadic(1));
  o.measure = 1.0;
  o.boundary_sampler = [](std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> side(0, 4);
    const double s = u(rng);
    switch (side(rng)) {
      case 0: return Point{s, 0.0};
      case 1: return Point{s, 1.0};
      case 2: return Point{0.0, s};
      case 3: return Point{1.0, s};
      default: return Point{s, s};
    }
  };
  o.special_points = {{0.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}, {1.0, 0.0}, {0.5, 0.5}};
  Region r = Region::predicate(std::move(o));
  r.set_description("predicate:square-minus-diagonal");
  return r;
}

/// (0,1)^2 minus the closed segment {1/2} x [0,1]: two open boxes, exact geometry.
inline Region square_minus_segment() {
  Region r = Region::open_boxes({ExtendedBox::from(parse_box("0..0.5,0..1")),
                                 ExtendedBox::from(parse_box("0.5..1,0..1"))});
  r.set_description("open-union:0..0.5,0..1;0.5..1,0..1");
  return r;
}

}  // namespace builtin_regions

/// Region grammar: "closed:BOX", "open:BOX" (endpoints may be "inf"/"-inf"),
/// "union:BOX;BOX;...", "open-union:BOX;BOX;...", "halfline:A..inf",
/// "predicate:NAME" with NAME in {disc2d, annulus2d, square-minus-diagonal,
/// square-minus-segment}.
inline Region parse_region(std::string_view spec) {
  const std::string s(spec);
  const auto colon = s.find(':');
  if (colon == std::string::npos) {
    throw std::invalid_argument("region '" + s + "': expected KIND:ARGS");
  }
  const std::string kind = s.substr(0, colon);
  const std::string args = s.substr(colon + 1);
  auto split = [](const std::string& text, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
      const auto p = text.find(sep, start);
      out.push_back(text.substr(start, p == std::string::npos ? std::string::npos : p - start));
      if (p == std::string::npos) break;
      start = p + 1;
    }
    return out;
  };
  auto parse_extended = [&](const std::string& text) {
    ExtendedBox e;
    for (const auto& axis : split(text, ',')) {
      const auto dots = axis.find("..");
      if (dots == std::string::npos) {
        throw std::invalid_argument("region '" + s + "': axis '" + axis + "' is not lo..hi");
      }
      const std::string a = axis.substr(0, dots);
      const std::string b = axis.substr(dots + 2);
      if (a == "inf" || a == "+inf") throw std::invalid_argument("region: lower endpoint +inf");
      if (b == "-inf") throw std::invalid_argument("region: upper endpoint -inf");
      e.lo.push_back(a == "-inf" ? std::nullopt : std::optional<Dyadic>(Dyadic::parse(a)));
      e.hi.push_back(b == "inf" || b == "+inf" ? std::nullopt
                                               : std::optional<Dyadic>(Dyadic::parse(b)));
    }
    return e;
  };
  Region r = [&]() -> Region {
    if (kind == "closed") return Region::closed_box(parse_box(args));
    if (kind == "open" || kind == "halfline") {
      ExtendedBox e = parse_extended(args);
      if (kind == "halfline" && e.dim() != 1) {
        throw std::invalid_argument("region: halfline is one-dimensional");
      }
      return Region::open_boxes({std::move(e)});
    }
    if (kind == "union") {
      std::vector<Box> boxes;
      for (const auto& b : split(args, ';')) boxes.push_back(parse_box(b));
      return Region::closed_union(boxes);
    }
    if (kind == "open-union") {
      std::vector<ExtendedBox> boxes;
      for (const auto& b : split(args, ';')) boxes.push_back(parse_extended(b));
      return Region::open_boxes(std::move(boxes));
    }
    if (kind == "predicate") {
      if (args == "disc2d") return builtin_regions::disc2d();
      if (args == "annulus2d") return builtin_regions::annulus2d();
      if (args == "square-minus-diagonal") return builtin_regions::square_minus_diagonal();
      if (args == "square-minus-segment") return builtin_regions::square_minus_segment();
      throw std::invalid_argument("region: unknown predicate '" + args +
                                  "' (disc2d, annulus2d, square-minus-diagonal, "
                                  "square-minus-segment)");
    }
    throw std::invalid_argument("region '" + s +
                                "': kind must be closed, open, union, open-union, halfline or "
                                "predicate");
  }();
  r.set_description(s);
  return r;
}

}  // namespace gauge_quad
