#pragma once

#include "gauge_quad/gauge.hpp"
#include "gauge_quad/integrand.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gauge_quad {

/// McShane (tag anywhere in the ambient set) or Henstock-Kurzweil (tag in cell).
enum class Kind { M, HK };

inline const char* to_string(Kind k) { return k == Kind::M ? "mcshane" : "hk"; }

struct TaggedCell {
  Point tag;
  Box box;
};

struct TaggedPartition {
  Kind kind = Kind::HK;
  std::vector<TaggedCell> cells;
  /// Set when the cells are meant to cover this box exactly.
  std::optional<Box> of;

  std::size_t size() const { return cells.size(); }
  bool empty() const { return cells.empty(); }
  Dyadic total_measure() const {
    Dyadic s;
    for (const auto& c : cells) s += c.box.measure();
    return s;
  }
};

/// Cousin bisection reached its depth cap with a cell that is still not fine.
class DepthExceeded : public std::runtime_error {
 public:
  DepthExceeded(const std::string& cell, const std::string& tag, double delta)
      : std::runtime_error("depth cap reached: cell " + cell + " not fine (tag " + tag +
                           ", delta " + std::to_string(delta) + ")"),
        cell_(cell),
        delta_(delta) {}
  const std::string& cell() const { return cell_; }
  double delta() const { return delta_; }

 private:
  std::string cell_;
  double delta_;
};

namespace detail {

inline bool cell_fine_at(const Point& tag, const Point& lo, const Point& hi, double d) {
  return fine_radius(tag, lo, hi) < d;
}

inline void cousin_recurse(const Box& cell, const Gauge& delta, int depth, int cap,
                           std::vector<TaggedCell>& out) {
  const Point lo = cell.lo_point();
  const Point hi = cell.hi_point();
  const Point c = cell.center();
  const double dc = delta(c);
  if (cell_fine_at(c, lo, hi, dc)) {
    out.push_back({c, cell});
    return;
  }
  // Corner tags (lexicographic order) rescue cells at points where δ collapses.
  const std::size_t m = cell.dim();
  for (std::size_t k = 0; k < (std::size_t{1} << m); ++k) {
    Point t(m);
    for (std::size_t j = 0; j < m; ++j) t[j] = ((k >> (m - 1 - j)) & 1U) ? hi[j] : lo[j];
    if (cell_fine_at(t, lo, hi, delta(t))) {
      out.push_back({std::move(t), cell});
      return;
    }
  }
  if (depth >= cap) throw DepthExceeded(cell.to_string(), point_to_string(c), dc);
  for (const Box& child : cell.bisect()) cousin_recurse(child, delta, depth + 1, cap, out);
}

}  // namespace detail

/// δ-fine partition of J by recursive bisection along every axis. A cell is
/// accepted with its center as tag when fine there, else with the first corner
/// at which it is fine; both choices are valid M and HK tags.
inline TaggedPartition cousin_partition(const Box& J, const Gauge& delta, Kind kind,
                                        int depth_cap = 40) {
  if (depth_cap < 1) throw std::invalid_argument("cousin_partition: depth_cap must be >= 1");
  TaggedPartition p;
  p.kind = kind;
  p.of = J;
  detail::cousin_recurse(J, delta, 0, depth_cap, p.cells);
  return p;
}

/// Source of tag candidates; std::nullopt means the source is exhausted/empty.
using PointSampler = std::function<std::optional<Point>(std::mt19937_64&)>;

inline PointSampler finite_sampler(std::vector<Point> pts) {
  return [pts = std::move(pts)](std::mt19937_64& rng) -> std::optional<Point> {
    if (pts.empty()) return std::nullopt;
    std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
    return pts[pick(rng)];
  };
}

namespace detail {

// Snap inward to a 2^-40 grid so endpoints are exact short dyadics.
inline double snap_up(double x) { return std::ldexp(std::ceil(std::ldexp(x, 40)), -40); }
inline double snap_down(double x) { return std::ldexp(std::floor(std::ldexp(x, 40)), -40); }

// Shrinks [lo, hi] to avoid the interior of [plo, phi] while keeping the tag inside
// (HK) or merely keeping positive measure (M). Returns false when impossible.
inline bool shrink_away(Point& lo, Point& hi, const Point& plo, const Point& phi, const Point& t,
                        Kind kind) {
  const std::size_t m = lo.size();
  bool overlap = true;
  for (std::size_t j = 0; j < m && overlap; ++j) overlap = lo[j] < phi[j] && plo[j] < hi[j];
  if (!overlap) return true;
  double best = -1.0;
  std::size_t best_axis = 0;
  bool best_upper = false;
  auto volume_with = [&](std::size_t axis, double a, double b) {
    double v = 1.0;
    for (std::size_t j = 0; j < m; ++j) v *= j == axis ? (b - a) : (hi[j] - lo[j]);
    return v;
  };
  for (std::size_t j = 0; j < m; ++j) {
    // Cut the top at plo[j].
    if (plo[j] > lo[j] && (kind == Kind::M || t[j] <= plo[j])) {
      const double v = volume_with(j, lo[j], plo[j]);
      if (v > best) {
        best = v;
        best_axis = j;
        best_upper = true;
      }
    }
    // Cut the bottom at phi[j].
    if (phi[j] < hi[j] && (kind == Kind::M || t[j] >= phi[j])) {
      const double v = volume_with(j, phi[j], hi[j]);
      if (v > best) {
        best = v;
        best_axis = j;
        best_upper = false;
      }
    }
  }
  if (best <= 0.0) return false;
  if (best_upper) {
    hi[best_axis] = plo[best_axis];
  } else {
    lo[best_axis] = phi[best_axis];
  }
  return true;
}

}  // namespace detail

/// δ-fine Z-tagged partition in J: boxes are placed greedily around sampled tags,
/// each inside B(t, δ(t)) ∩ J, and shrunk to avoid earlier boxes.
inline TaggedPartition sample_Z_tagged_partition(const PointSampler& z, const Gauge& delta,
                                                 const Box& J, Kind kind, std::size_t max_cells,
                                                 std::uint64_t seed) {
  TaggedPartition p;
  p.kind = kind;
  if (!z) return p;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t m = J.dim();
  const Point Jlo = J.lo_point();
  const Point Jhi = J.hi_point();
  std::vector<std::pair<Point, Point>> placed;
  const std::size_t attempts = 8 * max_cells + 8;
  for (std::size_t a = 0; a < attempts && p.cells.size() < max_cells; ++a) {
    const auto t = z(rng);
    if (!t) break;
    if (t->size() != m) throw DimensionMismatch("Z sampler: dimension mismatch");
    bool in_j = true;
    for (std::size_t j = 0; j < m; ++j) in_j = in_j && (*t)[j] >= Jlo[j] && (*t)[j] <= Jhi[j];
    if (!in_j) continue;
    const double d = delta(*t);
    const double rho = d * (1.0 - std::ldexp(1.0, -20));
    Point lo(m), hi(m);
    bool ok = true;
    for (std::size_t j = 0; j < m && ok; ++j) {
      double l = 0.0;
      double h = 0.0;
      if (kind == Kind::HK) {
        l = (*t)[j] - rho * unit(rng);
        h = (*t)[j] + rho * unit(rng);
      } else {
        // Any sub-interval of (t - ρ, t + ρ); the tag may fall outside it.
        const double u1 = unit(rng);
        const double u2 = unit(rng);
        l = (*t)[j] - rho + 2.0 * rho * std::min(u1, u2);
        h = (*t)[j] - rho + 2.0 * rho * std::max(u1, u2);
      }
      lo[j] = detail::snap_up(std::max(l, Jlo[j]));
      hi[j] = detail::snap_down(std::min(h, Jhi[j]));
      if (kind == Kind::HK) {
        // Keep the tag itself representable inside the box.
        lo[j] = std::min(lo[j], (*t)[j]);
        hi[j] = std::max(hi[j], (*t)[j]);
        if (lo[j] < Jlo[j] || hi[j] > Jhi[j] || (*t)[j] - lo[j] >= d || hi[j] - (*t)[j] >= d) {
          ok = false;
        }
      }
      ok = ok && lo[j] < hi[j];
    }
    if (!ok) continue;
    for (const auto& [plo, phi] : placed) {
      if (!detail::shrink_away(lo, hi, plo, phi, *t, kind)) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    Box b = [&] {
      std::vector<Dyadic> l, h;
      for (std::size_t j = 0; j < m; ++j) {
        l.push_back(Dyadic::from_double(lo[j]));
        h.push_back(Dyadic::from_double(hi[j]));
      }
      return Box(std::move(l), std::move(h));
    }();
    if (!is_fine(*t, b, d)) continue;
    placed.emplace_back(lo, hi);
    p.cells.push_back({*t, std::move(b)});
  }
  return p;
}

/// Σ f(t)|I| over the cells.
inline VectorValue riemann_sum(const Integrand& f, const TaggedPartition& pi) {
  VectorValue s(f.dim_out());
  std::vector<double> v(f.dim_out());
  for (const auto& c : pi.cells) {
    f.eval(c.tag.data(), v.data());
    const double w = c.box.measure().to_double();
    for (std::size_t i = 0; i < v.size(); ++i) s[i] += v[i] * w;
  }
  return s;
}

struct PartitionCheck {
  bool non_overlapping = true;
  bool fine = true;
  bool tags_ok = true;
  bool exact_cover = true;
  std::string message;
  bool ok() const { return non_overlapping && fine && tags_ok && exact_cover; }
};

/// Checks exact pairwise non-overlap, δ-fineness, the tagging discipline and, when
/// `of` is given, exact cover (cells inside `of` with Σ|I| = |of|).
inline PartitionCheck validate_partition(const TaggedPartition& p, const Gauge& delta,
                                         const std::optional<Box>& of = std::nullopt) {
  PartitionCheck r;
  auto note = [&](const std::string& s) {
    if (r.message.empty()) r.message = s;
  };
  std::vector<std::size_t> order(p.cells.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return p.cells[a].box.lo(0) < p.cells[b].box.lo(0);
  });
  for (std::size_t x = 0; x < order.size(); ++x) {
    const Box& a = p.cells[order[x]].box;
    for (std::size_t y = x + 1; y < order.size(); ++y) {
      const Box& b = p.cells[order[y]].box;
      if (!(b.lo(0) < a.hi(0))) break;
      if (!non_overlapping(a, b)) {
        r.non_overlapping = false;
        note("cells " + a.to_string() + " and " + b.to_string() + " overlap");
      }
    }
  }
  for (const auto& c : p.cells) {
    if (!is_fine(c.tag, c.box, delta(c.tag))) {
      r.fine = false;
      note("cell " + c.box.to_string() + " not fine at its tag");
    }
    if (p.kind == Kind::HK && !c.box.contains(c.tag)) {
      r.tags_ok = false;
      note("HK tag outside cell " + c.box.to_string());
    }
    if (of && !of->contains(c.box)) {
      r.exact_cover = false;
      note("cell " + c.box.to_string() + " leaves " + of->to_string());
    }
    if (of && p.kind == Kind::M && !of->contains(c.tag)) {
      r.tags_ok = false;
      note("M tag outside the ambient box");
    }
  }
  if (of && p.total_measure() != of->measure()) {
    r.exact_cover = false;
    note("total measure " + p.total_measure().to_string() + " != " + of->measure().to_string());
  }
  return r;
}

/// CSV rows: tag..., lo..., hi..., measure, delta_at_tag.
inline void write_partition_csv(std::ostream& os, const TaggedPartition& p, const Gauge& delta) {
  if (p.cells.empty()) {
    os << "tag1,lo1,hi1,measure,delta_at_tag\n";
    return;
  }
  const std::size_t m = p.cells.front().box.dim();
  for (std::size_t j = 0; j < m; ++j) os << (j ? "," : "") << "tag" << j + 1;
  for (std::size_t j = 0; j < m; ++j) os << ",lo" << j + 1;
  for (std::size_t j = 0; j < m; ++j) os << ",hi" << j + 1;
  os << ",measure,delta_at_tag\n";
  const auto prec = os.precision(17);
  for (const auto& c : p.cells) {
    for (std::size_t j = 0; j < m; ++j) os << (j ? "," : "") << c.tag[j];
    for (std::size_t j = 0; j < m; ++j) os << ',' << c.box.lo(j).to_string();
    for (std::size_t j = 0; j < m; ++j) os << ',' << c.box.hi(j).to_string();
    os << ',' << c.box.measure().to_string() << ',' << delta(c.tag) << '\n';
  }
  os.precision(prec);
}

}  // namespace gauge_quad
