#pragma once

#include "gauge_quad/division.hpp"
#include "gauge_quad/integrator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace gauge_quad {

enum class Verdict { Pass, Fail, Inconclusive };
enum class Trend { Vanishing, NonVanishing, Inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "PASS";
    case Verdict::Fail: return "FAIL";
    case Verdict::Inconclusive: return "INCONCLUSIVE";
  }
  return "?";
}
inline const char* to_string(Trend t) {
  switch (t) {
    case Trend::Vanishing: return "VANISHING";
    case Trend::NonVanishing: return "NON-VANISHING";
    case Trend::Inconclusive: return "INCONCLUSIVE";
  }
  return "?";
}

/// Max-norm lower bound on the distance from t to ∂G (box kinds: exact faces;
/// predicates: scaled signed distance). Empty when no bound is available.
inline Integrand::Distance boundary_distance(const Region& R) {
  const std::size_t m = R.dim();
  if (R.kind() == Region::Kind::Predicate) {
    const PredicateOracle* o = R.oracle();
    if (!o->signed_distance) return nullptr;
    const double s = 1.0 / std::sqrt(static_cast<double>(m));
    return [sd = o->signed_distance, s, m](const double* t) {
      return std::abs(sd(Point(t, t + m))) * s;
    };
  }
  struct Face {
    std::size_t axis;
    double at;
    std::vector<double> lo, hi;
  };
  auto faces = std::make_shared<std::vector<Face>>();
  const double inf = std::numeric_limits<double>::infinity();
  for (const ExtendedBox& b : R.boxes()) {
    std::vector<double> lo(m), hi(m);
    for (std::size_t j = 0; j < m; ++j) {
      lo[j] = b.lo[j] ? b.lo[j]->to_double() : -inf;
      hi[j] = b.hi[j] ? b.hi[j]->to_double() : inf;
    }
    for (std::size_t j = 0; j < m; ++j) {
      if (b.lo[j]) faces->push_back({j, lo[j], lo, hi});
      if (b.hi[j]) faces->push_back({j, hi[j], lo, hi});
    }
  }
  return [faces, m](const double* t) {
    double best = std::numeric_limits<double>::infinity();
    for (const Face& f : *faces) {
      double d = std::abs(t[f.axis] - f.at);
      for (std::size_t i = 0; i < m && d < best; ++i) {
        if (i == f.axis) continue;
        d = std::max({d, f.lo[i] - t[i], t[i] - f.hi[i]});
      }
      best = std::min(best, d);
    }
    return best;
  };
}

/// h = f on G, 0 off G. Membership is decided by the region's closed-membership
/// oracle; oracle failures surface as EvaluationError.
inline Integrand extension_h(const Integrand& f, const Region& R) {
  if (f.dim_in() != R.dim()) throw DimensionMismatch("extension_h: dimension mismatch");
  const std::size_t m = f.dim_in();
  const std::size_t d = f.dim_out();
  Integrand h(f.name() + "*1_G", m, d, [f, R, m, d](const double* t, double* out) {
    bool in = false;
    try {
      in = R.contains(Point(t, t + m));
    } catch (const OracleError& e) {
      throw EvaluationError(std::string("membership unknown: ") + e.what(), Point(t, t + m));
    }
    if (in) {
      f.eval(t, out);
    } else {
      std::fill(out, out + d, 0.0);
    }
  });
  for (const Singularity& s : f.singularities()) h.with_singularity(s);
  if (f.sup_norm()) h.with_sup_norm(*f.sup_norm());
  // Faces of box kinds become breakpoint planes; other boundaries an interface.
  Integrand::Distance edge;
  if (const auto planes = R.axis_breakpoints()) {
    Integrand::Breakpoints all = *planes;
    if (!f.breakpoints().empty()) {
      for (std::size_t j = 0; j < m; ++j) all[j].insert(all[j].end(), f.breakpoints()[j].begin(), f.breakpoints()[j].end());
    }
    h.with_breakpoints(std::move(all));
  } else {
    edge = boundary_distance(R);
    if (!f.breakpoints().empty()) h.with_breakpoints(f.breakpoints());
  }
  if (f.interface_distance() && edge) {
    h.with_interface([a = f.interface_distance(), b = edge](const double* t) {
      return std::min(a(t), b(t));
    });
  } else if (edge) {
    h.with_interface(edge);
  } else if (f.interface_distance()) {
    h.with_interface(f.interface_distance());
  }
  return h;
}

/// Bounding-volume hierarchy over a division prefix; answers "which pieces meet
/// this box with positive measure".
class PieceIndex {
 public:
  PieceIndex(const std::vector<Piece>& pieces, std::size_t count)
      : pieces_(&pieces), m_(pieces.empty() ? 0 : pieces.front().dim()) {
    count = std::min(count, pieces.size());
    order_.resize(count);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    if (count > 0) build(0, count);
  }

  std::size_t size() const { return order_.size(); }

  /// Indices k (ascending) with |[lo,hi] ∩ I_k| > 0.
  std::vector<std::size_t> query(const double* lo, const double* hi) const {
    std::vector<std::size_t> out;
    if (nodes_.empty()) return out;
    std::vector<std::size_t> stack{0};
    while (!stack.empty()) {
      const Node& n = nodes_[stack.back()];
      stack.pop_back();
      if (!meets(&bounds_[n.bound], &bounds_[n.bound + m_], lo, hi)) continue;
      if (n.left < 0) {
        for (std::size_t i = n.begin; i < n.end; ++i) {
          const Piece& p = (*pieces_)[order_[i]];
          if (meets(p.lo.data(), p.hi.data(), lo, hi)) out.push_back(order_[i]);
        }
      } else {
        stack.push_back(static_cast<std::size_t>(n.left));
        stack.push_back(static_cast<std::size_t>(n.right));
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  struct Node {
    std::size_t begin = 0, end = 0, bound = 0;
    long left = -1, right = -1;
  };

  bool meets(const double* alo, const double* ahi, const double* blo, const double* bhi) const {
    for (std::size_t j = 0; j < m_; ++j) {
      if (!(std::max(alo[j], blo[j]) < std::min(ahi[j], bhi[j]))) return false;
    }
    return true;
  }

  std::size_t build(std::size_t begin, std::size_t end) {
    const std::size_t id = nodes_.size();
    nodes_.push_back(Node{begin, end, bounds_.size(), -1, -1});
    std::vector<double> lo(m_, std::numeric_limits<double>::infinity());
    std::vector<double> hi(m_, -std::numeric_limits<double>::infinity());
    for (std::size_t i = begin; i < end; ++i) {
      const Piece& p = (*pieces_)[order_[i]];
      for (std::size_t j = 0; j < m_; ++j) {
        lo[j] = std::min(lo[j], p.lo[j]);
        hi[j] = std::max(hi[j], p.hi[j]);
      }
    }
    bounds_.insert(bounds_.end(), lo.begin(), lo.end());
    bounds_.insert(bounds_.end(), hi.begin(), hi.end());
    if (end - begin <= 8) return id;
    std::size_t axis = 0;
    for (std::size_t j = 1; j < m_; ++j) {
      if (hi[j] - lo[j] > hi[axis] - lo[axis]) axis = j;
    }
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + static_cast<long>(begin), order_.begin() + static_cast<long>(mid),
                     order_.begin() + static_cast<long>(end), [&](std::size_t a, std::size_t b) {
                       const Piece& pa = (*pieces_)[a];
                       const Piece& pb = (*pieces_)[b];
                       const double ca = pa.lo[axis] + pa.hi[axis];
                       const double cb = pb.lo[axis] + pb.hi[axis];
                       return ca != cb ? ca < cb : a < b;
                     });
    const std::size_t l = build(begin, mid);
    const std::size_t r = build(mid, end);
    nodes_[id].left = static_cast<long>(l);
    nodes_[id].right = static_cast<long>(r);
    return id;
  }

  const std::vector<Piece>* pieces_;
  std::size_t m_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
  std::vector<double> bounds_;
};

namespace detail {

struct Term {
  std::size_t k;
  VectorValue value;
  double error;
};

// F(I ∩ I_k) for every piece meeting [lo, hi], in increasing k.
inline std::vector<Term> series_terms(const AdditiveIntervalFunction& F, const std::vector<Piece>& pieces,
                                      const PieceIndex& index, const double* lo, const double* hi) {
  const std::size_t m = F.dim_in();
  std::vector<Term> out;
  std::vector<double> a(m), b(m);
  for (const std::size_t k : index.query(lo, hi)) {
    const Piece& p = pieces[k];
    for (std::size_t j = 0; j < m; ++j) {
      a[j] = std::max(lo[j], p.lo[j]);
      b[j] = std::min(hi[j], p.hi[j]);
    }
    IntervalValue v = F(a.data(), b.data());
    out.push_back({k, std::move(v.value), v.error});
  }
  return out;
}

// Neumaier-compensated vector sum.
class VectorSum {
 public:
  explicit VectorSum(std::size_t d) : s_(d, 0.0), c_(d, 0.0) {}
  void add(const VectorValue& v) {
    for (std::size_t i = 0; i < s_.size(); ++i) {
      const double t = s_[i] + v[i];
      c_[i] += std::abs(s_[i]) >= std::abs(v[i]) ? (s_[i] - t) + v[i] : (v[i] - t) + s_[i];
      s_[i] = t;
    }
  }
  VectorValue value() const {
    VectorValue r(s_.size());
    for (std::size_t i = 0; i < s_.size(); ++i) r[i] = s_[i] + c_[i];
    return r;
  }

 private:
  std::vector<double> s_, c_;
};

inline VectorValue series_value(const std::vector<Term>& terms, std::size_t d) {
  VectorSum s(d);
  for (const Term& t : terms) s.add(t.value);
  return s.value();
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads; rethrows the first failure.
template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

inline std::uint64_t mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t x = seed ^ (a * 0x9E3779B97F4A7C15ULL) ^ (b * 0xC2B2AE3D27D4EB4FULL);
  x ^= x >> 31;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 29;
  return x;
}

inline Box box_from(const double* lo, const double* hi, std::size_t m) {
  std::vector<Dyadic> l, h;
  for (std::size_t j = 0; j < m; ++j) {
    l.push_back(Dyadic::from_double(lo[j]));
    h.push_back(Dyadic::from_double(hi[j]));
  }
  return Box(std::move(l), std::move(h));
}

/// Midpoint-grid estimate of ∫_I ‖f‖ (k points per axis). Signed sums of
/// oscillating f can vanish by accident; this one cannot.
inline double abs_pilot(const Integrand& f, const double* lo, const double* hi, std::size_t m) {
  const std::size_t k = m <= 2 ? 4 : 2;
  std::size_t total = 1;
  for (std::size_t j = 0; j < m; ++j) total *= k;
  std::vector<double> t(m), v(f.dim_out());
  double acc = 0.0, vol = 1.0;
  for (std::size_t j = 0; j < m; ++j) vol *= hi[j] - lo[j];
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t r = idx;
    for (std::size_t j = 0; j < m; ++j) {
      t[j] = lo[j] + (hi[j] - lo[j]) * (static_cast<double>(r % k) + 0.5) / static_cast<double>(k);
      r /= k;
    }
    f.eval(t.data(), v.data());
    double n = 0.0;
    for (const double x : v) n = std::max(n, std::abs(x));
    acc += n;
  }
  return acc / static_cast<double>(total) * vol;
}

}  // namespace detail

/// Σ_{k<prefix} F(I∩I_k) with convergence diagnostics.
struct SeriesReport {
  std::size_t prefix = 0;
  std::size_t terms = 0;
  VectorValue value;
  /// Cumulative sums at the end of each generation that contributed terms.
  std::vector<std::pair<int, VectorValue>> partial_sums;
  double abs_sum = 0.0;
  /// Σ‖term‖ over the last quarter of the terms.
  double abs_tail = 0.0;
  /// ‖contribution of the division's final generation‖ (truncation proxy).
  double last_generation = 0.0;
  /// max ‖permuted sum − sum‖ over the rearrangements.
  double spread = 0.0;
  /// Σ of per-term error bounds.
  double error = 0.0;
};

inline SeriesReport hake_series(const AdditiveIntervalFunction& F, const Division& D, const Box& I,
                                std::size_t prefix, int rearrangements, std::uint64_t seed,
                                const PieceIndex* index = nullptr) {
  if (prefix < 1) throw std::invalid_argument("hake_series: prefix must be >= 1");
  I.require_dim(F.dim_in());
  prefix = std::min(prefix, D.pieces().size());
  std::optional<PieceIndex> own;
  if (!index || index->size() < prefix) {
    own.emplace(D.pieces(), prefix);
    index = &*own;
  }
  const Point lo = I.lo_point();
  const Point hi = I.hi_point();
  std::vector<detail::Term> terms = detail::series_terms(F, D.pieces(), *index, lo.data(), hi.data());
  terms.erase(std::remove_if(terms.begin(), terms.end(), [&](const detail::Term& t) { return t.k >= prefix; }),
              terms.end());
  const std::size_t d = F.dim_out();
  SeriesReport r;
  r.prefix = prefix;
  r.terms = terms.size();
  detail::VectorSum total(d);
  int gen = -1;
  const int final_gen = D.pieces()[prefix - 1].generation;
  VectorValue last(d);
  for (const detail::Term& t : terms) {
    const int g = D.pieces()[t.k].generation;
    if (g != gen) {
      if (gen >= 0) r.partial_sums.emplace_back(gen, total.value());
      gen = g;
    }
    total.add(t.value);
    if (g == final_gen) last += t.value;
    r.abs_sum += t.value.norm();
    r.error += t.error;
  }
  if (gen >= 0) r.partial_sums.emplace_back(gen, total.value());
  r.value = total.value();
  r.last_generation = last.norm();
  for (std::size_t i = terms.size() - terms.size() / 4; i < terms.size(); ++i) {
    r.abs_tail += terms[i].value.norm();
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> perm(terms.size());
  for (int p = 0; p < rearrangements; ++p) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    detail::VectorSum s(d);
    for (const std::size_t i : perm) s.add(terms[i].value);
    r.spread = std::max(r.spread, (s.value() - r.value).norm());
  }
  return r;
}

struct HakeRow {
  Box I;
  std::size_t division = 0;
  VectorValue F_I;
  SeriesReport series;
  double residual = 0.0;
  double allowance = 0.0;
  bool pass = false;
};

struct HakeReport {
  Verdict verdict = Verdict::Inconclusive;
  std::vector<HakeRow> rows;
  std::optional<HakeRow> witness;
  /// max spread / max(1, ‖value‖) over the rows.
  double max_relative_spread = 0.0;
  std::string note;
};

/// Checks F(I) = Σ_k F(I∩I_k) on every test box and every division.
inline HakeReport is_hake_function(const AdditiveIntervalFunction& F, const Region& R,
                                   const std::vector<Box>& test_boxes,
                                   const std::vector<const Division*>& divisions, double tol,
                                   int rearrangements = 20, std::uint64_t seed = 7) {
  if (divisions.size() < 2) throw std::invalid_argument("is_hake_function: needs >= 2 divisions");
  if (!(tol > 0.0)) throw std::invalid_argument("is_hake_function: tol must be positive");
  HakeReport rep;
  std::vector<PieceIndex> indices;
  for (const Division* D : divisions) indices.emplace_back(D->pieces(), D->pieces().size());
  try {
    for (std::size_t b = 0; b < test_boxes.size(); ++b) {
      const Box& I = test_boxes[b];
      if (!R.contains_box(I)) {
        throw std::invalid_argument("is_hake_function: test box " + I.to_string() + " is not in E");
      }
      const IntervalValue fi = F(I);
      for (std::size_t d = 0; d < divisions.size(); ++d) {
        HakeRow row;
        row.I = I;
        row.division = d;
        row.F_I = fi.value;
        if (divisions[d]->pieces().empty()) {
          row.series.value = VectorValue(F.dim_out());
        } else {
          row.series = hake_series(F, *divisions[d], I, divisions[d]->pieces().size(), rearrangements,
                                   detail::mix(seed, b, d), &indices[d]);
        }
        row.residual = (fi.value - row.series.value).norm();
        row.allowance = tol + row.series.last_generation + row.series.error + fi.error;
        row.pass = row.residual < row.allowance;
        rep.max_relative_spread =
            std::max(rep.max_relative_spread, row.series.spread / std::max(1.0, row.series.value.norm()));
        if (!row.pass && !rep.witness) rep.witness = row;
        rep.rows.push_back(std::move(row));
      }
    }
  } catch (const EvaluationError& e) {
    rep.verdict = Verdict::Inconclusive;
    rep.note = e.what();
    return rep;
  }
  rep.verdict = rep.witness ? Verdict::Fail : Verdict::Pass;
  if (rep.witness) {
    rep.note = "series identity violated on " + rep.witness->I.to_string() + " (division " +
               std::to_string(rep.witness->division) + ", prefix " +
               std::to_string(rep.witness->series.prefix) + ")";
  }
  return rep;
}

/// Window used for sampling near (G°)^c: the bounding box grown by a quarter of
/// its largest side, or [-2^level, 2^level]^m when G is unbounded.
inline Box sampling_window(const Region& R, int level) {
  if (!R.bounded()) return Box::cube(R.dim(), -Dyadic::pow2(level), Dyadic::pow2(level));
  const Box& bb = *R.bounding_box();
  const Dyadic pad = bb.max_side().ldexp(-2);
  std::vector<Dyadic> lo, hi;
  for (std::size_t j = 0; j < bb.dim(); ++j) {
    lo.push_back(bb.lo(j) - pad);
    hi.push_back(bb.hi(j) + pad);
  }
  return Box(std::move(lo), std::move(hi));
}

/// Points of (G°)^c in the window: special points, boundary samples and exterior points.
inline PointSampler complement_sampler(const Region& R, const Box& window) {
  const Point wlo = window.lo_point();
  const Point whi = window.hi_point();
  std::vector<Point> special;
  for (Point& p : R.special_points()) {
    if (window.contains(p)) special.push_back(std::move(p));
  }
  return [R, wlo, whi, special](std::mt19937_64& rng) -> std::optional<Point> {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto in_window = [&](const Point& p) {
      for (std::size_t j = 0; j < p.size(); ++j) {
        if (p[j] < wlo[j] || p[j] > whi[j]) return false;
      }
      return true;
    };
    for (int attempt = 0; attempt < 64; ++attempt) {
      const double u = unit(rng);
      if (u < 0.25 && !special.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, special.size() - 1);
        return special[pick(rng)];
      }
      if (u < 0.75) {
        Point p;
        try {
          p = R.sample_boundary(rng);
        } catch (const OracleError&) {
          continue;
        }
        if (in_window(p) && R.interior_contains(p) != Membership::Inside) return p;
        continue;
      }
      Point p(wlo.size());
      for (std::size_t j = 0; j < p.size(); ++j) {
        p[j] = std::ldexp(std::round(std::ldexp(wlo[j] + (whi[j] - wlo[j]) * unit(rng), 24)), -24);
      }
      if (R.interior_contains(p) != Membership::Inside) return p;
    }
    if (special.empty()) return std::nullopt;
    return special.front();
  };
}

/// Random dyadic boxes in 𝓘_E: sub-boxes of the window on a 1/16 grid of its side
/// (sides at most a quarter of the window), kept when R.contains_box holds.
inline std::vector<Box> sample_test_boxes(const Region& R, const Box& window, std::size_t count,
                                          std::uint64_t seed) {
  std::vector<Box> out;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> start(0, 15);
  std::uniform_int_distribution<int> len(1, 4);
  for (std::size_t attempt = 0; attempt < 400 * count && out.size() < count; ++attempt) {
    std::vector<Dyadic> lo, hi;
    for (std::size_t j = 0; j < window.dim(); ++j) {
      const Dyadic step = window.side(j).ldexp(-4);
      const int a = start(rng);
      const int b = std::min(16, a + len(rng));
      lo.push_back(window.lo(j) + step * Dyadic(a));
      hi.push_back(window.lo(j) + step * Dyadic(b));
    }
    Box b(std::move(lo), std::move(hi));
    if (!R.contains_box(b)) continue;
    if (std::find(out.begin(), out.end(), b) != out.end()) continue;
    out.push_back(std::move(b));
  }
  return out;
}

struct VariationOptions {
  Kind kind = Kind::M;
  double tol = 1e-4;
  /// Scales ε = 2^-s for s = first_scale, first_scale + 1, ..., max_scale.
  int first_scale = 2;
  int max_scale = 40;
  std::size_t partitions_per_scale = 8;
  std::size_t cells_per_partition = 16;
  /// Adversarial cells per tag and refinement level (0: 2^16 / 16^(m-1)).
  std::size_t band_budget = 0;
  /// Extra tags for the adversarial search (special points are always used).
  std::size_t boundary_tags = 4;
  std::uint64_t seed = 7;
};

struct VariationScale {
  int s = 0;
  double eps = 0.0;
  double sup = 0.0;
  double random_sup = 0.0;
  double adversarial_sup = 0.0;
  std::size_t partitions = 0;
  std::string witness;
};

struct VariationEstimate {
  std::vector<VariationScale> scales;
  Trend verdict = Trend::Inconclusive;
  std::optional<double> lower_bound;
  std::string note;
};

namespace detail {

struct CellEval {
  std::vector<double> lo, hi;
  VectorValue value;
};

class SeriesEvaluator {
 public:
  SeriesEvaluator(const AdditiveIntervalFunction& F, const std::vector<const Division*>& divisions)
      : F_(F), divisions_(divisions) {
    for (const Division* D : divisions) index_.emplace_back(D->pieces(), D->pieces().size());
  }
  std::size_t count() const { return divisions_.size(); }
  VectorValue operator()(std::size_t d, const double* lo, const double* hi) const {
    return series_value(series_terms(F_, divisions_[d]->pieces(), index_[d], lo, hi), F_.dim_out());
  }

 private:
  const AdditiveIntervalFunction& F_;
  std::vector<const Division*> divisions_;
  std::vector<PieceIndex> index_;
};

// Best positive projections of single-tag cell families: returns, per direction
// ±e_i, the sum over the cells whose series has a positive component along it.
inline std::vector<VectorValue> positive_parts(const std::vector<CellEval>& cells, std::size_t d) {
  std::vector<VectorValue> out(2 * d, VectorValue(d));
  for (const CellEval& c : cells) {
    for (std::size_t i = 0; i < d; ++i) {
      if (c.value[i] > 0.0) out[2 * i] += c.value;
      if (c.value[i] < 0.0) out[2 * i + 1] += c.value;
    }
  }
  return out;
}

inline double projection(const VectorValue& v, std::size_t dir) {
  return dir % 2 == 0 ? v[dir / 2] : -v[dir / 2];
}

// M kind: dyadic cells inside B(t, ε) with center distance ≥ ε/2, refined until
// the best positive projection stabilizes.
inline std::vector<VectorValue> band_search(const SeriesEvaluator& S, std::size_t div, const Point& t,
                                            double eps, int s, const Box& window, std::size_t budget,
                                            std::size_t d) {
  const std::size_t m = t.size();
  const Point wlo = window.lo_point();
  const Point whi = window.hi_point();
  std::vector<VectorValue> best(2 * d, VectorValue(d));
  double prev = -1.0;
  int stable = 0;
  for (int level = s + 2; level <= s + 40; ++level) {
    const double h = std::ldexp(1.0, -level);
    std::vector<std::int64_t> kmin(m), kmax(m);
    std::size_t total = 1;
    for (std::size_t j = 0; j < m; ++j) {
      const double a = std::max(t[j] - eps, wlo[j]);
      const double b = std::min(t[j] + eps, whi[j]);
      kmin[j] = static_cast<std::int64_t>(std::floor(a / h));
      kmax[j] = static_cast<std::int64_t>(std::ceil(b / h));
      total *= static_cast<std::size_t>(std::max<std::int64_t>(0, kmax[j] - kmin[j]));
      if (total > budget) break;
    }
    if (total > budget) break;
    std::vector<CellEval> cells;
    std::vector<std::int64_t> k(kmin);
    std::vector<double> lo(m), hi(m);
    bool done = total == 0;
    while (!done) {
      bool ok = true;
      double centre_dist = 0.0;
      for (std::size_t j = 0; j < m && ok; ++j) {
        lo[j] = static_cast<double>(k[j]) * h;
        hi[j] = lo[j] + h;
        ok = lo[j] > t[j] - eps && hi[j] < t[j] + eps && lo[j] >= wlo[j] && hi[j] <= whi[j];
        centre_dist = std::max(centre_dist, std::abs(lo[j] + h / 2 - t[j]));
      }
      if (ok && centre_dist >= eps / 2) cells.push_back({lo, hi, S(div, lo.data(), hi.data())});
      std::size_t j = 0;
      while (j < m && ++k[j] == kmax[j]) {
        k[j] = kmin[j];
        ++j;
      }
      done = j == m;
    }
    std::vector<VectorValue> parts = positive_parts(cells, d);
    double score = 0.0;
    for (std::size_t dir = 0; dir < parts.size(); ++dir) score = std::max(score, projection(parts[dir], dir));
    best = std::move(parts);
    if (level >= s + 3 && score <= 1.05 * prev + std::numeric_limits<double>::min()) {
      if (++stable >= 2) break;
    } else {
      stable = 0;
    }
    prev = score;
  }
  return best;
}

// HK kind: cells with t as a corner, one per orthant, side chosen per direction.
inline std::vector<VectorValue> orthant_search(const SeriesEvaluator& S, std::size_t div, const Point& t,
                                               double eps, const Box& window, std::size_t d) {
  const std::size_t m = t.size();
  const Point wlo = window.lo_point();
  const Point whi = window.hi_point();
  std::vector<VectorValue> out(2 * d, VectorValue(d));
  std::vector<double> lo(m), hi(m);
  for (std::size_t o = 0; o < (std::size_t{1} << m); ++o) {
    std::vector<VectorValue> pick(2 * d, VectorValue(d));
    for (int i = 0; i <= 12; ++i) {
      const double side = i == 0 ? eps * (1.0 - std::ldexp(1.0, -20)) : std::ldexp(eps, -i);
      bool ok = true;
      for (std::size_t j = 0; j < m && ok; ++j) {
        if ((o >> j) & 1U) {
          lo[j] = t[j];
          hi[j] = std::min(t[j] + side, whi[j]);
        } else {
          lo[j] = std::max(t[j] - side, wlo[j]);
          hi[j] = t[j];
        }
        ok = lo[j] < hi[j] && hi[j] - lo[j] < eps;
      }
      if (!ok) continue;
      const VectorValue v = S(div, lo.data(), hi.data());
      for (std::size_t dir = 0; dir < pick.size(); ++dir) {
        if (projection(v, dir) > projection(pick[dir], dir)) pick[dir] = v;
      }
    }
    for (std::size_t dir = 0; dir < out.size(); ++dir) out[dir] += pick[dir];
  }
  return out;
}

}  // namespace detail

/// Sampled sup over Z-tagged ε-fine partitions of ‖Σ_(t,I) Σ_k F(I∩I_k)‖ on a ladder
/// of scales. Random partitions come from sample_Z_tagged_partition; adversarial
/// families (annular bands for M, corner cells for HK) are searched around the
/// special points of R and a few boundary samples.
inline VariationEstimate negligible_variation_estimate(const AdditiveIntervalFunction& F,
                                                       const PointSampler& Z, const Region& R,
                                                       const Box& window,
                                                       const std::vector<const Division*>& divisions,
                                                       const VariationOptions& opt) {
  if (divisions.empty()) throw std::invalid_argument("negligible_variation_estimate: no divisions");
  VariationEstimate est;
  const std::size_t d = F.dim_out();
  const std::size_t m = F.dim_in();
  detail::SeriesEvaluator S(F, divisions);
  const std::size_t budget =
      opt.band_budget > 0 ? opt.band_budget : (std::size_t{1} << 16) >> (4 * (m - 1));
  int finest = opt.max_scale;
  for (const Division* D : divisions) finest = std::min(finest, D->generation());

  std::vector<Point> tags;
  for (Point& p : R.special_points()) {
    if (window.contains(p)) tags.push_back(std::move(p));
  }
  {
    std::mt19937_64 rng(detail::mix(opt.seed, 0xB0));
    for (std::size_t i = 0; i < opt.boundary_tags; ++i) {
      try {
        Point p = R.sample_boundary(rng);
        if (window.contains(p) && R.interior_contains(p) != Membership::Inside) tags.push_back(std::move(p));
      } catch (const OracleError&) {
        break;
      }
    }
  }

  int small = 0;
  try {
    for (int s = opt.first_scale; s <= finest; ++s) {
      VariationScale sc;
      sc.s = s;
      sc.eps = std::ldexp(1.0, -s);
      const Gauge gauge = Gauge::constant(sc.eps);
      for (std::size_t p = 0; p < opt.partitions_per_scale; ++p) {
        const TaggedPartition pi = sample_Z_tagged_partition(Z, gauge, window, opt.kind, opt.cells_per_partition,
                                                             detail::mix(opt.seed, static_cast<std::uint64_t>(s), p));
        for (std::size_t div = 0; div < S.count(); ++div) {
          detail::VectorSum sum(d);
          for (const TaggedCell& c : pi.cells) {
            const Point lo = c.box.lo_point();
            const Point hi = c.box.hi_point();
            sum.add(S(div, lo.data(), hi.data()));
          }
          ++sc.partitions;
          const double v = sum.value().norm();
          if (v > sc.random_sup) {
            sc.random_sup = v;
            if (v > sc.sup) {
              sc.sup = v;
              sc.witness = "random partition #" + std::to_string(p) + " (" + std::to_string(pi.cells.size()) +
                           " cells), division " + std::to_string(div);
            }
          }
        }
      }
      // Adversarial: tags at least 2ε apart so their cells cannot overlap.
      std::vector<Point> spread;
      for (const Point& t : tags) {
        bool far = true;
        for (const Point& u : spread) {
          double r = 0.0;
          for (std::size_t j = 0; j < m; ++j) r = std::max(r, std::abs(t[j] - u[j]));
          far = far && r >= 2.0 * sc.eps;
        }
        if (far) spread.push_back(t);
      }
      for (std::size_t div = 0; div < S.count() && !spread.empty(); ++div) {
        std::vector<VectorValue> total(2 * d, VectorValue(d));
        for (const Point& t : spread) {
          const auto parts = opt.kind == Kind::M
                                 ? detail::band_search(S, div, t, sc.eps, s, window, budget, d)
                                 : detail::orthant_search(S, div, t, sc.eps, window, d);
          for (std::size_t dir = 0; dir < total.size(); ++dir) total[dir] += parts[dir];
        }
        ++sc.partitions;
        for (std::size_t dir = 0; dir < total.size(); ++dir) {
          const double v = total[dir].norm();
          sc.adversarial_sup = std::max(sc.adversarial_sup, v);
          if (v > sc.sup) {
            sc.sup = v;
            sc.witness = std::string(opt.kind == Kind::M ? "annular-band" : "corner-cell") + " cells at " +
                         std::to_string(spread.size()) + " tags, direction " + (dir % 2 ? "-" : "+") + "e" +
                         std::to_string(dir / 2) + ", division " + std::to_string(div);
          }
        }
      }
      est.scales.push_back(sc);

      small = sc.sup < opt.tol ? small + 1 : 0;
      if (small >= 2) {
        est.verdict = Trend::Vanishing;
        return est;
      }
      const std::size_t n = est.scales.size();
      if (n >= 3) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = 0.0;
        for (std::size_t i = n - 3; i < n; ++i) {
          lo = std::min(lo, est.scales[i].sup);
          hi = std::max(hi, est.scales[i].sup);
        }
        if (lo >= opt.tol && lo >= 0.75 * hi) {
          est.verdict = Trend::NonVanishing;
          est.lower_bound = std::min(est.scales[n - 1].sup, est.scales[n - 2].sup);
          est.note = "sups bounded below over scales 2^-" + std::to_string(est.scales[n - 3].s) + "..2^-" +
                     std::to_string(s) + "; witness: " + sc.witness;
          return est;
        }
      }
    }
  } catch (const EvaluationError& e) {
    est.verdict = Trend::Inconclusive;
    est.note = e.what();
    return est;
  }
  est.note = "scale ladder ended at 2^-" + std::to_string(finest) + " (division depth) without a trend";
  return est;
}

struct HakeOptions {
  int max_generation = 44;
  int divisions = 2;
  int jobs = 1;
  std::uint64_t seed = 7;
  std::size_t test_boxes = 6;
  int rearrangements = 20;
  std::size_t partitions_per_scale = 6;
  /// Window [-2^L, 2^L]^m for unbounded regions.
  int window_level = 3;
  bool check_hake = true;
  bool check_variation = true;
  IntegratorOptions integrator{30, 64, 32'000'000, true, 1, Norm::Max};
  std::size_t max_pieces = 4'000'000;
};

/// One division's series Σ_k ∫_{I_k} f, grown generation by generation.
struct DivisionSeries {
  std::shared_ptr<Division> division;
  VectorValue value;
  double error = 0.0;
  std::vector<TraceRow> trace;
  bool converged = false;
  std::string note;
  std::size_t cells = 0;
};

struct HakeResult {
  IntegrationResult integral;
  std::vector<DivisionSeries> series;
  HakeReport hake;
  VariationEstimate variation;
  Verdict verdict = Verdict::Inconclusive;
  Box window;
  int exit_code() const {
    if (verdict == Verdict::Pass) return 0;
    if (verdict == Verdict::Fail) return 2;
    return 3;
  }
};

/// Origin offset for the d-th division (d = 0: aligned grid). Offsets are ±1/(2d+1)
/// rounded to 8 fraction bits. Through generation 8 the grids differ (and pieces
/// along flat faces appear every other generation); past it, dyadic faces are
/// lattice planes again and pieces keep a distance to them of one side.
inline constexpr int kOriginBits = 8;

inline std::vector<double> division_origin(std::size_t m, int d) {
  std::vector<double> o(m, 0.0);
  if (d == 0) return o;
  for (std::size_t j = 0; j < m; ++j) {
    const double c = ((static_cast<std::size_t>(d) + j) % 2 == 0 ? -1.0 : 1.0) / (2.0 * d + 1.0);
    o[j] = std::ldexp(std::round(std::ldexp(c, kOriginBits)), -kOriginBits);
  }
  return o;
}

namespace detail {

// Coarse spatial cell of a piece (by its center) on the division's grid.
inline std::vector<std::int64_t> coarse_key(const Piece& p, const std::vector<double>& origin, double side) {
  std::vector<std::int64_t> key(p.dim());
  for (std::size_t j = 0; j < p.dim(); ++j) {
    key[j] = static_cast<std::int64_t>(std::floor((0.5 * (p.lo[j] + p.hi[j]) - origin[j]) / side));
  }
  return key;
}

inline DivisionSeries run_series(const Integrand& f, const Region& R, Kind kind, double tol, int d,
                                 const std::vector<const AdditiveIntervalFunction*>& primed,
                                 const HakeOptions& opt) {
  DivisionSeries out;
  DivisionOptions dopt;
  dopt.max_generation = 0;
  dopt.coalesce = true;
  dopt.origin = division_origin(R.dim(), d);
  out.division = std::make_shared<Division>(R, dopt);
  Division& D = *out.division;
  const std::size_t m = R.dim();
  const std::size_t dim_out = f.dim_out();
  const double reference =
      R.bounded() ? R.bounding_box()->measure().to_double() : std::ldexp(1.0, 2 * static_cast<int>(m));
  // Tails settle at different generations in different places (a slowly shrinking
  // face next to a fast one). Coarse cells that have settled stop receiving pieces;
  // their last contribution is charged as tail, within half the tail budget.
  const double side =
      R.bounded() ? std::ldexp(1.0, std::ilogb(R.bounding_box()->max_side().to_double()) - 2) : 1.0;
  struct CoarseCell {
    int agreements = 0;
    bool settled = false;
    double last = 0.0;
  };
  using CellMap = std::map<std::vector<std::int64_t>, CoarseCell>;
  CellMap cells;
  double frozen = 0.0;
  std::vector<char> keep;
  VectorSum total(dim_out);
  double mass = 0.0;
  int agreements = 0;
  const int needed = 2;
  // Until the offset's bits are used up, pieces along flat faces of a shifted
  // grid arrive intermittently: no stopping or settling before then.
  const int warmup = d > 0 ? kOriginBits + 2 : 0;
  auto finish = [&] {
    if (std::find(keep.begin(), keep.end(), 0) != keep.end()) D.retain(keep);
    out.error += frozen;
  };
  for (int g = 0; g <= opt.max_generation; ++g) {
    try {
      D.extend_to(g);
    } catch (const std::exception& e) {
      out.note = std::string("division stopped: ") + e.what();
      return out;
    }
    const std::size_t begin = D.prefix_size(g - 1);
    const std::size_t end = D.prefix_size(g);
    if (end > opt.max_pieces) {
      out.note = "piece budget exhausted at generation " + std::to_string(g);
      return out;
    }
    std::vector<std::size_t> active;
    std::vector<CellMap::iterator> owner;
    keep.resize(end, 0);
    for (std::size_t k = begin; k < end; ++k) {
      const auto it = cells.try_emplace(coarse_key(D.pieces()[k], dopt.origin, side)).first;
      if (it->second.settled) continue;
      keep[k] = 1;
      active.push_back(k);
      owner.push_back(it);
    }
    const std::size_t n = active.size();
    // Pilot estimates of ∫‖f‖ set each piece's share of the tolerance.
    std::vector<double> pilot(n);
    parallel_for(n, opt.jobs, [&](std::size_t i) {
      const Piece& p = D.pieces()[active[i]];
      pilot[i] = abs_pilot(f, p.lo.data(), p.hi.data(), m);
    });
    for (const double v : pilot) mass += v;
    std::vector<IntegrationResult> res(n);
    parallel_for(n, opt.jobs, [&](std::size_t i) {
      const Piece& p = D.pieces()[active[i]];
      const double share = std::max({mass > 0.0 ? pilot[i] / mass : 0.0, p.measure() / reference,
                                     std::ldexp(1.0, -(g + 1)) / static_cast<double>(n)});
      const double tk = std::max(tol / 8.0 * share, 1e-15 * pilot[i]);
      res[i] = integrate_box(f, box_from(p.lo.data(), p.hi.data(), m), kind, tk, opt.integrator);
    });
    VectorSum gen(dim_out);
    double gen_abs = 0.0;
    // Keyed by cell coordinates so the frozen budget is spent in a fixed order.
    std::map<std::vector<std::int64_t>, double> cell_abs;
    for (std::size_t i = 0; i < n; ++i) {
      const IntegrationResult& r = res[i];
      const Piece& p = D.pieces()[active[i]];
      out.cells += r.cells;
      if (!r.converged()) {
        out.note = "piece " + box_from(p.lo.data(), p.hi.data(), m).to_string() + ": " + to_string(r.status) +
                   " (" + r.note + ")";
        return out;
      }
      for (const AdditiveIntervalFunction* F : primed) {
        F->prime(p.lo.data(), p.hi.data(), IntervalValue{r.value, r.error_estimate});
      }
      gen.add(r.value);
      total.add(r.value);
      gen_abs += r.value.norm();
      cell_abs[owner[i]->first] += r.value.norm();
      out.error += r.error_estimate;
    }
    TraceRow row;
    row.level = g;
    row.scale = std::ldexp(1.0, -g);
    row.sum = total.value();
    row.cells = end;
    out.trace.push_back(row);
    out.value = row.sum;
    if (D.exhausted()) {
      out.converged = true;
      finish();
      return out;
    }
    if (n == 0 || g < warmup) continue;
    agreements = gen.value().norm() < tol / 2.0 ? agreements + 1 : 0;
    if (agreements >= needed && gen_abs < tol / 4.0) {
      out.converged = true;
      out.error += gen_abs;
      finish();
      return out;
    }
    for (const auto& [key, a] : cell_abs) {
      CoarseCell* c = &cells[key];
      c->last = a;
      c->agreements = frozen + a < tol / 8.0 ? c->agreements + 1 : 0;
      if (c->agreements >= needed && frozen + a < tol / 8.0) {
        c->settled = true;
        frozen += a;
      }
    }
  }
  out.note = "series did not stabilize by generation " + std::to_string(opt.max_generation);
  return out;
}

}  // namespace detail

/// The numeric primitive F(I) = ∫_I f used by hake_integrate; the tolerance scales
/// with |I| relative to `reference_measure`.
inline AdditiveIntervalFunction hake_primitive(const Integrand& f, Kind kind, double tol,
                                               double reference_measure, const IntegratorOptions& opt) {
  return numeric_primitive(f, kind, tol / (4.0 * reference_measure), std::numeric_limits<double>::min(), opt);
}

/// Hake-McShane / Hake-HK integral of f over G: division series + Hake-function
/// check + negligible-variation estimate.
inline HakeResult hake_integrate(const Integrand& f, const Region& R, Kind kind, double tol,
                                 const HakeOptions& opt, const AdditiveIntervalFunction& F) {
  if (f.dim_in() != R.dim()) throw DimensionMismatch("hake_integrate: dimension mismatch");
  if (!(tol > 0.0)) throw std::invalid_argument("hake_integrate: tol must be positive");
  if (opt.divisions < 1) throw std::invalid_argument("hake_integrate: need at least one division");
  HakeResult res;
  res.window = sampling_window(R, opt.window_level);
  const Box test_window = R.bounded() ? *R.bounding_box() : sampling_window(R, 1);
  // Variation sums only need absolute accuracy well below tol (a sum has at most a
  // few dozen terms).
  IntegratorOptions vopt = opt.integrator;
  vopt.random_tag_pass = false;
  const AdditiveIntervalFunction Fv = numeric_primitive(f, kind, tol / 4.0, std::ldexp(tol, -8), vopt);

  for (int d = 0; d < opt.divisions; ++d) {
    res.series.push_back(detail::run_series(f, R, kind, tol, d, {&F, &Fv}, opt));
  }
  const DivisionSeries& first = res.series.front();
  res.integral.value = first.value;
  res.integral.trace = first.trace;
  res.integral.error_estimate = first.error;
  res.integral.cells = first.cells;
  for (const DivisionSeries& s : res.series) {
    if (!s.converged) {
      res.integral.status = Status::NoConvergence;
      res.integral.note = s.note;
      res.verdict = Verdict::Inconclusive;
      return res;
    }
  }
  for (std::size_t d = 1; d < res.series.size(); ++d) {
    const double gap = (res.series[d].value - first.value).norm();
    if (gap >= 2.0 * tol) {
      res.integral.status = Status::NoConvergence;
      res.integral.note = "divisions disagree by " + std::to_string(gap);
      res.verdict = Verdict::Inconclusive;
      return res;
    }
  }

  std::vector<const Division*> divs;
  for (const DivisionSeries& s : res.series) divs.push_back(s.division.get());
  if (opt.check_hake && divs.size() >= 2) {
    const auto boxes = sample_test_boxes(R, test_window, opt.test_boxes, detail::mix(opt.seed, 0x7E57));
    res.hake = is_hake_function(F, R, boxes, divs, tol, opt.rearrangements, opt.seed);
  } else {
    res.hake.verdict = Verdict::Pass;
    res.hake.note = "skipped";
  }
  if (opt.check_variation) {
    VariationOptions v;
    v.kind = kind;
    v.tol = tol;
    v.partitions_per_scale = opt.partitions_per_scale;
    v.seed = opt.seed;
    res.variation = negligible_variation_estimate(Fv, complement_sampler(R, res.window), R, res.window, divs, v);
  } else {
    res.variation.verdict = Trend::Vanishing;
    res.variation.note = "skipped";
  }

  if (res.hake.verdict == Verdict::Fail || res.variation.verdict == Trend::NonVanishing) {
    res.verdict = Verdict::Fail;
    res.integral.status = Status::NoConvergence;
    res.integral.note = res.hake.verdict == Verdict::Fail ? "Hake-function check failed: " + res.hake.note
                                                          : "variation NON-VANISHING: " + res.variation.note;
  } else if (res.hake.verdict == Verdict::Inconclusive || res.variation.verdict == Trend::Inconclusive) {
    res.verdict = Verdict::Inconclusive;
    res.integral.status = Status::NoConvergence;
    res.integral.note = res.hake.verdict == Verdict::Inconclusive ? "Hake-function check inconclusive: " + res.hake.note
                                                                  : "variation inconclusive: " + res.variation.note;
  } else {
    res.verdict = Verdict::Pass;
    res.integral.status = Status::Converged;
  }
  return res;
}

inline HakeResult hake_integrate(const Integrand& f, const Region& R, Kind kind, double tol,
                                 const HakeOptions& opt = {}) {
  return hake_integrate(f, R, kind, tol, opt, hake_primitive(f, kind, tol, 1.0, opt.integrator));
}

struct ClauseRow {
  std::string clause;
  Box I;
  /// inside / crossing / disjoint / exhaustion
  std::string relation;
  int division = -1;
  VectorValue lhs;
  VectorValue rhs;
  double residual = 0.0;
  double budget = 0.0;
  bool pass = false;
};

struct EquivalenceOptions {
  int levels = 6;
  std::size_t boxes = 24;
  HakeOptions hake;
};

struct EquivalenceReport {
  std::vector<ClauseRow> exhaustion;
  std::vector<ClauseRow> series;
  std::vector<ClauseRow> primitive;
  HakeResult hake;
  VectorValue h_integral;
  double round_trip = 0.0;
  bool round_trip_pass = false;
  Verdict verdict = Verdict::Inconclusive;
  std::optional<ClauseRow> witness;
  std::string note;
  int exit_code() const {
    if (verdict == Verdict::Pass) return 0;
    if (verdict == Verdict::Fail) return 2;
    return 3;
  }
};

/// Boxes of 𝓘 for clause (b): around boundary samples, disjoint from G, and random.
inline std::vector<std::pair<Box, std::string>> equivalence_boxes(const Region& R, const Box& window,
                                                                  std::size_t count, std::uint64_t seed) {
  std::vector<std::pair<Box, std::string>> out;
  std::mt19937_64 rng(seed);
  const std::size_t m = R.dim();
  std::uniform_int_distribution<int> cells(1, 6);
  std::uniform_int_distribution<int> pos(0, 31);
  const Dyadic side = window.max_side();
  const Dyadic step = side.ldexp(-5);
  const double grid = step.to_double();
  auto relation = [&](const Box& b) {
    switch (R.classify(b)) {
      case CellClass::Inside: return std::string("inside");
      case CellClass::Outside: return std::string("disjoint");
      case CellClass::Straddle: return std::string("crossing");
    }
    return std::string("?");
  };
  std::size_t crossing = 0, disjoint = 0;
  for (std::size_t attempt = 0; attempt < 100 * count && out.size() < count; ++attempt) {
    const int mode = static_cast<int>(attempt % 3);
    std::vector<Dyadic> lo, hi;
    Point c(m);
    if (mode == 0) {
      try {
        c = R.sample_boundary(rng);
      } catch (const OracleError&) {
        continue;
      }
    }
    for (std::size_t j = 0; j < m; ++j) {
      Dyadic a, b;
      if (mode == 0) {
        const Dyadic base = Dyadic::from_double(std::floor(c[j] / grid) * grid);
        a = base - step * Dyadic(cells(rng));
        b = base + step * Dyadic(cells(rng));
      } else {
        a = window.lo(j) + step * Dyadic(pos(rng));
        b = a + step * Dyadic(cells(rng) * (mode == 1 ? 1 : 2));
      }
      lo.push_back(a);
      hi.push_back(b);
    }
    Box b(std::move(lo), std::move(hi));
    std::string rel = relation(b);
    if (mode == 1 && rel != "disjoint" && disjoint * 3 < count) continue;
    if (rel == "crossing") ++crossing;
    if (rel == "disjoint") ++disjoint;
    out.emplace_back(std::move(b), std::move(rel));
  }
  return out;
}

/// Both directions of the Hake equivalence: hake_integrate over G against
/// integrate_box of the zero extension h, plus the per-box clauses.
inline EquivalenceReport equivalence_check(const Integrand& f, const AdditiveIntervalFunction& F, const Region& R,
                                           Kind kind, double tol, const EquivalenceOptions& opt = {}) {
  EquivalenceReport rep;
  const Integrand h = extension_h(f, R);
  const IntegratorOptions& iopt = opt.hake.integrator;
  IntegratorOptions hopt = iopt;
  hopt.max_cells = 30'000'000;
  bool inconclusive = false;
  auto fail = [&](const ClauseRow& row) {
    if (!rep.witness) rep.witness = row;
  };

  // (a) exhaustion boxes J_n; bounded regions run on until J_n covers G.
  std::optional<Box> prev_box;
  VectorValue prev;
  for (int n = 0; n <= opt.levels || (R.bounded() && prev_box != R.bounding_box()); ++n) {
    const Box J = exhaustion_box(R, n);
    if (prev_box && *prev_box == J) continue;
    const IntegrationResult r = integrate_box(h, J, kind, tol, hopt);
    ClauseRow row{"a", J, "exhaustion", -1, r.value, prev.dim() ? prev : r.value, 0.0, 2.0 * tol, true};
    if (!r.converged()) {
      inconclusive = true;
      rep.note = "integrate_box(h, " + J.to_string() + "): " + to_string(r.status) + " (" + r.note + ")";
    }
    if (prev.dim()) row.residual = (r.value - prev).norm();
    rep.exhaustion.push_back(row);
    prev = r.value;
    prev_box = J;
  }
  rep.h_integral = prev;
  if (R.bounded() && !rep.exhaustion.empty()) {
    // J_n covers G: nothing is left beyond the last level.
    ClauseRow& last = rep.exhaustion.back();
    last.relation = "exhaustion-final";
    last.rhs = last.lhs;
    last.residual = 0.0;
    last.pass = true;
  } else if (rep.exhaustion.size() >= 2) {
    ClauseRow& last = rep.exhaustion.back();
    last.pass = last.residual < last.budget;
    if (!last.pass) fail(last);
  }

  // Series pieces prime F's cache (when numeric), so clause (b) reuses them.
  rep.hake = hake_integrate(f, R, kind, tol, opt.hake, F);
  if (rep.hake.series.empty() || !rep.hake.series.front().converged) {
    rep.verdict = Verdict::Inconclusive;
    rep.note = "hake series: " + rep.hake.integral.note;
    return rep;
  }
  rep.round_trip = (rep.hake.integral.value - rep.h_integral).norm();
  rep.round_trip_pass = rep.round_trip < 2.0 * tol;

  // (b) H(I) against Σ_k F(I∩C_k) on every division.
  std::vector<PieceIndex> idx;
  for (const DivisionSeries& s : rep.hake.series) idx.emplace_back(s.division->pieces(), s.division->pieces().size());
  const auto boxes = equivalence_boxes(R, rep.hake.window, opt.boxes, detail::mix(opt.hake.seed, 0xE0));
  try {
    for (const auto& [I, rel] : boxes) {
      const IntegrationResult H = integrate_box(h, I, kind, tol, hopt);
      if (!H.converged()) {
        inconclusive = true;
        rep.note = "integrate_box(h, " + I.to_string() + "): " + H.note;
      }
      const Point lo = I.lo_point();
      const Point hi = I.hi_point();
      for (std::size_t d = 0; d < rep.hake.series.size(); ++d) {
        const auto terms = detail::series_terms(F, rep.hake.series[d].division->pieces(), idx[d], lo.data(), hi.data());
        ClauseRow row{"b", I, rel, static_cast<int>(d), H.value, detail::series_value(terms, F.dim_out()), 0.0,
                      2.0 * tol, false};
        row.residual = (row.lhs - row.rhs).norm();
        row.pass = row.residual < row.budget;
        if (!row.pass) fail(row);
        rep.series.push_back(std::move(row));
      }
    }
    // (c) H(I) against F(I) for I inside G.
    const Box test_window = R.bounded() ? *R.bounding_box() : sampling_window(R, 1);
    for (const Box& I : sample_test_boxes(R, test_window, 6, detail::mix(opt.hake.seed, 0xC0))) {
      const IntegrationResult H = integrate_box(h, I, kind, tol, hopt);
      if (!H.converged()) inconclusive = true;
      const IntervalValue fi = F(I);
      ClauseRow row{"c", I, "inside", -1, H.value, fi.value, 0.0, 2.0 * tol + fi.error, false};
      row.residual = (row.lhs - row.rhs).norm();
      row.pass = row.residual < row.budget;
      if (!row.pass) fail(row);
      rep.primitive.push_back(std::move(row));
    }
  } catch (const EvaluationError& e) {
    inconclusive = true;
    rep.note = e.what();
  }

  if (rep.hake.verdict == Verdict::Fail) {
    rep.verdict = Verdict::Fail;
    rep.note = rep.hake.integral.note;
  } else if (rep.witness || !rep.round_trip_pass) {
    rep.verdict = Verdict::Fail;
    if (!rep.witness) rep.note = "round trip residual " + std::to_string(rep.round_trip);
  } else if (inconclusive || rep.hake.verdict == Verdict::Inconclusive) {
    rep.verdict = Verdict::Inconclusive;
    if (rep.note.empty()) rep.note = rep.hake.integral.note;
  } else {
    rep.verdict = Verdict::Pass;
  }
  return rep;
}

}  // namespace gauge_quad
