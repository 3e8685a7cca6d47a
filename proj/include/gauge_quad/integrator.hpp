#pragma once

#include "gauge_quad/integrand.hpp"
#include "gauge_quad/partition.hpp"
#include "gauge_quad/region.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace gauge_quad {

enum class Status { Converged, NoConvergence, DepthExceeded };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Converged: return "Converged";
    case Status::NoConvergence: return "NoConvergence";
    case Status::DepthExceeded: return "DepthExceeded";
  }
  return "?";
}

struct TraceRow {
  int level = 0;
  double scale = 0.0;  // 2^-level
  VectorValue sum;
  std::size_t cells = 0;
};

struct IntegrationResult {
  VectorValue value;
  double error_estimate = 0.0;
  std::vector<TraceRow> trace;
  Status status = Status::NoConvergence;
  std::size_t cells = 0;
  /// M kind: ‖re-tagged sum − sum‖ on the final level.
  double tag_spread = 0.0;
  std::string note;
  bool converged() const { return status == Status::Converged; }
};

struct IntegratorOptions {
  int max_level = 30;
  int depth_cap = 64;
  /// Cells allowed in one refinement level before giving up.
  std::size_t max_cells = 30'000'000;
  /// M kind: re-draw tags on the final level and compare.
  bool random_tag_pass = true;
  std::uint64_t seed = 1;
  Norm norm = Norm::Max;
};

/// The gauge δ_n used at refinement level n on a box of largest side D:
/// 2^-n · min(D, c·|t - s|^p) near declared singularities s, D·2^(-q·n) at s.
/// Near a declared interface at distance ρ, δ_n = max(ρ, D·4^-n) once ρ < D·2^-n.
class GaugeSchedule {
 public:
  GaugeSchedule(double D, int n, std::vector<Singularity> sing,
                Integrand::Distance interface = nullptr)
      : D_(D),
        n_(n),
        scale_(std::ldexp(1.0, -n)),
        sing_(std::move(sing)),
        interface_(std::move(interface)) {}

  double operator()(const double* t, std::size_t m) const {
    double d = D_;
    double at = std::numeric_limits<double>::infinity();
    for (const Singularity& s : sing_) {
      double r = 0.0;
      for (std::size_t j = 0; j < m; ++j) r = std::max(r, std::abs(t[j] - s.at[j]));
      // Coincident declarations: the fastest rate wins.
      if (r == 0.0) at = std::min(at, D_ * std::exp2(-s.rate * n_));
      if (s.order > 0.0 && r > 0.0) d = std::min(d, s.scale * std::pow(r, s.order));
    }
    if (at < std::numeric_limits<double>::infinity()) return std::min(D_ * scale_, at);
    d = std::max(d * scale_, std::numeric_limits<double>::min());
    if (interface_) {
      const double rho = interface_(t);
      if (rho < d) d = std::max(rho, D_ * scale_ * scale_);
    }
    return d;
  }
  Gauge as_gauge() const {
    return Gauge("schedule:n=" + std::to_string(n_), [self = *this](const Point& t) {
      return self(t.data(), t.size());
    });
  }
  const std::vector<Singularity>& singularities() const { return sing_; }

 private:
  double D_;
  int n_;
  double scale_;
  std::vector<Singularity> sing_;
  Integrand::Distance interface_;
};

namespace detail {

// Neumaier-compensated vector accumulator.
struct Accumulator {
  std::vector<double> s, c;
  explicit Accumulator(std::size_t d) : s(d, 0.0), c(d, 0.0) {}
  void add(std::size_t i, double x) {
    const double t = s[i] + x;
    if (std::abs(s[i]) >= std::abs(x)) {
      c[i] += (s[i] - t) + x;
    } else {
      c[i] += (x - t) + s[i];
    }
    s[i] = t;
  }
  VectorValue value() const {
    VectorValue v(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) v[i] = s[i] + c[i];
    return v;
  }
};

class CellLimit : public std::runtime_error {
 public:
  CellLimit() : std::runtime_error("cell limit") {}
};

// Depth-first Cousin walk on double coordinates (all endpoints stay exact dyadics).
// Tag order: center, then declared singular points lying in the cell.
class Walker {
 public:
  Walker(const Integrand& f, const GaugeSchedule& g, const IntegratorOptions& opt, const Box& J,
         std::mt19937_64* rng, Kind kind)
      : f_(f),
        g_(g),
        opt_(opt),
        m_(f.dim_in()),
        d_(f.dim_out()),
        acc_(f.dim_out()),
        lo_((opt.depth_cap + 2) * f.dim_in()),
        hi_((opt.depth_cap + 2) * f.dim_in()),
        val_(f.dim_out()),
        tag_(f.dim_in()),
        alt_(f.dim_in()),
        Jlo_(J.lo_point()),
        Jhi_(J.hi_point()),
        rng_(rng),
        kind_(kind) {}

  void run() {
    std::copy(Jlo_.begin(), Jlo_.end(), lo_.begin());
    std::copy(Jhi_.begin(), Jhi_.end(), hi_.begin());
    visit(0);
  }
  VectorValue sum() const { return acc_.value(); }
  std::size_t cells() const { return cells_; }

 private:
  double radius(const double* t, const double* lo, const double* hi) const {
    double r = 0.0;
    for (std::size_t j = 0; j < m_; ++j) r = std::max(r, std::max(hi[j] - t[j], t[j] - lo[j]));
    return r;
  }

  void accept(const double* t, const double* lo, const double* hi) {
    if (++cells_ > opt_.max_cells) throw CellLimit();
    double vol = 1.0;
    for (std::size_t j = 0; j < m_; ++j) vol *= hi[j] - lo[j];
    const double* use = t;
    if (rng_) use = redraw(t, lo, hi);
    f_.eval(use, val_.data());
    for (std::size_t i = 0; i < d_; ++i) acc_.add(i, val_[i] * vol);
  }

  // Randomized tag: inside the cell (HK) or in the cell's neighbourhood within J (M);
  // kept only when the cell stays fine at the new tag.
  const double* redraw(const double* t, const double* lo, const double* hi) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t j = 0; j < m_; ++j) {
      double a = lo[j];
      double b = hi[j];
      if (kind_ == Kind::M) {
        const double w = 0.5 * (hi[j] - lo[j]);
        a = std::max(Jlo_[j], a - w);
        b = std::min(Jhi_[j], b + w);
      }
      alt_[j] = a + (b - a) * u(*rng_);
    }
    if (radius(alt_.data(), lo, hi) < g_(alt_.data(), m_)) return alt_.data();
    return t;
  }

  void visit(int depth) {
    double* lo = &lo_[depth * m_];
    double* hi = &hi_[depth * m_];
    for (std::size_t j = 0; j < m_; ++j) tag_[j] = 0.5 * (lo[j] + hi[j]);
    const double dc = g_(tag_.data(), m_);
    if (radius(tag_.data(), lo, hi) < dc) {
      accept(tag_.data(), lo, hi);
      return;
    }
    for (const Singularity& s : g_.singularities()) {
      bool inside = true;
      for (std::size_t j = 0; j < m_ && inside; ++j) inside = s.at[j] >= lo[j] && s.at[j] <= hi[j];
      if (inside && radius(s.at.data(), lo, hi) < g_(s.at.data(), m_)) {
        accept(s.at.data(), lo, hi);
        return;
      }
    }
    if (depth >= opt_.depth_cap) {
      std::string cell;
      for (std::size_t j = 0; j < m_; ++j) {
        cell += (j ? "," : "") + Dyadic::from_double(lo[j]).to_string() + ".." +
                Dyadic::from_double(hi[j]).to_string();
      }
      throw DepthExceeded(cell, point_to_string(Point(tag_.begin(), tag_.end())), dc);
    }
    double* clo = &lo_[(depth + 1) * m_];
    double* chi = &hi_[(depth + 1) * m_];
    for (std::size_t c = 0; c < (std::size_t{1} << m_); ++c) {
      for (std::size_t j = 0; j < m_; ++j) {
        const double mid = 0.5 * (lo[j] + hi[j]);
        const bool upper = (c >> j) & 1U;
        clo[j] = upper ? mid : lo[j];
        chi[j] = upper ? hi[j] : mid;
      }
      visit(depth + 1);
    }
  }

  const Integrand& f_;
  const GaugeSchedule& g_;
  const IntegratorOptions& opt_;
  std::size_t m_, d_;
  Accumulator acc_;
  std::vector<double> lo_, hi_, val_, tag_, alt_;
  Point Jlo_, Jhi_;
  std::mt19937_64* rng_;
  Kind kind_;
  std::size_t cells_ = 0;
};

/// J cut by the planes strictly inside it (lexicographic order of the parts).
inline std::vector<Box> split_at(const Box& J, const Integrand::Breakpoints& planes) {
  std::vector<Box> parts{J};
  for (std::size_t j = 0; j < planes.size(); ++j) {
    std::vector<Dyadic> cuts{J.lo(j)};
    for (const double c : planes[j]) {
      const Dyadic x = Dyadic::from_double(c);
      if (J.lo(j) < x && x < J.hi(j)) cuts.push_back(x);
    }
    cuts.push_back(J.hi(j));
    if (cuts.size() == 2) continue;
    std::vector<Box> next;
    for (const Box& b : parts) {
      for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        std::vector<Dyadic> lo = b.lo(), hi = b.hi();
        lo[j] = cuts[k];
        hi[j] = cuts[k + 1];
        next.emplace_back(std::move(lo), std::move(hi));
      }
    }
    parts = std::move(next);
  }
  return parts;
}

}  // namespace detail

/// One Riemann sum over the Cousin partition of J for the level-n gauge; declared
/// breakpoint planes cut J first and each part is partitioned for its own schedule.
inline VectorValue riemann_sum_at_level(const Integrand& f, const Box& J, int n, Kind kind,
                                        const IntegratorOptions& opt, std::size_t* cells = nullptr,
                                        std::mt19937_64* retag = nullptr) {
  J.require_dim(f.dim_in());
  VectorValue sum(f.dim_out());
  std::size_t used = 0;
  IntegratorOptions o = opt;
  for (const Box& part : detail::split_at(J, f.breakpoints())) {
    // Each part runs its own schedule, so level n refines every part.
    const GaugeSchedule g(part.max_side().to_double(), n, f.singularities(), f.interface_distance());
    o.max_cells = opt.max_cells - used;
    detail::Walker w(f, g, o, part, retag, kind);
    w.run();
    used += w.cells();
    sum += w.sum();
  }
  if (cells) *cells = used;
  return sum;
}

/// Drives δ_n = 2^-n-scaled gauges through Cousin partitions of J until two
/// consecutive sums agree within tol/2 twice in a row.
inline IntegrationResult integrate_box(const Integrand& f, const Box& J, Kind kind, double tol,
                                       const IntegratorOptions& opt = {}) {
  if (!(tol > 0.0)) throw std::invalid_argument("integrate_box: tol must be positive");
  J.require_dim(f.dim_in());
  IntegrationResult r;
  int agreements = 0;
  for (int n = 0; n <= opt.max_level; ++n) {
    TraceRow row;
    row.level = n;
    row.scale = std::ldexp(1.0, -n);
    try {
      row.sum = riemann_sum_at_level(f, J, n, kind, opt, &row.cells);
    } catch (const detail::CellLimit&) {
      r.status = Status::NoConvergence;
      r.note = "cell budget exhausted at level " + std::to_string(n);
      break;
    } catch (const DepthExceeded& e) {
      r.status = Status::DepthExceeded;
      r.note = e.what();
      break;
    }
    r.cells = row.cells;
    if (!r.trace.empty()) {
      const double diff = (row.sum - r.trace.back().sum).norm(opt.norm);
      agreements = diff < tol / 2.0 ? agreements + 1 : 0;
      r.error_estimate = diff;
    }
    r.trace.push_back(std::move(row));
    r.value = r.trace.back().sum;
    if (agreements >= 2) {
      const std::size_t k = r.trace.size();
      r.error_estimate = std::max((r.trace[k - 1].sum - r.trace[k - 2].sum).norm(opt.norm),
                                  (r.trace[k - 2].sum - r.trace[k - 3].sum).norm(opt.norm));
      if (kind == Kind::M && opt.random_tag_pass) {
        // Same cells, re-drawn tags; refine further while the two sums disagree.
        std::mt19937_64 rng(opt.seed + static_cast<std::uint64_t>(n));
        VectorValue alt;
        try {
          alt = riemann_sum_at_level(f, J, n, kind, opt, nullptr, &rng);
        } catch (const detail::CellLimit&) {
          r.note = "cell budget exhausted in the re-tagged pass";
          break;
        }
        r.tag_spread = (alt - r.value).norm(opt.norm);
        if (r.tag_spread > tol) {
          r.note = "tag-sensitive: re-tagged sum differs by " + std::to_string(r.tag_spread);
          continue;
        }
        r.note.clear();
      }
      r.status = Status::Converged;
      break;
    }
  }
  if (r.status == Status::NoConvergence && r.note.empty()) r.note = "max level reached";
  return r;
}

/// F(I) with a per-call error bound.
struct IntervalValue {
  VectorValue value;
  double error = 0.0;
};

/// Additive interval function: closed-form corner sums or numeric integrals.
class AdditiveIntervalFunction {
 public:
  using Eval = std::function<IntervalValue(const double* lo, const double* hi)>;

  AdditiveIntervalFunction() = default;
  AdditiveIntervalFunction(std::string provenance, std::size_t m, std::size_t d, Eval e,
                           bool cached = false)
      : provenance_(std::move(provenance)),
        m_(m),
        d_(d),
        eval_(std::move(e)),
        cache_(cached ? std::make_shared<Cache>() : nullptr) {}

  IntervalValue operator()(const double* lo, const double* hi) const {
    if (!cache_) return eval_(lo, hi);
    std::vector<double> key(lo, lo + m_);
    key.insert(key.end(), hi, hi + m_);
    {
      std::lock_guard<std::mutex> lock(cache_->mu);
      auto it = cache_->map.find(key);
      if (it != cache_->map.end()) return it->second;
    }
    IntervalValue v = eval_(lo, hi);
    std::lock_guard<std::mutex> lock(cache_->mu);
    cache_->map.emplace(std::move(key), v);
    return v;
  }
  IntervalValue operator()(const Box& I) const {
    I.require_dim(m_);
    if (!box_doubles_exact(I)) throw std::invalid_argument("interval function: box not double-exact");
    const Point lo = I.lo_point();
    const Point hi = I.hi_point();
    return (*this)(lo.data(), hi.data());
  }

  /// Seeds the cache with an externally computed value (no-op without a cache).
  void prime(const double* lo, const double* hi, IntervalValue v) const {
    if (!cache_) return;
    std::vector<double> key(lo, lo + m_);
    key.insert(key.end(), hi, hi + m_);
    std::lock_guard<std::mutex> lock(cache_->mu);
    cache_->map.emplace(std::move(key), std::move(v));
  }

  const std::string& provenance() const { return provenance_; }
  std::size_t dim_in() const { return m_; }
  std::size_t dim_out() const { return d_; }
  bool numeric() const { return cache_ != nullptr; }
  std::size_t cache_size() const {
    if (!cache_) return 0;
    std::lock_guard<std::mutex> lock(cache_->mu);
    return cache_->map.size();
  }

 private:
  static bool box_doubles_exact(const Box& b) {
    for (std::size_t j = 0; j < b.dim(); ++j) {
      if (!b.lo(j).exactly_representable() || !b.hi(j).exactly_representable()) return false;
    }
    return true;
  }
  struct KeyHash {
    std::size_t operator()(const std::vector<double>& k) const noexcept {
      std::size_t h = 0;
      for (const double x : k) h = h * 1000003U ^ std::hash<double>{}(x);
      return h;
    }
  };
  struct Cache {
    std::mutex mu;
    std::unordered_map<std::vector<double>, IntervalValue, KeyHash> map;
  };

  std::string provenance_;
  std::size_t m_ = 0;
  std::size_t d_ = 0;
  Eval eval_;
  std::shared_ptr<Cache> cache_;
};

/// F([a,b]) = Σ_corners (-1)^{#lower coordinates} Φ(corner).
inline AdditiveIntervalFunction corner_sum_primitive(Integrand::Kernel phi, std::size_t m,
                                                     std::size_t d, std::string name = "Phi") {
  return AdditiveIntervalFunction(
      "corner-sum:" + name, m, d, [phi = std::move(phi), m, d](const double* lo, const double* hi) {
        IntervalValue r{VectorValue(d), 0.0};
        std::vector<double> c(m), v(d);
        double mag = 0.0;
        for (std::size_t k = 0; k < (std::size_t{1} << m); ++k) {
          int lower = 0;
          for (std::size_t j = 0; j < m; ++j) {
            const bool up = (k >> j) & 1U;
            c[j] = up ? hi[j] : lo[j];
            lower += up ? 0 : 1;
          }
          phi(c.data(), v.data());
          const double sgn = (lower % 2) ? -1.0 : 1.0;
          for (std::size_t i = 0; i < d; ++i) {
            r.value[i] += sgn * v[i];
            mag = std::max(mag, std::abs(v[i]));
          }
        }
        r.error = mag * static_cast<double>(std::size_t{1} << m) * 4.0 *
                  std::numeric_limits<double>::epsilon();
        return r;
      });
}

/// F(I) = |I| (primitive of f ≡ 1).
inline AdditiveIntervalFunction measure_function(std::size_t m) {
  return corner_sum_primitive(
      [m](const double* t, double* out) {
        double p = 1.0;
        for (std::size_t j = 0; j < m; ++j) p *= t[j];
        out[0] = p;
      },
      m, 1, "prod(t)");
}

/// F(I) = ∫_I f computed by integrate_box with tolerance max(density·|I|, floor);
/// values are cached by exact box.
inline AdditiveIntervalFunction numeric_primitive(const Integrand& f, Kind kind,
                                                  double tol_density, double tol_floor,
                                                  IntegratorOptions opt = {}) {
  const std::size_t m = f.dim_in();
  return AdditiveIntervalFunction(
      std::string("numeric:") + to_string(kind) + ":" + f.name(), m, f.dim_out(),
      [f, kind, tol_density, tol_floor, opt, m](const double* lo, const double* hi) {
        std::vector<Dyadic> l, h;
        double vol = 1.0;
        for (std::size_t j = 0; j < m; ++j) {
          l.push_back(Dyadic::from_double(lo[j]));
          h.push_back(Dyadic::from_double(hi[j]));
          vol *= hi[j] - lo[j];
        }
        const double tol = std::max(tol_density * vol, tol_floor);
        const IntegrationResult r = integrate_box(f, Box(std::move(l), std::move(h)), kind, tol, opt);
        if (!r.converged()) {
          throw EvaluationError("numeric primitive: " + std::string(to_string(r.status)) + " (" +
                                    r.note + ")",
                                Point(lo, lo + m));
        }
        return IntervalValue{r.value, std::max(r.error_estimate, tol)};
      },
      true);
}

struct LocalReport {
  Box J;
  VectorValue integral;
  VectorValue primitive;
  double residual = 0.0;
  double budget = 0.0;
  Status status = Status::NoConvergence;
  bool ok() const { return status == Status::Converged && residual < budget; }
};

/// ‖∫_J f − F(J)‖ for J inside W°.
inline LocalReport locally_integrate(const Integrand& f, const Region& W,
                                     const AdditiveIntervalFunction& F, const Box& J, Kind kind,
                                     double tol, const IntegratorOptions& opt = {}) {
  if (W.classify(J) != CellClass::Inside) {
    throw std::invalid_argument("locally_integrate: " + J.to_string() + " is not inside W°");
  }
  LocalReport rep{J, {}, {}, 0.0, 0.0, Status::NoConvergence};
  const IntegrationResult r = integrate_box(f, J, kind, tol, opt);
  const IntervalValue fv = F(J);
  rep.integral = r.value;
  rep.primitive = fv.value;
  rep.status = r.status;
  rep.residual = (r.value - fv.value).norm(opt.norm);
  rep.budget = tol + fv.error;
  return rep;
}

/// Boxes for the batch sweep: exhaustion-style boxes shrunk into W° plus random
/// dyadic sub-boxes of certified cells.
inline std::vector<Box> local_test_boxes(const Region& W, const std::vector<Box>& cells,
                                         std::size_t count, std::uint64_t seed) {
  std::vector<Box> out;
  if (cells.empty()) return out;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, cells.size() - 1);
  std::uniform_int_distribution<int> grid(0, 7);
  for (std::size_t i = 0; i < count; ++i) {
    const Box& c = cells[pick(rng)];
    std::vector<Dyadic> lo, hi;
    for (std::size_t j = 0; j < c.dim(); ++j) {
      int a = grid(rng);
      int b = grid(rng);
      if (a > b) std::swap(a, b);
      ++b;
      const Dyadic step = c.side(j).ldexp(-3);
      lo.push_back(c.lo(j) + step * Dyadic(a));
      hi.push_back(c.lo(j) + step * Dyadic(b));
    }
    Box b(std::move(lo), std::move(hi));
    if (W.classify(b) == CellClass::Inside) out.push_back(std::move(b));
  }
  return out;
}

inline std::vector<LocalReport> locally_integrate_batch(const Integrand& f, const Region& W,
                                                        const AdditiveIntervalFunction& F,
                                                        const std::vector<Box>& boxes, Kind kind,
                                                        double tol,
                                                        const IntegratorOptions& opt = {}) {
  std::vector<LocalReport> out;
  out.reserve(boxes.size());
  for (const Box& J : boxes) out.push_back(locally_integrate(f, W, F, J, kind, tol, opt));
  return out;
}

}  // namespace gauge_quad
