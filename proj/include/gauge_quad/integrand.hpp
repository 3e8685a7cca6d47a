#pragma once

#include "gauge_quad/region.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gauge_quad {

/// Evaluation failed (non-finite value, unknown membership, ...). Carries the tag.
class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(const std::string& what, Point tag)
      : std::runtime_error(what + " at t=(" + point_to_string(tag) + ")"), tag_(std::move(tag)) {}
  const Point& tag() const { return tag_; }

 private:
  Point tag_;
};

/// Declared point where f is singular or was modified. The integrator sharpens its
/// gauge there: δ_n(t) = 2^-n · min(D, scale · |t - at|^order) away from the point
/// and δ_n(at) = D · 2^(-rate·n) at the point. order 0 only shrinks δ at the point.
struct Singularity {
  Point at;
  double order = 0.0;
  double rate = 2.0;
  double scale = 1.0;
};

/// f: R^m -> R^d, evaluated through a raw-pointer kernel for speed.
class Integrand {
 public:
  using Kernel = std::function<void(const double* t, double* out)>;

  Integrand() = default;
  Integrand(std::string name, std::size_t dim_in, std::size_t dim_out, Kernel k)
      : name_(std::move(name)), m_(dim_in), d_(dim_out), kernel_(std::move(k)) {
    if (m_ == 0 || d_ == 0) throw std::invalid_argument("Integrand: dimensions must be positive");
  }

  /// Scalar convenience constructor.
  static Integrand scalar(std::string name, std::size_t dim_in,
                          std::function<double(const double*)> fn) {
    return Integrand(std::move(name), dim_in, 1,
                     [fn = std::move(fn)](const double* t, double* out) { out[0] = fn(t); });
  }

  const std::string& name() const { return name_; }
  std::size_t dim_in() const { return m_; }
  std::size_t dim_out() const { return d_; }

  /// Raw evaluation; throws EvaluationError on non-finite output.
  void eval(const double* t, double* out) const {
    kernel_(t, out);
    for (std::size_t i = 0; i < d_; ++i) {
      if (!std::isfinite(out[i])) {
        throw EvaluationError(name_ + ": non-finite value", Point(t, t + m_));
      }
    }
  }
  VectorValue operator()(const Point& t) const {
    if (t.size() != m_) throw DimensionMismatch(name_ + ": point dimension mismatch");
    std::vector<double> out(d_);
    eval(t.data(), out.data());
    return VectorValue(std::move(out));
  }

  /// Optional closed-form point primitive Φ (∂^m Φ / ∂t_1..∂t_m = f).
  const std::optional<Kernel>& primitive() const { return primitive_; }
  Integrand& with_primitive(Kernel phi) {
    primitive_ = std::move(phi);
    return *this;
  }
  const std::vector<Singularity>& singularities() const { return singular_; }
  Integrand& with_singularity(Singularity s) {
    if (s.at.size() != m_) throw DimensionMismatch(name_ + ": singularity dimension mismatch");
    singular_.push_back(std::move(s));
    return *this;
  }
  /// Lower bound on the distance to a set where f may jump (e.g. ∂G for a zero
  /// extension). The integrator refines toward it.
  using Distance = std::function<double(const double* t)>;
  const Distance& interface_distance() const { return interface_; }
  Integrand& with_interface(Distance d) {
    interface_ = std::move(d);
    return *this;
  }
  /// Axis-aligned planes {t_j = c} where f may jump. Cousin partitions are built
  /// on the sub-boxes these planes cut the integration box into.
  using Breakpoints = std::vector<std::vector<double>>;
  const Breakpoints& breakpoints() const { return breaks_; }
  Integrand& with_breakpoints(Breakpoints b) {
    if (!b.empty() && b.size() != m_) throw DimensionMismatch(name_ + ": breakpoint axes mismatch");
    for (auto& v : b) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    breaks_ = std::move(b);
    return *this;
  }
  /// sup ‖f‖ when known (used for collar bounds).
  const std::optional<double>& sup_norm() const { return sup_; }
  Integrand& with_sup_norm(double s) {
    sup_ = s;
    return *this;
  }

  /// f_J: f on the closed box J, zero elsewhere.
  Integrand restricted_to(const Box& J) const {
    auto lo = std::make_shared<Point>(J.lo_point());
    auto hi = std::make_shared<Point>(J.hi_point());
    Integrand g(name_ + "|J", m_, d_, [self = *this, lo, hi](const double* t, double* out) {
      for (std::size_t j = 0; j < self.m_; ++j) {
        if (t[j] < (*lo)[j] || t[j] > (*hi)[j]) {
          std::fill(out, out + self.d_, 0.0);
          return;
        }
      }
      self.eval(t, out);
    });
    g.singular_ = singular_;
    g.interface_ = interface_;
    g.breaks_ = breaks_;
    g.sup_ = sup_;
    return g;
  }

  /// f with its values replaced by `value` on the finite set `points`.
  Integrand modified_at(std::vector<Point> points, std::vector<double> value) const {
    if (value.size() != d_) throw DimensionMismatch(name_ + ": modification value dimension");
    auto pts = std::make_shared<std::vector<Point>>(std::move(points));
    Integrand g(name_ + "~", m_, d_,
                [self = *this, pts, value](const double* t, double* out) {
                  for (const Point& p : *pts) {
                    if (std::equal(p.begin(), p.end(), t)) {
                      std::copy(value.begin(), value.end(), out);
                      return;
                    }
                  }
                  self.eval(t, out);
                });
    g.singular_ = singular_;
    g.interface_ = interface_;
    g.breaks_ = breaks_;
    for (const Point& p : *pts) g.singular_.push_back(Singularity{p, 0.0, 2.0, 1.0});
    return g;
  }

  /// α f + β g (same dimensions).
  friend Integrand combine(double alpha, const Integrand& f, double beta, const Integrand& g) {
    if (f.m_ != g.m_ || f.d_ != g.d_) throw DimensionMismatch("combine: dimension mismatch");
    Integrand h("(" + f.name_ + "+" + g.name_ + ")", f.m_, f.d_,
                [f, g, alpha, beta](const double* t, double* out) {
                  std::vector<double> tmp(f.d_);
                  f.eval(t, out);
                  g.eval(t, tmp.data());
                  for (std::size_t i = 0; i < f.d_; ++i) out[i] = alpha * out[i] + beta * tmp[i];
                });
    h.singular_ = f.singular_;
    h.singular_.insert(h.singular_.end(), g.singular_.begin(), g.singular_.end());
    return h;
  }

 private:
  std::string name_;
  std::size_t m_ = 0;
  std::size_t d_ = 0;
  Kernel kernel_;
  std::optional<Kernel> primitive_;
  std::vector<Singularity> singular_;
  Distance interface_;
  Breakpoints breaks_;
  std::optional<double> sup_;
};

}  // namespace gauge_quad
