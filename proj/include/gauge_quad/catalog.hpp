#pragma once

#include "gauge_quad/hake.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gauge_quad {

struct CatalogCase {
  std::string id;
  std::size_t m = 1;
  std::size_t d = 1;
  std::string region;
  Integrand f;
  std::optional<Integrand::Kernel> phi;
  VectorValue expected;
  std::string provenance;
  /// Expected verdicts: "PASS" / "FAIL".
  std::string hake_m = "PASS";
  std::string hake_hk = "PASS";
  /// Exhaustion levels for the equivalence check.
  int levels = 1;
  /// Box used for plain integrate_box runs (closed-form oracle over it).
  std::string box;

  Region make_region() const { return parse_region(region); }
  AdditiveIntervalFunction primitive() const {
    if (!phi) throw std::logic_error("catalog case " + id + " has no closed-form primitive");
    return corner_sum_primitive(*phi, m, d, id);
  }
};

namespace detail {

inline Integrand::Kernel product_phi(std::size_t m) {
  return [m](const double* t, double* out) {
    double p = 1.0;
    for (std::size_t j = 0; j < m; ++j) p *= t[j];
    out[0] = p;
  };
}

inline CatalogCase constant_case(std::size_t m) {
  CatalogCase c;
  c.id = "const_" + std::to_string(m) + "d";
  c.m = m;
  c.region = m == 1 ? "open:0..1" : (m == 2 ? "open:0..1,0..1" : "open:0..1,0..1,0..1");
  c.box = m == 1 ? "0..1" : (m == 2 ? "0..1,0..1" : "0..1,0..1,0..1");
  c.f = Integrand::scalar(c.id, m, [](const double*) { return 1.0; }).with_sup_norm(1.0);
  c.phi = product_phi(m);
  c.expected = {1.0};
  c.provenance = "|(0,1)^m| = 1";
  return c;
}

}  // namespace detail

inline std::vector<CatalogCase> catalog_cases() {
  std::vector<CatalogCase> out;
  for (std::size_t m = 1; m <= 3; ++m) out.push_back(detail::constant_case(m));

  {
    CatalogCase c;
    c.id = "inv_sqrt";
    c.region = "open:0..1";
    c.box = "0..1";
    c.f = Integrand::scalar("inv_sqrt", 1, [](const double* t) { return t[0] > 0.0 ? 1.0 / std::sqrt(t[0]) : 0.0; })
              .with_singularity(Singularity{{0.0}, 1.0, 3.0, 1.0});
    c.phi = [](const double* t, double* out) { out[0] = t[0] > 0.0 ? 2.0 * std::sqrt(t[0]) : 0.0; };
    c.expected = {2.0};
    c.provenance = "Phi(x) = 2 sqrt(x), f(0) := 0";
    out.push_back(std::move(c));
  }
  {
    CatalogCase c;
    c.id = "exp_decay";
    c.region = "halfline:0..inf";
    c.box = "0..4";
    c.f = Integrand::scalar("exp_decay", 1, [](const double* t) { return std::exp(-t[0]); });
    c.phi = [](const double* t, double* out) { out[0] = -std::exp(-t[0]); };
    c.expected = {1.0};
    c.provenance = "Phi(x) = -exp(-x); over the box [0,4]: 1 - exp(-4)";
    c.levels = 5;
    out.push_back(std::move(c));
  }
  {
    CatalogCase c;
    c.id = "gaussian_2d";
    c.m = 2;
    c.region = "open:0..inf,0..inf";
    c.box = "0..2,0..2";
    c.f = Integrand::scalar("gaussian_2d", 2, [](const double* t) { return std::exp(-t[0] * t[0] - t[1] * t[1]); })
              .with_sup_norm(1.0);
    c.phi = [](const double* t, double* out) {
      out[0] = std::numbers::pi / 4.0 * std::erf(t[0]) * std::erf(t[1]);
    };
    c.expected = {std::numbers::pi / 4.0};
    c.provenance = "Phi(x,y) = (pi/4) erf(x) erf(y); quadrant integral pi/4";
    c.levels = 3;
    out.push_back(std::move(c));
  }
  {
    CatalogCase c;
    c.id = "hk_only";
    c.region = "open:0..1";
    c.box = "0..1";
    c.f = Integrand::scalar("hk_only", 1,
                            [](const double* t) {
                              const double x = t[0];
                              if (x == 0.0) return 0.0;
                              const double u = 1.0 / (x * x);
                              return 2.0 * x * std::sin(u) - 2.0 / x * std::cos(u);
                            })
              .with_singularity(Singularity{{0.0}, 3.0, 1.0, 1.0});
    c.phi = [](const double* t, double* out) {
      const double x = t[0];
      out[0] = x == 0.0 ? 0.0 : x * x * std::sin(1.0 / (x * x));
    };
    c.expected = {std::sin(1.0)};
    c.provenance = "Phi(x) = x^2 sin(x^-2), Phi(0) = 0; Phi(1) - Phi(0) = sin 1";
    c.hake_m = "FAIL";
    out.push_back(std::move(c));
  }
  {
    CatalogCase c;
    c.id = "ae_zero";
    c.region = "open:0..1";
    c.box = "0..1";
    const std::vector<Point> set{{0.25}, {0.5}, {0.75}};
    c.f = Integrand::scalar("zero", 1, [](const double*) { return 0.0; }).modified_at(set, {1.0});
    c.phi = [](const double*, double* out) { out[0] = 0.0; };
    c.expected = {0.0};
    c.provenance = "indicator of {1/4, 1/2, 3/4}: zero almost everywhere";
    out.push_back(std::move(c));
  }
  {
    CatalogCase c;
    c.id = "square_minus_segment";
    c.m = 2;
    c.region = "predicate:square-minus-segment";
    c.box = "0..1,0..1";
    c.f = Integrand::scalar("one", 2, [](const double*) { return 1.0; }).with_sup_norm(1.0);
    c.phi = detail::product_phi(2);
    c.expected = {1.0};
    c.provenance = "the removed segment {1/2} x [0,1] has measure 0";
    out.push_back(std::move(c));
  }
  {
    CatalogCase c;
    c.id = "vector_valued";
    c.d = 2;
    c.region = "open:0..1";
    c.box = "0..1";
    c.f = Integrand("vector_valued", 1, 2, [](const double* t, double* out) {
      out[0] = 1.0;
      out[1] = t[0];
    });
    c.phi = [](const double* t, double* out) {
      out[0] = t[0];
      out[1] = t[0] * t[0] / 2.0;
    };
    c.expected = {1.0, 0.5};
    c.provenance = "componentwise: (x, x^2/2)";
    out.push_back(std::move(c));
  }
  {
    CatalogCase c;
    c.id = "disc2d";
    c.m = 2;
    c.region = "predicate:disc2d";
    c.box = "-1..1,-1..1";
    c.f = Integrand::scalar("one", 2, [](const double*) { return 1.0; }).with_sup_norm(1.0);
    c.phi = detail::product_phi(2);
    c.expected = {std::numbers::pi};
    c.provenance = "area of the unit disc";
    out.push_back(std::move(c));
  }
  {
    CatalogCase c;
    c.id = "poly_1d";
    c.region = "closed:0..1";
    c.box = "0..1";
    c.f = Integrand::scalar("x^2", 1, [](const double* t) { return t[0] * t[0]; });
    c.phi = [](const double* t, double* out) { out[0] = t[0] * t[0] * t[0] / 3.0; };
    c.expected = {1.0 / 3.0};
    c.provenance = "Phi(x) = x^3/3";
    out.push_back(std::move(c));
  }
  {
    CatalogCase c;
    c.id = "sin_sin_2d";
    c.m = 2;
    c.region = "closed:0..3.140625,0..3.140625";
    c.box = "0..3.140625,0..3.140625";
    c.f = Integrand::scalar("sin*sin", 2, [](const double* t) { return std::sin(t[0]) * std::sin(t[1]); })
              .with_sup_norm(1.0);
    c.phi = [](const double* t, double* out) { out[0] = std::cos(t[0]) * std::cos(t[1]); };
    const double a = 1.0 - std::cos(3.140625);
    c.expected = {a * a};
    c.provenance = "Phi(x,y) = cos x cos y; pi snapped to the dyadic 3.140625";
    out.push_back(std::move(c));
  }
  return out;
}

inline CatalogCase catalog_case(const std::string& id) {
  for (CatalogCase& c : catalog_cases()) {
    if (c.id == id) return c;
  }
  std::string ids;
  for (const CatalogCase& c : catalog_cases()) ids += (ids.empty() ? "" : ", ") + c.id;
  throw std::invalid_argument("unknown catalog case '" + id + "' (known: " + ids + ")");
}

/// Function grammar: a catalog id, "const:C" (m from the box/region) or
/// "poly:a0,a1,..." (one-dimensional polynomial).
inline Integrand parse_function(const std::string& spec, std::size_t m) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) return catalog_case(spec).f;
  const std::string kind = spec.substr(0, colon);
  const std::string args = spec.substr(colon + 1);
  std::vector<double> coef;
  std::size_t start = 0;
  while (start <= args.size()) {
    const auto c = args.find(',', start);
    const std::string tok = args.substr(start, c == std::string::npos ? std::string::npos : c - start);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (tok.empty() || used != tok.size()) throw std::invalid_argument("function '" + spec + "': bad number '" + tok + "'");
    coef.push_back(v);
    if (c == std::string::npos) break;
    start = c + 1;
  }
  if (kind == "const") {
    if (coef.size() != 1) throw std::invalid_argument("function '" + spec + "': const takes one value");
    const double v = coef.front();
    return Integrand::scalar(spec, m, [v](const double*) { return v; }).with_sup_norm(std::abs(v));
  }
  if (kind == "poly") {
    if (m != 1) throw std::invalid_argument("function '" + spec + "': poly is one-dimensional");
    return Integrand::scalar(spec, 1, [coef](const double* t) {
      double acc = 0.0;
      for (auto it = coef.rbegin(); it != coef.rend(); ++it) acc = acc * t[0] + *it;
      return acc;
    });
  }
  throw std::invalid_argument("function '" + spec + "': expected a catalog id, const:C or poly:a0,a1,...");
}

}  // namespace gauge_quad
