// Library walk-through: a box integral, a division, and a Hake integral with
// its equivalence check.

#include "gauge_quad.hpp"

#include <cmath>
#include <iostream>

using namespace gauge_quad;

int main() {
  // McShane integral of x^2 over [0,1].
  const Integrand sq = Integrand::scalar("x^2", 1, [](const double* t) { return t[0] * t[0]; });
  const IntegrationResult box = integrate_box(sq, parse_box("0..1"), Kind::M, 1e-8);
  std::cout << "int_[0,1] x^2 = " << box.value[0] << " (" << to_string(box.status) << ", " << box.cells
            << " cells)\n";

  // First generations of the dyadic division of the open unit disc.
  const Division disc = make_division(parse_region("predicate:disc2d"), 8);
  std::cout << "disc division: " << disc.pieces().size() << " pieces, covered "
            << disc.stats().back().prefix_measure.to_double() << " of pi\n";

  // Hake-McShane integral of 1/sqrt(x) over (0,1), then the same value from
  // the zero extension integrated over boxes. The declared singularity makes
  // the gauge 2^-n |t| near 0 and 2^-3n at 0.
  const Integrand inv_sqrt =
      Integrand::scalar("1/sqrt(x)", 1, [](const double* t) { return t[0] > 0.0 ? 1.0 / std::sqrt(t[0]) : 0.0; })
          .with_singularity(Singularity{{0.0}, 1.0, 3.0, 1.0});
  const Region G = parse_region("open:0..1");
  const HakeResult hake = hake_integrate(inv_sqrt, G, Kind::M, 1e-4);
  std::cout << "Hake-McShane: " << hake.integral.value[0] << " verdict " << to_string(hake.verdict)
            << ", variation " << to_string(hake.variation.verdict) << "\n";

  const auto F = corner_sum_primitive([](const double* t, double* out) { out[0] = 2.0 * std::sqrt(t[0]); }, 1, 1);
  EquivalenceOptions opt;
  opt.levels = 1;
  const EquivalenceReport eq = equivalence_check(inv_sqrt, F, G, Kind::M, 1e-4, opt);
  std::cout << "zero extension: " << eq.h_integral[0] << ", round trip " << eq.round_trip << ", verdict "
            << to_string(eq.verdict) << "\n";
  return eq.exit_code();
}
