#pragma once

#include "gauge_quad/catalog.hpp"
#include "gauge_quad/report.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace gauge_quad {

/// Settings shared by all subcommands.
struct RunConfig {
  double tol = 0.0;  // 0: subcommand default
  std::uint64_t seed = 7;
  int jobs = 1;
  std::string mode = "mcshane";
  std::string report = "text";
  std::string output;
  std::string trace;
  int levels = -1;  // -1: catalog default
  int divisions = 2;
  std::size_t partitions_per_scale = 6;
  std::string norm = "max";
};

namespace detail {

inline Kind parse_mode(const std::string& s) {
  if (s == "mcshane" || s == "m") return Kind::M;
  if (s == "hk") return Kind::HK;
  throw std::invalid_argument("mode must be mcshane or hk, got '" + s + "'");
}

inline void emit(const RunConfig& cfg, const std::string& text, std::ostream& out) {
  if (cfg.output.empty()) {
    out << text;
    return;
  }
  std::ofstream f(cfg.output);
  if (!f) throw std::runtime_error("cannot write " + cfg.output);
  f << text;
}

inline void emit_trace(const RunConfig& cfg, const std::vector<TraceRow>& trace) {
  if (cfg.trace.empty()) return;
  std::ofstream f(cfg.trace);
  if (!f) throw std::runtime_error("cannot write " + cfg.trace);
  write_trace_csv(f, trace);
}

inline std::string value_text(const VectorValue& v) {
  std::ostringstream s;
  s.precision(12);
  for (std::size_t i = 0; i < v.dim(); ++i) s << (i ? " " : "") << v[i];
  return s.str();
}

inline IntegratorOptions integrator_options(const RunConfig& cfg) {
  IntegratorOptions o;
  o.seed = cfg.seed;
  o.norm = cfg.norm == "euclidean" ? Norm::Euclidean : Norm::Max;
  return o;
}

inline HakeOptions hake_options(const RunConfig& cfg) {
  HakeOptions o;
  o.seed = cfg.seed;
  o.jobs = cfg.jobs;
  o.divisions = cfg.divisions;
  o.partitions_per_scale = cfg.partitions_per_scale;
  o.integrator.seed = cfg.seed;
  o.integrator.norm = cfg.norm == "euclidean" ? Norm::Euclidean : Norm::Max;
  return o;
}

// Function + region from --case or --function/--region.
struct Problem {
  Integrand f;
  Region region;
  std::optional<CatalogCase> catalog;
};

inline Problem resolve_problem(const std::string& case_id, const std::string& function, const std::string& region) {
  if (!case_id.empty()) {
    CatalogCase c = catalog_case(case_id);
    Region r = region.empty() ? c.make_region() : parse_region(region);
    return Problem{c.f, std::move(r), std::move(c)};
  }
  if (function.empty()) throw std::invalid_argument("need --case or --function");
  if (region.empty()) {
    CatalogCase c = catalog_case(function);
    return Problem{c.f, c.make_region(), c};
  }
  Region r = parse_region(region);
  std::optional<CatalogCase> c;
  if (function.find(':') == std::string::npos) c = catalog_case(function);
  return Problem{parse_function(function, r.dim()), std::move(r), std::move(c)};
}

}  // namespace detail

/// Parses argv and runs one subcommand. Exit codes: 0 Converged/PASS, 1 usage
/// error, 2 FAIL (with witness), 3 INCONCLUSIVE / NoConvergence.
inline int run_command(int argc, const char* const* argv, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
  CLI::App app{"Gauge integrals over boxes and Hake integrals over sets with |G \\ G°| = 0"};
  app.require_subcommand(1);
  app.fallthrough();
  RunConfig cfg;
  app.add_option("--tol", cfg.tol, "Tolerance (default: 1e-6 integrate, 1e-4 otherwise)");
  app.add_option("--seed", cfg.seed, "Seed for every randomized step");
  app.add_option("--jobs", cfg.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--mode", cfg.mode, "mcshane | hk")->check(CLI::IsMember({"mcshane", "hk"}));
  app.add_option("--report", cfg.report, "text | json")->check(CLI::IsMember({"text", "json"}));
  app.add_option("--output", cfg.output, "Write the report (or CSV) to this file");
  app.add_option("--trace", cfg.trace, "Write the refinement trace as CSV");
  app.add_option("--levels", cfg.levels, "Exhaustion levels J_0..J_n");
  app.add_option("--divisions", cfg.divisions, "Divisions used by the Hake checks")->check(CLI::Range(2, 8));
  app.add_option("--partitions-per-scale", cfg.partitions_per_scale, "Sampled partitions per variation scale");
  app.add_option("--norm", cfg.norm, "max | euclidean")->check(CLI::IsMember({"max", "euclidean"}));

  std::string function, box, region, case_id, gauge;
  int generations = 12, depth_cap = 40;
  bool coalesce = false;

  auto* integrate = app.add_subcommand("integrate", "Gauge integral of f over a box");
  integrate->add_option("--function", function, "Catalog id, const:C or poly:a0,a1,...")->required();
  integrate->add_option("--box", box, "Box, e.g. 0..1,0..0.5 (default: the catalog box)");

  auto* hake = app.add_subcommand("hake", "Hake-McShane / Hake-HK integral over a region");
  hake->add_option("--function", function, "Catalog id, const:C or poly:a0,a1,...");
  hake->add_option("--case", case_id, "Catalog case (function and region)");
  hake->add_option("--region", region, "Region, e.g. open:0..1 or predicate:disc2d");

  auto* divide = app.add_subcommand("divide", "Division of G° as CSV");
  divide->add_option("--region", region, "Region")->required();
  divide->add_option("--generations", generations, "Last generation")->check(CLI::Range(0, 40));
  divide->add_flag("--coalesce", coalesce, "Merge same-generation cubes into boxes");

  auto* partition = app.add_subcommand("partition", "δ-fine tagged partition of a box (Cousin bisection)");
  partition->add_option("--box", box, "Box")->required();
  partition->add_option("--gauge", gauge, "const:C, dist-to:P,SCALE, min:(G1,G2), expr:NAME")->required();
  partition->add_option("--depth-cap", depth_cap, "Bisection depth cap")->check(CLI::Range(1, 200));

  auto* verify = app.add_subcommand("verify-equivalence", "Hake integral over G against the zero extension");
  verify->add_option("--case", case_id, "Catalog case");
  verify->add_option("--function", function, "Function (with --region)");
  verify->add_option("--region", region, "Region (with --function)");

  auto* catalog = app.add_subcommand("catalog", "Test-function catalog");
  auto* list = catalog->add_subcommand("list", "List the catalog cases");
  catalog->require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, x;
    const int code = app.exit(e, o, x);
    out << o.str();
    err << x.str();
    return code == 0 ? 0 : 1;
  }

  const bool json = cfg.report == "json";
  try {
    if (*integrate) {
      const double tol = cfg.tol > 0.0 ? cfg.tol : 1e-6;
      std::optional<CatalogCase> c;
      if (function.find(':') == std::string::npos) c = catalog_case(function);
      if (box.empty()) {
        if (!c) throw std::invalid_argument("integrate: --box is required for " + function);
        box = c->box;
      }
      const Box J = parse_box(box);
      const Integrand f = parse_function(function, J.dim());
      const IntegrationResult r = integrate_box(f, J, detail::parse_mode(cfg.mode), tol, detail::integrator_options(cfg));
      detail::emit_trace(cfg, r.trace);
      if (json) {
        Json j = envelope("integrate", Json{{"function", function}, {"box", J.to_string()}, {"mode", cfg.mode}, {"tol", tol}});
        merge(j, to_json(r));
        detail::emit(cfg, j.dump(2) + "\n", out);
      } else {
        std::ostringstream s;
        s << "value " << detail::value_text(r.value) << "\nerror_estimate " << r.error_estimate << "\nstatus "
          << to_string(r.status) << "\ncells " << r.cells << "\n";
        if (!r.note.empty()) s << "note " << r.note << "\n";
        detail::emit(cfg, s.str(), out);
      }
      return r.converged() ? 0 : 3;
    }

    if (*hake) {
      const double tol = cfg.tol > 0.0 ? cfg.tol : 1e-4;
      const detail::Problem p = detail::resolve_problem(case_id, function, region);
      const HakeResult r = hake_integrate(p.f, p.region, detail::parse_mode(cfg.mode), tol, detail::hake_options(cfg));
      detail::emit_trace(cfg, r.integral.trace);
      if (json) {
        Json j = envelope("hake", Json{{"function", p.f.name()},
                                       {"region", p.region.description()},
                                       {"mode", cfg.mode},
                                       {"tol", tol},
                                       {"seed", cfg.seed}});
        merge(j, to_json(r));
        detail::emit(cfg, j.dump(2) + "\n", out);
      } else {
        std::ostringstream s;
        s << "value " << detail::value_text(r.integral.value) << "\nerror_estimate " << r.integral.error_estimate
          << "\nverdict " << to_string(r.verdict) << "\nhake_report " << to_string(r.hake.verdict)
          << "\nvariation_estimate " << to_string(r.variation.verdict);
        if (r.variation.lower_bound) s << " (lower bound " << *r.variation.lower_bound << ")";
        s << "\n";
        if (!r.integral.note.empty()) s << "note " << r.integral.note << "\n";
        detail::emit(cfg, s.str(), out);
      }
      return r.exit_code();
    }

    if (*divide) {
      DivisionOptions o;
      o.coalesce = coalesce;
      const Division d = make_division(parse_region(region), generations, o);
      std::ostringstream s;
      if (json) {
        Json stats = Json::array();
        for (const GenerationStats& g : d.stats()) {
          stats.push_back(Json{{"generation", g.generation},
                               {"new_pieces", g.new_pieces},
                               {"prefix_measure", g.prefix_measure.to_string()},
                               {"uncovered_bound", g.uncovered_bound},
                               {"frontier", g.frontier}});
        }
        Json j = envelope("divide", Json{{"region", region},
                                         {"generations", generations},
                                         {"pieces", d.pieces().size()},
                                         {"exhausted", d.exhausted()},
                                         {"stats", std::move(stats)},
                                         {"diagnostics", d.diagnostics()}});
        s << j.dump(2) << "\n";
      } else {
        write_division_csv(s, d);
      }
      detail::emit(cfg, s.str(), out);
      return 0;
    }

    if (*partition) {
      const Box J = parse_box(box);
      const Gauge delta = parse_gauge(gauge);
      const Kind kind = detail::parse_mode(cfg.mode);
      TaggedPartition p;
      try {
        p = cousin_partition(J, delta, kind, depth_cap);
      } catch (const DepthExceeded& e) {
        err << "DepthExceeded: " << e.what() << "\n";
        return 3;
      }
      const PartitionCheck check = validate_partition(p, delta);
      std::ostringstream s;
      if (json) {
        s << envelope("partition", Json{{"box", J.to_string()},
                                        {"gauge", delta.description()},
                                        {"mode", cfg.mode},
                                        {"cells", p.size()},
                                        {"valid", check.ok()},
                                        {"message", check.message}})
                 .dump(2)
          << "\n";
      } else {
        write_partition_csv(s, p, delta);
      }
      detail::emit(cfg, s.str(), out);
      return check.ok() ? 0 : 2;
    }

    if (*verify) {
      const double tol = cfg.tol > 0.0 ? cfg.tol : 1e-4;
      const detail::Problem p = detail::resolve_problem(case_id, function, region);
      const Kind kind = detail::parse_mode(cfg.mode);
      EquivalenceOptions o;
      o.hake = detail::hake_options(cfg);
      o.levels = cfg.levels >= 0 ? cfg.levels : (p.catalog ? p.catalog->levels : 6);
      const AdditiveIntervalFunction F = hake_primitive(p.f, kind, tol, 1.0, o.hake.integrator);
      const EquivalenceReport r = equivalence_check(p.f, F, p.region, kind, tol, o);
      detail::emit_trace(cfg, r.hake.integral.trace);
      if (json) {
        Json j = envelope("verify-equivalence", Json{{"function", p.f.name()},
                                                     {"region", p.region.description()},
                                                     {"mode", cfg.mode},
                                                     {"tol", tol},
                                                     {"levels", o.levels},
                                                     {"seed", cfg.seed}});
        merge(j, to_json(r));
        detail::emit(cfg, j.dump(2) + "\n", out);
      } else {
        std::ostringstream s;
        s << "hake_value " << detail::value_text(r.hake.integral.value) << "\nh_integral "
          << detail::value_text(r.h_integral) << "\nround_trip " << r.round_trip << "\nverdict "
          << to_string(r.verdict) << "\n";
        if (r.witness) {
          s << "witness clause " << r.witness->clause << " box " << r.witness->I.to_string() << " residual "
            << r.witness->residual << "\n";
        }
        if (!r.note.empty()) s << "note " << r.note << "\n";
        detail::emit(cfg, s.str(), out);
      }
      return r.exit_code();
    }

    if (*list) {
      std::ostringstream s;
      if (json) {
        Json cases = Json::array();
        for (const CatalogCase& c : catalog_cases()) {
          cases.push_back(Json{{"id", c.id},
                               {"m", c.m},
                               {"d", c.d},
                               {"region", c.region},
                               {"box", c.box},
                               {"expected", to_json(c.expected)},
                               {"hake_mcshane", c.hake_m},
                               {"hake_hk", c.hake_hk},
                               {"provenance", c.provenance}});
        }
        s << envelope("catalog list", Json{{"cases", std::move(cases)}}).dump(2) << "\n";
      } else {
        for (const CatalogCase& c : catalog_cases()) {
          s << c.id << "  m=" << c.m << " d=" << c.d << "  " << c.region << "  expected " << detail::value_text(c.expected)
            << "  (" << c.provenance << ")\n";
        }
      }
      detail::emit(cfg, s.str(), out);
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}

}  // namespace gauge_quad
