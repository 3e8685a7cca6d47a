#pragma once

#include "gauge_quad/hake.hpp"

#include "json.hpp"

#include <ostream>
#include <string>

namespace gauge_quad {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchema = "gauge-quad/1";

inline Json to_json(const VectorValue& v) { return Json(v.components()); }

inline Json to_json(const TraceRow& r) {
  return Json{{"level", r.level}, {"scale", r.scale}, {"sum", to_json(r.sum)}, {"cells", r.cells}};
}

inline Json to_json(const IntegrationResult& r) {
  Json trace = Json::array();
  for (const TraceRow& t : r.trace) trace.push_back(to_json(t));
  Json j{{"value", to_json(r.value)},
         {"error_estimate", r.error_estimate},
         {"status", to_string(r.status)},
         {"cells", r.cells},
         {"trace", std::move(trace)}};
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

inline Json to_json(const SeriesReport& s) {
  return Json{{"prefix", s.prefix},       {"terms", s.terms},
              {"value", to_json(s.value)}, {"abs_sum", s.abs_sum},
              {"abs_tail", s.abs_tail},   {"last_generation", s.last_generation},
              {"spread", s.spread},       {"error", s.error}};
}

inline Json to_json(const HakeRow& r) {
  return Json{{"box", r.I.to_string()},    {"division", r.division},  {"F", to_json(r.F_I)},
              {"series", to_json(r.series)}, {"residual", r.residual}, {"allowance", r.allowance},
              {"pass", r.pass}};
}

inline Json to_json(const HakeReport& h) {
  Json rows = Json::array();
  for (const HakeRow& r : h.rows) rows.push_back(to_json(r));
  Json j{{"verdict", to_string(h.verdict)}, {"max_relative_spread", h.max_relative_spread}, {"rows", std::move(rows)}};
  j["witness"] = h.witness ? to_json(*h.witness) : Json(nullptr);
  if (!h.note.empty()) j["note"] = h.note;
  return j;
}

inline Json to_json(const VariationEstimate& v) {
  Json scales = Json::array();
  for (const VariationScale& s : v.scales) {
    Json row{{"s", s.s},
             {"eps", s.eps},
             {"sup", s.sup},
             {"random_sup", s.random_sup},
             {"adversarial_sup", s.adversarial_sup},
             {"partitions", s.partitions}};
    if (!s.witness.empty()) row["witness"] = s.witness;
    scales.push_back(std::move(row));
  }
  Json j{{"verdict", to_string(v.verdict)}};
  j["lower_bound"] = v.lower_bound ? Json(*v.lower_bound) : Json(nullptr);
  j["scales"] = std::move(scales);
  if (!v.note.empty()) j["note"] = v.note;
  return j;
}

inline Json to_json(const DivisionSeries& s, std::size_t index) {
  Json j{{"division", index},
         {"origin", s.division->options().origin},
         {"value", to_json(s.value)},
         {"error", s.error},
         {"generations", s.trace.empty() ? 0 : s.trace.back().level},
         {"pieces", s.division->pieces().size()},
         {"cells", s.cells},
         {"converged", s.converged}};
  if (!s.note.empty()) j["note"] = s.note;
  return j;
}

inline Json to_json(const HakeResult& r) {
  Json series = Json::array();
  for (std::size_t d = 0; d < r.series.size(); ++d) series.push_back(to_json(r.series[d], d));
  Json j = to_json(r.integral);
  j["verdict"] = to_string(r.verdict);
  j["window"] = r.window.to_string();
  j["divisions"] = std::move(series);
  j["hake_report"] = to_json(r.hake);
  j["variation_estimate"] = to_json(r.variation);
  return j;
}

inline Json to_json(const ClauseRow& c) {
  return Json{{"clause", c.clause},        {"box", c.I.to_string()},   {"relation", c.relation},
              {"division", c.division},    {"lhs", to_json(c.lhs)},    {"rhs", to_json(c.rhs)},
              {"residual", c.residual},    {"budget", c.budget},       {"pass", c.pass}};
}

inline Json to_json(const EquivalenceReport& e) {
  auto rows = [](const std::vector<ClauseRow>& v) {
    Json a = Json::array();
    for (const ClauseRow& c : v) a.push_back(to_json(c));
    return a;
  };
  Json eq{{"h_integral", to_json(e.h_integral)},
          {"round_trip", e.round_trip},
          {"round_trip_pass", e.round_trip_pass},
          {"exhaustion", rows(e.exhaustion)},
          {"per_box_residuals", rows(e.series)},
          {"primitive", rows(e.primitive)}};
  eq["witness"] = e.witness ? to_json(*e.witness) : Json(nullptr);
  Json j = to_json(e.hake);
  j["verdict"] = to_string(e.verdict);
  if (!e.note.empty()) j["note"] = e.note;
  j["equivalence"] = std::move(eq);
  return j;
}

/// Copies every key of `from` into `into` (later keys win).
inline void merge(Json& into, const Json& from) {
  for (const auto& [k, v] : from.items()) into[k] = v;
}

/// Wraps a payload with the schema tag and the command that produced it.
inline Json envelope(const std::string& command, Json payload) {
  Json j{{"schema", kSchema}, {"command", command}};
  merge(j, payload);
  return j;
}

inline void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace) {
  os << "level,scale,cells";
  const std::size_t d = trace.empty() ? 1 : trace.front().sum.dim();
  for (std::size_t i = 0; i < d; ++i) os << ",sum" << i;
  os << "\n";
  os.precision(17);
  for (const TraceRow& r : trace) {
    os << r.level << "," << r.scale << "," << r.cells;
    for (std::size_t i = 0; i < r.sum.dim(); ++i) os << "," << r.sum[i];
    os << "\n";
  }
}

}  // namespace gauge_quad
