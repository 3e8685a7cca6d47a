#pragma once

#include "gauge_quad/region.hpp"

#include <boost/container/small_vector.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace gauge_quad {

/// The region's interior turned out to be empty (no cube can ever be certified).
class EmptyInteriorError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct DivisionOptions {
  int max_generation = 12;
  /// Merge same-generation cubes into longer boxes (fewer, non-cubic pieces).
  bool coalesce = false;
  /// Offset of the dyadic grid (empty = origin). Distinct offsets give
  /// structurally different divisions of the same set.
  std::vector<double> origin;
  /// Zero-progress generations tolerated before a diagnostic is recorded.
  int stall_generations = 8;
  /// Hard cap on frontier / per-generation cube counts.
  std::size_t max_cells = std::size_t{1} << 24;
};

/// A division piece: closed box with exact double endpoints, certified inside G°.
struct Piece {
  std::vector<double> lo;
  std::vector<double> hi;
  int generation = 0;
  std::int64_t cubes = 1;

  std::size_t dim() const { return lo.size(); }
  double measure() const {
    double v = 1.0;
    for (std::size_t j = 0; j < lo.size(); ++j) v *= hi[j] - lo[j];
    return v;
  }
  Box box() const {
    std::vector<Dyadic> l, h;
    for (std::size_t j = 0; j < lo.size(); ++j) {
      l.push_back(Dyadic::from_double(lo[j]));
      h.push_back(Dyadic::from_double(hi[j]));
    }
    return Box(std::move(l), std::move(h));
  }
};

struct GenerationStats {
  int generation = 0;
  std::size_t new_pieces = 0;
  std::int64_t new_cubes = 0;
  Dyadic prefix_measure;
  /// Upper bound on the part of G° (inside the opened window) not yet covered.
  double uncovered_bound = 0.0;
  std::size_t frontier = 0;
};

/// Lazy enumeration of maximal dyadic cubes inside G°.
///
/// The plane is cut into shells: W_0 = o + [-1,1]^m and, for w >= 1, the annulus
/// W_w \ W_{w-1} with W_w = o + [-2^w, 2^w]^m. A cube of side 2^-j in shell w has
/// generation j + 2w, so every generation is a finite set and the enumeration
/// still exhausts unbounded regions.
class Division {
 public:
  Division(Region region, DivisionOptions options)
      : region_(std::move(region)), opt_(std::move(options)), m_(region_.dim()) {
    if (opt_.max_generation < 0) throw std::invalid_argument("Division: negative max_generation");
    if (opt_.origin.empty()) opt_.origin.assign(m_, 0.0);
    if (opt_.origin.size() != m_) throw DimensionMismatch("Division: origin dimension mismatch");
    for (const double o : opt_.origin) {
      if (!std::isfinite(o) || std::abs(o) >= 1.0) {
        throw std::invalid_argument("Division: origin offsets must lie in (-1, 1)");
      }
      origin_bits_ = std::max(origin_bits_, fraction_bits(o));
    }
    if (origin_bits_ > 24) throw std::invalid_argument("Division: origin needs <= 24 fraction bits");
    breakpoints_ = region_.axis_breakpoints();
    if (region_.heuristic_certification()) {
      diagnostics_.push_back("cells certified heuristically (membership oracle without distance bound)");
    }
    extend_to(opt_.max_generation);
  }

  const Region& region() const { return region_; }
  const DivisionOptions& options() const { return opt_; }
  std::size_t dim() const { return m_; }
  const std::vector<Piece>& pieces() const { return pieces_; }
  const std::vector<GenerationStats>& stats() const { return stats_; }
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }
  int generation() const { return next_gen_ - 1; }
  /// True once G° is covered exactly (bounded box-like regions reach this).
  bool exhausted() const { return exhausted_; }

  /// Number of pieces with generation <= g.
  std::size_t prefix_size(int g) const {
    if (g < 0) return 0;
    if (g >= static_cast<int>(gen_end_.size())) return pieces_.size();
    return gen_end_[g];
  }

  /// Runs the sieve through generation g (no-op when already there).
  void extend_to(int g) {
    if (pruned_ && next_gen_ <= g) throw std::logic_error("Division: cannot extend a pruned division");
    while (next_gen_ <= g) step();
  }

  /// Keeps the pieces with keep[k] != 0 (order preserved) and freezes the sieve.
  /// The result is a finite sub-family of the division, e.g. a prefix graded by region.
  void retain(const std::vector<char>& keep) {
    if (keep.size() != pieces_.size()) throw std::invalid_argument("Division::retain: mask size mismatch");
    const std::size_t before = pieces_.size();
    std::vector<Piece> kept;
    std::vector<std::size_t> ends(gen_end_.size());
    std::size_t g = 0;
    for (std::size_t k = 0; k < pieces_.size(); ++k) {
      while (g < gen_end_.size() && k >= gen_end_[g]) ends[g++] = kept.size();
      if (keep[k]) kept.push_back(std::move(pieces_[k]));
    }
    while (g < gen_end_.size()) ends[g++] = kept.size();
    pieces_ = std::move(kept);
    gen_end_ = std::move(ends);
    if (pieces_.size() < before) exhausted_ = false;
    pruned_ = true;
  }
  bool pruned() const { return pruned_; }

 private:
  // A lattice box at level j in shell w: cubes with index k in [lo, hi) per axis,
  // cube k spans o + [k, k+1]·2^-j.
  using Coords = boost::container::small_vector<std::int64_t, 4>;
  struct Cell {
    Coords lo, hi;
    std::int64_t count() const {
      std::int64_t c = 1;
      for (std::size_t a = 0; a < lo.size(); ++a) c *= hi[a] - lo[a];
      return c;
    }
  };
  struct Shell {
    int w = 0;
    std::vector<Cell> frontier;
  };

  static int fraction_bits(double x) {
    int bits = 0;
    while (x != std::floor(x) && bits < 64) {
      x *= 2.0;
      ++bits;
    }
    return bits;
  }

  int level(int gen, int w) const { return gen - 2 * w; }
  double coord(int axis, std::int64_t k, int j) const {
    return opt_.origin[axis] + std::ldexp(static_cast<double>(k), -j);
  }

  void fill_bounds(const Cell& c, int j, std::vector<double>& lo, std::vector<double>& hi) const {
    for (std::size_t a = 0; a < m_; ++a) {
      lo[a] = coord(static_cast<int>(a), c.lo[a], j);
      hi[a] = coord(static_cast<int>(a), c.hi[a], j);
    }
  }

  // Shell w occupies W_w minus W_{w-1}; its root cubes have side 2^(w-1), i.e.
  // index range [-2, 2) per axis with [-1, 1)^m removed.
  std::vector<Cell> shell_roots(int w) const {
    std::vector<Cell> out;
    if (w == 0) {
      out.push_back(Cell{Coords(m_, -1), Coords(m_, 1)});
      return out;
    }
    for (std::size_t a = 0; a < m_; ++a) {
      for (const std::int64_t side : {-2, 1}) {
        Cell c{Coords(m_), Coords(m_)};
        for (std::size_t b = 0; b < m_; ++b) {
          if (b < a) {
            c.lo[b] = -1;
            c.hi[b] = 1;
          } else if (b == a) {
            c.lo[b] = side;
            c.hi[b] = side + 1;
          } else {
            c.lo[b] = -2;
            c.hi[b] = 2;
          }
        }
        out.push_back(std::move(c));
      }
    }
    return out;
  }

  bool shell_needed(int w) const {
    if (!region_.bounded()) return true;
    if (w == 0) return true;
    // Needed unless the bounding box already fits inside W_{w-1}.
    const Box& bb = *region_.bounding_box();
    const double r = std::ldexp(1.0, w - 1);
    for (std::size_t a = 0; a < m_; ++a) {
      if (bb.lo(a).to_double() < opt_.origin[a] - r || bb.hi(a).to_double() > opt_.origin[a] + r) {
        return true;
      }
    }
    return false;
  }

  std::vector<Cell> expand(const Cell& c) const {
    std::vector<Cell> out;
    Coords k = c.lo;
    while (true) {
      Cell u{k, k};
      for (auto& x : u.hi) ++x;
      out.push_back(std::move(u));
      std::size_t a = 0;
      while (a < m_) {
        if (++k[a] < c.hi[a]) break;
        k[a] = c.lo[a];
        ++a;
      }
      if (a == m_) break;
    }
    return out;
  }

  // Splits a lattice box at the cubes that touch region breakpoints so that every
  // part classifies uniformly; classifies each part.
  void resolve(const Cell& c, int j, std::vector<Cell>& inside, std::vector<Cell>& straddle) const {
    std::vector<double> lo(m_), hi(m_);
    if (!breakpoints_) {
      for (const Cell& u : expand(c)) {
        fill_bounds(u, j, lo, hi);
        const CellClass k = region_.classify(lo.data(), hi.data());
        if (k == CellClass::Inside) inside.push_back(u);
        if (k == CellClass::Straddle) straddle.push_back(u);
      }
      return;
    }
    std::vector<std::vector<std::pair<std::int64_t, std::int64_t>>> segs(m_);
    for (std::size_t a = 0; a < m_; ++a) {
      std::vector<std::int64_t> special;
      for (const double b : (*breakpoints_)[a]) {
        const double u = std::ldexp(b - opt_.origin[a], j);
        if (u < static_cast<double>(c.lo[a]) - 1.0 || u > static_cast<double>(c.hi[a]) + 1.0) continue;
        const auto f = static_cast<std::int64_t>(std::floor(u));
        if (static_cast<double>(f) == u) special.push_back(f - 1);
        special.push_back(f);
      }
      std::sort(special.begin(), special.end());
      special.erase(std::unique(special.begin(), special.end()), special.end());
      std::int64_t cur = c.lo[a];
      for (const std::int64_t s : special) {
        if (s < c.lo[a] || s >= c.hi[a]) continue;
        if (cur < s) segs[a].emplace_back(cur, s);
        segs[a].emplace_back(s, s + 1);
        cur = s + 1;
      }
      if (cur < c.hi[a]) segs[a].emplace_back(cur, c.hi[a]);
    }
    std::vector<std::size_t> idx(m_, 0);
    while (true) {
      Cell part{Coords(m_), Coords(m_)};
      for (std::size_t a = 0; a < m_; ++a) {
        part.lo[a] = segs[a][idx[a]].first;
        part.hi[a] = segs[a][idx[a]].second;
      }
      fill_bounds(part, j, lo, hi);
      const CellClass k = region_.classify(lo.data(), hi.data());
      if (k == CellClass::Inside) inside.push_back(std::move(part));
      if (k == CellClass::Straddle) straddle.push_back(std::move(part));
      std::size_t a = 0;
      while (a < m_) {
        if (++idx[a] < segs[a].size()) break;
        idx[a] = 0;
        ++a;
      }
      if (a == m_) break;
    }
  }

  // Merges abutting lattice boxes axis by axis.
  void coalesce(std::vector<Cell>& cells) const {
    for (std::size_t a = 0; a < m_; ++a) {
      auto key_less = [&](const Cell& x, const Cell& y) {
        for (std::size_t b = 0; b < m_; ++b) {
          if (b == a) continue;
          if (x.lo[b] != y.lo[b]) return x.lo[b] < y.lo[b];
          if (x.hi[b] != y.hi[b]) return x.hi[b] < y.hi[b];
        }
        return x.lo[a] < y.lo[a];
      };
      std::sort(cells.begin(), cells.end(), key_less);
      std::vector<Cell> merged;
      for (auto& c : cells) {
        if (!merged.empty()) {
          Cell& last = merged.back();
          bool same = last.hi[a] == c.lo[a];
          for (std::size_t b = 0; b < m_ && same; ++b) {
            if (b != a) same = last.lo[b] == c.lo[b] && last.hi[b] == c.hi[b];
          }
          if (same) {
            last.hi[a] = c.hi[a];
            continue;
          }
        }
        merged.push_back(std::move(c));
      }
      cells = std::move(merged);
    }
  }

  double clipped_measure(const std::vector<double>& lo, const std::vector<double>& hi) const {
    double v = 1.0;
    const auto& bb = region_.bounding_box();
    for (std::size_t a = 0; a < m_; ++a) {
      double l = lo[a];
      double h = hi[a];
      if (bb) {
        l = std::max(l, bb->lo(a).to_double());
        h = std::min(h, bb->hi(a).to_double());
      }
      if (h <= l) return 0.0;
      v *= h - l;
    }
    return v;
  }

  void check_precision(int gen) const {
    for (const Shell& s : shells_) {
      const int j = level(gen, s.w);
      if ((s.w + 1) + std::max(j, origin_bits_) > 52) {
        throw std::overflow_error("Division: generation " + std::to_string(gen) +
                                  " exceeds the double-exact lattice range");
      }
    }
  }

  void step() {
    const int n = next_gen_;
    // Open the shell whose roots live at this generation.
    const int w_new = n == 0 ? 0 : (n >= 2 ? n - 1 : -1);
    if (w_new >= 0 && shell_needed(w_new)) shells_.push_back(Shell{w_new, {}});
    check_precision(n);

    std::vector<double> lo(m_), hi(m_);
    std::vector<Piece> fresh;
    std::int64_t fresh_cubes = 0;
    std::size_t frontier_total = 0;
    double frontier_measure = 0.0;

    for (Shell& s : shells_) {
      const int j = level(n, s.w);
      std::vector<Cell> candidates;
      if (s.w == w_new) {
        for (Cell& c : shell_roots(s.w)) {
          if (breakpoints_) {
            candidates.push_back(std::move(c));
          } else {
            for (Cell& u : expand(c)) candidates.push_back(std::move(u));
          }
        }
      } else {
        candidates.reserve(breakpoints_ ? s.frontier.size() : s.frontier.size() << m_);
        for (const Cell& c : s.frontier) {
          Cell d = c;
          for (std::size_t a = 0; a < m_; ++a) {
            d.lo[a] *= 2;
            d.hi[a] *= 2;
          }
          if (breakpoints_) {
            candidates.push_back(std::move(d));
          } else {
            for (Cell& u : expand(d)) candidates.push_back(std::move(u));
          }
        }
      }
      if (candidates.size() > opt_.max_cells) {
        throw std::length_error("Division: frontier exceeds " + std::to_string(opt_.max_cells) +
                                " cells at generation " + std::to_string(n));
      }
      std::vector<Cell> inside;
      std::vector<Cell> straddle;
      for (const Cell& c : candidates) resolve(c, j, inside, straddle);
      s.frontier = std::move(straddle);
      frontier_total += s.frontier.size();
      for (const Cell& c : s.frontier) {
        fill_bounds(c, j, lo, hi);
        frontier_measure += clipped_measure(lo, hi);
      }

      for (const Cell& c : inside) fresh_cubes += c.count();
      if (opt_.coalesce) {
        coalesce(inside);
      } else if (breakpoints_) {
        std::vector<Cell> cubes;
        for (const Cell& c : inside) {
          if (cubes.size() + static_cast<std::size_t>(c.count()) > opt_.max_cells) {
            throw std::length_error("Division: generation " + std::to_string(n) +
                                    " has too many cubes; enable coalescing");
          }
          for (Cell& u : expand(c)) cubes.push_back(std::move(u));
        }
        inside = std::move(cubes);
      }
      for (const Cell& c : inside) {
        Piece p;
        p.lo.resize(m_);
        p.hi.resize(m_);
        fill_bounds(c, j, p.lo, p.hi);
        p.generation = n;
        p.cubes = c.count();
        fresh.push_back(std::move(p));
      }
      // Cubes of this generation all have side 2^-j: count them exactly.
      if (!inside.empty()) {
        std::int64_t cubes = 0;
        for (const Cell& c : inside) cubes += c.count();
        prefix_measure_ += Dyadic(BigInt(cubes), -static_cast<std::int64_t>(m_) * j);
      }
    }

    std::sort(fresh.begin(), fresh.end(), [](const Piece& a, const Piece& b) {
      if (a.lo != b.lo) return a.lo < b.lo;
      return a.hi < b.hi;
    });
    for (Piece& p : fresh) pieces_.push_back(std::move(p));
    gen_end_.push_back(pieces_.size());

    // Part of the bounding box no shell has reached yet.
    double unopened = 0.0;
    if (region_.bounded()) {
      const Box& bb = *region_.bounding_box();
      double total = 1.0;
      double in_window = 1.0;
      const int w_max = shells_.empty() ? 0 : shells_.back().w;
      const double r = std::ldexp(1.0, w_max);
      for (std::size_t a = 0; a < m_; ++a) {
        const double l = bb.lo(a).to_double();
        const double h = bb.hi(a).to_double();
        total *= h - l;
        in_window *= std::max(0.0, std::min(h, opt_.origin[a] + r) - std::max(l, opt_.origin[a] - r));
      }
      unopened = total - in_window;
    }

    GenerationStats st;
    st.generation = n;
    st.new_pieces = fresh.size();
    st.new_cubes = fresh_cubes;
    st.prefix_measure = prefix_measure_;
    st.uncovered_bound = frontier_measure + unopened;
    st.frontier = frontier_total;
    stats_.push_back(st);

    exhausted_ = region_.bounded() && frontier_total == 0 && unopened == 0.0;
    if (fresh_cubes == 0 && frontier_total > 0) {
      ++stalled_;
      if (stalled_ == opt_.stall_generations) {
        diagnostics_.push_back("no cube certified for " + std::to_string(stalled_) +
                               " consecutive generations (through " + std::to_string(n) +
                               "); frontier " + std::to_string(frontier_total) + " cells");
      }
    } else {
      stalled_ = 0;
    }
    if (pieces_.empty() && frontier_total == 0 && region_.bounded() && unopened == 0.0) {
      throw EmptyInteriorError("Division: region '" + region_.description() +
                               "' has empty interior");
    }
    ++next_gen_;
  }

  Region region_;
  DivisionOptions opt_;
  std::size_t m_;
  int origin_bits_ = 0;
  std::optional<std::vector<std::vector<double>>> breakpoints_;
  std::vector<Shell> shells_;
  std::vector<Piece> pieces_;
  std::vector<std::size_t> gen_end_;
  std::vector<GenerationStats> stats_;
  std::vector<std::string> diagnostics_;
  Dyadic prefix_measure_;
  int next_gen_ = 0;
  int stalled_ = 0;
  bool exhausted_ = false;
  bool pruned_ = false;
};

inline Division make_division(const Region& r, int max_generation, DivisionOptions options = {}) {
  options.max_generation = max_generation;
  return Division(r, std::move(options));
}

/// CSV rows: generation, lo_1..lo_m, hi_1..hi_m, measure.
inline void write_division_csv(std::ostream& os, const Division& d) {
  const std::size_t m = d.dim();
  os << "generation";
  for (std::size_t j = 0; j < m; ++j) os << ",lo" << j + 1;
  for (std::size_t j = 0; j < m; ++j) os << ",hi" << j + 1;
  os << ",measure\n";
  const auto prec = os.precision(17);
  for (const Piece& p : d.pieces()) {
    os << p.generation;
    for (const double x : p.lo) os << ',' << x;
    for (const double x : p.hi) os << ',' << x;
    os << ',' << p.measure() << '\n';
  }
  os.precision(prec);
}

}  // namespace gauge_quad
