#pragma once

// Inaccessibility measure field.
//
// For a stationary obstacle O and a tool T with allowed rotations and sharp
// points, the field at x is the smallest fraction of the tool volume that
// collides with O over every placement that brings a sharp point to x:
//
//   gamma(x) = min_R min_k |O ∩ (R T + x - R k)| / |R T|
//
// The overlap for all translations at once is a cross-correlation of the
// obstacle with the rotated tool, evaluated by FFT. Minimizing over tools and
// over fixture-specific obstacles gives the field for a whole machine setup.

#include <cstdint>
#include <utility>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "nearnet/correlate.hpp"
#include "nearnet/machine.hpp"
#include "nearnet/parallel.hpp"

namespace nearnet {

/// A tool body rotated about its registration origin.
struct OrientedTool {
  IndicatorGrid body;
  std::int64_t cells = 0;
  /// Rotated sharp points, rounded to whole cells in the tool frame.
  std::vector<Index3> sharp_offsets;
};

inline OrientedTool orient_tool(const ToolAssembly& t, const Rotation& r) {
  OrientedTool o;
  o.body = rotate_about(t.body(), r, Vec3{});
  o.cells = static_cast<std::int64_t>(o.body.count());
  if (o.cells == 0) throw InvalidInput("tool '" + t.name + "' vanishes under rotation");
  const double h = t.cutter.lattice().spacing;
  for (const Index3& k : t.sharp_points) {
    const Vec3 p = (1.0 / h) * r.apply(t.cutter.lattice().center(k));
    o.sharp_offsets.push_back({std::llround(p.x), std::llround(p.y), std::llround(p.z)});
  }
  return o;
}

/// One (fixture, tool, rotation) triple of the setup sweep.
struct Combination {
  std::size_t fixture = 0;
  std::size_t tool = 0;
  std::size_t rotation = 0;
};

/// min over sharp points of the normalized overlap, on the obstacle lattice.
/// Translations that fall off the correlation lattice count as full collision.
/// `argk` (optional) receives the minimizing sharp-point index per cell.
inline void sharp_point_min(const CountField& counts, const Lattice& domain, const OrientedTool& tool,
                            std::vector<double>& gamma, std::vector<std::int32_t>* argk) {
  const Lattice& cl = counts.lattice();
  Index3 base{};
  for (int a = 0; a < 3; ++a) base[a] = std::llround((domain.origin[a] - cl.origin[a]) / domain.spacing);
  gamma.assign(domain.size(), std::numeric_limits<double>::infinity());
  if (argk) argk->assign(domain.size(), 0);
  const double inv_cells = 1.0 / static_cast<double>(tool.cells);

  for (std::size_t ki = 0; ki < tool.sharp_offsets.size(); ++ki) {
    const Index3 shift = base - tool.sharp_offsets[ki];
    for (std::int64_t z = 0; z < domain.dims[2]; ++z) {
      const std::int64_t mz = z + shift[2];
      for (std::int64_t y = 0; y < domain.dims[1]; ++y) {
        const std::int64_t my = y + shift[1];
        const bool row_in = mz >= 0 && mz < cl.dims[2] && my >= 0 && my < cl.dims[1];
        std::size_t lin = domain.linear({0, y, z});
        for (std::int64_t x = 0; x < domain.dims[0]; ++x, ++lin) {
          const std::int64_t mx = x + shift[0];
          double v = 1.0;
          if (row_in && mx >= 0 && mx < cl.dims[0])
            v = static_cast<double>(counts[static_cast<std::size_t>(mx + cl.dims[0] * (my + cl.dims[1] * mz))]) * inv_cells;
          if (v < gamma[lin]) {
            gamma[lin] = v;
            if (argk) (*argk)[lin] = static_cast<std::int32_t>(ki);
          }
        }
      }
    }
  }
}

/// Computes the per-combination field for every (obstacle j, tool i,
/// rotation r) and hands it to fn(worker, combination, gamma, argk). Calls run
/// concurrently on up to `workers` threads; `gamma` lives on the lattice of
/// the obstacles, which must all share one lattice.
template <typename Fn>
void for_each_combination(std::span<const IndicatorGrid> obstacles, std::span<const ToolAssembly> tools, unsigned workers,
                          bool want_argk, Fn&& fn) {
  if (obstacles.empty()) throw InvalidInput("imf: no obstacles");
  if (tools.empty()) throw InvalidInput("imf: no tools");
  const Lattice& domain = obstacles.front().lattice();
  for (const auto& o : obstacles)
    if (!(o.lattice() == domain)) throw LatticeMismatch("imf: obstacles must share one lattice");
  for (const auto& t : tools) {
    t.validate();
    if (std::abs(t.cutter.lattice().spacing - domain.spacing) > 1e-12 * domain.spacing)
      throw LatticeMismatch("imf: tool '" + t.name + "' spacing differs from the obstacle");
  }

  std::vector<std::pair<std::size_t, std::size_t>> tool_rotations;
  std::vector<std::size_t> first_oriented(tools.size());
  for (std::size_t i = 0; i < tools.size(); ++i) {
    first_oriented[i] = tool_rotations.size();
    for (std::size_t r = 0; r < tools[i].rotations.size(); ++r) tool_rotations.emplace_back(i, r);
  }
  std::vector<OrientedTool> oriented(tool_rotations.size());
  parallel_for(tool_rotations.size(), workers, [&](unsigned, std::size_t n) {
    const auto [i, r] = tool_rotations[n];
    oriented[n] = orient_tool(tools[i], tools[i].rotations[r]);
  });

  Index3 max_probe{1, 1, 1};
  for (const auto& o : oriented)
    for (int a = 0; a < 3; ++a) max_probe[a] = std::max(max_probe[a], o.body.lattice().dims[a]);

  std::vector<std::unique_ptr<Correlator>> correlators(obstacles.size());
  parallel_for(obstacles.size(), workers, [&](unsigned, std::size_t j) {
    correlators[j] = std::make_unique<Correlator>(obstacles[j], max_probe);
  });

  std::vector<Combination> combos;
  for (std::size_t j = 0; j < obstacles.size(); ++j)
    for (std::size_t n = 0; n < tool_rotations.size(); ++n)
      combos.push_back({j, tool_rotations[n].first, tool_rotations[n].second});

  parallel_for(combos.size(), workers, [&](unsigned worker, std::size_t c) {
    const Combination& combo = combos[c];
    const OrientedTool& ot = oriented[first_oriented[combo.tool] + combo.rotation];
    const CountField counts = correlators[combo.fixture]->counts(ot.body);
    std::vector<double> gamma;
    std::vector<std::int32_t> argk;
    sharp_point_min(counts, domain, ot, gamma, want_argk ? &argk : nullptr);
    fn(worker, combo, std::as_const(gamma), std::as_const(argk));
  });
}

/// Setup-wide minimizer of the field at one cell.
struct ArgminRecord {
  std::int32_t fixture = 0;
  std::int32_t tool = 0;
  std::int32_t rotation = 0;
  std::int32_t sharp_point = 0;
  friend bool operator==(const ArgminRecord&, const ArgminRecord&) = default;
};

struct ImfOptions {
  bool keep_per_fixture = false;
  bool keep_argmin = false;
  unsigned workers = 0;
};

struct ImfResult {
  ScalarField field;
  std::vector<ScalarField> per_fixture;  // only with keep_per_fixture
  std::vector<ArgminRecord> argmin;      // only with keep_argmin, one per cell
};

/// Cellwise min over all combinations, with ties in the argmin broken by the
/// smallest (fixture, tool, rotation, sharp point) tuple. The result does not
/// depend on the worker count or completion order.
inline ImfResult imf_min_over(std::span<const IndicatorGrid> obstacles, std::span<const ToolAssembly> tools,
                              const ImfOptions& opt) {
  const Lattice& domain = obstacles.front().lattice();
  const std::size_t n = domain.size();
  const unsigned workers = resolve_workers(opt.workers);

  std::size_t max_rot = 1, max_k = 1;
  for (const auto& t : tools) {
    max_rot = std::max(max_rot, t.rotations.size());
    max_k = std::max(max_k, t.sharp_points.size());
  }
  const auto pack = [&](const Combination& c, std::int32_t k) -> std::uint64_t {
    return ((static_cast<std::uint64_t>(c.fixture) * tools.size() + c.tool) * max_rot + c.rotation) * max_k +
           static_cast<std::uint64_t>(k);
  };

  struct Partial {
    std::vector<double> value;
    std::vector<std::uint64_t> key;
    std::vector<std::vector<double>> per_fixture;
  };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<Partial> partial(workers);
  for (auto& p : partial) {
    p.value.assign(n, inf);
    if (opt.keep_argmin) p.key.assign(n, std::numeric_limits<std::uint64_t>::max());
    if (opt.keep_per_fixture) p.per_fixture.assign(obstacles.size(), std::vector<double>(n, inf));
  }

  for_each_combination(obstacles, tools, workers, opt.keep_argmin,
                       [&](unsigned w, const Combination& c, const std::vector<double>& gamma,
                           const std::vector<std::int32_t>& argk) {
                         Partial& p = partial[w];
                         for (std::size_t x = 0; x < n; ++x) {
                           if (opt.keep_argmin) {
                             const std::uint64_t key = pack(c, argk[x]);
                             if (gamma[x] < p.value[x] || (gamma[x] == p.value[x] && key < p.key[x])) {
                               p.value[x] = gamma[x];
                               p.key[x] = key;
                             }
                           } else if (gamma[x] < p.value[x]) {
                             p.value[x] = gamma[x];
                           }
                           if (opt.keep_per_fixture) {
                             double& f = p.per_fixture[c.fixture][x];
                             if (gamma[x] < f) f = gamma[x];
                           }
                         }
                       });

  ImfResult out{ScalarField(domain, inf), {}, {}};
  std::vector<std::uint64_t> best_key(opt.keep_argmin ? n : 0, std::numeric_limits<std::uint64_t>::max());
  if (opt.keep_per_fixture) out.per_fixture.assign(obstacles.size(), ScalarField(domain, inf));
  for (const Partial& p : partial) {
    for (std::size_t x = 0; x < n; ++x) {
      if (opt.keep_argmin) {
        if (p.value[x] < out.field[x] || (p.value[x] == out.field[x] && p.key[x] < best_key[x])) {
          out.field[x] = p.value[x];
          best_key[x] = p.key[x];
        }
      } else if (p.value[x] < out.field[x]) {
        out.field[x] = p.value[x];
      }
    }
    if (opt.keep_per_fixture)
      for (std::size_t j = 0; j < obstacles.size(); ++j)
        for (std::size_t x = 0; x < n; ++x) out.per_fixture[j][x] = std::min(out.per_fixture[j][x], p.per_fixture[j][x]);
  }
  if (opt.keep_argmin) {
    out.argmin.resize(n);
    for (std::size_t x = 0; x < n; ++x) {
      std::uint64_t key = best_key[x];
      ArgminRecord& rec = out.argmin[x];
      rec.sharp_point = static_cast<std::int32_t>(key % max_k);
      key /= max_k;
      rec.rotation = static_cast<std::int32_t>(key % max_rot);
      key /= max_rot;
      rec.tool = static_cast<std::int32_t>(key % tools.size());
      rec.fixture = static_cast<std::int32_t>(key / tools.size());
    }
  }
  return out;
}

/// Field of a single tool against one obstacle.
inline ScalarField imf_single_tool(const IndicatorGrid& obstacle, const ToolAssembly& tool, unsigned workers = 0) {
  return imf_min_over(std::span(&obstacle, 1), std::span(&tool, 1), {false, false, workers}).field;
}

/// Cellwise min over several tools against one obstacle.
inline ScalarField imf_tools(const IndicatorGrid& obstacle, std::span<const ToolAssembly> tools, unsigned workers = 0) {
  if (tools.empty()) throw InvalidInput("imf: no tools");
  return imf_min_over(std::span(&obstacle, 1), tools, {false, false, workers}).field;
}

/// Obstacle of fixture configuration j: part ∪ F_j ∪ platform.
inline std::vector<IndicatorGrid> setup_obstacles(const IndicatorGrid& part, const MachineSetup& setup) {
  setup.validate();
  if (!(part.lattice() == setup.domain())) throw LatticeMismatch("imf: part is not on the setup's domain lattice");
  std::vector<IndicatorGrid> out;
  const IndicatorGrid base = unite(part, setup.platform);
  for (const auto& f : setup.fixtures) out.push_back(unite(base, f.body));
  return out;
}

/// Field for a whole setup: min over fixtures, tools, rotations and sharp points.
inline ImfResult imf_setup(const IndicatorGrid& part, const MachineSetup& setup, const ImfOptions& opt = {}) {
  const auto obstacles = setup_obstacles(part, setup);
  return imf_min_over(obstacles, setup.tools, opt);
}

/// Reference evaluation by explicit placement: for each query cell, place the
/// rotated tool with every sharp point on the cell and count intersecting
/// obstacle cells. Meant for small instances.
inline std::vector<double> imf_oracle(const IndicatorGrid& obstacle, const ToolAssembly& tool,
                                      std::span<const Index3> queries) {
  tool.validate();
  const Lattice& ol = obstacle.lattice();
  const double h = ol.spacing;
  std::vector<OrientedTool> oriented;
  for (const auto& r : tool.rotations) oriented.push_back(orient_tool(tool, r));

  std::vector<double> out;
  out.reserve(queries.size());
  for (const Index3& q : queries) {
    const Vec3 x = ol.center(q);
    double best = std::numeric_limits<double>::infinity();
    for (const OrientedTool& ot : oriented) {
      const auto body_cells = ot.body.set_cells();
      const Lattice& bl = ot.body.lattice();
      for (const Index3& s : ot.sharp_offsets) {
        const Vec3 t = x - h * Vec3{static_cast<double>(s[0]), static_cast<double>(s[1]), static_cast<double>(s[2])};
        std::int64_t overlap = 0;
        for (std::size_t lin : body_cells) {
          const Vec3 p = (1.0 / h) * (bl.center(bl.cell(lin)) + t - ol.origin);
          const Index3 c{std::llround(p.x), std::llround(p.y), std::llround(p.z)};
          if (obstacle.get_or_empty(c)) ++overlap;
        }
        best = std::min(best, static_cast<double>(overlap) / static_cast<double>(ot.cells));
      }
    }
    out.push_back(best);
  }
  return out;
}

struct SupportSplit {
  IndicatorGrid accessible;  // field <= lambda
  IndicatorGrid secluded;    // field > lambda
};

inline SupportSplit split_support(const IndicatorGrid& support, const ScalarField& field, double lambda) {
  if (!(support.lattice() == field.lattice())) throw LatticeMismatch("split_support: support and field lattices differ");
  return {intersect(support, threshold(field, lambda, ThresholdMode::leq)),
          intersect(support, threshold(field, lambda, ThresholdMode::greater))};
}

}  // namespace nearnet
